//! The `convo` command line: live sessions, corpus evaluation and config
//! validation.
//!
//! Exit codes: 0 ok, 1 runtime failure, 2 configuration error.

use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::time::{Duration, Instant};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::assets;
use crate::metrics::emit_report;
use crate::nlu::{write_log, GrammarError, HttpBackendConfig, IntentGrammar, InteractionLog};
use crate::rem::{ConfigError, LocationRegistry, MotionPatternTable, TwistLimits};
use crate::session::{
    read_corpus, run_eval, BackendChoice, CorpusError, LiveOptions, LiveSession, Scenario, SessionOptions,
};
use crate::world_sim::{load_world, parse_world, WorldError, WorldModel};

#[derive(Debug, Parser)]
#[command(name = "convo", version, about = "Conversational control of a simulated robot")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the simulator, all nodes and the chat bridge until interrupted.
    Run {
        #[command(flatten)]
        config: ConfigArgs,
        /// Bridge port.
        #[arg(long, default_value_t = 9090)]
        port: u16,
        /// Address the bridge binds to.
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
        /// Stop after this many seconds instead of waiting for Ctrl-C.
        #[arg(long)]
        duration: Option<f64>,
    },
    /// Feed a labeled corpus through the pipeline headlessly and report metrics.
    Eval {
        #[command(flatten)]
        config: ConfigArgs,
        /// JSON-lines corpus of {text, true_label, goal?}.
        #[arg(long)]
        corpus: PathBuf,
        /// Write the metrics report JSON here as well as to stdout.
        #[arg(long)]
        report: Option<PathBuf>,
        /// Write the confusion matrix as CSV.
        #[arg(long)]
        csv: Option<PathBuf>,
        /// Simulated delay between sending a line and the node handling it, seconds.
        #[arg(long, default_value_t = 0.0)]
        pipeline_delay: f64,
    },
    /// Check every configuration file and list all violations.
    Validate {
        #[command(flatten)]
        config: ConfigArgs,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BackendKind {
    Rule,
    Http,
}

/// Scenario files and runtime settings shared by every subcommand. Files
/// not given fall back to the shipped office configuration.
#[derive(Debug, Clone, Args)]
pub struct ConfigArgs {
    /// World file (TOML occupancy grid, rooms, objects, robot start).
    #[arg(long)]
    pub world: Option<PathBuf>,
    /// Command grammar (TOML).
    #[arg(long)]
    pub grammar: Option<PathBuf>,
    /// Named navigation targets (TOML).
    #[arg(long)]
    pub locations: Option<PathBuf>,
    /// Motion patterns (TOML).
    #[arg(long)]
    pub patterns: Option<PathBuf>,
    /// Language backend: offline keyword rules, or a completion endpoint.
    #[arg(long, value_enum, default_value_t = BackendKind::Rule)]
    pub backend: BackendKind,
    /// Completion endpoint for the http backend.
    #[arg(long)]
    pub endpoint: Option<String>,
    /// Perception noise: standard deviation added to image embeddings.
    #[arg(long, default_value_t = 0.0)]
    pub noise_sigma: f64,
    /// Simulation and control loop rate, Hz.
    #[arg(long, default_value_t = 20.0)]
    pub rate: f64,
    /// Interaction log (JSON lines).
    #[arg(long)]
    pub log: Option<PathBuf>,
    /// Seed for sensor and perception noise.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Runtime(_) => 1,
            CliError::Config(_) => 2,
        }
    }
}

fn config_err(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Config(format!("{}: {e}", path.display()))
}

fn runtime(e: impl std::fmt::Display) -> CliError {
    CliError::Runtime(e.to_string())
}

fn load_world_arg(path: Option<&Path>) -> Result<WorldModel, WorldError> {
    match path {
        Some(p) => load_world(p),
        None => parse_world(assets::OFFICE_WORLD),
    }
}

fn load_grammar_arg(path: Option<&Path>) -> Result<IntentGrammar, GrammarError> {
    match path {
        Some(p) => IntentGrammar::load(p),
        None => IntentGrammar::parse(assets::GRAMMAR),
    }
}

fn load_locations_arg(path: Option<&Path>) -> Result<LocationRegistry, ConfigError> {
    match path {
        Some(p) => LocationRegistry::load(p),
        None => LocationRegistry::parse(assets::OFFICE_LOCATIONS),
    }
}

fn load_patterns_arg(path: Option<&Path>) -> Result<MotionPatternTable, ConfigError> {
    match path {
        Some(p) => MotionPatternTable::load(p, &TwistLimits::default()),
        None => MotionPatternTable::parse(assets::PATTERNS, &TwistLimits::default()),
    }
}

fn shown(path: Option<&Path>, shipped: &str) -> PathBuf {
    path.map_or_else(|| PathBuf::from(format!("<shipped {shipped}>")), Path::to_path_buf)
}

impl ConfigArgs {
    /// Load and validate every file into a scenario.
    pub fn scenario(&self) -> Result<Scenario, CliError> {
        if !(self.rate > 0.0 && self.rate.is_finite()) {
            return Err(CliError::Config(format!("--rate must be positive, got {}", self.rate)));
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return Err(CliError::Config(format!(
                "--noise-sigma must be >= 0, got {}",
                self.noise_sigma
            )));
        }
        let world =
            load_world_arg(self.world.as_deref()).map_err(|e| config_err(&shown(self.world.as_deref(), "world"), e))?;
        let grammar = load_grammar_arg(self.grammar.as_deref())
            .map_err(|e| config_err(&shown(self.grammar.as_deref(), "grammar"), e))?;
        let locations = load_locations_arg(self.locations.as_deref())
            .map_err(|e| config_err(&shown(self.locations.as_deref(), "locations"), e))?;
        let patterns = load_patterns_arg(self.patterns.as_deref())
            .map_err(|e| config_err(&shown(self.patterns.as_deref(), "patterns"), e))?;
        let backend = match (self.backend, &self.endpoint) {
            (BackendKind::Rule, _) => BackendChoice::Rule,
            (BackendKind::Http, Some(url)) => BackendChoice::Http(HttpBackendConfig::new(url)),
            (BackendKind::Http, None) => {
                return Err(CliError::Config("--backend http requires --endpoint".into()));
            }
        };
        Ok(Scenario::new(world, grammar, locations, patterns).with_backend(backend))
    }
}

/// Every problem across the configuration files, each prefixed with its file.
pub fn validate(config: &ConfigArgs) -> Vec<String> {
    fn lines(path: PathBuf, e: impl std::fmt::Display, list: Vec<String>) -> Vec<String> {
        if list.is_empty() {
            vec![format!("{}: {e}", path.display())]
        } else {
            list.into_iter().map(|v| format!("{}: {v}", path.display())).collect()
        }
    }
    let mut out = Vec::new();
    let world_path = shown(config.world.as_deref(), "world");
    let world = match load_world_arg(config.world.as_deref()) {
        Ok(w) => Some(w),
        Err(e) => {
            let list = match &e {
                WorldError::Invalid(v) => v.iter().map(ToString::to_string).collect(),
                _ => Vec::new(),
            };
            out.extend(lines(world_path, &e, list));
            None
        }
    };
    if let Err(e) = load_grammar_arg(config.grammar.as_deref()) {
        let list = match &e {
            GrammarError::Invalid(v) => v.iter().map(ToString::to_string).collect(),
            _ => Vec::new(),
        };
        out.extend(lines(shown(config.grammar.as_deref(), "grammar"), &e, list));
    }
    let loc_path = shown(config.locations.as_deref(), "locations");
    match load_locations_arg(config.locations.as_deref()) {
        Ok(reg) => {
            if let Some(w) = &world {
                for l in &reg.locations {
                    if !w.grid.is_free_at(l.x, l.y) {
                        out.push(format!(
                            "{}: location '{}' at ({}, {}) is not on a free cell of the world",
                            loc_path.display(),
                            l.label,
                            l.x,
                            l.y
                        ));
                    }
                }
            }
        }
        Err(e) => {
            let list = match &e {
                ConfigError::Invalid { violations, .. } => violations.clone(),
                _ => Vec::new(),
            };
            out.extend(lines(loc_path, &e, list));
        }
    }
    if let Err(e) = load_patterns_arg(config.patterns.as_deref()) {
        let list = match &e {
            ConfigError::Invalid { violations, .. } => violations.clone(),
            _ => Vec::new(),
        };
        out.extend(lines(shown(config.patterns.as_deref(), "patterns"), &e, list));
    }
    if config.backend == BackendKind::Http && config.endpoint.is_none() {
        out.push("--backend http requires --endpoint".into());
    }
    out
}

fn cmd_run(config: &ConfigArgs, host: &str, port: u16, duration: Option<f64>) -> Result<(), CliError> {
    let scenario = config.scenario()?;
    let opts = LiveOptions {
        rate_hz: config.rate,
        perception_sigma: config.noise_sigma,
        seed: config.seed,
        bridge: Some(format!("{host}:{port}")),
        log_path: config.log.clone(),
        ..Default::default()
    };
    let session = LiveSession::start(&scenario, opts).map_err(runtime)?;
    if let Some(addr) = session.bridge_addr() {
        println!("bridge listening on ws://{addr} (map: http://{addr}/map)");
    }
    let interrupted = Arc::new(AtomicBool::new(false));
    {
        let flag = interrupted.clone();
        ctrlc::set_handler(move || flag.store(true, Ordering::SeqCst)).map_err(runtime)?;
    }
    let started = Instant::now();
    while !interrupted.load(Ordering::SeqCst) && duration.is_none_or(|d| started.elapsed().as_secs_f64() < d) {
        std::thread::sleep(Duration::from_millis(20));
    }
    let summary = session.shutdown().map_err(runtime)?;
    let p = summary.final_pose;
    println!(
        "stopped: {} interactions logged, final pose ({:.2}, {:.2}, {:.2}), last cmd_vel zero: {}",
        summary.records.len(),
        p.x,
        p.y,
        p.theta,
        summary.last_twist.is_none_or(|t| t.is_zero())
    );
    Ok(())
}

fn cmd_eval(
    config: &ConfigArgs,
    corpus: &Path,
    report: Option<&Path>,
    csv: Option<&Path>,
    pipeline_delay: f64,
) -> Result<(), CliError> {
    let scenario = config.scenario()?;
    let corpus = read_corpus(corpus).map_err(|e| match e {
        CorpusError::Io { .. } => CliError::Config(e.to_string()),
        CorpusError::Line { .. } => config_err(corpus, e),
    })?;
    if !(pipeline_delay >= 0.0 && pipeline_delay.is_finite()) {
        return Err(CliError::Config(format!(
            "--pipeline-delay must be >= 0, got {pipeline_delay}"
        )));
    }
    let opts = SessionOptions {
        rate_hz: config.rate,
        perception_sigma: config.noise_sigma,
        pipeline_delay,
        seed: config.seed,
        ..Default::default()
    };
    let out = run_eval(&scenario, &corpus, opts, InteractionLog::in_memory()).map_err(runtime)?;
    if let Some(path) = &config.log {
        write_log(path, &out.records).map_err(runtime)?;
    }
    if let Some(path) = report {
        emit_report(&out.records, path, csv).map_err(runtime)?;
    } else if let Some(csv) = csv {
        std::fs::write(csv, out.report.confusion.to_csv()).map_err(runtime)?;
    }
    print!("{}", out.report.to_json());
    if out.unsettled > 0 {
        log::warn!("{} corpus lines did not finish within the settle limit", out.unsettled);
    }
    Ok(())
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Run {
            config,
            port,
            host,
            duration,
        } => cmd_run(&config, &host, port, duration),
        Command::Eval {
            config,
            corpus,
            report,
            csv,
            pipeline_delay,
        } => cmd_eval(&config, &corpus, report.as_deref(), csv.as_deref(), pipeline_delay),
        Command::Validate { config } => {
            let problems = validate(&config);
            if problems.is_empty() {
                println!("configuration is valid");
                Ok(())
            } else {
                for p in &problems {
                    println!("{p}");
                }
                Err(CliError::Config(format!("{} violation(s)", problems.len())))
            }
        }
    }
}
