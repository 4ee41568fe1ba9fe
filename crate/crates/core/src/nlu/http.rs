use std::time::Duration;

use serde_json::{json, Value};

use super::backend::{Interpretation, LmBackend};
use super::utterance::Utterance;

pub const DEFAULT_PROMPT: &str = "Classify the robot command into exactly one label from this list: {labels}.\n\
Reply with the label only.\nCommand: {utterance}\nLabel:";

#[derive(Debug, Clone)]
pub struct HttpBackendConfig {
    pub endpoint: String,
    pub headers: Vec<(String, String)>,
    /// Prompt with `{utterance}` and optional `{labels}` slots.
    pub prompt_template: String,
    pub timeout: Duration,
}

impl HttpBackendConfig {
    pub fn new(endpoint: impl Into<String>) -> Self {
        Self {
            endpoint: endpoint.into(),
            headers: Vec::new(),
            prompt_template: DEFAULT_PROMPT.into(),
            timeout: super::backend::DEFAULT_BUDGET,
        }
    }
}

/// Sends the prompted utterance to a completion endpoint as
/// `{"prompt": ...}` and reads back a bare label. Any failure, or a reply
/// that is not one of the allowed labels, yields `unknown`.
pub struct HttpBackend {
    cfg: HttpBackendConfig,
    labels: Vec<String>,
    agent: ureq::Agent,
}

impl HttpBackend {
    pub fn new(cfg: HttpBackendConfig, labels: Vec<String>) -> Self {
        let agent =
            ureq::Agent::new_with_config(ureq::Agent::config_builder().timeout_global(Some(cfg.timeout)).build());
        Self { cfg, labels, agent }
    }

    pub fn render_prompt(&self, utt: &Utterance) -> String {
        self.cfg
            .prompt_template
            .replace("{labels}", &self.labels.join(", "))
            .replace("{utterance}", &utt.raw)
    }

    fn request(&self, prompt: &str) -> Result<String, String> {
        let body = json!({ "prompt": prompt }).to_string();
        let mut req = self
            .agent
            .post(&self.cfg.endpoint)
            .header("Content-Type", "application/json");
        for (k, v) in &self.cfg.headers {
            req = req.header(k.as_str(), v.as_str());
        }
        let mut resp = req.send(body.as_str()).map_err(|e| e.to_string())?;
        resp.body_mut().read_to_string().map_err(|e| e.to_string())
    }
}

/// Pull the completion text out of common response shapes, falling back to
/// the raw body.
pub fn completion_text(body: &str) -> String {
    let Ok(v) = serde_json::from_str::<Value>(body) else {
        return body.to_string();
    };
    let candidates = [
        v.pointer("/choices/0/text"),
        v.pointer("/choices/0/message/content"),
        v.get("completion"),
        v.get("text"),
        v.get("label"),
    ];
    let found = candidates
        .into_iter()
        .flatten()
        .find_map(Value::as_str)
        .map(str::to_string);
    found.unwrap_or_else(|| match &v {
        Value::String(s) => s.clone(),
        other => other.to_string(),
    })
}

/// First non-empty line, trimmed of quotes and trailing punctuation, spaces
/// folded to underscores; accepted only if it is an allowed label.
pub fn parse_label(completion: &str, labels: &[String]) -> Option<String> {
    let line = completion.lines().map(str::trim).find(|l| !l.is_empty())?;
    let cleaned = line
        .trim_matches(|c: char| c == '"' || c == '\'' || c == '`' || c == '.' || c == '!')
        .trim()
        .to_lowercase()
        .split_whitespace()
        .collect::<Vec<_>>()
        .join("_");
    labels.iter().find(|l| **l == cleaned).cloned()
}

impl LmBackend for HttpBackend {
    fn name(&self) -> &str {
        "http"
    }

    fn interpret(&self, utt: &Utterance) -> Interpretation {
        match self.request(&self.render_prompt(utt)) {
            Ok(body) => {
                let text = completion_text(&body);
                match parse_label(&text, &self.labels) {
                    Some(label) => Interpretation {
                        label,
                        confidence: 1.0,
                        raw: text,
                    },
                    None => {
                        log::warn!("unparseable completion: {text:?}");
                        Interpretation::unknown(text)
                    }
                }
            }
            Err(e) => {
                log::warn!("http backend failed: {e}");
                Interpretation::unknown(format!("<error: {e}>"))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn labels() -> Vec<String> {
        ["forward", "secretary_office", "unknown"].map(String::from).to_vec()
    }

    #[test]
    fn completion_shapes() {
        assert_eq!(completion_text(r#"{"choices":[{"text":" forward"}]}"#), " forward");
        assert_eq!(
            completion_text(r#"{"choices":[{"message":{"content":"stop"}}]}"#),
            "stop"
        );
        assert_eq!(completion_text(r#"{"completion":"left"}"#), "left");
        assert_eq!(completion_text("plain words"), "plain words");
    }

    #[test]
    fn labels_must_be_bare() {
        assert_eq!(parse_label("forward\n", &labels()).as_deref(), Some("forward"));
        assert_eq!(parse_label("\n \"Forward.\"", &labels()).as_deref(), Some("forward"));
        assert_eq!(
            parse_label("secretary office", &labels()).as_deref(),
            Some("secretary_office")
        );
        assert_eq!(parse_label("I think forward", &labels()), None);
        assert_eq!(parse_label("%%##", &labels()), None);
        assert_eq!(parse_label("", &labels()), None);
    }

    #[test]
    fn unreachable_endpoint_is_unknown() {
        let mut cfg = HttpBackendConfig::new("http://127.0.0.1:9/complete");
        cfg.timeout = Duration::from_millis(500);
        let b = HttpBackend::new(cfg, labels());
        let out = b.interpret(&Utterance::new("move forward", 0.0));
        assert!(out.is_unknown());
        assert_eq!(out.confidence, 0.0);
    }

    #[test]
    fn prompt_fills_slots() {
        let b = HttpBackend::new(HttpBackendConfig::new("http://x"), labels());
        let p = b.render_prompt(&Utterance::new("Go!", 0.0));
        assert!(p.contains("Command: Go!"));
        assert!(p.contains("forward, secretary_office, unknown"));
    }
}
