use std::sync::Arc;

use crate::assets;
use crate::nlu::{HttpBackend, HttpBackendConfig, IntentGrammar, LmBackend, RuleBackend};
use crate::perception::{DescriptionSet, EmbeddingProvider, MockProvider};
use crate::rem::{LocationRegistry, MotionPatternTable, TwistLimits};
use crate::world_sim::{parse_world, WorldModel};

/// Which language-model backend interprets free-form input.
#[derive(Clone)]
pub enum BackendChoice {
    /// Deterministic keyword spotting over the grammar.
    Rule,
    /// An HTTP completion endpoint, constrained to the grammar's labels.
    Http(HttpBackendConfig),
    Custom(Arc<dyn LmBackend>),
}

/// Everything a session needs: world, grammar, locations, patterns and the
/// model providers.
#[derive(Clone)]
pub struct Scenario {
    pub world: WorldModel,
    pub grammar: IntentGrammar,
    pub locations: LocationRegistry,
    pub patterns: MotionPatternTable,
    pub backend: BackendChoice,
    pub embeddings: Arc<dyn EmbeddingProvider>,
}

impl Scenario {
    pub fn new(
        world: WorldModel,
        grammar: IntentGrammar,
        locations: LocationRegistry,
        patterns: MotionPatternTable,
    ) -> Self {
        Self {
            world,
            grammar,
            locations,
            patterns,
            backend: BackendChoice::Rule,
            embeddings: Arc::new(MockProvider::default()),
        }
    }

    /// The shipped office world with its locations, grammar and patterns.
    pub fn office() -> Self {
        Self::shipped(assets::OFFICE_WORLD, assets::OFFICE_LOCATIONS)
    }

    /// The shipped corridor world.
    pub fn corridor() -> Self {
        Self::shipped(assets::CORRIDOR_WORLD, assets::CORRIDOR_LOCATIONS)
    }

    fn shipped(world: &str, locations: &str) -> Self {
        Self::new(
            parse_world(world).expect("shipped world is valid"),
            IntentGrammar::parse(assets::GRAMMAR).expect("shipped grammar is valid"),
            LocationRegistry::parse(locations).expect("shipped locations are valid"),
            MotionPatternTable::parse(assets::PATTERNS, &TwistLimits::default()).expect("shipped patterns are valid"),
        )
    }

    pub fn with_backend(mut self, backend: BackendChoice) -> Self {
        self.backend = backend;
        self
    }

    /// The grammar with its destination slot bound to the location registry.
    pub fn grounded_grammar(&self) -> IntentGrammar {
        self.grammar.clone().with_destinations(self.locations.destinations())
    }

    pub(crate) fn make_backend(&self, grammar: &IntentGrammar) -> Arc<dyn LmBackend> {
        match &self.backend {
            BackendChoice::Rule => Arc::new(RuleBackend::new(grammar)),
            BackendChoice::Http(cfg) => Arc::new(HttpBackend::new(cfg.clone(), grammar.output_labels())),
            BackendChoice::Custom(b) => b.clone(),
        }
    }

    /// Object labels present in the world, in first-seen order; `None` if
    /// the world has no objects.
    pub fn descriptions(&self) -> Option<DescriptionSet> {
        let labels = self.world.object_labels();
        DescriptionSet::new(&labels).ok()
    }
}
