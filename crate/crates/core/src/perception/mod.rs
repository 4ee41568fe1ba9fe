//! Zero-shot object grounding: text and image embeddings, dot-product
//! similarity, argmax recognition and bounding-box-center localization.

mod camera;
mod embedding;
mod node;
mod recognize;

use thiserror::Error;

pub use camera::{localize, synthesize_bbox, BBox, CameraModel};
pub use embedding::{
    normalize_token, EmbeddingProvider, FeatureVec, MockProvider, Observation, PrecomputedProvider, MOCK_DIM,
};
pub use node::{detection_correct, Detection, PerceptionNode, ScoredDetection, DEFAULT_CORRECT_TOLERANCE};
pub use recognize::{encode_text, recognize, similarity_scores, DescriptionSet};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PerceptionError {
    #[error("description set is empty")]
    EmptyDescriptionSet,
    #[error("duplicate description '{0}'")]
    DuplicateDescription(String),
    #[error("feature dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("no similarity scores")]
    EmptyScores,
    #[error("{scores} scores for {descriptions} descriptions")]
    LengthMismatch { scores: usize, descriptions: usize },
    #[error("no embedding for label '{0}'")]
    UnknownLabel(String),
    #[error("bounding box lies outside the image")]
    BBoxOutsideImage,
    #[error("bounding box has non-positive extent")]
    InvalidBBox,
    #[error("no depth along the box center ray")]
    NoDepth,
    #[error("cannot parse embedding file: {0}")]
    Parse(String),
}
