use std::collections::BTreeMap;
use std::path::Path;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::PerceptionError;

/// Dimension of the mock provider's feature space.
pub const MOCK_DIM: usize = 64;

/// A feature vector from an image or text encoder.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVec {
    values: Vec<f64>,
    normalized: bool,
}

impl FeatureVec {
    pub fn raw(values: Vec<f64>) -> Self {
        Self {
            values,
            normalized: false,
        }
    }

    /// Scale to unit L2 norm. A zero vector stays zero and unnormalized.
    pub fn unit(mut values: Vec<f64>) -> Self {
        let norm = values.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Self::raw(values);
        }
        values.iter_mut().for_each(|v| *v /= norm);
        Self {
            values,
            normalized: true,
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub fn norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn dot(&self, other: &FeatureVec) -> Result<f64, PerceptionError> {
        if self.dim() != other.dim() {
            return Err(PerceptionError::DimensionMismatch {
                expected: self.dim(),
                got: other.dim(),
            });
        }
        Ok(self.values.iter().zip(&other.values).map(|(a, b)| a * b).sum())
    }
}

/// What the image encoder sees.
#[derive(Debug, Clone, PartialEq)]
pub enum Observation {
    /// Simulated crop of a ground-truth object: the provider returns the
    /// true label's text embedding plus isotropic Gaussian noise, renormalized.
    SimulatedCrop { label: String, noise_sigma: f64 },
    /// Features computed elsewhere (e.g. a real encoder run offline).
    Features(FeatureVec),
}

/// Encoder pair behind which a real vision-language model can sit.
pub trait EmbeddingProvider: Send + Sync {
    fn dim(&self) -> usize;

    fn encode_text(&self, token: &str) -> Result<FeatureVec, PerceptionError>;

    fn encode_image(&self, observation: &Observation, rng: &mut dyn RngCore) -> Result<FeatureVec, PerceptionError> {
        match observation {
            Observation::SimulatedCrop { label, noise_sigma } => {
                let clean = self.encode_text(&normalize_token(label))?;
                Ok(perturb(&clean, *noise_sigma, rng))
            }
            Observation::Features(f) => {
                if f.dim() != self.dim() {
                    return Err(PerceptionError::DimensionMismatch {
                        expected: self.dim(),
                        got: f.dim(),
                    });
                }
                Ok(FeatureVec::unit(f.values().to_vec()))
            }
        }
    }
}

/// Text form of a description: lowercase, underscores as spaces.
pub fn normalize_token(description: &str) -> String {
    description
        .trim()
        .to_lowercase()
        .replace('_', " ")
        .split_whitespace()
        .collect::<Vec<_>>()
        .join(" ")
}

fn perturb(clean: &FeatureVec, sigma: f64, rng: &mut dyn RngCore) -> FeatureVec {
    if sigma <= 0.0 {
        return clean.clone();
    }
    let noisy = clean
        .values()
        .iter()
        .map(|v| {
            let z: f64 = StandardNormal.sample(rng);
            v + sigma * z
        })
        .collect();
    FeatureVec::unit(noisy)
}

fn fnv1a(bytes: &[u8]) -> u64 {
    bytes.iter().fold(0xcbf2_9ce4_8422_2325u64, |h, b| {
        (h ^ u64::from(*b)).wrapping_mul(0x0000_0100_0000_01b3)
    })
}

/// Deterministic stand-in encoder: every token hashes to a seeded random
/// unit vector, so distinct labels get (almost surely) distinct, nearly
/// orthogonal embeddings.
#[derive(Debug, Clone)]
pub struct MockProvider {
    dim: usize,
    seed: u64,
}

impl MockProvider {
    pub fn new(dim: usize, seed: u64) -> Self {
        assert!(dim >= 1, "embedding dimension must be positive");
        Self { dim, seed }
    }
}

impl Default for MockProvider {
    fn default() -> Self {
        Self::new(MOCK_DIM, 0)
    }
}

impl EmbeddingProvider for MockProvider {
    fn dim(&self) -> usize {
        self.dim
    }

    fn encode_text(&self, token: &str) -> Result<FeatureVec, PerceptionError> {
        let mut rng = ChaCha8Rng::seed_from_u64(fnv1a(token.as_bytes()) ^ self.seed);
        let values = (0..self.dim).map(|_| StandardNormal.sample(&mut rng)).collect();
        Ok(FeatureVec::unit(values))
    }
}

/// Provider backed by a table of precomputed text embeddings, e.g. exported
/// from a real encoder. File format: TOML mapping label to vector,
/// `chair = [0.1, -0.3, ...]`.
#[derive(Debug, Clone)]
pub struct PrecomputedProvider {
    dim: usize,
    table: BTreeMap<String, FeatureVec>,
}

impl PrecomputedProvider {
    pub fn from_table(table: BTreeMap<String, Vec<f64>>) -> Result<Self, PerceptionError> {
        let dim = table
            .values()
            .next()
            .map(Vec::len)
            .ok_or(PerceptionError::EmptyDescriptionSet)?;
        let mut out = BTreeMap::new();
        for (label, v) in table {
            if v.len() != dim {
                return Err(PerceptionError::DimensionMismatch {
                    expected: dim,
                    got: v.len(),
                });
            }
            out.insert(normalize_token(&label), FeatureVec::unit(v));
        }
        Ok(Self { dim, table: out })
    }

    pub fn parse(text: &str) -> Result<Self, PerceptionError> {
        let table: BTreeMap<String, Vec<f64>> =
            toml::from_str(text).map_err(|e| PerceptionError::Parse(e.to_string()))?;
        Self::from_table(table)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, PerceptionError> {
        let text = std::fs::read_to_string(path.as_ref())
            .map_err(|e| PerceptionError::Parse(format!("{}: {e}", path.as_ref().display())))?;
        Self::parse(&text)
    }
}

impl EmbeddingProvider for PrecomputedProvider {
    fn dim(&self) -> usize {
        self.dim
    }

    fn encode_text(&self, token: &str) -> Result<FeatureVec, PerceptionError> {
        self.table
            .get(&normalize_token(token))
            .cloned()
            .ok_or_else(|| PerceptionError::UnknownLabel(token.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mock_is_deterministic_unit_norm() {
        let p = MockProvider::default();
        let a = p.encode_text("table").unwrap();
        let b = p.encode_text("table").unwrap();
        assert_eq!(a, b);
        assert_eq!(a.dim(), 64);
        assert!(a.is_normalized());
        assert!((a.norm() - 1.0).abs() < 1e-6);
    }

    #[test]
    fn noiseless_crop_equals_text_embedding() {
        let p = MockProvider::default();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let img = p
            .encode_image(
                &Observation::SimulatedCrop {
                    label: "chair".into(),
                    noise_sigma: 0.0,
                },
                &mut rng,
            )
            .unwrap();
        assert_eq!(img, p.encode_text("chair").unwrap());
    }

    #[test]
    fn noisy_crop_is_unit_but_different() {
        let p = MockProvider::default();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let obs = Observation::SimulatedCrop {
            label: "chair".into(),
            noise_sigma: 0.3,
        };
        let img = p.encode_image(&obs, &mut rng).unwrap();
        let cos = img.dot(&p.encode_text("chair").unwrap()).unwrap();
        assert!(cos < 1.0 && cos > 0.0);
        assert!((img.norm() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn precomputed_table() {
        let p = PrecomputedProvider::parse("chair = [1.0, 0.0]\ntrash_bin = [0.0, 2.0]\n").unwrap();
        assert_eq!(p.dim(), 2);
        assert_eq!(p.encode_text("trash bin").unwrap().values(), &[0.0, 1.0]);
        assert!(matches!(p.encode_text("sofa"), Err(PerceptionError::UnknownLabel(_))));
        assert!(matches!(
            PrecomputedProvider::parse("a = [1.0]\nb = [1.0, 2.0]\n"),
            Err(PerceptionError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn dot_rejects_mismatched_dims() {
        let a = FeatureVec::unit(vec![1.0, 0.0]);
        let b = FeatureVec::unit(vec![1.0, 0.0, 0.0]);
        assert!(a.dot(&b).is_err());
    }
}
