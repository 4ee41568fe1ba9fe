use super::embedding::{normalize_token, EmbeddingProvider, FeatureVec};
use super::PerceptionError;

/// Ordered textual descriptions and their tokenized forms, index-aligned.
#[derive(Debug, Clone, PartialEq)]
pub struct DescriptionSet {
    descriptions: Vec<String>,
    tokens: Vec<String>,
}

impl DescriptionSet {
    pub fn new<S: AsRef<str>>(descriptions: &[S]) -> Result<Self, PerceptionError> {
        if descriptions.is_empty() {
            return Err(PerceptionError::EmptyDescriptionSet);
        }
        let mut out = Self {
            descriptions: Vec::with_capacity(descriptions.len()),
            tokens: Vec::with_capacity(descriptions.len()),
        };
        for d in descriptions {
            let d = d.as_ref().to_string();
            if out.descriptions.contains(&d) {
                return Err(PerceptionError::DuplicateDescription(d));
            }
            out.tokens.push(normalize_token(&d));
            out.descriptions.push(d);
        }
        Ok(out)
    }

    pub fn len(&self) -> usize {
        self.descriptions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.descriptions.is_empty()
    }

    pub fn descriptions(&self) -> &[String] {
        &self.descriptions
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn contains(&self, label: &str) -> bool {
        self.descriptions.iter().any(|d| d == label)
    }
}

/// Encode every token of the set, in order.
pub fn encode_text(provider: &dyn EmbeddingProvider, set: &DescriptionSet) -> Result<Vec<FeatureVec>, PerceptionError> {
    set.tokens()
        .iter()
        .map(|t| {
            let f = provider.encode_text(t)?;
            if f.dim() != provider.dim() {
                return Err(PerceptionError::DimensionMismatch {
                    expected: provider.dim(),
                    got: f.dim(),
                });
            }
            Ok(f)
        })
        .collect()
}

/// Similarity of the image feature to each text feature: the plain dot
/// product, which is the cosine for unit vectors.
pub fn similarity_scores(image: &FeatureVec, texts: &[FeatureVec]) -> Result<Vec<f64>, PerceptionError> {
    texts.iter().map(|t| image.dot(t)).collect()
}

/// The description with the highest score; ties go to the lowest index.
pub fn recognize(scores: &[f64], set: &DescriptionSet) -> Result<(String, f64), PerceptionError> {
    if scores.is_empty() {
        return Err(PerceptionError::EmptyScores);
    }
    if scores.len() != set.len() {
        return Err(PerceptionError::LengthMismatch {
            scores: scores.len(),
            descriptions: set.len(),
        });
    }
    let mut best = 0;
    for (i, s) in scores.iter().enumerate().skip(1) {
        if *s > scores[best] {
            best = i;
        }
    }
    Ok((set.descriptions()[best].clone(), scores[best]))
}
