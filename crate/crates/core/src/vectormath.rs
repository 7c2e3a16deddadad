//! Dimension-checked embedding arithmetic.
//!
//! Every refinement step bottoms out here: normalization, cosine similarity,
//! averaging of description embeddings and the add/subtract feedback
//! combination.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Norms at or below this value are treated as the zero vector.
pub const ZERO_NORM: f64 = 1e-12;

/// Default weight applied to the averaged embeddings of both added and
/// removed descriptions.
pub const DEFAULT_ADJUSTMENT: f64 = 0.3;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum VectorError {
    #[error("vector norm is zero (or below {ZERO_NORM:e})")]
    ZeroVector,
    #[error("vector contains a non-finite entry at index {0}")]
    NonFinite(usize),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("empty list of embeddings")]
    EmptyList,
    #[error("empty vector")]
    Empty,
    #[error("adjustment weight must be finite and nonnegative, got {0}")]
    InvalidWeight(f64),
}

/// A finite real vector of fixed dimension.
///
/// Embeddings are immutable once built. The constructor only checks
/// finiteness; use [`normalize`] for the unit-norm canonical form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Embedding {
    values: Vec<f64>,
}

impl Embedding {
    pub fn new(values: Vec<f64>) -> Result<Self, VectorError> {
        if values.is_empty() {
            return Err(VectorError::Empty);
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(VectorError::NonFinite(i));
        }
        Ok(Self { values })
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.values
    }

    pub fn norm(&self) -> f64 {
        l2_norm(&self.values)
    }

    pub fn dot(&self, other: &Embedding) -> Result<f64, VectorError> {
        check_dim(self.dim(), other.dim())?;
        Ok(dot(&self.values, &other.values))
    }
}

impl TryFrom<Vec<f64>> for Embedding {
    type Error = VectorError;

    fn try_from(values: Vec<f64>) -> Result<Self, Self::Error> {
        Embedding::new(values)
    }
}

impl From<Embedding> for Vec<f64> {
    fn from(e: Embedding) -> Self {
        e.values
    }
}

impl AsRef<[f64]> for Embedding {
    fn as_ref(&self) -> &[f64] {
        &self.values
    }
}

/// Weights on the averaged positive and negative description embeddings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawWeights")]
pub struct AdjustmentWeights {
    lambda_add: f64,
    lambda_sub: f64,
}

#[derive(Deserialize)]
struct RawWeights {
    #[serde(default = "default_weight")]
    lambda_add: f64,
    #[serde(default = "default_weight")]
    lambda_sub: f64,
}

fn default_weight() -> f64 {
    DEFAULT_ADJUSTMENT
}

impl TryFrom<RawWeights> for AdjustmentWeights {
    type Error = VectorError;

    fn try_from(raw: RawWeights) -> Result<Self, Self::Error> {
        AdjustmentWeights::new(raw.lambda_add, raw.lambda_sub)
    }
}

impl AdjustmentWeights {
    pub fn new(lambda_add: f64, lambda_sub: f64) -> Result<Self, VectorError> {
        for w in [lambda_add, lambda_sub] {
            if !w.is_finite() || w < 0.0 {
                return Err(VectorError::InvalidWeight(w));
            }
        }
        Ok(Self {
            lambda_add,
            lambda_sub,
        })
    }

    pub fn lambda_add(&self) -> f64 {
        self.lambda_add
    }

    pub fn lambda_sub(&self) -> f64 {
        self.lambda_sub
    }
}

impl Default for AdjustmentWeights {
    fn default() -> Self {
        Self {
            lambda_add: DEFAULT_ADJUSTMENT,
            lambda_sub: DEFAULT_ADJUSTMENT,
        }
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn l2_norm(v: &[f64]) -> f64 {
    dot(v, v).sqrt()
}

pub(crate) fn check_dim(expected: usize, found: usize) -> Result<(), VectorError> {
    if expected == found {
        Ok(())
    } else {
        Err(VectorError::DimensionMismatch { expected, found })
    }
}

/// Scales `v` to unit L2 norm.
pub fn normalize(v: &[f64]) -> Result<Embedding, VectorError> {
    if v.is_empty() {
        return Err(VectorError::Empty);
    }
    if let Some(i) = v.iter().position(|x| !x.is_finite()) {
        return Err(VectorError::NonFinite(i));
    }
    let norm = l2_norm(v);
    if !norm.is_finite() {
        // overflow in the sum of squares; rescale first
        let max = v.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
        let scaled: Vec<f64> = v.iter().map(|x| x / max).collect();
        return normalize(&scaled);
    }
    if norm <= ZERO_NORM {
        return Err(VectorError::ZeroVector);
    }
    Embedding::new(v.iter().map(|x| x / norm).collect())
}

/// Cosine similarity, clamped to `[-1, 1]`.
pub fn cosine_similarity(a: &Embedding, b: &Embedding) -> Result<f64, VectorError> {
    check_dim(a.dim(), b.dim())?;
    let na = a.norm();
    let nb = b.norm();
    if na <= ZERO_NORM || nb <= ZERO_NORM {
        return Err(VectorError::ZeroVector);
    }
    // Dividing each side by its own norm keeps the result bitwise symmetric.
    let cos = dot(a.as_slice(), b.as_slice()) / (na * nb);
    Ok(cos.clamp(-1.0, 1.0))
}

/// Entrywise arithmetic mean. The result is not renormalized.
pub fn mean_embedding(vs: &[Embedding]) -> Result<Vec<f64>, VectorError> {
    let first = vs.first().ok_or(VectorError::EmptyList)?;
    let dim = first.dim();
    let mut acc = vec![0.0; dim];
    for v in vs {
        check_dim(dim, v.dim())?;
        for (a, x) in acc.iter_mut().zip(v.as_slice()) {
            *a += x;
        }
    }
    let n = vs.len() as f64;
    acc.iter_mut().for_each(|a| *a /= n);
    Ok(acc)
}

/// `normalize(base + lambda_add * mean(positives) - lambda_sub * mean(negatives))`.
///
/// An empty list contributes nothing, so with no feedback at all this is
/// `normalize(base)`.
pub fn combine(
    base: &Embedding,
    positives: &[Embedding],
    negatives: &[Embedding],
    weights: AdjustmentWeights,
) -> Result<Embedding, VectorError> {
    let mut out = base.as_slice().to_vec();
    for (list, sign, weight) in [
        (positives, 1.0, weights.lambda_add),
        (negatives, -1.0, weights.lambda_sub),
    ] {
        if list.is_empty() {
            continue;
        }
        let mean = mean_embedding(list)?;
        check_dim(base.dim(), mean.len())?;
        if weight == 0.0 {
            continue;
        }
        for (o, m) in out.iter_mut().zip(&mean) {
            *o += sign * weight * m;
        }
    }
    normalize(&out)
}
