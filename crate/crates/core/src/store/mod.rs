//! Embedding sources and on-disk formats.
//!
//! Text embeddings come either from an [`EmbeddingStore`] file (offline,
//! reproducible) or from an [`EncoderEndpoint`] speaking a small JSON
//! protocol. Lookups are exact on the trimmed text; a miss is an error and
//! never a fabricated vector.

mod encoder;
mod format;
mod records;

use std::collections::HashMap;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::concepts::ConceptError;
use crate::detmetrics::MetricsError;
use crate::vectormath::{self, Embedding, VectorError};

pub use encoder::{EncoderEndpoint, EncoderRequest, EncoderResponse};
pub use format::{
    decode_definition, decode_dictionary, decode_store, encode_definition, encode_dictionary,
    encode_store, load_definition, load_dictionary, load_store, save_definition, save_dictionary,
    save_store, DefinitionRecord, FORMAT_MAGIC, FORMAT_VERSION,
};
pub use records::{
    load_detections, load_ground_truth, parse_detections, parse_ground_truth,
};

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("parse error: {0}")]
    Parse(String),
    #[error("duplicate text {0:?}")]
    DuplicateText(String),
    #[error("entry {text:?} has {found} values, store dimension is {expected}")]
    DimInconsistent {
        text: String,
        expected: usize,
        found: usize,
    },
    #[error("entry {text:?} has norm {norm} but the store is flagged normalized")]
    NotNormalized { text: String, norm: f64 },
    #[error("text not found in store: {0:?}")]
    TextNotFound(String),
    #[error("empty text")]
    EmptyText,
    #[error("encoder unreachable: {0}")]
    EncoderUnreachable(String),
    #[error("encoder returned dimension {found}, expected {expected}")]
    EncoderDimMismatch { expected: usize, found: usize },
    #[error(transparent)]
    Dictionary(#[from] ConceptError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error(transparent)]
    Vector(#[from] VectorError),
}

impl StoreError {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        StoreError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    pub(crate) fn parse(msg: impl Into<String>) -> Self {
        StoreError::Parse(msg.into())
    }
}

/// Anything that turns text into embeddings.
pub trait EmbeddingSource: Send + Sync {
    fn dim(&self) -> usize;

    /// Embeds each text (trimmed) and returns unit-norm vectors in order.
    fn embed_batch(&self, texts: &[&str]) -> Result<Vec<Embedding>, StoreError>;

    fn embed(&self, text: &str) -> Result<Embedding, StoreError> {
        let mut v = self.embed_batch(&[text])?;
        v.pop()
            .ok_or_else(|| StoreError::EncoderUnreachable("empty response".into()))
    }
}

/// Resolves `text` through `source`.
pub fn embed_text(text: &str, source: &dyn EmbeddingSource) -> Result<Embedding, StoreError> {
    source.embed(text)
}

pub(crate) fn clean_text(text: &str) -> Result<&str, StoreError> {
    let t = text.trim();
    if t.is_empty() {
        Err(StoreError::EmptyText)
    } else {
        Ok(t)
    }
}

/// Frozen text-to-vector table with single-precision values.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingStore {
    dim: usize,
    normalized: bool,
    entries: Vec<(String, Vec<f32>)>,
    index: HashMap<String, usize>,
}

impl EmbeddingStore {
    pub fn new(dim: usize, normalized: bool) -> Self {
        Self {
            dim,
            normalized,
            entries: Vec::new(),
            index: HashMap::new(),
        }
    }

    /// Builds a store from entries, validating every invariant.
    pub fn from_entries(
        dim: usize,
        normalized: bool,
        entries: impl IntoIterator<Item = (String, Vec<f32>)>,
    ) -> Result<Self, StoreError> {
        let mut store = Self::new(dim, normalized);
        for (text, values) in entries {
            store.insert(text, values)?;
        }
        Ok(store)
    }

    pub fn insert(&mut self, text: String, values: Vec<f32>) -> Result<(), StoreError> {
        if self.dim == 0 {
            return Err(StoreError::parse("store dimension must be positive"));
        }
        if text.is_empty() {
            return Err(StoreError::EmptyText);
        }
        if values.len() != self.dim {
            return Err(StoreError::DimInconsistent {
                text,
                expected: self.dim,
                found: values.len(),
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(StoreError::parse(format!("non-finite value in entry {text:?}")));
        }
        if self.normalized {
            let norm = values.iter().map(|&v| f64::from(v).powi(2)).sum::<f64>().sqrt();
            if (norm - 1.0).abs() > 1e-6 {
                return Err(StoreError::NotNormalized { text, norm });
            }
        }
        if self.index.contains_key(&text) {
            return Err(StoreError::DuplicateText(text));
        }
        self.index.insert(text.clone(), self.entries.len());
        self.entries.push((text, values));
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub fn entries(&self) -> impl Iterator<Item = (&str, &[f32])> {
        self.entries.iter().map(|(t, v)| (t.as_str(), v.as_slice()))
    }

    pub fn get(&self, text: &str) -> Option<&[f32]> {
        self.index.get(text).map(|&i| self.entries[i].1.as_slice())
    }

    pub fn contains(&self, text: &str) -> bool {
        self.index.contains_key(text.trim())
    }
}

impl EmbeddingSource for EmbeddingStore {
    fn dim(&self) -> usize {
        self.dim
    }

    fn embed_batch(&self, texts: &[&str]) -> Result<Vec<Embedding>, StoreError> {
        texts
            .iter()
            .map(|text| {
                let t = clean_text(text)?;
                let raw = self
                    .get(t)
                    .ok_or_else(|| StoreError::TextNotFound(t.to_owned()))?;
                let wide: Vec<f64> = raw.iter().map(|&v| f64::from(v)).collect();
                Ok(vectormath::normalize(&wide)?)
            })
            .collect()
    }
}
