use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::{clean_text, EmbeddingSource, StoreError};
use crate::vectormath::{self, Embedding};

/// Request body sent to an encoder endpoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EncoderRequest {
    pub texts: Vec<String>,
}

/// Response body expected from an encoder endpoint; `vectors` is in request
/// order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EncoderResponse {
    pub dim: usize,
    pub vectors: Vec<Vec<f64>>,
}

/// Live text encoder reached over HTTP POST.
#[derive(Debug, Clone)]
pub struct EncoderEndpoint {
    url: String,
    timeout: Duration,
    expected_dim: usize,
    agent: ureq::Agent,
}

impl EncoderEndpoint {
    pub fn new(url: impl Into<String>, timeout: Duration, expected_dim: usize) -> Result<Self, StoreError> {
        if timeout.is_zero() {
            return Err(StoreError::parse("encoder timeout must be positive"));
        }
        if expected_dim == 0 {
            return Err(StoreError::parse("encoder dimension must be positive"));
        }
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(timeout))
            .http_status_as_error(false)
            .build()
            .into();
        Ok(Self {
            url: url.into(),
            timeout,
            expected_dim,
            agent,
        })
    }

    pub fn url(&self) -> &str {
        &self.url
    }

    pub fn timeout(&self) -> Duration {
        self.timeout
    }

    fn round_trip(&self, texts: Vec<String>) -> Result<EncoderResponse, StoreError> {
        let unreachable = |e: ureq::Error| StoreError::EncoderUnreachable(e.to_string());
        let mut resp = self
            .agent
            .post(&self.url)
            .send_json(&EncoderRequest { texts })
            .map_err(unreachable)?;
        let status = resp.status();
        if status != 200 {
            return Err(StoreError::EncoderUnreachable(format!("HTTP status {status}")));
        }
        resp.body_mut()
            .read_json::<EncoderResponse>()
            .map_err(|e| StoreError::EncoderUnreachable(format!("malformed response: {e}")))
    }
}

impl EmbeddingSource for EncoderEndpoint {
    fn dim(&self) -> usize {
        self.expected_dim
    }

    fn embed_batch(&self, texts: &[&str]) -> Result<Vec<Embedding>, StoreError> {
        let cleaned = texts
            .iter()
            .map(|t| clean_text(t).map(str::to_owned))
            .collect::<Result<Vec<_>, _>>()?;
        if cleaned.is_empty() {
            return Ok(Vec::new());
        }
        let n = cleaned.len();
        let resp = self.round_trip(cleaned)?;
        if resp.dim != self.expected_dim {
            return Err(StoreError::EncoderDimMismatch {
                expected: self.expected_dim,
                found: resp.dim,
            });
        }
        if resp.vectors.len() != n {
            return Err(StoreError::EncoderUnreachable(format!(
                "malformed response: {} vectors for {n} texts",
                resp.vectors.len()
            )));
        }
        resp.vectors
            .iter()
            .map(|v| {
                if v.len() != resp.dim {
                    return Err(StoreError::EncoderUnreachable(format!(
                        "malformed response: vector of length {} in a dim-{} reply",
                        v.len(),
                        resp.dim
                    )));
                }
                Ok(vectormath::normalize(v)?)
            })
            .collect()
    }
}
