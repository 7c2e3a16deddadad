use std::fmt;

use classrefine_core::concepts::ConceptError;
use classrefine_core::detmetrics::MetricsError;
use classrefine_core::rank::RankError;
use classrefine_core::refine::RefineError;
use classrefine_core::store::StoreError;
use classrefine_core::vectormath::VectorError;

/// Failure classes, each with its own process exit code.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CliError {
    /// Bad flags or flag combinations (exit 2).
    Usage(String),
    /// Unreadable, malformed or inconsistent input (exit 3).
    Data(String),
    /// Numerical failure such as a zero vector or solver non-convergence
    /// (exit 4).
    Math(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Data(_) => 3,
            CliError::Math(_) => 4,
        }
    }

    pub fn data(msg: impl Into<String>) -> Self {
        CliError::Data(msg.into())
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Data(m) => write!(f, "data error: {m}"),
            CliError::Math(m) => write!(f, "math error: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<VectorError> for CliError {
    fn from(e: VectorError) -> Self {
        match e {
            VectorError::ZeroVector | VectorError::NonFinite(_) => CliError::Math(e.to_string()),
            VectorError::InvalidWeight(_) => CliError::Usage(e.to_string()),
            _ => CliError::Data(e.to_string()),
        }
    }
}

impl From<ConceptError> for CliError {
    fn from(e: ConceptError) -> Self {
        match e {
            ConceptError::Vector(v) => v.into(),
            ConceptError::NoConvergence { .. } => CliError::Math(e.to_string()),
            ConceptError::InvalidPenalty(_) => CliError::Usage(e.to_string()),
            _ => CliError::Data(e.to_string()),
        }
    }
}

impl From<MetricsError> for CliError {
    fn from(e: MetricsError) -> Self {
        match e {
            MetricsError::Vector(v) => v.into(),
            MetricsError::InvalidThreshold(_) | MetricsError::NoThresholds => CliError::Usage(e.to_string()),
            _ => CliError::Data(e.to_string()),
        }
    }
}

impl From<StoreError> for CliError {
    fn from(e: StoreError) -> Self {
        match e {
            StoreError::Vector(v) => v.into(),
            StoreError::Dictionary(c) => c.into(),
            StoreError::Metrics(m) => m.into(),
            _ => CliError::Data(e.to_string()),
        }
    }
}

impl From<RankError> for CliError {
    fn from(e: RankError) -> Self {
        match e {
            RankError::Vector(v) => v.into(),
            RankError::TooFewClasses(_) => CliError::Usage(e.to_string()),
            RankError::UnknownClass(_) => CliError::Data(e.to_string()),
        }
    }
}

impl From<RefineError> for CliError {
    fn from(e: RefineError) -> Self {
        match e {
            RefineError::EmbeddingUnavailable(s) => s.into(),
            RefineError::Concept(c) => c.into(),
            RefineError::Vector(v) => v.into(),
            RefineError::Rank(r) => r.into(),
            _ => CliError::Data(e.to_string()),
        }
    }
}
