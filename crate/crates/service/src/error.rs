use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use classrefine_core::concepts::ConceptError;
use classrefine_core::detmetrics::MetricsError;
use classrefine_core::rank::RankError;
use classrefine_core::refine::{LogError, RefineError};
use classrefine_core::store::StoreError;
use classrefine_core::vectormath::VectorError;
use serde::{Deserialize, Serialize};

/// Every code the service can emit.
pub const ERROR_CODES: &[&str] = &[
    "MalformedBody",
    "InvalidBody",
    "PayloadTooLarge",
    "NotFound",
    "MethodNotAllowed",
    "UnknownSession",
    "UnknownDataset",
    "UnknownClass",
    "ClassRequired",
    "EmptyClassList",
    "DuplicateLabel",
    "EmptyText",
    "TextNotFound",
    "EncoderUnreachable",
    "EncoderDimMismatch",
    "UnknownConcept",
    "ZeroVector",
    "NonFinite",
    "DimensionMismatch",
    "InvalidWeight",
    "InvalidPenalty",
    "NoConvergence",
    "NothingToUndo",
    "TooFewClasses",
    "NoGroundTruth",
    "InvalidThreshold",
    "NoThresholds",
    "InvalidBox",
    "InvalidScore",
    "UnknownImage",
    "DuplicateImage",
    "MissingFeature",
    "InvalidDataset",
    "Storage",
    "Internal",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApiError {
    pub code: String,
    pub message: String,
    #[serde(skip)]
    pub http_status: u16,
}

impl ApiError {
    pub fn new(status: StatusCode, code: &str, message: impl Into<String>) -> Self {
        debug_assert!(ERROR_CODES.contains(&code), "unlisted code {code}");
        Self {
            code: code.to_owned(),
            message: message.into(),
            http_status: status.as_u16(),
        }
    }

    pub fn malformed(message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, "MalformedBody", message)
    }

    pub fn invalid(message: impl Into<String>) -> Self {
        Self::new(StatusCode::UNPROCESSABLE_ENTITY, "InvalidBody", message)
    }

    pub fn unknown_session(id: &str) -> Self {
        Self::new(StatusCode::NOT_FOUND, "UnknownSession", format!("no session {id:?}"))
    }

    pub fn unknown_dataset(id: &str) -> Self {
        Self::new(StatusCode::NOT_FOUND, "UnknownDataset", format!("no dataset {id:?}"))
    }

    pub fn internal(message: impl Into<String>) -> Self {
        Self::new(StatusCode::INTERNAL_SERVER_ERROR, "Internal", message)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let status = StatusCode::from_u16(self.http_status).unwrap_or(StatusCode::INTERNAL_SERVER_ERROR);
        (status, Json(self)).into_response()
    }
}

const UNPROCESSABLE: StatusCode = StatusCode::UNPROCESSABLE_ENTITY;

impl From<VectorError> for ApiError {
    fn from(e: VectorError) -> Self {
        let code = match e {
            VectorError::ZeroVector => "ZeroVector",
            VectorError::NonFinite(_) => "NonFinite",
            VectorError::DimensionMismatch { .. } => "DimensionMismatch",
            VectorError::EmptyList | VectorError::Empty => "InvalidBody",
            VectorError::InvalidWeight(_) => "InvalidWeight",
        };
        ApiError::new(UNPROCESSABLE, code, e.to_string())
    }
}

impl From<ConceptError> for ApiError {
    fn from(e: ConceptError) -> Self {
        let (status, code) = match &e {
            ConceptError::Vector(v) => return v.clone().into(),
            ConceptError::UnknownConcept(_) => (UNPROCESSABLE, "UnknownConcept"),
            ConceptError::InvalidPenalty(_) => (UNPROCESSABLE, "InvalidPenalty"),
            ConceptError::NoConvergence { .. } => (StatusCode::INTERNAL_SERVER_ERROR, "NoConvergence"),
            _ => (StatusCode::INTERNAL_SERVER_ERROR, "Internal"),
        };
        ApiError::new(status, code, e.to_string())
    }
}

impl From<MetricsError> for ApiError {
    fn from(e: MetricsError) -> Self {
        let code = match &e {
            MetricsError::Vector(v) => return v.clone().into(),
            MetricsError::InvalidBox { .. } => "InvalidBox",
            MetricsError::InvalidThreshold(_) => "InvalidThreshold",
            MetricsError::NoThresholds => "NoThresholds",
            MetricsError::NoGroundTruth(_) => "NoGroundTruth",
            MetricsError::UnknownImage(_) => "UnknownImage",
            MetricsError::DuplicateImage(_) => "DuplicateImage",
            MetricsError::InvalidScore(_) => "InvalidScore",
            MetricsError::MissingFeature(_) => "MissingFeature",
            MetricsError::MixedCategories(..) | MetricsError::ZeroBaseline(_) | MetricsError::EmptyList => "InvalidDataset",
        };
        ApiError::new(UNPROCESSABLE, code, e.to_string())
    }
}

impl From<StoreError> for ApiError {
    fn from(e: StoreError) -> Self {
        let (status, code) = match &e {
            StoreError::TextNotFound(_) => (UNPROCESSABLE, "TextNotFound"),
            StoreError::EmptyText => (UNPROCESSABLE, "EmptyText"),
            StoreError::EncoderUnreachable(_) => (StatusCode::BAD_GATEWAY, "EncoderUnreachable"),
            StoreError::EncoderDimMismatch { .. } => (StatusCode::BAD_GATEWAY, "EncoderDimMismatch"),
            StoreError::Vector(v) => return v.clone().into(),
            StoreError::Metrics(m) => return m.clone().into(),
            StoreError::Dictionary(c) => return c.clone().into(),
            StoreError::Parse(_)
            | StoreError::DuplicateText(_)
            | StoreError::DimInconsistent { .. }
            | StoreError::NotNormalized { .. } => (UNPROCESSABLE, "InvalidDataset"),
            StoreError::Io { .. } => (StatusCode::INTERNAL_SERVER_ERROR, "Storage"),
        };
        ApiError::new(status, code, e.to_string())
    }
}

impl From<RankError> for ApiError {
    fn from(e: RankError) -> Self {
        match e {
            RankError::TooFewClasses(_) => ApiError::new(StatusCode::CONFLICT, "TooFewClasses", e.to_string()),
            RankError::UnknownClass(_) => ApiError::new(StatusCode::NOT_FOUND, "UnknownClass", e.to_string()),
            RankError::Vector(v) => v.into(),
        }
    }
}

impl From<RefineError> for ApiError {
    fn from(e: RefineError) -> Self {
        let (status, code) = match e {
            RefineError::EmptyClassList => (UNPROCESSABLE, "EmptyClassList"),
            RefineError::DuplicateLabel(_) => (UNPROCESSABLE, "DuplicateLabel"),
            RefineError::UnknownClass(_) => (StatusCode::NOT_FOUND, "UnknownClass"),
            RefineError::NothingToUndo(_) => (StatusCode::CONFLICT, "NothingToUndo"),
            RefineError::EmptyAdjustment => (UNPROCESSABLE, "InvalidBody"),
            RefineError::EmptyText => (UNPROCESSABLE, "EmptyText"),
            RefineError::EmbeddingUnavailable(s) => return s.into(),
            RefineError::Concept(c) => return c.into(),
            RefineError::Vector(v) => return v.into(),
            RefineError::Rank(r) => return r.into(),
            RefineError::SessionMismatch { .. } | RefineError::MissingCreation | RefineError::ReplayMismatch { .. } => {
                (StatusCode::INTERNAL_SERVER_ERROR, "Internal")
            }
        };
        ApiError::new(status, code, e.to_string())
    }
}

impl From<LogError> for ApiError {
    fn from(e: LogError) -> Self {
        ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "Storage", e.to_string())
    }
}
