//! Detection scoring for a single target category.
//!
//! Besides the usual per-image evaluation ([`EvalMode::Standard`]), the
//! [`EvalMode::Modified`] mode pools every image in the dataset, including
//! images that contain only distractor classes, so false detections on
//! distractors lower the score.

mod ap;
mod geometry;
mod matching;
mod simulate;
mod summary;

use std::collections::HashSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::vectormath::VectorError;

pub use ap::{
    average_precision, mean_ap, mean_ap_with, EvalConfig, EvalReport, Interpolation, PrPoint,
    DEFAULT_IOU_THRESHOLDS,
};
pub use geometry::{iou, BBox};
pub use matching::{match_detections, MatchedDetection};
pub use simulate::{simulate_detections, BoxJitter};
pub use summary::{relative_improvement, summarize_runs, RunSummary};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MetricsError {
    #[error("invalid box [{x}, {y}, {w}, {h}]: width and height must be positive and finite")]
    InvalidBox { x: f64, y: f64, w: f64, h: f64 },
    #[error("detections and ground truth span several categories ({0:?} and {1:?})")]
    MixedCategories(String, String),
    #[error("IoU threshold {0} outside (0, 1]")]
    InvalidThreshold(f64),
    #[error("no IoU thresholds given")]
    NoThresholds,
    #[error("no ground-truth instances of {0:?} in the evaluated images")]
    NoGroundTruth(String),
    #[error("unknown image {0:?}")]
    UnknownImage(String),
    #[error("duplicate image id {0:?}")]
    DuplicateImage(String),
    #[error("score {0} outside [0, 1]")]
    InvalidScore(f64),
    #[error("baseline mAP must be positive, got {0}")]
    ZeroBaseline(f64),
    #[error("empty list of runs")]
    EmptyList,
    #[error("ground-truth instance {0} has no feature vector")]
    MissingFeature(usize),
    #[error(transparent)]
    Vector(#[from] VectorError),
}

/// Which images take part in an evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EvalMode {
    /// Every image, including those with no target instance.
    Modified,
    /// Only images with at least one target instance; detections elsewhere
    /// are discarded.
    Standard,
}

impl std::str::FromStr for EvalMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "modified" => Ok(Self::Modified),
            "standard" => Ok(Self::Standard),
            other => Err(format!("unknown evaluation mode {other:?}")),
        }
    }
}

impl std::fmt::Display for EvalMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Modified => "modified",
            Self::Standard => "standard",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImageInfo {
    pub id: String,
    #[serde(default)]
    pub width: Option<u32>,
    #[serde(default)]
    pub height: Option<u32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruthInstance {
    pub image_id: String,
    pub category: String,
    pub bbox: BBox,
    /// Appearance vector used by [`simulate_detections`]; absent for real data.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub feature: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Detection {
    pub image_id: String,
    pub category: String,
    pub bbox: BBox,
    pub score: f64,
}

impl Detection {
    pub fn new(
        image_id: impl Into<String>,
        category: impl Into<String>,
        bbox: BBox,
        score: f64,
    ) -> Result<Self, MetricsError> {
        if !(0.0..=1.0).contains(&score) {
            return Err(MetricsError::InvalidScore(score));
        }
        Ok(Self {
            image_id: image_id.into(),
            category: category.into(),
            bbox,
            score,
        })
    }
}

/// Images plus ground truth. Images without any target instance are
/// ordinary members: they are where distractor false positives live.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalDataset {
    images: Vec<ImageInfo>,
    ground_truth: Vec<GroundTruthInstance>,
}

impl EvalDataset {
    pub fn new(
        images: Vec<ImageInfo>,
        ground_truth: Vec<GroundTruthInstance>,
    ) -> Result<Self, MetricsError> {
        let mut ids = HashSet::with_capacity(images.len());
        for img in &images {
            if !ids.insert(img.id.as_str()) {
                return Err(MetricsError::DuplicateImage(img.id.clone()));
            }
        }
        if let Some(gt) = ground_truth.iter().find(|g| !ids.contains(g.image_id.as_str())) {
            return Err(MetricsError::UnknownImage(gt.image_id.clone()));
        }
        Ok(Self {
            images,
            ground_truth,
        })
    }

    pub fn images(&self) -> &[ImageInfo] {
        &self.images
    }

    pub fn ground_truth(&self) -> &[GroundTruthInstance] {
        &self.ground_truth
    }

    pub fn has_image(&self, id: &str) -> bool {
        self.images.iter().any(|i| i.id == id)
    }

    /// Number of instances of `category`.
    pub fn count(&self, category: &str) -> usize {
        self.ground_truth
            .iter()
            .filter(|g| g.category == category)
            .count()
    }
}

impl<'de> Deserialize<'de> for EvalDataset {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Raw {
            images: Vec<ImageInfo>,
            #[serde(default)]
            ground_truth: Vec<GroundTruthInstance>,
        }
        let raw = Raw::deserialize(d)?;
        EvalDataset::new(raw.images, raw.ground_truth).map_err(serde::de::Error::custom)
    }
}
