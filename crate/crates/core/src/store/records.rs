//! Ground-truth and detection files.
//!
//! Both are JSON and parsed by field name. Ground truth:
//!
//! ```json
//! {"images": [{"id": "img1", "width": 640, "height": 480}],
//!  "annotations": [{"image_id": "img1", "category": "fighter jet",
//!                   "bbox": [x, y, w, h], "feature": [..optional..]}]}
//! ```
//!
//! Detections follow the COCO results layout, either as a bare array or
//! under a `detections` key:
//!
//! ```json
//! [{"image_id": "img1", "category": "fighter jet", "bbox": [x, y, w, h], "score": 0.9}]
//! ```
//!
//! Image ids may be strings or integers; integers are read as their decimal
//! string.

use std::path::Path;

use serde::Deserialize;

use super::StoreError;
use crate::detmetrics::{BBox, Detection, EvalDataset, GroundTruthInstance, ImageInfo, MetricsError};

#[derive(Deserialize)]
#[serde(untagged)]
enum ImageId {
    Text(String),
    Number(u64),
}

impl ImageId {
    fn into_string(self) -> String {
        match self {
            ImageId::Text(s) => s,
            ImageId::Number(n) => n.to_string(),
        }
    }
}

#[derive(Deserialize)]
struct RawImage {
    id: ImageId,
    #[serde(default)]
    width: Option<u32>,
    #[serde(default)]
    height: Option<u32>,
}

#[derive(Deserialize)]
struct RawAnnotation {
    image_id: ImageId,
    category: String,
    bbox: [f64; 4],
    #[serde(default)]
    feature: Option<Vec<f64>>,
}

#[derive(Deserialize)]
struct RawGroundTruth {
    images: Vec<RawImage>,
    #[serde(default)]
    annotations: Vec<RawAnnotation>,
}

#[derive(Deserialize)]
struct RawDetection {
    image_id: ImageId,
    category: String,
    bbox: [f64; 4],
    score: f64,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum RawDetections {
    Bare(Vec<RawDetection>),
    Wrapped { detections: Vec<RawDetection> },
}

fn bbox([x, y, w, h]: [f64; 4]) -> Result<BBox, StoreError> {
    Ok(BBox::new(x, y, w, h)?)
}

pub fn parse_ground_truth(text: &str) -> Result<EvalDataset, StoreError> {
    let raw: RawGroundTruth =
        serde_json::from_str(text).map_err(|e| StoreError::parse(format!("ground truth: {e}")))?;
    let images = raw
        .images
        .into_iter()
        .map(|i| ImageInfo {
            id: i.id.into_string(),
            width: i.width,
            height: i.height,
        })
        .collect();
    let gts = raw
        .annotations
        .into_iter()
        .map(|a| {
            Ok(GroundTruthInstance {
                image_id: a.image_id.into_string(),
                category: a.category,
                bbox: bbox(a.bbox)?,
                feature: a.feature,
            })
        })
        .collect::<Result<Vec<_>, StoreError>>()?;
    Ok(EvalDataset::new(images, gts)?)
}

/// Parses detections; with a dataset, every image id must be registered.
pub fn parse_detections(text: &str, dataset: Option<&EvalDataset>) -> Result<Vec<Detection>, StoreError> {
    let raw: RawDetections =
        serde_json::from_str(text).map_err(|e| StoreError::parse(format!("detections: {e}")))?;
    let raw = match raw {
        RawDetections::Bare(v) | RawDetections::Wrapped { detections: v } => v,
    };
    raw.into_iter()
        .map(|d| {
            if !(0.0..=1.0).contains(&d.score) {
                return Err(StoreError::parse(format!("detection score {} outside [0, 1]", d.score)));
            }
            let image_id = d.image_id.into_string();
            if let Some(ds) = dataset {
                if !ds.has_image(&image_id) {
                    return Err(MetricsError::UnknownImage(image_id).into());
                }
            }
            Ok(Detection::new(image_id, d.category, bbox(d.bbox)?, d.score)?)
        })
        .collect()
}

pub fn load_ground_truth(path: impl AsRef<Path>) -> Result<EvalDataset, StoreError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| StoreError::io(path, e))?;
    parse_ground_truth(&text)
}

pub fn load_detections(path: impl AsRef<Path>, dataset: Option<&EvalDataset>) -> Result<Vec<Detection>, StoreError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| StoreError::io(path, e))?;
    parse_detections(&text, dataset)
}
