use serde::{Deserialize, Serialize};

use super::{BBox, Detection, EvalDataset, MetricsError};
use crate::vectormath::{cosine_similarity, Embedding};

/// Deterministic box perturbation applied to simulated detections.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BoxJitter {
    /// Detections reuse the ground-truth box.
    #[default]
    None,
    /// Shift the box right and down by `fraction` of its width and height.
    /// IoU with the source box becomes `(1-f)^2 / (2 - (1-f)^2)`.
    Shift { fraction: f64 },
}

impl BoxJitter {
    fn apply(&self, b: &BBox) -> Result<BBox, MetricsError> {
        match *self {
            BoxJitter::None => Ok(*b),
            BoxJitter::Shift { fraction } => BBox::new(
                b.x() + fraction * b.w(),
                b.y() + fraction * b.h(),
                b.w(),
                b.h(),
            ),
        }
    }
}

/// Stand-in open-vocabulary detector for synthetic datasets.
///
/// Every ground-truth instance, of any category, whose feature vector has
/// cosine similarity of at least `score_floor` with `query` yields one
/// detection labeled `category`, scored `(cos + 1) / 2`. Distractor
/// instances that pass the floor therefore become false positives.
pub fn simulate_detections(
    dataset: &EvalDataset,
    query: &Embedding,
    category: &str,
    score_floor: f64,
    jitter: BoxJitter,
) -> Result<Vec<Detection>, MetricsError> {
    let mut out = Vec::new();
    for (i, gt) in dataset.ground_truth().iter().enumerate() {
        let feature = gt.feature.as_ref().ok_or(MetricsError::MissingFeature(i))?;
        let feature = Embedding::new(feature.clone())?;
        let cos = cosine_similarity(query, &feature)?;
        if cos >= score_floor {
            let score = ((cos + 1.0) / 2.0).clamp(0.0, 1.0);
            out.push(Detection::new(
                gt.image_id.clone(),
                category,
                jitter.apply(&gt.bbox)?,
                score,
            )?);
        }
    }
    Ok(out)
}
