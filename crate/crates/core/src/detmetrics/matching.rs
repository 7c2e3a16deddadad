use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::{iou, Detection, GroundTruthInstance, MetricsError};

/// Outcome for one detection, in processing order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MatchedDetection {
    /// Index into the input detection slice.
    pub detection: usize,
    pub score: f64,
    pub true_positive: bool,
    /// Index into the input ground-truth slice when matched.
    pub ground_truth: Option<usize>,
}

pub(crate) fn check_threshold(t: f64) -> Result<(), MetricsError> {
    if t > 0.0 && t <= 1.0 {
        Ok(())
    } else {
        Err(MetricsError::InvalidThreshold(t))
    }
}

/// Processing order: score descending, then image id, then box position
/// ascending. Total, so input order never matters.
pub(crate) fn processing_order(dets: &[Detection]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..dets.len()).collect();
    order.sort_by(|&a, &b| {
        let (da, db) = (&dets[a], &dets[b]);
        db.score
            .total_cmp(&da.score)
            .then_with(|| da.image_id.cmp(&db.image_id))
            .then_with(|| da.bbox.total_cmp(&db.bbox))
    });
    order
}

/// Greedy matching of single-category detections to ground truth.
///
/// Each detection, in [`processing_order`], claims the still-unmatched
/// ground-truth box in its image with the highest IoU at or above
/// `iou_threshold`; otherwise it is a false positive.
pub fn match_detections(
    dets: &[Detection],
    gts: &[GroundTruthInstance],
    iou_threshold: f64,
) -> Result<Vec<MatchedDetection>, MetricsError> {
    check_threshold(iou_threshold)?;
    let mut categories = dets
        .iter()
        .map(|d| d.category.as_str())
        .chain(gts.iter().map(|g| g.category.as_str()));
    if let Some(first) = categories.next() {
        if let Some(other) = categories.find(|c| *c != first) {
            return Err(MetricsError::MixedCategories(first.into(), other.into()));
        }
    }

    let mut by_image: HashMap<&str, Vec<usize>> = HashMap::new();
    for (i, g) in gts.iter().enumerate() {
        by_image.entry(g.image_id.as_str()).or_default().push(i);
    }
    let mut taken = vec![false; gts.len()];
    let mut out = Vec::with_capacity(dets.len());
    for di in processing_order(dets) {
        let det = &dets[di];
        let mut best: Option<(usize, f64)> = None;
        for &gi in by_image.get(det.image_id.as_str()).into_iter().flatten() {
            if taken[gi] {
                continue;
            }
            let overlap = iou(&det.bbox, &gts[gi].bbox);
            if overlap >= iou_threshold && best.is_none_or(|(_, b)| overlap > b) {
                best = Some((gi, overlap));
            }
        }
        if let Some((gi, _)) = best {
            taken[gi] = true;
        }
        out.push(MatchedDetection {
            detection: di,
            score: det.score,
            true_positive: best.is_some(),
            ground_truth: best.map(|(gi, _)| gi),
        });
    }
    Ok(out)
}
