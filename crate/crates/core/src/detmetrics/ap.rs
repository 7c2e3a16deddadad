use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use super::matching::{check_threshold, match_detections};
use super::{Detection, EvalDataset, EvalMode, GroundTruthInstance, MetricsError};

/// IoU thresholds 0.50, 0.55, ..., 0.95.
pub const DEFAULT_IOU_THRESHOLDS: [f64; 10] = [0.5, 0.55, 0.6, 0.65, 0.7, 0.75, 0.8, 0.85, 0.9, 0.95];

/// How the precision/recall curve is integrated.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Interpolation {
    /// Mean of the interpolated precision at recall 0, 0.01, ..., 1.
    #[default]
    #[serde(rename = "101-point")]
    Point101,
    /// Area under the monotone precision envelope.
    AllPoint,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalConfig {
    pub iou_thresholds: Vec<f64>,
    #[serde(default)]
    pub interpolation: Interpolation,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            iou_thresholds: DEFAULT_IOU_THRESHOLDS.to_vec(),
            interpolation: Interpolation::Point101,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrPoint {
    pub score: f64,
    pub recall: f64,
    pub precision: f64,
}

/// Result of [`mean_ap`]. Per-threshold vectors are aligned with
/// `iou_thresholds`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub mode: EvalMode,
    pub category: String,
    pub interpolation: Interpolation,
    pub iou_thresholds: Vec<f64>,
    pub ap_per_threshold: Vec<f64>,
    pub map: f64,
    pub tp: Vec<usize>,
    pub fp: Vec<usize>,
    #[serde(rename = "fn")]
    pub fn_: Vec<usize>,
    /// Target instances in the evaluated images (the recall denominator).
    pub num_gt: usize,
    pub pr_curves: Vec<Vec<PrPoint>>,
}

struct Scope<'a> {
    dets: Vec<Detection>,
    gts: Vec<GroundTruthInstance>,
    category: &'a str,
}

fn scope<'a>(
    dets: &[Detection],
    dataset: &EvalDataset,
    category: &'a str,
    mode: EvalMode,
) -> Result<Scope<'a>, MetricsError> {
    let positive_images: HashSet<&str> = dataset
        .ground_truth()
        .iter()
        .filter(|g| g.category == category)
        .map(|g| g.image_id.as_str())
        .collect();
    let mut kept = Vec::new();
    for d in dets.iter().filter(|d| d.category == category) {
        if !dataset.has_image(&d.image_id) {
            return Err(MetricsError::UnknownImage(d.image_id.clone()));
        }
        if mode == EvalMode::Modified || positive_images.contains(d.image_id.as_str()) {
            kept.push(d.clone());
        }
    }
    let gts: Vec<GroundTruthInstance> = dataset
        .ground_truth()
        .iter()
        .filter(|g| g.category == category)
        .cloned()
        .collect();
    if gts.is_empty() {
        return Err(MetricsError::NoGroundTruth(category.to_owned()));
    }
    Ok(Scope {
        dets: kept,
        gts,
        category,
    })
}

struct ThresholdResult {
    ap: f64,
    tp: usize,
    fp: usize,
    curve: Vec<PrPoint>,
}

fn integrate(curve: &[PrPoint], interpolation: Interpolation) -> f64 {
    // envelope[k] = max precision at any point from k onward
    let mut envelope: Vec<f64> = curve.iter().map(|p| p.precision).collect();
    for k in (0..envelope.len().saturating_sub(1)).rev() {
        envelope[k] = envelope[k].max(envelope[k + 1]);
    }
    match interpolation {
        Interpolation::Point101 => {
            let mut k = 0;
            let mut sum = 0.0;
            for step in 0..=100 {
                let r = step as f64 / 100.0;
                while k < curve.len() && curve[k].recall < r {
                    k += 1;
                }
                if k < curve.len() {
                    sum += envelope[k];
                }
            }
            sum / 101.0
        }
        Interpolation::AllPoint => {
            let mut prev_recall = 0.0;
            let mut area = 0.0;
            for (p, env) in curve.iter().zip(&envelope) {
                area += (p.recall - prev_recall) * env;
                prev_recall = p.recall;
            }
            area
        }
    }
}

fn evaluate_threshold(
    scope: &Scope<'_>,
    iou_threshold: f64,
    interpolation: Interpolation,
) -> Result<ThresholdResult, MetricsError> {
    let matches = match_detections(&scope.dets, &scope.gts, iou_threshold)?;
    let n_gt = scope.gts.len() as f64;
    let (mut tp, mut fp) = (0usize, 0usize);
    let curve: Vec<PrPoint> = matches
        .iter()
        .map(|m| {
            if m.true_positive {
                tp += 1;
            } else {
                fp += 1;
            }
            PrPoint {
                score: m.score,
                recall: tp as f64 / n_gt,
                precision: tp as f64 / (tp + fp) as f64,
            }
        })
        .collect();
    let ap = integrate(&curve, interpolation).clamp(0.0, 1.0);
    Ok(ThresholdResult { ap, tp, fp, curve })
}

/// AP at one IoU threshold with 101-point interpolation.
pub fn average_precision(
    dets: &[Detection],
    dataset: &EvalDataset,
    category: &str,
    iou_threshold: f64,
    mode: EvalMode,
) -> Result<f64, MetricsError> {
    check_threshold(iou_threshold)?;
    let scope = scope(dets, dataset, category, mode)?;
    Ok(evaluate_threshold(&scope, iou_threshold, Interpolation::Point101)?.ap)
}

/// Mean AP over `thresholds` with 101-point interpolation.
pub fn mean_ap(
    dets: &[Detection],
    dataset: &EvalDataset,
    category: &str,
    thresholds: &[f64],
    mode: EvalMode,
) -> Result<EvalReport, MetricsError> {
    let config = EvalConfig {
        iou_thresholds: thresholds.to_vec(),
        interpolation: Interpolation::Point101,
    };
    mean_ap_with(dets, dataset, category, &config, mode)
}

pub fn mean_ap_with(
    dets: &[Detection],
    dataset: &EvalDataset,
    category: &str,
    config: &EvalConfig,
    mode: EvalMode,
) -> Result<EvalReport, MetricsError> {
    if config.iou_thresholds.is_empty() {
        return Err(MetricsError::NoThresholds);
    }
    for &t in &config.iou_thresholds {
        check_threshold(t)?;
    }
    let scope = scope(dets, dataset, category, mode)?;
    let mut report = EvalReport {
        mode,
        category: scope.category.to_owned(),
        interpolation: config.interpolation,
        iou_thresholds: config.iou_thresholds.clone(),
        ap_per_threshold: Vec::new(),
        map: 0.0,
        tp: Vec::new(),
        fp: Vec::new(),
        fn_: Vec::new(),
        num_gt: scope.gts.len(),
        pr_curves: Vec::new(),
    };
    for &t in &config.iou_thresholds {
        let r = evaluate_threshold(&scope, t, config.interpolation)?;
        report.ap_per_threshold.push(r.ap);
        report.tp.push(r.tp);
        report.fp.push(r.fp);
        report.fn_.push(scope.gts.len() - r.tp);
        report.pr_curves.push(r.curve);
    }
    report.map = report.ap_per_threshold.iter().sum::<f64>() / report.ap_per_threshold.len() as f64;
    Ok(report)
}
