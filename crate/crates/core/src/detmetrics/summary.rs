use serde::{Deserialize, Serialize};

use super::MetricsError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub mean: f64,
    /// Sample standard deviation (n - 1 denominator) over sqrt(n).
    pub standard_error: f64,
    pub n: usize,
}

/// Percent change from `baseline` to `new`, rounded to one decimal.
pub fn relative_improvement(baseline: f64, new: f64) -> Result<f64, MetricsError> {
    if !(baseline.is_finite() && baseline > 0.0) {
        return Err(MetricsError::ZeroBaseline(baseline));
    }
    let pct = 100.0 * (new - baseline) / baseline;
    Ok((pct * 10.0).round() / 10.0)
}

/// Mean and standard error of per-user results.
///
/// A single run, or runs that are all identical, have a standard error of
/// exactly zero.
pub fn summarize_runs(values: &[f64]) -> Result<RunSummary, MetricsError> {
    let first = *values.first().ok_or(MetricsError::EmptyList)?;
    let n = values.len();
    if values.iter().all(|v| v.to_bits() == first.to_bits()) {
        return Ok(RunSummary {
            mean: first,
            standard_error: 0.0,
            n,
        });
    }
    let nf = n as f64;
    let mean = values.iter().sum::<f64>() / nf;
    let ss: f64 = values.iter().map(|v| (v - mean).powi(2)).sum();
    let sd = (ss / (nf - 1.0)).sqrt();
    Ok(RunSummary {
        mean,
        standard_error: sd / nf.sqrt(),
        n,
    })
}
