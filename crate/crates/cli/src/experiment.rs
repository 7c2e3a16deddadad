//! Scripted replay of multi-user feedback experiments.

use std::fs;
use std::path::Path;
use std::sync::Arc;

use classrefine_core::concepts::{ConceptScore, DEFAULT_TOP_K};
use classrefine_core::detmetrics::{
    mean_ap, relative_improvement, simulate_detections, summarize_runs, BoxJitter, EvalDataset, EvalMode, EvalReport,
};
use classrefine_core::refine::{FeedbackAdjustment, RefineEngine};
use classrefine_core::store::EmbeddingStore;
use classrefine_core::{AdjustmentWeights, ConceptDictionary, DecomposeOptions, Embedding};
use serde::Serialize;

use crate::output::{self, fixed, Format};
use crate::script::{Script, ScriptIteration, UserLane};
use crate::CliError;

/// Detection counts are taken at the first IoU threshold.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Scored {
    pub map: f64,
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

impl From<&EvalReport> for Scored {
    fn from(r: &EvalReport) -> Self {
        Self {
            map: r.map,
            tp: r.tp[0],
            fp: r.fp[0],
            fn_: r.fn_[0],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunRow {
    pub user: u32,
    pub iteration: u32,
    #[serde(flatten)]
    pub score: Scored,
    pub concepts: Vec<ConceptScore>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryRow {
    /// 0 is the baseline.
    pub iteration: u32,
    pub mean: f64,
    pub standard_error: f64,
    pub n: usize,
    /// Percent versus the baseline mean; absent when the baseline mAP is 0.
    pub relative_improvement: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentReport {
    pub experiment: String,
    pub base: String,
    pub category: String,
    pub mode: EvalMode,
    pub iou_thresholds: Vec<f64>,
    pub score_floor: f64,
    pub weights: AdjustmentWeights,
    pub baseline: Scored,
    pub baseline_concepts: Vec<ConceptScore>,
    pub runs: Vec<RunRow>,
    pub summary: Vec<SummaryRow>,
}

struct Context<'a> {
    script: &'a Script,
    engine: &'a RefineEngine,
    store: &'a EmbeddingStore,
    dataset: &'a EvalDataset,
}

impl Context<'_> {
    fn evaluate(&self, query: &Embedding) -> Result<EvalReport, CliError> {
        let s = self.script;
        let dets = simulate_detections(self.dataset, query, &s.category, s.score_floor, BoxJitter::None)?;
        Ok(mean_ap(&dets, self.dataset, &s.category, &s.thresholds, s.mode)?)
    }

    fn run_lane(&self, lane: &UserLane) -> Result<Vec<RunRow>, CliError> {
        let s = self.script;
        let mut session = self.engine.create_session(&[&s.base], self.store, s.weights)?;
        let mut rows = Vec::with_capacity(lane.iterations.len());
        for it in &lane.iterations {
            let adjustment = adjustment(it, s.weights)
                .map_err(|e| CliError::data(format!("user {} iteration {}: {e}", lane.user, it.index)))?;
            let record = self
                .engine
                .apply_feedback(&mut session, &s.base, adjustment, self.store)
                .map_err(|e| with_context(e.into(), lane.user, it.index))?;
            let concepts = self.engine.top_concepts(&record.decomposition, DEFAULT_TOP_K);
            let report = self.evaluate(&record.resulting_embedding)?;
            rows.push(RunRow {
                user: lane.user,
                iteration: it.index,
                score: Scored::from(&report),
                concepts,
            });
        }
        Ok(rows)
    }
}

fn with_context(e: CliError, user: u32, iteration: u32) -> CliError {
    let wrap = |m: String| format!("user {user} iteration {iteration}: {m}");
    match e {
        CliError::Usage(m) => CliError::Usage(wrap(m)),
        CliError::Data(m) => CliError::Data(wrap(m)),
        CliError::Math(m) => CliError::Math(wrap(m)),
    }
}

fn adjustment(it: &ScriptIteration, weights: AdjustmentWeights) -> Result<FeedbackAdjustment, CliError> {
    if it.added.is_empty() && it.removed.is_empty() && it.unselected.is_empty() {
        return Ok(FeedbackAdjustment::probe(weights));
    }
    Ok(FeedbackAdjustment::new(
        it.added.clone(),
        it.removed.clone(),
        it.unselected.clone(),
        weights,
    )?)
}

/// Runs every user lane (concurrently) and aggregates per iteration.
pub fn run(
    script: &Script,
    store: &EmbeddingStore,
    dict: Arc<ConceptDictionary>,
    options: DecomposeOptions,
    dataset: &EvalDataset,
) -> Result<ExperimentReport, CliError> {
    let engine = RefineEngine::new(dict, options);
    let ctx = Context {
        script,
        engine: &engine,
        store,
        dataset,
    };

    let base = engine.create_session(&[&script.base], store, script.weights)?;
    let base_state = base.class(&script.base)?;
    let baseline_report = ctx.evaluate(&base_state.definition.base_embedding)?;
    let baseline = Scored::from(&baseline_report);
    let baseline_concepts = engine.top_concepts(&base_state.baseline, DEFAULT_TOP_K);

    let lanes: Vec<Result<Vec<RunRow>, CliError>> = std::thread::scope(|scope| {
        let handles: Vec<_> = script
            .users
            .iter()
            .map(|lane| {
                let ctx = &ctx;
                scope.spawn(move || ctx.run_lane(lane))
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("experiment lane panicked"))
            .collect()
    });
    let mut runs = Vec::new();
    for lane in lanes {
        runs.extend(lane?);
    }
    runs.sort_by_key(|r| (r.user, r.iteration));

    let mut summary = vec![SummaryRow {
        iteration: 0,
        mean: baseline.map,
        standard_error: 0.0,
        n: 1,
        relative_improvement: relative_improvement(baseline.map, baseline.map).ok(),
    }];
    let last = runs.iter().map(|r| r.iteration).max().unwrap_or(0);
    for iteration in 1..=last {
        let maps: Vec<f64> = runs
            .iter()
            .filter(|r| r.iteration == iteration)
            .map(|r| r.score.map)
            .collect();
        let s = summarize_runs(&maps)?;
        summary.push(SummaryRow {
            iteration,
            mean: s.mean,
            standard_error: s.standard_error,
            n: s.n,
            relative_improvement: relative_improvement(baseline.map, s.mean).ok(),
        });
    }

    Ok(ExperimentReport {
        experiment: script.name.clone(),
        base: script.base.clone(),
        category: script.category.clone(),
        mode: script.mode,
        iou_thresholds: script.thresholds.clone(),
        score_floor: script.score_floor,
        weights: script.weights,
        baseline,
        baseline_concepts,
        runs,
        summary,
    })
}

#[derive(Serialize)]
struct RunCsv {
    user: u32,
    iteration: u32,
    map: f64,
    tp: usize,
    fp: usize,
    #[serde(rename = "fn")]
    fn_: usize,
}

fn csv_bytes<T: Serialize>(rows: impl IntoIterator<Item = T>) -> Result<Vec<u8>, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in rows {
        w.serialize(row).map_err(|e| CliError::Data(e.to_string()))?;
    }
    w.into_inner().map_err(|e| CliError::Data(e.to_string()))
}

/// Writes `runs.csv`, `summary.csv` and `report.json` into `dir`.
pub fn write_outputs(report: &ExperimentReport, dir: &Path) -> Result<(), CliError> {
    let io = |e: std::io::Error| CliError::data(format!("{}: {e}", dir.display()));
    fs::create_dir_all(dir).map_err(io)?;
    let runs = csv_bytes(report.runs.iter().map(|r| RunCsv {
        user: r.user,
        iteration: r.iteration,
        map: r.score.map,
        tp: r.score.tp,
        fp: r.score.fp,
        fn_: r.score.fn_,
    }))?;
    fs::write(dir.join("runs.csv"), runs).map_err(io)?;
    fs::write(dir.join("summary.csv"), csv_bytes(&report.summary)?).map_err(io)?;
    fs::write(dir.join("report.json"), output::json(report)?).map_err(io)?;
    Ok(())
}

pub fn render(report: &ExperimentReport, format: Format) -> Result<String, CliError> {
    if format == Format::Json {
        return output::json(report);
    }
    let rows: Vec<Vec<String>> = report
        .summary
        .iter()
        .map(|s| {
            vec![
                if s.iteration == 0 { "baseline".to_owned() } else { s.iteration.to_string() },
                fixed(s.mean),
                fixed(s.standard_error),
                s.n.to_string(),
                s.relative_improvement.map_or_else(|| "n/a".to_owned(), |p| format!("{p:+.1}%")),
            ]
        })
        .collect();
    let mut out = String::new();
    if !report.experiment.is_empty() {
        out.push_str(&format!("experiment: {}\n", report.experiment));
    }
    out.push_str(&format!(
        "base: {}\ncategory: {}\nmode: {}\n\n",
        report.base, report.category, report.mode
    ));
    out.push_str(&output::table(&["iteration", "mean_map", "std_error", "n", "improvement"], &rows));
    Ok(out)
}
