//! One function per subcommand; each returns what the command prints.

use std::collections::BTreeSet;
use std::path::PathBuf;
use std::sync::Arc;

use clap::{Args, ValueEnum};
use classrefine_core::concepts::{ConceptScore, DEFAULT_TOP_K};
use classrefine_core::detmetrics::{mean_ap_with, EvalConfig, EvalMode, Interpolation, DEFAULT_IOU_THRESHOLDS};
use classrefine_core::rank::{extremes, pairwise_similarity};
use classrefine_core::refine::{FeedbackAdjustment, RefineEngine};
use classrefine_core::store::{
    load_detections, load_dictionary, load_ground_truth, load_store, save_definition, EmbeddingSource,
    EmbeddingStore,
};
use classrefine_core::{AdjustmentWeights, ConceptDictionary, DecomposeOptions};
use serde::Serialize;

use crate::experiment;
use crate::output::{self, fixed, Format};
use crate::script;
use crate::CliError;

/// Inputs shared by the commands that embed text.
#[derive(Debug, Clone, Args)]
pub struct Sources {
    /// Embedding store file (binary or tab-separated text).
    #[arg(long)]
    pub store: PathBuf,
    /// Concept dictionary file.
    #[arg(long)]
    pub dict: PathBuf,
    /// Sparsity penalty of the concept decomposition.
    #[arg(long, default_value_t = DecomposeOptions::default().sparsity_penalty)]
    pub penalty: f64,
}

impl Sources {
    fn load(&self) -> Result<(EmbeddingStore, Arc<ConceptDictionary>, DecomposeOptions), CliError> {
        let opts = DecomposeOptions {
            sparsity_penalty: self.penalty,
            ..DecomposeOptions::default()
        };
        if !(opts.sparsity_penalty.is_finite() && opts.sparsity_penalty >= 0.0) {
            return Err(CliError::Usage(format!("invalid --penalty {}", self.penalty)));
        }
        let store = load_store(&self.store)?;
        let dict = load_dictionary(&self.dict)?;
        if store.dim() != dict.dim() {
            return Err(CliError::data(format!(
                "store dimension {} does not match dictionary dimension {}",
                store.dim(),
                dict.dim()
            )));
        }
        Ok((store, Arc::new(dict), opts))
    }
}

#[derive(Debug, Clone, Args)]
pub struct DecomposeArgs {
    #[command(flatten)]
    pub sources: Sources,
    #[arg(long)]
    pub text: String,
    #[arg(long, default_value_t = DEFAULT_TOP_K)]
    pub top_k: usize,
}

#[derive(Serialize)]
struct DecomposeOut<'a> {
    text: &'a str,
    sparsity_penalty: f64,
    residual_norm: f64,
    sweeps: usize,
    concepts: Vec<ConceptScore>,
}

fn concept_table(concepts: &[ConceptScore]) -> String {
    let rows: Vec<Vec<String>> = concepts
        .iter()
        .map(|c| vec![c.label.clone(), fixed(c.weight)])
        .collect();
    output::table(&["concept", "weight"], &rows)
}

pub fn decompose(args: &DecomposeArgs, format: Format) -> Result<String, CliError> {
    let (store, dict, opts) = args.sources.load()?;
    let engine = RefineEngine::new(dict, opts);
    let e = store.embed(&args.text)?;
    let dec = engine.decompose(&e)?;
    let out = DecomposeOut {
        text: args.text.trim(),
        sparsity_penalty: dec.sparsity_penalty,
        residual_norm: dec.residual_norm,
        sweeps: dec.sweeps,
        concepts: engine.top_concepts(&dec, args.top_k),
    };
    match format {
        Format::Json => output::json(&out),
        Format::Table => Ok(format!(
            "text: {}\nresidual_norm: {}\n\n{}",
            out.text,
            fixed(out.residual_norm),
            concept_table(&out.concepts)
        )),
    }
}

#[derive(Debug, Clone, Args)]
pub struct RefineArgs {
    #[command(flatten)]
    pub sources: Sources,
    /// Base class text.
    #[arg(long)]
    pub base: String,
    /// Text whose embedding is added; repeatable.
    #[arg(long = "add", num_args = 1..)]
    pub added: Vec<String>,
    /// Text whose embedding is subtracted; repeatable.
    #[arg(long = "sub", num_args = 1..)]
    pub removed: Vec<String>,
    /// Concept label to remove from the base decomposition; repeatable.
    #[arg(long = "unselect", num_args = 1..)]
    pub unselected: Vec<String>,
    #[arg(long, default_value_t = 0.3)]
    pub lambda_add: f64,
    #[arg(long, default_value_t = 0.3)]
    pub lambda_sub: f64,
    #[arg(long, default_value_t = DEFAULT_TOP_K)]
    pub top_k: usize,
    /// Where to write the exported definition.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Serialize)]
struct RefineOut<'a> {
    base: &'a str,
    out: String,
    before: Vec<ConceptScore>,
    after: Vec<ConceptScore>,
    embedding: Vec<f32>,
}

pub fn refine(args: &RefineArgs, format: Format) -> Result<String, CliError> {
    let weights = AdjustmentWeights::new(args.lambda_add, args.lambda_sub).map_err(|e| CliError::Usage(e.to_string()))?;
    let (store, dict, opts) = args.sources.load()?;
    let engine = RefineEngine::new(dict, opts);
    let mut session = engine.create_session(&[&args.base], &store, weights)?;
    let label = session.labels().next().expect("one class").to_owned();
    let before = engine.top_concepts(&session.class(&label)?.baseline, args.top_k);
    if !(args.added.is_empty() && args.removed.is_empty() && args.unselected.is_empty()) {
        let unselected: BTreeSet<String> = args.unselected.iter().map(|s| s.trim().to_owned()).collect();
        let adj = FeedbackAdjustment::new(args.added.clone(), args.removed.clone(), unselected, weights)?;
        engine.apply_feedback(&mut session, &label, adj, &store)?;
    }
    let after = engine.top_concepts(session.class(&label)?.latest_decomposition(), args.top_k);
    let record = engine.export_definition(&mut session, &label)?;
    save_definition(&record, &args.out)?;
    let out = RefineOut {
        base: &label,
        out: args.out.display().to_string(),
        before,
        after,
        embedding: record.embedding,
    };
    match format {
        Format::Json => output::json(&out),
        Format::Table => Ok(format!(
            "base: {}\nwrote: {}\n\nbefore\n{}\nafter\n{}",
            out.base,
            out.out,
            concept_table(&out.before),
            concept_table(&out.after)
        )),
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, ValueEnum)]
pub enum InterpolationArg {
    #[default]
    #[value(name = "101-point")]
    Point101,
    AllPoint,
}

impl From<InterpolationArg> for Interpolation {
    fn from(a: InterpolationArg) -> Self {
        match a {
            InterpolationArg::Point101 => Interpolation::Point101,
            InterpolationArg::AllPoint => Interpolation::AllPoint,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    #[default]
    Modified,
    Standard,
}

impl From<ModeArg> for EvalMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Modified => EvalMode::Modified,
            ModeArg::Standard => EvalMode::Standard,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct EvalArgs {
    /// Ground-truth JSON.
    #[arg(long)]
    pub gt: PathBuf,
    /// Detections JSON.
    #[arg(long)]
    pub dets: PathBuf,
    #[arg(long)]
    pub category: String,
    #[arg(long, value_enum, default_value_t)]
    pub mode: ModeArg,
    #[arg(long = "iou-thresholds", num_args = 1.., value_delimiter = ',')]
    pub iou_thresholds: Vec<f64>,
    #[arg(long, value_enum, default_value_t)]
    pub interpolation: InterpolationArg,
}

pub fn eval(args: &EvalArgs, format: Format) -> Result<String, CliError> {
    let config = EvalConfig {
        iou_thresholds: if args.iou_thresholds.is_empty() {
            DEFAULT_IOU_THRESHOLDS.to_vec()
        } else {
            args.iou_thresholds.clone()
        },
        interpolation: args.interpolation.into(),
    };
    let dataset = load_ground_truth(&args.gt)?;
    let dets = load_detections(&args.dets, Some(&dataset))?;
    let report = mean_ap_with(&dets, &dataset, &args.category, &config, args.mode.into())?;
    match format {
        Format::Json => output::json(&report),
        Format::Table => {
            let rows: Vec<Vec<String>> = (0..report.iou_thresholds.len())
                .map(|i| {
                    vec![
                        format!("{:.2}", report.iou_thresholds[i]),
                        fixed(report.ap_per_threshold[i]),
                        report.tp[i].to_string(),
                        report.fp[i].to_string(),
                        report.fn_[i].to_string(),
                    ]
                })
                .collect();
            Ok(format!(
                "category: {}\nmode: {}\nnum_gt: {}\nmap: {}\n\n{}",
                report.category,
                report.mode,
                report.num_gt,
                fixed(report.map),
                output::table(&["iou", "ap", "tp", "fp", "fn"], &rows)
            ))
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct ExperimentArgs {
    #[command(flatten)]
    pub sources: Sources,
    /// Experiment script.
    #[arg(long)]
    pub script: PathBuf,
    /// Ground-truth JSON whose annotations carry feature vectors.
    #[arg(long)]
    pub dataset: PathBuf,
    #[arg(long)]
    pub out_dir: PathBuf,
}

pub fn experiment(args: &ExperimentArgs, format: Format) -> Result<String, CliError> {
    let text = std::fs::read_to_string(&args.script)
        .map_err(|e| CliError::data(format!("{}: {e}", args.script.display())))?;
    let script = script::parse(&text)?;
    let (store, dict, opts) = args.sources.load()?;
    let dataset = load_ground_truth(&args.dataset)?;
    let report = experiment::run(&script, &store, dict, opts, &dataset)?;
    experiment::write_outputs(&report, &args.out_dir)?;
    experiment::render(&report, format)
}

#[derive(Debug, Clone, Args)]
pub struct SimilarityArgs {
    #[command(flatten)]
    pub sources: Sources,
    /// Class text; give at least two.
    #[arg(long = "class", num_args = 1.., required = true)]
    pub classes: Vec<String>,
}

#[derive(Serialize)]
struct SimilarityOut {
    labels: Vec<String>,
    matrix: Vec<Vec<f64>>,
    extremes: Vec<ExtremeRow>,
}

#[derive(Serialize)]
struct ExtremeRow {
    label: String,
    most_similar: String,
    most_similarity: f64,
    least_similar: String,
    least_similarity: f64,
}

pub fn similarity(args: &SimilarityArgs, format: Format) -> Result<String, CliError> {
    let (store, _, _) = args.sources.load()?;
    let labels: Vec<String> = args.classes.iter().map(|c| c.trim().to_owned()).collect();
    let embeddings = labels
        .iter()
        .map(|l| store.embed(l))
        .collect::<Result<Vec<_>, _>>()?;
    let report = pairwise_similarity(labels.iter().map(String::as_str).zip(&embeddings))?;
    let extremes = report
        .labels
        .iter()
        .map(|l| {
            let x = extremes(&report, l)?;
            Ok(ExtremeRow {
                label: l.clone(),
                most_similar: x.most_similar.label,
                most_similarity: x.most_similar.similarity,
                least_similar: x.least_similar.label,
                least_similarity: x.least_similar.similarity,
            })
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    let out = SimilarityOut {
        labels: report.labels,
        matrix: report.matrix,
        extremes,
    };
    match format {
        Format::Json => output::json(&out),
        Format::Table => {
            let mut headers = vec![""];
            headers.extend(out.labels.iter().map(String::as_str));
            let rows: Vec<Vec<String>> = out
                .labels
                .iter()
                .zip(&out.matrix)
                .map(|(l, row)| std::iter::once(l.clone()).chain(row.iter().map(|&v| fixed(v))).collect())
                .collect();
            let ext: Vec<Vec<String>> = out
                .extremes
                .iter()
                .map(|x| {
                    vec![
                        x.label.clone(),
                        format!("{} ({})", x.most_similar, fixed(x.most_similarity)),
                        format!("{} ({})", x.least_similar, fixed(x.least_similarity)),
                    ]
                })
                .collect();
            Ok(format!(
                "{}\n{}",
                output::table(&headers, &rows),
                output::table(&["class", "most_similar", "least_similar"], &ext)
            ))
        }
    }
}
