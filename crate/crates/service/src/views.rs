//! Response documents. Each is a pure function of engine state.

use classrefine_core::concepts::{top_k, ConceptDictionary, ConceptScore};
use classrefine_core::detmetrics::EvalReport;
use classrefine_core::rank::{extremes, Extremes, RankedClass, SimilarityReport};
use classrefine_core::refine::{ClassState, FeedbackAdjustment, IterationRecord, Session};
use classrefine_core::vectormath::AdjustmentWeights;
use classrefine_core::Embedding;
use serde::Serialize;
use sha2::{Digest, Sha256};

/// First 16 hex digits of the SHA-256 of the little-endian f64 values.
pub fn embedding_id(e: &Embedding) -> String {
    let mut h = Sha256::new();
    for v in e.as_slice() {
        h.update(v.to_le_bytes());
    }
    h.finalize().iter().take(8).map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassSummaryView {
    pub label: String,
    pub embedding_id: String,
    pub concepts: Vec<ConceptScore>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CreatedView {
    pub session_id: String,
    pub created_at: String,
    pub classes: Vec<ClassSummaryView>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IterationView {
    pub class: String,
    pub index: usize,
    pub embedding_id: String,
    pub embedding: Vec<f64>,
    pub concepts: Vec<ConceptScore>,
    pub adjustment: FeedbackAdjustment,
    pub eval: Option<EvalReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BaselineView {
    pub embedding_id: String,
    pub concepts: Vec<ConceptScore>,
    pub eval: Option<EvalReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassView {
    pub label: String,
    pub base_text: String,
    pub embedding_id: String,
    pub current_embedding: Vec<f64>,
    pub concepts: Vec<ConceptScore>,
    pub baseline: BaselineView,
    pub iterations: Vec<IterationView>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SessionView {
    pub session_id: String,
    pub created_at: String,
    pub weights: AdjustmentWeights,
    pub classes: Vec<ClassView>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassExtremes {
    pub label: String,
    pub most_similar: RankedClass,
    pub least_similar: RankedClass,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimilarityView {
    pub labels: Vec<String>,
    pub matrix: Vec<Vec<f64>>,
    pub rankings: Vec<Vec<RankedClass>>,
    pub extremes: Vec<ClassExtremes>,
}

pub fn created(session: &Session, dict: &ConceptDictionary, k: usize) -> CreatedView {
    CreatedView {
        session_id: session.id.to_string(),
        created_at: session.created_at.to_rfc3339(),
        classes: session
            .classes
            .iter()
            .map(|c| ClassSummaryView {
                label: c.definition.label.clone(),
                embedding_id: embedding_id(&c.definition.current_embedding),
                concepts: top_k(&c.baseline, dict, k),
            })
            .collect(),
    }
}

pub fn iteration(label: &str, it: &IterationRecord, dict: &ConceptDictionary, k: usize) -> IterationView {
    IterationView {
        class: label.to_owned(),
        index: it.index,
        embedding_id: embedding_id(&it.resulting_embedding),
        embedding: it.resulting_embedding.as_slice().to_vec(),
        concepts: top_k(&it.decomposition, dict, k),
        adjustment: it.adjustment.clone(),
        eval: it.eval.clone(),
    }
}

pub fn class(state: &ClassState, dict: &ConceptDictionary, k: usize) -> ClassView {
    let def = &state.definition;
    ClassView {
        label: def.label.clone(),
        base_text: def.base_text.clone(),
        embedding_id: embedding_id(&def.current_embedding),
        current_embedding: def.current_embedding.as_slice().to_vec(),
        concepts: top_k(state.latest_decomposition(), dict, k),
        baseline: BaselineView {
            embedding_id: embedding_id(&def.base_embedding),
            concepts: top_k(&state.baseline, dict, k),
            eval: state.baseline_eval.clone(),
        },
        iterations: state
            .iterations
            .iter()
            .map(|it| iteration(&def.label, it, dict, k))
            .collect(),
    }
}

pub fn session(session: &Session, dict: &ConceptDictionary, k: usize) -> SessionView {
    SessionView {
        session_id: session.id.to_string(),
        created_at: session.created_at.to_rfc3339(),
        weights: session.weights,
        classes: session.classes.iter().map(|c| class(c, dict, k)).collect(),
    }
}

pub fn similarity(report: SimilarityReport) -> SimilarityView {
    let extremes = report
        .labels
        .iter()
        .filter_map(|label| {
            let Extremes { most_similar, least_similar } = extremes(&report, label).ok()?;
            Some(ClassExtremes {
                label: label.clone(),
                most_similar,
                least_similar,
            })
        })
        .collect();
    SimilarityView {
        labels: report.labels,
        matrix: report.matrix,
        rankings: report.rankings,
        extremes,
    }
}
