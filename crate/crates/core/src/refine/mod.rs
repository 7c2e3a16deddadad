//! Iterative feedback sessions.
//!
//! A session holds one or more class definitions. Each feedback round adds
//! and subtracts description embeddings, then removes unselected concepts,
//! always relative to the class's current embedding. Every state change is
//! an [`SessionEvent`]; a session is exactly the fold of its events, which is
//! what [`RefineEngine::replay`] and the on-disk [`EventLog`] rely on.

mod log;

use std::collections::BTreeSet;
use std::sync::Arc;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;
use uuid::Uuid;

use crate::concepts::{self, ConceptDictionary, ConceptError, ConceptScore, DecomposeOptions, SparseDecomposition};
use crate::detmetrics::EvalReport;
use crate::rank::{self, RankError, SimilarityReport};
use crate::store::{DefinitionRecord, EmbeddingSource, StoreError};
use crate::vectormath::{self, AdjustmentWeights, Embedding, VectorError};

pub use log::{read_events, EventLog, LogError};

#[derive(Debug, Error)]
pub enum RefineError {
    #[error("a session needs at least one class")]
    EmptyClassList,
    #[error("duplicate class label {0:?}")]
    DuplicateLabel(String),
    #[error("unknown class {0:?}")]
    UnknownClass(String),
    #[error("nothing to undo for class {0:?}")]
    NothingToUndo(String),
    #[error("feedback adjustment is empty; mark it as a probe to apply a no-op round")]
    EmptyAdjustment,
    #[error("empty text in feedback adjustment")]
    EmptyText,
    #[error("embedding unavailable: {0}")]
    EmbeddingUnavailable(#[from] StoreError),
    #[error(transparent)]
    Concept(#[from] ConceptError),
    #[error(transparent)]
    Vector(#[from] VectorError),
    #[error(transparent)]
    Rank(#[from] RankError),
    #[error("event belongs to session {found}, not {expected}")]
    SessionMismatch { expected: Uuid, found: Uuid },
    #[error("event log must start with session creation")]
    MissingCreation,
    #[error("replayed embedding for class {label:?} differs from the logged one")]
    ReplayMismatch { label: String },
}

/// One round of user feedback.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawAdjustment")]
pub struct FeedbackAdjustment {
    pub added_texts: Vec<String>,
    pub removed_texts: Vec<String>,
    pub unselected_concepts: BTreeSet<String>,
    pub weights: AdjustmentWeights,
    /// Set on deliberately empty rounds.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub probe: bool,
}

#[derive(Deserialize)]
struct RawAdjustment {
    #[serde(default)]
    added_texts: Vec<String>,
    #[serde(default)]
    removed_texts: Vec<String>,
    #[serde(default)]
    unselected_concepts: BTreeSet<String>,
    #[serde(default)]
    weights: AdjustmentWeights,
    #[serde(default)]
    probe: bool,
}

impl TryFrom<RawAdjustment> for FeedbackAdjustment {
    type Error = RefineError;

    fn try_from(r: RawAdjustment) -> Result<Self, Self::Error> {
        if r.probe && r.added_texts.is_empty() && r.removed_texts.is_empty() && r.unselected_concepts.is_empty() {
            return Ok(FeedbackAdjustment::probe(r.weights));
        }
        FeedbackAdjustment::new(r.added_texts, r.removed_texts, r.unselected_concepts, r.weights)
    }
}

fn clean_all(texts: Vec<String>) -> Result<Vec<String>, RefineError> {
    texts
        .into_iter()
        .map(|t| {
            let t = t.trim();
            if t.is_empty() {
                Err(RefineError::EmptyText)
            } else {
                Ok(t.to_owned())
            }
        })
        .collect()
}

impl FeedbackAdjustment {
    /// Trims every text; at least one of the three inputs must be nonempty.
    pub fn new(
        added_texts: Vec<String>,
        removed_texts: Vec<String>,
        unselected_concepts: BTreeSet<String>,
        weights: AdjustmentWeights,
    ) -> Result<Self, RefineError> {
        let added_texts = clean_all(added_texts)?;
        let removed_texts = clean_all(removed_texts)?;
        if unselected_concepts.iter().any(|c| c.trim().is_empty()) {
            return Err(RefineError::EmptyText);
        }
        if added_texts.is_empty() && removed_texts.is_empty() && unselected_concepts.is_empty() {
            return Err(RefineError::EmptyAdjustment);
        }
        Ok(Self {
            added_texts,
            removed_texts,
            unselected_concepts,
            weights,
            probe: false,
        })
    }

    /// An explicitly empty round.
    pub fn probe(weights: AdjustmentWeights) -> Self {
        Self {
            added_texts: Vec::new(),
            removed_texts: Vec::new(),
            unselected_concepts: BTreeSet::new(),
            weights,
            probe: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassDefinition {
    pub label: String,
    pub base_text: String,
    pub base_embedding: Embedding,
    pub current_embedding: Embedding,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    /// 1-based and gapless within a class.
    pub index: usize,
    pub adjustment: FeedbackAdjustment,
    /// Resolved embeddings of the added and removed texts, in order.
    pub added_embeddings: Vec<Embedding>,
    pub removed_embeddings: Vec<Embedding>,
    pub resulting_embedding: Embedding,
    /// Decomposition of `resulting_embedding`; the checklist for the next round.
    pub decomposition: SparseDecomposition,
    pub eval: Option<EvalReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassState {
    pub definition: ClassDefinition,
    /// Decomposition of the base embedding (the iteration-0 snapshot).
    pub baseline: SparseDecomposition,
    pub baseline_eval: Option<EvalReport>,
    pub iterations: Vec<IterationRecord>,
}

impl ClassState {
    pub fn latest_decomposition(&self) -> &SparseDecomposition {
        self.iterations
            .last()
            .map_or(&self.baseline, |it| &it.decomposition)
    }

    pub fn latest_eval(&self) -> Option<&EvalReport> {
        match self.iterations.last() {
            Some(it) => it.eval.as_ref(),
            None => self.baseline_eval.as_ref(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassSeed {
    pub label: String,
    pub base_text: String,
    pub embedding: Embedding,
}

/// A single state change, as written to the session log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum SessionEvent {
    SessionCreated {
        session_id: Uuid,
        timestamp: DateTime<Utc>,
        weights: AdjustmentWeights,
        classes: Vec<ClassSeed>,
    },
    FeedbackApplied {
        session_id: Uuid,
        timestamp: DateTime<Utc>,
        class: String,
        adjustment: FeedbackAdjustment,
        added_embeddings: Vec<Embedding>,
        removed_embeddings: Vec<Embedding>,
        resulting_embedding: Embedding,
    },
    Undo {
        session_id: Uuid,
        timestamp: DateTime<Utc>,
        class: String,
    },
    Export {
        session_id: Uuid,
        timestamp: DateTime<Utc>,
        class: String,
    },
    EvaluationAttached {
        session_id: Uuid,
        timestamp: DateTime<Utc>,
        class: String,
        report: EvalReport,
    },
}

impl SessionEvent {
    pub fn session_id(&self) -> Uuid {
        match self {
            SessionEvent::SessionCreated { session_id, .. }
            | SessionEvent::FeedbackApplied { session_id, .. }
            | SessionEvent::Undo { session_id, .. }
            | SessionEvent::Export { session_id, .. }
            | SessionEvent::EvaluationAttached { session_id, .. } => *session_id,
        }
    }

    pub fn timestamp(&self) -> DateTime<Utc> {
        match self {
            SessionEvent::SessionCreated { timestamp, .. }
            | SessionEvent::FeedbackApplied { timestamp, .. }
            | SessionEvent::Undo { timestamp, .. }
            | SessionEvent::Export { timestamp, .. }
            | SessionEvent::EvaluationAttached { timestamp, .. } => *timestamp,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Session {
    pub id: Uuid,
    pub created_at: DateTime<Utc>,
    /// Weights used when a round does not bring its own.
    pub weights: AdjustmentWeights,
    pub classes: Vec<ClassState>,
    events: Vec<SessionEvent>,
}

impl Session {
    pub fn class(&self, label: &str) -> Result<&ClassState, RefineError> {
        self.classes
            .iter()
            .find(|c| c.definition.label == label)
            .ok_or_else(|| RefineError::UnknownClass(label.to_owned()))
    }

    fn class_index(&self, label: &str) -> Result<usize, RefineError> {
        self.classes
            .iter()
            .position(|c| c.definition.label == label)
            .ok_or_else(|| RefineError::UnknownClass(label.to_owned()))
    }

    pub fn labels(&self) -> impl Iterator<Item = &str> {
        self.classes.iter().map(|c| c.definition.label.as_str())
    }

    /// Every event applied so far, oldest first.
    pub fn events(&self) -> &[SessionEvent] {
        &self.events
    }

    pub fn similarity(&self) -> Result<SimilarityReport, RefineError> {
        Ok(rank::pairwise_similarity(self.classes.iter().map(|c| {
            (c.definition.label.as_str(), &c.definition.current_embedding)
        }))?)
    }
}

/// Stateless operations over sessions, bound to one concept dictionary.
#[derive(Debug, Clone)]
pub struct RefineEngine {
    dict: Arc<ConceptDictionary>,
    options: DecomposeOptions,
}

impl RefineEngine {
    pub fn new(dict: Arc<ConceptDictionary>, options: DecomposeOptions) -> Self {
        Self { dict, options }
    }

    pub fn dictionary(&self) -> &ConceptDictionary {
        &self.dict
    }

    pub fn options(&self) -> &DecomposeOptions {
        &self.options
    }

    pub fn decompose(&self, e: &Embedding) -> Result<SparseDecomposition, RefineError> {
        Ok(concepts::decompose(e, &self.dict, &self.options)?)
    }

    pub fn top_concepts(&self, dec: &SparseDecomposition, k: usize) -> Vec<ConceptScore> {
        concepts::top_k(dec, &self.dict, k)
    }

    /// Starts a session with one class per text; each label is its trimmed
    /// text.
    pub fn create_session<S: AsRef<str>>(
        &self,
        class_texts: &[S],
        source: &dyn EmbeddingSource,
        weights: AdjustmentWeights,
    ) -> Result<Session, RefineError> {
        if class_texts.is_empty() {
            return Err(RefineError::EmptyClassList);
        }
        let mut seen = BTreeSet::new();
        let mut labels = Vec::with_capacity(class_texts.len());
        for t in class_texts {
            let label = t.as_ref().trim().to_owned();
            if label.is_empty() {
                return Err(RefineError::EmptyText);
            }
            if !seen.insert(label.clone()) {
                return Err(RefineError::DuplicateLabel(label));
            }
            labels.push(label);
        }
        let refs: Vec<&str> = labels.iter().map(String::as_str).collect();
        let embeddings = source.embed_batch(&refs)?;
        let classes = labels
            .into_iter()
            .zip(embeddings)
            .map(|(label, embedding)| ClassSeed {
                base_text: label.clone(),
                label,
                embedding,
            })
            .collect();
        let event = SessionEvent::SessionCreated {
            session_id: Uuid::new_v4(),
            timestamp: Utc::now(),
            weights,
            classes,
        };
        self.replay(std::slice::from_ref(&event))
    }

    /// Applies one feedback round to `label` and returns the new record.
    ///
    /// Text add/subtract runs first against the current embedding, then the
    /// unselected concepts of the latest decomposition are removed, and the
    /// result is decomposed again for the next round.
    pub fn apply_feedback<'s>(
        &self,
        session: &'s mut Session,
        label: &str,
        adjustment: FeedbackAdjustment,
        source: &dyn EmbeddingSource,
    ) -> Result<&'s IterationRecord, RefineError> {
        let idx = session.class_index(label)?;
        let state = &session.classes[idx];
        let added_embeddings = embed_all(&adjustment.added_texts, source)?;
        let removed_embeddings = embed_all(&adjustment.removed_texts, source)?;
        let (resulting_embedding, _) = self.compute_round(state, &adjustment, &added_embeddings, &removed_embeddings)?;
        let event = SessionEvent::FeedbackApplied {
            session_id: session.id,
            timestamp: Utc::now(),
            class: label.to_owned(),
            adjustment,
            added_embeddings,
            removed_embeddings,
            resulting_embedding,
        };
        self.apply_event(session, event)?;
        Ok(session.classes[idx]
            .iterations
            .last()
            .expect("feedback event appends a record"))
    }

    /// Drops the latest round of `label`.
    pub fn undo(&self, session: &mut Session, label: &str) -> Result<(), RefineError> {
        let event = SessionEvent::Undo {
            session_id: session.id,
            timestamp: Utc::now(),
            class: label.to_owned(),
        };
        self.apply_event(session, event)
    }

    /// Attaches an evaluation to the latest round (or the baseline).
    pub fn attach_evaluation(&self, session: &mut Session, label: &str, report: EvalReport) -> Result<(), RefineError> {
        let event = SessionEvent::EvaluationAttached {
            session_id: session.id,
            timestamp: Utc::now(),
            class: label.to_owned(),
            report,
        };
        self.apply_event(session, event)
    }

    /// Portable record of the class's current state. Recorded as an event.
    pub fn export_definition(&self, session: &mut Session, label: &str) -> Result<DefinitionRecord, RefineError> {
        let event = SessionEvent::Export {
            session_id: session.id,
            timestamp: Utc::now(),
            class: label.to_owned(),
        };
        self.apply_event(session, event)?;
        definition_record(session.class(label)?)
    }

    fn compute_round(
        &self,
        state: &ClassState,
        adjustment: &FeedbackAdjustment,
        added: &[Embedding],
        removed: &[Embedding],
    ) -> Result<(Embedding, SparseDecomposition), RefineError> {
        let current = &state.definition.current_embedding;
        let combined = vectormath::combine(current, added, removed, adjustment.weights)?;
        let pruned = concepts::remove_concepts(
            &combined,
            state.latest_decomposition(),
            &self.dict,
            adjustment.unselected_concepts.iter().map(String::as_str),
        )?;
        let dec = self.decompose(&pruned)?;
        Ok((pruned, dec))
    }

    /// Folds one event into `session`. On error the session is unchanged.
    pub fn apply_event(&self, session: &mut Session, event: SessionEvent) -> Result<(), RefineError> {
        if event.session_id() != session.id {
            return Err(RefineError::SessionMismatch {
                expected: session.id,
                found: event.session_id(),
            });
        }
        match &event {
            SessionEvent::SessionCreated { .. } => return Err(RefineError::MissingCreation),
            SessionEvent::FeedbackApplied {
                class,
                adjustment,
                added_embeddings,
                removed_embeddings,
                resulting_embedding,
                ..
            } => {
                let idx = session.class_index(class)?;
                let state = &session.classes[idx];
                let (embedding, decomposition) =
                    self.compute_round(state, adjustment, added_embeddings, removed_embeddings)?;
                if &embedding != resulting_embedding {
                    return Err(RefineError::ReplayMismatch { label: class.clone() });
                }
                let state = &mut session.classes[idx];
                state.definition.current_embedding = embedding.clone();
                state.iterations.push(IterationRecord {
                    index: state.iterations.len() + 1,
                    adjustment: adjustment.clone(),
                    added_embeddings: added_embeddings.clone(),
                    removed_embeddings: removed_embeddings.clone(),
                    resulting_embedding: embedding,
                    decomposition,
                    eval: None,
                });
            }
            SessionEvent::Undo { class, .. } => {
                let idx = session.class_index(class)?;
                let state = &mut session.classes[idx];
                if state.iterations.pop().is_none() {
                    return Err(RefineError::NothingToUndo(class.clone()));
                }
                state.definition.current_embedding = state
                    .iterations
                    .last()
                    .map_or_else(|| state.definition.base_embedding.clone(), |it| it.resulting_embedding.clone());
            }
            SessionEvent::Export { class, .. } => {
                session.class_index(class)?;
            }
            SessionEvent::EvaluationAttached { class, report, .. } => {
                let idx = session.class_index(class)?;
                let state = &mut session.classes[idx];
                match state.iterations.last_mut() {
                    Some(it) => it.eval = Some(report.clone()),
                    None => state.baseline_eval = Some(report.clone()),
                }
            }
        }
        session.events.push(event);
        Ok(())
    }

    /// Rebuilds a session from its events.
    pub fn replay(&self, events: &[SessionEvent]) -> Result<Session, RefineError> {
        let (first, rest) = events.split_first().ok_or(RefineError::MissingCreation)?;
        let SessionEvent::SessionCreated {
            session_id,
            timestamp,
            weights,
            classes,
        } = first
        else {
            return Err(RefineError::MissingCreation);
        };
        if classes.is_empty() {
            return Err(RefineError::EmptyClassList);
        }
        let mut seen = BTreeSet::new();
        let mut states = Vec::with_capacity(classes.len());
        for seed in classes {
            if !seen.insert(seed.label.as_str()) {
                return Err(RefineError::DuplicateLabel(seed.label.clone()));
            }
            vectormath::check_dim(self.dict.dim(), seed.embedding.dim())?;
            let base = vectormath::normalize(seed.embedding.as_slice())?;
            let baseline = self.decompose(&base)?;
            states.push(ClassState {
                definition: ClassDefinition {
                    label: seed.label.clone(),
                    base_text: seed.base_text.clone(),
                    base_embedding: base.clone(),
                    current_embedding: base,
                },
                baseline,
                baseline_eval: None,
                iterations: Vec::new(),
            });
        }
        let mut session = Session {
            id: *session_id,
            created_at: *timestamp,
            weights: *weights,
            classes: states,
            events: vec![first.clone()],
        };
        for event in rest {
            self.apply_event(&mut session, event.clone())?;
        }
        Ok(session)
    }
}

fn embed_all(texts: &[String], source: &dyn EmbeddingSource) -> Result<Vec<Embedding>, RefineError> {
    if texts.is_empty() {
        return Ok(Vec::new());
    }
    let refs: Vec<&str> = texts.iter().map(String::as_str).collect();
    Ok(source.embed_batch(&refs)?)
}

/// Definition record for a class, embedding in single precision.
pub fn definition_record(state: &ClassState) -> Result<DefinitionRecord, RefineError> {
    Ok(DefinitionRecord {
        label: state.definition.label.clone(),
        base_text: state.definition.base_text.clone(),
        history: state.iterations.iter().map(|it| it.adjustment.clone()).collect(),
        embedding: state
            .definition
            .current_embedding
            .as_slice()
            .iter()
            .map(|&v| v as f32)
            .collect(),
    })
}
