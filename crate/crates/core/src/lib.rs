//! Refinement of natural-language class definitions for open-vocabulary
//! object detection, done directly on text embeddings.
//!
//! The crate covers the embedding arithmetic ([`vectormath`]), sparse concept
//! decomposition ([`concepts`]), the iterative feedback session engine
//! ([`refine`]), inter-class similarity ([`rank`]), detection scoring with the
//! distractor-inclusive mAP ([`detmetrics`]) and file/endpoint ingestion
//! ([`store`]).

pub mod concepts;
pub mod detmetrics;
pub mod rank;
pub mod refine;
pub mod store;
pub mod vectormath;

pub use concepts::{ConceptDictionary, DecomposeOptions, SparseDecomposition};
pub use vectormath::{AdjustmentWeights, Embedding};
