//! Concept dictionaries and sparse nonnegative concept decomposition.
//!
//! An embedding is explained as a nonnegative, sparse combination of labeled
//! unit-norm concept vectors by solving
//!
//! ```text
//! minimize  ||C^T w - e'||^2 + penalty * sum(w)   subject to  w >= 0
//! ```
//!
//! with cyclic coordinate descent. `e'` is the embedding itself, or
//! `normalize(e - center)` when the dictionary carries a centering offset.
//! Once the sweeps stop, the stationarity equations are solved exactly on
//! the active set; that point replaces the descent iterate when it stays
//! positive and does not raise the objective.

use std::collections::{BTreeSet, HashMap};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::vectormath::{self, dot, l2_norm, Embedding, VectorError};

/// Concept vectors further than this from unit norm are rejected on load.
pub const UNIT_NORM_SLACK: f64 = 1e-3;

/// Vectors this close to unit norm are kept as given, so values read from
/// a single-precision file survive a save/load cycle bit for bit.
pub const UNIT_NORM_EXACT: f64 = 1e-6;

/// Weights at or below this are dropped from a decomposition.
pub const WEIGHT_FLOOR: f64 = 1e-10;

/// Number of concepts shown to the user per checklist.
pub const DEFAULT_TOP_K: usize = 10;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConceptError {
    #[error(transparent)]
    Vector(#[from] VectorError),
    #[error("duplicate concept label {0:?}")]
    DuplicateLabel(String),
    #[error("empty concept label at index {0}")]
    EmptyLabel(usize),
    #[error("concept {label:?} has norm {norm}, not within {UNIT_NORM_SLACK} of 1")]
    NonUnitConcept { label: String, norm: f64 },
    #[error("dictionary is empty")]
    EmptyDictionary,
    #[error("{labels} labels but {vectors} vectors")]
    LengthMismatch { labels: usize, vectors: usize },
    #[error("unknown concept {0:?}")]
    UnknownConcept(String),
    #[error("concept index {0} out of range")]
    BadIndex(usize),
    #[error("invalid sparsity penalty {0}")]
    InvalidPenalty(f64),
    #[error("coordinate descent did not converge in {sweeps} sweeps (last decrease {last_decrease:e})")]
    NoConvergence { sweeps: usize, last_decrease: f64 },
}

/// Labeled set of unit-norm concept vectors. Immutable after construction.
#[derive(Debug, Clone, PartialEq)]
pub struct ConceptDictionary {
    labels: Vec<String>,
    vectors: Vec<Vec<f64>>,
    center: Option<Vec<f64>>,
    sq_norms: Vec<f64>,
    dim: usize,
    index: HashMap<String, usize>,
}

impl ConceptDictionary {
    /// Validates and builds a dictionary. Vectors within [`UNIT_NORM_SLACK`]
    /// of unit norm are renormalized (unless already within
    /// [`UNIT_NORM_EXACT`]); anything else is rejected.
    pub fn new(
        labels: Vec<String>,
        vectors: Vec<Vec<f64>>,
        center: Option<Vec<f64>>,
    ) -> Result<Self, ConceptError> {
        if labels.len() != vectors.len() {
            return Err(ConceptError::LengthMismatch {
                labels: labels.len(),
                vectors: vectors.len(),
            });
        }
        let dim = vectors.first().ok_or(ConceptError::EmptyDictionary)?.len();
        if dim == 0 {
            return Err(VectorError::Empty.into());
        }
        let mut index = HashMap::with_capacity(labels.len());
        let mut normalized = Vec::with_capacity(vectors.len());
        for (i, (label, v)) in labels.iter().zip(vectors).enumerate() {
            if label.trim().is_empty() {
                return Err(ConceptError::EmptyLabel(i));
            }
            if index.insert(label.clone(), i).is_some() {
                return Err(ConceptError::DuplicateLabel(label.clone()));
            }
            vectormath::check_dim(dim, v.len())?;
            if let Some(j) = v.iter().position(|x| !x.is_finite()) {
                return Err(VectorError::NonFinite(j).into());
            }
            let norm = l2_norm(&v);
            if (norm - 1.0).abs() > UNIT_NORM_SLACK {
                return Err(ConceptError::NonUnitConcept {
                    label: label.clone(),
                    norm,
                });
            }
            if (norm - 1.0).abs() <= UNIT_NORM_EXACT {
                normalized.push(v);
            } else {
                normalized.push(vectormath::normalize(&v)?.into_vec());
            }
        }
        if let Some(c) = &center {
            vectormath::check_dim(dim, c.len())?;
            if let Some(j) = c.iter().position(|x| !x.is_finite()) {
                return Err(VectorError::NonFinite(j).into());
            }
        }
        let sq_norms = normalized.iter().map(|v| dot(v, v)).collect();
        Ok(Self {
            labels,
            vectors: normalized,
            sq_norms,
            center,
            dim,
            index,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn label(&self, i: usize) -> Option<&str> {
        self.labels.get(i).map(String::as_str)
    }

    pub fn vector(&self, i: usize) -> Option<&[f64]> {
        self.vectors.get(i).map(Vec::as_slice)
    }

    pub fn vectors(&self) -> &[Vec<f64>] {
        &self.vectors
    }

    pub fn center(&self) -> Option<&[f64]> {
        self.center.as_deref()
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.index.get(label).copied()
    }

    /// The vector actually decomposed for `e`: centered and renormalized when
    /// the dictionary has a center, `e` unchanged otherwise.
    pub fn prepare(&self, e: &Embedding) -> Result<Vec<f64>, ConceptError> {
        vectormath::check_dim(self.dim, e.dim())?;
        match &self.center {
            Some(c) => {
                let centered: Vec<f64> = e.as_slice().iter().zip(c).map(|(x, m)| x - m).collect();
                Ok(vectormath::normalize(&centered)?.into_vec())
            }
            None => Ok(e.as_slice().to_vec()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConceptWeight {
    pub index: usize,
    pub weight: f64,
}

/// Nonnegative sparse weights over a dictionary.
///
/// Entries are strictly positive, unique, and ordered by weight descending
/// with ties broken by label ascending.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SparseDecomposition {
    pub entries: Vec<ConceptWeight>,
    pub residual_norm: f64,
    pub sparsity_penalty: f64,
    /// Coordinate-descent sweeps used.
    pub sweeps: usize,
}

impl SparseDecomposition {
    pub fn weight_of(&self, index: usize) -> Option<f64> {
        self.entries.iter().find(|e| e.index == index).map(|e| e.weight)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecomposeOptions {
    pub sparsity_penalty: f64,
    /// Stop once a full sweep lowers the objective by less than this.
    /// A coordinate step of size d lowers it by about d^2 while the
    /// gradient is about 2d, so the descent iterate alone has optimality
    /// residuals near `2 * sqrt(tol)`; the active-set solve removes most of
    /// that.
    pub tol: f64,
    /// Maximum number of full sweeps.
    pub max_iters: usize,
}

impl Default for DecomposeOptions {
    fn default() -> Self {
        Self {
            sparsity_penalty: 0.05,
            tol: 1e-10,
            max_iters: 10_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConceptScore {
    pub label: String,
    pub weight: f64,
}

fn objective(residual: &[f64], w: &[f64], penalty: f64) -> f64 {
    dot(residual, residual) + penalty * w.iter().sum::<f64>()
}

/// `C^T w - target`, computed from scratch.
fn residual(dict: &ConceptDictionary, w: &[f64], target: &[f64]) -> Vec<f64> {
    let mut r: Vec<f64> = target.iter().map(|t| -t).collect();
    for (wi, c) in w.iter().zip(&dict.vectors) {
        if *wi != 0.0 {
            for (ri, ci) in r.iter_mut().zip(c) {
                *ri += wi * ci;
            }
        }
    }
    r
}

/// Nonnegative lasso decomposition of `e` over `dict`.
pub fn decompose(
    e: &Embedding,
    dict: &ConceptDictionary,
    opts: &DecomposeOptions,
) -> Result<SparseDecomposition, ConceptError> {
    let penalty = opts.sparsity_penalty;
    if !penalty.is_finite() || penalty < 0.0 {
        return Err(ConceptError::InvalidPenalty(penalty));
    }
    let target = dict.prepare(e)?;
    let mut w = vec![0.0; dict.len()];
    let mut r = residual(dict, &w, &target);
    let mut obj = objective(&r, &w, penalty);
    let half_penalty = penalty / 2.0;

    let mut converged_after = None;
    let mut last_decrease = f64::INFINITY;
    for sweep in 1..=opts.max_iters {
        for (i, c) in dict.vectors.iter().enumerate() {
            // exact minimizer along coordinate i, clipped at zero
            let grad_half = dot(c, &r) + half_penalty;
            let updated = (w[i] - grad_half / dict.sq_norms[i]).max(0.0);
            let delta = updated - w[i];
            if delta != 0.0 {
                for (ri, ci) in r.iter_mut().zip(c) {
                    *ri += delta * ci;
                }
                w[i] = updated;
            }
        }
        r = residual(dict, &w, &target);
        let next = objective(&r, &w, penalty);
        if !next.is_finite() {
            return Err(VectorError::NonFinite(0).into());
        }
        last_decrease = obj - next;
        obj = next;
        if last_decrease < opts.tol {
            converged_after = Some(sweep);
            break;
        }
    }
    let sweeps = converged_after.ok_or(ConceptError::NoConvergence {
        sweeps: opts.max_iters,
        last_decrease,
    })?;
    if let Some(polished) = polish(dict, &target, &w, penalty) {
        if objective(&residual(dict, &polished, &target), &polished, penalty) <= obj {
            w = polished;
        }
    }

    for wi in w.iter_mut() {
        if *wi <= WEIGHT_FLOOR {
            *wi = 0.0;
        }
    }
    let r = residual(dict, &w, &target);
    let mut entries: Vec<ConceptWeight> = w
        .iter()
        .enumerate()
        .filter(|(_, wi)| **wi > 0.0)
        .map(|(index, &weight)| ConceptWeight { index, weight })
        .collect();
    sort_entries(&mut entries, dict);
    Ok(SparseDecomposition {
        entries,
        residual_norm: l2_norm(&r),
        sparsity_penalty: penalty,
        sweeps,
    })
}

/// Active-set refinement of a descent iterate `w`.
///
/// Solves `C_S C_S^T w_S = C_S e' - penalty/2` on the support `S`, drops
/// coordinates that come out nonpositive, adds the inactive coordinate whose
/// gradient is most negative, and repeats. Returns the best feasible point
/// seen, or `None` when no solve succeeded.
fn polish(dict: &ConceptDictionary, target: &[f64], w: &[f64], penalty: f64) -> Option<Vec<f64>> {
    let half = penalty / 2.0;
    let mut support: Vec<usize> = (0..w.len()).filter(|&i| w[i] > WEIGHT_FLOOR).collect();
    let mut best: Option<(f64, Vec<f64>)> = None;
    for _ in 0..2 * dict.len() + 2 {
        if support.is_empty() {
            break;
        }
        let n = support.len();
        let gram = DMatrix::from_fn(n, n, |a, b| dot(&dict.vectors[support[a]], &dict.vectors[support[b]]));
        let rhs = DVector::from_fn(n, |a, _| dot(&dict.vectors[support[a]], target) - half);
        let x = match gram.clone().cholesky() {
            Some(ch) => ch.solve(&rhs),
            None => gram.svd(true, true).solve(&rhs, 1e-12).ok()?,
        };
        if x.iter().any(|v| !v.is_finite()) {
            break;
        }
        if x.iter().any(|v| *v <= WEIGHT_FLOOR) {
            support = support
                .iter()
                .zip(x.iter())
                .filter(|(_, v)| **v > WEIGHT_FLOOR)
                .map(|(&i, _)| i)
                .collect();
            continue;
        }
        let mut candidate = vec![0.0; w.len()];
        for (&i, &v) in support.iter().zip(x.iter()) {
            candidate[i] = v;
        }
        let r = residual(dict, &candidate, target);
        let obj = objective(&r, &candidate, penalty);
        if best.as_ref().is_none_or(|(b, _)| obj < *b) {
            best = Some((obj, candidate));
        }
        let entering = (0..w.len())
            .filter(|i| !support.contains(i))
            .map(|i| (i, dot(&dict.vectors[i], &r) + half))
            .filter(|(_, g)| *g < -1e-12)
            .min_by(|a, b| a.1.total_cmp(&b.1));
        match entering {
            Some((i, _)) => support.push(i),
            None => break,
        }
    }
    best.map(|(_, w)| w)
}

fn sort_entries(entries: &mut [ConceptWeight], dict: &ConceptDictionary) {
    entries.sort_by(|a, b| {
        b.weight
            .total_cmp(&a.weight)
            .then_with(|| dict.labels[a.index].cmp(&dict.labels[b.index]))
    });
}

/// The `k` heaviest concepts with labels resolved. Returns fewer when the
/// decomposition has fewer entries.
pub fn top_k(dec: &SparseDecomposition, dict: &ConceptDictionary, k: usize) -> Vec<ConceptScore> {
    let mut entries = dec.entries.clone();
    sort_entries(&mut entries, dict);
    entries
        .iter()
        .take(k)
        .filter_map(|e| {
            dict.label(e.index).map(|label| ConceptScore {
                label: label.to_owned(),
                weight: e.weight,
            })
        })
        .collect()
}

/// Subtracts the full decomposed contribution of each unselected concept and
/// renormalizes. Labels that are in the dictionary but absent from the
/// decomposition are ignored.
pub fn remove_concepts<'a, I>(
    e: &Embedding,
    dec: &SparseDecomposition,
    dict: &ConceptDictionary,
    unselected: I,
) -> Result<Embedding, ConceptError>
where
    I: IntoIterator<Item = &'a str>,
{
    remove_concepts_scaled(e, dec, dict, unselected, 1.0)
}

/// [`remove_concepts`] with each subtracted contribution scaled by `factor`.
pub fn remove_concepts_scaled<'a, I>(
    e: &Embedding,
    dec: &SparseDecomposition,
    dict: &ConceptDictionary,
    unselected: I,
    factor: f64,
) -> Result<Embedding, ConceptError>
where
    I: IntoIterator<Item = &'a str>,
{
    vectormath::check_dim(dict.dim(), e.dim())?;
    if !factor.is_finite() || factor < 0.0 {
        return Err(VectorError::InvalidWeight(factor).into());
    }
    let mut indices = BTreeSet::new();
    for label in unselected {
        let i = dict
            .index_of(label)
            .ok_or_else(|| ConceptError::UnknownConcept(label.to_owned()))?;
        indices.insert(i);
    }
    let mut out = e.as_slice().to_vec();
    for entry in dec.entries.iter().filter(|en| indices.contains(&en.index)) {
        let c = dict.vector(entry.index).ok_or(ConceptError::BadIndex(entry.index))?;
        let scale = factor * entry.weight;
        for (o, ci) in out.iter_mut().zip(c) {
            *o -= scale * ci;
        }
    }
    Ok(vectormath::normalize(&out)?)
}

/// `sum(w_i * c_i)` plus the center when present. Not normalized.
pub fn reconstruct(
    dec: &SparseDecomposition,
    dict: &ConceptDictionary,
) -> Result<Vec<f64>, ConceptError> {
    let mut out = match dict.center() {
        Some(c) => c.to_vec(),
        None => vec![0.0; dict.dim()],
    };
    for entry in &dec.entries {
        let c = dict.vector(entry.index).ok_or(ConceptError::BadIndex(entry.index))?;
        vectormath::check_dim(out.len(), c.len())?;
        for (o, ci) in out.iter_mut().zip(c) {
            *o += entry.weight * ci;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn basis3() -> ConceptDictionary {
        ConceptDictionary::new(
            vec!["c1".into(), "c2".into(), "c3".into()],
            vec![vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0]],
            None,
        )
        .unwrap()
    }

    fn emb(v: &[f64]) -> Embedding {
        Embedding::new(v.to_vec()).unwrap()
    }

    fn opts(penalty: f64) -> DecomposeOptions {
        DecomposeOptions {
            sparsity_penalty: penalty,
            ..Default::default()
        }
    }

    #[test]
    fn orthonormal_soft_threshold() {
        let d = basis3();
        let dec = decompose(&emb(&[0.6, 0.8, 0.0]), &d, &opts(0.2)).unwrap();
        assert_eq!(dec.entries.len(), 2);
        assert_eq!(dec.entries[0].index, 1);
        assert!((dec.entries[0].weight - 0.7).abs() < 1e-12);
        assert_eq!(dec.entries[1].index, 0);
        assert!((dec.entries[1].weight - 0.5).abs() < 1e-12);
        assert!(dec.weight_of(2).is_none());
    }

    #[test]
    fn atom_reconstructs_itself() {
        let d = basis3();
        let dec = decompose(&emb(&[1.0, 0.0, 0.0]), &d, &opts(0.0)).unwrap();
        assert_eq!(dec.entries, vec![ConceptWeight { index: 0, weight: 1.0 }]);
        assert!(dec.residual_norm < 1e-6);
    }

    #[test]
    fn large_penalty_empties_decomposition() {
        let d = basis3();
        let dec = decompose(&emb(&[0.6, 0.8, 0.0]), &d, &opts(2.0)).unwrap();
        assert!(dec.entries.is_empty());
        assert!((dec.residual_norm - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_inputs() {
        let d = basis3();
        assert!(matches!(
            decompose(&emb(&[1.0, 0.0]), &d, &opts(0.1)),
            Err(ConceptError::Vector(VectorError::DimensionMismatch { .. }))
        ));
        assert_eq!(
            decompose(&emb(&[1.0, 0.0, 0.0]), &d, &opts(-1.0)),
            Err(ConceptError::InvalidPenalty(-1.0))
        );
    }

    #[test]
    fn no_convergence_is_an_error() {
        // nearly parallel atoms make coordinate descent crawl
        let s = 1e-3_f64;
        let d = ConceptDictionary::new(
            vec!["a".into(), "b".into()],
            vec![vec![1.0, 0.0], vec![(1.0 - s * s).sqrt(), s]],
            None,
        )
        .unwrap();
        let o = DecomposeOptions {
            sparsity_penalty: 0.0,
            tol: 1e-30,
            max_iters: 3,
        };
        assert!(matches!(
            decompose(&emb(&[1.0 + (1.0 - s * s).sqrt(), s]), &d, &o),
            Err(ConceptError::NoConvergence { sweeps: 3, .. })
        ));
    }

    #[test]
    fn centered_decomposition_uses_offset() {
        let d = ConceptDictionary::new(
            vec!["c1".into(), "c2".into()],
            vec![vec![1.0, 0.0], vec![0.0, 1.0]],
            Some(vec![0.0, 1.0]),
        )
        .unwrap();
        // e - center = (1, 0)
        let dec = decompose(&emb(&[1.0, 1.0]), &d, &opts(0.0)).unwrap();
        assert_eq!(dec.entries.len(), 1);
        assert_eq!(dec.entries[0].index, 0);
        let rec = reconstruct(&dec, &d).unwrap();
        assert!((rec[0] - 1.0).abs() < 1e-12 && (rec[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn dictionary_validation() {
        let v = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
        assert_eq!(
            ConceptDictionary::new(vec!["a".into(), "a".into()], v.clone(), None),
            Err(ConceptError::DuplicateLabel("a".into()))
        );
        assert!(matches!(
            ConceptDictionary::new(vec!["a".into(), "b".into()], vec![vec![1.0, 0.0], vec![0.0, 1.5]], None),
            Err(ConceptError::NonUnitConcept { .. })
        ));
        assert_eq!(
            ConceptDictionary::new(vec![], vec![], None),
            Err(ConceptError::EmptyDictionary)
        );
        let d = ConceptDictionary::new(
            vec!["a".into(), "b".into()],
            vec![vec![1.0005, 0.0], vec![0.0, 1.0]],
            None,
        )
        .unwrap();
        assert_eq!(d.vector(0).unwrap(), &[1.0, 0.0]);
        let kept = ConceptDictionary::new(vec!["a".into()], vec![vec![1.0 + 1e-8, 0.0]], None).unwrap();
        assert_eq!(kept.vector(0).unwrap(), &[1.0 + 1e-8, 0.0]);
    }

    #[test]
    fn top_k_truncates_and_breaks_ties_by_label() {
        let d = ConceptDictionary::new(
            vec!["y".into(), "x".into(), "c".into()],
            vec![vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0]],
            None,
        )
        .unwrap();
        let dec = SparseDecomposition {
            entries: vec![
                ConceptWeight { index: 0, weight: 0.5 },
                ConceptWeight { index: 1, weight: 0.5 },
                ConceptWeight { index: 2, weight: 0.1 },
            ],
            residual_norm: 0.0,
            sparsity_penalty: 0.0,
            sweeps: 1,
        };
        let top = top_k(&dec, &d, 1);
        assert_eq!(top, vec![ConceptScore { label: "x".into(), weight: 0.5 }]);
        assert_eq!(top_k(&dec, &d, 2).len(), 2);
        let all = top_k(&dec, &d, DEFAULT_TOP_K);
        assert_eq!(
            all.iter().map(|c| c.label.as_str()).collect::<Vec<_>>(),
            ["x", "y", "c"]
        );
    }

    #[test]
    fn removing_an_orthonormal_atom_leaves_the_other() {
        let d = basis3();
        let e = vectormath::normalize(&[1.0, 1.0, 0.0]).unwrap();
        let dec = decompose(&e, &d, &opts(0.0)).unwrap();
        assert!((dec.entries[0].weight - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-9);
        let out = remove_concepts(&e, &dec, &d, ["c2"]).unwrap();
        assert!((out.as_slice()[0] - 1.0).abs() < 1e-6);
        assert!(out.as_slice()[1].abs() < 1e-6);
    }

    #[test]
    fn removal_identities() {
        let d = basis3();
        let e = vectormath::normalize(&[0.6, 0.8, 0.0]).unwrap();
        let dec = decompose(&e, &d, &opts(0.2)).unwrap();
        let same = remove_concepts(&e, &dec, &d, std::iter::empty()).unwrap();
        let absent = remove_concepts(&e, &dec, &d, ["c3"]).unwrap();
        for out in [same, absent] {
            for (a, b) in out.as_slice().iter().zip(e.as_slice()) {
                assert!((a - b).abs() <= 1e-12);
            }
        }
        assert_eq!(
            remove_concepts(&e, &dec, &d, ["nope"]),
            Err(ConceptError::UnknownConcept("nope".into()))
        );
    }

    #[test]
    fn full_removal_cancels_to_zero() {
        let d = basis3();
        let e = emb(&[1.0, 0.0, 0.0]);
        let dec = decompose(&e, &d, &opts(0.0)).unwrap();
        assert_eq!(
            remove_concepts(&e, &dec, &d, ["c1"]),
            Err(ConceptError::Vector(VectorError::ZeroVector))
        );
    }

    #[test]
    fn reconstruct_examples() {
        let d = basis3();
        let mk = |entries: Vec<ConceptWeight>| SparseDecomposition {
            entries,
            residual_norm: 0.0,
            sparsity_penalty: 0.0,
            sweeps: 0,
        };
        assert_eq!(
            reconstruct(&mk(vec![ConceptWeight { index: 0, weight: 1.0 }]), &d).unwrap(),
            vec![1.0, 0.0, 0.0]
        );
        assert_eq!(reconstruct(&mk(vec![]), &d).unwrap(), vec![0.0; 3]);
        assert_eq!(
            reconstruct(
                &mk(vec![
                    ConceptWeight { index: 0, weight: 0.5 },
                    ConceptWeight { index: 1, weight: 0.7 }
                ]),
                &d
            )
            .unwrap(),
            vec![0.5, 0.7, 0.0]
        );
        assert_eq!(
            reconstruct(&mk(vec![ConceptWeight { index: 9, weight: 1.0 }]), &d),
            Err(ConceptError::BadIndex(9))
        );
    }
}
