//! Inter-class similarity for multi-target sessions.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::vectormath::{cosine_similarity, Embedding, VectorError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RankError {
    #[error("similarity needs at least two classes, got {0}")]
    TooFewClasses(usize),
    #[error("unknown class {0:?}")]
    UnknownClass(String),
    #[error(transparent)]
    Vector(#[from] VectorError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedClass {
    pub label: String,
    pub similarity: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimilarityReport {
    pub labels: Vec<String>,
    /// `matrix[i][j]` is the cosine similarity of `labels[i]` and `labels[j]`.
    pub matrix: Vec<Vec<f64>>,
    /// Per class (aligned with `labels`), every other class by descending
    /// similarity, ties by label ascending.
    pub rankings: Vec<Vec<RankedClass>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Extremes {
    pub most_similar: RankedClass,
    pub least_similar: RankedClass,
}

fn by_similarity_then_label(a: &RankedClass, b: &RankedClass) -> Ordering {
    b.similarity
        .total_cmp(&a.similarity)
        .then_with(|| a.label.cmp(&b.label))
}

/// Cosine-similarity matrix and per-class rankings.
pub fn pairwise_similarity<'a, I>(classes: I) -> Result<SimilarityReport, RankError>
where
    I: IntoIterator<Item = (&'a str, &'a Embedding)>,
{
    let (labels, embeddings): (Vec<String>, Vec<&Embedding>) = classes
        .into_iter()
        .map(|(l, e)| (l.to_owned(), e))
        .unzip();
    let n = labels.len();
    if n < 2 {
        return Err(RankError::TooFewClasses(n));
    }
    let mut matrix = vec![vec![0.0; n]; n];
    for i in 0..n {
        matrix[i][i] = cosine_similarity(embeddings[i], embeddings[i])?;
        for j in i + 1..n {
            let s = cosine_similarity(embeddings[i], embeddings[j])?;
            matrix[i][j] = s;
            matrix[j][i] = s;
        }
    }
    let rankings = (0..n)
        .map(|i| {
            let mut row: Vec<RankedClass> = (0..n)
                .filter(|&j| j != i)
                .map(|j| RankedClass {
                    label: labels[j].clone(),
                    similarity: matrix[i][j],
                })
                .collect();
            row.sort_by(by_similarity_then_label);
            row
        })
        .collect();
    Ok(SimilarityReport {
        labels,
        matrix,
        rankings,
    })
}

/// Most and least similar other class for `label`.
pub fn extremes(report: &SimilarityReport, label: &str) -> Result<Extremes, RankError> {
    let i = report
        .labels
        .iter()
        .position(|l| l == label)
        .ok_or_else(|| RankError::UnknownClass(label.to_owned()))?;
    let ranking = &report.rankings[i];
    match (ranking.first(), ranking.last()) {
        (Some(most), Some(least)) => Ok(Extremes {
            most_similar: most.clone(),
            least_similar: least.clone(),
        }),
        _ => Err(RankError::TooFewClasses(report.labels.len())),
    }
}
