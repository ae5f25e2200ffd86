//! Visual feature distances and the row-normalized initial affinity.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::model::{AffinityMatrix, FeatureDistanceMatrix, Matrix, Scenario};

/// Distance between two embeddings.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum FeatureMetric {
    #[default]
    Euclidean,
    /// `1 - cos(a, b)`.
    Cosine,
}

fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    libm::sqrt(a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum())
}

fn norm(a: &[f64]) -> f64 {
    libm::sqrt(a.iter().map(|x| x * x).sum())
}

/// Pairwise distances between embeddings. The diagonal is exactly zero.
pub fn feature_distances<E: AsRef<[f64]>>(embeddings: &[E], metric: FeatureMetric) -> Result<FeatureDistanceMatrix> {
    let n = embeddings.len();
    if let Some(first) = embeddings.first() {
        let d = first.as_ref().len();
        if let Some(bad) = embeddings.iter().position(|e| e.as_ref().len() != d) {
            return Err(Error::ShapeMismatch(alloc::format!(
                "embedding {bad} has dimension {}, expected {d}",
                embeddings[bad].as_ref().len()
            )));
        }
    }
    let norms: Vec<f64> = match metric {
        FeatureMetric::Euclidean => Vec::new(),
        FeatureMetric::Cosine => {
            let norms: Vec<f64> = embeddings.iter().map(|e| norm(e.as_ref())).collect();
            if let Some(i) = norms.iter().position(|&v| v == 0.0) {
                return Err(Error::ZeroVector(i));
            }
            norms
        }
    };
    let mut f = Matrix::filled(n, n, 0.0);
    for i in 0..n {
        for j in (i + 1)..n {
            let (a, b) = (embeddings[i].as_ref(), embeddings[j].as_ref());
            let d = match metric {
                FeatureMetric::Euclidean => euclidean(a, b),
                FeatureMetric::Cosine => {
                    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
                    (1.0 - dot / (norms[i] * norms[j])).max(0.0)
                }
            };
            f[(i, j)] = d;
            f[(j, i)] = d;
        }
    }
    Ok(f)
}

/// Feature distances between every pair of sequences in the scenario database.
pub fn scenario_feature_distances(scenario: &Scenario, metric: FeatureMetric) -> Result<FeatureDistanceMatrix> {
    let embeddings: Vec<&[f64]> = scenario.sequences.iter().map(|s| s.embedding.as_slice()).collect();
    feature_distances(&embeddings, metric)
}

/// Linearly maps each row of `f` onto [0, 1]: the row minimum becomes 1 and the
/// row maximum 0.
///
/// A constant row carries no ordering information; it becomes 1 on the
/// diagonal and 0.5 elsewhere.
pub fn visual_affinity(f: &FeatureDistanceMatrix) -> Result<AffinityMatrix> {
    let n = f.rows();
    if f.cols() != n {
        return Err(Error::ShapeMismatch(alloc::format!("feature distances are {n}x{}", f.cols())));
    }
    if n < 2 {
        return Err(Error::TooFewSequences { needed: 2, got: n });
    }
    let mut s = Matrix::filled(n, n, 0.0);
    for (i, row) in f.iter_rows().enumerate() {
        let lo = row.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let span = hi - lo;
        let out = s.row_mut(i);
        if !(span > 0.0) {
            log::warn!("feature distance row {i} is constant; using 0.5 off-diagonal affinity");
            for (j, v) in out.iter_mut().enumerate() {
                *v = if j == i { 1.0 } else { 0.5 };
            }
            continue;
        }
        for (v, &d) in out.iter_mut().zip(row) {
            *v = 1.0 - (d - lo) / span;
        }
    }
    Ok(s)
}
