use serde::{Deserialize, Serialize};

use super::{check_dim, BaselineError, Result};
use crate::features::SparseBinaryVector;
use crate::linalg::DenseMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    /// Euclidean distance; on binary vectors the square root of Hamming.
    #[default]
    Euclidean,
    /// One minus cosine similarity; an all-zero vector has similarity 0.
    Cosine,
}

fn sparse_distance(metric: Metric, a: &SparseBinaryVector, b: &SparseBinaryVector) -> f64 {
    match metric {
        Metric::Euclidean => (a.squared_distance(b) as f64).sqrt(),
        Metric::Cosine => {
            let norms = (a.nnz() as f64).sqrt() * (b.nnz() as f64).sqrt();
            if norms == 0.0 {
                1.0
            } else {
                1.0 - a.dot(b) as f64 / norms
            }
        }
    }
}

/// Majority label among the `k` nearest; distance ties go to the earlier
/// training index and vote ties to the smallest label.
fn vote(distances: impl Iterator<Item = f64>, y: &[usize], k: usize) -> Result<usize> {
    if k == 0 {
        return Err(BaselineError::Config("k must be >= 1".into()));
    }
    let mut ranked: Vec<(f64, usize)> = distances.zip(0..).collect();
    if ranked.is_empty() {
        return Err(BaselineError::EmptyTraining);
    }
    if k == 1 {
        let mut best = 0;
        for i in 1..ranked.len() {
            if ranked[i].0 < ranked[best].0 {
                best = i;
            }
        }
        return Ok(y[best]);
    }
    ranked.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let mut votes = vec![0usize; y.iter().max().map_or(0, |m| m + 1)];
    for &(_, i) in ranked.iter().take(k) {
        votes[y[i]] += 1;
    }
    let top = *votes.iter().max().unwrap();
    Ok(votes.iter().position(|&v| v == top).unwrap())
}

pub fn knn_predict(
    train: &[SparseBinaryVector],
    y: &[usize],
    x: &SparseBinaryVector,
    k: usize,
    metric: Metric,
) -> Result<usize> {
    if train.len() != y.len() {
        return Err(BaselineError::LengthMismatch { x: train.len(), y: y.len() });
    }
    if let Some(first) = train.first() {
        check_dim(first.dim(), x.dim())?;
    }
    vote(train.iter().map(|t| sparse_distance(metric, t, x)), y, k)
}

/// Euclidean k-NN over the rows of a dense matrix.
pub fn knn_predict_dense(train: &DenseMatrix, y: &[usize], x: &[f64], k: usize) -> Result<usize> {
    if train.rows() != y.len() {
        return Err(BaselineError::LengthMismatch { x: train.rows(), y: y.len() });
    }
    check_dim(train.cols(), x.len())?;
    let dist = (0..train.rows()).map(|r| train.row(r).iter().zip(x).map(|(a, b)| (a - b) * (a - b)).sum::<f64>());
    vote(dist, y, k)
}
