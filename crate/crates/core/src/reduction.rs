//! PCA and kernel PCA projections.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::features::SparseBinaryVector;
use crate::linalg::{self, canonical_sign, centering_stats, double_center, sym_eig, DenseMatrix, KernelSpec, LinalgError};

#[derive(Debug, Error, PartialEq)]
pub enum ReductionError {
    #[error("target dimension {m} exceeds min(n, d) = {limit}")]
    TargetTooLarge { m: usize, limit: usize },
    #[error("need at least 2 training rows, got {0}")]
    TooFewRows(usize),
    #[error("dimension mismatch: model expects {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

pub type Result<T> = std::result::Result<T, ReductionError>;

/// Eigenvalues at or below this (relative to `max(1, largest)`) count as zero.
pub const RANK_TOLERANCE: f64 = 1e-10;

pub const DEFAULT_TARGET_DIM: usize = 30;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcaModel {
    pub mean: Vec<f64>,
    /// d x m, orthonormal columns.
    pub basis: DenseMatrix,
    pub eigenvalues: Vec<f64>,
    /// Set when fewer than the requested components had non-zero variance.
    pub rank_deficient: bool,
}

/// Fits PCA with `m` components.
///
/// When `d > n` the eigenproblem is solved on the `n x n` centered Gram
/// matrix and mapped back, which yields the same leading eigenvectors of
/// the covariance at a fraction of the cost.
pub fn pca_fit(x: &DenseMatrix, m: usize) -> Result<PcaModel> {
    let (n, d) = (x.rows(), x.cols());
    if n < 2 {
        return Err(ReductionError::TooFewRows(n));
    }
    if m > n.min(d) {
        return Err(ReductionError::TargetTooLarge { m, limit: n.min(d) });
    }
    let mean = linalg::column_means(x);
    if d <= n {
        let cov = linalg::covariance(x)?;
        let eig = sym_eig(&cov)?;
        let keep = retained(&eig.values, m);
        let basis = DenseMatrix::from_fn(d, keep, |r, c| eig.vectors[(r, c)]);
        return Ok(PcaModel {
            mean,
            basis,
            eigenvalues: eig.values[..keep].to_vec(),
            rank_deficient: keep < m,
        });
    }
    let centered = DenseMatrix::from_fn(n, d, |r, c| x[(r, c)] - mean[c]);
    let mut g = centered.matmul(&centered.transpose())?;
    g.as_mut_slice().iter_mut().for_each(|v| *v /= n as f64);
    let eig = sym_eig(&g)?;
    let keep = retained(&eig.values, m);
    let mut basis = DenseMatrix::zeros(d, keep);
    for k in 0..keep {
        let u = eig.vector(k);
        let scale = 1.0 / (n as f64 * eig.values[k]).sqrt();
        let mut col = vec![0.0; d];
        for (r, &ur) in u.iter().enumerate() {
            for (c, v) in col.iter_mut().zip(centered.row(r)) {
                *c += ur * v;
            }
        }
        col.iter_mut().for_each(|v| *v *= scale);
        canonical_sign(&mut col);
        for (r, v) in col.into_iter().enumerate() {
            basis[(r, k)] = v;
        }
    }
    Ok(PcaModel { mean, basis, eigenvalues: eig.values[..keep].to_vec(), rank_deficient: keep < m })
}

fn retained(values: &[f64], m: usize) -> usize {
    let top = values.first().copied().unwrap_or(0.0).max(1.0);
    values.iter().take(m).take_while(|&&v| v > RANK_TOLERANCE * top).count()
}

pub fn pca_project(model: &PcaModel, x: &[f64]) -> Result<Vec<f64>> {
    let d = model.mean.len();
    if x.len() != d {
        return Err(ReductionError::DimensionMismatch { expected: d, got: x.len() });
    }
    let m = model.basis.cols();
    let mut out = vec![0.0; m];
    for (r, (xv, mv)) in x.iter().zip(&model.mean).enumerate() {
        let c = xv - mv;
        if c == 0.0 {
            continue;
        }
        for (o, b) in out.iter_mut().zip(model.basis.row(r)) {
            *o += c * b;
        }
    }
    Ok(out)
}

/// Training points kept by a kernel PCA model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Points {
    Dense(DenseMatrix),
    Sparse(Vec<SparseBinaryVector>),
}

impl Points {
    fn len(&self) -> usize {
        match self {
            Points::Dense(m) => m.rows(),
            Points::Sparse(v) => v.len(),
        }
    }

    fn dim(&self) -> usize {
        match self {
            Points::Dense(m) => m.cols(),
            Points::Sparse(v) => v.first().map_or(0, SparseBinaryVector::dim),
        }
    }

    fn gram(&self, kernel: &KernelSpec) -> DenseMatrix {
        match self {
            Points::Dense(m) => linalg::gram(m, kernel),
            Points::Sparse(v) => linalg::gram_sparse(v, kernel),
        }
    }
}

/// A query vector for kernel evaluation against stored points.
#[derive(Debug, Clone, Copy)]
pub enum Query<'a> {
    Dense(&'a [f64]),
    Sparse(&'a SparseBinaryVector),
}

impl Query<'_> {
    fn dim(&self) -> usize {
        match self {
            Query::Dense(v) => v.len(),
            Query::Sparse(v) => v.dim(),
        }
    }
}

fn kernel_row(points: &Points, kernel: &KernelSpec, q: Query<'_>) -> Vec<f64> {
    match (points, q) {
        (Points::Sparse(pts), Query::Sparse(x)) => pts.iter().map(|p| kernel.eval_sparse(p, x)).collect(),
        (Points::Dense(m), Query::Dense(x)) => (0..m.rows()).map(|r| kernel.eval_dense(m.row(r), x)).collect(),
        (Points::Dense(m), Query::Sparse(x)) => {
            let x = x.to_dense();
            (0..m.rows()).map(|r| kernel.eval_dense(m.row(r), &x)).collect()
        }
        (Points::Sparse(pts), Query::Dense(x)) => pts.iter().map(|p| kernel.eval_dense(&p.to_dense(), x)).collect(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KpcaModel {
    pub kernel: KernelSpec,
    pub points: Points,
    /// n x m coefficients, column k = v_k / sqrt(lambda_k).
    pub alpha: DenseMatrix,
    pub eigenvalues: Vec<f64>,
    pub train_row_means: Vec<f64>,
    pub train_grand_mean: f64,
    /// n x m projections of the training points.
    pub train_projections: DenseMatrix,
    /// Set when fewer than the requested components had positive eigenvalues.
    pub truncated: bool,
}

/// Absolute eigenvalue floor for kernel PCA components.
pub const KPCA_EIGEN_FLOOR: f64 = 1e-10;

pub fn kpca_fit(points: Points, kernel: KernelSpec, m: usize) -> Result<KpcaModel> {
    kernel.validate()?;
    let n = points.len();
    if n < 2 {
        return Err(ReductionError::TooFewRows(n));
    }
    let k = points.gram(&kernel);
    let (row_means, _, grand) = centering_stats(&k);
    let kc = double_center(&k)?;
    let eig = sym_eig(&kc)?;
    let keep = eig.values.iter().take(m).take_while(|&&v| v > KPCA_EIGEN_FLOOR).count();
    let alpha = DenseMatrix::from_fn(n, keep, |r, c| eig.vectors[(r, c)] / eig.values[c].sqrt());
    let train_projections = kc.matmul(&alpha)?;
    Ok(KpcaModel {
        kernel,
        points,
        alpha,
        eigenvalues: eig.values[..keep].to_vec(),
        train_row_means: row_means,
        train_grand_mean: grand,
        train_projections,
        truncated: keep < m,
    })
}

/// Centers the kernel row against the training statistics and projects it.
pub fn kpca_project(model: &KpcaModel, x: Query<'_>) -> Result<Vec<f64>> {
    let d = model.points.dim();
    if x.dim() != d {
        return Err(ReductionError::DimensionMismatch { expected: d, got: x.dim() });
    }
    let k = kernel_row(&model.points, &model.kernel, x);
    let mean_k = k.iter().sum::<f64>() / k.len() as f64;
    let m = model.alpha.cols();
    let mut out = vec![0.0; m];
    for (j, kj) in k.iter().enumerate() {
        let c = kj - mean_k - model.train_row_means[j] + model.train_grand_mean;
        for (o, a) in out.iter_mut().zip(model.alpha.row(j)) {
            *o += c * a;
        }
    }
    Ok(out)
}
