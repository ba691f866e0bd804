use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::{check_dim, check_training, BaselineError, Result, SvmConfig};
use crate::features::SparseBinaryVector;
use crate::linalg::{gram_sparse, DenseMatrix, KernelSpec};
use crate::util::{argmax, rng_from_seed};

/// One-vs-rest kernel machine: `f_c(x) = Σ_s coef[c][s] κ(sv_s, x) + bias[c]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelSvmModel {
    pub kernel: KernelSpec,
    pub dim: usize,
    /// Training points with a non-zero coefficient for some class.
    pub support: Vec<SparseBinaryVector>,
    /// Original training index of each support vector.
    pub support_index: Vec<usize>,
    /// k x |support|
    pub coef: DenseMatrix,
    pub bias: Vec<f64>,
}

impl KernelSvmModel {
    pub fn num_classes(&self) -> usize {
        self.bias.len()
    }

    pub fn decision_values(&self, x: &SparseBinaryVector) -> Result<Vec<f64>> {
        check_dim(self.dim, x.dim())?;
        let kx: Vec<f64> = self.support.iter().map(|s| self.kernel.eval_sparse(s, x)).collect();
        Ok((0..self.num_classes())
            .map(|c| self.bias[c] + crate::linalg::dot(self.coef.row(c), &kx))
            .collect())
    }

    pub fn predict(&self, x: &SparseBinaryVector) -> Result<usize> {
        Ok(argmax(&self.decision_values(x)?))
    }
}

/// Kernelized form of the linear SVM trainer. The bias is folded in as a
/// constant feature, i.e. the trainer works with `κ(x, y) + 1`; with a
/// linear kernel it follows the linear trainer step for step. Coefficients
/// shrink by `1 - η` each step, which realizes the `(1/2)|w|^2` term.
pub fn train_kernel_svm(
    x: &[SparseBinaryVector],
    y: &[usize],
    k: usize,
    kernel: KernelSpec,
    config: &SvmConfig,
) -> Result<KernelSvmModel> {
    let d = check_training(x, y, k)?;
    config.validate()?;
    kernel.validate().map_err(|e| BaselineError::Config(e.to_string()))?;
    let n = x.len();
    if k == 1 {
        return Ok(KernelSvmModel {
            kernel,
            dim: d,
            support: Vec::new(),
            support_index: Vec::new(),
            coef: DenseMatrix::zeros(1, 0),
            bias: vec![0.0],
        });
    }
    let mut gram = gram_sparse(x, &kernel);
    gram.as_mut_slice().iter_mut().for_each(|v| *v += 1.0);
    let push = config.c * n as f64;
    let mut beta = DenseMatrix::zeros(k, n);
    let mut beta_sum = DenseMatrix::zeros(k, n);
    let mut rng = rng_from_seed(config.seed);
    let mut order: Vec<usize> = (0..n).collect();
    let mut t = 0usize;
    for _ in 0..config.epochs {
        order.shuffle(&mut rng);
        for &i in &order {
            t += 1;
            let eta = 1.0 / (t as f64 + 1.0);
            for c in 0..k {
                let sign = if y[i] == c { 1.0 } else { -1.0 };
                let row = beta.row_mut(c);
                let margin = sign * crate::linalg::dot(row, gram.row(i));
                row.iter_mut().for_each(|v| *v *= 1.0 - eta);
                if margin < 1.0 {
                    row[i] += eta * push * sign;
                }
                for (s, v) in beta_sum.row_mut(c).iter_mut().zip(beta.row(c)) {
                    *s += v;
                }
            }
        }
    }
    let scale = 1.0 / t as f64;
    let support_index: Vec<usize> = (0..n).filter(|&i| (0..k).any(|c| beta_sum[(c, i)] != 0.0)).collect();
    let coef = DenseMatrix::from_fn(k, support_index.len(), |c, s| beta_sum[(c, support_index[s])] * scale);
    let bias = (0..k).map(|c| coef.row(c).iter().sum()).collect();
    Ok(KernelSvmModel {
        kernel,
        dim: d,
        support: support_index.iter().map(|&i| x[i].clone()).collect(),
        support_index,
        coef,
        bias,
    })
}
