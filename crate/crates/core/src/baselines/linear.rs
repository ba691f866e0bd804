use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::{check_dim, check_training, fit_epochs, EpochTrainer, FeatureInput, Result, SgdConfig, SvmConfig};
use super::BaselineError;
use crate::linalg::DenseMatrix;
use crate::util::{argmax, rng_from_seed, softmax_in_place};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Loss {
    Softmax,
    Hinge,
}

/// Per-class linear scores `W x + b`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    /// k x d
    pub weights: DenseMatrix,
    pub bias: Vec<f64>,
    pub loss: Loss,
}

impl LinearModel {
    pub fn zeros(k: usize, d: usize, loss: Loss) -> Self {
        LinearModel { weights: DenseMatrix::zeros(k, d), bias: vec![0.0; k], loss }
    }

    pub fn num_classes(&self) -> usize {
        self.bias.len()
    }

    pub fn dim(&self) -> usize {
        self.weights.cols()
    }

    pub fn scores<X: FeatureInput>(&self, x: &X) -> Result<Vec<f64>> {
        check_dim(self.dim(), x.dim())?;
        Ok(self.scores_unchecked(x))
    }

    fn scores_unchecked<X: FeatureInput>(&self, x: &X) -> Vec<f64> {
        self.bias.iter().enumerate().map(|(c, b)| b + x.dot_dense(self.weights.row(c))).collect()
    }

    /// Softmax of the scores.
    pub fn probabilities<X: FeatureInput>(&self, x: &X) -> Result<Vec<f64>> {
        let mut z = self.scores(x)?;
        softmax_in_place(&mut z);
        Ok(z)
    }

    pub fn predict<X: FeatureInput>(&self, x: &X) -> Result<usize> {
        Ok(argmax(&self.scores(x)?))
    }
}

/// Negative log-likelihood of label `y` and the per-class coefficients
/// `g_c = p_c - [c = y]`; the weight gradient is `g ⊗ x`, the bias gradient `g`.
pub fn logreg_gradient<X: FeatureInput>(model: &LinearModel, x: &X, y: usize) -> (f64, Vec<f64>) {
    let z = model.scores_unchecked(x);
    let max = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let log_norm = max + z.iter().map(|v| (v - max).exp()).sum::<f64>().ln();
    let loss = log_norm - z[y];
    let mut g: Vec<f64> = z.iter().map(|v| (v - log_norm).exp()).collect();
    g[y] -= 1.0;
    (loss, g)
}

struct LogregTrainer {
    model: LinearModel,
    rate: f64,
}

impl<X: FeatureInput> EpochTrainer<X> for LogregTrainer {
    fn run_epoch(&mut self, x: &[X], y: &[usize], order: &[usize], epoch: usize) -> Result<()> {
        let d = self.model.dim();
        for &i in order {
            let (loss, g) = logreg_gradient(&self.model, &x[i], y[i]);
            if !loss.is_finite() {
                return Err(BaselineError::NonFinite { epoch, instance: i });
            }
            let w = self.model.weights.as_mut_slice();
            for (c, gc) in g.iter().enumerate() {
                let step = self.rate * gc;
                let row = &mut w[c * d..(c + 1) * d];
                x[i].for_each_active(|j, v| row[j] -= step * v);
                self.model.bias[c] -= step;
            }
        }
        Ok(())
    }

    fn predict_one(&self, x: &X) -> usize {
        argmax(&self.model.scores_unchecked(x))
    }
}

/// Multinomial logistic regression by per-instance SGD on the mean negative
/// log-likelihood, starting from zero weights.
pub fn train_logreg<X: FeatureInput>(x: &[X], y: &[usize], k: usize, config: &SgdConfig) -> Result<LinearModel> {
    let d = check_training(x, y, k)?;
    let trainer = fit_epochs(x, y, config, || LogregTrainer {
        model: LinearModel::zeros(k, d, Loss::Softmax),
        rate: config.learning_rate,
    })?;
    Ok(trainer.model)
}

/// One-vs-rest primal objective, summed over classes:
/// `(1/2)(|w_c|^2 + b_c^2) + C Σ_i max(0, 1 - y_ic (w_c·x_i + b_c))`.
/// The bias is regularized as the weight of a constant feature.
pub fn svm_objective<X: FeatureInput>(model: &LinearModel, x: &[X], y: &[usize], c: f64) -> f64 {
    let mut total = 0.0;
    for class in 0..model.num_classes() {
        let w = model.weights.row(class);
        let b = model.bias[class];
        total += 0.5 * (w.iter().map(|v| v * v).sum::<f64>() + b * b);
        for (xi, &yi) in x.iter().zip(y) {
            let sign = if yi == class { 1.0 } else { -1.0 };
            total += c * (1.0 - sign * (xi.dot_dense(w) + b)).max(0.0);
        }
    }
    total
}

pub fn train_linear_svm<X: FeatureInput>(x: &[X], y: &[usize], k: usize, config: &SvmConfig) -> Result<LinearModel> {
    Ok(train_linear_svm_traced(x, y, k, config)?.0)
}

/// Trains the one-vs-rest linear SVM and also returns the objective of the
/// averaged iterate after every epoch.
///
/// Each binary problem runs stochastic subgradient steps with step size
/// `1/(t+1)` on `(1/2)|w|^2 + C Σ hinge`; a single sampled hinge term is
/// scaled by `n` so the step is an unbiased estimate of the full subgradient.
/// The returned weights are the average of all iterates.
pub fn train_linear_svm_traced<X: FeatureInput>(
    x: &[X],
    y: &[usize],
    k: usize,
    config: &SvmConfig,
) -> Result<(LinearModel, Vec<f64>)> {
    let d = check_training(x, y, k)?;
    config.validate()?;
    if k == 1 {
        return Ok((LinearModel::zeros(1, d, Loss::Hinge), Vec::new()));
    }
    let n = x.len();
    let push = config.c * n as f64;
    let mut w = DenseMatrix::zeros(k, d);
    let mut b = vec![0.0; k];
    let mut w_sum = DenseMatrix::zeros(k, d);
    let mut b_sum = vec![0.0; k];
    let mut rng = rng_from_seed(config.seed);
    let mut order: Vec<usize> = (0..n).collect();
    let mut trace = Vec::with_capacity(config.epochs);
    let mut t = 0usize;
    for _ in 0..config.epochs {
        order.shuffle(&mut rng);
        for &i in &order {
            t += 1;
            let eta = 1.0 / (t as f64 + 1.0);
            for c in 0..k {
                let sign = if y[i] == c { 1.0 } else { -1.0 };
                let row = w.row_mut(c);
                let margin = sign * (x[i].dot_dense(row) + b[c]);
                row.iter_mut().for_each(|v| *v *= 1.0 - eta);
                b[c] *= 1.0 - eta;
                if margin < 1.0 {
                    let step = eta * push * sign;
                    x[i].for_each_active(|j, v| row[j] += step * v);
                    b[c] += step;
                }
                for (s, v) in w_sum.row_mut(c).iter_mut().zip(w.row(c)) {
                    *s += v;
                }
                b_sum[c] += b[c];
            }
        }
        let avg = averaged(&w_sum, &b_sum, t);
        trace.push(svm_objective(&avg, x, y, config.c));
    }
    Ok((averaged(&w_sum, &b_sum, t), trace))
}

fn averaged(w_sum: &DenseMatrix, b_sum: &[f64], t: usize) -> LinearModel {
    let scale = 1.0 / t as f64;
    let mut weights = w_sum.clone();
    weights.as_mut_slice().iter_mut().for_each(|v| *v *= scale);
    LinearModel { weights, bias: b_sum.iter().map(|v| v * scale).collect(), loss: Loss::Hinge }
}
