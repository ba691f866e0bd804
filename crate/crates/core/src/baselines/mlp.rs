use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::{check_dim, check_training, fit_epochs, BaselineError, EpochTrainer, FeatureInput, Result, SgdConfig};
use crate::linalg::DenseMatrix;
use crate::util::{argmax, derive_seed, rng_from_seed, sigmoid, softmax_in_place};

/// One sigmoid hidden layer and a softmax output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpModel {
    /// d x h, stored input-major so a sparse input touches only its rows.
    pub w1: DenseMatrix,
    pub b1: Vec<f64>,
    /// k x h
    pub w2: DenseMatrix,
    pub b2: Vec<f64>,
}

/// Backpropagated signals for one instance. Weight gradients are outer
/// products: `dW2 = output_delta ⊗ hidden`, `dW1[j] = x_j * hidden_delta`.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpGradient {
    pub hidden: Vec<f64>,
    pub hidden_delta: Vec<f64>,
    pub output_delta: Vec<f64>,
}

impl MlpModel {
    pub fn zeros(d: usize, h: usize, k: usize) -> Self {
        MlpModel { w1: DenseMatrix::zeros(d, h), b1: vec![0.0; h], w2: DenseMatrix::zeros(k, h), b2: vec![0.0; k] }
    }

    /// Glorot-uniform weights in `±sqrt(6 / (fan_in + fan_out))`, zero biases.
    pub fn glorot(d: usize, h: usize, k: usize, seed: u64) -> Self {
        let mut rng = rng_from_seed(seed);
        let a1 = (6.0 / (d + h) as f64).sqrt();
        let a2 = (6.0 / (h + k) as f64).sqrt();
        let w1 = DenseMatrix::from_fn(d, h, |_, _| rng.gen_range(-a1..=a1));
        let w2 = DenseMatrix::from_fn(k, h, |_, _| rng.gen_range(-a2..=a2));
        MlpModel { w1, b1: vec![0.0; h], w2, b2: vec![0.0; k] }
    }

    pub fn dim(&self) -> usize {
        self.w1.rows()
    }

    pub fn hidden_size(&self) -> usize {
        self.b1.len()
    }

    pub fn num_classes(&self) -> usize {
        self.b2.len()
    }

    fn hidden<X: FeatureInput>(&self, x: &X) -> Vec<f64> {
        let mut z = self.b1.clone();
        x.for_each_active(|j, v| {
            for (zi, w) in z.iter_mut().zip(self.w1.row(j)) {
                *zi += v * w;
            }
        });
        z.iter_mut().for_each(|v| *v = sigmoid(*v));
        z
    }

    fn output_scores(&self, hidden: &[f64]) -> Vec<f64> {
        self.b2.iter().enumerate().map(|(c, b)| b + crate::linalg::dot(self.w2.row(c), hidden)).collect()
    }

    pub fn probabilities<X: FeatureInput>(&self, x: &X) -> Result<Vec<f64>> {
        check_dim(self.dim(), x.dim())?;
        let mut z = self.output_scores(&self.hidden(x));
        softmax_in_place(&mut z);
        Ok(z)
    }

    pub fn predict<X: FeatureInput>(&self, x: &X) -> Result<usize> {
        check_dim(self.dim(), x.dim())?;
        Ok(argmax(&self.output_scores(&self.hidden(x))))
    }
}

/// Cross-entropy of label `y` and its backpropagated signals.
pub fn mlp_backprop<X: FeatureInput>(model: &MlpModel, x: &X, y: usize) -> (f64, MlpGradient) {
    let hidden = model.hidden(x);
    let mut p = model.output_scores(&hidden);
    softmax_in_place(&mut p);
    let loss = -p[y].ln();
    let mut output_delta = p;
    output_delta[y] -= 1.0;
    let mut hidden_delta = vec![0.0; hidden.len()];
    for (c, dc) in output_delta.iter().enumerate() {
        for (hd, w) in hidden_delta.iter_mut().zip(model.w2.row(c)) {
            *hd += dc * w;
        }
    }
    for (hd, a) in hidden_delta.iter_mut().zip(&hidden) {
        *hd *= a * (1.0 - a);
    }
    (loss, MlpGradient { hidden, hidden_delta, output_delta })
}

struct MlpTrainer {
    model: MlpModel,
    rate: f64,
}

impl<X: FeatureInput> EpochTrainer<X> for MlpTrainer {
    fn run_epoch(&mut self, x: &[X], y: &[usize], order: &[usize], epoch: usize) -> Result<()> {
        let rate = self.rate;
        let m = &mut self.model;
        for &i in order {
            let (loss, g) = mlp_backprop(m, &x[i], y[i]);
            if !loss.is_finite() {
                return Err(BaselineError::NonFinite { epoch, instance: i });
            }
            for (c, dc) in g.output_delta.iter().enumerate() {
                for (w, a) in m.w2.row_mut(c).iter_mut().zip(&g.hidden) {
                    *w -= rate * dc * a;
                }
                m.b2[c] -= rate * dc;
            }
            x[i].for_each_active(|j, v| {
                for (w, d) in m.w1.row_mut(j).iter_mut().zip(&g.hidden_delta) {
                    *w -= rate * v * d;
                }
            });
            for (b, d) in m.b1.iter_mut().zip(&g.hidden_delta) {
                *b -= rate * d;
            }
        }
        Ok(())
    }

    fn predict_one(&self, x: &X) -> usize {
        argmax(&self.model.output_scores(&self.model.hidden(x)))
    }
}

pub fn train_mlp<X: FeatureInput>(
    x: &[X],
    y: &[usize],
    k: usize,
    hidden: usize,
    config: &SgdConfig,
) -> Result<MlpModel> {
    let d = check_training(x, y, k)?;
    if hidden == 0 {
        return Err(BaselineError::Config("hidden size must be >= 1".into()));
    }
    let init_seed = derive_seed(config.seed, "mlp-init");
    let trainer = fit_epochs(x, y, config, || MlpTrainer {
        model: MlpModel::glorot(d, hidden, k, init_seed),
        rate: config.learning_rate,
    })?;
    Ok(trainer.model)
}
