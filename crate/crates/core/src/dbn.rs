//! Restricted Boltzmann machines trained by contrastive divergence, stacked
//! greedily, then finetuned as a feed-forward network with a softmax output.

use rand::seq::SliceRandom;
use rand::Rng as _;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::baselines::{check_training, FeatureInput, LinearModel, Loss};
use crate::corpus::heldout_mask;
use crate::eval::select_epochs;
use crate::linalg::DenseMatrix;
use crate::util::{derive_seed, rng_from_seed, sigmoid, softmax_in_place, Rng};

#[derive(Debug, Error, PartialEq)]
pub enum DbnError {
    #[error("expected a vector of length {expected}, got {got}")]
    Shape { expected: usize, got: usize },
    #[error("no training instances")]
    EmptyTraining,
    #[error("layer list is empty")]
    NoLayers,
    #[error("non-finite value during {phase} (epoch {epoch})")]
    NonFinite { phase: &'static str, epoch: usize },
    #[error("invalid schedule: {0}")]
    Schedule(String),
    #[error(transparent)]
    Baseline(#[from] crate::baselines::BaselineError),
    #[error(transparent)]
    Eval(#[from] crate::eval::EvalError),
}

pub type Result<T> = std::result::Result<T, DbnError>;

fn check_len(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(DbnError::Shape { expected, got })
    }
}

/// Energy `E(v, h) = -b_v·v - b_h·h - h·W v` with `W` of shape hidden x visible.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RbmLayer {
    pub weights: DenseMatrix,
    pub visible_bias: Vec<f64>,
    pub hidden_bias: Vec<f64>,
}

impl RbmLayer {
    pub fn zeros(visible: usize, hidden: usize) -> Self {
        RbmLayer {
            weights: DenseMatrix::zeros(hidden, visible),
            visible_bias: vec![0.0; visible],
            hidden_bias: vec![0.0; hidden],
        }
    }

    /// Weights uniform in `±0.01·sqrt(1/visible)`, zero biases.
    pub fn random(visible: usize, hidden: usize, rng: &mut Rng) -> Self {
        let a = 0.01 * (1.0 / visible.max(1) as f64).sqrt();
        let weights = DenseMatrix::from_fn(hidden, visible, |_, _| rng.gen_range(-a..=a));
        RbmLayer { weights, visible_bias: vec![0.0; visible], hidden_bias: vec![0.0; hidden] }
    }

    pub fn visible(&self) -> usize {
        self.visible_bias.len()
    }

    pub fn hidden(&self) -> usize {
        self.hidden_bias.len()
    }

    pub fn is_finite(&self) -> bool {
        self.weights.is_finite() && self.visible_bias.iter().chain(&self.hidden_bias).all(|v| v.is_finite())
    }
}

/// `P(h_i = 1 | v) = sigmoid(b_h_i + W_i·v)`.
pub fn hidden_probs(rbm: &RbmLayer, v: &[f64]) -> Result<Vec<f64>> {
    check_len(rbm.visible(), v.len())?;
    Ok(hidden_probs_unchecked(rbm, v))
}

fn hidden_probs_unchecked<X: FeatureInput + ?Sized>(rbm: &RbmLayer, v: &X) -> Vec<f64> {
    rbm.hidden_bias
        .iter()
        .enumerate()
        .map(|(i, b)| sigmoid(b + v.dot_dense(rbm.weights.row(i))))
        .collect()
}

/// `P(v_j = 1 | h) = sigmoid(b_v_j + Σ_i h_i W_ij)`.
pub fn visible_probs(rbm: &RbmLayer, h: &[f64]) -> Result<Vec<f64>> {
    check_len(rbm.hidden(), h.len())?;
    Ok(visible_probs_unchecked(rbm, h))
}

fn visible_probs_unchecked(rbm: &RbmLayer, h: &[f64]) -> Vec<f64> {
    let mut z = rbm.visible_bias.clone();
    for (i, &hi) in h.iter().enumerate() {
        if hi != 0.0 {
            for (zj, w) in z.iter_mut().zip(rbm.weights.row(i)) {
                *zj += hi * w;
            }
        }
    }
    z.iter_mut().for_each(|v| *v = sigmoid(*v));
    z
}

pub fn energy(rbm: &RbmLayer, v: &[f64], h: &[f64]) -> Result<f64> {
    check_len(rbm.visible(), v.len())?;
    check_len(rbm.hidden(), h.len())?;
    let mut e = -crate::linalg::dot(&rbm.visible_bias, v) - crate::linalg::dot(&rbm.hidden_bias, h);
    for (i, &hi) in h.iter().enumerate() {
        e -= hi * crate::linalg::dot(rbm.weights.row(i), v);
    }
    Ok(e)
}

const LOG_FLOOR: f64 = 1e-12;

/// Summed binary cross-entropy of reconstruction `v1` against `v0`.
fn reconstruction_error(v0: &[f64], v1: &[f64]) -> f64 {
    v0.iter()
        .zip(v1)
        .map(|(&a, &p)| -(a * p.max(LOG_FLOOR).ln() + (1.0 - a) * (1.0 - p).max(LOG_FLOOR).ln()))
        .sum()
}

/// One contrastive-divergence step on a minibatch, in place. Returns the
/// mean reconstruction cross-entropy (summed over visible units) of the batch.
///
/// Per instance: `h0 ~ Bernoulli(P(h|v0))`, `v1 = P(v|h0)`, `h1 = P(h|v1)`;
/// with `steps > 1` the chain continues from a fresh sample of `h1`.
/// The data term uses the `h0` sample, the bias update for `b_h` its
/// probabilities.
pub fn cd_update(rbm: &mut RbmLayer, batch: &[Vec<f64>], rate: f64, steps: usize, rng: &mut Rng) -> Result<f64> {
    if steps == 0 {
        return Err(DbnError::Schedule("CD steps must be >= 1".into()));
    }
    if batch.is_empty() {
        return Ok(0.0);
    }
    let (nv, nh) = (rbm.visible(), rbm.hidden());
    for v in batch {
        check_len(nv, v.len())?;
    }
    let mut dw = DenseMatrix::zeros(nh, nv);
    let mut dbv = vec![0.0; nv];
    let mut dbh = vec![0.0; nh];
    let mut error = 0.0;
    for v0 in batch {
        let ph0 = hidden_probs_unchecked(rbm, v0);
        let h0: Vec<f64> = ph0.iter().map(|&p| f64::from(u8::from(rng.gen::<f64>() < p))).collect();
        let mut v1 = visible_probs_unchecked(rbm, &h0);
        let mut h1 = hidden_probs_unchecked(rbm, &v1);
        for _ in 1..steps {
            let hs: Vec<f64> = h1.iter().map(|&p| f64::from(u8::from(rng.gen::<f64>() < p))).collect();
            v1 = visible_probs_unchecked(rbm, &hs);
            h1 = hidden_probs_unchecked(rbm, &v1);
        }
        error += reconstruction_error(v0, &v1);
        for i in 0..nh {
            let row = dw.row_mut(i);
            if h0[i] != 0.0 {
                for (d, &v) in row.iter_mut().zip(v0) {
                    *d += h0[i] * v;
                }
            }
            for (d, &v) in row.iter_mut().zip(&v1) {
                *d -= h1[i] * v;
            }
            dbh[i] += ph0[i] - h1[i];
        }
        for j in 0..nv {
            dbv[j] += v0[j] - v1[j];
        }
    }
    let step = rate / batch.len() as f64;
    for (w, d) in rbm.weights.as_mut_slice().iter_mut().zip(dw.as_slice()) {
        *w += step * d;
    }
    for (b, d) in rbm.visible_bias.iter_mut().zip(&dbv) {
        *b += step * d;
    }
    for (b, d) in rbm.hidden_bias.iter_mut().zip(&dbh) {
        *b += step * d;
    }
    Ok(error / batch.len() as f64)
}

pub fn cd1_update(rbm: &mut RbmLayer, batch: &[Vec<f64>], rate: f64, rng: &mut Rng) -> Result<f64> {
    cd_update(rbm, batch, rate, 1, rng)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DbnSchedule {
    pub hidden_layers: Vec<usize>,
    pub pretrain_epochs: usize,
    pub pretrain_rate: f64,
    pub batch_size: usize,
    pub cd_steps: usize,
    pub finetune_rate: f64,
    /// Candidate finetune epoch counts, chosen on a held-out part.
    pub finetune_grid: Vec<usize>,
    pub dev_fraction: f64,
    pub seed: u64,
}

impl Default for DbnSchedule {
    fn default() -> Self {
        DbnSchedule {
            hidden_layers: vec![100, 100, 100],
            pretrain_epochs: 25,
            pretrain_rate: 0.1,
            batch_size: 10,
            cd_steps: 1,
            finetune_rate: 1.0,
            finetune_grid: vec![10, 25, 50, 100, 200],
            dev_fraction: 0.1,
            seed: 42,
        }
    }
}

impl DbnSchedule {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(DbnError::Schedule(m.to_string()));
        if self.hidden_layers.is_empty() {
            return Err(DbnError::NoLayers);
        }
        if self.hidden_layers.contains(&0) {
            return bad("layer sizes must be >= 1");
        }
        if !(self.pretrain_rate > 0.0 && self.finetune_rate > 0.0) {
            return bad("rates must be > 0");
        }
        if self.pretrain_epochs == 0 || self.batch_size == 0 || self.cd_steps == 0 {
            return bad("pretrain epochs, batch size and CD steps must be >= 1");
        }
        if self.finetune_grid.is_empty() {
            return bad("finetune grid is empty");
        }
        Ok(())
    }
}

/// Greedy layer-wise pretraining. Layer 1 sees the input; each later layer
/// sees the hidden probabilities of the one below. Returns the layers and
/// the mean reconstruction error of every epoch, per layer.
pub fn pretrain<X: FeatureInput>(x: &[X], schedule: &DbnSchedule) -> Result<(Vec<RbmLayer>, Vec<Vec<f64>>)> {
    schedule.validate()?;
    if x.is_empty() {
        return Err(DbnError::EmptyTraining);
    }
    let d = x[0].dim();
    let mut data: Vec<Vec<f64>> = Vec::with_capacity(x.len());
    for v in x {
        check_len(d, v.dim())?;
        data.push(v.dense());
    }
    let mut rng = rng_from_seed(derive_seed(schedule.seed, "pretrain"));
    let mut layers = Vec::new();
    let mut errors = Vec::new();
    let mut visible = d;
    for &hidden in &schedule.hidden_layers {
        let mut rbm = RbmLayer::random(visible, hidden, &mut rng);
        let curve = train_rbm(&mut rbm, &data, schedule.pretrain_epochs, schedule.pretrain_rate, schedule, &mut rng)?;
        data = data.iter().map(|v| hidden_probs_unchecked(&rbm, v)).collect();
        layers.push(rbm);
        errors.push(curve);
        visible = hidden;
    }
    Ok((layers, errors))
}

/// Runs `epochs` passes of shuffled minibatch CD over `data`.
pub fn train_rbm(
    rbm: &mut RbmLayer,
    data: &[Vec<f64>],
    epochs: usize,
    rate: f64,
    schedule: &DbnSchedule,
    rng: &mut Rng,
) -> Result<Vec<f64>> {
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut curve = Vec::with_capacity(epochs);
    for epoch in 0..epochs {
        order.shuffle(rng);
        let mut total = 0.0;
        for chunk in order.chunks(schedule.batch_size) {
            let batch: Vec<Vec<f64>> = chunk.iter().map(|&i| data[i].clone()).collect();
            total += cd_update(rbm, &batch, rate, schedule.cd_steps, rng)? * chunk.len() as f64;
        }
        let mean = total / data.len().max(1) as f64;
        if !mean.is_finite() || !rbm.is_finite() {
            return Err(DbnError::NonFinite { phase: "pretraining", epoch });
        }
        curve.push(mean);
    }
    Ok(curve)
}

/// A sigmoid layer of the finetuned network: `sigmoid(W a + b)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SigmoidLayer {
    /// out x in
    pub weights: DenseMatrix,
    pub bias: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DbnModel {
    pub layers: Vec<SigmoidLayer>,
    pub top: LinearModel,
}

/// Activations and backpropagated deltas of one instance. The gradient of
/// layer `l` (top = last) is `deltas[l] ⊗ inputs[l]` for weights and
/// `deltas[l]` for biases, where `inputs[0]` is the network input.
#[derive(Debug, Clone, PartialEq)]
pub struct DbnGradient {
    pub inputs: Vec<Vec<f64>>,
    pub deltas: Vec<Vec<f64>>,
}

impl DbnModel {
    /// Sigmoid layers from pretrained RBMs (visible biases dropped) plus a
    /// zero softmax top.
    pub fn from_pretrained(layers: &[RbmLayer], k: usize) -> Result<Self> {
        let last = layers.last().ok_or(DbnError::NoLayers)?;
        for pair in layers.windows(2) {
            check_len(pair[0].hidden(), pair[1].visible())?;
        }
        Ok(DbnModel {
            layers: layers
                .iter()
                .map(|r| SigmoidLayer { weights: r.weights.clone(), bias: r.hidden_bias.clone() })
                .collect(),
            top: LinearModel::zeros(k, last.hidden(), Loss::Softmax),
        })
    }

    pub fn dim(&self) -> usize {
        self.layers[0].weights.cols()
    }

    pub fn num_classes(&self) -> usize {
        self.top.num_classes()
    }

    /// Activations of every sigmoid layer, last one = top input.
    fn forward<X: FeatureInput>(&self, x: &X) -> Vec<Vec<f64>> {
        let mut acts: Vec<Vec<f64>> = Vec::with_capacity(self.layers.len());
        for (l, layer) in self.layers.iter().enumerate() {
            let a: Vec<f64> = layer
                .bias
                .iter()
                .enumerate()
                .map(|(i, b)| {
                    let row = layer.weights.row(i);
                    let z = if l == 0 { x.dot_dense(row) } else { crate::linalg::dot(row, &acts[l - 1]) };
                    sigmoid(b + z)
                })
                .collect();
            acts.push(a);
        }
        acts
    }

    pub fn probabilities<X: FeatureInput>(&self, x: &X) -> Result<Vec<f64>> {
        check_len(self.dim(), x.dim())?;
        let acts = self.forward(x);
        Ok(self.top.probabilities(acts.last().unwrap())?)
    }
}

pub fn dbn_predict<X: FeatureInput>(model: &DbnModel, x: &X) -> Result<usize> {
    check_len(model.dim(), x.dim())?;
    let acts = model.forward(x);
    Ok(model.top.predict(acts.last().unwrap())?)
}

/// Cross-entropy of label `y` and the full backward pass.
pub fn dbn_backprop<X: FeatureInput>(model: &DbnModel, x: &X, y: usize) -> (f64, DbnGradient) {
    let acts = model.forward(x);
    let top_in = acts.last().unwrap();
    let mut p: Vec<f64> =
        (0..model.top.num_classes()).map(|c| model.top.bias[c] + crate::linalg::dot(model.top.weights.row(c), top_in)).collect();
    softmax_in_place(&mut p);
    let loss = -p[y].max(f64::MIN_POSITIVE).ln();
    let mut delta = p;
    delta[y] -= 1.0;

    let depth = model.layers.len();
    let mut deltas = vec![Vec::new(); depth + 1];
    let mut upper_weights = &model.top.weights;
    for l in (0..depth).rev() {
        let a = &acts[l];
        let mut d = vec![0.0; a.len()];
        for (o, dout) in delta.iter().enumerate() {
            for (di, w) in d.iter_mut().zip(upper_weights.row(o)) {
                *di += dout * w;
            }
        }
        for (di, ai) in d.iter_mut().zip(a) {
            *di *= ai * (1.0 - ai);
        }
        deltas[l + 1] = std::mem::replace(&mut delta, d);
        upper_weights = &model.layers[l].weights;
    }
    deltas[0] = delta;
    let mut inputs = Vec::with_capacity(depth + 1);
    inputs.push(x.dense());
    inputs.extend(acts);
    (loss, DbnGradient { inputs, deltas })
}

fn sgd_step<X: FeatureInput>(model: &mut DbnModel, x: &X, y: usize, rate: f64) -> f64 {
    let (loss, g) = dbn_backprop(model, x, y);
    let depth = model.layers.len();
    for (c, d) in g.deltas[depth].iter().enumerate() {
        for (w, a) in model.top.weights.row_mut(c).iter_mut().zip(&g.inputs[depth]) {
            *w -= rate * d * a;
        }
        model.top.bias[c] -= rate * d;
    }
    for l in 0..depth {
        let layer = &mut model.layers[l];
        for (i, d) in g.deltas[l].iter().enumerate() {
            if *d == 0.0 {
                continue;
            }
            let row = layer.weights.row_mut(i);
            if l == 0 {
                x.for_each_active(|j, v| row[j] -= rate * d * v);
            } else {
                for (w, a) in row.iter_mut().zip(&g.inputs[l]) {
                    *w -= rate * d * a;
                }
            }
            layer.bias[i] -= rate * d;
        }
    }
    loss
}

/// Runs one shuffled finetuning epoch over `order`.
fn finetune_epoch<X: FeatureInput>(
    model: &mut DbnModel,
    x: &[X],
    y: &[usize],
    order: &mut [usize],
    rate: f64,
    rng: &mut Rng,
    epoch: usize,
) -> Result<()> {
    order.shuffle(rng);
    for &i in order.iter() {
        let loss = sgd_step(model, &x[i], y[i], rate);
        if !loss.is_finite() {
            return Err(DbnError::NonFinite { phase: "finetuning", epoch });
        }
    }
    Ok(())
}

/// Backpropagation over the whole stack for a fixed number of epochs.
pub fn finetune_epochs<X: FeatureInput>(
    layers: &[RbmLayer],
    x: &[X],
    y: &[usize],
    k: usize,
    epochs: usize,
    schedule: &DbnSchedule,
) -> Result<DbnModel> {
    check_training(x, y, k)?;
    let mut model = DbnModel::from_pretrained(layers, k)?;
    check_len(model.dim(), x[0].dim())?;
    let mut rng = rng_from_seed(derive_seed(schedule.seed, "finetune"));
    let mut order: Vec<usize> = (0..x.len()).collect();
    for epoch in 0..epochs {
        finetune_epoch(&mut model, x, y, &mut order, schedule.finetune_rate, &mut rng, epoch)?;
    }
    Ok(model)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FinetuneReport {
    pub selected_epochs: usize,
    /// Held-out recall per grid value; empty when no held-out part existed.
    pub dev_recall: Vec<(usize, f64)>,
}

/// Picks the finetune epoch count on a stratified held-out part of the
/// training data, then finetunes on all of it for that many epochs.
/// Without a usable held-out part, the smallest grid value is used.
pub fn finetune<X: FeatureInput>(
    layers: &[RbmLayer],
    x: &[X],
    y: &[usize],
    k: usize,
    schedule: &DbnSchedule,
) -> Result<(DbnModel, FinetuneReport)> {
    schedule.validate()?;
    check_training(x, y, k)?;
    let keys: Vec<String> = y.iter().map(usize::to_string).collect();
    let keys: Vec<&str> = keys.iter().map(String::as_str).collect();
    let mask = heldout_mask(&keys, schedule.dev_fraction, schedule.seed)
        .map_err(|e| DbnError::Schedule(e.to_string()))?;
    let dev: Vec<usize> = (0..x.len()).filter(|&i| mask[i]).collect();
    let mut train: Vec<usize> = (0..x.len()).filter(|&i| !mask[i]).collect();
    let mut grid = schedule.finetune_grid.clone();
    grid.sort_unstable();
    grid.dedup();

    let (selected, dev_recall) = if dev.is_empty() || train.is_empty() {
        (grid[0], Vec::new())
    } else {
        let mut model = DbnModel::from_pretrained(layers, k)?;
        check_len(model.dim(), x[0].dim())?;
        let mut rng = rng_from_seed(derive_seed(schedule.seed, "finetune-dev"));
        let mut done = 0;
        let mut recalls = Vec::new();
        let best = select_epochs(&grid, |epochs| {
            while done < epochs {
                finetune_epoch(&mut model, x, y, &mut train, schedule.finetune_rate, &mut rng, done)?;
                done += 1;
            }
            let correct = dev.iter().filter(|&&i| dbn_predict(&model, &x[i]).ok() == Some(y[i])).count();
            let recall = correct as f64 / dev.len() as f64;
            recalls.push((epochs, recall));
            Ok::<f64, DbnError>(recall)
        })?;
        (best, recalls)
    };
    let model = finetune_epochs(layers, x, y, k, selected, schedule)?;
    Ok((model, FinetuneReport { selected_epochs: selected, dev_recall }))
}

#[derive(Debug, Clone, PartialEq)]
pub struct DbnTraining {
    pub model: DbnModel,
    pub pretrain_errors: Vec<Vec<f64>>,
    pub finetune: FinetuneReport,
}

/// Pretraining followed by finetuning with held-out epoch selection.
pub fn train_dbn<X: FeatureInput>(x: &[X], y: &[usize], k: usize, schedule: &DbnSchedule) -> Result<DbnTraining> {
    check_training(x, y, k)?;
    let (layers, pretrain_errors) = pretrain(x, schedule)?;
    let (model, finetune) = finetune(&layers, x, y, k, schedule)?;
    Ok(DbnTraining { model, pretrain_errors, finetune })
}

/// The 30 distinct 4x4 bars-and-stripes images, row-major.
pub fn bars_and_stripes() -> Vec<Vec<f64>> {
    let mut out: Vec<Vec<f64>> = Vec::new();
    for mask in 0u32..16 {
        let rows: Vec<f64> = (0..16).map(|p| f64::from((mask >> (p / 4)) & 1)).collect();
        let cols: Vec<f64> = (0..16).map(|p| f64::from((mask >> (p % 4)) & 1)).collect();
        for img in [rows, cols] {
            if !out.contains(&img) {
                out.push(img);
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    fn random_rbm(nv: usize, nh: usize, seed: u64) -> RbmLayer {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        RbmLayer {
            weights: DenseMatrix::from_fn(nh, nv, |_, _| rng.gen_range(-1.5..1.5)),
            visible_bias: (0..nv).map(|_| rng.gen_range(-1.0..1.0)).collect(),
            hidden_bias: (0..nh).map(|_| rng.gen_range(-1.0..1.0)).collect(),
        }
    }

    fn bits(mask: usize, n: usize) -> Vec<f64> {
        (0..n).map(|i| ((mask >> i) & 1) as f64).collect()
    }

    #[test]
    fn closed_forms() {
        let rbm = RbmLayer::zeros(3, 2);
        assert_eq!(hidden_probs(&rbm, &[1.0, 0.0, 1.0]).unwrap(), vec![0.5, 0.5]);
        assert_eq!(visible_probs(&rbm, &[1.0, 1.0]).unwrap(), vec![0.5; 3]);
        let one = RbmLayer { weights: DenseMatrix::from_rows(&[[3f64.ln()]]).unwrap(), visible_bias: vec![0.0], hidden_bias: vec![0.0] };
        assert!((hidden_probs(&one, &[1.0]).unwrap()[0] - 0.75).abs() < 1e-15);
        assert!((visible_probs(&one, &[1.0]).unwrap()[0] - 0.75).abs() < 1e-15);
        assert!(hidden_probs(&rbm, &[1.0]).is_err());
    }

    #[test]
    fn energy_expansion() {
        let rbm = RbmLayer { weights: DenseMatrix::from_rows(&[[0.7]]).unwrap(), visible_bias: vec![0.2], hidden_bias: vec![-0.4] };
        assert_eq!(energy(&rbm, &[0.0], &[0.0]).unwrap(), 0.0);
        assert!((energy(&rbm, &[1.0], &[1.0]).unwrap() + (0.2 - 0.4 + 0.7)).abs() < 1e-15);
    }

    #[test]
    fn symmetric_machine_conditionals_coincide() {
        let w = DenseMatrix::from_rows(&[[0.5, -1.0], [-1.0, 2.0]]).unwrap();
        let rbm = RbmLayer { weights: w, visible_bias: vec![0.3, -0.2], hidden_bias: vec![0.3, -0.2] };
        let x = [1.0, 0.0];
        assert_eq!(hidden_probs(&rbm, &x).unwrap(), visible_probs(&rbm, &x).unwrap());
    }

    #[test]
    fn conditionals_match_boltzmann_enumeration() {
        let (nv, nh) = (2, 2);
        let rbm = random_rbm(nv, nh, 5);
        for vm in 0..(1 << nv) {
            let v = bits(vm, nv);
            let weights: Vec<(Vec<f64>, f64)> = (0..(1 << nh))
                .map(|hm| {
                    let h = bits(hm, nh);
                    let p = (-energy(&rbm, &v, &h).unwrap()).exp();
                    (h, p)
                })
                .collect();
            let z: f64 = weights.iter().map(|w| w.1).sum();
            let probs = hidden_probs(&rbm, &v).unwrap();
            for i in 0..nh {
                let marginal: f64 = weights.iter().filter(|(h, _)| h[i] == 1.0).map(|w| w.1).sum::<f64>() / z;
                assert!((marginal - probs[i]).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn zero_rate_and_equal_statistics() {
        let mut rbm = random_rbm(4, 3, 2);
        let before = rbm.clone();
        let mut rng = rng_from_seed(1);
        cd1_update(&mut rbm, &[vec![1.0, 0.0, 1.0, 1.0]], 0.0, &mut rng).unwrap();
        assert_eq!(rbm, before);
    }

    #[test]
    fn cd_is_deterministic_per_seed() {
        let data = bars_and_stripes();
        let run = || {
            let mut rbm = RbmLayer::random(16, 8, &mut rng_from_seed(7));
            let mut rng = rng_from_seed(8);
            cd1_update(&mut rbm, &data[..10], 0.1, &mut rng).unwrap();
            rbm
        };
        assert_eq!(run(), run());
        assert_eq!(data.len(), 30);
    }

    #[test]
    fn stacked_shapes_and_errors() {
        let x: Vec<Vec<f64>> = bars_and_stripes();
        let sched = DbnSchedule { hidden_layers: vec![6, 4], pretrain_epochs: 3, ..DbnSchedule::default() };
        let (layers, errors) = pretrain(&x, &sched).unwrap();
        assert_eq!((layers[0].visible(), layers[0].hidden(), layers[1].visible()), (16, 6, 6));
        assert!(errors.iter().all(|c| c.len() == 3 && c.iter().all(|e| e.is_finite())));
        assert!(pretrain::<Vec<f64>>(&[], &sched).is_err());
        let mismatched = [layers[1].clone(), layers[0].clone()];
        assert!(DbnModel::from_pretrained(&mismatched, 2).is_err());
    }

    /// Weight (r, c) of layer `l`, or its bias when `c` is one past the last column.
    fn param(m: &mut DbnModel, l: usize, r: usize, c: usize) -> &mut f64 {
        let depth = m.layers.len();
        let (weights, bias) = if l < depth {
            let layer = &mut m.layers[l];
            (&mut layer.weights, &mut layer.bias)
        } else {
            (&mut m.top.weights, &mut m.top.bias)
        };
        if c < weights.cols() {
            &mut weights[(r, c)]
        } else {
            &mut bias[r]
        }
    }

    #[test]
    fn backprop_matches_finite_differences() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(12);
        let layers = vec![random_rbm(12, 4, 1), random_rbm(4, 3, 2)];
        let mut model = DbnModel::from_pretrained(&layers, 3).unwrap();
        model.top.weights = DenseMatrix::from_fn(3, 3, |_, _| rng.gen_range(-1.0..1.0));
        model.top.bias = vec![0.1, -0.3, 0.2];
        let x: Vec<f64> = (0..12).map(|_| rng.gen_range(0.0..1.0)).collect();
        let y = 1;
        let (_, g) = dbn_backprop(&model, &x, y);
        let h = 1e-5;
        let mut worst: f64 = 0.0;
        let depth = model.layers.len();
        for l in 0..=depth {
            let (rows, cols) = if l < depth {
                (model.layers[l].weights.rows(), model.layers[l].weights.cols())
            } else {
                (model.top.weights.rows(), model.top.weights.cols())
            };
            for r in 0..rows {
                for c in 0..=cols {
                    let analytic = if c < cols { g.deltas[l][r] * g.inputs[l][c] } else { g.deltas[l][r] };
                    let orig = *param(&mut model, l, r, c);
                    *param(&mut model, l, r, c) = orig + h;
                    let up = dbn_backprop(&model, &x, y).0;
                    *param(&mut model, l, r, c) = orig - h;
                    let down = dbn_backprop(&model, &x, y).0;
                    *param(&mut model, l, r, c) = orig;
                    let numeric = (up - down) / (2.0 * h);
                    worst = worst.max((analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-8));
                }
            }
        }
        assert!(worst <= 1e-4, "max relative error {worst}");
    }

    #[test]
    fn zero_top_predicts_first_label() {
        let layers = vec![random_rbm(5, 3, 4)];
        let model = DbnModel::from_pretrained(&layers, 4).unwrap();
        for m in 0..32 {
            assert_eq!(dbn_predict(&model, &bits(m, 5)).unwrap(), 0);
        }
        assert!(dbn_predict(&model, &vec![0.0; 4]).is_err());
    }

    #[test]
    fn separable_toy_is_learned() {
        let x: Vec<Vec<f64>> = (0..40).map(|i| bits(if i % 2 == 0 { 0b0011 } else { 0b1100 } | (i % 3) << 4, 6)).collect();
        let y: Vec<usize> = (0..40).map(|i| i % 2).collect();
        let sched = DbnSchedule { hidden_layers: vec![8, 8], pretrain_epochs: 5, ..DbnSchedule::default() };
        let t = train_dbn(&x, &y, 2, &sched).unwrap();
        assert!(x.iter().zip(&y).all(|(xi, &yi)| dbn_predict(&t.model, xi).unwrap() == yi));
        assert!(sched.finetune_grid.contains(&t.finetune.selected_epochs));
        let again = train_dbn(&x, &y, 2, &sched).unwrap();
        assert_eq!(serde_json::to_string(&t.model).unwrap(), serde_json::to_string(&again.model).unwrap());
    }
}
