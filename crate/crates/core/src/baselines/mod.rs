//! Shallow learners sharing one train/predict contract: labels are indices
//! into a [`LabelSpace`], inputs implement [`FeatureInput`].

mod kernel_svm;
mod knn;
mod linear;
mod mfs;
mod mlp;
mod nb;

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::heldout_mask;
use crate::features::SparseBinaryVector;
use crate::linalg::KernelSpec;
use crate::util::rng_from_seed;

pub use kernel_svm::{train_kernel_svm, KernelSvmModel};
pub use knn::{knn_predict, knn_predict_dense, Metric};
pub use linear::{logreg_gradient, svm_objective, train_linear_svm, train_linear_svm_traced, train_logreg, LinearModel, Loss};
pub use mfs::{most_frequent_label, train_mfs, MfsModel};
pub use mlp::{mlp_backprop, train_mlp, MlpGradient, MlpModel};
pub use nb::{nb_log_scores, train_nb, NbModel};

#[derive(Debug, Error, PartialEq)]
pub enum BaselineError {
    #[error("no training instances")]
    EmptyTraining,
    #[error("empty label space")]
    EmptyLabelSpace,
    #[error("{x} inputs but {y} labels")]
    LengthMismatch { x: usize, y: usize },
    #[error("input dimension {got}, model expects {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("label index {label} out of range for {k} classes")]
    LabelOutOfRange { label: usize, k: usize },
    #[error("class {0} has no training instances")]
    EmptyClass(usize),
    #[error("non-finite loss in epoch {epoch} at instance {instance}")]
    NonFinite { epoch: usize, instance: usize },
    #[error("invalid configuration: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, BaselineError>;

/// Sorted distinct sense labels of one word task.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LabelSpace {
    labels: Vec<String>,
}

impl LabelSpace {
    pub fn new<I, S>(labels: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let set: BTreeSet<String> = labels.into_iter().map(Into::into).collect();
        if set.is_empty() {
            return Err(BaselineError::EmptyLabelSpace);
        }
        Ok(LabelSpace { labels: set.into_iter().collect() })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.labels.binary_search_by(|l| l.as_str().cmp(label)).ok()
    }

    pub fn label(&self, index: usize) -> &str {
        &self.labels[index]
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }
}

/// A feature vector a learner can consume: binary sparse or dense real.
pub trait FeatureInput: Sync {
    fn dim(&self) -> usize;

    /// Calls `f(index, value)` for every non-zero entry.
    fn for_each_active<F: FnMut(usize, f64)>(&self, f: F);

    fn dense(&self) -> Vec<f64> {
        let mut v = vec![0.0; self.dim()];
        self.for_each_active(|j, x| v[j] = x);
        v
    }

    /// `<row, x>` for a dense weight row of length `dim`.
    fn dot_dense(&self, row: &[f64]) -> f64 {
        let mut s = 0.0;
        self.for_each_active(|j, x| s += row[j] * x);
        s
    }
}

impl FeatureInput for SparseBinaryVector {
    fn dim(&self) -> usize {
        SparseBinaryVector::dim(self)
    }

    fn for_each_active<F: FnMut(usize, f64)>(&self, mut f: F) {
        for &j in self.indices() {
            f(j, 1.0);
        }
    }

    fn dot_dense(&self, row: &[f64]) -> f64 {
        self.indices().iter().map(|&j| row[j]).sum()
    }
}

impl FeatureInput for [f64] {
    fn dim(&self) -> usize {
        self.len()
    }

    fn for_each_active<F: FnMut(usize, f64)>(&self, mut f: F) {
        for (j, &x) in self.iter().enumerate() {
            if x != 0.0 {
                f(j, x);
            }
        }
    }

    fn dense(&self) -> Vec<f64> {
        self.to_vec()
    }

    fn dot_dense(&self, row: &[f64]) -> f64 {
        crate::linalg::dot(self, row)
    }
}

impl FeatureInput for Vec<f64> {
    fn dim(&self) -> usize {
        self.len()
    }

    fn for_each_active<F: FnMut(usize, f64)>(&self, f: F) {
        self.as_slice().for_each_active(f)
    }

    fn dense(&self) -> Vec<f64> {
        self.clone()
    }

    fn dot_dense(&self, row: &[f64]) -> f64 {
        crate::linalg::dot(self, row)
    }
}

/// Checks lengths, label range and a common input dimension; returns it.
pub(crate) fn check_training<X: FeatureInput>(x: &[X], y: &[usize], k: usize) -> Result<usize> {
    if x.is_empty() {
        return Err(BaselineError::EmptyTraining);
    }
    if x.len() != y.len() {
        return Err(BaselineError::LengthMismatch { x: x.len(), y: y.len() });
    }
    if k == 0 {
        return Err(BaselineError::EmptyLabelSpace);
    }
    if let Some(&label) = y.iter().find(|&&l| l >= k) {
        return Err(BaselineError::LabelOutOfRange { label, k });
    }
    let d = x[0].dim();
    if let Some(bad) = x.iter().find(|v| v.dim() != d) {
        return Err(BaselineError::DimensionMismatch { expected: d, got: bad.dim() });
    }
    Ok(d)
}

pub(crate) fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(BaselineError::DimensionMismatch { expected, got })
    }
}

/// Per-instance SGD settings for logistic regression and the MLP.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SgdConfig {
    pub learning_rate: f64,
    /// Epoch budget; with early stopping, the upper bound of the search.
    pub max_epochs: usize,
    /// Stop once dev recall has not improved for this many epochs.
    pub patience: Option<usize>,
    pub dev_fraction: f64,
    pub seed: u64,
}

impl SgdConfig {
    pub fn logreg() -> Self {
        SgdConfig { learning_rate: 0.13, max_epochs: 100, patience: Some(10), dev_fraction: 0.1, seed: 42 }
    }

    pub fn mlp() -> Self {
        SgdConfig { learning_rate: 0.01, ..Self::logreg() }
    }

    pub fn fixed_epochs(learning_rate: f64, epochs: usize, seed: u64) -> Self {
        SgdConfig { learning_rate, max_epochs: epochs, patience: None, dev_fraction: 0.1, seed }
    }

    fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(BaselineError::Config(format!("learning rate must be > 0, got {}", self.learning_rate)));
        }
        if self.max_epochs == 0 {
            return Err(BaselineError::Config("epochs must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmConfig {
    pub c: f64,
    pub epochs: usize,
    pub seed: u64,
}

impl Default for SvmConfig {
    fn default() -> Self {
        SvmConfig { c: 1.0, epochs: 20, seed: 42 }
    }
}

impl SvmConfig {
    fn validate(&self) -> Result<()> {
        if !(self.c > 0.0 && self.c.is_finite()) {
            return Err(BaselineError::Config(format!("C must be > 0, got {}", self.c)));
        }
        if self.epochs == 0 {
            return Err(BaselineError::Config("epochs must be >= 1".into()));
        }
        Ok(())
    }
}

/// Hyperparameters for every shallow learner.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub logreg: SgdConfig,
    pub mlp: SgdConfig,
    pub mlp_hidden: usize,
    pub svm: SvmConfig,
    pub poly_degree: u32,
    pub poly_coef: f64,
    pub gamma: f64,
    pub knn_k: usize,
    pub knn_metric: Metric,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            logreg: SgdConfig::logreg(),
            mlp: SgdConfig::mlp(),
            mlp_hidden: 1000,
            svm: SvmConfig::default(),
            poly_degree: 3,
            poly_coef: 1.0,
            gamma: 3.0,
            knn_k: 1,
            knn_metric: Metric::Euclidean,
        }
    }
}

impl TrainConfig {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.logreg.seed = seed;
        self.mlp.seed = seed;
        self.svm.seed = seed;
        self
    }

    pub fn poly_kernel(&self) -> KernelSpec {
        KernelSpec::Polynomial { degree: self.poly_degree, coef: self.poly_coef }
    }

    pub fn rbf_kernel(&self) -> KernelSpec {
        KernelSpec::Rbf { gamma: self.gamma }
    }
}

/// A model trained one shuffled pass at a time.
pub(crate) trait EpochTrainer<X> {
    fn run_epoch(&mut self, x: &[X], y: &[usize], order: &[usize], epoch: usize) -> Result<()>;
    fn predict_one(&self, x: &X) -> usize;
}

/// Trains for a fixed number of epochs, or, with patience set, finds the
/// best epoch count on a stratified held-out part and retrains on all data
/// for that many epochs.
pub(crate) fn fit_epochs<X, T, F>(x: &[X], y: &[usize], config: &SgdConfig, mut init: F) -> Result<T>
where
    T: EpochTrainer<X>,
    F: FnMut() -> T,
{
    config.validate()?;
    let all: Vec<usize> = (0..x.len()).collect();
    let epochs = match config.patience {
        Some(patience) => {
            let keys: Vec<String> = y.iter().map(usize::to_string).collect();
            let keys: Vec<&str> = keys.iter().map(String::as_str).collect();
            let mask = heldout_mask(&keys, config.dev_fraction, config.seed)
                .map_err(|e| BaselineError::Config(e.to_string()))?;
            let dev: Vec<usize> = all.iter().copied().filter(|&i| mask[i]).collect();
            let train: Vec<usize> = all.iter().copied().filter(|&i| !mask[i]).collect();
            if dev.is_empty() || train.is_empty() {
                config.max_epochs
            } else {
                search_epochs(x, y, &train, &dev, config, patience, &mut init)?
            }
        }
        None => config.max_epochs,
    };
    let mut model = init();
    run_epochs(&mut model, x, y, all, epochs, config.seed)?;
    Ok(model)
}

fn run_epochs<X, T: EpochTrainer<X>>(
    model: &mut T,
    x: &[X],
    y: &[usize],
    mut order: Vec<usize>,
    epochs: usize,
    seed: u64,
) -> Result<()> {
    let mut rng = rng_from_seed(seed);
    for epoch in 0..epochs {
        order.shuffle(&mut rng);
        model.run_epoch(x, y, &order, epoch)?;
    }
    Ok(())
}

fn search_epochs<X, T, F>(
    x: &[X],
    y: &[usize],
    train: &[usize],
    dev: &[usize],
    config: &SgdConfig,
    patience: usize,
    init: &mut F,
) -> Result<usize>
where
    T: EpochTrainer<X>,
    F: FnMut() -> T,
{
    let mut model = init();
    let mut rng = rng_from_seed(config.seed);
    let mut order = train.to_vec();
    let (mut best_epoch, mut best_correct) = (1, None);
    for epoch in 1..=config.max_epochs {
        order.shuffle(&mut rng);
        model.run_epoch(x, y, &order, epoch - 1)?;
        let correct = dev.iter().filter(|&&i| model.predict_one(&x[i]) == y[i]).count();
        if best_correct.is_none_or(|b| correct > b) {
            best_correct = Some(correct);
            best_epoch = epoch;
        } else if epoch - best_epoch >= patience {
            break;
        }
    }
    Ok(best_epoch)
}
