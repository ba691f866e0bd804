//! Per-task classifiers behind one algorithm switch, and the versioned
//! model file holding one trained classifier per word task.

use std::collections::BTreeMap;
use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::baselines::{
    knn_predict, knn_predict_dense, train_kernel_svm, train_linear_svm, train_logreg, train_mfs, train_mlp,
    train_nb, BaselineError, KernelSvmModel, LabelSpace, LinearModel, Metric, MfsModel, MlpModel, NbModel, TrainConfig,
};
use crate::corpus::{Corpus, WsdInstance};
use crate::dbn::{dbn_predict, train_dbn, DbnError, DbnModel, DbnSchedule};
use crate::features::{FeatureConfig, FeatureError, Featurizer, SparseBinaryVector};
use crate::linalg::DenseMatrix;
use crate::reduction::{self, kpca_fit, kpca_project, pca_fit, pca_project, KpcaModel, PcaModel, Points, Query, ReductionError};
use crate::util::{derive_seed, sha256_hex};

pub const MODEL_FORMAT: &str = "wsd-model";
pub const MODEL_VERSION: u32 = 1;
pub const FEATURES_FORMAT: &str = "wsd-features";
pub const FEATURES_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("task {0}: no labelled training instances")]
    EmptyTraining(String),
    #[error("task {task}: {source}")]
    Task { task: String, source: Box<ModelError> },
    #[error("no model for task {0}")]
    UnknownTask(String),
    #[error(transparent)]
    Feature(#[from] FeatureError),
    #[error(transparent)]
    Baseline(#[from] BaselineError),
    #[error(transparent)]
    Reduction(#[from] ReductionError),
    #[error(transparent)]
    Dbn(#[from] DbnError),
    #[error("unsupported model file: {0}")]
    Format(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, ModelError>;

/// The learners compared in the benchmark, in report order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    Mfs,
    Knn,
    Pca,
    KpcaPoly,
    KpcaRbf,
    Nb,
    Logreg,
    Mlp,
    LinearSvm,
    SvmPoly,
    SvmRbf,
    Dbn,
}

impl Algorithm {
    pub const ALL: [Algorithm; 12] = [
        Algorithm::Mfs,
        Algorithm::Knn,
        Algorithm::Pca,
        Algorithm::KpcaPoly,
        Algorithm::KpcaRbf,
        Algorithm::Nb,
        Algorithm::Logreg,
        Algorithm::Mlp,
        Algorithm::LinearSvm,
        Algorithm::SvmPoly,
        Algorithm::SvmRbf,
        Algorithm::Dbn,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Algorithm::Mfs => "mfs",
            Algorithm::Knn => "knn",
            Algorithm::Pca => "pca",
            Algorithm::KpcaPoly => "kpca-poly",
            Algorithm::KpcaRbf => "kpca-rbf",
            Algorithm::Nb => "nb",
            Algorithm::Logreg => "logreg",
            Algorithm::Mlp => "mlp",
            Algorithm::LinearSvm => "linear-svm",
            Algorithm::SvmPoly => "svm-poly",
            Algorithm::SvmRbf => "svm-rbf",
            Algorithm::Dbn => "dbn",
        }
    }

    /// Row label used in Markdown reports.
    pub fn display_name(self) -> &'static str {
        match self {
            Algorithm::Mfs => "MFS",
            Algorithm::Knn => "1-NN",
            Algorithm::Pca => "PCA",
            Algorithm::KpcaPoly => "KPCA(polynomial)",
            Algorithm::KpcaRbf => "KPCA(Gaussian RBF)",
            Algorithm::Nb => "NB",
            Algorithm::Logreg => "Logistic Regression",
            Algorithm::Mlp => "MLP",
            Algorithm::LinearSvm => "Linear SVM",
            Algorithm::SvmPoly => "SVM(polynomial)",
            Algorithm::SvmRbf => "SVM(Gaussian RBF)",
            Algorithm::Dbn => "DBN",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Algorithm {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let s = s.to_ascii_lowercase();
        if s == "1nn" || s == "1-nn" {
            return Ok(Algorithm::Knn);
        }
        Algorithm::ALL
            .into_iter()
            .find(|a| a.as_str() == s)
            .ok_or_else(|| format!("unknown algorithm '{s}'"))
    }
}

/// Everything that shapes a trained model apart from the data and seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub features: FeatureConfig,
    pub train: TrainConfig,
    pub dbn: DbnSchedule,
    /// Target dimension of PCA/KPCA, clamped per task to what the data allows.
    pub reduction_dim: usize,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            features: FeatureConfig::default(),
            train: TrainConfig::default(),
            dbn: DbnSchedule::default(),
            reduction_dim: reduction::DEFAULT_TARGET_DIM,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Classifier {
    Mfs(MfsModel),
    Knn { points: Vec<SparseBinaryVector>, labels: Vec<usize>, k: usize, metric: Metric },
    Pca { pca: PcaModel, projections: DenseMatrix, labels: Vec<usize> },
    Kpca { kpca: KpcaModel, labels: Vec<usize> },
    Nb(NbModel),
    Linear(LinearModel),
    Mlp(MlpModel),
    KernelSvm(KernelSvmModel),
    Dbn(DbnModel),
}

impl Classifier {
    pub fn predict(&self, x: &SparseBinaryVector) -> Result<usize> {
        Ok(match self {
            Classifier::Mfs(m) => m.predict(),
            Classifier::Knn { points, labels, k, metric } => knn_predict(points, labels, x, *k, *metric)?,
            Classifier::Pca { pca, projections, labels } => {
                let p = pca_project(pca, &x.to_dense())?;
                knn_predict_dense(projections, labels, &p, 1)?
            }
            Classifier::Kpca { kpca, labels } => {
                let p = kpca_project(kpca, Query::Sparse(x))?;
                knn_predict_dense(&kpca.train_projections, labels, &p, 1)?
            }
            Classifier::Nb(m) => m.predict(x)?,
            Classifier::Linear(m) => m.predict(x)?,
            Classifier::Mlp(m) => m.predict(x)?,
            Classifier::KernelSvm(m) => m.predict(x)?,
            Classifier::Dbn(m) => dbn_predict(m, x)?,
        })
    }
}

/// Featurizer, label space and classifier of one word task.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskModel {
    /// Absent for MFS, which ignores the input.
    pub featurizer: Option<Featurizer>,
    pub labels: LabelSpace,
    pub classifier: Classifier,
}

impl TaskModel {
    pub fn predict(&self, inst: &WsdInstance) -> Result<&str> {
        let index = match (&self.classifier, &self.featurizer) {
            (Classifier::Mfs(m), _) => m.predict(),
            (c, Some(f)) => c.predict(&f.encode(inst))?,
            (_, None) => return Err(ModelError::Format("classifier without featurizer".into())),
        };
        Ok(self.labels.label(index))
    }
}

fn dense_rows(x: &[SparseBinaryVector]) -> DenseMatrix {
    let d = x.first().map_or(0, SparseBinaryVector::dim);
    let mut m = DenseMatrix::zeros(x.len(), d);
    for (r, v) in x.iter().enumerate() {
        for &j in v.indices() {
            m[(r, j)] = 1.0;
        }
    }
    m
}

/// Featurizer, label space and encoded training set of one word task.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EncodedTask {
    pub featurizer: Featurizer,
    pub labels: LabelSpace,
    pub x: Vec<SparseBinaryVector>,
    pub y: Vec<usize>,
}

fn labelled<'a>(train: &[&'a WsdInstance]) -> Result<(Vec<(&'a WsdInstance, &'a str)>, LabelSpace)> {
    let labelled: Vec<(&WsdInstance, &str)> =
        train.iter().filter_map(|i| i.training_label().map(|l| (*i, l))).collect();
    if labelled.is_empty() {
        let task = train.first().map_or_else(String::new, |i| i.task_id.clone());
        return Err(ModelError::EmptyTraining(task));
    }
    let labels = LabelSpace::new(labelled.iter().map(|p| p.1))?;
    Ok((labelled, labels))
}

/// Fits the task vocabulary and encodes its labelled instances. Instances
/// without a usable label are skipped.
pub fn encode_task(train: &[&WsdInstance], features: FeatureConfig) -> Result<EncodedTask> {
    let (labelled, labels) = labelled(train)?;
    let featurizer = Featurizer::fit(labelled.iter().map(|p| p.0), features)?;
    let x = labelled.iter().map(|p| featurizer.encode(p.0)).collect();
    let y = labelled.iter().map(|p| labels.index_of(p.1).expect("label from training set")).collect();
    Ok(EncodedTask { featurizer, labels, x, y })
}

/// Trains one word task. Instances without a usable label are skipped.
pub fn train_task(algorithm: Algorithm, train: &[&WsdInstance], config: &ModelConfig, seed: u64) -> Result<TaskModel> {
    if algorithm == Algorithm::Mfs {
        let (labelled, labels) = labelled(train)?;
        let y: Vec<usize> = labelled.iter().map(|p| labels.index_of(p.1).expect("label from training set")).collect();
        return Ok(TaskModel { featurizer: None, labels, classifier: Classifier::Mfs(train_mfs(&y)?) });
    }
    train_encoded(algorithm, encode_task(train, config.features)?, config, seed)
}

/// Trains one word task from an already encoded training set.
pub fn train_encoded(algorithm: Algorithm, task: EncodedTask, config: &ModelConfig, seed: u64) -> Result<TaskModel> {
    let EncodedTask { featurizer, labels, x, y } = task;
    let k = labels.len();
    let tc = config.train.clone().with_seed(seed);
    let classifier = match algorithm {
        Algorithm::Mfs => Classifier::Mfs(train_mfs(&y)?),
        Algorithm::Knn => Classifier::Knn { points: x, labels: y, k: tc.knn_k, metric: tc.knn_metric },
        // With a single instance there is nothing to project; the only
        // label is the answer.
        Algorithm::Pca | Algorithm::KpcaPoly | Algorithm::KpcaRbf if x.len() < 2 => Classifier::Mfs(train_mfs(&y)?),
        Algorithm::Pca => {
            let dense = dense_rows(&x);
            let pca = pca_fit(&dense, config.reduction_dim.min(dense.rows()).min(dense.cols()))?;
            let mut projections = DenseMatrix::zeros(dense.rows(), pca.basis.cols());
            for r in 0..dense.rows() {
                projections.row_mut(r).copy_from_slice(&pca_project(&pca, dense.row(r))?);
            }
            Classifier::Pca { pca, projections, labels: y }
        }
        Algorithm::KpcaPoly | Algorithm::KpcaRbf => {
            let kernel = if algorithm == Algorithm::KpcaPoly { tc.poly_kernel() } else { tc.rbf_kernel() };
            let m = config.reduction_dim.min(x.len());
            Classifier::Kpca { kpca: kpca_fit(Points::Sparse(x), kernel, m)?, labels: y }
        }
        Algorithm::Nb => Classifier::Nb(train_nb(&x, &y, k)?),
        Algorithm::Logreg => Classifier::Linear(train_logreg(&x, &y, k, &tc.logreg)?),
        Algorithm::Mlp => Classifier::Mlp(train_mlp(&x, &y, k, tc.mlp_hidden, &tc.mlp)?),
        Algorithm::LinearSvm => Classifier::Linear(train_linear_svm(&x, &y, k, &tc.svm)?),
        Algorithm::SvmPoly => Classifier::KernelSvm(train_kernel_svm(&x, &y, k, tc.poly_kernel(), &tc.svm)?),
        Algorithm::SvmRbf => Classifier::KernelSvm(train_kernel_svm(&x, &y, k, tc.rbf_kernel(), &tc.svm)?),
        Algorithm::Dbn => {
            let schedule = DbnSchedule { seed, ..config.dbn.clone() };
            Classifier::Dbn(train_dbn(&x, &y, k, &schedule)?.model)
        }
    };
    Ok(TaskModel { featurizer: Some(featurizer), labels, classifier })
}

/// A trained model for every word task of a corpus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub format: String,
    pub version: u32,
    pub algorithm: Algorithm,
    pub config: ModelConfig,
    pub seed: u64,
    pub vocabulary_hash: String,
    pub tasks: BTreeMap<String, TaskModel>,
}

#[derive(Deserialize)]
struct Header {
    format: String,
    version: u32,
}

impl ModelFile {
    pub fn new(algorithm: Algorithm, config: ModelConfig, seed: u64, tasks: BTreeMap<String, TaskModel>) -> Self {
        let mut s = String::new();
        for (task, m) in &tasks {
            let h = m.featurizer.as_ref().map_or_else(|| "-".to_string(), Featurizer::vocabulary_hash);
            s.push_str(&format!("{task}\t{h}\n"));
        }
        ModelFile {
            format: MODEL_FORMAT.to_string(),
            version: MODEL_VERSION,
            algorithm,
            config,
            seed,
            vocabulary_hash: sha256_hex(s.as_bytes()),
            tasks,
        }
    }

    pub fn predict(&self, inst: &WsdInstance) -> Result<&str> {
        self.tasks.get(&inst.task_id).ok_or_else(|| ModelError::UnknownTask(inst.task_id.clone()))?.predict(inst)
    }

    pub fn write<W: Write>(&self, out: W) -> Result<()> {
        serde_json::to_writer(out, self)?;
        Ok(())
    }

    pub fn read<R: Read>(input: R) -> Result<Self> {
        read_versioned(input, MODEL_FORMAT, MODEL_VERSION)
    }
}

fn read_versioned<T: serde::de::DeserializeOwned, R: Read>(mut input: R, format: &str, version: u32) -> Result<T> {
    let mut buf = Vec::new();
    input.read_to_end(&mut buf)?;
    let header: Header = serde_json::from_slice(&buf)?;
    if header.format != format || header.version != version {
        return Err(ModelError::Format(format!("expected {format} version {version}, found {} version {}", header.format, header.version)));
    }
    Ok(serde_json::from_slice(&buf)?)
}

/// Per-task vocabularies and encoded training vectors of a corpus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeaturizedCorpus {
    pub format: String,
    pub version: u32,
    pub features: FeatureConfig,
    pub tasks: BTreeMap<String, EncodedTask>,
}

impl FeaturizedCorpus {
    pub fn build(corpus: &Corpus, features: FeatureConfig) -> Result<Self> {
        let encoded: Vec<(String, Result<EncodedTask>)> =
            corpus.by_task().par_iter().map(|(task, insts)| (task.to_string(), encode_task(insts, features))).collect();
        let mut tasks = BTreeMap::new();
        for (task, e) in encoded {
            let e = e.map_err(|e| ModelError::Task { task: task.clone(), source: Box::new(e) })?;
            tasks.insert(task, e);
        }
        Ok(FeaturizedCorpus { format: FEATURES_FORMAT.to_string(), version: FEATURES_VERSION, features, tasks })
    }

    pub fn write<W: Write>(&self, out: W) -> Result<()> {
        serde_json::to_writer(out, self)?;
        Ok(())
    }

    pub fn read<R: Read>(input: R) -> Result<Self> {
        read_versioned(input, FEATURES_FORMAT, FEATURES_VERSION)
    }
}

fn collect_tasks(trained: Vec<(String, Result<TaskModel>)>) -> Result<BTreeMap<String, TaskModel>> {
    let mut tasks = BTreeMap::new();
    for (task, model) in trained {
        let model = model.map_err(|e| ModelError::Task { task: task.clone(), source: Box::new(e) })?;
        tasks.insert(task, model);
    }
    Ok(tasks)
}

/// Same as [`train_model`], starting from cached encodings. The feature
/// configuration recorded in the cache replaces the one in `config`.
pub fn train_model_encoded(
    algorithm: Algorithm,
    data: &FeaturizedCorpus,
    config: &ModelConfig,
    seed: u64,
) -> Result<ModelFile> {
    let config = ModelConfig { features: data.features, ..config.clone() };
    let trained = data
        .tasks
        .par_iter()
        .map(|(task, enc)| (task.clone(), train_encoded(algorithm, enc.clone(), &config, derive_seed(seed, task))))
        .collect();
    Ok(ModelFile::new(algorithm, config, seed, collect_tasks(trained)?))
}

/// Trains every task of `corpus` (in parallel on the current rayon pool),
/// each with the seed derived from `seed` and its task id.
pub fn train_model(algorithm: Algorithm, corpus: &Corpus, config: &ModelConfig, seed: u64) -> Result<ModelFile> {
    let by_task = corpus.by_task();
    let trained: Vec<(String, Result<TaskModel>)> = by_task
        .par_iter()
        .map(|(task, insts)| {
            let model = train_task(algorithm, insts, config, derive_seed(seed, task));
            (task.to_string(), model)
        })
        .collect();
    Ok(ModelFile::new(algorithm, config.clone(), seed, collect_tasks(trained)?))
}
