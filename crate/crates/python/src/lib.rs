//! Python bindings for the WSD benchmark.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufReader, BufWriter};

use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;

use wsd_core::corpus::{parse_answer_key, parse_senseval2, Split};
use wsd_core::eval::{self, BenchConfig, BenchReport};
use wsd_core::model::{train_model, FeaturizedCorpus};
use wsd_core::synthetic::{generate, SyntheticConfig};
use wsd_core::{Algorithm, FeatureConfig, FeatureSet, ModelConfig, ModelFile};

/// `(task, n_test, n_correct)` per word task.
type TaskCounts = Vec<(String, usize, usize)>;
type Encoded = HashMap<String, (usize, Vec<Vec<usize>>, Vec<String>)>;

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn io_err(e: impl std::fmt::Display) -> PyErr {
    PyIOError::new_err(e.to_string())
}

fn parse_split(split: &str) -> PyResult<Split> {
    match split {
        "train" => Ok(Split::Train),
        "test" => Ok(Split::Test),
        "dev" => Ok(Split::Dev),
        other => Err(PyValueError::new_err(format!("unknown split '{other}'"))),
    }
}

/// Start from the defaults, then apply a JSON object of overrides, e.g.
/// `{"dbn": {"hidden_layers": [50]}}`.
fn model_config(overrides: Option<&str>) -> PyResult<ModelConfig> {
    let mut base = serde_json::to_value(ModelConfig::default()).map_err(value_err)?;
    if let Some(text) = overrides {
        let patch: serde_json::Value = serde_json::from_str(text).map_err(value_err)?;
        merge(&mut base, patch);
    }
    serde_json::from_value(base).map_err(value_err)
}

fn merge(base: &mut serde_json::Value, patch: serde_json::Value) {
    match (base, patch) {
        (serde_json::Value::Object(b), serde_json::Value::Object(p)) => {
            for (k, v) in p {
                merge(b.entry(k).or_insert(serde_json::Value::Null), v);
            }
        }
        (b, p) => *b = p,
    }
}

/// A lexical-sample corpus: instances grouped into word tasks.
#[pyclass(module = "wsd_bench", skip_from_py_object)]
#[derive(Clone)]
struct Corpus {
    inner: wsd_core::Corpus,
}

#[pymethods]
impl Corpus {
    #[staticmethod]
    #[pyo3(signature = (path, split = "train"))]
    fn load_jsonl(path: &str, split: &str) -> PyResult<Self> {
        let file = File::open(path).map_err(io_err)?;
        let inner = wsd_core::Corpus::load_jsonl(BufReader::new(file), parse_split(split)?).map_err(value_err)?;
        Ok(Corpus { inner })
    }

    #[staticmethod]
    #[pyo3(signature = (xml_path, key_path = None, split = "train"))]
    fn from_senseval2(xml_path: &str, key_path: Option<&str>, split: &str) -> PyResult<Self> {
        let xml = std::fs::read_to_string(xml_path).map_err(io_err)?;
        let instances = parse_senseval2(&xml).map_err(value_err)?;
        let mut inner = wsd_core::Corpus::new(instances, parse_split(split)?).map_err(value_err)?;
        if let Some(key) = key_path {
            let key = std::fs::read_to_string(key).map_err(io_err)?;
            inner.apply_answer_key(&parse_answer_key(&key).map_err(value_err)?);
        }
        Ok(Corpus { inner })
    }

    /// Separable two-sense toy corpus; returns `(train, test)`.
    #[staticmethod]
    #[pyo3(signature = (seed = 42))]
    fn synthetic(seed: u64) -> PyResult<(Corpus, Corpus)> {
        let (train, test) = generate(&SyntheticConfig { seed, ..SyntheticConfig::default() }).map_err(value_err)?;
        Ok((Corpus { inner: train }, Corpus { inner: test }))
    }

    fn save_jsonl(&self, path: &str) -> PyResult<()> {
        let file = File::create(path).map_err(io_err)?;
        self.inner.save_jsonl(BufWriter::new(file)).map_err(io_err)
    }

    fn task_ids(&self) -> Vec<String> {
        self.inner.task_ids().into_iter().map(str::to_string).collect()
    }

    /// `(task, instance id, gold senses)` for every instance.
    fn instances(&self) -> Vec<(String, String, Vec<String>)> {
        self.inner
            .instances
            .iter()
            .map(|i| (i.task_id.clone(), i.instance_id.clone(), i.gold_senses.iter().cloned().collect()))
            .collect()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __repr__(&self) -> String {
        format!("Corpus({} instances, {} tasks)", self.inner.len(), self.inner.task_ids().len())
    }
}

/// One trained classifier per word task.
#[pyclass(module = "wsd_bench")]
struct Model {
    inner: ModelFile,
}

#[pymethods]
impl Model {
    #[staticmethod]
    #[pyo3(signature = (algorithm, corpus, features = "all", seed = 42, config = None))]
    fn train(algorithm: &str, corpus: &Corpus, features: &str, seed: u64, config: Option<&str>) -> PyResult<Self> {
        let algorithm: Algorithm = algorithm.parse().map_err(value_err)?;
        let features: FeatureSet = features.parse().map_err(value_err)?;
        let mut config = model_config(config)?;
        config.features.features = features;
        let inner = train_model(algorithm, &corpus.inner, &config, seed).map_err(value_err)?;
        Ok(Model { inner })
    }

    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        let file = File::open(path).map_err(io_err)?;
        Ok(Model { inner: ModelFile::read(BufReader::new(file)).map_err(value_err)? })
    }

    fn save(&self, path: &str) -> PyResult<()> {
        let file = File::create(path).map_err(io_err)?;
        self.inner.write(BufWriter::new(file)).map_err(io_err)
    }

    #[getter]
    fn algorithm(&self) -> &'static str {
        self.inner.algorithm.as_str()
    }

    #[getter]
    fn vocabulary_hash(&self) -> String {
        self.inner.vocabulary_hash.clone()
    }

    /// Predicted sense per instance id.
    fn predict(&self, corpus: &Corpus) -> PyResult<HashMap<String, String>> {
        corpus
            .inner
            .instances
            .iter()
            .map(|i| Ok((i.instance_id.clone(), self.inner.predict(i).map_err(value_err)?.to_string())))
            .collect()
    }

    /// Micro recall on `corpus` plus `(task, n_test, n_correct)` per task.
    fn evaluate(&self, corpus: &Corpus) -> PyResult<(f64, TaskCounts)> {
        micro_recall(self.predict(corpus)?, corpus)
    }
}

/// Scores of an algorithm x feature-set grid.
#[pyclass(module = "wsd_bench")]
struct Report {
    inner: BenchReport,
}

#[pymethods]
impl Report {
    fn to_tsv(&self) -> String {
        self.inner.to_tsv()
    }

    fn to_markdown(&self) -> String {
        self.inner.to_markdown()
    }

    fn to_json(&self) -> PyResult<String> {
        self.inner.to_json().map_err(value_err)
    }

    /// `(algorithm, feature set, micro recall, p-value vs DBN, failed tasks)` per cell.
    fn cells(&self) -> Vec<(String, String, f64, Option<f64>, usize)> {
        self.inner
            .cells
            .iter()
            .map(|c| {
                (c.algorithm.to_string(), c.feature_set.to_string(), c.micro_recall, c.p_value_vs_dbn, c.n_tasks_failed)
            })
            .collect()
    }
}

#[pyfunction]
#[pyo3(signature = (train, test, algorithms = None, feature_sets = None, seed = 42, config = None))]
fn run_benchmark(
    py: Python<'_>,
    train: &Corpus,
    test: &Corpus,
    algorithms: Option<Vec<String>>,
    feature_sets: Option<Vec<String>>,
    seed: u64,
    config: Option<&str>,
) -> PyResult<Report> {
    let algorithms: Vec<Algorithm> = match algorithms {
        Some(v) => v.iter().map(|a| a.parse().map_err(value_err)).collect::<PyResult<_>>()?,
        None => Algorithm::ALL.to_vec(),
    };
    let feature_sets: Vec<FeatureSet> = match feature_sets {
        Some(v) => v.iter().map(|f| f.parse().map_err(value_err)).collect::<PyResult<_>>()?,
        None => FeatureSet::ALL_SETS.to_vec(),
    };
    let config = BenchConfig { model: model_config(config)?, seed, keep_models: false };
    let (train, test) = (&train.inner, &test.inner);
    let inner = py.detach(|| eval::run_benchmark(train, test, &algorithms, &feature_sets, &config));
    Ok(Report { inner })
}

/// Pooled recall of `predictions` (instance id -> sense) against the gold senses.
#[pyfunction]
fn micro_recall(predictions: HashMap<String, String>, gold: &Corpus) -> PyResult<(f64, TaskCounts)> {
    let (recall, tasks) = eval::micro_recall(&predictions, &gold.inner.instances).map_err(value_err)?;
    Ok((recall, tasks.into_iter().map(|t| (t.task_id, t.n_test, t.n_correct)).collect()))
}

/// Welch one-sided test of mean(a) > mean(b); returns `(t, df, p)`.
#[pyfunction]
fn one_sided_t_test(a: Vec<f64>, b: Vec<f64>) -> PyResult<(f64, f64, f64)> {
    let r = eval::one_sided_t_test(&a, &b).map_err(value_err)?;
    Ok((r.t, r.df, r.p))
}

/// Per-task encodings: task -> (dimension, active indices per labelled instance, label per instance).
#[pyfunction]
#[pyo3(signature = (corpus, features = "all", window = 7))]
fn featurize(corpus: &Corpus, features: &str, window: usize) -> PyResult<Encoded> {
    let config = FeatureConfig { window, features: features.parse().map_err(value_err)?, ..FeatureConfig::default() };
    let cache = FeaturizedCorpus::build(&corpus.inner, config).map_err(value_err)?;
    Ok(cache
        .tasks
        .into_iter()
        .map(|(task, enc)| {
            let dim = enc.featurizer.dimension();
            let rows = enc.x.iter().map(|v| v.indices().to_vec()).collect();
            let labels = enc.y.iter().map(|&y| enc.labels.label(y).to_string()).collect();
            (task, (dim, rows, labels))
        })
        .collect())
}

#[pyfunction]
fn porter_stem(word: &str) -> String {
    wsd_core::textproc::porter_stem(word)
}

#[pyfunction]
fn algorithms() -> Vec<&'static str> {
    Algorithm::ALL.iter().map(|a| a.as_str()).collect()
}

/// Default model configuration as JSON, the shape accepted by `config=`.
#[pyfunction]
fn default_config() -> PyResult<String> {
    serde_json::to_string_pretty(&ModelConfig::default()).map_err(value_err)
}

#[pymodule]
pub fn wsd_bench(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Corpus>()?;
    m.add_class::<Model>()?;
    m.add_class::<Report>()?;
    m.add_function(wrap_pyfunction!(run_benchmark, m)?)?;
    m.add_function(wrap_pyfunction!(micro_recall, m)?)?;
    m.add_function(wrap_pyfunction!(one_sided_t_test, m)?)?;
    m.add_function(wrap_pyfunction!(featurize, m)?)?;
    m.add_function(wrap_pyfunction!(porter_stem, m)?)?;
    m.add_function(wrap_pyfunction!(algorithms, m)?)?;
    m.add_function(wrap_pyfunction!(default_config, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
