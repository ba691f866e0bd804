use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{one_sided_t_test, pooled_recall, TaskResult};
use crate::corpus::{Corpus, WsdInstance};
use crate::features::{FeatureConfig, FeatureSet};
use crate::model::{train_task, Algorithm, ModelConfig, ModelFile, TaskModel};
use crate::util::derive_seed;

pub const REPORT_FORMAT: &str = "wsd-bench-report";
pub const REPORT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchConfig {
    pub model: ModelConfig,
    pub seed: u64,
    /// Keep the trained models of every cell in the report (not serialized).
    pub keep_models: bool,
}

/// Result of one word task inside a cell. A failed task scores zero correct
/// over its test instances.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskOutcome {
    #[serde(flatten)]
    pub result: TaskResult,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchCell {
    pub algorithm: Algorithm,
    pub feature_set: FeatureSet,
    pub micro_recall: f64,
    /// One-sided p-value of "DBN beats this algorithm" over per-task recalls.
    pub p_value_vs_dbn: Option<f64>,
    pub n_tasks_failed: usize,
    pub tasks: Vec<TaskOutcome>,
    #[serde(skip)]
    pub model: Option<ModelFile>,
}

impl BenchCell {
    pub fn task_recalls(&self) -> Vec<f64> {
        self.tasks.iter().map(|t| t.result.recall()).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub format: String,
    pub version: u32,
    pub seed: u64,
    pub config: ModelConfig,
    pub algorithms: Vec<Algorithm>,
    pub feature_sets: Vec<FeatureSet>,
    pub cells: Vec<BenchCell>,
}

fn score_task(model: &TaskModel, test: &[&WsdInstance]) -> Result<usize, String> {
    let mut correct = 0;
    for inst in test {
        let label = model.predict(inst).map_err(|e| format!("{}: {e}", inst.instance_id))?;
        if inst.gold_senses.contains(label) {
            correct += 1;
        }
    }
    Ok(correct)
}

/// Trains and scores every (algorithm, feature set) cell, one word task at a
/// time on the current rayon pool. Per-task seeds depend only on the global
/// seed and the task id, so the thread count does not change results.
pub fn run_benchmark(
    train: &Corpus,
    test: &Corpus,
    algorithms: &[Algorithm],
    feature_sets: &[FeatureSet],
    config: &BenchConfig,
) -> BenchReport {
    let train_tasks = train.by_task();
    let test_tasks = test.by_task();
    let cells: Vec<(Algorithm, FeatureSet)> =
        algorithms.iter().flat_map(|&a| feature_sets.iter().map(move |&f| (a, f))).collect();
    let jobs: Vec<(usize, &str)> =
        (0..cells.len()).flat_map(|c| test_tasks.keys().map(move |t| (c, *t))).collect();

    let outcomes: Vec<(TaskOutcome, Option<TaskModel>)> = jobs
        .par_iter()
        .map(|&(c, task)| {
            let (algorithm, features) = cells[c];
            let test_insts = &test_tasks[task];
            let fail = |error: String| {
                let result = TaskResult { task_id: task.to_string(), n_test: test_insts.len(), n_correct: 0 };
                (TaskOutcome { result, error: Some(error) }, None)
            };
            let Some(train_insts) = train_tasks.get(task) else {
                return fail("no training instances for task".to_string());
            };
            let model_config =
                ModelConfig { features: FeatureConfig { features, ..config.model.features }, ..config.model.clone() };
            let model = match train_task(algorithm, train_insts, &model_config, derive_seed(config.seed, task)) {
                Ok(m) => m,
                Err(e) => return fail(e.to_string()),
            };
            match score_task(&model, test_insts) {
                Ok(n_correct) => {
                    let result = TaskResult { task_id: task.to_string(), n_test: test_insts.len(), n_correct };
                    (TaskOutcome { result, error: None }, config.keep_models.then_some(model))
                }
                Err(e) => fail(e),
            }
        })
        .collect();

    let per_cell = test_tasks.len();
    let mut outcomes = outcomes.into_iter();
    let mut built: Vec<BenchCell> = cells
        .iter()
        .map(|&(algorithm, feature_set)| {
            let mut tasks = Vec::with_capacity(per_cell);
            let mut models = std::collections::BTreeMap::new();
            for (outcome, model) in outcomes.by_ref().take(per_cell) {
                if let Some(m) = model {
                    models.insert(outcome.result.task_id.clone(), m);
                }
                tasks.push(outcome);
            }
            let results: Vec<TaskResult> = tasks.iter().map(|t| t.result.clone()).collect();
            let n_tasks_failed = tasks.iter().filter(|t| t.error.is_some()).count();
            let model = config.keep_models.then(|| {
                let cfg = ModelConfig {
                    features: FeatureConfig { features: feature_set, ..config.model.features },
                    ..config.model.clone()
                };
                ModelFile::new(algorithm, cfg, config.seed, models)
            });
            BenchCell {
                algorithm,
                feature_set,
                micro_recall: pooled_recall(&results),
                p_value_vs_dbn: None,
                n_tasks_failed,
                tasks,
                model,
            }
        })
        .collect();

    for i in 0..built.len() {
        if built[i].algorithm == Algorithm::Dbn {
            continue;
        }
        let fs = built[i].feature_set;
        if let Some(dbn) = built.iter().find(|c| c.algorithm == Algorithm::Dbn && c.feature_set == fs) {
            let p = one_sided_t_test(&dbn.task_recalls(), &built[i].task_recalls()).ok().map(|r| r.p);
            built[i].p_value_vs_dbn = p;
        }
    }

    BenchReport {
        format: REPORT_FORMAT.to_string(),
        version: REPORT_VERSION,
        seed: config.seed,
        config: config.model.clone(),
        algorithms: algorithms.to_vec(),
        feature_sets: feature_sets.to_vec(),
        cells: built,
    }
}

fn feature_heading(f: FeatureSet) -> &'static str {
    match f {
        FeatureSet::Topical => "topical",
        FeatureSet::Local => "local",
        FeatureSet::Pos => "part-of-speech",
        FeatureSet::All => "all feature",
    }
}

impl BenchReport {
    pub fn failed_cells(&self) -> usize {
        self.cells.iter().filter(|c| c.n_tasks_failed > 0).count()
    }

    pub fn cell(&self, algorithm: Algorithm, feature_set: FeatureSet) -> Option<&BenchCell> {
        self.cells.iter().find(|c| c.algorithm == algorithm && c.feature_set == feature_set)
    }

    /// One row per cell in request order.
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("algorithm\tfeature_set\tmicro_recall\tp_value_vs_dbn\tn_tasks_failed\n");
        for c in &self.cells {
            let p = c.p_value_vs_dbn.map_or_else(|| "NA".to_string(), |p| format!("{p:.6}"));
            writeln!(out, "{}\t{}\t{:.6}\t{}\t{}", c.algorithm, c.feature_set, c.micro_recall, p, c.n_tasks_failed)
                .unwrap();
        }
        out
    }

    /// Algorithms as rows, feature sets as columns, cells like `57.25%(0.000)`.
    pub fn to_markdown(&self) -> String {
        let mut out = String::from("| Learning Algorithm |");
        for f in &self.feature_sets {
            write!(out, " {} |", feature_heading(*f)).unwrap();
        }
        out.push_str("\n|---|");
        out.push_str(&"---:|".repeat(self.feature_sets.len()));
        out.push('\n');
        for a in &self.algorithms {
            write!(out, "| {} |", a.display_name()).unwrap();
            for f in &self.feature_sets {
                let text = match self.cell(*a, *f) {
                    Some(c) => {
                        let p = c.p_value_vs_dbn.map_or_else(|| "-".to_string(), |p| format!("{p:.3}"));
                        let flag = if c.n_tasks_failed > 0 { format!(" [{} failed]", c.n_tasks_failed) } else { String::new() };
                        format!("{:.2}%({p}){flag}", 100.0 * c.micro_recall)
                    }
                    None => String::new(),
                };
                write!(out, " {text} |").unwrap();
            }
            out.push('\n');
        }
        out
    }

    pub fn to_json(&self) -> serde_json::Result<String> {
        serde_json::to_string_pretty(self)
    }

    pub fn from_json(text: &str) -> Result<Self, String> {
        let report: BenchReport = serde_json::from_str(text).map_err(|e| e.to_string())?;
        if report.format != REPORT_FORMAT || report.version != REPORT_VERSION {
            return Err(format!("unsupported report: {} version {}", report.format, report.version));
        }
        Ok(report)
    }
}
