//! Scoring, significance testing, epoch selection and the benchmark driver.

mod bench;
mod stats;

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::WsdInstance;

pub use bench::{run_benchmark, BenchCell, BenchConfig, BenchReport, TaskOutcome};
pub use stats::{ln_gamma, one_sided_t_test, regularized_incomplete_beta, student_t_upper_tail, TTestResult};

#[derive(Debug, Error, PartialEq)]
pub enum EvalError {
    #[error("no prediction for test instance {0}")]
    MissingPrediction(String),
    #[error("need at least 2 samples per group, got {0}")]
    TooFewSamples(usize),
    #[error("candidate epoch grid is empty")]
    EmptyGrid,
    #[error("held-out set is empty")]
    EmptyDev,
}

pub type Result<T> = std::result::Result<T, EvalError>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskResult {
    pub task_id: String,
    pub n_test: usize,
    pub n_correct: usize,
}

impl TaskResult {
    pub fn recall(&self) -> f64 {
        if self.n_test == 0 {
            0.0
        } else {
            self.n_correct as f64 / self.n_test as f64
        }
    }
}

/// Pooled recall: correct over total across all tasks.
pub fn pooled_recall(tasks: &[TaskResult]) -> f64 {
    let total: usize = tasks.iter().map(|t| t.n_test).sum();
    let correct: usize = tasks.iter().map(|t| t.n_correct).sum();
    if total == 0 {
        0.0
    } else {
        correct as f64 / total as f64
    }
}

/// Micro-averaged recall. A prediction counts as correct when it is one of
/// the instance's gold senses; every gold instance needs a prediction.
pub fn micro_recall(predictions: &HashMap<String, String>, gold: &[WsdInstance]) -> Result<(f64, Vec<TaskResult>)> {
    let mut per_task: BTreeMap<&str, TaskResult> = BTreeMap::new();
    for inst in gold {
        let predicted = predictions
            .get(&inst.instance_id)
            .ok_or_else(|| EvalError::MissingPrediction(inst.instance_id.clone()))?;
        let entry = per_task.entry(&inst.task_id).or_insert_with(|| TaskResult {
            task_id: inst.task_id.clone(),
            n_test: 0,
            n_correct: 0,
        });
        entry.n_test += 1;
        if inst.gold_senses.contains(predicted) {
            entry.n_correct += 1;
        }
    }
    let tasks: Vec<TaskResult> = per_task.into_values().collect();
    Ok((pooled_recall(&tasks), tasks))
}

/// Grid value with the highest score; ties go to the smaller epoch count.
///
/// `score(epochs)` is called once per grid value in the order given, so an
/// incremental trainer can continue from the previous call when the grid
/// ascends.
pub fn select_epochs<E, F>(grid: &[usize], mut score: F) -> std::result::Result<usize, E>
where
    E: From<EvalError>,
    F: FnMut(usize) -> std::result::Result<f64, E>,
{
    let mut best: Option<(f64, usize)> = None;
    for &epochs in grid {
        let s = score(epochs)?;
        best = match best {
            Some((bs, be)) if bs > s || (bs == s && be <= epochs) => Some((bs, be)),
            _ => Some((s, epochs)),
        };
    }
    best.map(|b| b.1).ok_or_else(|| EvalError::EmptyGrid.into())
}
