use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{BaselineError, Result};

/// Always predicts the training majority label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MfsModel {
    pub label: usize,
}

impl MfsModel {
    pub fn predict(&self) -> usize {
        self.label
    }
}

/// Majority label index; ties go to the smallest index.
pub fn train_mfs(y: &[usize]) -> Result<MfsModel> {
    let max = *y.iter().max().ok_or(BaselineError::EmptyTraining)?;
    let mut counts = vec![0usize; max + 1];
    for &l in y {
        counts[l] += 1;
    }
    let top = *counts.iter().max().unwrap();
    let label = counts.iter().position(|&c| c == top).unwrap();
    Ok(MfsModel { label })
}

/// Majority label by name; ties go to the lexicographically smallest label.
pub fn most_frequent_label<'a>(labels: impl IntoIterator<Item = &'a str>) -> Result<&'a str> {
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for l in labels {
        *counts.entry(l).or_default() += 1;
    }
    let top = counts.values().copied().max().ok_or(BaselineError::EmptyTraining)?;
    Ok(counts.into_iter().find(|(_, c)| *c == top).unwrap().0)
}
