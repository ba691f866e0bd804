//! Lexical-sample corpora: SENSEVAL-2 ingestion, answer keys, the canonical
//! JSON-lines format and stratified held-out splitting.

mod xml;

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::io::{BufRead, Write};

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::util::rng_from_seed;

/// Gold label SENSEVAL uses for "no sense in the inventory applies".
pub const UNASSIGNABLE: &str = "U";

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("line {line}: malformed XML: {message}")]
    Xml { line: usize, message: String },
    #[error("instances without a head element: {}", .ids.join(", "))]
    MissingHead { ids: Vec<String> },
    #[error("line {line}: answer key: {message}")]
    Key { line: usize, message: String },
    #[error("line {line}: invalid JSON: {source}")]
    Json {
        line: usize,
        #[source]
        source: serde_json::Error,
    },
    #[error("instance {id}: {message}")]
    Invalid { id: String, message: String },
    #[error("duplicate instance id {0}")]
    DuplicateId(String),
    #[error("dev fraction must lie in [0, 1), got {0}")]
    BadFraction(f64),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, CorpusError>;

/// A precomputed part-of-speech annotation: byte span plus tag name.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PosAnnotation(pub usize, pub usize, pub String);

/// One labeled disambiguation context.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WsdInstance {
    #[serde(rename = "task")]
    pub task_id: String,
    #[serde(rename = "id")]
    pub instance_id: String,
    #[serde(rename = "text")]
    pub context_text: String,
    pub head_start: usize,
    pub head_end: usize,
    #[serde(rename = "senses", default)]
    pub gold_senses: BTreeSet<String>,
    #[serde(rename = "pos", default, skip_serializing_if = "Option::is_none")]
    pub pos_tags: Option<Vec<PosAnnotation>>,
}

impl WsdInstance {
    pub fn new(
        task_id: impl Into<String>,
        instance_id: impl Into<String>,
        context_text: impl Into<String>,
        head_start: usize,
        head_end: usize,
    ) -> Self {
        WsdInstance {
            task_id: task_id.into(),
            instance_id: instance_id.into(),
            context_text: context_text.into(),
            head_start,
            head_end,
            gold_senses: BTreeSet::new(),
            pos_tags: None,
        }
    }

    /// Builds an instance whose head is the first occurrence of `head` in `text`.
    pub fn with_head(task_id: &str, instance_id: &str, text: &str, head: &str) -> Option<Self> {
        let start = text.find(head)?;
        Some(Self::new(task_id, instance_id, text, start, start + head.len()))
    }

    pub fn with_senses<I, S>(mut self, senses: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        self.gold_senses = senses.into_iter().map(Into::into).collect();
        self
    }

    pub fn head(&self) -> &str {
        &self.context_text[self.head_start..self.head_end]
    }

    /// True when the gold set carries the unassignable tag.
    pub fn is_unassignable(&self) -> bool {
        self.gold_senses.contains(UNASSIGNABLE)
    }

    /// Label used for training: the smallest assignable gold sense.
    pub fn training_label(&self) -> Option<&str> {
        self.gold_senses
            .iter()
            .map(String::as_str)
            .find(|s| *s != UNASSIGNABLE)
    }

    pub fn validate(&self) -> Result<()> {
        let invalid = |message: String| CorpusError::Invalid {
            id: self.instance_id.clone(),
            message,
        };
        if self.instance_id.is_empty() {
            return Err(invalid("empty instance id".into()));
        }
        if self.task_id.is_empty() {
            return Err(invalid("empty task id".into()));
        }
        let len = self.context_text.len();
        if self.head_start >= self.head_end || self.head_end > len {
            return Err(invalid(format!(
                "head offsets {}..{} out of range for text of {} bytes",
                self.head_start, self.head_end, len
            )));
        }
        if !self.context_text.is_char_boundary(self.head_start)
            || !self.context_text.is_char_boundary(self.head_end)
        {
            return Err(invalid("head offsets split a UTF-8 character".into()));
        }
        if let Some(tags) = &self.pos_tags {
            for PosAnnotation(s, e, _) in tags {
                if s >= e || *e > len {
                    return Err(invalid(format!("pos span {s}..{e} out of range")));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    #[default]
    Train,
    Test,
    Dev,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Corpus {
    pub instances: Vec<WsdInstance>,
    pub split: Split,
}

impl Corpus {
    /// Builds a corpus, rejecting invalid instances and duplicate ids.
    pub fn new(instances: Vec<WsdInstance>, split: Split) -> Result<Self> {
        let mut seen = HashSet::new();
        for inst in &instances {
            inst.validate()?;
            if !seen.insert(inst.instance_id.as_str()) {
                return Err(CorpusError::DuplicateId(inst.instance_id.clone()));
            }
        }
        Ok(Corpus { instances, split })
    }

    pub fn len(&self) -> usize {
        self.instances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instances.is_empty()
    }

    /// Distinct task ids in lexicographic order.
    pub fn task_ids(&self) -> Vec<&str> {
        let set: BTreeSet<&str> = self.instances.iter().map(|i| i.task_id.as_str()).collect();
        set.into_iter().collect()
    }

    /// Instances grouped by task, preserving corpus order within each task.
    pub fn by_task(&self) -> BTreeMap<&str, Vec<&WsdInstance>> {
        let mut map: BTreeMap<&str, Vec<&WsdInstance>> = BTreeMap::new();
        for inst in &self.instances {
            map.entry(inst.task_id.as_str()).or_default().push(inst);
        }
        map
    }

    /// Replaces gold senses of every instance listed in `key`.
    pub fn apply_answer_key(&mut self, key: &BTreeMap<String, BTreeSet<String>>) {
        for inst in &mut self.instances {
            if let Some(senses) = key.get(&inst.instance_id) {
                inst.gold_senses = senses.clone();
            }
        }
    }

    pub fn save_jsonl<W: Write>(&self, mut out: W) -> Result<()> {
        for inst in &self.instances {
            let line = serde_json::to_string(inst).map_err(|source| CorpusError::Json { line: 0, source })?;
            out.write_all(line.as_bytes())?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn load_jsonl<R: BufRead>(input: R, split: Split) -> Result<Self> {
        let mut instances = Vec::new();
        for (i, line) in input.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let inst: WsdInstance =
                serde_json::from_str(&line).map_err(|source| CorpusError::Json { line: i + 1, source })?;
            instances.push(inst);
        }
        Corpus::new(instances, split)
    }

    pub fn load_jsonl_file(path: &std::path::Path, split: Split) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        Self::load_jsonl(std::io::BufReader::new(file), split)
    }
}

/// Parses SENSEVAL-2 lexical-sample XML into instances.
///
/// `<answer>` elements inside an instance populate its gold senses.
pub fn parse_senseval2(xml_text: &str) -> Result<Vec<WsdInstance>> {
    xml::parse_lexical_sample(xml_text)
}

/// Parses a SENSEVAL answer key: `lexelt instance_id sense [sense ...]` per line.
pub fn parse_answer_key(key_text: &str) -> Result<BTreeMap<String, BTreeSet<String>>> {
    let mut map = BTreeMap::new();
    for (i, line) in key_text.lines().enumerate() {
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.is_empty() {
            continue;
        }
        if fields.len() < 3 {
            return Err(CorpusError::Key {
                line: i + 1,
                message: format!("expected at least 3 fields, found {}", fields.len()),
            });
        }
        let id = fields[1].to_string();
        let senses: BTreeSet<String> = fields[2..].iter().map(|s| s.to_string()).collect();
        if map.insert(id.clone(), senses).is_some() {
            return Err(CorpusError::Key {
                line: i + 1,
                message: format!("duplicate instance id {id}"),
            });
        }
    }
    Ok(map)
}

/// Stratified held-out split over arbitrary items keyed by task.
///
/// Returns a dev-membership mask. The dev part has exactly
/// `floor(dev_fraction * n)` items; each task receives `floor(f * n_task)`
/// plus, by largest remainder, the leftover slots.
pub fn heldout_mask(task_keys: &[&str], dev_fraction: f64, seed: u64) -> Result<Vec<bool>> {
    if !(0.0..1.0).contains(&dev_fraction) || dev_fraction.is_nan() {
        return Err(CorpusError::BadFraction(dev_fraction));
    }
    let n = task_keys.len();
    let mut mask = vec![false; n];
    let mut groups: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, k) in task_keys.iter().enumerate() {
        groups.entry(k).or_default().push(i);
    }
    let floor = |x: f64| (x + 1e-9).floor() as usize;
    let total = floor(dev_fraction * n as f64);

    let mut quotas: Vec<(usize, f64)> = groups
        .values()
        .map(|idx| {
            let exact = dev_fraction * idx.len() as f64;
            let q = floor(exact).min(idx.len());
            (q, exact - q as f64)
        })
        .collect();
    let assigned: usize = quotas.iter().map(|q| q.0).sum();
    let mut leftover = total.saturating_sub(assigned);
    let mut order: Vec<usize> = (0..quotas.len()).collect();
    // Stable sort keeps task order among equal remainders.
    order.sort_by(|&a, &b| quotas[b].1.partial_cmp(&quotas[a].1).unwrap());
    let sizes: Vec<usize> = groups.values().map(Vec::len).collect();
    for g in order {
        if leftover == 0 {
            break;
        }
        if quotas[g].0 < sizes[g] {
            quotas[g].0 += 1;
            leftover -= 1;
        }
    }

    let mut rng = rng_from_seed(seed);
    for ((_, idx), (q, _)) in groups.into_iter().zip(quotas) {
        let mut idx = idx;
        idx.shuffle(&mut rng);
        for &i in idx.iter().take(q) {
            mask[i] = true;
        }
    }
    Ok(mask)
}

/// Splits instances into (train_part, dev_part), both in input order.
pub fn heldout_split(
    instances: &[WsdInstance],
    dev_fraction: f64,
    seed: u64,
) -> Result<(Vec<WsdInstance>, Vec<WsdInstance>)> {
    let keys: Vec<&str> = instances.iter().map(|i| i.task_id.as_str()).collect();
    let mask = heldout_mask(&keys, dev_fraction, seed)?;
    let mut train = Vec::new();
    let mut dev = Vec::new();
    for (inst, is_dev) in instances.iter().zip(mask) {
        if is_dev {
            dev.push(inst.clone());
        } else {
            train.push(inst.clone());
        }
    }
    Ok((train, dev))
}
