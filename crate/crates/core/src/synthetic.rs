//! Separable toy corpus: each word task has two senses, and each sense has
//! its own pool of indicator words that never appear with the other sense.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, Result, Split, WsdInstance};
use crate::util::{derive_seed, rng_from_seed, Rng};

const HEADS: [&str; 8] = ["bank", "crane", "plant", "spring", "bass", "match", "pitch", "seal"];
const ONSETS: [&str; 12] = ["b", "d", "f", "g", "k", "l", "m", "n", "p", "r", "t", "v"];
const VOWELS: [&str; 5] = ["a", "e", "i", "o", "u"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticConfig {
    pub tasks: usize,
    pub train_per_task: usize,
    pub test_per_task: usize,
    /// Share of each split carrying the first sense.
    pub majority_fraction: f64,
    pub indicators_per_sense: usize,
    pub indicators_per_instance: usize,
    pub filler_words: usize,
    pub fillers_per_instance: usize,
    pub seed: u64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        SyntheticConfig {
            tasks: 5,
            train_per_task: 200,
            test_per_task: 100,
            majority_fraction: 0.6,
            indicators_per_sense: 6,
            indicators_per_instance: 4,
            filler_words: 30,
            fillers_per_instance: 4,
            seed: 42,
        }
    }
}

/// Distinct pronounceable token for every index, e.g. `bamot`.
fn pseudo_word(mut i: usize) -> String {
    let mut w = String::new();
    loop {
        w.push_str(ONSETS[i % ONSETS.len()]);
        i /= ONSETS.len();
        w.push_str(VOWELS[i % VOWELS.len()]);
        i /= VOWELS.len();
        if i == 0 {
            break;
        }
        i -= 1;
    }
    w.push_str("nt");
    w
}

struct Vocab {
    fillers: Vec<String>,
    /// indicators[task][sense]
    indicators: Vec<[Vec<String>; 2]>,
}

fn vocab(config: &SyntheticConfig) -> Vocab {
    let mut next = 0;
    let mut take = |n: usize| {
        let v: Vec<String> = (next..next + n).map(pseudo_word).collect();
        next += n;
        v
    };
    let fillers = take(config.filler_words);
    let indicators = (0..config.tasks)
        .map(|_| [take(config.indicators_per_sense), take(config.indicators_per_sense)])
        .collect();
    Vocab { fillers, indicators }
}

fn sentence(vocab: &Vocab, config: &SyntheticConfig, task: usize, sense: usize, head: &str, rng: &mut Rng) -> (String, usize) {
    let mut words: Vec<&str> = vocab.indicators[task][sense]
        .choose_multiple(rng, config.indicators_per_instance)
        .chain(vocab.fillers.choose_multiple(rng, config.fillers_per_instance))
        .map(String::as_str)
        .collect();
    words.shuffle(rng);
    let at = rand::Rng::gen_range(rng, 0..=words.len());
    words.insert(at, head);
    let start: usize = words[..at].iter().map(|w| w.len() + 1).sum();
    (format!("{}.", words.join(" ")), start)
}

fn split(vocab: &Vocab, config: &SyntheticConfig, split: Split, per_task: usize) -> Result<Corpus> {
    let tag = match split {
        Split::Train => "train",
        Split::Test => "test",
        Split::Dev => "dev",
    };
    let mut out = Vec::with_capacity(config.tasks * per_task);
    for task in 0..config.tasks {
        let head = HEADS[task % HEADS.len()];
        let task_id = if task < HEADS.len() { format!("{head}.n") } else { format!("{head}{task}.n") };
        let mut rng = rng_from_seed(derive_seed(config.seed, &format!("{tag}/{task_id}")));
        let majority = (config.majority_fraction * per_task as f64).round() as usize;
        let mut senses: Vec<usize> = (0..per_task).map(|i| usize::from(i >= majority)).collect();
        senses.shuffle(&mut rng);
        for (i, &sense) in senses.iter().enumerate() {
            let (text, start) = sentence(vocab, config, task, sense, head, &mut rng);
            let id = format!("{task_id}.{tag}.{i:04}");
            let label = format!("{head}%{}", sense + 1);
            out.push(WsdInstance::new(&task_id, id, text, start, start + head.len()).with_senses([label]));
        }
    }
    Corpus::new(out, split)
}

/// Train and test corpora drawn from the same word pools.
pub fn generate(config: &SyntheticConfig) -> Result<(Corpus, Corpus)> {
    let vocab = vocab(config);
    Ok((split(&vocab, config, Split::Train, config.train_per_task)?, split(&vocab, config, Split::Test, config.test_per_task)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::{BTreeSet, HashSet};

    #[test]
    fn pseudo_words_are_distinct() {
        let words: HashSet<String> = (0..5000).map(pseudo_word).collect();
        assert_eq!(words.len(), 5000);
    }

    #[test]
    fn shape_and_majority_rate() {
        let cfg = SyntheticConfig::default();
        let (train, test) = generate(&cfg).unwrap();
        assert_eq!((train.len(), test.len()), (1000, 500));
        assert_eq!(train.task_ids().len(), 5);
        for (task, insts) in test.by_task() {
            let first = insts.iter().filter(|i| i.gold_senses.iter().next().unwrap().ends_with("%1")).count();
            assert_eq!(first, 60, "{task}");
            assert!(insts.iter().all(|i| i.head() == task.trim_end_matches(".n")));
        }
    }

    #[test]
    fn indicator_words_never_cross_senses() {
        let (train, _) = generate(&SyntheticConfig::default()).unwrap();
        let mut seen: std::collections::BTreeMap<(String, String), BTreeSet<String>> = Default::default();
        for inst in &train.instances {
            for w in inst.context_text.trim_end_matches('.').split(' ') {
                seen.entry((inst.task_id.clone(), w.to_string()))
                    .or_default()
                    .insert(inst.training_label().unwrap().to_string());
            }
        }
        let vocab = vocab(&SyntheticConfig::default());
        for (task, pools) in vocab.indicators.iter().enumerate() {
            let task_id = format!("{}.n", HEADS[task]);
            for w in pools.iter().flatten() {
                if let Some(senses) = seen.get(&(task_id.clone(), w.clone())) {
                    assert_eq!(senses.len(), 1, "{w}");
                }
            }
        }
    }

    #[test]
    fn generation_is_deterministic() {
        let cfg = SyntheticConfig { seed: 9, ..SyntheticConfig::default() };
        let (a, _) = generate(&cfg).unwrap();
        let (b, _) = generate(&cfg).unwrap();
        assert_eq!(a.instances, b.instances);
    }
}
