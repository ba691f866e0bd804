//! Sparse binary encodings of instances: topical bag-of-words, position-keyed
//! local n-grams and windowed part-of-speech slots.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::WsdInstance;
use crate::textproc::{self, is_stopword, porter_stem, Lexicon, TagSet, TAGSET_VERSION};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum FeatureError {
    #[error("cannot build a vocabulary from an empty training set")]
    EmptyTraining,
    #[error("vocabulary is empty for feature set {0}")]
    EmptyVocabulary(FeatureSet),
    #[error("index {index} out of range for dimension {dim}")]
    OutOfRange { index: usize, dim: usize },
    #[error("unknown feature set {0:?} (expected topical, local, pos or all)")]
    UnknownSet(String),
    #[error("window must be at least 1")]
    BadWindow,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureSet {
    Topical,
    Local,
    Pos,
    All,
}

impl FeatureSet {
    pub const ALL_SETS: [FeatureSet; 4] = [FeatureSet::Topical, FeatureSet::Local, FeatureSet::Pos, FeatureSet::All];

    pub fn as_str(self) -> &'static str {
        match self {
            FeatureSet::Topical => "topical",
            FeatureSet::Local => "local",
            FeatureSet::Pos => "pos",
            FeatureSet::All => "all",
        }
    }

    /// The single-source blocks this set expands to, in concatenation order.
    pub fn blocks(self) -> &'static [FeatureSet] {
        match self {
            FeatureSet::Topical => &[FeatureSet::Topical],
            FeatureSet::Local => &[FeatureSet::Local],
            FeatureSet::Pos => &[FeatureSet::Pos],
            FeatureSet::All => &[FeatureSet::Topical, FeatureSet::Local, FeatureSet::Pos],
        }
    }
}

impl fmt::Display for FeatureSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FeatureSet {
    type Err = FeatureError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "topical" => Ok(FeatureSet::Topical),
            "local" => Ok(FeatureSet::Local),
            "pos" | "part-of-speech" => Ok(FeatureSet::Pos),
            "all" => Ok(FeatureSet::All),
            other => Err(FeatureError::UnknownSet(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureConfig {
    pub window: usize,
    pub max_ngram: usize,
    pub features: FeatureSet,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        FeatureConfig { window: 7, max_ngram: 3, features: FeatureSet::All }
    }
}

impl FeatureConfig {
    pub fn with_features(features: FeatureSet) -> Self {
        FeatureConfig { features, ..Self::default() }
    }
}

/// Sorted unique active indices over a fixed dimension.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
pub struct SparseBinaryVector {
    indices: Vec<usize>,
    dim: usize,
}

impl SparseBinaryVector {
    /// Sorts and deduplicates `indices`; fails if any is `>= dim`.
    pub fn new(mut indices: Vec<usize>, dim: usize) -> Result<Self, FeatureError> {
        indices.sort_unstable();
        indices.dedup();
        if let Some(&index) = indices.last().filter(|&&i| i >= dim) {
            return Err(FeatureError::OutOfRange { index, dim });
        }
        Ok(SparseBinaryVector { indices, dim })
    }

    pub fn zeros(dim: usize) -> Self {
        SparseBinaryVector { indices: Vec::new(), dim }
    }

    pub fn from_dense(values: &[f64]) -> Self {
        let indices = values.iter().enumerate().filter(|(_, v)| **v != 0.0).map(|(i, _)| i).collect();
        SparseBinaryVector { indices, dim: values.len() }
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.indices.len()
    }

    pub fn contains(&self, index: usize) -> bool {
        self.indices.binary_search(&index).is_ok()
    }

    /// Size of the intersection of the two active sets.
    pub fn dot(&self, other: &SparseBinaryVector) -> usize {
        let (mut i, mut j, mut n) = (0, 0, 0);
        let (a, b) = (&self.indices, &other.indices);
        while i < a.len() && j < b.len() {
            match a[i].cmp(&b[j]) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    n += 1;
                    i += 1;
                    j += 1;
                }
            }
        }
        n
    }

    /// Squared Euclidean distance, which on binary vectors is the Hamming distance.
    pub fn squared_distance(&self, other: &SparseBinaryVector) -> usize {
        self.nnz() + other.nnz() - 2 * self.dot(other)
    }

    pub fn to_dense(&self) -> Vec<f64> {
        let mut v = vec![0.0; self.dim];
        for &i in &self.indices {
            v[i] = 1.0;
        }
        v
    }
}

/// Concatenates vectors, shifting each block's indices by the preceding dimensions.
pub fn combine(vectors: &[SparseBinaryVector]) -> SparseBinaryVector {
    let mut indices = Vec::with_capacity(vectors.iter().map(|v| v.nnz()).sum());
    let mut offset = 0;
    for v in vectors {
        indices.extend(v.indices.iter().map(|i| i + offset));
        offset += v.dim;
    }
    SparseBinaryVector { indices, dim: offset }
}

/// Feature-name to index map for one knowledge source.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "VocabularyRepr", into = "VocabularyRepr")]
pub struct Vocabulary {
    kind: FeatureSet,
    names: Vec<String>,
    index: HashMap<String, usize>,
}

#[derive(Serialize, Deserialize)]
struct VocabularyRepr {
    kind: FeatureSet,
    names: Vec<String>,
}

impl From<VocabularyRepr> for Vocabulary {
    fn from(r: VocabularyRepr) -> Self {
        Vocabulary::from_names(r.kind, r.names)
    }
}

impl From<Vocabulary> for VocabularyRepr {
    fn from(v: Vocabulary) -> Self {
        VocabularyRepr { kind: v.kind, names: v.names }
    }
}

impl Vocabulary {
    pub fn from_names(kind: FeatureSet, names: Vec<String>) -> Self {
        let index = names.iter().enumerate().map(|(i, n)| (n.clone(), i)).collect();
        Vocabulary { kind, names, index }
    }

    pub fn kind(&self) -> FeatureSet {
        self.kind
    }

    pub fn dimension(&self) -> usize {
        self.names.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn get(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    /// One feature name per line.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for n in &self.names {
            s.push_str(n);
            s.push('\n');
        }
        s
    }

    fn encode_names<'a, I: IntoIterator<Item = &'a String>>(&self, names: I) -> SparseBinaryVector {
        let indices = names.into_iter().filter_map(|n| self.get(n)).collect();
        SparseBinaryVector::new(indices, self.dimension()).expect("vocabulary indices are in range")
    }

    fn pos_layout(tagset: &TagSet, window: usize) -> Self {
        let w = window as isize;
        let names = (-w..=w)
            .flat_map(|off| tagset.tags().iter().map(move |t| format!("p{off:+}={}", t.as_str())))
            .collect();
        Vocabulary::from_names(FeatureSet::Pos, names)
    }
}

/// Tokenized view of one instance, shared by all extractors.
struct Analysis {
    tokens: Vec<textproc::Token>,
    sentence: Vec<usize>,
    head: std::ops::Range<usize>,
}

impl Analysis {
    fn new(inst: &WsdInstance) -> Self {
        let tk = textproc::tokenize(&inst.context_text);
        let sentence = tk.sentence_ids();
        let tokens = tk.tokens;
        let overlapping: Vec<usize> = tokens
            .iter()
            .enumerate()
            .filter(|(_, t)| t.span.end > inst.head_start && t.span.start < inst.head_end)
            .map(|(i, _)| i)
            .collect();
        let head = match (overlapping.first(), overlapping.last()) {
            (Some(&a), Some(&b)) => a..b + 1,
            _ => {
                let at = tokens.iter().position(|t| t.span.start >= inst.head_start).unwrap_or(tokens.len());
                at..at
            }
        };
        Analysis { tokens, sentence, head }
    }

    fn head_word(&self) -> Option<String> {
        if self.head.is_empty() {
            return None;
        }
        let parts: Vec<&str> = self.tokens[self.head.clone()].iter().map(|t| t.lowered.as_str()).collect();
        Some(parts.join("_"))
    }

    /// Token index of the slot at `offset` from the head (offset != 0).
    fn slot(&self, offset: isize) -> Option<usize> {
        if offset < 0 {
            self.head.start.checked_sub(offset.unsigned_abs())
        } else {
            let base = if self.head.is_empty() { self.head.start } else { self.head.end - 1 };
            let i = if self.head.is_empty() { base + offset as usize - 1 } else { base + offset as usize };
            (i < self.tokens.len()).then_some(i)
        }
    }

    fn topical_names(&self) -> BTreeSet<String> {
        self.tokens
            .iter()
            .enumerate()
            .filter(|(i, t)| !self.head.contains(i) && !is_stopword(&t.lowered))
            .map(|(_, t)| porter_stem(&t.lowered))
            .collect()
    }

    fn local_names(&self, window: usize, max_ngram: usize) -> BTreeSet<String> {
        let w = window as isize;
        // (offset, word) for every occupied slot in -w..=w, head included.
        let mut seq: Vec<(isize, String)> = Vec::new();
        for off in -w..=w {
            if off == 0 {
                if let Some(h) = self.head_word() {
                    seq.push((0, h));
                }
            } else if let Some(i) = self.slot(off) {
                seq.push((off, self.tokens[i].lowered.clone()));
            }
        }
        let mut names = BTreeSet::new();
        for (off, word) in &seq {
            if *off != 0 {
                names.insert(format!("w{off:+}={word}"));
            }
        }
        for n in 2..=max_ngram {
            for gram in seq.windows(n) {
                let joined: Vec<&str> = gram.iter().map(|(_, w)| w.as_str()).collect();
                names.insert(format!("g{n}{:+}={}", gram[0].0, joined.join("_")));
            }
        }
        names
    }

    fn pos_indices(&self, inst: &WsdInstance, tagset: &TagSet, window: usize, lexicon: &Lexicon) -> Vec<usize> {
        let tagged = textproc::pos_tag(&self.tokens, lexicon, inst.pos_tags.as_deref());
        let w = window as isize;
        let anchor = if self.head.is_empty() { self.head.start.min(self.tokens.len().saturating_sub(1)) } else { self.head.start };
        let Some(&head_sentence) = self.sentence.get(anchor) else { return Vec::new() };
        let mut active = Vec::new();
        for off in -w..=w {
            let token = if off == 0 {
                (!self.head.is_empty()).then_some(self.head.start)
            } else {
                self.slot(off)
            };
            let Some(i) = token.filter(|&i| self.sentence[i] == head_sentence) else { continue };
            if let Some(t) = tagset.index_of(tagged[i].tag) {
                active.push((off + w) as usize * tagset.len() + t);
            }
        }
        active
    }
}

/// Builds the vocabulary of one knowledge source from training instances,
/// in lexicographic order (positional order for `pos`).
pub fn build_vocabulary<'a, I>(train: I, config: &FeatureConfig, kind: FeatureSet) -> Result<Vocabulary, FeatureError>
where
    I: IntoIterator<Item = &'a WsdInstance>,
{
    if config.window == 0 {
        return Err(FeatureError::BadWindow);
    }
    let mut any = false;
    let mut names = BTreeSet::new();
    for inst in train {
        any = true;
        let a = Analysis::new(inst);
        match kind {
            FeatureSet::Topical => names.extend(a.topical_names()),
            FeatureSet::Local => names.extend(a.local_names(config.window, config.max_ngram)),
            FeatureSet::Pos => {}
            FeatureSet::All => {
                names.extend(a.topical_names());
                names.extend(a.local_names(config.window, config.max_ngram));
            }
        }
    }
    if !any {
        return Err(FeatureError::EmptyTraining);
    }
    if kind == FeatureSet::Pos {
        return Ok(Vocabulary::pos_layout(&TagSet::coarse(), config.window));
    }
    Ok(Vocabulary::from_names(kind, names.into_iter().collect()))
}

pub fn extract_topical(inst: &WsdInstance, vocab: &Vocabulary) -> SparseBinaryVector {
    vocab.encode_names(&Analysis::new(inst).topical_names())
}

pub fn extract_local(inst: &WsdInstance, vocab: &Vocabulary, config: &FeatureConfig) -> SparseBinaryVector {
    vocab.encode_names(&Analysis::new(inst).local_names(config.window, config.max_ngram))
}

/// One `|tagset|`-wide block per slot in `-window..=window`, head slot included.
pub fn extract_pos(inst: &WsdInstance, tagset: &TagSet, config: &FeatureConfig, lexicon: &Lexicon) -> SparseBinaryVector {
    let dim = (2 * config.window + 1) * tagset.len();
    let active = Analysis::new(inst).pos_indices(inst, tagset, config.window, lexicon);
    SparseBinaryVector::new(active, dim).expect("slot indices are in range")
}

/// Vocabularies for every enabled knowledge source plus the settings needed
/// to encode unseen instances identically.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Featurizer {
    pub config: FeatureConfig,
    pub tagset_version: String,
    pub stopwords_hash: String,
    pub lexicon_hash: String,
    pub blocks: Vec<Vocabulary>,
}

impl Featurizer {
    pub fn fit<'a, I>(train: I, config: FeatureConfig) -> Result<Self, FeatureError>
    where
        I: IntoIterator<Item = &'a WsdInstance>,
        I::IntoIter: Clone,
    {
        let train = train.into_iter();
        let blocks = config
            .features
            .blocks()
            .iter()
            .map(|&kind| build_vocabulary(train.clone(), &config, kind))
            .collect::<Result<Vec<_>, _>>()?;
        let f = Featurizer {
            config,
            tagset_version: TAGSET_VERSION.to_string(),
            stopwords_hash: textproc::stopwords_hash(),
            lexicon_hash: Lexicon::builtin_hash(),
            blocks,
        };
        if f.dimension() == 0 {
            return Err(FeatureError::EmptyVocabulary(config.features));
        }
        Ok(f)
    }

    pub fn dimension(&self) -> usize {
        self.blocks.iter().map(Vocabulary::dimension).sum()
    }

    pub fn encode(&self, inst: &WsdInstance) -> SparseBinaryVector {
        let a = Analysis::new(inst);
        let parts: Vec<SparseBinaryVector> = self
            .blocks
            .iter()
            .map(|vocab| match vocab.kind {
                FeatureSet::Topical => vocab.encode_names(&a.topical_names()),
                FeatureSet::Local => vocab.encode_names(&a.local_names(self.config.window, self.config.max_ngram)),
                FeatureSet::Pos => {
                    let active = a.pos_indices(inst, &TagSet::coarse(), self.config.window, Lexicon::builtin());
                    SparseBinaryVector::new(active, vocab.dimension()).expect("slot indices are in range")
                }
                FeatureSet::All => unreachable!("blocks are single-source"),
            })
            .collect();
        combine(&parts)
    }

    /// Hash over the block kinds and feature names.
    pub fn vocabulary_hash(&self) -> String {
        let mut s = String::new();
        for b in &self.blocks {
            s.push_str(&format!("[{}]\n", b.kind));
            s.push_str(&b.to_text());
        }
        crate::util::sha256_hex(s.as_bytes())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::textproc::Tag;
    use proptest::prelude::*;

    fn inst(text: &str, head: &str) -> WsdInstance {
        WsdInstance::with_head("t.n", "t.1", text, head).unwrap()
    }

    fn names(v: &SparseBinaryVector, vocab: &Vocabulary) -> Vec<String> {
        v.indices().iter().map(|&i| vocab.names()[i].clone()).collect()
    }

    #[test]
    fn local_cross_the_river() {
        let i = inst("cross the river", "the");
        let cfg = FeatureConfig::with_features(FeatureSet::Local);
        let vocab = build_vocabulary([&i], &cfg, FeatureSet::Local).unwrap();
        let v = extract_local(&i, &vocab, &cfg);
        let got = names(&v, &vocab);
        for expected in ["w-1=cross", "w+1=river", "g2-1=cross_the", "g2+0=the_river", "g3-1=cross_the_river"] {
            assert!(got.contains(&expected.to_string()), "{expected} missing from {got:?}");
        }
        assert_eq!(got.len(), 5);
    }

    #[test]
    fn local_head_at_start_has_no_negative_offsets() {
        let i = inst("river flows past the town", "river");
        let cfg = FeatureConfig::with_features(FeatureSet::Local);
        let vocab = build_vocabulary([&i], &cfg, FeatureSet::Local).unwrap();
        assert!(vocab.names().iter().all(|n| !n.contains('-')));
    }

    #[test]
    fn local_window_one() {
        let i = inst("we will cross the river at dawn", "the");
        let cfg = FeatureConfig { window: 1, ..FeatureConfig::with_features(FeatureSet::Local) };
        let vocab = build_vocabulary([&i], &cfg, FeatureSet::Local).unwrap();
        let unigrams = vocab.names().iter().filter(|n| n.starts_with('w')).count();
        assert_eq!(unigrams, 2);
        let mut bigrams: Vec<_> = vocab.names().iter().filter(|n| n.starts_with("g2")).cloned().collect();
        bigrams.sort();
        assert_eq!(bigrams, ["g2+0=the_river", "g2-1=cross_the"]);
    }

    #[test]
    fn vocabulary_is_a_set() {
        let i = inst("cross the river", "the");
        let cfg = FeatureConfig::default();
        let one = build_vocabulary([&i], &cfg, FeatureSet::Local).unwrap();
        let two = build_vocabulary([&i, &i.clone()], &cfg, FeatureSet::Local).unwrap();
        assert_eq!(one, two);
        let mut sorted = one.names().to_vec();
        sorted.sort();
        assert_eq!(sorted, one.names());
    }

    #[test]
    fn topical_stems_and_filters() {
        let i = inst("The river flows, the river floods. Bank", "Bank");
        let vocab = Vocabulary::from_names(FeatureSet::Topical, vec!["flow".into(), "river".into()]);
        let v = extract_topical(&i, &vocab);
        assert_eq!(v.indices(), &[0, 1]);
        let stop = inst("the the the head", "head");
        assert_eq!(extract_topical(&stop, &vocab).nnz(), 0);
    }

    #[test]
    fn stopword_only_topical_is_empty() {
        let i = inst("the the the", "the");
        let cfg = FeatureConfig::with_features(FeatureSet::Topical);
        let v = build_vocabulary([&i], &cfg, FeatureSet::Topical).unwrap();
        assert_eq!(v.dimension(), 0);
        assert_eq!(Featurizer::fit([&i], cfg), Err(FeatureError::EmptyVocabulary(FeatureSet::Topical)));
        assert_eq!(build_vocabulary(std::iter::empty(), &cfg, FeatureSet::Topical), Err(FeatureError::EmptyTraining));
    }

    #[test]
    fn pos_example_vector() {
        let i = inst("cross the river", "the");
        let tagset = TagSet::custom(vec![Tag::NN, Tag::VB, Tag::ADJ, Tag::DT]);
        let lex = Lexicon::from_entries([("cross", Tag::VB), ("the", Tag::DT), ("river", Tag::NN)]);
        let cfg = FeatureConfig { window: 1, ..FeatureConfig::default() };
        let v = extract_pos(&i, &tagset, &cfg, &lex);
        let dense: Vec<u8> = v.to_dense().iter().map(|&x| x as u8).collect();
        assert_eq!(dense, [0, 1, 0, 0, 0, 0, 0, 1, 1, 0, 0, 0]);
    }

    #[test]
    fn pos_respects_sentence_edges() {
        let i = inst("First part ends here. Bank! Another sentence follows.", "Bank");
        let cfg = FeatureConfig::default();
        let v = extract_pos(&i, &TagSet::coarse(), &cfg, Lexicon::builtin());
        assert_eq!(v.nnz(), 1);
        assert_eq!(v.dim(), 15 * 12);
        let head_block = 7 * 12;
        assert!(v.indices()[0] >= head_block && v.indices()[0] < head_block + 12);
    }

    #[test]
    fn combine_shifts_offsets() {
        let a = SparseBinaryVector::new(vec![0], 2).unwrap();
        let b = SparseBinaryVector::new(vec![1], 3).unwrap();
        let c = combine(&[a.clone(), b]);
        assert_eq!((c.dim(), c.indices()), (5, &[0usize, 3][..]));
        assert_eq!(combine(&[a.clone()]), a);
        assert_eq!(combine(&[]), SparseBinaryVector::zeros(0));
    }

    #[test]
    fn featurizer_serde_round_trip() {
        let i = inst("we will cross the river at dawn", "the");
        let f = Featurizer::fit([&i], FeatureConfig::default()).unwrap();
        let json = serde_json::to_string(&f).unwrap();
        let back: Featurizer = serde_json::from_str(&json).unwrap();
        assert_eq!(back, f);
        assert_eq!(back.encode(&i), f.encode(&i));
        assert_eq!(f.dimension(), f.blocks.iter().map(|b| b.dimension()).sum::<usize>());
    }

    proptest! {
        #[test]
        fn encodings_stay_in_range(words in proptest::collection::vec("[a-z]{1,6}", 1..30), head_at in 0usize..30, test_words in proptest::collection::vec("[a-z]{1,6}", 1..30)) {
            let head_at = head_at % words.len();
            let mut text = String::new();
            let mut head_start = 0;
            for (k, w) in words.iter().enumerate() {
                if k == head_at { head_start = text.len(); }
                text.push_str(w);
                text.push(' ');
            }
            let train = WsdInstance::new("t.n", "t.1", text.clone(), head_start, head_start + words[head_at].len());
            let test_text = format!("{} {}", test_words.join(" "), "zz");
            let test = WsdInstance::with_head("t.n", "t.2", &test_text, "zz").unwrap();
            let cfg = FeatureConfig::default();
            if let Ok(f) = Featurizer::fit([&train], cfg) {
                let dim = f.dimension();
                for x in [f.encode(&train), f.encode(&test)] {
                    prop_assert_eq!(x.dim(), dim);
                    prop_assert!(x.indices().iter().all(|&i| i < dim));
                }
                prop_assert_eq!(f.encode(&test), f.encode(&test));
                let pos = extract_pos(&test, &TagSet::coarse(), &cfg, Lexicon::builtin());
                prop_assert!(pos.nnz() <= 2 * cfg.window + 1);
            }
        }
    }
}
