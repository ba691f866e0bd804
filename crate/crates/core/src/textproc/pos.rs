use std::collections::HashMap;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use super::Token;
use crate::corpus::PosAnnotation;

/// Version string of the coarse tag inventory; POS feature indices depend on it.
pub const TAGSET_VERSION: &str = "coarse12-v1";

const LEXICON_DATA: &str = include_str!("../../data/pos_lexicon.txt");

/// Coarse part-of-speech tags, in their fixed feature order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Tag {
    NN,
    VB,
    ADJ,
    ADV,
    DT,
    PRP,
    IN,
    CC,
    NUM,
    WH,
    UH,
    OTHER,
}

impl Tag {
    pub const ALL: [Tag; 12] = [
        Tag::NN,
        Tag::VB,
        Tag::ADJ,
        Tag::ADV,
        Tag::DT,
        Tag::PRP,
        Tag::IN,
        Tag::CC,
        Tag::NUM,
        Tag::WH,
        Tag::UH,
        Tag::OTHER,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Tag::NN => "NN",
            Tag::VB => "VB",
            Tag::ADJ => "ADJ",
            Tag::ADV => "ADV",
            Tag::DT => "DT",
            Tag::PRP => "PRP",
            Tag::IN => "IN",
            Tag::CC => "CC",
            Tag::NUM => "NUM",
            Tag::WH => "WH",
            Tag::UH => "UH",
            Tag::OTHER => "OTHER",
        }
    }

    /// Maps a coarse tag name or a Penn Treebank tag onto the coarse set.
    pub fn from_name(name: &str) -> Tag {
        if let Some(t) = Tag::ALL.iter().find(|t| t.as_str() == name) {
            return *t;
        }
        match name {
            "PDT" => Tag::DT,
            "TO" => Tag::IN,
            "CD" => Tag::NUM,
            "MD" => Tag::VB,
            "EX" => Tag::PRP,
            _ if name.starts_with("NN") => Tag::NN,
            _ if name.starts_with("VB") => Tag::VB,
            _ if name.starts_with("JJ") => Tag::ADJ,
            _ if name.starts_with("RB") => Tag::ADV,
            _ if name.starts_with("PRP") => Tag::PRP,
            _ if name.starts_with('W') => Tag::WH,
            _ => Tag::OTHER,
        }
    }
}

/// Ordered subset of tags defining one feature block per window slot.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TagSet {
    tags: Vec<Tag>,
}

impl TagSet {
    pub fn coarse() -> Self {
        TagSet { tags: Tag::ALL.to_vec() }
    }

    pub fn custom(tags: Vec<Tag>) -> Self {
        TagSet { tags }
    }

    pub fn len(&self) -> usize {
        self.tags.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tags.is_empty()
    }

    pub fn index_of(&self, tag: Tag) -> Option<usize> {
        self.tags.iter().position(|t| *t == tag)
    }

    pub fn tags(&self) -> &[Tag] {
        &self.tags
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TaggedToken {
    pub token: Token,
    pub tag: Tag,
}

/// Word to most-frequent coarse tag.
#[derive(Debug, Clone, Default)]
pub struct Lexicon {
    entries: HashMap<String, Tag>,
}

impl Lexicon {
    pub fn from_entries<I, S>(entries: I) -> Self
    where
        I: IntoIterator<Item = (S, Tag)>,
        S: Into<String>,
    {
        Lexicon { entries: entries.into_iter().map(|(w, t)| (w.into(), t)).collect() }
    }

    /// Parses `word<whitespace>TAG` lines.
    pub fn parse(text: &str) -> Self {
        Self::from_entries(text.lines().filter_map(|line| {
            let mut it = line.split_whitespace();
            Some((it.next()?.to_lowercase(), Tag::from_name(it.next()?)))
        }))
    }

    /// The lexicon shipped with the crate.
    pub fn builtin() -> &'static Lexicon {
        static LEX: OnceLock<Lexicon> = OnceLock::new();
        LEX.get_or_init(|| Lexicon::parse(LEXICON_DATA))
    }

    pub fn builtin_hash() -> String {
        crate::util::sha256_hex(LEXICON_DATA.as_bytes())
    }

    pub fn get(&self, word: &str) -> Option<Tag> {
        self.entries.get(word).copied()
    }
}

fn is_vowel(c: char) -> bool {
    matches!(c, 'a' | 'e' | 'i' | 'o' | 'u')
}

fn guess(word: &str) -> Tag {
    let n = word.chars().count();
    if word.chars().next().is_some_and(|c| c.is_ascii_digit()) {
        return Tag::NUM;
    }
    if n >= 4 && word.ends_with("ly") {
        return Tag::ADV;
    }
    if (n >= 5 && word.ends_with("ing")) || (n >= 4 && word.ends_with("ed")) {
        return Tag::VB;
    }
    if n >= 3 && word.ends_with('s') {
        let before = word.chars().rev().nth(1).unwrap();
        if before.is_alphabetic() && !is_vowel(before) {
            return Tag::NN;
        }
    }
    Tag::OTHER
}

/// Tags tokens. A precomputed annotation whose span matches a token exactly
/// wins; then the lexicon; then suffix heuristics.
pub fn pos_tag(tokens: &[Token], lexicon: &Lexicon, precomputed: Option<&[PosAnnotation]>) -> Vec<TaggedToken> {
    let given: HashMap<(usize, usize), &str> = precomputed
        .unwrap_or_default()
        .iter()
        .map(|PosAnnotation(s, e, t)| ((*s, *e), t.as_str()))
        .collect();
    tokens
        .iter()
        .map(|tok| {
            let tag = match given.get(&(tok.span.start, tok.span.end)) {
                Some(name) => Tag::from_name(name),
                None => lexicon.get(&tok.lowered).unwrap_or_else(|| guess(&tok.lowered)),
            };
            TaggedToken { token: tok.clone(), tag }
        })
        .collect()
}
