//! Tokenization, stemming, stopwords and a lexicon part-of-speech tagger.

mod pos;
mod porter;

use std::collections::HashSet;
use std::ops::Range;
use std::sync::OnceLock;

pub use pos::{pos_tag, Lexicon, Tag, TagSet, TaggedToken, TAGSET_VERSION};
pub use porter::porter_stem;

const STOPWORDS_DATA: &str = include_str!("../../data/stopwords_en.txt");

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub surface: String,
    pub span: Range<usize>,
    pub lowered: String,
}

/// Tokens plus sentence boundaries, given as the indices of tokens that end
/// a sentence.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Tokenized {
    pub tokens: Vec<Token>,
    pub sentence_ends: Vec<usize>,
}

impl Tokenized {
    /// Sentence number of every token.
    pub fn sentence_ids(&self) -> Vec<usize> {
        let mut ids = Vec::with_capacity(self.tokens.len());
        let mut sentence = 0;
        let mut ends = self.sentence_ends.iter().peekable();
        for i in 0..self.tokens.len() {
            ids.push(sentence);
            if ends.peek() == Some(&&i) {
                ends.next();
                sentence += 1;
            }
        }
        ids
    }
}

const ABBREVIATIONS: &[&str] = &[
    "mr", "mrs", "ms", "dr", "prof", "st", "jr", "sr", "vs", "inc", "ltd", "co", "corp", "gen", "col", "lt", "sgt",
    "capt", "rev", "gov", "sen", "rep", "mt", "ft", "fig", "no", "vol", "approx", "dept", "est", "jan", "feb", "mar",
    "apr", "jun", "jul", "aug", "sep", "sept", "oct", "nov", "dec",
];

fn is_apostrophe(c: char) -> bool {
    c == '\'' || c == '\u{2019}'
}

fn is_closing(c: char) -> bool {
    matches!(c, '"' | '\'' | ')' | ']' | '}' | '\u{2019}' | '\u{201d}')
}

/// Splits text into maximal runs of letters and digits, keeping apostrophes
/// that sit between two alphanumerics. Punctuation is dropped.
pub fn tokenize(text: &str) -> Tokenized {
    let mut tokens = Vec::new();
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let mut i = 0;
    while i < chars.len() {
        if !chars[i].1.is_alphanumeric() {
            i += 1;
            continue;
        }
        let start = chars[i].0;
        let mut j = i + 1;
        while j < chars.len() {
            let c = chars[j].1;
            if c.is_alphanumeric() {
                j += 1;
            } else if is_apostrophe(c) && j + 1 < chars.len() && chars[j + 1].1.is_alphanumeric() {
                j += 2;
            } else {
                break;
            }
        }
        let end = chars.get(j).map_or(text.len(), |c| c.0);
        let surface = &text[start..end];
        tokens.push(Token {
            surface: surface.to_string(),
            span: start..end,
            lowered: surface.to_lowercase(),
        });
        i = j;
    }

    let mut sentence_ends = Vec::new();
    for (k, tok) in tokens.iter().enumerate() {
        let gap_end = tokens.get(k + 1).map_or(text.len(), |t| t.span.start);
        let gap = &text[tok.span.end..gap_end];
        let Some(term_at) = gap.find(['.', '!', '?']) else { continue };
        if gap[..term_at].chars().any(char::is_whitespace) {
            continue;
        }
        let terminator = gap[term_at..].chars().next().unwrap();
        if terminator == '.'
            && (tok.lowered.chars().count() == 1 || ABBREVIATIONS.contains(&tok.lowered.as_str()))
        {
            continue;
        }
        let after = gap[term_at..].trim_start_matches(|c: char| matches!(c, '.' | '!' | '?') || is_closing(c));
        let ends = match tokens.get(k + 1) {
            None => after.chars().all(|c| c.is_whitespace() || !c.is_alphanumeric()),
            Some(next) => {
                after.starts_with(char::is_whitespace) && next.surface.chars().next().is_some_and(char::is_uppercase)
            }
        };
        if ends {
            sentence_ends.push(k);
        }
    }
    Tokenized { tokens, sentence_ends }
}

fn stopwords() -> &'static HashSet<&'static str> {
    static SET: OnceLock<HashSet<&'static str>> = OnceLock::new();
    SET.get_or_init(|| STOPWORDS_DATA.lines().map(str::trim).filter(|l| !l.is_empty()).collect())
}

pub fn is_stopword(word: &str) -> bool {
    stopwords().contains(word.to_lowercase().as_str())
}

/// Content hash of the shipped stopword list, recorded in model files.
pub fn stopwords_hash() -> String {
    crate::util::sha256_hex(STOPWORDS_DATA.as_bytes())
}
