use std::collections::{BTreeMap, HashMap, HashSet};
use std::path::Path;
use std::sync::LazyLock;

use log::warn;
use rayon::prelude::*;
use regex::Regex;

use super::{BowDocument, RawDocument, Vocabulary};
use crate::error::{DrlError, Result};

/// Bundled English stopword list, one term per line.
pub const DEFAULT_STOPWORDS: &str = include_str!("../../data/stopwords_en.txt");

static URL_RE: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?i)\b(?:https?://|www\.)\S*").expect("valid url regex"));

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PreprocessConfig {
    pub stopwords: HashSet<String>,
    pub min_doc_freq: usize,
    pub min_doc_tokens: usize,
    pub lowercase: bool,
    pub strip_urls: bool,
    /// Keep only ASCII letters and digits.
    pub charset_filter: bool,
}

impl Default for PreprocessConfig {
    fn default() -> Self {
        PreprocessConfig {
            stopwords: parse_stopwords(DEFAULT_STOPWORDS),
            min_doc_freq: 5,
            min_doc_tokens: 2,
            lowercase: true,
            strip_urls: true,
            charset_filter: true,
        }
    }
}

/// Blank lines and `#` comments are ignored.
pub fn parse_stopwords(text: &str) -> HashSet<String> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(str::to_lowercase)
        .collect()
}

impl PreprocessConfig {
    pub fn with_stopword_file(mut self, path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| DrlError::io(path, e))?;
        self.stopwords = parse_stopwords(&text);
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if self.min_doc_freq < 1 {
            return Err(DrlError::Config("min_doc_freq must be at least 1".into()));
        }
        if self.min_doc_tokens < 1 {
            return Err(DrlError::Config("min_doc_tokens must be at least 1".into()));
        }
        Ok(())
    }
}

/// Normalizes and splits `text`: lowercase, strip URLs, drop characters
/// outside the kept charset, split on non-alphanumeric boundaries, remove
/// stopwords. Stopword matching happens after lowercasing.
pub fn tokenize(text: &str, cfg: &PreprocessConfig) -> Vec<String> {
    let mut s = if cfg.lowercase {
        text.to_lowercase()
    } else {
        text.to_string()
    };
    if cfg.strip_urls {
        s = URL_RE.replace_all(&s, " ").into_owned();
    }
    let keep: fn(char) -> bool = if cfg.charset_filter {
        |c| c.is_ascii_alphanumeric()
    } else {
        char::is_alphanumeric
    };
    s.split(|c: char| !keep(c))
        .filter(|t| !t.is_empty())
        .filter(|t| !cfg.stopwords.contains(*t))
        .map(str::to_string)
        .collect()
}

#[derive(Debug, Clone)]
pub struct Preprocessed {
    pub docs: Vec<BowDocument>,
    pub vocab: Vocabulary,
    /// Ids of documents dropped for having too few surviving tokens.
    pub dropped: Vec<String>,
}

/// Runs the full pipeline over a batch: tokenize every document, count
/// document frequencies, prune rare terms once, rebuild counts and drop
/// documents left with fewer than `min_doc_tokens` tokens.
pub fn preprocess(docs: &[RawDocument], cfg: &PreprocessConfig) -> Result<Preprocessed> {
    cfg.validate()?;
    if docs.is_empty() {
        return Err(DrlError::EmptyCorpus);
    }
    let tokenized: Vec<Vec<String>> = docs.par_iter().map(|d| tokenize(&d.text, cfg)).collect();

    let mut doc_freq: HashMap<&str, usize> = HashMap::new();
    let mut first_seen: Vec<&str> = Vec::new();
    for toks in &tokenized {
        let mut in_doc = HashSet::new();
        for t in toks {
            if in_doc.insert(t.as_str()) {
                let df = doc_freq.entry(t.as_str()).or_insert(0);
                if *df == 0 {
                    first_seen.push(t.as_str());
                }
                *df += 1;
            }
        }
    }

    let vocab = Vocabulary::from_entries(
        first_seen
            .iter()
            .filter(|t| doc_freq[*t] >= cfg.min_doc_freq)
            .map(|t| (*t, doc_freq[t])),
    )?;

    let mut out = Vec::with_capacity(docs.len());
    let mut dropped = Vec::new();
    for (raw, toks) in docs.iter().zip(&tokenized) {
        let mut counts = BTreeMap::new();
        for t in toks {
            if let Some(i) = vocab.index_of(t) {
                *counts.entry(i).or_insert(0u32) += 1;
            }
        }
        let bow = BowDocument::from_counts(raw.id.clone(), counts);
        if (bow.total_tokens() as usize) < cfg.min_doc_tokens {
            dropped.push(raw.id.clone());
        } else {
            out.push(bow);
        }
    }
    if out.is_empty() {
        return Err(DrlError::EmptyCorpus);
    }
    Ok(Preprocessed {
        docs: out,
        vocab,
        dropped,
    })
}

/// Tokenizes a query against an existing vocabulary. Queries are never
/// dropped for length; out-of-vocabulary terms are removed and returned.
pub fn query_to_bow(
    text: &str,
    vocab: &Vocabulary,
    cfg: &PreprocessConfig,
) -> (BowDocument, Vec<String>) {
    let tokens = tokenize(text, cfg);
    let (bow, oov) = vocab.bow_from_tokens("query", &tokens);
    if !oov.is_empty() {
        warn!("query terms not in vocabulary: {}", oov.join(", "));
    }
    (bow, oov)
}
