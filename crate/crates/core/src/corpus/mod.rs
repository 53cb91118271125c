//! Corpus ingestion, text normalization and bag-of-words representation.

mod ingest;
mod preprocess;

use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{DrlError, Result};

pub use ingest::{ingest, IngestOptions, Ingested, InputFormat};
pub use preprocess::{
    preprocess, query_to_bow, tokenize, PreprocessConfig, Preprocessed, DEFAULT_STOPWORDS,
};

/// Set key given to documents that carry no partition label.
pub const UNKEYED_SET: &str = "_unkeyed";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawDocument {
    pub id: String,
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub set_key: Option<String>,
}

/// Corpus-wide vocabulary. Term indices are dense (`0..len`) and assigned in
/// order of first occurrence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    terms: Vec<String>,
    doc_freq: Vec<usize>,
    index: HashMap<String, usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
pub struct VocabEntry {
    pub term: String,
    pub index: usize,
    pub doc_freq: usize,
}

impl Vocabulary {
    /// Builds a vocabulary from `(term, doc_freq)` pairs in index order.
    pub fn from_entries<I, S>(entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (S, usize)>,
        S: Into<String>,
    {
        let mut terms = Vec::new();
        let mut doc_freq = Vec::new();
        let mut index = HashMap::new();
        for (term, df) in entries {
            let term = term.into();
            if index.insert(term.clone(), terms.len()).is_some() {
                return Err(DrlError::InvalidParameter(format!(
                    "duplicate vocabulary term `{term}`"
                )));
            }
            terms.push(term);
            doc_freq.push(df);
        }
        Ok(Vocabulary {
            terms,
            doc_freq,
            index,
        })
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn index_of(&self, term: &str) -> Option<usize> {
        self.index.get(term).copied()
    }

    pub fn term(&self, index: usize) -> Option<&str> {
        self.terms.get(index).map(String::as_str)
    }

    pub fn terms(&self) -> &[String] {
        &self.terms
    }

    pub fn doc_freq(&self, index: usize) -> Option<usize> {
        self.doc_freq.get(index).copied()
    }

    pub fn entries(&self) -> Vec<VocabEntry> {
        self.terms
            .iter()
            .zip(&self.doc_freq)
            .enumerate()
            .map(|(index, (term, &doc_freq))| VocabEntry {
                term: term.clone(),
                index,
                doc_freq,
            })
            .collect()
    }

    /// SHA-256 over the ordered term list, hex encoded. Two vocabularies
    /// hash equal iff they map the same terms to the same indices.
    pub fn content_hash(&self) -> String {
        let mut hasher = Sha256::new();
        for term in &self.terms {
            hasher.update(term.as_bytes());
            hasher.update([0u8]);
        }
        hasher
            .finalize()
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }

    /// Converts a token list into a bag of words. Returns the document and
    /// the distinct out-of-vocabulary tokens, in order of appearance.
    pub fn bow_from_tokens<S: AsRef<str>>(
        &self,
        id: impl Into<String>,
        tokens: &[S],
    ) -> (BowDocument, Vec<String>) {
        let mut counts = BTreeMap::new();
        let mut oov: Vec<String> = Vec::new();
        for tok in tokens {
            let tok = tok.as_ref();
            match self.index_of(tok) {
                Some(i) => *counts.entry(i).or_insert(0) += 1,
                None => {
                    if !oov.iter().any(|t| t == tok) {
                        oov.push(tok.to_string());
                    }
                }
            }
        }
        (BowDocument::from_counts(id, counts), oov)
    }

    pub fn write_json(&self, path: &Path) -> Result<()> {
        let json = serde_json::to_string_pretty(&self.entries())?;
        std::fs::write(path, json + "\n").map_err(|e| DrlError::io(path, e))
    }

    pub fn read_json(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| DrlError::io(path, e))?;
        let mut entries: Vec<VocabEntry> = serde_json::from_str(&text)?;
        entries.sort_by_key(|e| e.index);
        for (expected, e) in entries.iter().enumerate() {
            if e.index != expected {
                return Err(DrlError::Config(format!(
                    "{}: vocabulary indices are not contiguous at {expected}",
                    path.display()
                )));
            }
        }
        Vocabulary::from_entries(entries.into_iter().map(|e| (e.term, e.doc_freq)))
    }
}

/// Sparse term counts of one document.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BowDocument {
    pub id: String,
    counts: BTreeMap<usize, u32>,
    total_tokens: u32,
}

impl BowDocument {
    /// Zero counts are dropped.
    pub fn from_counts(id: impl Into<String>, counts: BTreeMap<usize, u32>) -> Self {
        let counts: BTreeMap<usize, u32> = counts.into_iter().filter(|&(_, c)| c > 0).collect();
        let total_tokens = counts.values().sum();
        BowDocument {
            id: id.into(),
            counts,
            total_tokens,
        }
    }

    pub fn counts(&self) -> &BTreeMap<usize, u32> {
        &self.counts
    }

    pub fn total_tokens(&self) -> u32 {
        self.total_tokens
    }

    pub fn is_empty(&self) -> bool {
        self.total_tokens == 0
    }

    /// Token-level expansion in ascending term-index order.
    pub fn tokens(&self) -> impl Iterator<Item = usize> + '_ {
        self.counts
            .iter()
            .flat_map(|(&w, &c)| std::iter::repeat_n(w, c as usize))
    }

    /// Every count multiplied by `factor`.
    pub fn scaled(&self, factor: u32) -> BowDocument {
        BowDocument::from_counts(
            self.id.clone(),
            self.counts.iter().map(|(&w, &c)| (w, c * factor)).collect(),
        )
    }

    /// Euclidean norm of the count vector.
    pub fn norm(&self) -> f64 {
        self.counts
            .values()
            .map(|&c| f64::from(c) * f64::from(c))
            .sum::<f64>()
            .sqrt()
    }

    /// Euclidean distance between two count vectors.
    pub fn distance(&self, other: &BowDocument) -> f64 {
        let mut sq = 0.0;
        let mut a = self.counts.iter().peekable();
        let mut b = other.counts.iter().peekable();
        loop {
            let d = match (a.peek(), b.peek()) {
                (Some(&(&i, &x)), Some(&(&j, &y))) => {
                    if i == j {
                        a.next();
                        b.next();
                        f64::from(x) - f64::from(y)
                    } else if i < j {
                        a.next();
                        f64::from(x)
                    } else {
                        b.next();
                        f64::from(y)
                    }
                }
                (Some(&(_, &x)), None) => {
                    a.next();
                    f64::from(x)
                }
                (None, Some(&(_, &y))) => {
                    b.next();
                    f64::from(y)
                }
                (None, None) => break,
            };
            sq += d * d;
        }
        sq.sqrt()
    }
}

/// Dense count vector of length `vocab_size`.
pub fn bow_vector(doc: &BowDocument, vocab_size: usize) -> Result<Vec<u32>> {
    let mut dense = vec![0u32; vocab_size];
    for (&w, &c) in doc.counts() {
        let slot = dense.get_mut(w).ok_or(DrlError::IndexOutOfRange {
            index: w,
            size: vocab_size,
        })?;
        *slot = c;
    }
    Ok(dense)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DocumentSet {
    pub key: String,
    pub docs: Vec<BowDocument>,
}

/// Groups documents by the `set_key` of their raw counterpart. Sets come back
/// sorted by key; documents keep their input order within a set.
pub fn partition(docs: &[BowDocument], raws: &[RawDocument]) -> Vec<DocumentSet> {
    let keys: HashMap<&str, Option<&str>> = raws
        .iter()
        .map(|r| (r.id.as_str(), r.set_key.as_deref()))
        .collect();
    let mut sets: BTreeMap<String, Vec<BowDocument>> = BTreeMap::new();
    for doc in docs {
        let key = keys
            .get(doc.id.as_str())
            .copied()
            .flatten()
            .unwrap_or(UNKEYED_SET);
        sets.entry(key.to_string()).or_default().push(doc.clone());
    }
    sets.into_iter()
        .map(|(key, docs)| DocumentSet { key, docs })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn doc(id: &str, counts: &[(usize, u32)]) -> BowDocument {
        BowDocument::from_counts(id, counts.iter().copied().collect())
    }

    fn raw(id: &str, key: Option<&str>) -> RawDocument {
        RawDocument {
            id: id.into(),
            text: String::new(),
            set_key: key.map(str::to_string),
        }
    }

    #[test]
    fn dense_vector_places_counts() {
        let d = doc("d", &[(0, 2), (3, 1)]);
        assert_eq!(bow_vector(&d, 5).unwrap(), vec![2, 0, 0, 1, 0]);
        assert_eq!(bow_vector(&doc("e", &[]), 3).unwrap(), vec![0, 0, 0]);
    }

    #[test]
    fn dense_vector_rejects_out_of_range() {
        let d = doc("d", &[(7, 1)]);
        assert!(matches!(
            bow_vector(&d, 5),
            Err(DrlError::IndexOutOfRange { index: 7, size: 5 })
        ));
    }

    #[test]
    fn total_tokens_is_sum_of_counts() {
        let d = doc("d", &[(1, 3), (4, 2), (9, 0)]);
        assert_eq!(d.total_tokens(), 5);
        assert_eq!(d.counts().len(), 2);
        assert_eq!(d.tokens().collect::<Vec<_>>(), vec![1, 1, 1, 4, 4]);
    }

    #[test]
    fn distance_and_norm() {
        let a = doc("a", &[(0, 1), (1, 1), (2, 1)]);
        let b = doc("b", &[(0, 2), (1, 1), (2, 1)]);
        assert!((a.norm() - 3f64.sqrt()).abs() < 1e-15);
        assert_eq!(a.distance(&b), 1.0);
        let c = doc("c", &[(1, 1), (5, 2)]);
        // (1,0,1,0,0,-2) -> sqrt(6)
        assert!((a.distance(&c) - 6f64.sqrt()).abs() < 1e-15);
        assert_eq!(a.distance(&a), 0.0);
    }

    #[test]
    fn partition_counts() {
        let keys = ["a", "a", "b", "b", "b"];
        let raws: Vec<_> = keys
            .iter()
            .enumerate()
            .map(|(i, k)| raw(&i.to_string(), Some(k)))
            .collect();
        let docs: Vec<_> = (0..5).map(|i| doc(&i.to_string(), &[(0, 1)])).collect();
        let sets = partition(&docs, &raws);
        assert_eq!(sets.len(), 2);
        assert_eq!((sets[0].key.as_str(), sets[0].docs.len()), ("a", 2));
        assert_eq!((sets[1].key.as_str(), sets[1].docs.len()), ("b", 3));
    }

    #[test]
    fn unkeyed_documents_share_default_set() {
        let raws = vec![raw("x", None), raw("y", None)];
        let docs = vec![doc("x", &[(0, 1)]), doc("y", &[(1, 1)])];
        let sets = partition(&docs, &raws);
        assert_eq!(sets.len(), 1);
        assert_eq!(sets[0].key, UNKEYED_SET);
        assert_eq!(sets[0].docs.len(), 2);
    }

    #[test]
    fn vocabulary_rejects_duplicates() {
        assert!(Vocabulary::from_entries([("a", 1), ("a", 2)]).is_err());
    }

    #[test]
    fn vocabulary_hash_depends_on_order() {
        let v1 = Vocabulary::from_entries([("a", 1), ("b", 1)]).unwrap();
        let v2 = Vocabulary::from_entries([("b", 1), ("a", 1)]).unwrap();
        let v3 = Vocabulary::from_entries([("a", 9), ("b", 9)]).unwrap();
        assert_ne!(v1.content_hash(), v2.content_hash());
        assert_eq!(v1.content_hash(), v3.content_hash());
    }

    #[test]
    fn vocabulary_json_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("vocab.json");
        let v = Vocabulary::from_entries([("usa", 7), ("cup", 5)]).unwrap();
        v.write_json(&path).unwrap();
        let back = Vocabulary::read_json(&path).unwrap();
        assert_eq!(back, v);
        assert_eq!(back.doc_freq(1), Some(5));
    }
}
