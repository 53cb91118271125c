//! End-to-end commands: ingest, preprocess, train, score, perturb and rank.
//!
//! Each command writes its files into `run.output_dir` and returns the
//! in-memory result so callers (the binary, tests) can inspect it.

mod config;
mod perturb;
mod rank;
mod score;

use std::collections::HashSet;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use log::{info, warn};
use serde::Serialize;

pub use config::{InputSection, LdaSection, PreprocessSection, RunConfig, RunSection};
pub use perturb::{cmd_perturb, parse_perturbation_spec, PerturbReport, SpecRow};
pub use rank::{cmd_rank, equivalence_classes, RankReport};
pub use score::{cmd_score, DrlReport, ModelMode, QueryReport, SetReport, UnscoredSet};

use crate::corpus::{
    ingest, partition, preprocess, DocumentSet, PreprocessConfig, Preprocessed, RawDocument,
};
use crate::error::{DrlError, Result};
use crate::lda::{train, TopicModel};
use crate::rng::derive_seed;

/// A corpus after ingestion, preprocessing and partitioning.
#[derive(Debug, Clone)]
pub struct PreparedCorpus {
    pub raws: Vec<RawDocument>,
    pub preprocessed: Preprocessed,
    pub sets: Vec<DocumentSet>,
    pub preprocess_config: PreprocessConfig,
}

/// Reads every input file and preprocesses the union as one batch.
pub fn prepare_corpus(cfg: &RunConfig) -> Result<PreparedCorpus> {
    cfg.validate()?;
    let opts = cfg.input.ingest_options();
    let mut raws = Vec::new();
    let mut seen = HashSet::new();
    for path in &cfg.input.paths {
        let ingested = ingest(path, cfg.input.format, &opts)?;
        for w in &ingested.warnings {
            warn!("{w}");
        }
        for doc in ingested.docs {
            if !seen.insert(doc.id.clone()) {
                return Err(DrlError::DuplicateId(doc.id));
            }
            raws.push(doc);
        }
    }
    let preprocess_config = cfg.preprocess.resolve()?;
    let preprocessed = preprocess(&raws, &preprocess_config)?;
    if !preprocessed.dropped.is_empty() {
        info!(
            "dropped {} documents with fewer than {} tokens",
            preprocessed.dropped.len(),
            preprocess_config.min_doc_tokens
        );
    }
    let sets = partition(&preprocessed.docs, &raws);
    Ok(PreparedCorpus {
        raws,
        preprocessed,
        sets,
        preprocess_config,
    })
}

/// Seed of the model trained for run `run` (runs count from 1; the model
/// shared by `train`, reuse mode and `perturb` uses stream 0).
pub fn model_seed(master_seed: u64, run: u64) -> u64 {
    derive_seed(master_seed, run)
}

pub(crate) fn train_model(corpus: &PreparedCorpus, cfg: &RunConfig, seed: u64) -> Result<TopicModel> {
    let lda = cfg.lda.resolve(seed)?;
    train(&corpus.preprocessed.docs, &corpus.preprocessed.vocab, &lda)
}

/// Loads `path` against the corpus vocabulary, or trains the shared model.
pub(crate) fn load_or_train(
    corpus: &PreparedCorpus,
    cfg: &RunConfig,
    model_path: Option<&Path>,
) -> Result<TopicModel> {
    match model_path {
        Some(path) => TopicModel::load(path, corpus.preprocessed.vocab.clone()),
        None => train_model(corpus, cfg, model_seed(cfg.run.master_seed, 0)),
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct TopicSummary {
    pub topic: usize,
    pub top_words: Vec<(String, f64)>,
}

#[derive(Debug, Clone, Serialize)]
pub struct TrainSummary {
    pub vocab_size: usize,
    pub num_topics: usize,
    pub num_docs: usize,
    pub num_dropped: usize,
    pub num_sets: usize,
    pub seed: u64,
    pub model_path: PathBuf,
    pub vocab_path: PathBuf,
    pub topics: Vec<TopicSummary>,
}

impl std::fmt::Display for TrainSummary {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(
            f,
            "V = {}, K = {}, {} documents ({} dropped) in {} sets",
            self.vocab_size, self.num_topics, self.num_docs, self.num_dropped, self.num_sets
        )?;
        for t in &self.topics {
            let words: Vec<&str> = t.top_words.iter().map(|(w, _)| w.as_str()).collect();
            writeln!(f, "topic {:>3}: {}", t.topic, words.join(" "))?;
        }
        writeln!(f, "model: {}", self.model_path.display())?;
        write!(f, "vocabulary: {}", self.vocab_path.display())
    }
}

/// Trains one model on the whole corpus and writes `model.json` and
/// `vocab.json`.
pub fn cmd_train(cfg: &RunConfig) -> Result<TrainSummary> {
    let corpus = prepare_corpus(cfg)?;
    let seed = model_seed(cfg.run.master_seed, 0);
    let model = train_model(&corpus, cfg, seed)?;

    let out = ensure_dir(&cfg.run.output_dir)?;
    let model_path = out.join("model.json");
    let vocab_path = out.join("vocab.json");
    model.save(&model_path)?;
    corpus.preprocessed.vocab.write_json(&vocab_path)?;

    let topics = (0..model.num_topics())
        .map(|k| {
            Ok(TopicSummary {
                topic: k,
                top_words: model.top_words(k, 10)?,
            })
        })
        .collect::<Result<_>>()?;
    Ok(TrainSummary {
        vocab_size: model.vocab_size(),
        num_topics: model.num_topics(),
        num_docs: corpus.preprocessed.docs.len(),
        num_dropped: corpus.preprocessed.dropped.len(),
        num_sets: corpus.sets.len(),
        seed,
        model_path,
        vocab_path,
        topics,
    })
}

pub(crate) fn ensure_dir(dir: &Path) -> Result<PathBuf> {
    std::fs::create_dir_all(dir).map_err(|e| DrlError::io(dir, e))?;
    Ok(dir.to_path_buf())
}

pub(crate) fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let file = File::create(path).map_err(|e| DrlError::io(path, e))?;
    let mut w = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n").map_err(|e| DrlError::io(path, e))?;
    w.flush().map_err(|e| DrlError::io(path, e))
}

pub(crate) fn csv_writer(path: &Path) -> Result<csv::Writer<File>> {
    let file = File::create(path).map_err(|e| DrlError::io(path, e))?;
    Ok(csv::Writer::from_writer(file))
}

/// Population mean and variance.
pub(crate) fn mean_var(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    (mean, var)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mean_var_matches_hand_values() {
        let (m, v) = mean_var(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m, 2.5);
        assert_eq!(v, 1.25);
        assert_eq!(mean_var(&[7.0]), (7.0, 0.0));
    }
}
