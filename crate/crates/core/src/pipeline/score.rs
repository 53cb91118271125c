use std::path::Path;
use std::time::Instant;

use log::info;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{
    csv_writer, ensure_dir, load_or_train, mean_var, model_seed, prepare_corpus, train_model,
    write_json, PreparedCorpus, RunConfig,
};
use crate::corpus::{query_to_bow, BowDocument, DocumentSet};
use crate::error::{DrlError, Result};
use crate::lda::{project, SemanticVector, TopicModel};
use crate::metrics::{disparity, rank_sets, relevance, Coherence, SetScore};
use crate::rng::{derive_seed, stable_hash, QUERY_STREAM};

/// How the topic model of each run was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelMode {
    /// A fresh model per run.
    Retrain,
    /// One model trained once and shared by all runs.
    Reuse,
    /// A model file given on the command line.
    Supplied,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryReport {
    pub text: String,
    /// In-vocabulary query tokens.
    pub tokens: Vec<String>,
    pub oov_terms: Vec<String>,
    /// Query topic distribution averaged over runs. Retrained models number
    /// their topics independently, so this average only means something when
    /// every run shares one model.
    pub mean_theta: Vec<f64>,
    /// Query topic distribution of each run.
    pub theta_runs: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SetReport {
    pub set_key: String,
    pub n_docs: usize,
    pub n_docs_scored: usize,
    pub n_docs_skipped: usize,
    pub relevance_mean: f64,
    pub relevance_var: f64,
    pub disparity_mean: f64,
    pub disparity_var: f64,
    /// Reciprocal of `disparity_mean`.
    pub coherence: Coherence,
    pub relevance_runs: Vec<f64>,
    pub disparity_runs: Vec<f64>,
}

/// A set that could not be scored (fewer than two projectable documents).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnscoredSet {
    pub set_key: String,
    pub n_docs: usize,
    pub n_docs_scored: usize,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DrlReport {
    pub config_hash: String,
    pub model_mode: ModelMode,
    pub master_seed: u64,
    pub n_runs: usize,
    /// Seed of run `r` (index `r - 1`); models and projections derive from it.
    pub run_seeds: Vec<u64>,
    pub num_topics: usize,
    pub vocab_size: usize,
    pub query: QueryReport,
    /// Scored sets in key order.
    pub sets: Vec<SetReport>,
    /// Scored sets from most to least ready, by mean scores.
    pub ranking: Vec<SetScore>,
    pub unscored_sets: Vec<UnscoredSet>,
}

struct SetRun {
    relevance: Option<f64>,
    disparity: Option<f64>,
    scored: usize,
}

struct RunResult {
    theta_q: SemanticVector,
    sets: Vec<SetRun>,
}

fn score_run(
    model: &TopicModel,
    query: &BowDocument,
    sets: &[DocumentSet],
    cfg: &RunConfig,
    run_seed: u64,
) -> Result<RunResult> {
    let theta_q = project(model, query, derive_seed(run_seed, QUERY_STREAM))?;
    let sets = sets
        .iter()
        .map(|set| {
            let thetas: Vec<SemanticVector> = set
                .docs
                .par_iter()
                .filter_map(|d| project(model, d, derive_seed(run_seed, stable_hash(&d.id))).ok())
                .collect();
            let relevance = relevance(&thetas, &theta_q).ok();
            let disparity = if thetas.len() >= 2 {
                Some(disparity(&thetas, &cfg.jr)?)
            } else {
                None
            };
            Ok(SetRun {
                relevance,
                disparity,
                scored: thetas.len(),
            })
        })
        .collect::<Result<_>>()?;
    Ok(RunResult { theta_q, sets })
}

fn pool(workers: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| DrlError::Config(format!("cannot start worker pool: {e}")))
}

/// Scores every set against the query over `n_runs` seeded runs and writes
/// `report.json`, `scores.csv`, `timeseries.csv` and `query_topics.csv`.
///
/// With `model_path` the supplied model serves every run; otherwise each run
/// trains its own model unless `run.reuse_model` is set.
pub fn cmd_score(cfg: &RunConfig, model_path: Option<&Path>) -> Result<DrlReport> {
    let corpus = prepare_corpus(cfg)?;
    let report = score_corpus(&corpus, cfg, model_path)?;
    write_score_files(&report, &cfg.run.output_dir)?;
    Ok(report)
}

pub(crate) fn score_corpus(
    corpus: &PreparedCorpus,
    cfg: &RunConfig,
    model_path: Option<&Path>,
) -> Result<DrlReport> {
    let vocab = &corpus.preprocessed.vocab;
    let (query, oov) = query_to_bow(&cfg.run.query, vocab, &corpus.preprocess_config);
    if query.is_empty() {
        return Err(DrlError::QueryOutOfVocabulary(oov));
    }

    let mode = match (model_path, cfg.run.reuse_model) {
        (Some(_), _) => ModelMode::Supplied,
        (None, true) => ModelMode::Reuse,
        (None, false) => ModelMode::Retrain,
    };
    let shared = match mode {
        ModelMode::Retrain => None,
        _ => Some(load_or_train(corpus, cfg, model_path)?),
    };

    let master = cfg.run.master_seed;
    let run_seeds: Vec<u64> = (1..=cfg.run.n_runs as u64)
        .map(|r| model_seed(master, r))
        .collect();
    let started = Instant::now();
    let runs: Vec<RunResult> = pool(cfg.run.workers)?.install(|| {
        run_seeds
            .par_iter()
            .map(|&seed| {
                let model = match &shared {
                    Some(m) => std::borrow::Cow::Borrowed(m),
                    None => std::borrow::Cow::Owned(train_model(corpus, cfg, seed)?),
                };
                score_run(&model, &query, &corpus.sets, cfg, seed)
            })
            .collect::<Result<_>>()
    })?;
    info!(
        "{} runs finished in {:.1}s",
        runs.len(),
        started.elapsed().as_secs_f64()
    );

    let k = cfg.lda.num_topics;
    let mut mean_theta = vec![0.0; k];
    for run in &runs {
        for (acc, x) in mean_theta.iter_mut().zip(run.theta_q.as_slice()) {
            *acc += x;
        }
    }
    mean_theta.iter_mut().for_each(|x| *x /= runs.len() as f64);

    let mut sets = Vec::new();
    let mut unscored = Vec::new();
    for (i, set) in corpus.sets.iter().enumerate() {
        let per_run: Vec<&SetRun> = runs.iter().map(|r| &r.sets[i]).collect();
        let scored = per_run.iter().map(|s| s.scored).min().unwrap_or(0);
        let rel: Option<Vec<f64>> = per_run.iter().map(|s| s.relevance).collect();
        let dd: Option<Vec<f64>> = per_run.iter().map(|s| s.disparity).collect();
        match (rel, dd) {
            (Some(relevance_runs), Some(disparity_runs)) => {
                let (relevance_mean, relevance_var) = mean_var(&relevance_runs);
                let (disparity_mean, disparity_var) = mean_var(&disparity_runs);
                sets.push(SetReport {
                    set_key: set.key.clone(),
                    n_docs: set.docs.len(),
                    n_docs_scored: scored,
                    n_docs_skipped: set.docs.len() - scored,
                    relevance_mean,
                    relevance_var,
                    disparity_mean,
                    disparity_var,
                    coherence: Coherence::from_disparity(disparity_mean),
                    relevance_runs,
                    disparity_runs,
                });
            }
            _ => unscored.push(UnscoredSet {
                set_key: set.key.clone(),
                n_docs: set.docs.len(),
                n_docs_scored: scored,
                reason: "fewer than two projectable documents".into(),
            }),
        }
    }
    if sets.is_empty() {
        return Err(DrlError::TooFew {
            needed: 2,
            got: unscored.iter().map(|u| u.n_docs_scored).max().unwrap_or(0),
        });
    }

    let scores: Vec<SetScore> = sets
        .iter()
        .map(|s| {
            SetScore::new(
                s.set_key.clone(),
                s.relevance_mean,
                s.disparity_mean,
                s.n_docs_scored,
                s.n_docs_skipped,
            )
        })
        .collect();

    Ok(DrlReport {
        config_hash: cfg.config_hash(),
        model_mode: mode,
        master_seed: master,
        n_runs: cfg.run.n_runs,
        run_seeds,
        num_topics: k,
        vocab_size: vocab.len(),
        query: QueryReport {
            text: cfg.run.query.clone(),
            tokens: query.tokens().map(|w| vocab.terms()[w].clone()).collect(),
            oov_terms: oov,
            mean_theta,
            theta_runs: runs.iter().map(|r| r.theta_q.as_slice().to_vec()).collect(),
        },
        sets,
        ranking: rank_sets(&scores),
        unscored_sets: unscored,
    })
}

fn write_score_files(report: &DrlReport, dir: &Path) -> Result<()> {
    let dir = ensure_dir(dir)?;
    write_json(&dir.join("report.json"), report)?;

    let by_key: std::collections::HashMap<&str, &SetReport> =
        report.sets.iter().map(|s| (s.set_key.as_str(), s)).collect();
    let mut w = csv_writer(&dir.join("scores.csv"))?;
    w.write_record([
        "rank",
        "set_key",
        "relevance_mean",
        "relevance_var",
        "disparity_mean",
        "disparity_var",
        "coherence",
        "n_docs_scored",
        "n_docs_skipped",
        "config_hash",
    ])?;
    for (i, s) in report.ranking.iter().enumerate() {
        let full = by_key[s.set_key.as_str()];
        w.write_record([
            (i + 1).to_string(),
            s.set_key.clone(),
            s.relevance.to_string(),
            full.relevance_var.to_string(),
            s.disparity.to_string(),
            full.disparity_var.to_string(),
            s.coherence.to_string(),
            s.n_docs_scored.to_string(),
            s.n_docs_skipped.to_string(),
            report.config_hash.clone(),
        ])?;
    }
    w.flush().map_err(|e| crate::error::DrlError::io(dir.join("scores.csv"), e))?;

    // x = set key, y = metric; one row per set in key order
    let mut w = csv_writer(&dir.join("timeseries.csv"))?;
    w.write_record([
        "set_key",
        "relevance_mean",
        "relevance_sd",
        "disparity_mean",
        "disparity_sd",
    ])?;
    for s in &report.sets {
        w.write_record([
            s.set_key.clone(),
            s.relevance_mean.to_string(),
            s.relevance_var.sqrt().to_string(),
            s.disparity_mean.to_string(),
            s.disparity_var.sqrt().to_string(),
        ])?;
    }
    w.flush().map_err(|e| DrlError::io(dir.join("timeseries.csv"), e))?;

    let mut w = csv_writer(&dir.join("query_topics.csv"))?;
    w.write_record(["topic", "weight"])?;
    for (k, p) in report.query.mean_theta.iter().enumerate() {
        w.write_record([k.to_string(), p.to_string()])?;
    }
    w.flush().map_err(|e| DrlError::io(dir.join("query_topics.csv"), e))?;
    Ok(())
}
