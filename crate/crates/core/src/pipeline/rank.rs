use std::collections::HashMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{csv_writer, ensure_dir, write_json, DrlReport};
use crate::error::{DrlError, Result};
use crate::metrics::{informationally_equivalent, rank_sets, SetScore};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedSet {
    pub rank: usize,
    /// Index into `classes`.
    pub class: usize,
    #[serde(flatten)]
    pub score: SetScore,
    pub source: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankReport {
    pub config_hash: String,
    pub delta: f64,
    pub ranking: Vec<RankedSet>,
    /// δ-equivalence classes in rank order.
    pub classes: Vec<Vec<String>>,
}

/// Groups a ranked list into δ-equivalence classes.
///
/// Equivalence within δ is not transitive, so classes are formed greedily:
/// walking down the ranking, a set joins the current class when its
/// relevance is within δ of the class's first (highest) member, and starts
/// a new class otherwise. Every pair inside a class is then within δ.
pub fn equivalence_classes(ranked: &[SetScore], delta: f64) -> Vec<Vec<String>> {
    let mut classes: Vec<Vec<String>> = Vec::new();
    let mut leader = f64::NAN;
    for s in ranked {
        if classes.is_empty() || !informationally_equivalent(leader, s.relevance, delta) {
            classes.push(Vec::new());
            leader = s.relevance;
        }
        classes.last_mut().unwrap().push(s.set_key.clone());
    }
    classes
}

/// Merges the rankings of several `report.json` files produced with the same
/// configuration. Set keys that occur in more than one file are suffixed
/// with `@n`, the 1-based position of their file.
pub fn cmd_rank(score_files: &[PathBuf], delta: f64, output_dir: Option<&Path>) -> Result<RankReport> {
    if !(delta >= 0.0) {
        return Err(DrlError::Config("delta must be nonnegative".into()));
    }
    if score_files.is_empty() {
        return Err(DrlError::Config("no score files given".into()));
    }
    let mut reports = Vec::with_capacity(score_files.len());
    for path in score_files {
        let text = std::fs::read_to_string(path).map_err(|e| DrlError::io(path, e))?;
        let report: DrlReport = serde_json::from_str(&text)
            .map_err(|e| DrlError::Config(format!("{}: {e}", path.display())))?;
        reports.push(report);
    }
    let hash = reports[0].config_hash.clone();
    if let Some(other) = reports.iter().find(|r| r.config_hash != hash) {
        return Err(DrlError::ConfigHashMismatch(hash, other.config_hash.clone()));
    }

    let mut key_count: HashMap<&str, usize> = HashMap::new();
    for r in &reports {
        for s in &r.ranking {
            *key_count.entry(s.set_key.as_str()).or_default() += 1;
        }
    }
    let mut scores = Vec::new();
    let mut source: HashMap<String, PathBuf> = HashMap::new();
    for (i, (r, path)) in reports.iter().zip(score_files).enumerate() {
        for s in &r.ranking {
            let mut s = s.clone();
            if key_count[s.set_key.as_str()] > 1 {
                s.set_key = format!("{}@{}", s.set_key, i + 1);
            }
            source.insert(s.set_key.clone(), path.clone());
            scores.push(s);
        }
    }

    let ranked = rank_sets(&scores);
    let classes = equivalence_classes(&ranked, delta);
    let class_of: HashMap<&str, usize> = classes
        .iter()
        .enumerate()
        .flat_map(|(c, keys)| keys.iter().map(move |k| (k.as_str(), c)))
        .collect();
    let ranking = ranked
        .iter()
        .enumerate()
        .map(|(i, s)| RankedSet {
            rank: i + 1,
            class: class_of[s.set_key.as_str()],
            score: s.clone(),
            source: source[&s.set_key].clone(),
        })
        .collect();
    let report = RankReport {
        config_hash: hash,
        delta,
        ranking,
        classes,
    };
    if let Some(dir) = output_dir {
        write_rank_files(&report, dir)?;
    }
    Ok(report)
}

fn write_rank_files(report: &RankReport, dir: &Path) -> Result<()> {
    let dir = ensure_dir(dir)?;
    write_json(&dir.join("ranking.json"), report)?;
    let path = dir.join("ranking.csv");
    let mut w = csv_writer(&path)?;
    w.write_record(["rank", "class", "set_key", "relevance", "disparity", "coherence", "source"])?;
    for r in &report.ranking {
        w.write_record([
            r.rank.to_string(),
            r.class.to_string(),
            r.score.set_key.clone(),
            r.score.relevance.to_string(),
            r.score.disparity.to_string(),
            r.score.coherence.to_string(),
            r.source.display().to_string(),
        ])?;
    }
    w.flush().map_err(|e| DrlError::io(&path, e))
}
