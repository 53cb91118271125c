//! Stability of the query projection and of relevance under small edits of
//! the query.
//!
//! For a query `q` and a perturbed query `qp` (both bags of words):
//!
//! ```text
//! s1 = |g(q) − g(qp)| |q| / (|q − qp| |g(q)|)
//! s2 = |Sim(X, q) − Sim(X, qp)| |q| / (|q − qp| |Sim(X, q)|)
//! ```
//!
//! with Euclidean norms, `g` the topic projection and `Sim` the relevance of
//! set `X`. Values below 1 mean the relative change in the output is smaller
//! than the relative change in the query.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{BowDocument, DocumentSet};
use crate::error::{DrlError, Result};
use crate::lda::{project, SemanticVector, TopicModel};
use crate::metrics::relevance;
use crate::rng::{derive_seed, stable_hash, QUERY_STREAM};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PerturbationKind {
    Repetition,
    Replacement,
    Deletion,
}

/// Which query token(s) a perturbation acts on.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Target {
    /// Zero-based token position.
    Position(usize),
    /// First occurrence of this term.
    Term(String),
    /// First occurrence of this contiguous run of terms.
    Span(Vec<String>),
    /// Replace the contiguous run `from` (at `position`, or its first
    /// occurrence) with `to`.
    Replace {
        from: Vec<String>,
        to: Vec<String>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        position: Option<usize>,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Perturbation {
    pub label: String,
    pub kind: PerturbationKind,
    pub position_or_term: Target,
}

impl Perturbation {
    pub fn repetition(label: &str, target: Target) -> Self {
        Perturbation {
            label: label.into(),
            kind: PerturbationKind::Repetition,
            position_or_term: target,
        }
    }

    pub fn deletion(label: &str, target: Target) -> Self {
        Perturbation {
            label: label.into(),
            kind: PerturbationKind::Deletion,
            position_or_term: target,
        }
    }

    pub fn replacement(label: &str, from: &[&str], to: &[&str]) -> Self {
        Perturbation {
            label: label.into(),
            kind: PerturbationKind::Replacement,
            position_or_term: Target::Replace {
                from: from.iter().map(|s| s.to_string()).collect(),
                to: to.iter().map(|s| s.to_string()).collect(),
                position: None,
            },
        }
    }

    fn invalid(&self, reason: impl Into<String>) -> DrlError {
        DrlError::InvalidPerturbation {
            label: self.label.clone(),
            reason: reason.into(),
        }
    }
}

/// Start and length of the tokens a repetition or deletion acts on.
fn locate(tokens: &[String], target: &Target, p: &Perturbation) -> Result<(usize, usize)> {
    match target {
        Target::Position(i) if *i < tokens.len() => Ok((*i, 1)),
        Target::Position(i) => Err(p.invalid(format!(
            "position {i} out of range for {} tokens",
            tokens.len()
        ))),
        Target::Term(t) => {
            let t = t.to_lowercase();
            tokens
                .iter()
                .position(|x| *x == t)
                .map(|i| (i, 1))
                .ok_or_else(|| p.invalid(format!("term `{t}` not in query")))
        }
        Target::Span(run) if run.is_empty() => Err(p.invalid("empty span")),
        Target::Span(run) => {
            let run: Vec<String> = run.iter().map(|s| s.to_lowercase()).collect();
            (0..tokens.len())
                .find(|&i| tokens.get(i..i + run.len()) == Some(&run[..]))
                .map(|i| (i, run.len()))
                .ok_or_else(|| p.invalid(format!("`{}` not in query", run.join(" "))))
        }
        Target::Replace { .. } => Err(p.invalid("replacement target on a non-replacement")),
    }
}

/// Applies one perturbation to a token list.
pub fn perturb_query(tokens: &[String], p: &Perturbation) -> Result<Vec<String>> {
    let mut out = tokens.to_vec();
    match p.kind {
        PerturbationKind::Repetition => {
            let (i, n) = locate(tokens, &p.position_or_term, p)?;
            out.splice(i..i, tokens[i..i + n].iter().cloned());
        }
        PerturbationKind::Deletion => {
            let (i, n) = locate(tokens, &p.position_or_term, p)?;
            out.drain(i..i + n);
        }
        PerturbationKind::Replacement => {
            let Target::Replace { from, to, position } = &p.position_or_term else {
                return Err(p.invalid("replacement needs a {from, to} target"));
            };
            let from: Vec<String> = from.iter().map(|s| s.to_lowercase()).collect();
            let to: Vec<String> = to.iter().map(|s| s.to_lowercase()).collect();
            if from.is_empty() {
                return Err(p.invalid("replacement `from` is empty"));
            }
            let matches_at = |i: usize| tokens.get(i..i + from.len()) == Some(&from[..]);
            let start = match position {
                Some(i) if matches_at(*i) => *i,
                Some(i) => {
                    return Err(p.invalid(format!("`{}` not found at {i}", from.join(" "))))
                }
                None => (0..tokens.len())
                    .find(|&i| matches_at(i))
                    .ok_or_else(|| p.invalid(format!("`{}` not in query", from.join(" "))))?,
            };
            out.splice(start..start + from.len(), to);
        }
    }
    if out.is_empty() {
        return Err(p.invalid("perturbed query is empty"));
    }
    Ok(out)
}

/// `s1` from already projected queries.
pub fn s1_from_projections(
    q: &BowDocument,
    qp: &BowDocument,
    theta_q: &SemanticVector,
    theta_qp: &SemanticVector,
) -> Result<f64> {
    let word = q.distance(qp);
    if word == 0.0 {
        return Err(DrlError::ZeroPerturbation);
    }
    Ok(theta_q.distance(theta_qp) * q.norm() / (word * theta_q.norm()))
}

/// Relative change of the projection per relative change of the query.
/// Both queries are projected with the same `seed`.
pub fn s1_quotient(model: &TopicModel, q: &BowDocument, qp: &BowDocument, seed: u64) -> Result<f64> {
    if q.distance(qp) == 0.0 {
        return Err(DrlError::ZeroPerturbation);
    }
    let theta_q = project(model, q, seed)?;
    let theta_qp = project(model, qp, seed)?;
    s1_from_projections(q, qp, &theta_q, &theta_qp)
}

/// Relative change of a relevance score per relative change of the query.
pub fn s2_quotient(sim: f64, sim_p: f64, q: &BowDocument, qp: &BowDocument) -> Result<f64> {
    let word = q.distance(qp);
    if word == 0.0 {
        return Err(DrlError::ZeroPerturbation);
    }
    if sim == 0.0 {
        return Err(DrlError::ZeroRelevance);
    }
    Ok((sim - sim_p).abs() * q.norm() / (word * sim.abs()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensitivityResult {
    pub label: String,
    pub kind: PerturbationKind,
    pub perturbed_tokens: Vec<String>,
    /// Perturbed-query tokens missing from the vocabulary (dropped from the
    /// bag of words).
    pub oov_terms: Vec<String>,
    pub word_space_distance: f64,
    /// Mean over runs.
    pub semantic_distance: f64,
    /// Mean over runs.
    pub s1: f64,
    pub s1_median: f64,
    pub s1_runs: Vec<f64>,
    /// Mean over runs, per set.
    pub s2_per_set: BTreeMap<String, f64>,
    pub s2_median_per_set: BTreeMap<String, f64>,
    pub s2_runs_per_set: BTreeMap<String, Vec<f64>>,
}

/// A perturbation that could not be evaluated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensitivityFailure {
    pub label: String,
    pub error: String,
}

pub type SensitivityOutcome = std::result::Result<SensitivityResult, SensitivityFailure>;

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

pub fn median(xs: &[f64]) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

struct RunProjections {
    theta_q: SemanticVector,
    sets: Vec<(String, Vec<SemanticVector>)>,
    query_seed: u64,
}

fn project_run(
    model: &TopicModel,
    q: &BowDocument,
    sets: &[DocumentSet],
    run_seed: u64,
) -> Result<RunProjections> {
    let query_seed = derive_seed(run_seed, QUERY_STREAM);
    let theta_q = project(model, q, query_seed)?;
    let sets = sets
        .iter()
        .map(|set| {
            let thetas = set
                .docs
                .iter()
                .filter_map(|d| project(model, d, derive_seed(run_seed, stable_hash(&d.id))).ok())
                .collect();
            (set.key.clone(), thetas)
        })
        .collect();
    Ok(RunProjections {
        theta_q,
        sets,
        query_seed,
    })
}

/// Evaluates every perturbation of `query_tokens` against `model`.
///
/// Run `r` projects the query, each perturbed query and every set document
/// with seeds derived from `(master_seed, r)`; the base and perturbed query
/// share a seed within a run. Results keep the order of `perturbations`, and
/// a perturbation that cannot be evaluated is reported as a failure without
/// affecting the others. Sets with no projectable document get no `s2`.
pub fn sensitivity_report(
    model: &TopicModel,
    query_tokens: &[String],
    perturbations: &[Perturbation],
    sets: &[DocumentSet],
    runs: usize,
    master_seed: u64,
) -> Result<Vec<SensitivityOutcome>> {
    if runs == 0 {
        return Err(DrlError::InvalidParameter("runs must be at least 1".into()));
    }
    if perturbations.is_empty() {
        return Ok(Vec::new());
    }
    let vocab = model.vocab();
    let (q, _) = vocab.bow_from_tokens("query", query_tokens);
    let projections: Vec<RunProjections> = (0..runs as u64)
        .into_par_iter()
        .map(|r| project_run(model, &q, sets, derive_seed(master_seed, r)))
        .collect::<Result<_>>()?;

    let base_sims: Vec<Vec<Option<f64>>> = projections
        .iter()
        .map(|run| {
            run.sets
                .iter()
                .map(|(_, thetas)| relevance(thetas, &run.theta_q).ok())
                .collect()
        })
        .collect();

    let outcomes = perturbations
        .par_iter()
        .map(|p| {
            evaluate(model, &q, query_tokens, p, &projections, &base_sims).map_err(|e| {
                SensitivityFailure {
                    label: p.label.clone(),
                    error: e.to_string(),
                }
            })
        })
        .collect();
    Ok(outcomes)
}

fn evaluate(
    model: &TopicModel,
    q: &BowDocument,
    query_tokens: &[String],
    p: &Perturbation,
    projections: &[RunProjections],
    base_sims: &[Vec<Option<f64>>],
) -> Result<SensitivityResult> {
    let tokens = perturb_query(query_tokens, p)?;
    let (qp, oov_terms) = model.vocab().bow_from_tokens(p.label.clone(), &tokens);
    let word = q.distance(&qp);
    if word == 0.0 {
        return Err(DrlError::ZeroPerturbation);
    }

    let mut s1_runs = Vec::with_capacity(projections.len());
    let mut semantic = Vec::with_capacity(projections.len());
    let mut s2_runs: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    for (run, sims) in projections.iter().zip(base_sims) {
        let theta_qp = project(model, &qp, run.query_seed)?;
        semantic.push(run.theta_q.distance(&theta_qp));
        s1_runs.push(s1_from_projections(q, &qp, &run.theta_q, &theta_qp)?);
        for ((key, thetas), sim) in run.sets.iter().zip(sims) {
            let Some(sim) = *sim else { continue };
            let sim_p = relevance(thetas, &theta_qp)?;
            if let Ok(s2) = s2_quotient(sim, sim_p, q, &qp) {
                s2_runs.entry(key.clone()).or_default().push(s2);
            }
        }
    }

    Ok(SensitivityResult {
        label: p.label.clone(),
        kind: p.kind,
        perturbed_tokens: tokens,
        oov_terms,
        word_space_distance: word,
        semantic_distance: mean(&semantic),
        s1: mean(&s1_runs),
        s1_median: median(&s1_runs),
        s1_runs,
        s2_per_set: s2_runs.iter().map(|(k, v)| (k.clone(), mean(v))).collect(),
        s2_median_per_set: s2_runs.iter().map(|(k, v)| (k.clone(), median(v))).collect(),
        s2_runs_per_set: s2_runs,
    })
}
