//! Relevance and coherence of document sets in topic space.
//!
//! Relevance is the mean cosine similarity between a set's topic
//! distributions and the question's. Coherence is the reciprocal of the
//! set's document disparity, the Jensen-Rényi divergence
//!
//! ```text
//! JR(p_1..p_n) = R(Σ ω_i p_i) − Σ ω_i R(p_i),   R(p) = ln(Σ p_j^a) / (1 − a)
//! ```
//!
//! which is nonnegative for Rényi orders `a` in (0, 1). Logarithms are
//! natural throughout.

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{DrlError, Result};
use crate::lda::SemanticVector;

/// Disparities at or below this are treated as zero when taking reciprocals.
pub const ZERO_DISPARITY_EPS: f64 = 1e-12;

/// Relevance values closer than this are ranked as ties.
pub const RELEVANCE_TIE_EPS: f64 = 1e-12;

const SIMPLEX_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JrParams {
    pub renyi_order: f64,
    /// Mixture weights; uniform when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<Vec<f64>>,
}

impl Default for JrParams {
    fn default() -> Self {
        JrParams {
            renyi_order: 0.5,
            weights: None,
        }
    }
}

impl JrParams {
    pub fn with_order(renyi_order: f64) -> Self {
        JrParams {
            renyi_order,
            weights: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.renyi_order > 0.0 && self.renyi_order < 1.0) {
            return Err(DrlError::InvalidParameter(format!(
                "Rényi order must lie in (0, 1), got {}",
                self.renyi_order
            )));
        }
        if let Some(w) = &self.weights {
            let sum: f64 = w.iter().sum();
            if w.iter().any(|&x| !(x >= 0.0)) || (sum - 1.0).abs() > SIMPLEX_TOL {
                return Err(DrlError::InvalidParameter(
                    "weights must be nonnegative and sum to 1".into(),
                ));
            }
        }
        Ok(())
    }
}

/// Cosine similarity `a·b / (|a| |b|)`.
pub fn cosine(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(DrlError::DimensionMismatch {
            expected: a.len(),
            got: b.len(),
        });
    }
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        return Err(DrlError::ZeroNorm);
    }
    Ok((dot / (na * nb)).clamp(-1.0, 1.0))
}

/// Mean cosine similarity between each member of `set` and `query`.
pub fn relevance(set: &[SemanticVector], query: &SemanticVector) -> Result<f64> {
    if set.is_empty() {
        return Err(DrlError::TooFew { needed: 1, got: 0 });
    }
    let mut sum = 0.0;
    for theta in set {
        sum += cosine(theta, query)?;
    }
    Ok(sum / set.len() as f64)
}

/// Rényi entropy of order `order` (natural log). Zero-probability outcomes
/// contribute nothing.
pub fn renyi_entropy(p: &[f64], order: f64) -> Result<f64> {
    if !(order > 0.0) || order == 1.0 || !order.is_finite() {
        return Err(DrlError::InvalidParameter(format!(
            "Rényi order must be positive and different from 1, got {order}"
        )));
    }
    let s: f64 = p.iter().filter(|&&x| x > 0.0).map(|&x| x.powf(order)).sum();
    Ok(s.ln() / (1.0 - order))
}

/// Jensen-Rényi divergence of `dists` under `params`.
pub fn jr_divergence<P: AsRef<[f64]>>(dists: &[P], params: &JrParams) -> Result<f64> {
    params.validate()?;
    if dists.len() < 2 {
        return Err(DrlError::TooFew {
            needed: 2,
            got: dists.len(),
        });
    }
    let dim = dists[0].as_ref().len();
    for d in dists {
        if d.as_ref().len() != dim {
            return Err(DrlError::DimensionMismatch {
                expected: dim,
                got: d.as_ref().len(),
            });
        }
    }
    let uniform;
    let weights: &[f64] = match &params.weights {
        Some(w) => {
            if w.len() != dists.len() {
                return Err(DrlError::DimensionMismatch {
                    expected: dists.len(),
                    got: w.len(),
                });
            }
            w
        }
        None => {
            uniform = vec![1.0 / dists.len() as f64; dists.len()];
            &uniform
        }
    };

    let mut mixture = vec![0.0; dim];
    let mut mean_entropy = 0.0;
    for (d, &w) in dists.iter().zip(weights) {
        let d = d.as_ref();
        for (m, &x) in mixture.iter_mut().zip(d) {
            *m += w * x;
        }
        mean_entropy += w * renyi_entropy(d, params.renyi_order)?;
    }
    Ok(renyi_entropy(&mixture, params.renyi_order)? - mean_entropy)
}

/// Document disparity: the Jensen-Rényi divergence of a set's topic
/// distributions. Needs at least two documents.
pub fn disparity(set: &[SemanticVector], params: &JrParams) -> Result<f64> {
    jr_divergence(set, params)
}

/// Reciprocal of a disparity; infinite when the disparity is numerically zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Coherence {
    Finite(f64),
    Infinite,
}

impl Coherence {
    pub fn from_disparity(dd: f64) -> Self {
        if dd <= ZERO_DISPARITY_EPS {
            Coherence::Infinite
        } else {
            Coherence::Finite(1.0 / dd)
        }
    }

    pub fn is_infinite(&self) -> bool {
        matches!(self, Coherence::Infinite)
    }

    pub fn value(&self) -> f64 {
        match *self {
            Coherence::Finite(v) => v,
            Coherence::Infinite => f64::INFINITY,
        }
    }
}

impl fmt::Display for Coherence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Coherence::Finite(v) => write!(f, "{v}"),
            Coherence::Infinite => f.write_str("inf"),
        }
    }
}

// JSON has no infinity; the flag is written as the string "inf".
impl Serialize for Coherence {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match *self {
            Coherence::Finite(v) => s.serialize_f64(v),
            Coherence::Infinite => s.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for Coherence {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Num(f64),
            Str(String),
        }
        match Repr::deserialize(d)? {
            Repr::Num(v) => Ok(Coherence::Finite(v)),
            Repr::Str(s) if s == "inf" => Ok(Coherence::Infinite),
            Repr::Str(s) => Err(serde::de::Error::custom(format!(
                "invalid coherence `{s}`"
            ))),
        }
    }
}

pub fn coherence(set: &[SemanticVector], params: &JrParams) -> Result<Coherence> {
    Ok(Coherence::from_disparity(disparity(set, params)?))
}

/// δ-informational equivalence of two relevance scores; `delta = 0` is
/// strict equality.
pub fn informationally_equivalent(s1: f64, s2: f64, delta: f64) -> bool {
    (s1 - s2).abs() <= delta
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SetScore {
    pub set_key: String,
    pub relevance: f64,
    pub disparity: f64,
    pub coherence: Coherence,
    pub n_docs_scored: usize,
    pub n_docs_skipped: usize,
}

impl SetScore {
    pub fn new(
        set_key: impl Into<String>,
        relevance: f64,
        disparity: f64,
        n_docs_scored: usize,
        n_docs_skipped: usize,
    ) -> Self {
        SetScore {
            set_key: set_key.into(),
            relevance,
            disparity,
            coherence: Coherence::from_disparity(disparity),
            n_docs_scored,
            n_docs_skipped,
        }
    }
}

/// Orders sets from most to least ready: descending relevance, then
/// ascending disparity, then set key.
///
/// Relevance values within [`RELEVANCE_TIE_EPS`] of their neighbour in the
/// descending order are chained into one tie group, so the result is a
/// genuine total order even though "within epsilon" is not transitive.
pub fn rank_sets(scores: &[SetScore]) -> Vec<SetScore> {
    let mut sorted = scores.to_vec();
    sorted.sort_by(|a, b| {
        b.relevance
            .total_cmp(&a.relevance)
            .then_with(|| tie_break(a, b))
    });
    let mut out = Vec::with_capacity(sorted.len());
    let mut group: Vec<SetScore> = Vec::new();
    for s in sorted {
        if let Some(last) = group.last() {
            if last.relevance - s.relevance > RELEVANCE_TIE_EPS {
                group.sort_by(tie_break);
                out.append(&mut group);
            }
        }
        group.push(s);
    }
    group.sort_by(tie_break);
    out.append(&mut group);
    out
}

fn tie_break(a: &SetScore, b: &SetScore) -> Ordering {
    a.disparity
        .total_cmp(&b.disparity)
        .then_with(|| a.set_key.cmp(&b.set_key))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sv(v: &[f64]) -> SemanticVector {
        SemanticVector::new(v.to_vec()).unwrap()
    }

    fn one_hot(n: usize, i: usize) -> Vec<f64> {
        (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect()
    }

    fn score(key: &str, rel: f64, dd: f64) -> SetScore {
        SetScore::new(key, rel, dd, 10, 0)
    }

    #[test]
    fn cosine_examples() {
        assert!((cosine(&[0.2, 0.8], &[0.2, 0.8]).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(cosine(&[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0]).unwrap(), 0.0);
        let c = cosine(&[0.5, 0.5], &[1.0, 0.0]).unwrap();
        assert!((c - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-15);
    }

    #[test]
    fn cosine_guards() {
        assert!(matches!(cosine(&[0.0, 0.0], &[1.0, 0.0]), Err(DrlError::ZeroNorm)));
        assert!(cosine(&[1.0], &[1.0, 0.0]).is_err());
    }

    #[test]
    fn relevance_examples() {
        let q = sv(&[0.3, 0.7]);
        assert!((relevance(&[q.clone(), q.clone()], &q).unwrap() - 1.0).abs() < 1e-15);
        let q = sv(&[1.0, 0.0]);
        let r = relevance(&[sv(&[0.0, 1.0]), sv(&[1.0, 0.0])], &q).unwrap();
        assert_eq!(r, 0.5);
        assert!(relevance(&[], &q).is_err());
    }

    #[test]
    fn renyi_examples() {
        for order in [0.1, 0.5, 0.9, 2.0] {
            for k in [1usize, 2, 7] {
                let h = renyi_entropy(&vec![1.0 / k as f64; k], order).unwrap();
                assert!((h - (k as f64).ln()).abs() < 1e-12);
            }
            assert_eq!(renyi_entropy(&[0.0, 1.0, 0.0], order).unwrap(), 0.0);
        }
        // 2 ln(sqrt(0.75) + sqrt(0.25)), evaluated with 50-digit arithmetic
        let h = renyi_entropy(&[0.75, 0.25], 0.5).unwrap();
        assert!((h - 0.623_810_716_364_871_4).abs() < 1e-14, "{h}");
    }

    #[test]
    fn renyi_rejects_bad_orders() {
        assert!(renyi_entropy(&[1.0], 1.0).is_err());
        assert!(renyi_entropy(&[1.0], 0.0).is_err());
        assert!(renyi_entropy(&[1.0], -0.5).is_err());
    }

    #[test]
    fn jr_examples() {
        let p = JrParams::default();
        let same = vec![vec![0.2, 0.3, 0.5]; 4];
        assert!(jr_divergence(&same, &p).unwrap().abs() < 1e-12);
        let opposite = [vec![1.0, 0.0], vec![0.0, 1.0]];
        assert!((jr_divergence(&opposite, &p).unwrap() - 2f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn jr_errors() {
        let p = JrParams::default();
        assert!(matches!(
            jr_divergence(&[vec![1.0, 0.0]], &p),
            Err(DrlError::TooFew { needed: 2, got: 1 })
        ));
        assert!(matches!(
            jr_divergence(&[vec![1.0, 0.0], vec![1.0]], &p),
            Err(DrlError::DimensionMismatch { .. })
        ));
        assert!(jr_divergence(&[vec![1.0], vec![1.0]], &JrParams::with_order(1.0)).is_err());
        let bad_weights = JrParams {
            renyi_order: 0.5,
            weights: Some(vec![0.9, 0.2]),
        };
        assert!(jr_divergence(&[vec![1.0], vec![1.0]], &bad_weights).is_err());
    }

    #[test]
    fn disparity_of_one_hots_is_ln_k() {
        for k in 2..8 {
            let set: Vec<_> = (0..k).map(|i| sv(&one_hot(k, i))).collect();
            let dd = disparity(&set, &JrParams::default()).unwrap();
            assert!((dd - (k as f64).ln()).abs() < 1e-12);
        }
    }

    #[test]
    fn disparity_needs_two_documents() {
        assert!(disparity(&[sv(&[1.0, 0.0])], &JrParams::default()).is_err());
    }

    #[test]
    fn coherence_examples() {
        assert_eq!(Coherence::from_disparity(0.5), Coherence::Finite(2.0));
        let same = vec![sv(&[0.4, 0.6]); 3];
        assert!(coherence(&same, &JrParams::default()).unwrap().is_infinite());
        let opposite = [sv(&[1.0, 0.0]), sv(&[0.0, 1.0])];
        let c = coherence(&opposite, &JrParams::default()).unwrap();
        assert!((c.value() - 1.0 / 2f64.ln()).abs() < 1e-12);
        assert!((c.value() - std::f64::consts::LOG2_E).abs() < 1e-12);
    }

    #[test]
    fn coherence_flag_survives_json() {
        let s = SetScore::new("x", 0.9, 0.0, 3, 0);
        let json = serde_json::to_string(&s).unwrap();
        assert!(json.contains("\"coherence\":\"inf\""));
        let back: SetScore = serde_json::from_str(&json).unwrap();
        assert!(back.coherence.is_infinite());
        let f = SetScore::new("y", 0.9, 0.25, 3, 0);
        let back: SetScore = serde_json::from_str(&serde_json::to_string(&f).unwrap()).unwrap();
        assert_eq!(back.coherence, Coherence::Finite(4.0));
    }

    #[test]
    fn equivalence_examples() {
        assert!(informationally_equivalent(0.4, 0.4, 0.0));
        assert!(!informationally_equivalent(0.4, 0.45, 0.04));
        assert!(informationally_equivalent(0.4, 0.45, 0.05));
    }

    #[test]
    fn ranking_examples() {
        let r = rank_sets(&[score("a", 0.3, 0.1), score("b", 0.5, 0.1), score("c", 0.4, 0.1)]);
        let keys: Vec<_> = r.iter().map(|s| s.set_key.as_str()).collect();
        assert_eq!(keys, ["b", "c", "a"]);

        let r = rank_sets(&[score("a", 0.5, 0.9), score("b", 0.5, 0.2)]);
        assert_eq!(r[0].set_key, "b");

        let r = rank_sets(&[score("z", 0.5, 0.2), score("m", 0.5 + 1e-13, 0.2)]);
        let keys: Vec<_> = r.iter().map(|s| s.set_key.as_str()).collect();
        assert_eq!(keys, ["m", "z"]);
    }

    fn simplex(dim: usize) -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(0.0f64..1.0, dim).prop_filter_map("zero mass", |v| {
            let s: f64 = v.iter().sum();
            (s > 1e-6).then(|| v.iter().map(|x| x / s).collect())
        })
    }

    proptest! {
        #[test]
        fn cosine_range_and_scale(a in simplex(6), b in simplex(6), c in 0.01f64..100.0) {
            let x = cosine(&a, &b).unwrap();
            prop_assert!((0.0..=1.0).contains(&x));
            prop_assert!((cosine(&a, &a).unwrap() - 1.0).abs() < 1e-12);
            let scaled: Vec<f64> = a.iter().map(|v| v * c).collect();
            prop_assert!((cosine(&scaled, &b).unwrap() - x).abs() < 1e-12);
        }

        #[test]
        fn jr_is_permutation_invariant(
            dists in prop::collection::vec(simplex(4), 2..6),
            raw_w in prop::collection::vec(0.01f64..1.0, 6),
            rot in 0usize..6,
        ) {
            let n = dists.len();
            let s: f64 = raw_w[..n].iter().sum();
            let w: Vec<f64> = raw_w[..n].iter().map(|x| x / s).collect();
            let p = JrParams { renyi_order: 0.5, weights: Some(w.clone()) };
            let base = jr_divergence(&dists, &p).unwrap();
            let mut d2 = dists.clone();
            let mut w2 = w.clone();
            d2.rotate_left(rot % n);
            w2.rotate_left(rot % n);
            d2.reverse();
            w2.reverse();
            let p2 = JrParams { renyi_order: 0.5, weights: Some(w2) };
            prop_assert!((jr_divergence(&d2, &p2).unwrap() - base).abs() < 1e-12);
        }

        #[test]
        fn ranking_is_sorted_and_complete(
            rels in prop::collection::vec((0.0f64..1.0, 0.0f64..2.0), 1..20)
        ) {
            let scores: Vec<_> = rels
                .iter()
                .enumerate()
                .map(|(i, &(r, d))| score(&format!("s{i:02}"), r, d))
                .collect();
            let ranked = rank_sets(&scores);
            prop_assert_eq!(ranked.len(), scores.len());
            for pair in ranked.windows(2) {
                let (a, b) = (&pair[0], &pair[1]);
                prop_assert!(a.relevance >= b.relevance - RELEVANCE_TIE_EPS);
            }
            // ranking a permutation of the input gives the same order
            let mut rev = scores.clone();
            rev.reverse();
            prop_assert_eq!(rank_sets(&rev), ranked);
        }
    }
}
