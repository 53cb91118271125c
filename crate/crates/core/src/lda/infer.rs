use std::ops::Deref;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{is_sample_sweep, TopicModel};
use crate::corpus::BowDocument;
use crate::error::{DrlError, Result};
use crate::rng::rng_from_seed;

/// A point on the topic simplex: a document's distribution over topics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SemanticVector(Vec<f64>);

impl SemanticVector {
    pub fn new(theta: Vec<f64>) -> Result<Self> {
        if theta.is_empty() {
            return Err(DrlError::InvalidParameter("empty topic distribution".into()));
        }
        let sum: f64 = theta.iter().sum();
        if theta.iter().any(|&p| !(p >= 0.0)) || (sum - 1.0).abs() > 1e-9 {
            return Err(DrlError::InvalidParameter(format!(
                "not a probability vector (sum {sum})"
            )));
        }
        Ok(SemanticVector(theta))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn distance(&self, other: &SemanticVector) -> f64 {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }
}

impl Deref for SemanticVector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl AsRef<[f64]> for SemanticVector {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

/// Fold-in projection of `doc` onto the model's topics.
///
/// Topic-word distributions stay fixed; only the document's token
/// assignments are resampled, with `p(z = k) ∝ (n_dk + alpha) * phi[k][w]`.
/// The returned `theta[k] = (n_dk + alpha) / (N + K alpha)` is averaged over
/// the sampled sweeps after the first half of `infer_iterations`. The result
/// depends only on the model, the document and `seed`.
pub fn project(model: &TopicModel, doc: &BowDocument, seed: u64) -> Result<SemanticVector> {
    let cfg = model.config();
    let k = cfg.num_topics;
    let v = model.vocab_size();
    let words: Vec<usize> = doc.tokens().collect();
    if let Some(&w) = words.iter().find(|&&w| w >= v) {
        return Err(DrlError::IndexOutOfRange { index: w, size: v });
    }
    if words.is_empty() {
        return Err(DrlError::Unprojectable(doc.id.clone()));
    }

    let mut rng = rng_from_seed(seed);
    let mut z: Vec<usize> = words.iter().map(|_| rng.random_range(0..k)).collect();
    let mut counts = vec![0u32; k];
    for &t in &z {
        counts[t] += 1;
    }

    let iterations = cfg.infer_iterations;
    let burn_in = iterations / 2;
    let denom = words.len() as f64 + k as f64 * cfg.alpha;
    let mut weights = vec![0.0; k];
    let mut theta = vec![0.0; k];
    let mut samples = 0usize;
    for sweep in 1..=iterations {
        for (i, &w) in words.iter().enumerate() {
            counts[z[i]] -= 1;
            let row = model.word_row(w);
            let mut total = 0.0;
            for t in 0..k {
                total += (f64::from(counts[t]) + cfg.alpha) * row[t];
                weights[t] = total;
            }
            let u = rng.random::<f64>() * total;
            let new = weights.iter().position(|&c| u < c).unwrap_or(k - 1);
            z[i] = new;
            counts[new] += 1;
        }
        if is_sample_sweep(sweep, iterations, burn_in, cfg.thinning) {
            for (acc, &c) in theta.iter_mut().zip(&counts) {
                *acc += (f64::from(c) + cfg.alpha) / denom;
            }
            samples += 1;
        }
    }
    let n = samples as f64;
    theta.iter_mut().for_each(|x| *x /= n);
    Ok(SemanticVector(theta))
}
