//! Latent Dirichlet allocation by collapsed Gibbs sampling, and fold-in
//! projection of new documents onto the learned topics.

mod gibbs;
mod infer;
mod model;

use serde::{Deserialize, Serialize};

use crate::error::{DrlError, Result};

pub use gibbs::GibbsSampler;
pub use infer::{project, SemanticVector};
pub use model::{train, TopicModel};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LdaConfig {
    pub num_topics: usize,
    /// Symmetric document-topic Dirichlet prior.
    pub alpha: f64,
    /// Symmetric topic-word Dirichlet prior.
    pub beta: f64,
    pub train_iterations: usize,
    pub infer_iterations: usize,
    /// Training sweeps discarded before estimates are collected.
    pub burn_in: usize,
    /// Sweeps between retained samples after burn-in.
    pub thinning: usize,
    pub seed: u64,
}

impl LdaConfig {
    /// Defaults for `num_topics` topics: `alpha = 50 / K`, `beta = 0.01`,
    /// 1000 training sweeps with half burned in, 100 inference sweeps.
    pub fn with_topics(num_topics: usize) -> Self {
        LdaConfig {
            num_topics,
            alpha: 50.0 / num_topics as f64,
            beta: 0.01,
            train_iterations: 1000,
            infer_iterations: 100,
            burn_in: 500,
            thinning: 10,
            seed: 0,
        }
    }

    /// Sets the training length and resets burn-in to half of it.
    pub fn iterations(mut self, train_iterations: usize) -> Self {
        self.train_iterations = train_iterations;
        self.burn_in = train_iterations / 2;
        self
    }

    pub fn seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(DrlError::Config(m.to_string()));
        if self.num_topics < 2 {
            return bad("num_topics must be at least 2");
        }
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return bad("alpha must be positive");
        }
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return bad("beta must be positive");
        }
        if self.train_iterations == 0 || self.infer_iterations == 0 {
            return bad("iteration counts must be positive");
        }
        if self.burn_in >= self.train_iterations {
            return bad("burn_in must be smaller than train_iterations");
        }
        if self.thinning == 0 {
            return bad("thinning must be positive");
        }
        if self.num_topics > u16::MAX as usize {
            return bad("too many topics");
        }
        Ok(())
    }
}

impl Default for LdaConfig {
    fn default() -> Self {
        LdaConfig::with_topics(50)
    }
}

/// Whether the estimate is sampled after sweep `sweep` (1-based) of `total`.
/// Samples are taken every `thinning` sweeps counting back from the last one,
/// skipping the first `burn_in` sweeps, so the final state is always used.
pub(crate) fn is_sample_sweep(sweep: usize, total: usize, burn_in: usize, thinning: usize) -> bool {
    sweep > burn_in && (total - sweep).is_multiple_of(thinning)
}
