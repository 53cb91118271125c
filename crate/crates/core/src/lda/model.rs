use std::path::Path;

use log::warn;
use serde::{Deserialize, Serialize};

use super::{is_sample_sweep, GibbsSampler, LdaConfig};
use crate::corpus::{BowDocument, Vocabulary};
use crate::error::{DrlError, Result};

const MODEL_FORMAT: &str = "drl-topic-model";
const MODEL_VERSION: u32 = 1;

/// Trained topic-word distributions together with the vocabulary they are
/// indexed by. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct TopicModel {
    config: LdaConfig,
    vocab: Vocabulary,
    phi: Vec<Vec<f64>>,
    /// `phi` transposed to `[word * K + topic]` for projection.
    phi_by_word: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    format: String,
    version: u32,
    config: LdaConfig,
    vocab_hash: String,
    vocab_size: usize,
    phi: Vec<Vec<f64>>,
}

impl TopicModel {
    pub fn new(config: LdaConfig, vocab: Vocabulary, phi: Vec<Vec<f64>>) -> Result<Self> {
        config.validate()?;
        if phi.len() != config.num_topics {
            return Err(DrlError::DimensionMismatch {
                expected: config.num_topics,
                got: phi.len(),
            });
        }
        let v = vocab.len();
        for row in &phi {
            if row.len() != v {
                return Err(DrlError::DimensionMismatch {
                    expected: v,
                    got: row.len(),
                });
            }
            let sum: f64 = row.iter().sum();
            if row.iter().any(|&p| !(p >= 0.0)) || (sum - 1.0).abs() > 1e-9 {
                return Err(DrlError::InvalidParameter(
                    "topic-word rows must be probability vectors".into(),
                ));
            }
        }
        let k = config.num_topics;
        let mut phi_by_word = vec![0.0; v * k];
        for (t, row) in phi.iter().enumerate() {
            for (w, &p) in row.iter().enumerate() {
                phi_by_word[w * k + t] = p;
            }
        }
        Ok(TopicModel {
            config,
            vocab,
            phi,
            phi_by_word,
        })
    }

    pub fn config(&self) -> &LdaConfig {
        &self.config
    }

    pub fn vocab(&self) -> &Vocabulary {
        &self.vocab
    }

    pub fn num_topics(&self) -> usize {
        self.config.num_topics
    }

    pub fn vocab_size(&self) -> usize {
        self.vocab.len()
    }

    /// Topic-word distribution of topic `k`.
    pub fn topic(&self, k: usize) -> Option<&[f64]> {
        self.phi.get(k).map(Vec::as_slice)
    }

    pub fn phi(&self) -> &[Vec<f64>] {
        &self.phi
    }

    pub(crate) fn word_row(&self, w: usize) -> &[f64] {
        let k = self.config.num_topics;
        &self.phi_by_word[w * k..(w + 1) * k]
    }

    /// The `n` heaviest terms of topic `k`, by descending weight with ties
    /// going to the lower vocabulary index. `n` is clamped to the vocabulary
    /// size.
    pub fn top_words(&self, k: usize, n: usize) -> Result<Vec<(String, f64)>> {
        let row = self.topic(k).ok_or(DrlError::IndexOutOfRange {
            index: k,
            size: self.num_topics(),
        })?;
        let mut order: Vec<usize> = (0..row.len()).collect();
        order.sort_by(|&a, &b| row[b].total_cmp(&row[a]).then(a.cmp(&b)));
        Ok(order
            .into_iter()
            .take(n)
            .map(|w| (self.vocab.terms()[w].clone(), row[w]))
            .collect())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = ModelFile {
            format: MODEL_FORMAT.into(),
            version: MODEL_VERSION,
            config: self.config.clone(),
            vocab_hash: self.vocab.content_hash(),
            vocab_size: self.vocab.len(),
            phi: self.phi.clone(),
        };
        let json = serde_json::to_string(&file)?;
        std::fs::write(path, json + "\n").map_err(|e| DrlError::io(path, e))
    }

    /// Loads a saved model, refusing it unless `vocab` is the vocabulary it
    /// was trained on.
    pub fn load(path: &Path, vocab: Vocabulary) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| DrlError::io(path, e))?;
        let file: ModelFile = serde_json::from_str(&text)?;
        if file.format != MODEL_FORMAT || file.version != MODEL_VERSION {
            return Err(DrlError::ModelFormat(format!(
                "{} v{}",
                file.format, file.version
            )));
        }
        let supplied = vocab.content_hash();
        if file.vocab_hash != supplied || file.vocab_size != vocab.len() {
            return Err(DrlError::VocabularyMismatch {
                model: file.vocab_hash,
                supplied,
            });
        }
        TopicModel::new(file.config, vocab, file.phi)
    }
}

/// Fits a topic model with one collapsed Gibbs chain.
///
/// The estimate of each `phi[k][w]` is `(n_kw + beta) / (n_k + V beta)`
/// averaged over the sampled sweeps after burn-in (see
/// [`LdaConfig::thinning`]). The result depends only on the corpus, the
/// vocabulary and `cfg` (including its seed).
pub fn train(corpus: &[BowDocument], vocab: &Vocabulary, cfg: &LdaConfig) -> Result<TopicModel> {
    cfg.validate()?;
    if corpus.is_empty() {
        return Err(DrlError::EmptyCorpus);
    }
    if vocab.len() < cfg.num_topics {
        warn!(
            "vocabulary of {} terms is smaller than {} topics",
            vocab.len(),
            cfg.num_topics
        );
    }
    let mut sampler = GibbsSampler::new(corpus, vocab.len(), cfg)?;
    let mut acc = vec![vec![0.0; vocab.len()]; cfg.num_topics];
    let mut samples = 0usize;
    for sweep in 1..=cfg.train_iterations {
        sampler.sweep();
        if is_sample_sweep(sweep, cfg.train_iterations, cfg.burn_in, cfg.thinning) {
            for (a, row) in acc.iter_mut().zip(sampler.phi()) {
                for (x, p) in a.iter_mut().zip(row) {
                    *x += p;
                }
            }
            samples += 1;
        }
    }
    let n = samples as f64;
    for row in &mut acc {
        for x in row.iter_mut() {
            *x /= n;
        }
    }
    TopicModel::new(cfg.clone(), vocab.clone(), acc)
}
