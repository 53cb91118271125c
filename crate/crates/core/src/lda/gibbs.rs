use rand::Rng;

use super::LdaConfig;
use crate::corpus::BowDocument;
use crate::error::{DrlError, Result};
use crate::rng::{rng_from_seed, DrlRng};

/// State of a collapsed Gibbs chain over a training corpus.
///
/// Count tables are kept consistent with the topic assignments after every
/// token update; [`GibbsSampler::consistency_violations`] recounts them from
/// scratch.
pub struct GibbsSampler {
    num_topics: usize,
    vocab_size: usize,
    alpha: f64,
    beta: f64,
    doc_offsets: Vec<usize>,
    words: Vec<u32>,
    assignments: Vec<u16>,
    /// `[doc * K + topic]`
    doc_topic: Vec<u32>,
    /// `[word * K + topic]`, word-major so one token's row is contiguous.
    topic_word: Vec<u32>,
    topic_total: Vec<u32>,
    /// `1 / (topic_total[t] + V beta)`, refreshed when a total changes.
    inv_denom: Vec<f64>,
    /// `1 / (n + V beta)` for every possible topic total `n`.
    reciprocals: Vec<f64>,
    /// `doc_topic + alpha` and `topic_word + beta`, refreshed with the counts.
    doc_prior: Vec<f64>,
    word_prior: Vec<f64>,
    weights: Vec<f64>,
    rng: DrlRng,
    sweeps: usize,
}

impl GibbsSampler {
    /// Assigns every token a uniformly random topic.
    pub fn new(docs: &[BowDocument], vocab_size: usize, cfg: &LdaConfig) -> Result<Self> {
        cfg.validate()?;
        let k = cfg.num_topics;
        let mut doc_offsets = Vec::with_capacity(docs.len() + 1);
        let mut words = Vec::new();
        doc_offsets.push(0);
        for doc in docs {
            for w in doc.tokens() {
                if w >= vocab_size {
                    return Err(DrlError::IndexOutOfRange {
                        index: w,
                        size: vocab_size,
                    });
                }
                words.push(w as u32);
            }
            doc_offsets.push(words.len());
        }
        if words.is_empty() {
            return Err(DrlError::EmptyCorpus);
        }

        let mut rng = rng_from_seed(cfg.seed);
        let mut assignments = Vec::with_capacity(words.len());
        let mut doc_topic = vec![0u32; docs.len() * k];
        let mut topic_word = vec![0u32; vocab_size * k];
        let mut topic_total = vec![0u32; k];
        for d in 0..docs.len() {
            for i in doc_offsets[d]..doc_offsets[d + 1] {
                let t = rng.random_range(0..k);
                assignments.push(t as u16);
                doc_topic[d * k + t] += 1;
                topic_word[words[i] as usize * k + t] += 1;
                topic_total[t] += 1;
            }
        }

        let v_beta = vocab_size as f64 * cfg.beta;
        let reciprocals: Vec<f64> = (0..=words.len())
            .map(|n| 1.0 / (n as f64 + v_beta))
            .collect();
        let inv_denom = topic_total.iter().map(|&n| reciprocals[n as usize]).collect();
        let doc_prior = doc_topic.iter().map(|&c| f64::from(c) + cfg.alpha).collect();
        let word_prior = topic_word.iter().map(|&c| f64::from(c) + cfg.beta).collect();
        Ok(GibbsSampler {
            num_topics: k,
            vocab_size,
            alpha: cfg.alpha,
            beta: cfg.beta,
            doc_offsets,
            words,
            assignments,
            doc_topic,
            topic_word,
            topic_total,
            inv_denom,
            reciprocals,
            doc_prior,
            word_prior,
            weights: vec![0.0; k],
            rng,
            sweeps: 0,
        })
    }

    pub fn num_docs(&self) -> usize {
        self.doc_offsets.len() - 1
    }

    pub fn num_tokens(&self) -> usize {
        self.words.len()
    }

    pub fn sweeps(&self) -> usize {
        self.sweeps
    }

    /// Resamples every token's topic once, in corpus order.
    pub fn sweep(&mut self) {
        let k = self.num_topics;
        let (alpha, beta) = (self.alpha, self.beta);
        let GibbsSampler {
            doc_offsets,
            words,
            assignments,
            doc_topic,
            topic_word,
            topic_total,
            inv_denom,
            reciprocals,
            doc_prior,
            word_prior,
            weights,
            rng,
            ..
        } = self;
        let weights = &mut weights[..k];
        for (d, bounds) in doc_offsets.windows(2).enumerate() {
            let doc_row = &mut doc_topic[d * k..(d + 1) * k];
            let doc_p = &mut doc_prior[d * k..(d + 1) * k];
            for i in bounds[0]..bounds[1] {
                let w = words[i] as usize * k;
                let word_row = &mut topic_word[w..w + k];
                let word_p = &mut word_prior[w..w + k];
                let old = assignments[i] as usize;
                doc_row[old] -= 1;
                word_row[old] -= 1;
                topic_total[old] -= 1;
                doc_p[old] = f64::from(doc_row[old]) + alpha;
                word_p[old] = f64::from(word_row[old]) + beta;
                inv_denom[old] = reciprocals[topic_total[old] as usize];

                let mut total = 0.0;
                for t in 0..k {
                    total += doc_p[t] * word_p[t] * inv_denom[t];
                    weights[t] = total;
                }
                let u = rng.random::<f64>() * total;
                let new = weights.iter().position(|&c| u < c).unwrap_or(k - 1);

                assignments[i] = new as u16;
                doc_row[new] += 1;
                word_row[new] += 1;
                topic_total[new] += 1;
                doc_p[new] = f64::from(doc_row[new]) + alpha;
                word_p[new] = f64::from(word_row[new]) + beta;
                inv_denom[new] = reciprocals[topic_total[new] as usize];
            }
        }
        self.sweeps += 1;
    }

    /// Smoothed topic-word estimate of the current state, `K` rows of length `V`.
    pub fn phi(&self) -> Vec<Vec<f64>> {
        let k = self.num_topics;
        let v_beta = self.vocab_size as f64 * self.beta;
        (0..k)
            .map(|t| {
                let denom = f64::from(self.topic_total[t]) + v_beta;
                (0..self.vocab_size)
                    .map(|w| (f64::from(self.topic_word[w * k + t]) + self.beta) / denom)
                    .collect()
            })
            .collect()
    }

    /// Recounts every table from the assignments and lists each disagreement.
    /// Also checks that document-topic rows sum to document lengths and
    /// topic-word columns sum to topic totals.
    pub fn consistency_violations(&self) -> Vec<String> {
        let k = self.num_topics;
        let mut problems = Vec::new();
        let mut doc_topic = vec![0u32; self.doc_topic.len()];
        let mut topic_word = vec![0u32; self.topic_word.len()];
        let mut topic_total = vec![0u32; k];
        for d in 0..self.num_docs() {
            let (start, end) = (self.doc_offsets[d], self.doc_offsets[d + 1]);
            for i in start..end {
                let t = self.assignments[i] as usize;
                doc_topic[d * k + t] += 1;
                topic_word[self.words[i] as usize * k + t] += 1;
                topic_total[t] += 1;
            }
            let row: u32 = self.doc_topic[d * k..(d + 1) * k].iter().sum();
            if row as usize != end - start {
                problems.push(format!("doc {d}: row sum {row} != length {}", end - start));
            }
        }
        for t in 0..k {
            let col: u32 = (0..self.vocab_size)
                .map(|w| self.topic_word[w * k + t])
                .sum();
            if col != self.topic_total[t] {
                problems.push(format!(
                    "topic {t}: column sum {col} != total {}",
                    self.topic_total[t]
                ));
            }
        }
        if doc_topic != self.doc_topic {
            problems.push("document-topic table disagrees with assignments".into());
        }
        if topic_word != self.topic_word {
            problems.push("topic-word table disagrees with assignments".into());
        }
        if topic_total != self.topic_total {
            problems.push("topic totals disagree with assignments".into());
        }
        problems
    }

    #[cfg(test)]
    pub(crate) fn corrupt_for_test(&mut self) {
        self.doc_topic[0] += 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeMap;

    fn corpus() -> Vec<BowDocument> {
        (0..6)
            .map(|d| {
                let counts: BTreeMap<usize, u32> =
                    [(d % 3, 3), ((d + 1) % 4, 2)].into_iter().collect();
                BowDocument::from_counts(d.to_string(), counts)
            })
            .collect()
    }

    #[test]
    fn tables_stay_consistent() {
        let cfg = LdaConfig::with_topics(3).seed(9);
        let mut s = GibbsSampler::new(&corpus(), 4, &cfg).unwrap();
        assert!(s.consistency_violations().is_empty());
        for _ in 0..50 {
            s.sweep();
            assert!(s.consistency_violations().is_empty());
        }
        assert_eq!(s.sweeps(), 50);
        let expected: u32 = corpus().iter().map(BowDocument::total_tokens).sum();
        assert_eq!(s.num_tokens(), expected as usize);
    }

    #[test]
    fn corruption_is_detected() {
        let cfg = LdaConfig::with_topics(3);
        let mut s = GibbsSampler::new(&corpus(), 4, &cfg).unwrap();
        s.corrupt_for_test();
        assert!(!s.consistency_violations().is_empty());
    }

    #[test]
    fn phi_rows_are_distributions() {
        let cfg = LdaConfig::with_topics(3);
        let mut s = GibbsSampler::new(&corpus(), 4, &cfg).unwrap();
        s.sweep();
        for row in s.phi() {
            assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            assert!(row.iter().all(|&p| p > 0.0));
        }
    }

    #[test]
    fn out_of_range_word_rejected() {
        let cfg = LdaConfig::with_topics(2);
        let docs = vec![BowDocument::from_counts("x", [(9, 1)].into_iter().collect())];
        assert!(matches!(
            GibbsSampler::new(&docs, 4, &cfg),
            Err(DrlError::IndexOutOfRange { index: 9, size: 4 })
        ));
    }

    #[test]
    fn empty_corpus_rejected() {
        let cfg = LdaConfig::with_topics(2);
        assert!(matches!(
            GibbsSampler::new(&[], 4, &cfg),
            Err(DrlError::EmptyCorpus)
        ));
    }
}
