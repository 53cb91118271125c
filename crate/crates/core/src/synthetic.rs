//! Planted-topic corpora with known ground truth.
//!
//! The vocabulary holds `K` equal blocks of topic words followed by an
//! optional block of shared words. Topic `k` puts `own_mass` of its
//! probability uniformly on block `k`, `shared_mass` uniformly on the shared
//! words and the rest uniformly over the other topics' words. Topic words
//! are named `t{k}w{j:02}` (word `j` of block `k`) and shared words
//! `gw{j:02}`, so the planted origin of any token can be read off its text.

use std::io::Write;
use std::path::Path;

use rand::Rng;
use rand_distr::{Distribution, Gamma};

use crate::corpus::{BowDocument, RawDocument, Vocabulary};
use crate::error::{DrlError, Result};
use crate::rng::{rng_from_seed, DrlRng};
use crate::sensitivity::{Perturbation, Target};

#[derive(Debug, Clone)]
pub struct PlantedTopics {
    num_topics: usize,
    words_per_topic: usize,
    shared_words: usize,
    phi: Vec<Vec<f64>>,
}

/// How a document's topic proportions are drawn.
#[derive(Debug, Clone, Copy)]
pub enum TopicMix {
    /// `weight` on one topic, the remainder spread evenly over the others.
    Dominant { topic: usize, weight: f64 },
    /// Symmetric Dirichlet draw.
    Dirichlet(f64),
}

impl PlantedTopics {
    /// Block topics with no shared words.
    pub fn new(num_topics: usize, vocab_size: usize, own_mass: f64) -> Self {
        Self::with_shared(num_topics, vocab_size, 0, own_mass, 0.0)
    }

    pub fn with_shared(
        num_topics: usize,
        vocab_size: usize,
        shared_words: usize,
        own_mass: f64,
        shared_mass: f64,
    ) -> Self {
        assert!(num_topics >= 2 && shared_words < vocab_size);
        assert!((vocab_size - shared_words).is_multiple_of(num_topics));
        assert!(shared_words > 0 || shared_mass == 0.0);
        assert!(own_mass + shared_mass <= 1.0);
        let words_per_topic = (vocab_size - shared_words) / num_topics;
        let topic_words = vocab_size - shared_words;
        let own = own_mass / words_per_topic as f64;
        let other = (1.0 - own_mass - shared_mass) / (topic_words - words_per_topic) as f64;
        let shared = if shared_words > 0 {
            shared_mass / shared_words as f64
        } else {
            0.0
        };
        let phi = (0..num_topics)
            .map(|k| {
                (0..vocab_size)
                    .map(|w| match w {
                        w if w >= topic_words => shared,
                        w if w / words_per_topic == k => own,
                        _ => other,
                    })
                    .collect()
            })
            .collect();
        PlantedTopics {
            num_topics,
            words_per_topic,
            shared_words,
            phi,
        }
    }

    pub fn num_topics(&self) -> usize {
        self.num_topics
    }

    pub fn vocab_size(&self) -> usize {
        self.num_topics * self.words_per_topic + self.shared_words
    }

    pub fn phi(&self) -> &[Vec<f64>] {
        &self.phi
    }

    pub fn term(&self, topic: usize, j: usize) -> String {
        format!("t{topic}w{j:02}")
    }

    pub fn shared_term(&self, j: usize) -> String {
        format!("gw{j:02}")
    }

    /// Topic whose block contains word index `w`; `None` for shared words.
    pub fn block_of(&self, w: usize) -> Option<usize> {
        let b = w / self.words_per_topic;
        (b < self.num_topics).then_some(b)
    }

    /// Name of word index `w`.
    pub fn term_of(&self, w: usize) -> String {
        match self.block_of(w) {
            Some(k) => self.term(k, w % self.words_per_topic),
            None => self.shared_term(w - self.num_topics * self.words_per_topic),
        }
    }

    /// Vocabulary whose index `w` is the term of word `w`.
    pub fn vocabulary(&self) -> Vocabulary {
        Vocabulary::from_entries((0..self.vocab_size()).map(|w| (self.term_of(w), 1)))
            .expect("planted terms are unique")
    }

    pub fn draw_theta(&self, mix: TopicMix, rng: &mut DrlRng) -> Vec<f64> {
        let k = self.num_topics;
        match mix {
            TopicMix::Dominant { topic, weight } => {
                let rest = (1.0 - weight) / (k - 1) as f64;
                (0..k).map(|t| if t == topic { weight } else { rest }).collect()
            }
            TopicMix::Dirichlet(a) => {
                let gamma = Gamma::new(a, 1.0).expect("positive shape");
                let draws: Vec<f64> = (0..k).map(|_| gamma.sample(rng).max(1e-300)).collect();
                let s: f64 = draws.iter().sum();
                draws.into_iter().map(|x| x / s).collect()
            }
        }
    }

    /// Word indices of one document of `len` tokens.
    pub fn sample_words(&self, theta: &[f64], len: usize, rng: &mut DrlRng) -> Vec<usize> {
        (0..len)
            .map(|_| {
                let topic = categorical(theta, rng);
                categorical(&self.phi[topic], rng)
            })
            .collect()
    }
}

fn categorical(p: &[f64], rng: &mut DrlRng) -> usize {
    let u = rng.random::<f64>() * p.iter().sum::<f64>();
    let mut acc = 0.0;
    for (i, &x) in p.iter().enumerate() {
        acc += x;
        if u < acc {
            return i;
        }
    }
    p.len() - 1
}

/// Bag-of-words corpus drawn straight from the planted model.
pub fn sample_bow_corpus(
    topics: &PlantedTopics,
    num_docs: usize,
    doc_len: usize,
    mix: TopicMix,
    seed: u64,
) -> (Vec<BowDocument>, Vec<Vec<f64>>) {
    let mut rng = rng_from_seed(seed);
    let mut docs = Vec::with_capacity(num_docs);
    let mut thetas = Vec::with_capacity(num_docs);
    for d in 0..num_docs {
        let theta = topics.draw_theta(mix, &mut rng);
        let mut counts = std::collections::BTreeMap::new();
        for w in topics.sample_words(&theta, doc_len, &mut rng) {
            *counts.entry(w).or_insert(0u32) += 1;
        }
        docs.push(BowDocument::from_counts(format!("d{d:04}"), counts));
        thetas.push(theta);
    }
    (docs, thetas)
}

/// The three-set fixture that mirrors a day-by-day readiness study.
///
/// * set `A`: documents about the query's target topic,
/// * set `B`: half about the target topic, half about an unrelated topic,
/// * set `C`: documents about the unrelated topic only.
///
/// Every document gives part of its mass to one background topic (neither
/// target nor unrelated), chosen at random, so that all topics have enough
/// support to be learned. Documents about the target topic are planted more
/// concentrated than documents about the unrelated one, with less of this
/// background (one central event against scattered chatter).
///
/// The query is one keyword of the target topic followed by shared words,
/// which every topic emits equally: only the keyword says what the query is
/// about.
#[derive(Debug, Clone)]
pub struct ReadinessFixture {
    pub topics: PlantedTopics,
    pub docs: Vec<RawDocument>,
    pub query: String,
    pub target_topic: usize,
    pub unrelated_topic: usize,
    pub keyword: String,
}

#[derive(Debug, Clone, Copy)]
pub struct FixtureShape {
    pub num_topics: usize,
    pub vocab_size: usize,
    pub shared_words: usize,
    pub docs_per_set: usize,
    pub min_len: usize,
    pub max_len: usize,
    pub own_mass: f64,
    pub shared_mass: f64,
    /// Dominant and background weight of documents about the target topic.
    pub target_weights: (f64, f64),
    /// Dominant and background weight of documents about the unrelated topic.
    pub unrelated_weights: (f64, f64),
    /// Shared words in the query after the keyword.
    pub query_shared: usize,
}

impl Default for FixtureShape {
    fn default() -> Self {
        FixtureShape {
            num_topics: 5,
            vocab_size: 100,
            shared_words: 10,
            docs_per_set: 200,
            min_len: 16,
            max_len: 24,
            own_mass: 0.8,
            shared_mass: 0.15,
            target_weights: (0.75, 0.1),
            unrelated_weights: (0.6, 0.25),
            query_shared: 6,
        }
    }
}

impl ReadinessFixture {
    pub fn generate(shape: FixtureShape, seed: u64) -> Self {
        let topics = PlantedTopics::with_shared(
            shape.num_topics,
            shape.vocab_size,
            shape.shared_words,
            shape.own_mass,
            shape.shared_mass,
        );
        let (target, unrelated) = (0, 2);
        let background: Vec<usize> = (0..shape.num_topics)
            .filter(|&t| t != target && t != unrelated)
            .collect();
        let mut rng = rng_from_seed(seed);
        let mut docs = Vec::with_capacity(3 * shape.docs_per_set);
        let mut emit = |key: &str, i: usize, topic: usize, rng: &mut DrlRng| {
            let (weight, secondary) = if topic == target {
                shape.target_weights
            } else {
                shape.unrelated_weights
            };
            let second = background[rng.random_range(0..background.len())];
            let rest = (1.0 - weight - secondary) / (shape.num_topics - 2) as f64;
            let theta: Vec<f64> = (0..shape.num_topics)
                .map(|t| match t {
                    t if t == topic => weight,
                    t if t == second => secondary,
                    _ => rest,
                })
                .collect();
            let len = rng.random_range(shape.min_len..=shape.max_len);
            let text = topics
                .sample_words(&theta, len, rng)
                .into_iter()
                .map(|w| topics.term_of(w))
                .collect::<Vec<_>>()
                .join(" ");
            docs.push(RawDocument {
                id: format!("{key}-{i:04}"),
                text,
                set_key: Some(key.to_string()),
            });
        };
        for i in 0..shape.docs_per_set {
            emit("A", i, target, &mut rng);
        }
        for i in 0..shape.docs_per_set {
            let topic = if i % 2 == 0 { target } else { unrelated };
            emit("B", i, topic, &mut rng);
        }
        for i in 0..shape.docs_per_set {
            emit("C", i, unrelated, &mut rng);
        }

        let keyword = topics.term(target, 0);
        let query = std::iter::once(keyword.clone())
            .chain((0..shape.query_shared).map(|j| topics.shared_term(j)))
            .collect::<Vec<_>>()
            .join(" ");
        ReadinessFixture {
            topics,
            docs,
            query,
            target_topic: target,
            unrelated_topic: unrelated,
            keyword,
        }
    }

    /// Fourteen perturbations of the default seven-token query: a repetition
    /// of every token, three replacements and four deletions.
    ///
    /// Replacements swap shared words for other shared words, or for an
    /// out-of-vocabulary word. Only `q_c1` removes the keyword.
    pub fn perturbations(&self) -> Vec<Perturbation> {
        let g = |j| self.topics.shared_term(j);
        let n = self.query.split_whitespace().count();
        let mut out: Vec<Perturbation> = (0..n)
            .map(|i| Perturbation::repetition(&format!("q_a{}", i + 1), Target::Position(i)))
            .collect();
        out.push(Perturbation::replacement("q_b1", &[&g(3), &g(4)], &[&g(7)]));
        out.push(Perturbation::replacement("q_b2", &[&g(5)], &[&g(8)]));
        out.push(Perturbation::replacement("q_b3", &[&g(5)], &["gw2014"]));
        out.push(Perturbation::deletion("q_c1", Target::Term(self.keyword.clone())));
        out.push(Perturbation::deletion("q_c2", Target::Term(g(1))));
        out.push(Perturbation::deletion("q_c3", Target::Term(g(5))));
        out.push(Perturbation::deletion("q_c4", Target::Span(vec![g(3), g(4), g(5)])));
        out
    }

    /// Run configuration for this fixture, reading `corpus_file` from the
    /// directory of the config. The training priors favour recovering the
    /// five planted topics: with `beta = 0.01` the two large topics tend to
    /// split while the background topics merge.
    pub fn config_toml(&self, corpus_file: &str, master_seed: u64) -> String {
        format!(
            r#"[input]
paths = ["{corpus_file}"]
format = "jsonl"

[preprocess]
min_doc_freq = 5
min_doc_tokens = 2

[lda]
num_topics = {k}
alpha = 0.5
beta = 0.05
train_iterations = 500
infer_iterations = 100
thinning = 1

[jr]
renyi_order = 0.5

[run]
query = "{query}"
n_runs = 20
master_seed = {master_seed}
output_dir = "out"
"#,
            k = self.topics.num_topics(),
            query = self.query,
        )
    }

    /// Writes the documents as JSON lines with `id`, `text` and `set_key`.
    pub fn write_jsonl(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|e| DrlError::io(path, e))?;
        let mut w = std::io::BufWriter::new(file);
        for doc in &self.docs {
            serde_json::to_writer(&mut w, doc)?;
            w.write_all(b"\n").map_err(|e| DrlError::io(path, e))?;
        }
        w.flush().map_err(|e| DrlError::io(path, e))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn planted_rows_are_distributions() {
        let p = PlantedTopics::new(5, 100, 0.9);
        for row in p.phi() {
            assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
        assert_eq!(p.vocabulary().len(), 100);
        assert_eq!(p.vocabulary().term(21), Some("t1w01"));
        assert_eq!(p.block_of(99), Some(4));

        let p = PlantedTopics::with_shared(5, 100, 10, 0.8, 0.15);
        for row in p.phi() {
            assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            assert_eq!(row[95], 0.015);
        }
        assert_eq!(p.term_of(19), "t1w01");
        assert_eq!(p.term_of(92), "gw02");
        assert_eq!(p.block_of(92), None);
    }

    #[test]
    fn fixture_is_deterministic_and_shaped() {
        let a = ReadinessFixture::generate(FixtureShape::default(), 3);
        let b = ReadinessFixture::generate(FixtureShape::default(), 3);
        assert_eq!(a.docs, b.docs);
        assert_eq!(a.docs.len(), 600);
        assert_eq!(a.query, "t0w00 gw00 gw01 gw02 gw03 gw04 gw05");
        let c = ReadinessFixture::generate(FixtureShape::default(), 4);
        assert_ne!(a.docs, c.docs);
    }

    #[test]
    fn perturbations_apply_to_the_query() {
        let f = ReadinessFixture::generate(FixtureShape::default(), 1);
        let q: Vec<String> = f.query.split_whitespace().map(str::to_string).collect();
        let ps = f.perturbations();
        assert_eq!(ps.len(), 14);
        for p in &ps {
            crate::sensitivity::perturb_query(&q, p).unwrap();
        }
    }

    #[test]
    fn dirichlet_theta_on_simplex() {
        let p = PlantedTopics::new(4, 8, 0.9);
        let mut rng = rng_from_seed(1);
        let t = p.draw_theta(TopicMix::Dirichlet(0.3), &mut rng);
        assert!((t.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }
}
