use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::corpus::{IngestOptions, InputFormat, PreprocessConfig};
use crate::error::{DrlError, Result};
use crate::lda::LdaConfig;
use crate::metrics::JrParams;

/// Complete description of a scoring run, read from a TOML file.
///
/// ```toml
/// [input]
/// paths = ["tweets.jsonl"]
/// format = "jsonl"            # jsonl | csv | lines
/// text_field = "text"
/// set_key_field = "date"
///
/// [preprocess]
/// min_doc_freq = 5
///
/// [lda]
/// num_topics = 50
///
/// [jr]
/// renyi_order = 0.5
///
/// [run]
/// query = "Will the USA Basketball team win the world cup in Spain?"
/// n_runs = 20
/// master_seed = 7
/// output_dir = "out"
/// ```
///
/// Relative paths are resolved against the directory holding the file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub input: InputSection,
    #[serde(default)]
    pub preprocess: PreprocessSection,
    #[serde(default)]
    pub lda: LdaSection,
    #[serde(default)]
    pub jr: JrParams,
    #[serde(default)]
    pub run: RunSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InputSection {
    pub paths: Vec<PathBuf>,
    #[serde(default = "default_format")]
    pub format: InputFormat,
    #[serde(default = "default_id_field")]
    pub id_field: String,
    #[serde(default = "default_text_field")]
    pub text_field: String,
    #[serde(default = "default_set_key_field")]
    pub set_key_field: Option<String>,
    #[serde(default)]
    pub skip_errors: bool,
}

fn default_format() -> InputFormat {
    InputFormat::Jsonl
}
fn default_id_field() -> String {
    "id".into()
}
fn default_text_field() -> String {
    "text".into()
}
fn default_set_key_field() -> Option<String> {
    Some("set_key".into())
}

impl InputSection {
    pub fn ingest_options(&self) -> IngestOptions {
        IngestOptions {
            id_field: self.id_field.clone(),
            text_field: self.text_field.clone(),
            set_key_field: self.set_key_field.clone(),
            skip_errors: self.skip_errors,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PreprocessSection {
    /// Stopword file; the bundled English list when absent.
    pub stopwords: Option<PathBuf>,
    pub min_doc_freq: usize,
    pub min_doc_tokens: usize,
    pub lowercase: bool,
    pub strip_urls: bool,
    pub charset_filter: bool,
}

impl Default for PreprocessSection {
    fn default() -> Self {
        let d = PreprocessConfig::default();
        PreprocessSection {
            stopwords: None,
            min_doc_freq: d.min_doc_freq,
            min_doc_tokens: d.min_doc_tokens,
            lowercase: d.lowercase,
            strip_urls: d.strip_urls,
            charset_filter: d.charset_filter,
        }
    }
}

impl PreprocessSection {
    pub fn resolve(&self) -> Result<PreprocessConfig> {
        let cfg = PreprocessConfig {
            min_doc_freq: self.min_doc_freq,
            min_doc_tokens: self.min_doc_tokens,
            lowercase: self.lowercase,
            strip_urls: self.strip_urls,
            charset_filter: self.charset_filter,
            ..Default::default()
        };
        let cfg = match &self.stopwords {
            Some(path) => cfg.with_stopword_file(path)?,
            None => cfg,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LdaSection {
    pub num_topics: usize,
    /// `50 / num_topics` when absent.
    pub alpha: Option<f64>,
    pub beta: f64,
    pub train_iterations: usize,
    pub infer_iterations: usize,
    /// Half of `train_iterations` when absent.
    pub burn_in: Option<usize>,
    pub thinning: usize,
}

impl Default for LdaSection {
    fn default() -> Self {
        let d = LdaConfig::default();
        LdaSection {
            num_topics: d.num_topics,
            alpha: None,
            beta: d.beta,
            train_iterations: d.train_iterations,
            infer_iterations: d.infer_iterations,
            burn_in: None,
            thinning: d.thinning,
        }
    }
}

impl LdaSection {
    pub fn resolve(&self, seed: u64) -> Result<LdaConfig> {
        let mut cfg = LdaConfig::with_topics(self.num_topics.max(1)).iterations(self.train_iterations);
        cfg.num_topics = self.num_topics;
        if let Some(alpha) = self.alpha {
            cfg.alpha = alpha;
        }
        cfg.beta = self.beta;
        cfg.infer_iterations = self.infer_iterations;
        if let Some(b) = self.burn_in {
            cfg.burn_in = b;
        }
        cfg.thinning = self.thinning;
        cfg.seed = seed;
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunSection {
    pub query: String,
    pub n_runs: usize,
    /// Tolerance for δ-equivalence classes.
    pub delta: f64,
    pub output_dir: PathBuf,
    pub master_seed: u64,
    /// Worker threads for concurrent runs; 0 uses every core.
    pub workers: usize,
    /// Train one model and reuse it for every run instead of retraining.
    pub reuse_model: bool,
}

impl Default for RunSection {
    fn default() -> Self {
        RunSection {
            query: String::new(),
            n_runs: 20,
            delta: 0.0,
            output_dir: PathBuf::from("drl-out"),
            master_seed: 0,
            workers: 0,
            reuse_model: false,
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| DrlError::Config(e.to_string()))
    }

    /// Reads a config file and resolves its relative paths against the
    /// file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| DrlError::io(path, e))?;
        let mut cfg = Self::from_toml(&text)
            .map_err(|e| DrlError::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        cfg.resolve_paths(base);
        Ok(cfg)
    }

    pub fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        self.input.paths.iter_mut().for_each(fix);
        if let Some(p) = self.preprocess.stopwords.as_mut() {
            fix(p);
        }
        fix(&mut self.run.output_dir);
    }

    pub fn validate(&self) -> Result<()> {
        if self.input.paths.is_empty() {
            return Err(DrlError::Config("no input paths".into()));
        }
        if self.run.n_runs == 0 {
            return Err(DrlError::Config("n_runs must be at least 1".into()));
        }
        if !(self.run.delta >= 0.0) {
            return Err(DrlError::Config("delta must be nonnegative".into()));
        }
        self.jr.validate().map_err(|e| DrlError::Config(e.to_string()))?;
        self.lda.resolve(0)?;
        Ok(())
    }

    /// SHA-256 of everything that determines the scores except file
    /// locations: preprocessing, model and divergence settings, the query,
    /// run count and seed. Reports with equal hashes are comparable.
    pub fn config_hash(&self) -> String {
        #[derive(Serialize)]
        struct Hashed<'a> {
            preprocess: &'a PreprocessSection,
            lda: &'a LdaSection,
            jr: &'a JrParams,
            query: &'a str,
            n_runs: usize,
            master_seed: u64,
            reuse_model: bool,
        }
        let mut pre = self.preprocess.clone();
        // the stopword list matters, not where it lives
        pre.stopwords = pre
            .stopwords
            .as_ref()
            .and_then(|p| std::fs::read_to_string(p).ok())
            .map(|text| PathBuf::from(hex_digest(text.as_bytes())));
        let hashed = Hashed {
            preprocess: &pre,
            lda: &self.lda,
            jr: &self.jr,
            query: &self.run.query,
            n_runs: self.run.n_runs,
            master_seed: self.run.master_seed,
            reuse_model: self.run.reuse_model,
        };
        let json = serde_json::to_vec(&hashed).expect("config serializes");
        hex_digest(&json)
    }
}

pub(crate) fn hex_digest(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}
