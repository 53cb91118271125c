#![allow(dead_code)]

use std::path::{Path, PathBuf};

use rand::Rng;

use drl::pipeline::RunConfig;
use drl::rng::DrlRng;

pub fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures")
}

/// Loads a shipped config and points its output at `out`.
pub fn fixture_config(name: &str, out: &Path) -> RunConfig {
    let mut cfg = RunConfig::load(&fixtures().join(name).join("config.toml")).unwrap();
    cfg.run.output_dir = out.to_path_buf();
    cfg
}

/// Rényi entropy written out term by term with `exp`/`ln`.
pub fn naive_renyi(p: &[f64], order: f64) -> f64 {
    let mut s = 0.0;
    for &x in p {
        if x > 0.0 {
            s += (order * x.ln()).exp();
        }
    }
    s.ln() / (1.0 - order)
}

/// Jensen-Rényi divergence straight from its definition.
pub fn naive_jr(dists: &[Vec<f64>], weights: &[f64], order: f64) -> f64 {
    let dim = dists[0].len();
    let mut mix = vec![0.0; dim];
    for j in 0..dim {
        for i in 0..dists.len() {
            mix[j] += weights[i] * dists[i][j];
        }
    }
    let mut mean = 0.0;
    for i in 0..dists.len() {
        mean += weights[i] * naive_renyi(&dists[i], order);
    }
    naive_renyi(&mix, order) - mean
}

/// A random point on the simplex; about one coordinate in five is exactly zero.
pub fn random_simplex(rng: &mut DrlRng, dim: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..dim)
            .map(|_| if rng.random_bool(0.2) { 0.0 } else { rng.random::<f64>() })
            .collect();
        let s: f64 = v.iter().sum();
        if s > 1e-3 {
            return v.into_iter().map(|x| x / s).collect();
        }
    }
}

pub fn uniform(n: usize) -> Vec<f64> {
    vec![1.0 / n as f64; n]
}
