mod common;

use rand::Rng;

use common::{naive_jr, random_simplex, uniform};
use drl::lda::SemanticVector;
use drl::metrics::{cosine, disparity, jr_divergence, relevance, JrParams};
use drl::rng::{rng_from_seed, DrlRng};
use drl::synthetic::{PlantedTopics, TopicMix};

#[test]
fn jr_matches_naive_evaluator() {
    let mut rng = rng_from_seed(11);
    for case in 0..1000 {
        let n = rng.random_range(2..=6);
        let dim = rng.random_range(2..=10);
        let order = [0.1, 0.5, 0.9][case % 3];
        let dists: Vec<Vec<f64>> = (0..n).map(|_| random_simplex(&mut rng, dim)).collect();
        let weights = if case % 2 == 0 {
            uniform(n)
        } else {
            random_simplex(&mut rng, n)
        };
        let params = JrParams {
            renyi_order: order,
            weights: Some(weights.clone()),
        };
        let got = jr_divergence(&dists, &params).unwrap();
        let want = naive_jr(&dists, &weights, order);
        assert!((got - want).abs() < 1e-10, "case {case}: {got} vs {want}");
    }
}

#[test]
fn jr_positive_on_unequal_and_zero_on_equal() {
    let mut rng = rng_from_seed(12);
    for _ in 0..1000 {
        let order = rng.random_range(0.01..0.99);
        let n = rng.random_range(2..=6);
        let dim = rng.random_range(2..=8);
        let dists: Vec<Vec<f64>> = (0..n).map(|_| random_simplex(&mut rng, dim)).collect();
        let params = JrParams::with_order(order);
        let dd = jr_divergence(&dists, &params).unwrap();
        if dists.iter().all(|d| d == &dists[0]) {
            assert!(dd.abs() <= 1e-12);
        } else {
            assert!(dd > 0.0, "{dists:?}");
        }

        let same = vec![dists[0].clone(); n];
        assert!(jr_divergence(&same, &params).unwrap().abs() <= 1e-12);
    }
}

#[test]
fn one_hots_reach_the_upper_bound() {
    let mut rng = rng_from_seed(13);
    for _ in 0..1000 {
        let n = rng.random_range(2..=6);
        let order = [0.1, 0.5, 0.9][rng.random_range(0..3)];
        let params = JrParams::with_order(order);
        let bound = (n as f64).ln();
        let one_hots: Vec<Vec<f64>> = (0..n)
            .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
            .collect();
        assert!((jr_divergence(&one_hots, &params).unwrap() - bound).abs() < 1e-12);
        let dists: Vec<Vec<f64>> = (0..n).map(|_| random_simplex(&mut rng, n)).collect();
        assert!(jr_divergence(&dists, &params).unwrap() <= bound + 1e-12);
    }
}

#[test]
fn relevance_is_the_mean_cosine() {
    let mut rng = rng_from_seed(14);
    for _ in 0..200 {
        let dim = rng.random_range(2..=8);
        let q = random_simplex(&mut rng, dim);
        let set: Vec<Vec<f64>> = (0..rng.random_range(1..10))
            .map(|_| random_simplex(&mut rng, dim))
            .collect();
        let mut total = 0.0;
        for d in &set {
            let dot: f64 = d.iter().zip(&q).map(|(a, b)| a * b).sum();
            let na = d.iter().map(|x| x * x).sum::<f64>().sqrt();
            let nb = q.iter().map(|x| x * x).sum::<f64>().sqrt();
            total += dot / (na * nb);
        }
        let want = total / set.len() as f64;
        let svs: Vec<SemanticVector> =
            set.iter().map(|d| SemanticVector::new(d.clone()).unwrap()).collect();
        let got = relevance(&svs, &SemanticVector::new(q.clone()).unwrap()).unwrap();
        assert!((got - want).abs() < 1e-12);
        assert!((0.0..=1.0 + 1e-12).contains(&got));
    }
}

#[test]
fn analytic_values() {
    let opposite = [vec![1.0, 0.0], vec![0.0, 1.0]];
    let dd = jr_divergence(&opposite, &JrParams::with_order(0.5)).unwrap();
    assert!((dd - std::f64::consts::LN_2).abs() < 1e-12);
    let c = cosine(&[0.5, 0.5], &[1.0, 0.0]).unwrap();
    assert!((c - 2f64.sqrt() / 2.0).abs() < 1e-12);
}

/// Disparity computed on the planted topic mixtures themselves: documents
/// about one topic disagree less than documents split between two.
#[test]
fn single_topic_sets_are_less_disparate_than_mixed_sets() {
    let topics = PlantedTopics::new(5, 100, 0.9);
    let params = JrParams::default();
    for seed in 0..20 {
        let mut rng = rng_from_seed(seed);
        let draw = |topic, rng: &mut DrlRng| {
            let weight = rng.random_range(0.6..0.95);
            let theta = topics.draw_theta(TopicMix::Dominant { topic, weight }, rng);
            SemanticVector::new(theta).unwrap()
        };
        let single: Vec<_> = (0..50).map(|_| draw(0, &mut rng)).collect();
        let mixed: Vec<_> = (0..50)
            .map(|i| draw(if i % 2 == 0 { 0 } else { 2 }, &mut rng))
            .collect();
        assert!(disparity(&single, &params).unwrap() < disparity(&mixed, &params).unwrap());
    }
}
