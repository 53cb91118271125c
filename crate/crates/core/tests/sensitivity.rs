mod common;

use common::{fixture_config, fixtures};
use drl::corpus::tokenize;
use drl::lda::{train, TopicModel};
use drl::pipeline::{model_seed, parse_perturbation_spec, prepare_corpus, PreparedCorpus};
use drl::sensitivity::{perturb_query, sensitivity_report, Perturbation, PerturbationKind};

const BASE: &str = "usa basketball team win world cup spain";

fn query_perturbations() -> Vec<Perturbation> {
    let text = std::fs::read_to_string(fixtures().join("mini_en/perturbations.json")).unwrap();
    parse_perturbation_spec(&text)
        .unwrap()
        .into_iter()
        .map(Result::unwrap)
        .collect()
}

fn tokens(s: &str) -> Vec<String> {
    s.split_whitespace().map(str::to_string).collect()
}

fn fixture_model(name: &str) -> (PreparedCorpus, TopicModel, Vec<String>, u64) {
    let out = tempfile::tempdir().unwrap();
    let cfg = fixture_config(name, out.path());
    let corpus = prepare_corpus(&cfg).unwrap();
    let lda = cfg.lda.resolve(model_seed(cfg.run.master_seed, 0)).unwrap();
    let model = train(&corpus.preprocessed.docs, &corpus.preprocessed.vocab, &lda).unwrap();
    let query = tokenize(&cfg.run.query, &corpus.preprocess_config);
    (corpus, model, query, cfg.run.master_seed)
}

#[test]
fn perturbations_rewrite_the_query() {
    let expected = [
        ("q_a1", "usa usa basketball team win world cup spain"),
        ("q_a2", "usa basketball basketball team win world cup spain"),
        ("q_a3", "usa basketball team team win world cup spain"),
        ("q_a4", "usa basketball team win win world cup spain"),
        ("q_a5", "usa basketball team win world world cup spain"),
        ("q_a6", "usa basketball team win world cup cup spain"),
        ("q_a7", "usa basketball team win world cup spain spain"),
        ("q_b1", "usa basketball team win fiba spain"),
        ("q_b2", "usa basketball team win world cup fiba"),
        ("q_b3", "usa basketball team win world cup spain2014"),
        ("q_c1", "usa team win world cup spain"),
        ("q_c2", "usa basketball win world cup spain"),
        ("q_c3", "usa basketball team win world cup"),
        ("q_c4", "usa basketball team win"),
    ];
    let table = query_perturbations();
    assert_eq!(table.len(), expected.len());
    for (p, (label, want)) in table.iter().zip(expected) {
        assert_eq!(p.label, label);
        assert_eq!(perturb_query(&tokens(BASE), p).unwrap().join(" "), want, "{label}");
    }
}

#[test]
fn perturbation_report_on_the_mini_corpus() {
    let (corpus, model, query, seed) = fixture_model("mini_en");
    assert_eq!(query, tokens(BASE));
    let table = query_perturbations();
    let report = sensitivity_report(&model, &query, &table, &corpus.sets, 5, seed).unwrap();
    assert_eq!(report.len(), 14);
    for (outcome, p) in report.iter().zip(&table) {
        let r = outcome.as_ref().unwrap();
        assert_eq!(r.label, p.label);
        assert!(r.s1 >= 0.0 && r.s1.is_finite());
        assert!(r.s2_per_set.values().all(|&s| s >= 0.0 && s.is_finite()));
        assert_eq!(r.s2_per_set.len(), corpus.sets.len());
        if r.kind == PerturbationKind::Repetition {
            assert_eq!(r.word_space_distance, 1.0);
        }
    }
    // out-of-vocabulary replacement is kept as a row, with the term listed
    let b3 = report[9].as_ref().unwrap();
    assert_eq!(b3.oov_terms, ["spain2014"]);

    let again = sensitivity_report(&model, &query, &table, &corpus.sets, 5, seed).unwrap();
    assert_eq!(report, again);
    assert!(sensitivity_report(&model, &query, &[], &corpus.sets, 5, seed)
        .unwrap()
        .is_empty());
}

#[test]
fn one_run_agrees_with_twenty() {
    let (corpus, model, query, seed) = fixture_model("planted");
    let table = drl::synthetic::ReadinessFixture::generate(Default::default(), 1).perturbations();
    let one = sensitivity_report(&model, &query, &table, &corpus.sets, 1, seed).unwrap();
    let twenty = sensitivity_report(&model, &query, &table, &corpus.sets, 20, seed).unwrap();
    for (a, b) in one.iter().zip(&twenty) {
        let (a, b) = (a.as_ref().unwrap(), b.as_ref().unwrap());
        // the first run is shared, so a single run is one draw of the twenty
        assert_eq!(a.s1_runs[0], b.s1_runs[0]);
        let n = b.s1_runs.len() as f64;
        let sd = (b.s1_runs.iter().map(|x| (x - b.s1).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
        assert!((a.s1 - b.s1).abs() <= 3.0 * sd, "{}: {} vs {} ± {sd}", a.label, a.s1, b.s1);
    }
}
