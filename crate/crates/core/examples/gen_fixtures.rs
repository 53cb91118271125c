//! Regenerates the corpora under the crate's `fixtures/`, or under the
//! directory given as the first argument.
//!
//! ```text
//! cargo run --example gen_fixtures
//! ```

use std::path::{Path, PathBuf};

use rand::seq::IndexedRandom;
use rand::Rng;

use drl::corpus::RawDocument;
use drl::rng::rng_from_seed;
use drl::sensitivity::{Perturbation, Target};
use drl::synthetic::{FixtureShape, ReadinessFixture};

const MINI_CONFIG: &str = r#"[input]
paths = ["tweets.jsonl"]
format = "jsonl"
set_key_field = "date"

[preprocess]
min_doc_freq = 3

[lda]
num_topics = 5
alpha = 0.1
train_iterations = 300
infer_iterations = 60

[run]
query = "Will the USA Basketball team win the world cup in Spain?"
n_runs = 5
master_seed = 2014
output_dir = "out"
"#;

const BASKETBALL: &[&str] = &[
    "usa", "basketball", "team", "win", "world", "cup", "spain", "fiba", "final", "game",
    "players", "coach", "points", "victory", "champions", "gold",
];
const RIVALS: &[&str] = &[
    "lithuania", "turkey", "slovenia", "serbia", "france", "match", "quarterfinal",
    "semifinal", "defeat", "crowd", "arena", "madrid",
];
const CHATTER: &[&str] = &[
    "weather", "sunny", "rain", "coffee", "morning", "music", "concert", "album", "traffic",
    "city", "movie", "weekend", "pizza", "dinner", "holiday", "school",
];

/// Share of basketball, rival-game and chatter words for each day.
const DAYS: &[(&str, [f64; 3])] = &[
    ("2014-09-01", [0.2, 0.2, 0.6]),
    ("2014-09-02", [0.5, 0.2, 0.3]),
    ("2014-09-06", [0.3, 0.3, 0.4]),
    ("2014-09-09", [0.3, 0.5, 0.2]),
    ("2014-09-11", [0.6, 0.3, 0.1]),
    ("2014-09-14", [0.8, 0.1, 0.1]),
];

fn mini_corpus() -> Vec<RawDocument> {
    let mut rng = rng_from_seed(2014);
    let pools = [BASKETBALL, RIVALS, CHATTER];
    let fillers = ["the", "and", "is", "so", "what a", "can't wait for"];
    let mut docs = Vec::new();
    for (day, mix) in DAYS {
        for i in 0..40 {
            let len = rng.random_range(5..=10);
            let mut words: Vec<String> = Vec::with_capacity(len + 2);
            for _ in 0..len {
                let u: f64 = rng.random();
                let pool = if u < mix[0] {
                    pools[0]
                } else if u < mix[0] + mix[1] {
                    pools[1]
                } else {
                    pools[2]
                };
                words.push(pool.choose(&mut rng).unwrap().to_string());
                if rng.random_bool(0.2) {
                    words.push(fillers.choose(&mut rng).unwrap().to_string());
                }
            }
            if rng.random_bool(0.1) {
                words.push(format!("http://t.co/{day}{i}"));
            }
            let mut text = words.join(" ");
            if rng.random_bool(0.3) {
                text = text.to_uppercase();
            }
            docs.push(RawDocument {
                id: format!("{day}-{i:03}"),
                text,
                set_key: Some(day.to_string()),
            });
        }
    }
    docs
}

fn query_perturbations() -> Vec<Perturbation> {
    let words = |s: &str| s.split_whitespace().map(str::to_string).collect::<Vec<_>>();
    let term = |s: &str| Target::Term(s.into());
    vec![
        Perturbation::repetition("q_a1", term("usa")),
        Perturbation::repetition("q_a2", term("basketball")),
        Perturbation::repetition("q_a3", term("team")),
        Perturbation::repetition("q_a4", term("win")),
        Perturbation::repetition("q_a5", term("world")),
        Perturbation::repetition("q_a6", term("cup")),
        Perturbation::repetition("q_a7", term("spain")),
        Perturbation::replacement("q_b1", &["world", "cup"], &["FIBA"]),
        Perturbation::replacement("q_b2", &["spain"], &["FIBA"]),
        Perturbation::replacement("q_b3", &["spain"], &["Spain2014"]),
        Perturbation::deletion("q_c1", term("basketball")),
        Perturbation::deletion("q_c2", term("team")),
        Perturbation::deletion("q_c3", term("spain")),
        Perturbation::deletion("q_c4", Target::Span(words("world cup spain"))),
    ]
}

fn write(path: &Path, text: &str) {
    std::fs::write(path, text).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
}

fn main() -> drl::Result<()> {
    let root: PathBuf = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures"));

    let planted = root.join("planted");
    std::fs::create_dir_all(&planted).map_err(|e| drl::DrlError::io(&planted, e))?;
    let fixture = ReadinessFixture::generate(FixtureShape::default(), 1);
    fixture.write_jsonl(&planted.join("corpus.jsonl"))?;
    write(&planted.join("config.toml"), &fixture.config_toml("corpus.jsonl", 1));
    let spec = serde_json::to_string_pretty(&fixture.perturbations())?;
    write(&planted.join("perturbations.json"), &(spec + "\n"));

    let mini = root.join("mini_en");
    std::fs::create_dir_all(&mini).map_err(|e| drl::DrlError::io(&mini, e))?;
    let mut jsonl = String::new();
    for doc in mini_corpus() {
        let row = serde_json::json!({"id": doc.id, "text": doc.text, "date": doc.set_key});
        jsonl.push_str(&row.to_string());
        jsonl.push('\n');
    }
    write(&mini.join("tweets.jsonl"), &jsonl);
    write(&mini.join("config.toml"), MINI_CONFIG);
    let spec = serde_json::to_string_pretty(&query_perturbations())?;
    write(&mini.join("perturbations.json"), &(spec + "\n"));

    println!("fixtures written to {}", root.display());
    Ok(())
}
