use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::{csv_writer, ensure_dir, load_or_train, prepare_corpus, write_json, RunConfig};
use crate::corpus::tokenize;
use crate::error::{DrlError, Result};
use crate::sensitivity::{
    sensitivity_report, Perturbation, SensitivityFailure, SensitivityResult,
};

/// One row of a sensitivity report, in spec-file order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "lowercase")]
pub enum SpecRow {
    Ok(SensitivityResult),
    Error(SensitivityFailure),
}

impl SpecRow {
    pub fn label(&self) -> &str {
        match self {
            SpecRow::Ok(r) => &r.label,
            SpecRow::Error(f) => &f.label,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerturbReport {
    pub config_hash: String,
    pub master_seed: u64,
    pub n_runs: usize,
    pub query_tokens: Vec<String>,
    pub rows: Vec<SpecRow>,
}

/// Parses a perturbation spec: a JSON array of
/// `{"label", "kind", "position_or_term"}` objects. Rows that do not parse
/// come back as `Err` with their position, so the remaining rows still run.
pub fn parse_perturbation_spec(
    text: &str,
) -> Result<Vec<std::result::Result<Perturbation, SensitivityFailure>>> {
    let rows: Vec<Value> = serde_json::from_str(text)?;
    Ok(rows
        .into_iter()
        .enumerate()
        .map(|(i, row)| {
            let label = row
                .get("label")
                .and_then(Value::as_str)
                .map(str::to_string)
                .unwrap_or_else(|| format!("row {}", i + 1));
            serde_json::from_value::<Perturbation>(row).map_err(|e| SensitivityFailure {
                label,
                error: format!("invalid spec entry: {e}"),
            })
        })
        .collect())
}

/// Runs every perturbation in the spec file against one model (the supplied
/// one, or one trained from the config) and writes `sensitivity.json` and
/// `sensitivity.csv`.
pub fn cmd_perturb(
    cfg: &RunConfig,
    spec_path: &Path,
    model_path: Option<&Path>,
) -> Result<PerturbReport> {
    let text = std::fs::read_to_string(spec_path).map_err(|e| DrlError::io(spec_path, e))?;
    let parsed = parse_perturbation_spec(&text).map_err(|e| {
        DrlError::Config(format!("{}: {e}", spec_path.display()))
    })?;
    let corpus = prepare_corpus(cfg)?;
    let query_tokens = tokenize(&cfg.run.query, &corpus.preprocess_config);

    let valid: Vec<Perturbation> = parsed.iter().filter_map(|p| p.as_ref().ok().cloned()).collect();
    let mut outcomes = if valid.is_empty() {
        Vec::new().into_iter()
    } else {
        let model = load_or_train(&corpus, cfg, model_path)?;
        sensitivity_report(
            &model,
            &query_tokens,
            &valid,
            &corpus.sets,
            cfg.run.n_runs,
            cfg.run.master_seed,
        )?
        .into_iter()
    };
    let rows = parsed
        .into_iter()
        .map(|p| match p {
            Ok(_) => match outcomes.next().expect("one outcome per valid row") {
                Ok(r) => SpecRow::Ok(r),
                Err(f) => SpecRow::Error(f),
            },
            Err(f) => SpecRow::Error(f),
        })
        .collect();

    let report = PerturbReport {
        config_hash: cfg.config_hash(),
        master_seed: cfg.run.master_seed,
        n_runs: cfg.run.n_runs,
        query_tokens,
        rows,
    };
    let set_keys: Vec<String> = corpus.sets.iter().map(|s| s.key.clone()).collect();
    write_perturb_files(&report, &set_keys, &cfg.run.output_dir)?;
    Ok(report)
}

fn write_perturb_files(report: &PerturbReport, set_keys: &[String], dir: &Path) -> Result<()> {
    let dir = ensure_dir(dir)?;
    write_json(&dir.join("sensitivity.json"), report)?;

    let path = dir.join("sensitivity.csv");
    let mut w = csv_writer(&path)?;
    let mut header: Vec<String> = [
        "label",
        "kind",
        "status",
        "word_space_distance",
        "semantic_distance",
        "s1",
        "s1_median",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    for key in set_keys {
        header.push(format!("s2_{key}"));
        header.push(format!("s2_median_{key}"));
    }
    header.push("error".into());
    w.write_record(&header)?;

    let fmt = |x: Option<&f64>| x.map(f64::to_string).unwrap_or_default();
    for row in &report.rows {
        let mut rec = vec![row.label().to_string()];
        match row {
            SpecRow::Ok(r) => {
                let kind = serde_json::to_value(r.kind)?;
                rec.push(kind.as_str().unwrap_or_default().to_string());
                rec.push("ok".into());
                rec.push(r.word_space_distance.to_string());
                rec.push(r.semantic_distance.to_string());
                rec.push(r.s1.to_string());
                rec.push(r.s1_median.to_string());
                for key in set_keys {
                    rec.push(fmt(r.s2_per_set.get(key)));
                    rec.push(fmt(r.s2_median_per_set.get(key)));
                }
                rec.push(String::new());
            }
            SpecRow::Error(f) => {
                rec.push(String::new());
                rec.push("error".into());
                rec.extend(std::iter::repeat_n(String::new(), 4 + 2 * set_keys.len()));
                rec.push(f.error.clone());
            }
        }
        w.write_record(&rec)?;
    }
    w.flush().map_err(|e| DrlError::io(&path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sensitivity::{PerturbationKind, Target};

    #[test]
    fn spec_rows_parse_independently() {
        let text = r#"[
            {"label": "q_a1", "kind": "repetition", "position_or_term": 0},
            {"label": "bad", "kind": "shuffle", "position_or_term": 0},
            {"label": "q_c1", "kind": "deletion", "position_or_term": "basketball"},
            {"label": "q_b1", "kind": "replacement",
             "position_or_term": {"from": ["world", "cup"], "to": ["fiba"]}}
        ]"#;
        let rows = parse_perturbation_spec(text).unwrap();
        assert_eq!(rows.len(), 4);
        assert_eq!(rows[0].as_ref().unwrap().position_or_term, Target::Position(0));
        assert_eq!(rows[1].as_ref().unwrap_err().label, "bad");
        assert_eq!(
            rows[2].as_ref().unwrap().position_or_term,
            Target::Term("basketball".into())
        );
        assert_eq!(rows[3].as_ref().unwrap().kind, PerturbationKind::Replacement);
    }

    #[test]
    fn empty_spec_is_empty() {
        assert!(parse_perturbation_spec("[]").unwrap().is_empty());
        assert!(parse_perturbation_spec("{}").is_err());
    }
}
