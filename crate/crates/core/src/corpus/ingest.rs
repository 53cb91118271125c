use std::collections::HashSet;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use log::warn;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::RawDocument;
use crate::error::{DrlError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum InputFormat {
    Jsonl,
    Csv,
    /// Plain text, one document per line.
    Lines,
}

/// Field mapping and error policy for [`ingest`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct IngestOptions {
    pub id_field: String,
    pub text_field: String,
    /// Field holding the partition label; `None` leaves every document unkeyed.
    pub set_key_field: Option<String>,
    /// Skip malformed records with a warning instead of aborting.
    pub skip_errors: bool,
}

impl Default for IngestOptions {
    fn default() -> Self {
        IngestOptions {
            id_field: "id".into(),
            text_field: "text".into(),
            set_key_field: Some("set_key".into()),
            skip_errors: false,
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct Ingested {
    pub docs: Vec<RawDocument>,
    pub warnings: Vec<String>,
}

/// Reads one file of documents. Ids missing from a record default to the
/// record's zero-based ordinal.
pub fn ingest(path: &Path, format: InputFormat, opts: &IngestOptions) -> Result<Ingested> {
    let file = File::open(path).map_err(|e| DrlError::io(path, e))?;
    let mut out = match format {
        InputFormat::Jsonl => read_jsonl(path, BufReader::new(file), opts)?,
        InputFormat::Csv => read_csv(path, file, opts)?,
        InputFormat::Lines => read_lines(path, BufReader::new(file))?,
    };
    let mut seen = HashSet::new();
    for doc in &out.docs {
        if !seen.insert(doc.id.as_str()) {
            return Err(DrlError::DuplicateId(doc.id.clone()));
        }
    }
    for w in &out.warnings {
        warn!("{w}");
    }
    out.docs.shrink_to_fit();
    Ok(out)
}

fn scalar_to_string(v: &Value) -> Option<String> {
    match v {
        Value::String(s) => Some(s.clone()),
        Value::Number(n) => Some(n.to_string()),
        Value::Bool(b) => Some(b.to_string()),
        _ => None,
    }
}

fn parse_json_record(
    line: &str,
    ordinal: usize,
    opts: &IngestOptions,
) -> std::result::Result<RawDocument, String> {
    let value: Value = serde_json::from_str(line).map_err(|e| e.to_string())?;
    let obj = value.as_object().ok_or("record is not a JSON object")?;
    let text = match obj.get(&opts.text_field) {
        Some(Value::String(s)) => s.clone(),
        Some(Value::Null) | None => {
            return Err(format!("missing text field `{}`", opts.text_field))
        }
        Some(_) => return Err(format!("text field `{}` is not a string", opts.text_field)),
    };
    let id = match obj.get(&opts.id_field) {
        None | Some(Value::Null) => ordinal.to_string(),
        Some(v) => scalar_to_string(v)
            .ok_or_else(|| format!("id field `{}` is not a scalar", opts.id_field))?,
    };
    let set_key = opts
        .set_key_field
        .as_ref()
        .and_then(|f| obj.get(f))
        .and_then(scalar_to_string);
    Ok(RawDocument { id, text, set_key })
}

fn read_jsonl<R: BufRead>(path: &Path, reader: R, opts: &IngestOptions) -> Result<Ingested> {
    let mut out = Ingested::default();
    let mut ordinal = 0;
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| DrlError::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        match parse_json_record(&line, ordinal, opts) {
            Ok(doc) => out.docs.push(doc),
            Err(message) if opts.skip_errors => {
                out.warnings.push(format!(
                    "{}:{}: skipped malformed record: {message}",
                    path.display(),
                    i + 1
                ));
            }
            Err(message) => {
                return Err(DrlError::MalformedRecord {
                    path: path.to_path_buf(),
                    line: i + 1,
                    message,
                })
            }
        }
        ordinal += 1;
    }
    Ok(out)
}

fn read_csv(path: &Path, file: File, opts: &IngestOptions) -> Result<Ingested> {
    let mut reader = csv::ReaderBuilder::new().flexible(false).from_reader(file);
    let headers = reader.headers()?.clone();
    let column = |name: &str| headers.iter().position(|h| h == name);
    let text_col = column(&opts.text_field).ok_or_else(|| DrlError::MalformedRecord {
        path: path.to_path_buf(),
        line: 1,
        message: format!("no `{}` column in header", opts.text_field),
    })?;
    let id_col = column(&opts.id_field);
    let key_col = opts.set_key_field.as_deref().and_then(column);

    let mut out = Ingested::default();
    for (ordinal, record) in reader.records().enumerate() {
        match record {
            Ok(rec) => {
                let id = id_col
                    .and_then(|c| rec.get(c))
                    .filter(|s| !s.is_empty())
                    .map_or_else(|| ordinal.to_string(), str::to_string);
                out.docs.push(RawDocument {
                    id,
                    text: rec.get(text_col).unwrap_or_default().to_string(),
                    set_key: key_col
                        .and_then(|c| rec.get(c))
                        .filter(|s| !s.is_empty())
                        .map(str::to_string),
                });
            }
            Err(e) => {
                let line = e.position().map_or(ordinal + 2, |p| p.line() as usize);
                if opts.skip_errors {
                    out.warnings.push(format!(
                        "{}:{line}: skipped malformed record: {e}",
                        path.display()
                    ));
                } else {
                    return Err(DrlError::MalformedRecord {
                        path: path.to_path_buf(),
                        line,
                        message: e.to_string(),
                    });
                }
            }
        }
    }
    Ok(out)
}

fn read_lines<R: BufRead>(path: &Path, reader: R) -> Result<Ingested> {
    let mut out = Ingested::default();
    for (i, line) in reader.lines().enumerate() {
        let text = line.map_err(|e| DrlError::io(path, e))?;
        out.docs.push(RawDocument {
            id: i.to_string(),
            text,
            set_key: None,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write_tmp(contents: &str, ext: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::Builder::new().suffix(ext).tempfile().unwrap();
        f.write_all(contents.as_bytes()).unwrap();
        f
    }

    #[test]
    fn jsonl_preserves_ids() {
        let f = write_tmp(
            "{\"id\":\"a\",\"text\":\"one\"}\n{\"id\":\"b\",\"text\":\"two\",\"set_key\":\"d1\"}\n{\"id\":7,\"text\":\"three\"}\n",
            ".jsonl",
        );
        let out = ingest(f.path(), InputFormat::Jsonl, &IngestOptions::default()).unwrap();
        let ids: Vec<_> = out.docs.iter().map(|d| d.id.as_str()).collect();
        assert_eq!(ids, ["a", "b", "7"]);
        assert_eq!(out.docs[1].set_key.as_deref(), Some("d1"));
        assert!(out.warnings.is_empty());
    }

    #[test]
    fn jsonl_missing_ids_default_to_ordinal() {
        let f = write_tmp("{\"text\":\"x\"}\n\n{\"text\":\"y\"}\n", ".jsonl");
        let out = ingest(f.path(), InputFormat::Jsonl, &IngestOptions::default()).unwrap();
        let ids: Vec<_> = out.docs.iter().map(|d| d.id.as_str()).collect();
        assert_eq!(ids, ["0", "1"]);
    }

    #[test]
    fn malformed_line_aborts_with_line_number() {
        let f = write_tmp(
            "{\"id\":\"a\",\"text\":\"ok\"}\n{not json\n{\"id\":\"c\",\"text\":\"ok\"}\n",
            ".jsonl",
        );
        match ingest(f.path(), InputFormat::Jsonl, &IngestOptions::default()) {
            Err(DrlError::MalformedRecord { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected malformed record error, got {other:?}"),
        }
    }

    #[test]
    fn malformed_line_skipped_with_warning() {
        let f = write_tmp(
            "{\"id\":\"a\",\"text\":\"ok\"}\n{not json\n{\"id\":\"c\",\"text\":\"ok\"}\n",
            ".jsonl",
        );
        let opts = IngestOptions {
            skip_errors: true,
            ..Default::default()
        };
        let out = ingest(f.path(), InputFormat::Jsonl, &opts).unwrap();
        assert_eq!(out.docs.len(), 2);
        assert_eq!(out.warnings.len(), 1);
        assert!(out.warnings[0].contains(":2:"));
    }

    #[test]
    fn duplicate_ids_rejected() {
        let f = write_tmp(
            "{\"id\":\"a\",\"text\":\"x\"}\n{\"id\":\"a\",\"text\":\"y\"}\n",
            ".jsonl",
        );
        assert!(matches!(
            ingest(f.path(), InputFormat::Jsonl, &IngestOptions::default()),
            Err(DrlError::DuplicateId(id)) if id == "a"
        ));
    }

    #[test]
    fn missing_path_is_io_error() {
        let err = ingest(
            Path::new("/definitely/not/here.jsonl"),
            InputFormat::Jsonl,
            &IngestOptions::default(),
        )
        .unwrap_err();
        assert_eq!(err.exit_code(), 2);
        assert!(err.to_string().contains("/definitely/not/here.jsonl"));
    }

    #[test]
    fn lines_format_uses_ordinals() {
        let f = write_tmp("first doc\n\nthird doc\n", ".txt");
        let out = ingest(f.path(), InputFormat::Lines, &IngestOptions::default()).unwrap();
        assert_eq!(out.docs.len(), 3);
        assert_eq!(out.docs[2].id, "2");
        assert_eq!(out.docs[1].text, "");
        assert!(out.docs.iter().all(|d| d.set_key.is_none()));
    }
}
