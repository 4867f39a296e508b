//! On-disk dataset format.
//!
//! A dataset directory holds `header.json` (format version, the generating
//! config and the rejection count) and `data.jsonl`, one example per line:
//!
//! ```text
//! {"kind":"labelled","x":[0.12,-1.5],"y":2}
//! {"kind":"pool","x":[1.01,0.3],"y":null}
//! ```
//!
//! Rejected draws appear only as `n_rejected` in the header.

use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::curation::{CuratedDataset, CuratedExample, CurationConfig, ExampleKind};
use crate::error::{Error, Result};

pub const FORMAT_VERSION: &str = "1";
pub const HEADER_FILE: &str = "header.json";
pub const DATA_FILE: &str = "data.jsonl";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetHeader {
    pub version: String,
    pub config: CurationConfig,
    pub n_rejected: usize,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Record {
    kind: ExampleKind,
    x: Vec<f64>,
    y: Option<usize>,
}

pub(crate) fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

pub(crate) fn json_err(path: &Path) -> impl FnOnce(serde_json::Error) -> Error + '_ {
    move |source| Error::Json {
        path: path.to_path_buf(),
        source,
    }
}

fn format_err(path: &Path, message: impl Into<String>) -> Error {
    Error::Format {
        path: path.to_path_buf(),
        message: message.into(),
    }
}

/// Writes pretty-printed JSON followed by a newline.
pub(crate) fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(json_err(path))?;
    text.push('\n');
    fs::write(path, text).map_err(io_err(path))
}

pub(crate) fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    serde_json::from_str(&text).map_err(json_err(path))
}

pub fn write_dataset(dataset: &CuratedDataset, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let header = DatasetHeader {
        version: FORMAT_VERSION.to_string(),
        config: dataset.config.clone(),
        n_rejected: dataset.n_rejected,
    };
    write_json(&dir.join(HEADER_FILE), &header)?;

    let data_path = dir.join(DATA_FILE);
    let file = File::create(&data_path).map_err(io_err(&data_path))?;
    let mut out = BufWriter::new(file);
    for example in &dataset.examples {
        let Some(x) = &example.x else { continue };
        let record = Record {
            kind: example.kind,
            x: x.clone(),
            y: example.y,
        };
        serde_json::to_writer(&mut out, &record).map_err(json_err(&data_path))?;
        out.write_all(b"\n").map_err(io_err(&data_path))?;
    }
    out.flush().map_err(io_err(&data_path))
}

pub fn read_header(dir: &Path) -> Result<DatasetHeader> {
    let path = dir.join(HEADER_FILE);
    let header: DatasetHeader = read_json(&path)?;
    if header.version != FORMAT_VERSION {
        return Err(format_err(
            &path,
            format!("unsupported format version {:?}", header.version),
        ));
    }
    header.config.validate()?;
    Ok(header)
}

pub fn read_dataset(dir: &Path) -> Result<CuratedDataset> {
    let header = read_header(dir)?;
    let config = header.config;
    let data_path: PathBuf = dir.join(DATA_FILE);
    let file = File::open(&data_path).map_err(io_err(&data_path))?;
    let mut examples = Vec::new();
    for (lineno, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(io_err(&data_path))?;
        if line.trim().is_empty() {
            continue;
        }
        let at = |msg: String| format_err(&data_path, format!("line {}: {msg}", lineno + 1));
        let record: Record = serde_json::from_str(&line).map_err(|e| at(e.to_string()))?;
        if record.x.len() != config.dim {
            return Err(at(format!("x has dimension {}, expected {}", record.x.len(), config.dim)));
        }
        if let Some(y) = record.y {
            if y >= config.n_classes {
                return Err(at(format!("label {y} out of range")));
            }
        }
        let example = CuratedExample {
            x: Some(record.x),
            y: record.y,
            kind: record.kind,
        };
        if example.kind == ExampleKind::Rejected || !example.is_consistent() {
            return Err(at(format!("{:?} record with y={:?}", example.kind, example.y)));
        }
        examples.push(example);
    }
    Ok(CuratedDataset {
        examples,
        n_rejected: header.n_rejected,
        config,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curation::{generate_dataset, two_class_config};

    #[test]
    fn round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let ds = generate_dataset(&two_class_config()).unwrap();
        write_dataset(&ds, dir.path()).unwrap();
        let back = read_dataset(dir.path()).unwrap();
        assert_eq!(ds, back);
    }

    #[test]
    fn rejects_bad_records() {
        let dir = tempfile::tempdir().unwrap();
        let ds = generate_dataset(&two_class_config()).unwrap();
        write_dataset(&ds, dir.path()).unwrap();
        let data = dir.path().join(DATA_FILE);
        for bad in [
            r#"{"kind":"labelled","x":[0.0,0.0],"y":null}"#,
            r#"{"kind":"rejected","x":[0.0,0.0],"y":null}"#,
            r#"{"kind":"pool","x":[0.0],"y":null}"#,
            r#"{"kind":"labelled","x":[0.0,0.0],"y":5}"#,
            r#"{"kind":"pool","x":[0.0,0.0],"y":null,"extra":1}"#,
        ] {
            fs::write(&data, format!("{bad}\n")).unwrap();
            assert!(read_dataset(dir.path()).is_err(), "{bad}");
        }
    }

    #[test]
    fn missing_dir_is_io_error() {
        let err = read_dataset(Path::new("/nonexistent/dataset")).unwrap_err();
        assert!(matches!(err, Error::Io { .. }));
        assert!(err.to_string().contains("/nonexistent/dataset"));
    }
}
