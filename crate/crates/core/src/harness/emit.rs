//! CSV and JSON-lines output for experiment results.
//!
//! CSV files start with one `# {json}` comment line holding the run metadata,
//! then a header row and one row per point. JSON-lines files hold
//! `{"meta": ...}` on the first line and one point object per following line.
//! Column order is the field order of the point structs and never changes.

use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::harness::roc::{RocCurve, RocMeta, RocPoint};
use crate::harness::windowed::{WindowedMeta, WindowedPoint, WindowedResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    JsonLines,
}

impl OutputFormat {
    /// `.jsonl` / `.ndjson` select JSON-lines; anything else is CSV.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some("jsonl") | Some("ndjson") => OutputFormat::JsonLines,
            _ => OutputFormat::Csv,
        }
    }
}

impl FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "csv" => Ok(OutputFormat::Csv),
            "jsonl" | "json-lines" | "ndjson" => Ok(OutputFormat::JsonLines),
            other => Err(Error::arg(format!("unknown format `{other}` (expected csv|jsonl)"))),
        }
    }
}

impl fmt::Display for OutputFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            OutputFormat::Csv => "csv",
            OutputFormat::JsonLines => "jsonl",
        })
    }
}

/// A result made of run metadata and a list of flat rows.
pub trait Tabular: Sized {
    type Meta: Serialize + DeserializeOwned;
    type Row: Serialize + DeserializeOwned;

    const COLUMNS: &'static [&'static str];

    fn meta(&self) -> &Self::Meta;
    fn rows(&self) -> &[Self::Row];
    fn from_parts(meta: Self::Meta, rows: Vec<Self::Row>) -> Self;
}

impl Tabular for RocCurve {
    type Meta = RocMeta;
    type Row = RocPoint;

    const COLUMNS: &'static [&'static str] =
        &["lambda", "p_fa_empirical", "p_d_empirical", "p_fa_theory", "p_d_theory"];

    fn meta(&self) -> &RocMeta {
        &self.meta
    }

    fn rows(&self) -> &[RocPoint] {
        &self.points
    }

    fn from_parts(meta: RocMeta, points: Vec<RocPoint>) -> Self {
        Self { meta, points }
    }
}

impl Tabular for WindowedResult {
    type Meta = WindowedMeta;
    type Row = WindowedPoint;

    const COLUMNS: &'static [&'static str] = &["lambda", "p_fa", "p_d"];

    fn meta(&self) -> &WindowedMeta {
        &self.meta
    }

    fn rows(&self) -> &[WindowedPoint] {
        &self.points
    }

    fn from_parts(meta: WindowedMeta, points: Vec<WindowedPoint>) -> Self {
        Self { meta, points }
    }
}

#[derive(Serialize, Deserialize)]
struct MetaLine<M> {
    meta: M,
}

fn json_err(e: serde_json::Error) -> Error {
    Error::Numerical(format!("serialization: {e}"))
}

pub fn write_table<R: Tabular, W: Write>(result: &R, mut out: W, format: OutputFormat) -> Result<()> {
    let io = |e: std::io::Error| Error::io("<output>", e);
    match format {
        OutputFormat::Csv => {
            let meta = serde_json::to_string(result.meta()).map_err(json_err)?;
            writeln!(out, "# {meta}").map_err(io)?;
            let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(&mut out);
            let csv_err = |e: csv::Error| Error::Csv {
                path: "<output>".into(),
                source: e,
            };
            w.write_record(R::COLUMNS).map_err(csv_err)?;
            for row in result.rows() {
                w.serialize(row).map_err(csv_err)?;
            }
            w.flush().map_err(io)?;
        }
        OutputFormat::JsonLines => {
            let meta = serde_json::to_string(&MetaLine { meta: result.meta() }).map_err(json_err)?;
            writeln!(out, "{meta}").map_err(io)?;
            for row in result.rows() {
                writeln!(out, "{}", serde_json::to_string(row).map_err(json_err)?).map_err(io)?;
            }
        }
    }
    out.flush().map_err(io)
}

/// Writes `result` to `path`; I/O failures carry the path.
pub fn emit<R: Tabular>(result: &R, path: impl AsRef<Path>, format: OutputFormat) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_table(result, BufWriter::new(file), format).map_err(|e| match e {
        Error::Io { source, .. } => Error::io(path, source),
        Error::Csv { source, .. } => Error::Csv {
            path: path.to_path_buf(),
            source,
        },
        other => other,
    })
}

/// Reads back a CSV written by [`emit`].
pub fn read_csv<R: Tabular>(path: impl AsRef<Path>) -> Result<R> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = BufReader::new(file);
    let mut first = String::new();
    reader.read_line(&mut first).map_err(|e| Error::io(path, e))?;
    let meta_json = first.trim().strip_prefix('#').ok_or_else(|| Error::Parse {
        line: 1,
        message: "missing metadata comment".into(),
    })?;
    let meta: R::Meta = serde_json::from_str(meta_json.trim()).map_err(|e| Error::Parse {
        line: 1,
        message: e.to_string(),
    })?;
    let mut csv_reader = csv::Reader::from_reader(reader);
    let rows = csv_reader
        .deserialize()
        .collect::<std::result::Result<Vec<R::Row>, _>>()
        .map_err(|e| Error::Csv {
            path: path.to_path_buf(),
            source: e,
        })?;
    Ok(R::from_parts(meta, rows))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::Field;
    use crate::seqdetect::SigmaMode;

    fn sample_curve(points: Vec<RocPoint>) -> RocCurve {
        RocCurve {
            meta: RocMeta {
                n_samples: 100,
                order: 1,
                field: Field::Complex,
                snr_db: 0.0,
                trials: 10,
                master_seed: 7,
                sigma_mode: SigmaMode::Oracle,
                kappa: 2.9552238805970146,
            },
            points,
        }
    }

    #[test]
    fn empty_result_is_header_only() {
        let mut buf = Vec::new();
        write_table(&sample_curve(vec![]), &mut buf, OutputFormat::Csv).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 2);
        assert!(lines[0].starts_with("# {"));
        assert_eq!(lines[1], "lambda,p_fa_empirical,p_d_empirical,p_fa_theory,p_d_theory");
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("roc.csv");
        let curve = sample_curve(vec![
            RocPoint {
                lambda: 4.605170185988091,
                p_fa_empirical: 0.1003,
                p_d_empirical: 0.3141592653589793,
                p_fa_theory: 0.1,
                p_d_theory: 1.0 / 3.0,
            },
            RocPoint {
                lambda: 0.0,
                p_fa_empirical: 1.0,
                p_d_empirical: 1.0,
                p_fa_theory: 1.0,
                p_d_theory: 1.0,
            },
        ]);
        emit(&curve, &path, OutputFormat::Csv).unwrap();
        let back: RocCurve = read_csv(&path).unwrap();
        assert_eq!(back, curve);
    }

    #[test]
    fn jsonl_layout() {
        let mut buf = Vec::new();
        let curve = sample_curve(vec![RocPoint {
            lambda: 1.0,
            p_fa_empirical: 0.5,
            p_d_empirical: 0.6,
            p_fa_theory: 0.5,
            p_d_theory: 0.7,
        }]);
        write_table(&curve, &mut buf, OutputFormat::JsonLines).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 2);
        assert!(lines[0].starts_with("{\"meta\":{\"n_samples\":100"));
        assert_eq!(
            lines[1],
            r#"{"lambda":1.0,"p_fa_empirical":0.5,"p_d_empirical":0.6,"p_fa_theory":0.5,"p_d_theory":0.7}"#
        );
    }

    #[test]
    fn unwritable_path_is_reported() {
        let err = emit(&sample_curve(vec![]), "/nonexistent-dir/x.csv", OutputFormat::Csv).unwrap_err();
        assert!(err.to_string().contains("/nonexistent-dir/x.csv"));
    }

    #[test]
    fn format_selection() {
        assert_eq!(OutputFormat::from_path(Path::new("a.jsonl")), OutputFormat::JsonLines);
        assert_eq!(OutputFormat::from_path(Path::new("a.csv")), OutputFormat::Csv);
        assert_eq!("json-lines".parse::<OutputFormat>().unwrap(), OutputFormat::JsonLines);
        assert!("xml".parse::<OutputFormat>().is_err());
    }
}
