//! Whitespace-separated numeric column files, as distributed with the
//! cause-effect pairs benchmark (`pairXXXX.txt`).

use std::io::BufRead;
use std::path::Path;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct IngestOptions {
    /// The first column is the putative cause `y`; otherwise the second is.
    pub cause_first: bool,
    pub zero_mean: bool,
}

impl Default for IngestOptions {
    fn default() -> Self {
        Self {
            cause_first: true,
            zero_mean: true,
        }
    }
}

/// Parses one data row; blank lines and `#` comments yield `None`.
fn parse_row(line: &str, line_no: usize, expected: Option<usize>) -> Result<Option<Vec<f64>>> {
    let body = line.split('#').next().unwrap_or("").trim();
    if body.is_empty() {
        return Ok(None);
    }
    let values = body
        .split(|c: char| c.is_whitespace() || c == ',')
        .filter(|t| !t.is_empty())
        .map(|t| {
            t.parse::<f64>().map_err(|_| Error::Parse {
                line: line_no,
                message: format!("`{t}` is not a number"),
            })
        })
        .collect::<Result<Vec<f64>>>()?;
    if let Some(n) = expected {
        if values.len() != n {
            return Err(Error::Parse {
                line: line_no,
                message: format!("expected {n} columns, found {}", values.len()),
            });
        }
    }
    if let Some(v) = values.iter().find(|v| !v.is_finite()) {
        return Err(Error::Parse {
            line: line_no,
            message: format!("non-finite value {v}"),
        });
    }
    Ok(Some(values))
}

/// Reads rows with exactly `columns` numeric fields each.
pub fn read_columns<R: BufRead>(reader: R, columns: usize) -> Result<Vec<Vec<f64>>> {
    let mut out = vec![Vec::new(); columns];
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::Parse {
            line: i + 1,
            message: e.to_string(),
        })?;
        if let Some(row) = parse_row(&line, i + 1, Some(columns))? {
            for (col, v) in out.iter_mut().zip(row) {
                col.push(v);
            }
        }
    }
    if out.first().is_none_or(|c| c.is_empty()) {
        return Err(Error::Parse {
            line: 0,
            message: "no data rows".into(),
        });
    }
    Ok(out)
}

/// Streams rows one at a time, accepting any column count fixed by the first row.
pub struct RowReader<R> {
    lines: std::io::Lines<R>,
    line_no: usize,
    columns: Option<usize>,
}

impl<R: BufRead> RowReader<R> {
    pub fn new(reader: R, columns: Option<usize>) -> Self {
        Self {
            lines: reader.lines(),
            line_no: 0,
            columns,
        }
    }

    pub fn line_number(&self) -> usize {
        self.line_no
    }
}

impl<R: BufRead> Iterator for RowReader<R> {
    type Item = Result<Vec<f64>>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            let line = self.lines.next()?;
            self.line_no += 1;
            let line = match line {
                Ok(l) => l,
                Err(e) => {
                    return Some(Err(Error::Parse {
                        line: self.line_no,
                        message: e.to_string(),
                    }))
                }
            };
            match parse_row(&line, self.line_no, self.columns) {
                Ok(None) => continue,
                Ok(Some(row)) => {
                    self.columns.get_or_insert(row.len());
                    return Some(Ok(row));
                }
                Err(e) => return Some(Err(e)),
            }
        }
    }
}

pub fn remove_mean(v: &mut [f64]) {
    if v.is_empty() {
        return;
    }
    // second pass mops up the rounding left by the first
    for _ in 0..2 {
        let m = v.iter().sum::<f64>() / v.len() as f64;
        v.iter_mut().for_each(|s| *s -= m);
    }
}

/// Parses a two-column pair and returns `(x, y)` = (effect, cause).
pub fn parse_pair<R: BufRead>(reader: R, options: IngestOptions) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut cols = read_columns(reader, 2)?;
    let second = cols.pop().expect("two columns");
    let first = cols.pop().expect("two columns");
    let (mut x, mut y) = if options.cause_first {
        (second, first)
    } else {
        (first, second)
    };
    if options.zero_mean {
        remove_mean(&mut x);
        remove_mean(&mut y);
    }
    Ok((x, y))
}

pub fn ingest_pair(path: impl AsRef<Path>, options: IngestOptions) -> Result<(Vec<f64>, Vec<f64>)> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    parse_pair(std::io::BufReader::new(file), options)
}
