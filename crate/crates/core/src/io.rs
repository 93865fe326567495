//! LibSVM sparse text and dense CSV readers/writers.
//!
//! LibSVM lines look like `label idx:val idx:val ...` with 1-based, strictly
//! increasing indices. Everything after `#` is a comment. A line whose first
//! token already contains `:` has no label, which is accepted for prediction
//! inputs.

use std::io::{BufRead, Write};

use crate::error::{NbcsError, Result};
use crate::learner::LabeledDataset;

/// One parsed LibSVM row: optional label and 1-based sparse features.
#[derive(Debug, Clone, PartialEq)]
pub struct LibsvmRow {
    pub label: Option<f64>,
    pub features: Vec<(usize, f64)>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct LibsvmData {
    pub rows: Vec<LibsvmRow>,
}

impl LibsvmData {
    /// Largest feature index seen (the dense dimension).
    pub fn max_index(&self) -> usize {
        self.rows
            .iter()
            .filter_map(|r| r.features.last().map(|f| f.0))
            .max()
            .unwrap_or(0)
    }

    pub fn has_labels(&self) -> bool {
        !self.rows.is_empty() && self.rows.iter().all(|r| r.label.is_some())
    }

    /// Dense points of width `dim` (defaults to [`max_index`](Self::max_index)).
    pub fn dense_points(&self, dim: Option<usize>) -> Result<Vec<Vec<f64>>> {
        let dim = dim.unwrap_or_else(|| self.max_index());
        self.rows
            .iter()
            .enumerate()
            .map(|(line, r)| {
                let mut x = vec![0.0; dim];
                for &(i, v) in &r.features {
                    if i > dim {
                        return Err(NbcsError::Parse {
                            line: line + 1,
                            message: format!("feature index {i} exceeds model dimension {dim}"),
                        });
                    }
                    x[i - 1] = v;
                }
                Ok(x)
            })
            .collect()
    }

    /// Labeled dataset; every row must carry an integral label.
    pub fn to_dataset(&self, dim: Option<usize>) -> Result<LabeledDataset> {
        let points = self.dense_points(dim)?;
        let labels = self
            .rows
            .iter()
            .enumerate()
            .map(|(i, r)| match r.label {
                Some(l) if l.fract() == 0.0 && l.abs() < 1e15 => Ok(l as i64),
                Some(l) => Err(NbcsError::Parse { line: i + 1, message: format!("label {l} is not an integer") }),
                None => Err(NbcsError::Parse { line: i + 1, message: "missing label".into() }),
            })
            .collect::<Result<Vec<_>>>()?;
        let dim = dim.unwrap_or_else(|| self.max_index());
        LabeledDataset::with_dim(points, labels, dim)
    }

    pub fn from_dataset(data: &LabeledDataset) -> Self {
        let rows = data
            .points
            .iter()
            .zip(&data.labels)
            .map(|(x, &y)| LibsvmRow {
                label: Some(y as f64),
                features: x
                    .iter()
                    .enumerate()
                    .filter(|(_, v)| **v != 0.0)
                    .map(|(i, &v)| (i + 1, v))
                    .collect(),
            })
            .collect();
        Self { rows }
    }
}

pub fn read_libsvm<R: BufRead>(reader: R) -> Result<LibsvmData> {
    let mut rows = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if let Some(row) = parse_line(&line).map_err(|message| NbcsError::Parse { line: i + 1, message })? {
            rows.push(row);
        }
    }
    Ok(LibsvmData { rows })
}

pub fn parse_libsvm(text: &str) -> Result<LibsvmData> {
    read_libsvm(text.as_bytes())
}

fn parse_line(line: &str) -> std::result::Result<Option<LibsvmRow>, String> {
    let content = line.split('#').next().unwrap_or("").trim();
    if content.is_empty() {
        return Ok(None);
    }
    let mut tokens = content.split_whitespace().peekable();
    let label = match tokens.peek() {
        Some(t) if !t.contains(':') => {
            let t = tokens.next().unwrap();
            let v: f64 = t.parse().map_err(|_| format!("invalid label `{t}`"))?;
            if !v.is_finite() {
                return Err(format!("non-finite label `{t}`"));
            }
            Some(v)
        }
        _ => None,
    };
    let mut features = Vec::new();
    let mut last = 0usize;
    for tok in tokens {
        let (idx, val) = tok.split_once(':').ok_or_else(|| format!("expected idx:val, got `{tok}`"))?;
        let idx: usize = idx.parse().map_err(|_| format!("invalid feature index `{idx}`"))?;
        if idx == 0 {
            return Err("feature indices are 1-based".into());
        }
        if idx <= last {
            return Err(format!("feature index {idx} is not increasing"));
        }
        let val: f64 = val.parse().map_err(|_| format!("invalid feature value `{val}`"))?;
        if !val.is_finite() {
            return Err(format!("non-finite value for feature {idx}"));
        }
        last = idx;
        features.push((idx, val));
    }
    Ok(Some(LibsvmRow { label, features }))
}

pub fn write_libsvm<W: Write>(mut out: W, data: &LibsvmData) -> Result<()> {
    for row in &data.rows {
        let mut first = true;
        if let Some(l) = row.label {
            write!(out, "{}", fmt_num(l))?;
            first = false;
        }
        for &(i, v) in &row.features {
            if !first {
                write!(out, " ")?;
            }
            write!(out, "{i}:{}", fmt_num(v))?;
            first = false;
        }
        writeln!(out)?;
    }
    Ok(())
}

pub fn to_libsvm_string(data: &LibsvmData) -> String {
    let mut buf = Vec::new();
    write_libsvm(&mut buf, data).expect("writing to a Vec cannot fail");
    String::from_utf8(buf).expect("ascii output")
}

fn fmt_num(v: f64) -> String {
    if v.fract() == 0.0 && v.abs() < 1e15 {
        format!("{}", v as i64)
    } else {
        format!("{v}")
    }
}

/// Dense CSV with the label in the first column. A first row whose label
/// field is not numeric is treated as a header.
pub fn read_csv<R: std::io::Read>(reader: R) -> Result<LibsvmData> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut rows = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| NbcsError::Parse { line: i + 1, message: e.to_string() })?;
        if rec.iter().all(str::is_empty) {
            continue;
        }
        let mut fields = rec.iter();
        let label_field = fields.next().unwrap_or("");
        let label = match label_field.parse::<f64>() {
            Ok(v) => v,
            Err(_) if i == 0 => continue,
            Err(_) => {
                return Err(NbcsError::Parse { line: i + 1, message: format!("invalid label `{label_field}`") })
            }
        };
        let mut features = Vec::new();
        for (j, f) in fields.enumerate() {
            let v: f64 = f
                .parse()
                .map_err(|_| NbcsError::Parse { line: i + 1, message: format!("invalid value `{f}`") })?;
            if v != 0.0 {
                features.push((j + 1, v));
            }
        }
        rows.push(LibsvmRow { label: Some(label), features });
    }
    Ok(LibsvmData { rows })
}
