//! Tabular CSV input.
//!
//! One row per instance. The label column may hold any strings; they are
//! mapped to class ids in sorted order (numerically when every label parses
//! as an integer). Feature columns must be numeric unless an encoding is
//! configured for them:
//!
//! * `ordinal`: sorted distinct values become 0, 1, 2, ...; values unseen at
//!   training time become -1.
//! * `onehot`: one 0/1 column per distinct value; unseen values are all-zero.
//!
//! The [`CsvSchema`] learned from the training file is reused for test files
//! so both produce identical layouts.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::path::Path;

use hwforest_core::Dataset;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Encoding {
    Ordinal,
    Onehot,
}

impl std::str::FromStr for Encoding {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "ordinal" => Ok(Encoding::Ordinal),
            "onehot" => Ok(Encoding::Onehot),
            _ => Err(format!("expected ordinal or onehot, got {s:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LabelColumn {
    Last,
    Index(usize),
    Name(String),
}

impl std::str::FromStr for LabelColumn {
    type Err = std::convert::Infallible;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "last" => LabelColumn::Last,
            _ => s.parse().map(LabelColumn::Index).unwrap_or_else(|_| LabelColumn::Name(s.to_string())),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CsvOptions {
    pub has_header: bool,
    pub delimiter: u8,
    pub label_column: LabelColumn,
    /// Keyed by header name or by 0-based column index written as text.
    pub encodings: BTreeMap<String, Encoding>,
}

impl Default for CsvOptions {
    fn default() -> Self {
        Self { has_header: true, delimiter: b',', label_column: LabelColumn::Last, encodings: BTreeMap::new() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ColumnKind {
    Numeric,
    Ordinal { categories: Vec<String> },
    Onehot { categories: Vec<String> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnSchema {
    pub name: String,
    pub kind: ColumnKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CsvSchema {
    pub options: CsvOptions,
    pub n_columns: usize,
    pub label_index: usize,
    pub label_names: Vec<String>,
    /// Feature columns in file order (the label column excluded).
    pub columns: Vec<(usize, ColumnSchema)>,
}

impl CsvSchema {
    pub fn n_features(&self) -> usize {
        self.columns
            .iter()
            .map(|(_, c)| match &c.kind {
                ColumnKind::Onehot { categories } => categories.len(),
                _ => 1,
            })
            .sum()
    }
}

struct RawTable {
    header: Vec<String>,
    rows: Vec<(u64, Vec<String>)>,
}

fn read_raw(path: &Path, opts: &CsvOptions) -> Result<RawTable> {
    let csv_err = |source| Error::Csv { path: path.to_path_buf(), source };
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(opts.has_header)
        .delimiter(opts.delimiter)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(file);
    let mut header: Vec<String> = if opts.has_header {
        reader.headers().map_err(csv_err)?.iter().map(str::to_string).collect()
    } else {
        Vec::new()
    };
    let mut rows = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(csv_err)?;
        if rec.iter().all(str::is_empty) {
            continue;
        }
        let line = rec.position().map_or(0, |p| p.line());
        rows.push((line, rec.iter().map(str::to_string).collect::<Vec<_>>()));
    }
    let expected = if opts.has_header { header.len() } else { rows.first().map_or(0, |r| r.1.len()) };
    for (line, r) in &rows {
        if r.len() != expected {
            return Err(Error::RaggedRow { path: path.to_path_buf(), line: *line, expected, found: r.len() });
        }
    }
    if header.is_empty() {
        header = (0..expected).map(|i| i.to_string()).collect();
    }
    Ok(RawTable { header, rows })
}

fn sorted_labels(values: BTreeSet<&str>) -> Vec<String> {
    let mut v: Vec<String> = values.into_iter().map(str::to_string).collect();
    if v.iter().all(|s| s.parse::<i64>().is_ok()) {
        v.sort_by_key(|s| s.parse::<i64>().unwrap_or_default());
    }
    v
}

fn label_index(path: &Path, opts: &CsvOptions, header: &[String]) -> Result<usize> {
    let unknown = |c: String| Error::UnknownLabelColumn { path: path.to_path_buf(), column: c };
    match &opts.label_column {
        LabelColumn::Last => header.len().checked_sub(1).ok_or_else(|| unknown("last".into())),
        LabelColumn::Index(i) if *i < header.len() => Ok(*i),
        LabelColumn::Index(i) => Err(unknown(i.to_string())),
        LabelColumn::Name(n) => header.iter().position(|h| h == n).ok_or_else(|| unknown(n.clone())),
    }
}

/// Reads a training file and learns its schema.
pub fn load_csv(path: impl AsRef<Path>, opts: &CsvOptions) -> Result<(Dataset, CsvSchema)> {
    let path = path.as_ref();
    let raw = read_raw(path, opts)?;
    let label_index = label_index(path, opts, &raw.header)?;
    for key in opts.encodings.keys() {
        let known = raw.header.iter().enumerate().any(|(i, h)| h == key || i.to_string() == *key);
        if !known {
            return Err(Error::value(&format!("encode.{key}"), "no such column"));
        }
    }
    let label_names = sorted_labels(raw.rows.iter().map(|(_, r)| r[label_index].as_str()).collect());
    let columns = raw
        .header
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != label_index)
        .map(|(i, name)| {
            let enc = opts.encodings.get(name).or_else(|| opts.encodings.get(&i.to_string()));
            let categories = || -> Vec<String> {
                let set: BTreeSet<&str> = raw.rows.iter().map(|(_, r)| r[i].as_str()).collect();
                set.into_iter().map(str::to_string).collect()
            };
            let kind = match enc {
                None => ColumnKind::Numeric,
                Some(Encoding::Ordinal) => ColumnKind::Ordinal { categories: categories() },
                Some(Encoding::Onehot) => ColumnKind::Onehot { categories: categories() },
            };
            (i, ColumnSchema { name: name.clone(), kind })
        })
        .collect();
    let schema = CsvSchema { options: opts.clone(), n_columns: raw.header.len(), label_index, label_names, columns };
    let d = encode(path, &raw, &schema)?;
    Ok((d, schema))
}

/// Reads a file with a schema learned earlier.
pub fn load_csv_with_schema(path: impl AsRef<Path>, schema: &CsvSchema) -> Result<Dataset> {
    let path = path.as_ref();
    let raw = read_raw(path, &schema.options)?;
    if let Some((line, r)) = raw.rows.first() {
        if r.len() != schema.n_columns {
            return Err(Error::RaggedRow {
                path: path.to_path_buf(),
                line: *line,
                expected: schema.n_columns,
                found: r.len(),
            });
        }
    }
    encode(path, &raw, schema)
}

fn encode(path: &Path, raw: &RawTable, schema: &CsvSchema) -> Result<Dataset> {
    let label_ids: BTreeMap<&str, usize> =
        schema.label_names.iter().enumerate().map(|(i, s)| (s.as_str(), i)).collect();
    let width = schema.n_features();
    let mut features = Vec::with_capacity(raw.rows.len() * width);
    let mut labels = Vec::with_capacity(raw.rows.len());
    for (line, row) in &raw.rows {
        let label = &row[schema.label_index];
        let id = *label_ids
            .get(label.as_str())
            .ok_or_else(|| Error::UnknownLabel { path: path.to_path_buf(), label: label.clone() })?;
        labels.push(id);
        for (i, col) in &schema.columns {
            let cell = row[*i].as_str();
            match &col.kind {
                ColumnKind::Numeric => {
                    let v: f64 =
                        cell.parse().ok().filter(|v: &f64| v.is_finite()).ok_or_else(|| Error::NonNumericCell {
                            path: path.to_path_buf(),
                            line: *line,
                            column: col.name.clone(),
                            value: cell.to_string(),
                        })?;
                    features.push(v);
                }
                ColumnKind::Ordinal { categories } => {
                    let pos = categories.iter().position(|c| c == cell);
                    features.push(pos.map_or(-1.0, |p| p as f64));
                }
                ColumnKind::Onehot { categories } => {
                    features.extend(categories.iter().map(|c| f64::from(u8::from(c == cell))));
                }
            }
        }
    }
    Ok(Dataset::with_classes(features, width, labels, schema.label_names.len())?)
}

/// Writes numeric features with the class id as the last column.
pub fn write_csv(path: impl AsRef<Path>, d: &Dataset) -> Result<()> {
    let path = path.as_ref();
    let mut w = csv::Writer::from_path(path).map_err(|source| Error::Csv { path: path.to_path_buf(), source })?;
    let wrap = |source| Error::Csv { path: path.to_path_buf(), source };
    let mut header: Vec<String> = (0..d.n_features()).map(|j| format!("f{j}")).collect();
    header.push("label".into());
    w.write_record(&header).map_err(wrap)?;
    for (i, row) in d.rows().enumerate() {
        let mut rec: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        rec.push(d.label(i).to_string());
        w.write_record(&rec).map_err(wrap)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Per-dataset, per-model accuracy table: first column names the dataset,
/// the header names the models.
#[derive(Debug, Clone, PartialEq)]
pub struct AccuracyTable {
    pub models: Vec<String>,
    pub datasets: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

pub fn load_accuracy_table(path: impl AsRef<Path>) -> Result<AccuracyTable> {
    let path = path.as_ref();
    let raw = read_raw(path, &CsvOptions::default())?;
    let models = raw.header.iter().skip(1).cloned().collect();
    let mut datasets = Vec::new();
    let mut rows = Vec::new();
    for (line, r) in &raw.rows {
        datasets.push(r[0].clone());
        let vals = r[1..]
            .iter()
            .enumerate()
            .map(|(j, cell)| {
                cell.parse::<f64>().map_err(|_| Error::NonNumericCell {
                    path: path.to_path_buf(),
                    line: *line,
                    column: raw.header[j + 1].clone(),
                    value: cell.clone(),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        rows.push(vals);
    }
    Ok(AccuracyTable { models, datasets, rows })
}
