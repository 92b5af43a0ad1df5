//! Comma-separated input tables and their conversion to path datasets.

use std::cmp::Ordering;
use std::io::{Read, Write};
use std::path::Path as FsPath;

use markov_anova_core::{DagSpec, Path, PathDataset};

use crate::error::{Error, Result};

/// Raw table: header plus string cells.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub headers: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn column_index(&self, name: &str) -> Result<usize> {
        self.headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Data(format!("missing column '{name}' (have: {})", self.headers.join(", "))))
    }

    /// Numeric values of a column; the error names the first bad row
    /// (1-based, header excluded).
    pub fn numeric_column(&self, name: &str) -> Result<Vec<f64>> {
        let k = self.column_index(name)?;
        self.rows
            .iter()
            .enumerate()
            .map(|(r, row)| parse_number(&row[k]).ok_or_else(|| non_numeric(name, r, &row[k])))
            .collect()
    }
}

fn non_numeric(column: &str, row: usize, cell: &str) -> Error {
    Error::Data(format!("row {}: column '{column}' value '{cell}' is not a finite number", row + 1))
}

fn parse_number(s: &str) -> Option<f64> {
    s.trim().parse::<f64>().ok().filter(|x| x.is_finite())
}

pub fn parse_table<R: Read>(reader: R, origin: &FsPath) -> Result<Table> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let headers: Vec<String> = rdr
        .headers()
        .map_err(|e| Error::parse(origin, e))?
        .iter()
        .map(str::to_owned)
        .collect();
    if headers.iter().all(String::is_empty) {
        return Err(Error::parse(origin, "empty file: a header row is required"));
    }
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| Error::parse(origin, e))?;
        rows.push(rec.iter().map(str::to_owned).collect());
    }
    Ok(Table { headers, rows })
}

pub fn read_table(path: &FsPath) -> Result<Table> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    parse_table(std::io::BufReader::new(file), path)
}

/// Lexicographic order, except that columns whose labels all parse as
/// numbers are ordered numerically.
pub fn order_labels(mut labels: Vec<String>) -> Vec<String> {
    labels.sort();
    labels.dedup();
    let numeric: Option<Vec<f64>> = labels.iter().map(|l| parse_number(l)).collect();
    if let Some(values) = numeric {
        let mut pairs: Vec<(f64, String)> = values.into_iter().zip(labels).collect();
        pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(Ordering::Equal).then_with(|| a.1.cmp(&b.1)));
        pairs.into_iter().map(|(_, l)| l).collect()
    } else {
        labels
    }
}

/// Level labels of a spec, falling back to `1..=r_j`.
pub fn spec_labels(spec: &DagSpec) -> Vec<Vec<String>> {
    match &spec.labels {
        Some(l) => l.clone(),
        None => spec.levels.iter().map(|&r| (1..=r).map(|k| k.to_string()).collect()).collect(),
    }
}

/// Builds a dataset from `factors` and `response` columns of `table`.
///
/// Without a `spec`, each factor's distinct labels are ordered by
/// [`order_labels`] and numbered from 1. With a `spec`, its labels (or
/// `1..=r_j`) define the levels and unknown labels are errors.
pub fn load_dataset(
    table: &Table,
    factors: &[String],
    response: &str,
    spec: Option<&DagSpec>,
) -> Result<PathDataset> {
    if factors.is_empty() {
        return Err(Error::Usage("at least one factor column is required".into()));
    }
    if table.rows.is_empty() {
        return Err(Error::Data("no data rows".into()));
    }
    let idx: Vec<usize> = factors.iter().map(|f| table.column_index(f)).collect::<Result<_>>()?;
    let responses = table.numeric_column(response)?;
    let labels: Vec<Vec<String>> = match spec {
        Some(s) => {
            if s.columns() != factors.len() {
                return Err(Error::Data(format!(
                    "model has {} columns but {} factor columns were given",
                    s.columns(),
                    factors.len()
                )));
            }
            spec_labels(s)
        }
        None => idx
            .iter()
            .map(|&k| order_labels(table.rows.iter().map(|r| r[k].clone()).collect()))
            .collect(),
    };
    for (j, &k) in idx.iter().enumerate() {
        if let Some(r) = table.rows.iter().position(|row| row[k].trim().is_empty()) {
            return Err(Error::Data(format!("row {}: factor '{}' is empty", r + 1, factors[j])));
        }
    }
    let spec = DagSpec::new(labels.iter().map(Vec::len).collect())?.with_labels(labels.clone())?;
    let mut data = PathDataset::new(spec)?;
    for (r, row) in table.rows.iter().enumerate() {
        let mut levels = Vec::with_capacity(idx.len());
        for (j, &k) in idx.iter().enumerate() {
            let cell = &row[k];
            let level = labels[j].iter().position(|l| l == cell).ok_or_else(|| {
                Error::Data(format!("row {}: factor '{}' has unknown level '{cell}'", r + 1, factors[j]))
            })?;
            levels.push(level);
        }
        data.push(Path::new(levels), responses[r])?;
    }
    Ok(data)
}

/// Writes `data` as CSV with one column per factor (level labels) and a
/// response column. Responses use the shortest representation that reads
/// back to the same `f64`.
pub fn write_dataset<W: Write>(
    out: W,
    data: &PathDataset,
    factors: &[String],
    response: &str,
) -> Result<()> {
    let labels = spec_labels(data.spec());
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<&str> = factors.iter().map(String::as_str).collect();
    header.push(response);
    w.write_record(&header).map_err(|e| Error::Data(e.to_string()))?;
    for rec in data {
        let mut row: Vec<String> =
            rec.path.levels().iter().enumerate().map(|(j, &l)| labels[j][l].clone()).collect();
        row.push(format!("{}", rec.response));
        w.write_record(&row).map_err(|e| Error::Data(e.to_string()))?;
    }
    w.flush().map_err(|e| Error::Data(e.to_string()))?;
    Ok(())
}

/// `f1, f2, …` when no names are given.
pub fn default_factor_names(columns: usize) -> Vec<String> {
    (1..=columns).map(|j| format!("f{j}")).collect()
}
