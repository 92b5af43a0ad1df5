//! Machine-readable reports (CSV or JSON, `schema_version` 1).

use std::io::Write;

use markov_anova_core::asymptotics::{difference_interval, plugin_asym_var, wald_interval, AsymptoticVariance};
use markov_anova_core::estimators::{CellEstimate, Estimator, Moment};
use markov_anova_core::{Error as CoreError, Node, NodeMatrix, PathDataset};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::tabular::spec_labels;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

/// One node's estimates. Levels and columns are 1-based.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellRow {
    pub column: usize,
    pub factor: String,
    pub level: usize,
    pub label: String,
    pub count: usize,
    /// `ok`, `no-data` or `error`.
    pub status: String,
    pub mean: Option<f64>,
    pub variance: Option<f64>,
    pub variance_clipped: Option<bool>,
    pub mean_av: Option<f64>,
    pub mean_lower: Option<f64>,
    pub mean_upper: Option<f64>,
    pub variance_av: Option<f64>,
    pub variance_lower: Option<f64>,
    pub variance_upper: Option<f64>,
    pub message: Option<String>,
}

/// Estimate at level `level_a` minus estimate at `level_b` of one column.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DifferenceRow {
    pub column: usize,
    pub factor: String,
    pub level_a: usize,
    pub label_a: String,
    pub level_b: usize,
    pub label_b: String,
    pub moment: String,
    pub estimate: Option<f64>,
    pub standard_error: Option<f64>,
    pub lower: Option<f64>,
    pub upper: Option<f64>,
    pub message: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EstimateReport {
    pub schema_version: u32,
    pub command: String,
    pub estimator: String,
    pub target_kernel: String,
    pub confidence: f64,
    pub bessel: bool,
    pub records: usize,
    pub cells: Vec<CellRow>,
    pub differences: Vec<DifferenceRow>,
}

/// Per-cell results kept for differencing.
pub struct CellResults {
    pub estimates: NodeMatrix<std::result::Result<CellEstimate, CoreError>>,
    pub mean_av: NodeMatrix<std::result::Result<AsymptoticVariance, CoreError>>,
    pub variance_av: NodeMatrix<std::result::Result<AsymptoticVariance, CoreError>>,
}

pub fn compute_cells(data: &PathDataset, estimator: &Estimator<'_>) -> Result<CellResults> {
    let estimates = estimator.estimate_all(data)?;
    let levels = data.spec().levels.clone();
    let av = |moment| {
        NodeMatrix::from_fn(&levels, |node| match estimates.get(node).expect("in range") {
            Ok(_) => plugin_asym_var(data, estimator, node, moment),
            Err(e) => Err(e.clone()),
        })
    };
    let mean_av = av(Moment::Mean);
    let variance_av = av(Moment::Variance);
    Ok(CellResults { estimates, mean_av, variance_av })
}

fn cell_status(e: &CoreError) -> &'static str {
    match e {
        CoreError::NoData(_) => "no-data",
        _ => "error",
    }
}

pub fn cell_rows(
    data: &PathDataset,
    results: &CellResults,
    factors: &[String],
    level: f64,
    bessel: bool,
) -> Result<Vec<CellRow>> {
    let labels = spec_labels(data.spec());
    let mut rows = Vec::new();
    for (node, est) in results.estimates.iter() {
        let mut row = CellRow {
            column: node.column + 1,
            factor: factors[node.column].clone(),
            level: node.level + 1,
            label: labels[node.column][node.level].clone(),
            count: 0,
            status: "ok".into(),
            mean: None,
            variance: None,
            variance_clipped: None,
            mean_av: None,
            mean_lower: None,
            mean_upper: None,
            variance_av: None,
            variance_lower: None,
            variance_upper: None,
            message: None,
        };
        match est {
            Err(e) => {
                row.status = cell_status(e).into();
                row.message = Some(e.to_string());
                row.count = match e {
                    CoreError::NoData(_) => 0,
                    _ => data.iter().filter(|r| r.path.passes_through(node)).count(),
                };
            }
            Ok(e) => {
                row.count = e.count;
                row.mean = Some(e.mean);
                let variance = if bessel { e.bessel_variance() } else { Some(e.variance) };
                row.variance = variance;
                row.variance_clipped = Some(e.clipped);
                let mut notes = Vec::new();
                match results.mean_av.get(node).expect("in range") {
                    Ok(av) => {
                        let ci = wald_interval(e.mean, av.value, e.count, level)?;
                        row.mean_av = Some(av.value);
                        row.mean_lower = Some(ci.lower);
                        row.mean_upper = Some(ci.upper);
                    }
                    Err(err) => notes.push(format!("mean interval: {err}")),
                }
                match (results.variance_av.get(node).expect("in range"), variance) {
                    (Ok(av), Some(v)) => {
                        let ci = wald_interval(v, av.value, e.count, level)?;
                        row.variance_av = Some(av.value);
                        row.variance_lower = Some(ci.lower);
                        row.variance_upper = Some(ci.upper);
                    }
                    (Err(err), _) => notes.push(format!("variance interval: {err}")),
                    (Ok(_), None) => notes.push("variance undefined for one record".into()),
                }
                if e.clipped {
                    notes.push(format!("negative variance {} clipped to 0", e.raw_variance));
                }
                if !notes.is_empty() {
                    row.message = Some(notes.join("; "));
                }
            }
        }
        rows.push(row);
    }
    Ok(rows)
}

/// Which level pairs to report.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PairSelection {
    /// Every ordered pair of distinct levels in every column.
    All,
    /// One pair in one column (0-based), possibly equal levels.
    One { column: usize, a: usize, b: usize },
}

pub fn difference_rows(
    data: &PathDataset,
    results: &CellResults,
    factors: &[String],
    level: f64,
    selection: &PairSelection,
) -> Result<Vec<DifferenceRow>> {
    let labels = spec_labels(data.spec());
    let mut pairs = Vec::new();
    match *selection {
        PairSelection::All => {
            for (j, &r) in data.spec().levels.iter().enumerate() {
                for a in 0..r {
                    for b in 0..r {
                        if a != b {
                            pairs.push((j, a, b));
                        }
                    }
                }
            }
        }
        PairSelection::One { column, a, b } => {
            for node in [Node::new(a, column), Node::new(b, column)] {
                if !data.spec().contains(node) {
                    return Err(CoreError::NodeOutOfRange(node).into());
                }
            }
            pairs.push((column, a, b));
        }
    }
    let mut rows = Vec::new();
    for (j, a, b) in pairs {
        for moment in [Moment::Mean, Moment::Variance] {
            let mut row = DifferenceRow {
                column: j + 1,
                factor: factors[j].clone(),
                level_a: a + 1,
                label_a: labels[j][a].clone(),
                level_b: b + 1,
                label_b: labels[j][b].clone(),
                moment: moment.name().into(),
                estimate: None,
                standard_error: None,
                lower: None,
                upper: None,
                message: None,
            };
            let (na, nb) = (Node::new(a, j), Node::new(b, j));
            let ea = results.estimates.get(na).expect("in range");
            let eb = results.estimates.get(nb).expect("in range");
            match (ea, eb) {
                // a cell against itself: no uncertainty at all
                (Ok(_), Ok(_)) if a == b => {
                    row.estimate = Some(0.0);
                    row.standard_error = Some(0.0);
                    row.lower = Some(0.0);
                    row.upper = Some(0.0);
                }
                (Ok(ea), Ok(eb)) => {
                    row.estimate = Some(ea.value(moment) - eb.value(moment));
                    let avs = match moment {
                        Moment::Mean => &results.mean_av,
                        Moment::Variance => &results.variance_av,
                    };
                    match (avs.get(na).expect("in range"), avs.get(nb).expect("in range")) {
                        (Ok(va), Ok(vb)) => {
                            let d = difference_interval((ea, va), (eb, vb), level)?;
                            row.standard_error = Some(d.standard_error);
                            row.lower = Some(d.lower);
                            row.upper = Some(d.upper);
                        }
                        (Err(e), _) | (_, Err(e)) => row.message = Some(format!("interval: {e}")),
                    }
                }
                (Err(e), _) | (_, Err(e)) => row.message = Some(e.to_string()),
            }
            rows.push(row);
        }
    }
    Ok(rows)
}

fn csv_err(e: csv::Error) -> Error {
    Error::Data(format!("writing CSV: {e}"))
}

pub fn write_csv_rows<W: Write, T: Serialize>(out: W, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r).map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::Data(e.to_string()))
}

pub fn write_json<W: Write, T: Serialize>(mut out: W, doc: &T) -> Result<()> {
    serde_json::to_writer_pretty(&mut out, doc).map_err(|e| Error::Data(e.to_string()))?;
    writeln!(out).map_err(|e| Error::Data(e.to_string()))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DifferenceReport {
    pub schema_version: u32,
    pub command: String,
    pub estimator: String,
    pub target_kernel: String,
    pub confidence: f64,
    pub differences: Vec<DifferenceRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StepDiscrepancyRow {
    /// Transition from column `step` to `step + 1` (1-based).
    pub step: usize,
    pub max_total_variation: f64,
    pub mean_total_variation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KernelReport {
    pub schema_version: u32,
    pub command: String,
    pub records: usize,
    pub smoothing: f64,
    pub columns: Vec<usize>,
    pub labels: Vec<Vec<String>>,
    pub initial: Vec<f64>,
    pub steps: Vec<Vec<Vec<f64>>>,
    /// Nodes never visited, as `"(level,column)"`.
    pub unobserved: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub markov_check: Option<Vec<StepDiscrepancyRow>>,
}

/// Long form of a kernel for CSV: one row per transition probability.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KernelEntryRow {
    /// 0 for the initial distribution, else the source column (1-based).
    pub step: usize,
    pub from_level: Option<usize>,
    pub from_label: Option<String>,
    pub to_level: usize,
    pub to_label: String,
    pub probability: f64,
    pub from_observed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckRow {
    pub name: String,
    pub passed: bool,
    /// Measured quantity; empty when the check could not run.
    pub value: Option<f64>,
    pub threshold: String,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidateReport {
    pub schema_version: u32,
    pub command: String,
    pub checks: Vec<CheckRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiscretizeReport {
    pub schema_version: u32,
    pub command: String,
    pub source: String,
    pub groups: usize,
    pub breaks: Vec<f64>,
    pub counts: Vec<usize>,
}
