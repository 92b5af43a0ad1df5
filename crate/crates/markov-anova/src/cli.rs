//! The `markov-anova` command line.

use std::ffi::OsString;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path as FsPath, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use markov_anova_core::estimators::{Estimator, EstimatorKind, Moment};
use markov_anova_core::kernel::estimate_kernel;
use markov_anova_core::oracle::{verify_measure_change, TestFunction};
use markov_anova_core::reference::correlated_2x2;
use markov_anova_core::stats::normal_quantile;
use markov_anova_core::simulation::{AvSource, ExperimentConfig, MIN_COVERAGE_REPLICATES};
use markov_anova_core::{Error as CoreError, PathDataset, TransitionKernel, DEFAULT_ENUMERATION_CAP};

use crate::discretize::{quantile_discretize, DiscretizationRule};
use crate::error::{exit, Error, Result};
use crate::experiment_file::{load_target, read_experiment, Experiment};
use crate::markov_check::markov_discrepancy;
use crate::model_file::{read_model, Model};
use crate::parallel;
use crate::report::{self, CellResults, CheckRow, Format, PairSelection, SCHEMA_VERSION};
use crate::tabular::{default_factor_names, load_dataset, read_table, spec_labels, write_dataset, Table};

#[derive(Debug, Parser)]
#[command(name = "markov-anova", version, about = "Node effects under Markov-correlated factors")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sample a dataset from a model or experiment file.
    Simulate(SimulateArgs),
    /// Per-node mean and variance estimates with confidence intervals.
    Estimate(EstimateArgs),
    /// Within-column differences of node estimates with confidence intervals.
    Compare(CompareArgs),
    /// Exact-oracle and coverage checks; exits 1 if any check fails.
    Validate(ValidateArgs),
    /// Equal-frequency grouping of a numeric column.
    Discretize(DiscretizeArgs),
    /// Empirical transition kernel of a dataset.
    Kernel(KernelArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FormatArg {
    Csv,
    Json,
}

impl From<FormatArg> for Format {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Csv => Format::Csv,
            FormatArg::Json => Format::Json,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EstimatorArg {
    Naive,
    Weighted,
    Plugin,
}

impl From<EstimatorArg> for EstimatorKind {
    fn from(e: EstimatorArg) -> Self {
        match e {
            EstimatorArg::Naive => EstimatorKind::Naive,
            EstimatorArg::Weighted => EstimatorKind::Weighted,
            EstimatorArg::Plugin => EstimatorKind::Plugin,
        }
    }
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Model file (JSON).
    #[arg(long, required_unless_present = "config", conflicts_with = "config")]
    pub model: Option<PathBuf>,
    /// Experiment file; supplies the model, n and seed.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Number of records (overrides the experiment file).
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Factor column names, comma separated (default f1, f2, …).
    #[arg(long, value_delimiter = ',')]
    pub factors: Option<Vec<String>>,
    #[arg(long, default_value = "y")]
    pub response: String,
    /// Output file (default: standard output).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Worker threads (default: one per core); results do not depend on it.
    #[arg(long)]
    pub threads: Option<usize>,
}

#[derive(Debug, Args)]
pub struct DataArgs {
    /// Input table (CSV with header).
    #[arg(long)]
    pub data: PathBuf,
    /// Factor columns in DAG order, comma separated.
    #[arg(long, value_delimiter = ',', required = true)]
    pub factors: Vec<String>,
    /// Numeric response column.
    #[arg(long)]
    pub response: String,
    /// Model file: fixes levels and labels, and is the sampling kernel for
    /// the weighted estimator.
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// `uniform` or a model file whose kernel is the target.
    #[arg(long, default_value = "uniform")]
    pub target_kernel: String,
    #[arg(long, value_enum, default_value = "plugin")]
    pub estimator: EstimatorArg,
    /// Confidence level of the intervals.
    #[arg(long, default_value_t = 0.95)]
    pub level: f64,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: FormatArg,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EstimateArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// Report variances with the n/(n−1) correction.
    #[arg(long)]
    pub bessel: bool,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// Restrict to one column (1-based); requires --pair.
    #[arg(long, requires = "pair")]
    pub column: Option<usize>,
    /// Two level labels `A,B` of --column; reports A − B.
    #[arg(long, requires = "column", value_delimiter = ',', num_args = 1)]
    pub pair: Option<Vec<String>>,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    /// Model file (default: built-in correlated 2×2 example).
    #[arg(long, conflicts_with = "config")]
    pub model: Option<PathBuf>,
    /// Experiment file; supplies model, target, n, seed, replicates, estimators, level and nodes.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, conflicts_with = "config", default_value = "uniform")]
    pub target_kernel: String,
    #[arg(long, conflicts_with = "config", default_value_t = 1000)]
    pub n: usize,
    #[arg(long, conflicts_with = "config", default_value_t = 1)]
    pub seed: u64,
    #[arg(long, conflicts_with = "config", default_value_t = 200)]
    pub replicates: usize,
    #[arg(long, conflicts_with = "config", default_value_t = 0.95)]
    pub level: f64,
    /// Skip the Monte-Carlo coverage studies.
    #[arg(long)]
    pub no_coverage: bool,
    #[arg(long)]
    pub threads: Option<usize>,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: FormatArg,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct DiscretizeArgs {
    #[arg(long)]
    pub data: PathBuf,
    /// Numeric column to group.
    #[arg(long)]
    pub column: String,
    /// Number of groups (ignored with --apply).
    #[arg(long, default_value_t = 5)]
    pub groups: usize,
    /// Reuse the breaks of a rule file instead of computing them.
    #[arg(long)]
    pub apply: Option<PathBuf>,
    /// Name of the added group column (default `<column>_group`).
    #[arg(long)]
    pub name: Option<String>,
    /// Where to write the rule (JSON).
    #[arg(long)]
    pub rule: Option<PathBuf>,
    /// Output table (input plus the group column, labelled 1..q).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct KernelArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, value_delimiter = ',', required = true)]
    pub factors: Vec<String>,
    /// Additive smoothing α added to every transition count.
    #[arg(long, default_value_t = 0.0)]
    pub smoothing: f64,
    /// Also report how far the data are from stepwise (Markov) dependence.
    #[arg(long)]
    pub check_markov: bool,
    #[arg(long, value_enum, default_value = "json")]
    pub format: FormatArg,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Parses `args` (including the program name) and runs the command.
/// Reports go to `stdout` unless `--out` is given; diagnostics go to
/// `stderr`. Returns the process exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(stdout, "{e}");
                    exit::OK
                }
                _ => {
                    let _ = write!(stderr, "{e}");
                    exit::USAGE
                }
            };
        }
    };
    let outcome = match cli.command {
        Command::Simulate(a) => simulate(&a, stdout),
        Command::Estimate(a) => estimate(&a, stdout, stderr),
        Command::Compare(a) => compare(&a, stdout, stderr),
        Command::Validate(a) => validate(&a, stdout, stderr),
        Command::Discretize(a) => discretize(&a, stdout),
        Command::Kernel(a) => kernel(&a, stdout, stderr),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.exit_code()
        }
    }
}

/// Runs `f` against `--out` if given, otherwise against `stdout`.
fn with_output(
    out: Option<&FsPath>,
    stdout: &mut dyn Write,
    f: impl FnOnce(&mut dyn Write) -> Result<()>,
) -> Result<()> {
    match out {
        Some(path) => {
            let file = File::create(path).map_err(|e| Error::io(path, e))?;
            let mut w = BufWriter::new(file);
            f(&mut w)?;
            w.flush().map_err(|e| Error::io(path, e))
        }
        None => f(stdout),
    }
}

fn check_level(level: f64) -> Result<()> {
    if level > 0.0 && level < 1.0 {
        Ok(())
    } else {
        Err(Error::Usage(format!("--level {level} must lie strictly between 0 and 1")))
    }
}

fn simulate(a: &SimulateArgs, stdout: &mut dyn Write) -> Result<i32> {
    let (model, n, seed) = match (&a.model, &a.config) {
        (Some(path), _) => {
            let n = a.n.ok_or_else(|| Error::Usage("--n is required with --model".into()))?;
            let seed = a.seed.ok_or_else(|| Error::Usage("--seed is required with --model".into()))?;
            (read_model(path)?, n, seed)
        }
        (None, Some(path)) => {
            let e = read_experiment(path)?;
            (e.model, a.n.unwrap_or(e.n), a.seed.unwrap_or(e.seed))
        }
        (None, None) => return Err(Error::Usage("give --model or --config".into())),
    };
    if n == 0 {
        return Err(Error::Usage("--n must be at least 1".into()));
    }
    let factors = match &a.factors {
        Some(f) if f.len() != model.spec.columns() => {
            return Err(Error::Usage(format!(
                "--factors names {} columns, model has {}",
                f.len(),
                model.spec.columns()
            )))
        }
        Some(f) => f.clone(),
        None => default_factor_names(model.spec.columns()),
    };
    let pool = parallel::pool(a.threads)?;
    let data = parallel::sample_dataset(&model.kernel, &model.quality, n, seed, &pool)?;
    let data = PathDataset::from_records(model.spec.clone(), data.records().to_vec())?;
    with_output(a.out.as_deref(), stdout, |w| write_dataset(w, &data, &factors, &a.response))?;
    Ok(exit::OK)
}

/// Dataset, model and target resolved from the shared data flags.
struct Loaded {
    data: PathDataset,
    model: Option<Model>,
    target: TransitionKernel,
}

impl Loaded {
    fn estimator(&self, kind: EstimatorKind) -> Result<Estimator<'_>> {
        Ok(match kind {
            EstimatorKind::Naive => Estimator::Naive,
            EstimatorKind::Plugin => Estimator::Plugin { target: &self.target },
            EstimatorKind::Weighted => {
                let model = self.model.as_ref().ok_or_else(|| {
                    Error::Usage("the weighted estimator needs the sampling kernel: pass --model".into())
                })?;
                Estimator::Weighted { sampling: &model.kernel, target: &self.target }
            }
        })
    }
}

fn load(a: &DataArgs) -> Result<Loaded> {
    check_level(a.level)?;
    let model = a.model.as_deref().map(read_model).transpose()?;
    let table = read_table(&a.data)?;
    let data = load_dataset(&table, &a.factors, &a.response, model.as_ref().map(|m| &m.spec))?;
    let target = load_target(&a.target_kernel, FsPath::new("."), &data.spec().levels)?;
    Ok(Loaded { data, model, target })
}

fn target_name(a: &DataArgs) -> String {
    a.target_kernel.clone()
}

/// Names the cells whose estimate failed for a statistical reason other
/// than having no data; returns whether there were any.
fn report_cell_failures(results: &CellResults, stderr: &mut dyn Write) -> bool {
    let mut any = false;
    for (_, r) in results.estimates.iter() {
        if let Err(e) = r {
            if !matches!(e, CoreError::NoData(_)) {
                let _ = writeln!(stderr, "error: {e}");
                any = true;
            }
        }
    }
    any
}

fn estimate(a: &EstimateArgs, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<i32> {
    let l = load(&a.data)?;
    let estimator = l.estimator(a.data.estimator.into())?;
    let results = report::compute_cells(&l.data, &estimator)?;
    let cells = report::cell_rows(&l.data, &results, &a.data.factors, a.data.level, a.bessel)?;
    match Format::from(a.data.format) {
        Format::Csv => with_output(a.data.out.as_deref(), stdout, |w| report::write_csv_rows(w, &cells))?,
        Format::Json => {
            let differences =
                report::difference_rows(&l.data, &results, &a.data.factors, a.data.level, &PairSelection::All)?;
            let doc = report::EstimateReport {
                schema_version: SCHEMA_VERSION,
                command: "estimate".into(),
                estimator: estimator.kind().name().into(),
                target_kernel: target_name(&a.data),
                confidence: a.data.level,
                bessel: a.bessel,
                records: l.data.len(),
                cells,
                differences,
            };
            with_output(a.data.out.as_deref(), stdout, |w| report::write_json(w, &doc))?
        }
    }
    Ok(if report_cell_failures(&results, stderr) { exit::STATISTICAL } else { exit::OK })
}

fn compare(a: &CompareArgs, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<i32> {
    let l = load(&a.data)?;
    let selection = match (a.column, &a.pair) {
        (Some(col), Some(pair)) => {
            let spec = l.data.spec();
            if col == 0 || col > spec.columns() {
                return Err(Error::Usage(format!("--column {col} is outside 1..={}", spec.columns())));
            }
            if pair.len() != 2 {
                return Err(Error::Usage("--pair takes two labels A,B".into()));
            }
            let labels = &spec_labels(spec)[col - 1];
            let find = |s: &String| {
                labels.iter().position(|l| l == s).ok_or_else(|| {
                    Error::Usage(format!("column {col} has no level '{s}' (levels: {})", labels.join(", ")))
                })
            };
            PairSelection::One { column: col - 1, a: find(&pair[0])?, b: find(&pair[1])? }
        }
        _ => PairSelection::All,
    };
    let estimator = l.estimator(a.data.estimator.into())?;
    let results = report::compute_cells(&l.data, &estimator)?;
    let rows = report::difference_rows(&l.data, &results, &a.data.factors, a.data.level, &selection)?;
    match Format::from(a.data.format) {
        Format::Csv => with_output(a.data.out.as_deref(), stdout, |w| report::write_csv_rows(w, &rows))?,
        Format::Json => {
            let doc = report::DifferenceReport {
                schema_version: SCHEMA_VERSION,
                command: "compare".into(),
                estimator: estimator.kind().name().into(),
                target_kernel: target_name(&a.data),
                confidence: a.data.level,
                differences: rows,
            };
            with_output(a.data.out.as_deref(), stdout, |w| report::write_json(w, &doc))?
        }
    }
    Ok(if report_cell_failures(&results, stderr) { exit::STATISTICAL } else { exit::OK })
}

fn check(name: String, passed: bool, value: f64, threshold: impl Into<String>, detail: impl Into<String>) -> CheckRow {
    CheckRow { name, passed, value: Some(value), threshold: threshold.into(), detail: detail.into() }
}

fn failed(name: String, e: impl std::fmt::Display) -> CheckRow {
    CheckRow { name, passed: false, value: None, threshold: String::new(), detail: e.to_string() }
}

/// Exact checks that need no sampling.
fn oracle_checks(model: &Model, target: &TransitionKernel) -> Vec<CheckRow> {
    let mut rows = Vec::new();
    for (label, kernel) in [("sampling", &model.kernel), ("target", target)] {
        let name = format!("{label}-kernel-mass");
        rows.push(match kernel.support_paths(None, DEFAULT_ENUMERATION_CAP) {
            Ok(paths) => {
                let err = (paths.iter().map(|(_, p)| p).sum::<f64>() - 1.0).abs();
                check(name, err <= 1e-10, err, "<= 1e-10", format!("{} support paths", paths.len()))
            }
            Err(e) => failed(name, e),
        });
    }
    let name = "measure-change".to_string();
    let mut worst = 0.0f64;
    let mut error = None;
    let mut nodes = 0;
    for node in model.spec.nodes() {
        match model.kernel.is_reachable(node) {
            Ok(true) => {}
            Ok(false) => continue,
            Err(e) => {
                error.get_or_insert(e);
                continue;
            }
        }
        nodes += 1;
        for f in [TestFunction::B, TestFunction::BSquared] {
            match verify_measure_change(&model.kernel, target, &model.quality, node, f) {
                Ok(r) => worst = worst.max(r),
                Err(e) => {
                    error.get_or_insert(e);
                }
            }
        }
    }
    rows.push(match error {
        Some(e) => failed(name, e),
        None => check(name, worst <= 1e-10, worst, "<= 1e-10", format!("{nodes} nodes, f in {{b, b^2}}")),
    });
    rows
}

/// Weighted with target = sampling must reproduce the naive estimates exactly.
fn identity_check(model: &Model, n: usize, seed: u64, pool: &rayon::ThreadPool) -> CheckRow {
    let name = "weighted-equals-naive".to_string();
    let data = match parallel::sample_dataset(&model.kernel, &model.quality, n, seed, pool) {
        Ok(d) => d,
        Err(e) => return failed(name, e),
    };
    let weighted = Estimator::Weighted { sampling: &model.kernel, target: &model.kernel };
    let (w, v) = match (weighted.estimate_all(&data), Estimator::Naive.estimate_all(&data)) {
        (Ok(w), Ok(v)) => (w, v),
        (Err(e), _) | (_, Err(e)) => return failed(name, e),
    };
    let mut mismatches = 0;
    let mut compared = 0;
    for ((_, a), (_, b)) in w.iter().zip(v.iter()) {
        if let (Ok(a), Ok(b)) = (a, b) {
            compared += 1;
            if a.mean.to_bits() != b.mean.to_bits() || a.raw_variance.to_bits() != b.raw_variance.to_bits() {
                mismatches += 1;
            }
        }
    }
    check(name, mismatches == 0, mismatches as f64, "= 0 mismatching cells", format!("{compared} cells, n = {n}"))
}

fn coverage_checks(exp: &Experiment, pool: &rayon::ThreadPool) -> Result<Vec<CheckRow>> {
    if exp.replicates < MIN_COVERAGE_REPLICATES {
        return Err(Error::Usage(format!(
            "coverage studies need at least {MIN_COVERAGE_REPLICATES} replicates"
        )));
    }
    // Binomial band with a 1% chance that any of the studies falls outside
    // it when every interval has exactly nominal coverage.
    let studies = (exp.estimators.len() * exp.nodes.len() * exp.moments.len()).max(1) as f64;
    let z = normal_quantile(1.0 - 0.01 / (2.0 * studies))?;
    let band = z * (exp.level * (1.0 - exp.level) / exp.replicates as f64).sqrt();
    let mut rows = Vec::new();
    for &kind in &exp.estimators {
        for &node in &exp.nodes {
            for &moment in &exp.moments {
                let name = format!("coverage-{}-{}-{}", kind.name(), moment.name(), node);
                let config = ExperimentConfig {
                    sampling: exp.model.kernel.clone(),
                    quality: exp.model.quality.clone(),
                    target: exp.target.clone(),
                    n: exp.n,
                    seed: exp.seed,
                    replicates: exp.replicates,
                    node,
                    estimator: kind,
                    moment,
                    level: exp.level,
                    av_source: AvSource::PlugIn,
                };
                rows.push(match parallel::coverage_study(&config, pool) {
                    Ok(rep) => {
                        let mut detail = format!(
                            "{} replicates used, {} skipped, n = {}, truth {:.6}",
                            rep.used, rep.skipped, exp.n, rep.truth
                        );
                        if let Some(e) = &rep.first_error {
                            detail.push_str(&format!("; first skip: {e}"));
                        }
                        let ok = rep.used > 0
                            && rep.skipped * 20 <= exp.replicates
                            && (rep.coverage - exp.level).abs() <= band;
                        check(name, ok, rep.coverage, format!("{} ± {:.4}", exp.level, band), detail)
                    }
                    Err(e) => failed(name, e),
                });
            }
        }
    }
    Ok(rows)
}

fn validate(a: &ValidateArgs, stdout: &mut dyn Write, _stderr: &mut dyn Write) -> Result<i32> {
    let exp = match &a.config {
        Some(path) => read_experiment(path)?,
        None => {
            check_level(a.level)?;
            let model = match &a.model {
                Some(p) => read_model(p)?,
                None => {
                    let (spec, kernel, quality) = correlated_2x2();
                    Model { spec, kernel, quality }
                }
            };
            let target = load_target(&a.target_kernel, FsPath::new("."), &model.spec.levels)?;
            let mut nodes = Vec::new();
            for node in model.spec.nodes() {
                if model.kernel.is_reachable(node)? {
                    nodes.push(node);
                }
            }
            Experiment {
                model,
                target,
                target_name: a.target_kernel.clone(),
                n: a.n,
                seed: a.seed,
                replicates: a.replicates,
                estimators: vec![EstimatorKind::Weighted, EstimatorKind::Plugin],
                level: a.level,
                nodes,
                moments: vec![Moment::Mean],
            }
        }
    };
    let pool = parallel::pool(a.threads)?;
    let mut checks = oracle_checks(&exp.model, &exp.target);
    checks.push(identity_check(&exp.model, exp.n, exp.seed, &pool));
    if !a.no_coverage {
        checks.extend(coverage_checks(&exp, &pool)?);
    }
    match Format::from(a.format) {
        Format::Csv => with_output(a.out.as_deref(), stdout, |w| report::write_csv_rows(w, &checks))?,
        Format::Json => {
            let doc = report::ValidateReport {
                schema_version: SCHEMA_VERSION,
                command: "validate".into(),
                checks: checks.clone(),
            };
            with_output(a.out.as_deref(), stdout, |w| report::write_json(w, &doc))?
        }
    }
    Ok(if checks.iter().all(|c| c.passed) { exit::OK } else { exit::CHECKS_FAILED })
}

fn read_rule(path: &FsPath) -> Result<DiscretizationRule> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let rule: DiscretizationRule = serde_json::from_str(&text).map_err(|e| Error::parse(path, e))?;
    if rule.breaks.len() != rule.groups + 1 || rule.breaks.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::parse(path, "breaks must be groups + 1 strictly increasing values"));
    }
    Ok(rule)
}

fn discretize(a: &DiscretizeArgs, stdout: &mut dyn Write) -> Result<i32> {
    let table = read_table(&a.data)?;
    let values = table.numeric_column(&a.column)?;
    let rule = match &a.apply {
        Some(p) => read_rule(p)?,
        None => quantile_discretize(&a.column, &values, a.groups)?,
    };
    let mut counts = vec![0usize; rule.groups];
    let mut groups = Vec::with_capacity(values.len());
    for (r, &x) in values.iter().enumerate() {
        let g = rule.assign(x).ok_or_else(|| {
            Error::Data(format!("row {}: value {x} of '{}' is outside the rule's range", r + 1, a.column))
        })?;
        counts[g] += 1;
        groups.push(g);
    }
    let name = a.name.clone().unwrap_or_else(|| format!("{}_group", a.column));
    if table.headers.contains(&name) {
        return Err(Error::Usage(format!("column '{name}' already exists; choose another --name")));
    }
    if let Some(path) = &a.rule {
        let doc = report::DiscretizeReport {
            schema_version: SCHEMA_VERSION,
            command: "discretize".into(),
            source: rule.source.clone(),
            groups: rule.groups,
            breaks: rule.breaks.clone(),
            counts,
        };
        with_output(Some(path), stdout, |w| report::write_json(w, &doc))?;
    }
    let mut out = Table { headers: table.headers.clone(), rows: table.rows.clone() };
    out.headers.push(name);
    for (row, g) in out.rows.iter_mut().zip(groups) {
        row.push((g + 1).to_string());
    }
    with_output(a.out.as_deref(), stdout, |w| {
        let mut csv = csv::Writer::from_writer(w);
        csv.write_record(&out.headers).map_err(|e| Error::Data(e.to_string()))?;
        for row in &out.rows {
            csv.write_record(row).map_err(|e| Error::Data(e.to_string()))?;
        }
        csv.flush().map_err(|e| Error::Data(e.to_string()))
    })?;
    Ok(exit::OK)
}

fn kernel(a: &KernelArgs, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<i32> {
    let table = read_table(&a.data)?;
    // The response is irrelevant here; a constant column stands in for it.
    let mut padded = table.clone();
    let dummy = "\u{0}response";
    padded.headers.push(dummy.into());
    for row in &mut padded.rows {
        row.push("0".into());
    }
    let data = load_dataset(&padded, &a.factors, dummy, None)?;
    let est = estimate_kernel(&data, a.smoothing)?;
    let labels = spec_labels(data.spec());
    let unobserved: Vec<String> = est.unobserved.iter().map(|n| n.to_string()).collect();
    for n in &est.unobserved {
        let _ = writeln!(stderr, "warning: node {n} was never observed; its outgoing row is filled uniformly");
    }
    let markov = a.check_markov.then(|| markov_discrepancy(&data));
    match Format::from(a.format) {
        Format::Json => {
            let doc = report::KernelReport {
                schema_version: SCHEMA_VERSION,
                command: "kernel".into(),
                records: data.len(),
                smoothing: a.smoothing,
                columns: data.spec().levels.clone(),
                labels,
                initial: est.kernel.initial().to_vec(),
                steps: est.kernel.steps().iter().map(|s| s.to_rows()).collect(),
                unobserved,
                markov_check: markov,
            };
            with_output(a.out.as_deref(), stdout, |w| report::write_json(w, &doc))?;
        }
        Format::Csv => {
            let mut rows = Vec::new();
            for (to, &p) in est.kernel.initial().iter().enumerate() {
                rows.push(report::KernelEntryRow {
                    step: 0,
                    from_level: None,
                    from_label: None,
                    to_level: to + 1,
                    to_label: labels[0][to].clone(),
                    probability: p,
                    from_observed: true,
                });
            }
            for (k, step) in est.kernel.steps().iter().enumerate() {
                for from in 0..step.rows() {
                    let observed = *est.visits.get(markov_anova_core::Node::new(from, k)).expect("in range") > 0;
                    for to in 0..step.cols() {
                        rows.push(report::KernelEntryRow {
                            step: k + 1,
                            from_level: Some(from + 1),
                            from_label: Some(labels[k][from].clone()),
                            to_level: to + 1,
                            to_label: labels[k + 1][to].clone(),
                            probability: step.get(from, to),
                            from_observed: observed,
                        });
                    }
                }
            }
            with_output(a.out.as_deref(), stdout, |w| report::write_csv_rows(w, &rows))?;
            if let Some(m) = &markov {
                for r in m {
                    let _ = writeln!(
                        stderr,
                        "markov check, step {}: max total variation {:.4}, mean {:.4}",
                        r.step, r.max_total_variation, r.mean_total_variation
                    );
                }
            }
        }
    }
    Ok(exit::OK)
}

