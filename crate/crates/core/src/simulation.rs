//! Path and response sampling, replicated experiments, and Monte-Carlo
//! studies of interval coverage and asymptotic normality.
//!
//! Randomness is ChaCha8 throughout. A dataset with seed `s` is generated in
//! blocks of [`BLOCK_LEN`] records; block `k` uses stream `k` of the ChaCha8
//! generator keyed by `s`, so blocks can be produced in any order or in
//! parallel with identical results. Replicate `r` of an experiment with
//! master seed `m` uses dataset seed [`replicate_seed`]`(m, r)`.

use alloc::format;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::asymptotics::{closed_form_asym_var, plugin_asym_var, wald_interval};
use crate::dag::{DagSpec, Node, Path};
use crate::dataset::{PathDataset, Record};
use crate::error::{Error, Result};
use crate::estimators::{Estimator, EstimatorKind, Moment};
use crate::kernel::{StepMatrix, TransitionKernel};
use crate::oracle::exact_conditional_moments;
use crate::quality::QualityModel;
use crate::stats::{ks_distance_normal, summarize};

/// Records per independently seeded block.
pub const BLOCK_LEN: usize = 4096;

pub const MIN_COVERAGE_REPLICATES: usize = 100;
pub const MIN_ANSCOMBE_REPLICATES: usize = 500;

/// SplitMix64 finaliser of `master + golden · (index + 1)`.
pub fn replicate_seed(master: u64, index: u64) -> u64 {
    let mut z = master.wrapping_add(0x9e37_79b9_7f4a_7c15u64.wrapping_mul(index.wrapping_add(1)));
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Inverse-CDF draw from a probability vector. Zero entries are never chosen.
fn draw<R: Rng + ?Sized>(probs: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.random();
    let mut cum = 0.0;
    let mut last = 0;
    for (k, &p) in probs.iter().enumerate() {
        if p > 0.0 {
            cum += p;
            last = k;
            if u < cum {
                return k;
            }
        }
    }
    // u landed in the rounding gap above the last cumulative sum
    last
}

fn step_row(step: &StepMatrix, from: usize) -> &[f64] {
    step.row(from)
}

pub fn sample_path<R: Rng + ?Sized>(kernel: &TransitionKernel, rng: &mut R) -> Path {
    let mut levels = Vec::with_capacity(kernel.columns());
    let mut current = draw(kernel.initial(), rng);
    levels.push(current);
    for step in kernel.steps() {
        current = draw(step_row(step, current), rng);
        levels.push(current);
    }
    Path::new(levels)
}

/// Number of blocks needed for `n` records.
pub fn block_count(n: usize) -> usize {
    n.div_ceil(BLOCK_LEN)
}

/// Records of block `block` of the dataset with seed `seed` and size `n`.
pub fn sample_block(
    kernel: &TransitionKernel,
    quality: &QualityModel,
    n: usize,
    seed: u64,
    block: usize,
) -> Result<Vec<Record>> {
    let start = block * BLOCK_LEN;
    let len = n.saturating_sub(start).min(BLOCK_LEN);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(block as u64);
    let mut out = Vec::with_capacity(len);
    for _ in 0..len {
        let path = sample_path(kernel, &mut rng);
        let response = quality.sample_response(&path, &mut rng)?;
        out.push(Record { path, response });
    }
    Ok(out)
}

/// `n` independent records: a path from `kernel` and fresh node values for
/// the nodes it visits.
pub fn sample_dataset(
    kernel: &TransitionKernel,
    quality: &QualityModel,
    n: usize,
    seed: u64,
) -> Result<PathDataset> {
    quality.validate_for(kernel)?;
    let spec = DagSpec::new(kernel.levels().to_vec())?;
    let mut records = Vec::with_capacity(n);
    for block in 0..block_count(n) {
        records.extend(sample_block(kernel, quality, n, seed, block)?);
    }
    assemble(spec, records)
}

/// Wraps already validated records.
pub fn assemble(spec: DagSpec, records: Vec<Record>) -> Result<PathDataset> {
    PathDataset::from_records(spec, records)
}

/// How a replicate obtains the asymptotic variance behind its interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AvSource {
    /// Estimated from the replicate's own data.
    PlugIn,
    /// Exact value from the model.
    ClosedForm,
    Fixed(f64),
}

/// One repeated-sampling experiment at a single node.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub sampling: TransitionKernel,
    pub quality: QualityModel,
    pub target: TransitionKernel,
    pub n: usize,
    pub seed: u64,
    pub replicates: usize,
    pub node: Node,
    pub estimator: EstimatorKind,
    pub moment: Moment,
    pub level: f64,
    pub av_source: AvSource,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::InvalidConfig("n must be at least 1".into()));
        }
        if self.replicates == 0 {
            return Err(Error::InvalidConfig("replicates must be at least 1".into()));
        }
        if !(self.level > 0.0 && self.level < 1.0) {
            return Err(Error::InvalidLevel(self.level));
        }
        if self.target.levels() != self.sampling.levels() {
            return Err(Error::ShapeMismatch(format!(
                "target levels {:?} vs sampling levels {:?}",
                self.target.levels(),
                self.sampling.levels()
            )));
        }
        self.quality.validate_for(&self.sampling)?;
        let levels = self.sampling.levels();
        if self.node.column >= levels.len() || self.node.level >= levels[self.node.column] {
            return Err(Error::NodeOutOfRange(self.node));
        }
        if let AvSource::Fixed(v) = self.av_source {
            if !(v >= 0.0) {
                return Err(Error::InvalidConfig(format!("fixed asymptotic variance {v} is negative")));
            }
        }
        Ok(())
    }

    pub fn estimator(&self) -> Estimator<'_> {
        match self.estimator {
            EstimatorKind::Naive => Estimator::Naive,
            EstimatorKind::Weighted => Estimator::Weighted { sampling: &self.sampling, target: &self.target },
            EstimatorKind::Plugin => Estimator::Plugin { target: &self.target },
        }
    }

    /// Validates and computes the exact limit and closed-form asymptotic
    /// variance once for all replicates.
    pub fn prepare(&self) -> Result<PreparedExperiment<'_>> {
        self.validate()?;
        let limit_kernel = match self.estimator {
            EstimatorKind::Naive => &self.sampling,
            _ => &self.target,
        };
        let m = exact_conditional_moments(limit_kernel, &self.quality, self.node, 2)?;
        let truth = match self.moment {
            Moment::Mean => m[1],
            Moment::Variance => m[2] - m[1] * m[1],
        };
        let closed_av = closed_form_asym_var(
            &self.sampling,
            &self.estimator(),
            &self.quality,
            self.node,
            self.moment,
        )?
        .value;
        Ok(PreparedExperiment { config: self, truth, closed_av })
    }
}

#[derive(Debug, Clone)]
pub struct PreparedExperiment<'a> {
    pub config: &'a ExperimentConfig,
    /// Almost-sure limit of the estimator.
    pub truth: f64,
    pub closed_av: f64,
}

/// Result of one replicate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReplicateOutcome {
    pub index: usize,
    pub seed: u64,
    pub count: usize,
    /// Point estimate (variance estimates are not clipped here).
    pub estimate: f64,
    /// Asymptotic variance used for the interval.
    pub av: f64,
    pub covered: bool,
    /// `√count · (estimate − truth)`.
    pub scaled_error: f64,
    /// `scaled_error / √closed-form AV`; 0 when that AV is 0.
    pub standardized: f64,
}

impl PreparedExperiment<'_> {
    pub fn dataset(&self, index: usize) -> Result<PathDataset> {
        let c = self.config;
        sample_dataset(&c.sampling, &c.quality, c.n, replicate_seed(c.seed, index as u64))
    }

    pub fn run_replicate(&self, index: usize) -> Result<ReplicateOutcome> {
        let data = self.dataset(index)?;
        self.evaluate(index, &data)
    }

    /// Estimates on a replicate's dataset, however it was produced.
    pub fn evaluate(&self, index: usize, data: &PathDataset) -> Result<ReplicateOutcome> {
        let c = self.config;
        let estimator = c.estimator();
        let est = estimator.estimate_node(data, c.node)?;
        let estimate = match c.moment {
            Moment::Mean => est.mean,
            Moment::Variance => est.raw_variance,
        };
        let av = match c.av_source {
            AvSource::PlugIn => plugin_asym_var(data, &estimator, c.node, c.moment)?.value,
            AvSource::ClosedForm => self.closed_av,
            AvSource::Fixed(v) => v,
        };
        let ci = wald_interval(estimate, av, est.count, c.level)?;
        let scaled_error = libm::sqrt(est.count as f64) * (estimate - self.truth);
        let standardized =
            if self.closed_av > 0.0 { scaled_error / libm::sqrt(self.closed_av) } else { 0.0 };
        Ok(ReplicateOutcome {
            index,
            seed: replicate_seed(c.seed, index as u64),
            count: est.count,
            estimate,
            av,
            covered: ci.contains(self.truth),
            scaled_error,
            standardized,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoverageReport {
    pub truth: f64,
    pub level: f64,
    pub used: usize,
    /// Replicates whose estimate or interval could not be formed, with the
    /// first error seen.
    pub skipped: usize,
    pub first_error: Option<Error>,
    pub coverage: f64,
    pub outcomes: Vec<ReplicateOutcome>,
}

/// Aggregates per-replicate results given in replicate order.
pub fn summarize_coverage(
    prepared: &PreparedExperiment<'_>,
    results: Vec<Result<ReplicateOutcome>>,
) -> CoverageReport {
    let mut outcomes = Vec::with_capacity(results.len());
    let mut skipped = 0;
    let mut first_error = None;
    for r in results {
        match r {
            Ok(o) => outcomes.push(o),
            Err(e) => {
                skipped += 1;
                first_error.get_or_insert(e);
            }
        }
    }
    let hits = outcomes.iter().filter(|o| o.covered).count();
    let used = outcomes.len();
    CoverageReport {
        truth: prepared.truth,
        level: prepared.config.level,
        used,
        skipped,
        first_error,
        coverage: if used > 0 { hits as f64 / used as f64 } else { f64::NAN },
        outcomes,
    }
}

pub fn check_coverage_replicates(config: &ExperimentConfig) -> Result<()> {
    if config.replicates < MIN_COVERAGE_REPLICATES {
        return Err(Error::InvalidConfig(format!(
            "coverage study needs at least {MIN_COVERAGE_REPLICATES} replicates, got {}",
            config.replicates
        )));
    }
    Ok(())
}

pub fn check_anscombe_replicates(config: &ExperimentConfig) -> Result<()> {
    if config.replicates < MIN_ANSCOMBE_REPLICATES {
        return Err(Error::InvalidConfig(format!(
            "normality study needs at least {MIN_ANSCOMBE_REPLICATES} replicates, got {}",
            config.replicates
        )));
    }
    Ok(())
}

/// Sequential coverage study; the `markov-anova` crate runs the same
/// replicates in parallel.
pub fn coverage_study(config: &ExperimentConfig) -> Result<CoverageReport> {
    check_coverage_replicates(config)?;
    let prepared = config.prepare()?;
    let results = (0..config.replicates).map(|r| prepared.run_replicate(r)).collect();
    Ok(summarize_coverage(&prepared, results))
}

/// Distribution of the standardized statistic
/// `√|D| (estimate − limit) / √(closed-form AV)` across replicates.
#[derive(Debug, Clone, PartialEq)]
pub struct AnscombeReport {
    pub used: usize,
    pub skipped: usize,
    pub mean: f64,
    pub variance: f64,
    pub skewness: f64,
    pub ks_distance: f64,
    /// Variance of `√|D| (estimate − limit)`, to compare with the closed form.
    pub scaled_error_variance: f64,
    pub closed_av: f64,
    /// Closed-form AV is 0: the statistic is identically 0 and the
    /// normality diagnostics are meaningless.
    pub degenerate: bool,
}

pub fn summarize_anscombe(
    prepared: &PreparedExperiment<'_>,
    results: &[Result<ReplicateOutcome>],
) -> AnscombeReport {
    let ok: Vec<&ReplicateOutcome> = results.iter().filter_map(|r| r.as_ref().ok()).collect();
    let z: Vec<f64> = ok.iter().map(|o| o.standardized).collect();
    let scaled: Vec<f64> = ok.iter().map(|o| o.scaled_error).collect();
    let s = summarize(&z);
    let degenerate = prepared.closed_av <= 0.0;
    AnscombeReport {
        used: ok.len(),
        skipped: results.len() - ok.len(),
        mean: s.mean,
        variance: s.variance,
        skewness: s.skewness,
        ks_distance: if degenerate { f64::NAN } else { ks_distance_normal(&z) },
        scaled_error_variance: summarize(&scaled).variance,
        closed_av: prepared.closed_av,
        degenerate,
    }
}

pub fn anscombe_study(config: &ExperimentConfig) -> Result<AnscombeReport> {
    check_anscombe_replicates(config)?;
    let prepared = config.prepare()?;
    let results: Vec<_> = (0..config.replicates).map(|r| prepared.run_replicate(r)).collect();
    Ok(summarize_anscombe(&prepared, &results))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quality::NodeDistribution;
    use crate::reference;
    use alloc::vec;

    #[test]
    fn degenerate_kernel_yields_its_only_path() {
        let k = TransitionKernel::new(
            vec![0.0, 1.0],
            vec![vec![vec![1.0, 0.0, 0.0], vec![0.0, 0.0, 1.0]]],
        )
        .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..100 {
            assert_eq!(sample_path(&k, &mut rng), Path::new(vec![1, 2]));
        }
    }

    #[test]
    fn path_frequencies_match_kernel() {
        let (_, q, _) = reference::correlated_2x2();
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let n = 100_000;
        let mut counts = [0usize; 4];
        for _ in 0..n {
            let p = sample_path(&q, &mut rng);
            counts[p.level(0) * 2 + p.level(1)] += 1;
        }
        for (c, expect) in counts.iter().zip([0.375, 0.125, 0.125, 0.375]) {
            assert!((*c as f64 / n as f64 - expect).abs() < 0.005);
        }
    }

    #[test]
    fn datasets_are_reproducible() {
        let (_, q, quality) = reference::correlated_2x2();
        let a = sample_dataset(&q, &quality, 10_000, 9).unwrap();
        let b = sample_dataset(&q, &quality, 10_000, 9).unwrap();
        assert_eq!(a, b);
        let c = sample_dataset(&q, &quality, 10_000, 10).unwrap();
        assert_ne!(a, c);
        // blocks are independent of each other
        let first = sample_block(&q, &quality, 10_000, 9, 1).unwrap();
        assert_eq!(&a.records()[BLOCK_LEN..2 * BLOCK_LEN], first.as_slice());
        let short = sample_dataset(&q, &quality, 5000, 9).unwrap();
        assert_eq!(short.records(), &a.records()[..5000]);
    }

    #[test]
    fn point_mass_responses_are_path_sums() {
        let (spec, q, _) = reference::correlated_2x2();
        let mut quality = QualityModel::empty(&spec.levels);
        for node in spec.nodes() {
            let value = (node.level * 10 + node.column) as f64;
            quality.set(node, NodeDistribution::PointMass { value }).unwrap();
        }
        let d = sample_dataset(&q, &quality, 500, 1).unwrap();
        for r in &d {
            let expect: f64 = r.path.nodes().map(|n| (n.level * 10 + n.column) as f64).sum();
            assert_eq!(r.response, expect);
        }
    }

    #[test]
    fn replicate_seeds_differ() {
        let seeds: Vec<u64> = (0..1000).map(|i| replicate_seed(42, i)).collect();
        let mut sorted = seeds.clone();
        sorted.sort_unstable();
        sorted.dedup();
        assert_eq!(sorted.len(), seeds.len());
    }

    fn config(av_source: AvSource, level: f64) -> ExperimentConfig {
        let (spec, q, quality) = reference::correlated_2x2();
        ExperimentConfig {
            target: TransitionKernel::uniform(&spec).unwrap(),
            sampling: q,
            quality,
            n: 400,
            seed: 77,
            replicates: 100,
            node: Node::new(0, 1),
            estimator: EstimatorKind::Plugin,
            moment: Moment::Mean,
            level,
            av_source,
        }
    }

    #[test]
    fn huge_variance_covers_everything() {
        let report = coverage_study(&config(AvSource::Fixed(1e12), 0.95)).unwrap();
        assert_eq!(report.coverage, 1.0);
        assert_eq!(report.used, 100);
    }

    #[test]
    fn study_preconditions() {
        let mut c = config(AvSource::PlugIn, 0.95);
        c.replicates = 99;
        assert!(coverage_study(&c).is_err());
        c.replicates = 499;
        assert!(anscombe_study(&c).is_err());
        c.n = 0;
        assert!(c.validate().is_err());
    }

    #[test]
    fn deterministic_model_is_degenerate() {
        let (spec, q, _) = reference::correlated_2x2();
        let mut quality = QualityModel::empty(&spec.levels);
        for node in spec.nodes() {
            quality.set(node, NodeDistribution::PointMass { value: 1.0 }).unwrap();
        }
        let mut c = config(AvSource::ClosedForm, 0.95);
        c.sampling = q;
        c.quality = quality;
        c.replicates = 500;
        c.n = 50;
        let r = anscombe_study(&c).unwrap();
        assert!(r.degenerate);
        assert_eq!(r.mean, 0.0);
        assert_eq!(r.variance, 0.0);
    }
}
