//! Naive, measure-change (known sampling kernel) and plug-in (estimated
//! ratio) estimators of per-node response means and variances.
//!
//! Every estimator is a weighted sum over the distinct paths seen at a node:
//! with `N` records through the node, path `ℓ` seen `n_ℓ` times with response
//! sum `s_ℓ` and square sum `q_ℓ`, the mean is `Σ w_ℓ s_ℓ / N` and the
//! variance `Σ w_ℓ q_ℓ / N − mean²`. The naive estimator has `w ≡ 1`, the
//! weighted one the exact ratio `C(ℓ)` of conditional path probabilities,
//! and the plug-in one `Ĉ(ℓ) = P̃(ℓ | node) · N / n_ℓ`.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;
use core::fmt;

use crate::dag::{Node, NodeMatrix, Path};
use crate::dataset::PathDataset;
use crate::error::{Error, Result};
use crate::kernel::{TransitionKernel, ZERO_TOL};

/// Largest shortfall of target mass on observed paths tolerated by the
/// plug-in estimators.
pub const TARGET_MASS_TOL: f64 = 1e-9;

/// Per-node visit counts `V` and response sums `B`.
#[derive(Debug, Clone, PartialEq)]
pub struct CountMatrices {
    pub sums: NodeMatrix<f64>,
    pub visits: NodeMatrix<usize>,
}

pub fn accumulate_counts(data: &PathDataset) -> CountMatrices {
    let levels = &data.spec().levels;
    let mut sums = NodeMatrix::filled(levels, 0.0);
    let mut visits = NodeMatrix::filled(levels, 0usize);
    for rec in data {
        for node in rec.path.nodes() {
            *sums.get_mut(node).expect("validated path") += rec.response;
            *visits.get_mut(node).expect("validated path") += 1;
        }
    }
    CountMatrices { sums, visits }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PathStats {
    pub count: usize,
    pub sum: f64,
    pub sum_sq: f64,
}

/// Sufficient statistics of the records through one node, per distinct path.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeAggregate {
    pub node: Node,
    pub total: usize,
    pub paths: BTreeMap<Path, PathStats>,
}

impl NodeAggregate {
    pub fn new(node: Node) -> Self {
        NodeAggregate { node, total: 0, paths: BTreeMap::new() }
    }

    /// Collects the records of `data` through `node`.
    pub fn collect(data: &PathDataset, node: Node) -> Result<Self> {
        if !data.spec().contains(node) {
            return Err(Error::NodeOutOfRange(node));
        }
        let mut agg = NodeAggregate::new(node);
        for rec in data {
            if rec.path.passes_through(node) {
                agg.add(&rec.path, rec.response);
            }
        }
        Ok(agg)
    }

    /// Caller guarantees `path` passes through the node.
    pub fn add(&mut self, path: &Path, response: f64) {
        self.total += 1;
        let stats = match self.paths.get_mut(path) {
            Some(s) => s,
            None => self.paths.entry(path.clone()).or_default(),
        };
        stats.count += 1;
        stats.sum += response;
        stats.sum_sq += response * response;
    }

    /// Combines partial aggregates of disjoint record shards.
    pub fn merge(&mut self, other: &NodeAggregate) {
        debug_assert_eq!(self.node, other.node);
        self.total += other.total;
        for (path, s) in &other.paths {
            let e = self.paths.entry(path.clone()).or_default();
            e.count += s.count;
            e.sum += s.sum;
            e.sum_sq += s.sum_sq;
        }
    }
}

/// Aggregates for every node in one pass over the records.
pub fn aggregate_all(data: &PathDataset) -> NodeMatrix<NodeAggregate> {
    let mut out = NodeMatrix::from_fn(&data.spec().levels, NodeAggregate::new);
    for rec in data {
        for node in rec.path.nodes() {
            out.get_mut(node).expect("validated path").add(&rec.path, rec.response);
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EstimatorKind {
    Naive,
    Weighted,
    Plugin,
}

impl EstimatorKind {
    pub fn name(self) -> &'static str {
        match self {
            EstimatorKind::Naive => "naive",
            EstimatorKind::Weighted => "weighted",
            EstimatorKind::Plugin => "plugin",
        }
    }
}

impl fmt::Display for EstimatorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl core::str::FromStr for EstimatorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "naive" => Ok(EstimatorKind::Naive),
            "weighted" => Ok(EstimatorKind::Weighted),
            "plugin" => Ok(EstimatorKind::Plugin),
            other => Err(Error::InvalidConfig(alloc::format!("unknown estimator '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Moment {
    Mean,
    Variance,
}

impl Moment {
    pub fn name(self) -> &'static str {
        match self {
            Moment::Mean => "mean",
            Moment::Variance => "variance",
        }
    }
}

/// Which estimator to apply, with the kernels it needs.
#[derive(Debug, Clone, Copy)]
pub enum Estimator<'a> {
    Naive,
    /// Known sampling kernel; weights are exact measure-change ratios.
    Weighted { sampling: &'a TransitionKernel, target: &'a TransitionKernel },
    /// Unknown sampling kernel; ratios use observed path frequencies.
    Plugin { target: &'a TransitionKernel },
}

impl<'a> Estimator<'a> {
    pub fn kind(&self) -> EstimatorKind {
        match self {
            Estimator::Naive => EstimatorKind::Naive,
            Estimator::Weighted { .. } => EstimatorKind::Weighted,
            Estimator::Plugin { .. } => EstimatorKind::Plugin,
        }
    }

    pub fn target(&self) -> Option<&'a TransitionKernel> {
        match *self {
            Estimator::Naive => None,
            Estimator::Weighted { target, .. } | Estimator::Plugin { target } => Some(target),
        }
    }

    /// Shape and equivalence checks that do not depend on the node.
    pub fn check(&self, levels: &[usize]) -> Result<()> {
        let shape = |k: &TransitionKernel| {
            if k.levels() == levels {
                Ok(())
            } else {
                Err(Error::ShapeMismatch(alloc::format!(
                    "kernel levels {:?} do not match data levels {levels:?}",
                    k.levels()
                )))
            }
        };
        match self {
            Estimator::Naive => Ok(()),
            Estimator::Weighted { sampling, target } => {
                shape(sampling)?;
                shape(target)?;
                if sampling.is_equivalent(target)? {
                    Ok(())
                } else {
                    Err(Error::NotEquivalent)
                }
            }
            Estimator::Plugin { target } => shape(target),
        }
    }

    /// Weight of every distinct path in `agg`, in the aggregate's order.
    /// Assumes [`Estimator::check`] passed.
    pub fn weights(&self, agg: &NodeAggregate) -> Result<Vec<f64>> {
        let node = agg.node;
        if agg.total == 0 {
            return Err(Error::NoData(node));
        }
        match *self {
            Estimator::Naive => Ok(agg.paths.values().map(|_| 1.0).collect()),
            Estimator::Weighted { sampling, target } => agg
                .paths
                .keys()
                .map(|path| {
                    let q = sampling.conditional_path_probability(path, node)?;
                    if q <= ZERO_TOL {
                        return Err(Error::OutsideSupport { path: path.clone() });
                    }
                    Ok(target.conditional_path_probability(path, node)? / q)
                })
                .collect(),
            Estimator::Plugin { target } => {
                let n = agg.total as f64;
                let mut mass = 0.0;
                let mut out = Vec::with_capacity(agg.paths.len());
                for (path, stats) in &agg.paths {
                    let pt = target.conditional_path_probability(path, node)?;
                    if pt <= ZERO_TOL {
                        return Err(Error::TargetExcludesObservedPath { path: path.clone(), node });
                    }
                    mass += pt;
                    out.push(pt * n / stats.count as f64);
                }
                let missing = 1.0 - mass;
                if missing > TARGET_MASS_TOL {
                    return Err(Error::TargetMassUnobserved { node, missing });
                }
                Ok(out)
            }
        }
    }

    pub fn estimate(&self, agg: &NodeAggregate) -> Result<CellEstimate> {
        let w = self.weights(agg)?;
        let n = agg.total as f64;
        let mut first = 0.0;
        let mut second = 0.0;
        for (wl, s) in w.iter().zip(agg.paths.values()) {
            first += wl * s.sum;
            second += wl * s.sum_sq;
        }
        let mean = first / n;
        let raw_variance = second / n - mean * mean;
        let clipped = raw_variance < 0.0;
        Ok(CellEstimate {
            node: agg.node,
            count: agg.total,
            mean,
            variance: if clipped { 0.0 } else { raw_variance },
            raw_variance,
            kind: self.kind(),
            target: self.target().map(TransitionKernel::fingerprint),
            clipped,
        })
    }

    /// Estimate at one node of `data`.
    pub fn estimate_node(&self, data: &PathDataset, node: Node) -> Result<CellEstimate> {
        self.check(&data.spec().levels)?;
        self.estimate(&NodeAggregate::collect(data, node)?)
    }

    /// Estimates at every node; cells that cannot be estimated carry their
    /// error.
    pub fn estimate_all(&self, data: &PathDataset) -> Result<NodeMatrix<Result<CellEstimate>>> {
        self.check(&data.spec().levels)?;
        let aggs = aggregate_all(data);
        let cells = aggs.columns().iter().map(|col| col.iter().map(|a| self.estimate(a)).collect());
        Ok(NodeMatrix::from_columns(cells.collect()))
    }
}

/// Mean and variance estimate at one node.
#[derive(Debug, Clone, PartialEq)]
pub struct CellEstimate {
    pub node: Node,
    /// Records through the node, `|D_(i,j)|`.
    pub count: usize,
    pub mean: f64,
    /// Population-form variance, clipped at 0.
    pub variance: f64,
    /// Variance before clipping; weighted and plug-in forms can dip below 0.
    pub raw_variance: f64,
    pub kind: EstimatorKind,
    /// Fingerprint of the target kernel, if any.
    pub target: Option<u64>,
    pub clipped: bool,
}

impl CellEstimate {
    pub fn value(&self, moment: Moment) -> f64 {
        match moment {
            Moment::Mean => self.mean,
            Moment::Variance => self.variance,
        }
    }

    /// Variance with the `N / (N − 1)` correction; `None` for a single record.
    pub fn bessel_variance(&self) -> Option<f64> {
        (self.count > 1).then(|| self.variance * self.count as f64 / (self.count - 1) as f64)
    }
}

pub fn naive_mean(data: &PathDataset, node: Node) -> Result<f64> {
    Ok(Estimator::Naive.estimate_node(data, node)?.mean)
}

pub fn naive_variance(data: &PathDataset, node: Node) -> Result<f64> {
    Ok(Estimator::Naive.estimate_node(data, node)?.variance)
}

/// `C(p) = P̃(p | node) / P(p | node)`.
pub fn measure_change_ratio(
    sampling: &TransitionKernel,
    target: &TransitionKernel,
    path: &Path,
    node: Node,
) -> Result<f64> {
    if !sampling.is_equivalent(target)? {
        return Err(Error::NotEquivalent);
    }
    let q = sampling.conditional_path_probability(path, node)?;
    if q <= ZERO_TOL {
        return Err(Error::OutsideSupport { path: path.clone() });
    }
    Ok(target.conditional_path_probability(path, node)? / q)
}

pub fn weighted_mean(
    data: &PathDataset,
    sampling: &TransitionKernel,
    target: &TransitionKernel,
    node: Node,
) -> Result<f64> {
    Ok(Estimator::Weighted { sampling, target }.estimate_node(data, node)?.mean)
}

pub fn weighted_variance(
    data: &PathDataset,
    sampling: &TransitionKernel,
    target: &TransitionKernel,
    node: Node,
) -> Result<f64> {
    Ok(Estimator::Weighted { sampling, target }.estimate_node(data, node)?.variance)
}

/// `Ĉ(p) = P̃(p | node) · N / n_p` from the records of `data`.
pub fn empirical_ratio(
    data: &PathDataset,
    target: &TransitionKernel,
    path: &Path,
    node: Node,
) -> Result<f64> {
    let agg = NodeAggregate::collect(data, node)?;
    if agg.total == 0 {
        return Err(Error::NoData(node));
    }
    let stats = agg
        .paths
        .get(path)
        .ok_or_else(|| Error::ZeroEmpiricalFrequency { path: path.clone(), node })?;
    let pt = target.conditional_path_probability(path, node)?;
    Ok(pt * agg.total as f64 / stats.count as f64)
}

pub fn plugin_mean(data: &PathDataset, target: &TransitionKernel, node: Node) -> Result<f64> {
    Ok(Estimator::Plugin { target }.estimate_node(data, node)?.mean)
}

pub fn plugin_variance(data: &PathDataset, target: &TransitionKernel, node: Node) -> Result<f64> {
    Ok(Estimator::Plugin { target }.estimate_node(data, node)?.variance)
}

/// Estimate at level `a` minus estimate at level `b` of `column`.
pub fn pairwise_difference(
    data: &PathDataset,
    estimator: &Estimator<'_>,
    column: usize,
    a: usize,
    b: usize,
    moment: Moment,
) -> Result<f64> {
    let ea = estimator.estimate_node(data, Node::new(a, column))?;
    if a == b {
        return Ok(0.0);
    }
    let eb = estimator.estimate_node(data, Node::new(b, column))?;
    Ok(ea.value(moment) - eb.value(moment))
}
