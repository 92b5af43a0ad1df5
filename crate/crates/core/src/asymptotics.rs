//! Asymptotic variances of the weighted and plug-in estimators, their
//! data-driven plug-in versions, and Wald confidence intervals.
//!
//! With `N = |D_(i,j)|` records through a node, `√N (estimate − limit)` is
//! asymptotically normal with variance `value`.
//!
//! * Known sampling kernel, mean: `Var^Q[b·C | node]`.
//! * Known sampling kernel, variance: with `X = b·C`, `Y = b²·C` and
//!   `μ = E X`, the delta method applied to `Ȳ − X̄²` gives
//!   `Var Y − 4μ Cov(Y, X) + 4μ² Var X`.
//! * Estimated ratios, mean: `Σ_ℓ π_ℓ C_ℓ² Var b(q_ℓ)` over the support
//!   paths `q_ℓ` through the node, `π_ℓ` their conditional probabilities.
//! * Estimated ratios, variance:
//!   `Σ_ℓ π_ℓ C_ℓ² (Var b² − 4μ Cov(b², b) + 4μ² Var b)(q_ℓ)`, i.e. weight
//!   `−2μ C_ℓ` on the `b` block and `C_ℓ` on the `b²` block. With a single
//!   path and `C ≡ 1` this is `Var[(b − μ)²]`.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::dag::{Node, Path};
use crate::dataset::PathDataset;
use crate::error::{Error, PathList, Result};
use crate::estimators::{CellEstimate, Estimator, Moment, NodeAggregate};
use crate::kernel::{TransitionKernel, DEFAULT_ENUMERATION_CAP, ZERO_TOL};
use crate::quality::QualityModel;
use crate::stats::two_sided_z;

/// Relative tolerance for symmetric-PSD checks and negative round-off.
pub const PSD_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Regime {
    /// Sampling kernel known; exact measure-change ratios.
    KnownSampling,
    /// Sampling kernel unknown; ratios from observed path frequencies.
    UnknownSampling,
}

impl Regime {
    pub fn name(self) -> &'static str {
        match self {
            Regime::KnownSampling => "known-sampling",
            Regime::UnknownSampling => "unknown-sampling",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Components {
    /// `value = contraction · matrix · contractionᵀ`. For the mean the matrix
    /// is `[[Var(bC)]]` padded with zeros; for the variance it is
    /// `[[Var Y, 2μ Cov(Y,X)], [2μ Cov(Y,X), 4μ² Var X]]` with contraction
    /// `(1, −1)`.
    Known { matrix: [[f64; 2]; 2], contraction: [f64; 2] },
    /// `value = weights · covariance · weightsᵀ`; `covariance` is row-major
    /// and indexed by `paths` (mean), or by `paths` for the `b` block then
    /// `paths` again for the `b²` block (variance).
    Unknown { paths: Vec<Path>, weights: Vec<f64>, covariance: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct AsymptoticVariance {
    pub node: Node,
    pub moment: Moment,
    pub regime: Regime,
    pub value: f64,
    pub components: Components,
}

fn psd_2x2(a: f64, b: f64, c: f64) -> bool {
    let scale = a.abs().max(c.abs()).max(b.abs()).max(1.0);
    a >= -PSD_TOL * scale && c >= -PSD_TOL * scale && a * c - b * b >= -PSD_TOL * scale * scale
}

/// Clamps small negative round-off; refuses anything larger.
fn nonnegative(value: f64, scale: f64, what: &str) -> Result<f64> {
    if !value.is_finite() {
        return Err(Error::Numerical(format!("{what} is not finite")));
    }
    if value >= 0.0 {
        Ok(value)
    } else if value >= -PSD_TOL * scale.max(1.0) {
        Ok(0.0)
    } else {
        Err(Error::Numerical(format!("{what} is negative ({value})")))
    }
}

fn known(
    node: Node,
    moment: Moment,
    var_x: f64,
    var_y: f64,
    cov_yx: f64,
    mu: f64,
) -> Result<AsymptoticVariance> {
    let scale = var_x.abs() + var_y.abs() + cov_yx.abs() * (1.0 + mu.abs()) + 1.0;
    let var_x = nonnegative(var_x, scale, "variance of b·C")?;
    let (matrix, contraction, value) = match moment {
        Moment::Mean => ([[var_x, 0.0], [0.0, 0.0]], [1.0, 0.0], var_x),
        Moment::Variance => {
            let var_y = nonnegative(var_y, scale, "variance of b²·C")?;
            let off = 2.0 * mu * cov_yx;
            let corner = 4.0 * mu * mu * var_x;
            if !psd_2x2(var_y, off, corner) {
                return Err(Error::Numerical(format!(
                    "covariance of (b²C, bC) at node {node} is not positive semidefinite"
                )));
            }
            let v = var_y - 2.0 * off + corner;
            ([[var_y, off], [off, corner]], [1.0, -1.0], v)
        }
    };
    let scale = matrix.iter().flatten().map(|x| x.abs()).sum::<f64>();
    Ok(AsymptoticVariance {
        node,
        moment,
        regime: Regime::KnownSampling,
        value: nonnegative(value, scale, "asymptotic variance")?,
        components: Components::Known { matrix, contraction },
    })
}

/// Per-path ingredients of the estimated-ratio regime.
struct PathTerm {
    path: Path,
    prob: f64,
    ratio: f64,
    var_b: f64,
    cov_b2_b: f64,
    var_b2: f64,
}

fn unknown(node: Node, moment: Moment, mu: f64, terms: Vec<PathTerm>) -> Result<AsymptoticVariance> {
    let m = terms.len();
    let paths: Vec<Path> = terms.iter().map(|t| t.path.clone()).collect();
    let (weights, covariance, value) = match moment {
        Moment::Mean => {
            let mut cov = vec![0.0; m * m];
            let mut value = 0.0;
            for (l, t) in terms.iter().enumerate() {
                let scale = t.var_b.abs() + 1.0;
                let d = t.prob * nonnegative(t.var_b, scale, "path variance of b")?;
                cov[l * m + l] = d;
                value += t.ratio * t.ratio * d;
            }
            (terms.iter().map(|t| t.ratio).collect::<Vec<_>>(), cov, value)
        }
        Moment::Variance => {
            let k = 2 * m;
            let mut cov = vec![0.0; k * k];
            let mut weights = vec![0.0; k];
            let mut value = 0.0;
            for (l, t) in terms.iter().enumerate() {
                if !psd_2x2(t.var_b, t.cov_b2_b, t.var_b2) {
                    return Err(Error::Numerical(format!(
                        "covariance of (b, b²) on path {} is not positive semidefinite",
                        t.path
                    )));
                }
                let (a, b, c) = (t.prob * t.var_b.max(0.0), t.prob * t.cov_b2_b, t.prob * t.var_b2.max(0.0));
                cov[l * k + l] = a;
                cov[l * k + l + m] = b;
                cov[(l + m) * k + l] = b;
                cov[(l + m) * k + l + m] = c;
                let wb = -2.0 * mu * t.ratio;
                let wb2 = t.ratio;
                weights[l] = wb;
                weights[l + m] = wb2;
                value += wb * wb * a + 2.0 * wb * wb2 * b + wb2 * wb2 * c;
            }
            (weights, cov, value)
        }
    };
    let scale: f64 = covariance.iter().map(|x| x.abs()).sum::<f64>()
        * weights.iter().map(|w| w * w).fold(1.0, f64::max);
    Ok(AsymptoticVariance {
        node,
        moment,
        regime: Regime::UnknownSampling,
        value: nonnegative(value, scale, "asymptotic variance")?,
        components: Components::Unknown { paths, weights, covariance },
    })
}

/// Support paths through `node` with conditional sampling probability, exact
/// ratio and raw response moments up to `order`.
fn exact_terms(
    sampling: &TransitionKernel,
    target: &TransitionKernel,
    quality: &QualityModel,
    node: Node,
    order: usize,
) -> Result<Vec<(Path, f64, f64, Vec<f64>)>> {
    if !sampling.is_equivalent(target)? {
        return Err(Error::NotEquivalent);
    }
    let ms = sampling.node_marginal(node)?;
    let mt = target.node_marginal(node)?;
    if ms <= ZERO_TOL || mt <= ZERO_TOL {
        return Err(Error::NullEvent(node));
    }
    sampling
        .support_paths(Some(node), DEFAULT_ENUMERATION_CAP)?
        .into_iter()
        .map(|(path, prob)| {
            let pi = prob / ms;
            let ratio = target.path_probability(&path)? / mt / pi;
            let raw = quality.path_raw_moments(&path, order)?;
            Ok((path, pi, ratio, raw))
        })
        .collect()
}

fn order_for(moment: Moment) -> usize {
    match moment {
        Moment::Mean => 2,
        Moment::Variance => 4,
    }
}

/// Closed form for the weighted estimator with a known sampling kernel.
pub fn asym_var_known(
    sampling: &TransitionKernel,
    target: &TransitionKernel,
    quality: &QualityModel,
    node: Node,
    moment: Moment,
) -> Result<AsymptoticVariance> {
    let terms = exact_terms(sampling, target, quality, node, order_for(moment))?;
    let (mut ex, mut ex2, mut ey, mut ey2, mut exy) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for (_, pi, c, m) in &terms {
        ex += pi * c * m[1];
        ex2 += pi * c * c * m[2];
        if moment == Moment::Variance {
            ey += pi * c * m[2];
            ey2 += pi * c * c * m[4];
            exy += pi * c * c * m[3];
        }
    }
    known(node, moment, ex2 - ex * ex, ey2 - ey * ey, exy - ex * ey, ex)
}

/// Closed form for the plug-in estimator (sampling kernel unknown).
pub fn asym_var_unknown(
    sampling: &TransitionKernel,
    target: &TransitionKernel,
    quality: &QualityModel,
    node: Node,
    moment: Moment,
) -> Result<AsymptoticVariance> {
    let terms = exact_terms(sampling, target, quality, node, order_for(moment))?;
    let mu: f64 = terms.iter().map(|(_, pi, c, m)| pi * c * m[1]).sum();
    let terms = terms
        .into_iter()
        .map(|(path, prob, ratio, m)| {
            let (var_b2, cov_b2_b) = match moment {
                Moment::Mean => (0.0, 0.0),
                Moment::Variance => (m[4] - m[2] * m[2], m[3] - m[2] * m[1]),
            };
            PathTerm { path, prob, ratio, var_b: m[2] - m[1] * m[1], cov_b2_b, var_b2 }
        })
        .collect();
    unknown(node, moment, mu, terms)
}

pub fn asym_var_mean_known(
    sampling: &TransitionKernel,
    target: &TransitionKernel,
    quality: &QualityModel,
    node: Node,
) -> Result<AsymptoticVariance> {
    asym_var_known(sampling, target, quality, node, Moment::Mean)
}

pub fn asym_var_variance_known(
    sampling: &TransitionKernel,
    target: &TransitionKernel,
    quality: &QualityModel,
    node: Node,
) -> Result<AsymptoticVariance> {
    asym_var_known(sampling, target, quality, node, Moment::Variance)
}

pub fn asym_var_mean_unknown(
    sampling: &TransitionKernel,
    target: &TransitionKernel,
    quality: &QualityModel,
    node: Node,
) -> Result<AsymptoticVariance> {
    asym_var_unknown(sampling, target, quality, node, Moment::Mean)
}

pub fn asym_var_variance_unknown(
    sampling: &TransitionKernel,
    target: &TransitionKernel,
    quality: &QualityModel,
    node: Node,
) -> Result<AsymptoticVariance> {
    asym_var_unknown(sampling, target, quality, node, Moment::Variance)
}

/// Closed form matching `estimator`: naive (as a weighted estimator with
/// `C ≡ 1`), weighted, or plug-in. Naive and plug-in need the sampling kernel
/// here only because the closed form is a population quantity.
pub fn closed_form_asym_var(
    sampling: &TransitionKernel,
    estimator: &Estimator<'_>,
    quality: &QualityModel,
    node: Node,
    moment: Moment,
) -> Result<AsymptoticVariance> {
    match *estimator {
        Estimator::Naive => asym_var_known(sampling, sampling, quality, node, moment),
        Estimator::Weighted { target, .. } => asym_var_known(sampling, target, quality, node, moment),
        Estimator::Plugin { target } => asym_var_unknown(sampling, target, quality, node, moment),
    }
}

/// Data-driven estimate of the asymptotic variance of `estimator` at `node`:
/// population moments of the records replace the exact ones. Two passes over
/// the records.
pub fn plugin_asym_var(
    data: &PathDataset,
    estimator: &Estimator<'_>,
    node: Node,
    moment: Moment,
) -> Result<AsymptoticVariance> {
    estimator.check(&data.spec().levels)?;
    let agg = NodeAggregate::collect(data, node)?;
    let weights = estimator.weights(&agg)?;
    let est = estimator.estimate(&agg)?;
    let mu = est.mean;
    let n = agg.total as f64;
    let index = |path: &Path| agg.paths.keys().position(|p| p == path).expect("aggregated path");
    match estimator {
        Estimator::Naive | Estimator::Weighted { .. } => {
            let ey = weights.iter().zip(agg.paths.values()).map(|(w, s)| w * s.sum_sq).sum::<f64>() / n;
            let (mut vx, mut vy, mut cxy) = (0.0, 0.0, 0.0);
            for rec in data.iter().filter(|r| r.path.passes_through(node)) {
                let c = weights[index(&rec.path)];
                let dx = rec.response * c - mu;
                let dy = rec.response * rec.response * c - ey;
                vx += dx * dx;
                vy += dy * dy;
                cxy += dx * dy;
            }
            known(node, moment, vx / n, vy / n, cxy / n, mu)
        }
        Estimator::Plugin { target } => {
            let thin: Vec<Path> =
                agg.paths.iter().filter(|(_, s)| s.count < 2).map(|(p, _)| p.clone()).collect();
            if !thin.is_empty() {
                return Err(Error::InsufficientReplication { node, paths: PathList(thin) });
            }
            let m = agg.paths.len();
            let means: Vec<(f64, f64)> = agg
                .paths
                .values()
                .map(|s| (s.sum / s.count as f64, s.sum_sq / s.count as f64))
                .collect();
            let mut acc = vec![(0.0, 0.0, 0.0); m];
            for rec in data.iter().filter(|r| r.path.passes_through(node)) {
                let l = index(&rec.path);
                let db = rec.response - means[l].0;
                let db2 = rec.response * rec.response - means[l].1;
                acc[l].0 += db * db;
                acc[l].1 += db2 * db;
                acc[l].2 += db2 * db2;
            }
            let mut terms = Vec::with_capacity(m);
            for (l, (path, s)) in agg.paths.iter().enumerate() {
                let k = s.count as f64;
                let prob = k / n;
                let pt = target.conditional_path_probability(path, node)?;
                terms.push(PathTerm {
                    path: path.clone(),
                    prob,
                    ratio: pt / prob,
                    var_b: acc[l].0 / k,
                    cov_b2_b: acc[l].1 / k,
                    var_b2: acc[l].2 / k,
                });
            }
            unknown(node, moment, mu, terms)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConfidenceInterval {
    pub point: f64,
    pub lower: f64,
    pub upper: f64,
    pub level: f64,
    /// Records behind the estimate, `|D_(i,j)|`.
    pub count: usize,
}

impl ConfidenceInterval {
    pub fn contains(&self, x: f64) -> bool {
        self.lower <= x && x <= self.upper
    }

    pub fn half_width(&self) -> f64 {
        0.5 * (self.upper - self.lower)
    }
}

/// `point ± z · sqrt(av / count)`.
pub fn wald_interval(point: f64, av: f64, count: usize, level: f64) -> Result<ConfidenceInterval> {
    let z = two_sided_z(level)?;
    if count == 0 {
        return Err(Error::InvalidConfig("interval from zero records".into()));
    }
    if !(av >= 0.0) || !point.is_finite() {
        return Err(Error::Numerical(format!("cannot build interval from av {av}, point {point}")));
    }
    let h = z * libm::sqrt(av / count as f64);
    Ok(ConfidenceInterval { point, lower: point - h, upper: point + h, level, count })
}

pub fn confidence_interval(
    estimate: &CellEstimate,
    av: &AsymptoticVariance,
    level: f64,
) -> Result<ConfidenceInterval> {
    if estimate.node != av.node {
        return Err(Error::InvalidConfig(format!(
            "estimate at {} paired with asymptotic variance at {}",
            estimate.node, av.node
        )));
    }
    wald_interval(estimate.value(av.moment), av.value, estimate.count, level)
}

/// Interval for the difference of two cells estimated from disjoint records
/// (two levels of one column).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DifferenceInterval {
    pub point: f64,
    pub lower: f64,
    pub upper: f64,
    pub level: f64,
    pub standard_error: f64,
}

pub fn difference_interval(
    a: (&CellEstimate, &AsymptoticVariance),
    b: (&CellEstimate, &AsymptoticVariance),
    level: f64,
) -> Result<DifferenceInterval> {
    let z = two_sided_z(level)?;
    let moment = a.1.moment;
    if b.1.moment != moment {
        return Err(Error::InvalidConfig("differencing a mean with a variance".into()));
    }
    let point = a.0.value(moment) - b.0.value(moment);
    if a.0.node == b.0.node {
        return Ok(DifferenceInterval { point, lower: point, upper: point, level, standard_error: 0.0 });
    }
    let se = libm::sqrt(a.1.value / a.0.count as f64 + b.1.value / b.0.count as f64);
    Ok(DifferenceInterval { point, lower: point - z * se, upper: point + z * se, level, standard_error: se })
}
