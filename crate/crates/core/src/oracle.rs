//! Exact reference values by enumerating every supported path of a small DAG.

use alloc::vec;
use alloc::vec::Vec;

use crate::dag::{Node, NodeMatrix};
use crate::error::{Error, Result};
use crate::kernel::{TransitionKernel, DEFAULT_ENUMERATION_CAP, ZERO_TOL};
use crate::quality::{QualityModel, MAX_ORDER};

/// `[1, E[b | node], …, E[b^order | node]]` under `kernel`.
pub fn exact_conditional_moments(
    kernel: &TransitionKernel,
    quality: &QualityModel,
    node: Node,
    order: usize,
) -> Result<Vec<f64>> {
    if order > MAX_ORDER {
        return Err(Error::MissingMoments { node, order });
    }
    let marginal = kernel.node_marginal(node)?;
    if marginal <= ZERO_TOL {
        return Err(Error::NullEvent(node));
    }
    let mut acc = vec![0.0; order + 1];
    for (path, prob) in kernel.support_paths(Some(node), DEFAULT_ENUMERATION_CAP)? {
        let m = quality.path_raw_moments(&path, order)?;
        let w = prob / marginal;
        for (a, x) in acc.iter_mut().zip(&m) {
            *a += w * x;
        }
    }
    Ok(acc)
}

/// Function of the response checked by [`verify_measure_change`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TestFunction {
    B,
    BSquared,
}

impl TestFunction {
    fn order(self) -> usize {
        match self {
            TestFunction::B => 1,
            TestFunction::BSquared => 2,
        }
    }
}

/// `|E^Q[f·C | node] − E^Q̃[f | node]|`, each side by its own enumeration.
pub fn verify_measure_change(
    sampling: &TransitionKernel,
    target: &TransitionKernel,
    quality: &QualityModel,
    node: Node,
    f: TestFunction,
) -> Result<f64> {
    if !sampling.is_equivalent(target)? {
        return Err(Error::NotEquivalent);
    }
    let k = f.order();
    let ms = sampling.node_marginal(node)?;
    let mt = target.node_marginal(node)?;
    if ms <= ZERO_TOL || mt <= ZERO_TOL {
        return Err(Error::NullEvent(node));
    }
    let mut lhs = 0.0;
    for (path, prob) in sampling.support_paths(Some(node), DEFAULT_ENUMERATION_CAP)? {
        let cond_q = prob / ms;
        let cond_t = target.path_probability(&path)? / mt;
        let c = cond_t / cond_q;
        lhs += quality.path_raw_moments(&path, k)?[k] * c * cond_q;
    }
    let mut rhs = 0.0;
    for (path, prob) in target.support_paths(Some(node), DEFAULT_ENUMERATION_CAP)? {
        rhs += quality.path_raw_moments(&path, k)?[k] * prob / mt;
    }
    Ok((lhs - rhs).abs())
}

/// Almost-sure limits of the weighted and plug-in estimators: conditional
/// mean and variance of the response under the target kernel.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimatorTargets {
    /// `None` where the node is unreachable under the target.
    pub mean: NodeMatrix<Option<f64>>,
    pub variance: NodeMatrix<Option<f64>>,
}

impl EstimatorTargets {
    pub fn mean_difference(&self, column: usize, a: usize, b: usize) -> Option<f64> {
        Some((*self.mean.get(Node::new(a, column))?)? - (*self.mean.get(Node::new(b, column))?)?)
    }

    pub fn variance_difference(&self, column: usize, a: usize, b: usize) -> Option<f64> {
        Some(
            (*self.variance.get(Node::new(a, column))?)?
                - (*self.variance.get(Node::new(b, column))?)?,
        )
    }
}

pub fn exact_estimator_targets(
    sampling: &TransitionKernel,
    target: &TransitionKernel,
    quality: &QualityModel,
) -> Result<EstimatorTargets> {
    if !sampling.is_equivalent(target)? {
        return Err(Error::NotEquivalent);
    }
    let levels = target.levels().to_vec();
    let mut mean = NodeMatrix::filled(&levels, None);
    let mut variance = NodeMatrix::filled(&levels, None);
    for (node, &mass) in target.marginals().iter() {
        if mass <= ZERO_TOL {
            continue;
        }
        let m = exact_conditional_moments(target, quality, node, 2)?;
        *mean.get_mut(node).expect("in range") = Some(m[1]);
        *variance.get_mut(node).expect("in range") = Some(m[2] - m[1] * m[1]);
    }
    Ok(EstimatorTargets { mean, variance })
}
