//! Per-node quality distributions `S(i,j)` and the path response moments they
//! imply.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use rand_distr::{Bernoulli, Distribution, Normal};

use crate::dag::{Node, NodeMatrix, Path};
use crate::error::{Error, Result};
use crate::kernel::TransitionKernel;

/// Highest moment order any computation here needs.
pub const MAX_ORDER: usize = 4;

#[derive(Debug, Clone, PartialEq)]
pub enum NodeDistribution {
    Gaussian { mean: f64, variance: f64 },
    Bernoulli { p: f64 },
    PointMass { value: f64 },
    /// Raw moments, `raw[k - 1] = E[S^k]`. Known only through its moments, so
    /// it cannot be sampled.
    EmpiricalMoments { raw: Vec<f64> },
}

impl NodeDistribution {
    /// Builds an [`NodeDistribution::EmpiricalMoments`] from the mean and the
    /// central moments of order 2, 3, 4 (any prefix of them).
    pub fn from_central(mean: f64, central: &[f64]) -> Self {
        // E[S^k] = Σ_m C(k,m) μ_m mean^(k-m) with μ_0 = 1, μ_1 = 0
        let mut mu = vec![1.0, 0.0];
        mu.extend_from_slice(central);
        let raw = (1..mu.len())
            .map(|k| {
                (0..=k)
                    .map(|m| binomial(k, m) * mu[m] * libm::pow(mean, (k - m) as f64))
                    .sum()
            })
            .collect();
        NodeDistribution::EmpiricalMoments { raw }
    }

    pub fn validate(&self) -> core::result::Result<(), alloc::string::String> {
        let finite = |x: f64, what: &str| {
            if x.is_finite() {
                Ok(())
            } else {
                Err(format!("{what} {x} is not finite"))
            }
        };
        match *self {
            NodeDistribution::Gaussian { mean, variance } => {
                finite(mean, "mean")?;
                finite(variance, "variance")?;
                if variance < 0.0 {
                    return Err(format!("variance {variance} is negative"));
                }
            }
            NodeDistribution::Bernoulli { p } => {
                if !(0.0..=1.0).contains(&p) {
                    return Err(format!("success probability {p} is outside [0, 1]"));
                }
            }
            NodeDistribution::PointMass { value } => finite(value, "value")?,
            NodeDistribution::EmpiricalMoments { ref raw } => {
                if raw.is_empty() {
                    return Err("no moments given".into());
                }
                if raw.len() > MAX_ORDER {
                    return Err(format!("{} moments given, at most {MAX_ORDER}", raw.len()));
                }
                for &m in raw {
                    finite(m, "moment")?;
                }
                let tol = 1e-12 * (1.0 + raw.iter().map(|m| m.abs()).fold(0.0, f64::max));
                if raw.len() >= 2 && raw[1] - raw[0] * raw[0] < -tol {
                    return Err("second moment is smaller than the squared mean".into());
                }
                if raw.len() >= 4 && raw[3] - raw[1] * raw[1] < -tol {
                    return Err("fourth moment is smaller than the squared second moment".into());
                }
            }
        }
        Ok(())
    }

    /// `[1, E S, E S², …, E S^order]`, or `None` if the moments are not known
    /// that far.
    pub fn raw_moments(&self, order: usize) -> Option<Vec<f64>> {
        let mut out = Vec::with_capacity(order + 1);
        out.push(1.0);
        match *self {
            NodeDistribution::Gaussian { mean: m, variance: v } => {
                if order > MAX_ORDER {
                    return None;
                }
                let all = [
                    m,
                    m * m + v,
                    m * m * m + 3.0 * m * v,
                    m * m * m * m + 6.0 * m * m * v + 3.0 * v * v,
                ];
                out.extend_from_slice(&all[..order]);
            }
            NodeDistribution::Bernoulli { p } => out.extend(core::iter::repeat_n(p, order)),
            NodeDistribution::PointMass { value } => {
                let mut acc = 1.0;
                for _ in 0..order {
                    acc *= value;
                    out.push(acc);
                }
            }
            NodeDistribution::EmpiricalMoments { ref raw } => {
                if order > raw.len() {
                    return None;
                }
                out.extend_from_slice(&raw[..order]);
            }
        }
        Some(out)
    }

    pub fn mean(&self) -> Option<f64> {
        self.raw_moments(1).map(|m| m[1])
    }

    pub fn variance(&self) -> Option<f64> {
        self.raw_moments(2).map(|m| m[2] - m[1] * m[1])
    }

    /// One draw, or `None` for [`NodeDistribution::EmpiricalMoments`].
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Option<f64> {
        match *self {
            NodeDistribution::Gaussian { mean, variance } => {
                let normal = Normal::new(mean, libm::sqrt(variance)).ok()?;
                Some(normal.sample(rng))
            }
            NodeDistribution::Bernoulli { p } => {
                let b = Bernoulli::new(p).ok()?;
                Some(if b.sample(rng) { 1.0 } else { 0.0 })
            }
            NodeDistribution::PointMass { value } => Some(value),
            NodeDistribution::EmpiricalMoments { .. } => None,
        }
    }
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, t| acc * (n - t) as f64 / (t + 1) as f64)
}

/// Distribution of `S(i,j)` for every node. Nodes the sampling kernel never
/// reaches may be left unspecified.
#[derive(Debug, Clone, PartialEq)]
pub struct QualityModel {
    nodes: NodeMatrix<Option<NodeDistribution>>,
}

impl QualityModel {
    pub fn empty(levels: &[usize]) -> Self {
        QualityModel { nodes: NodeMatrix::filled(levels, None) }
    }

    /// Gaussian nodes from grids indexed `[level][column]`. Entries of
    /// levels that a column does not have are ignored.
    pub fn gaussian_grid(levels: &[usize], means: &[Vec<f64>], variances: &[Vec<f64>]) -> Result<Self> {
        let mut model = QualityModel::empty(levels);
        let node_list: Vec<Node> = model.nodes.iter().map(|(n, _)| n).collect();
        for node in node_list {
            let fetch = |grid: &[Vec<f64>], what: &str| {
                grid.get(node.level)
                    .and_then(|row| row.get(node.column))
                    .copied()
                    .ok_or_else(|| Error::ShapeMismatch(format!("{what} grid has no entry for node {node}")))
            };
            let dist = NodeDistribution::Gaussian {
                mean: fetch(means, "mean")?,
                variance: fetch(variances, "variance")?,
            };
            model.set(node, dist)?;
        }
        Ok(model)
    }

    pub fn levels(&self) -> Vec<usize> {
        self.nodes.levels()
    }

    pub fn set(&mut self, node: Node, dist: NodeDistribution) -> Result<()> {
        dist.validate()
            .map_err(|e| Error::InvalidQuality(format!("node {node}: {e}")))?;
        let slot = self.nodes.get_mut(node).ok_or(Error::NodeOutOfRange(node))?;
        *slot = Some(dist);
        Ok(())
    }

    pub fn get(&self, node: Node) -> Option<&NodeDistribution> {
        self.nodes.get(node).and_then(Option::as_ref)
    }

    pub fn iter(&self) -> impl Iterator<Item = (Node, &NodeDistribution)> {
        self.nodes.iter().filter_map(|(n, d)| d.as_ref().map(|d| (n, d)))
    }

    /// Shapes agree and every node reachable under `kernel` has a distribution.
    pub fn validate_for(&self, kernel: &TransitionKernel) -> Result<()> {
        if self.nodes.levels() != kernel.levels() {
            return Err(Error::ShapeMismatch(format!(
                "quality model levels {:?} do not match kernel levels {:?}",
                self.nodes.levels(),
                kernel.levels()
            )));
        }
        let marginals = kernel.marginals();
        for (node, &mass) in marginals.iter() {
            if mass > crate::kernel::ZERO_TOL && self.get(node).is_none() {
                return Err(Error::MissingNodeValue(node));
            }
        }
        Ok(())
    }

    fn dist(&self, node: Node) -> Result<&NodeDistribution> {
        if self.nodes.get(node).is_none() {
            return Err(Error::NodeOutOfRange(node));
        }
        self.get(node).ok_or(Error::MissingNodeValue(node))
    }

    /// `[1, E b(p), …, E b(p)^order]` for the response along `path`.
    pub fn path_raw_moments(&self, path: &Path, order: usize) -> Result<Vec<f64>> {
        let mut acc = vec![0.0; order + 1];
        acc[0] = 1.0;
        for node in path.nodes() {
            let x = self
                .dist(node)?
                .raw_moments(order)
                .ok_or(Error::MissingMoments { node, order })?;
            // moments of (Y + X) for independent Y, X
            let mut next = vec![0.0; order + 1];
            for (k, slot) in next.iter_mut().enumerate() {
                *slot = (0..=k).map(|m| binomial(k, m) * acc[m] * x[k - m]).sum();
            }
            acc = next;
        }
        Ok(acc)
    }

    /// Draws one response along `path`, a fresh value for every node visited.
    pub fn sample_response<R: Rng + ?Sized>(&self, path: &Path, rng: &mut R) -> Result<f64> {
        let mut b = 0.0;
        for node in path.nodes() {
            b += self.dist(node)?.sample(rng).ok_or(Error::NotSamplable(node))?;
        }
        Ok(b)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dag::DagSpec;
    use crate::reference;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn gaussian_moments() {
        let d = NodeDistribution::Gaussian { mean: 2.0, variance: 3.0 };
        assert_eq!(d.raw_moments(4).unwrap(), vec![1.0, 2.0, 7.0, 26.0, 16.0 + 72.0 + 27.0]);
        assert!(d.raw_moments(5).is_none());
    }

    #[test]
    fn bernoulli_and_point_mass_moments() {
        let b = NodeDistribution::Bernoulli { p: 0.3 };
        assert_eq!(b.raw_moments(4).unwrap(), vec![1.0, 0.3, 0.3, 0.3, 0.3]);
        assert!((b.variance().unwrap() - 0.21).abs() < 1e-15);
        let pm = NodeDistribution::PointMass { value: -2.0 };
        assert_eq!(pm.raw_moments(4).unwrap(), vec![1.0, -2.0, 4.0, -8.0, 16.0]);
        assert_eq!(pm.variance(), Some(0.0));
    }

    #[test]
    fn central_to_raw() {
        let g = NodeDistribution::Gaussian { mean: 1.5, variance: 0.5 };
        let e = NodeDistribution::from_central(1.5, &[0.5, 0.0, 3.0 * 0.25]);
        let (a, b) = (g.raw_moments(4).unwrap(), e.raw_moments(4).unwrap());
        for k in 0..=4 {
            assert!((a[k] - b[k]).abs() < 1e-12, "order {k}");
        }
        assert!(e.raw_moments(2).is_some());
        let short = NodeDistribution::from_central(1.0, &[2.0]);
        assert_eq!(short.raw_moments(2).unwrap(), vec![1.0, 1.0, 3.0]);
        assert!(short.raw_moments(3).is_none());
    }

    #[test]
    fn validation() {
        assert!(NodeDistribution::Gaussian { mean: 0.0, variance: -1.0 }.validate().is_err());
        assert!(NodeDistribution::Bernoulli { p: 1.2 }.validate().is_err());
        assert!(NodeDistribution::PointMass { value: f64::NAN }.validate().is_err());
        assert!(NodeDistribution::EmpiricalMoments { raw: vec![2.0, 3.0] }.validate().is_err());
        assert!(NodeDistribution::EmpiricalMoments { raw: vec![] }.validate().is_err());
        assert!(NodeDistribution::EmpiricalMoments { raw: vec![1.0, 2.0, 0.0, 5.0] }.validate().is_ok());
    }

    #[test]
    fn path_moments_convolve() {
        let (_, _, quality) = reference::correlated_2x2();
        // path (2,2): S(2,1) ~ N(-2,1) + S(2,2) ~ N(2,1) = N(0,2)
        let m = quality.path_raw_moments(&Path::from_one_based(&[2, 2]), 4).unwrap();
        assert_eq!(m, vec![1.0, 0.0, 2.0, 0.0, 12.0]);
        // path (1,2): N(0,2) + N(2,1) = N(2,3)
        let m = quality.path_raw_moments(&Path::from_one_based(&[1, 2]), 2).unwrap();
        assert_eq!(m, vec![1.0, 2.0, 7.0]);
    }

    #[test]
    fn missing_nodes_are_reported() {
        let spec = DagSpec::new(vec![2, 2]).unwrap();
        let mut q = QualityModel::empty(&spec.levels);
        q.set(Node::new(0, 0), NodeDistribution::PointMass { value: 1.0 }).unwrap();
        let kernel = TransitionKernel::uniform(&spec).unwrap();
        assert!(matches!(q.validate_for(&kernel), Err(Error::MissingNodeValue(_))));
        assert_eq!(
            q.path_raw_moments(&Path::new(vec![0, 1]), 1),
            Err(Error::MissingNodeValue(Node::new(1, 1)))
        );
        assert!(q.set(Node::new(3, 0), NodeDistribution::PointMass { value: 1.0 }).is_err());
        q.set(Node::new(1, 1), NodeDistribution::EmpiricalMoments { raw: vec![1.0, 2.0] })
            .unwrap();
        assert_eq!(
            q.path_raw_moments(&Path::new(vec![0, 1]), 3),
            Err(Error::MissingMoments { node: Node::new(1, 1), order: 3 })
        );
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert_eq!(
            q.sample_response(&Path::new(vec![0, 1]), &mut rng),
            Err(Error::NotSamplable(Node::new(1, 1)))
        );
    }

    #[test]
    fn sampling_matches_moments() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let d = NodeDistribution::Gaussian { mean: -1.0, variance: 4.0 };
        let n = 200_000;
        let (mut s, mut s2) = (0.0, 0.0);
        for _ in 0..n {
            let x = d.sample(&mut rng).unwrap();
            s += x;
            s2 += x * x;
        }
        let mean = s / n as f64;
        assert!((mean + 1.0).abs() < 0.02);
        assert!((s2 / n as f64 - mean * mean - 4.0).abs() < 0.06);
        let b = NodeDistribution::Bernoulli { p: 0.25 };
        let hits = (0..n).filter(|_| b.sample(&mut rng).unwrap() == 1.0).count();
        assert!((hits as f64 / n as f64 - 0.25).abs() < 0.005);
    }
}
