//! Brute-force reference computations written independently of the library:
//! full Cartesian enumeration of paths and closed-form Gaussian path moments.

#![allow(dead_code)]

use markov_anova_core::kernel::TransitionKernel;
use markov_anova_core::quality::{NodeDistribution, QualityModel};
use markov_anova_core::{DagSpec, Node, Path};
use rand::Rng;

/// Every level combination, reachable or not.
pub fn all_paths(levels: &[usize]) -> Vec<Vec<usize>> {
    let mut out = vec![vec![]];
    for &r in levels {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                (0..r).map(move |l| {
                    let mut p = prefix.clone();
                    p.push(l);
                    p
                })
            })
            .collect();
    }
    out
}

pub fn prob(k: &TransitionKernel, path: &[usize]) -> f64 {
    let mut p = k.initial()[path[0]];
    for j in 1..path.len() {
        p *= k.step(j - 1).get(path[j - 1], path[j]);
    }
    p
}

/// `P(path | path[node.column] = node.level)` by summing the full product.
pub fn conditional(k: &TransitionKernel, path: &[usize], node: Node) -> f64 {
    if path[node.column] != node.level {
        return 0.0;
    }
    let total: f64 = all_paths(k.levels())
        .iter()
        .filter(|p| p[node.column] == node.level)
        .map(|p| prob(k, p))
        .sum();
    prob(k, path) / total
}

/// Gaussian node parameters, `[level][column]`.
#[derive(Clone, Debug)]
pub struct GaussianGrid {
    pub means: Vec<Vec<f64>>,
    pub variances: Vec<Vec<f64>>,
}

impl GaussianGrid {
    pub fn random<R: Rng>(levels: &[usize], rng: &mut R) -> Self {
        let rmax = *levels.iter().max().unwrap();
        let c = levels.len();
        GaussianGrid {
            means: (0..rmax).map(|_| (0..c).map(|_| rng.random_range(-3.0..3.0)).collect()).collect(),
            variances: (0..rmax).map(|_| (0..c).map(|_| rng.random_range(0.1..2.0)).collect()).collect(),
        }
    }

    pub fn model(&self, levels: &[usize]) -> QualityModel {
        let mut q = QualityModel::empty(levels);
        for (j, &r) in levels.iter().enumerate() {
            for i in 0..r {
                q.set(
                    Node::new(i, j),
                    NodeDistribution::Gaussian { mean: self.means[i][j], variance: self.variances[i][j] },
                )
                .unwrap();
            }
        }
        q
    }

    /// `E[b^k]` for k = 1..4 along `path`: b is Gaussian with summed
    /// parameters.
    pub fn path_moments(&self, path: &[usize]) -> [f64; 4] {
        let m: f64 = path.iter().enumerate().map(|(j, &i)| self.means[i][j]).sum();
        let v: f64 = path.iter().enumerate().map(|(j, &i)| self.variances[i][j]).sum();
        [m, m * m + v, m.powi(3) + 3.0 * m * v, m.powi(4) + 6.0 * m * m * v + 3.0 * v * v]
    }
}

/// `E[b^k | node]` under `k`, k = 1..4.
pub fn conditional_moments(k: &TransitionKernel, g: &GaussianGrid, node: Node) -> [f64; 4] {
    let mut acc = [0.0; 4];
    for p in all_paths(k.levels()) {
        let w = conditional(k, &p, node);
        if w == 0.0 {
            continue;
        }
        let m = g.path_moments(&p);
        for t in 0..4 {
            acc[t] += w * m[t];
        }
    }
    acc
}

pub fn spec(levels: &[usize]) -> DagSpec {
    DagSpec::new(levels.to_vec()).unwrap()
}

pub fn path(p: &[usize]) -> Path {
    Path::new(p.to_vec())
}

pub fn random_levels<R: Rng>(rng: &mut R, max_columns: usize, max_levels: usize) -> Vec<usize> {
    let c = rng.random_range(1..=max_columns);
    (0..c).map(|_| rng.random_range(1..=max_levels)).collect()
}
