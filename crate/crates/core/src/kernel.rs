//! Markov transition kernels over the layered DAG and the path measures they
//! induce.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::dag::{DagSpec, Node, NodeMatrix, Path};
use crate::dataset::PathDataset;
use crate::error::{Error, Result};

/// Entries at or below this are treated as zero for support and equivalence.
pub const ZERO_TOL: f64 = 1e-15;

/// Allowed deviation of a probability vector's sum from 1.
pub const STOCHASTIC_TOL: f64 = 1e-12;

/// Default bound on `Π r_j` for exhaustive path enumeration.
pub const DEFAULT_ENUMERATION_CAP: usize = 10_000_000;

/// Beyond this many columns path probabilities are accumulated in log-space.
const LOG_SPACE_COLUMNS: usize = 30;

/// Row-major stochastic matrix between consecutive columns.
#[derive(Debug, Clone, PartialEq)]
pub struct StepMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl StepMatrix {
    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, from: usize, to: usize) -> f64 {
        self.data[from * self.cols + to]
    }

    pub fn row(&self, from: usize) -> &[f64] {
        &self.data[from * self.cols..(from + 1) * self.cols]
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.data.chunks(self.cols).map(<[f64]>::to_vec).collect()
    }
}

/// Initial distribution over column 1 plus one stochastic matrix per step
/// `j → j+1`. The hop from the last column to the sink has probability 1 and
/// is not stored.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionKernel {
    levels: Vec<usize>,
    initial: Vec<f64>,
    steps: Vec<StepMatrix>,
}

fn check_distribution(values: &[f64], what: &dyn core::fmt::Display) -> Result<()> {
    if let Some(v) = values.iter().find(|v| !v.is_finite() || **v < 0.0) {
        return Err(Error::InvalidKernel(format!("{what} has invalid entry {v}")));
    }
    let sum: f64 = values.iter().sum();
    if (sum - 1.0).abs() > STOCHASTIC_TOL {
        return Err(Error::InvalidKernel(format!("{what} sums to {sum}, not 1")));
    }
    Ok(())
}

impl TransitionKernel {
    /// `steps[k][from][to]` is the probability of moving from level `from` of
    /// column `k` to level `to` of column `k + 1`.
    pub fn new(initial: Vec<f64>, steps: Vec<Vec<Vec<f64>>>) -> Result<Self> {
        if initial.is_empty() {
            return Err(Error::InvalidKernel("initial distribution is empty".into()));
        }
        check_distribution(&initial, &"initial distribution")?;
        let mut levels = vec![initial.len()];
        let mut matrices = Vec::with_capacity(steps.len());
        for (k, rows) in steps.into_iter().enumerate() {
            let expected_rows = levels[k];
            if rows.len() != expected_rows {
                return Err(Error::ShapeMismatch(format!(
                    "step {} has {} rows, expected {expected_rows}",
                    k + 1,
                    rows.len()
                )));
            }
            let cols = rows.first().map_or(0, Vec::len);
            if cols == 0 {
                return Err(Error::InvalidKernel(format!("step {} has no columns", k + 1)));
            }
            let mut data = Vec::with_capacity(expected_rows * cols);
            for (from, row) in rows.into_iter().enumerate() {
                if row.len() != cols {
                    return Err(Error::ShapeMismatch(format!(
                        "step {} row {} has {} entries, expected {cols}",
                        k + 1,
                        from + 1,
                        row.len()
                    )));
                }
                check_distribution(
                    &row,
                    &format_args!("step {} row {}", k + 1, from + 1),
                )?;
                data.extend(row);
            }
            levels.push(cols);
            matrices.push(StepMatrix { rows: expected_rows, cols, data });
        }
        Ok(TransitionKernel { levels, initial, steps: matrices })
    }

    /// Independent uniform choice in every column.
    pub fn uniform(spec: &DagSpec) -> Result<Self> {
        let spec = spec.clone().checked()?;
        let r = &spec.levels;
        let initial = vec![1.0 / r[0] as f64; r[0]];
        let steps = r
            .windows(2)
            .map(|w| vec![vec![1.0 / w[1] as f64; w[1]]; w[0]])
            .collect();
        TransitionKernel::new(initial, steps)
    }

    pub fn levels(&self) -> &[usize] {
        &self.levels
    }

    pub fn columns(&self) -> usize {
        self.levels.len()
    }

    pub fn initial(&self) -> &[f64] {
        &self.initial
    }

    /// Transition matrix from column `k` to column `k + 1`.
    pub fn step(&self, k: usize) -> &StepMatrix {
        &self.steps[k]
    }

    pub fn steps(&self) -> &[StepMatrix] {
        &self.steps
    }

    pub fn check_spec(&self, spec: &DagSpec) -> Result<()> {
        if spec.levels != self.levels {
            return Err(Error::ShapeMismatch(format!(
                "kernel levels {:?} do not match DAG levels {:?}",
                self.levels, spec.levels
            )));
        }
        Ok(())
    }

    fn check_same_shape(&self, other: &TransitionKernel) -> Result<()> {
        if self.levels != other.levels {
            return Err(Error::ShapeMismatch(format!(
                "kernel levels {:?} vs {:?}",
                self.levels, other.levels
            )));
        }
        Ok(())
    }

    fn check_node(&self, node: Node) -> Result<()> {
        if node.column < self.levels.len() && node.level < self.levels[node.column] {
            Ok(())
        } else {
            Err(Error::NodeOutOfRange(node))
        }
    }

    /// Probability of the `k`-th hop of `path` (hop 0 leaves the source).
    fn hop(&self, path: &Path, k: usize) -> f64 {
        if k == 0 {
            self.initial[path.level(0)]
        } else {
            self.steps[k - 1].get(path.level(k - 1), path.level(k))
        }
    }

    /// Natural log of the path probability; `-inf` off the support.
    pub fn ln_path_probability(&self, path: &Path) -> Result<f64> {
        path.validate(&self.levels)?;
        let mut acc = 0.0;
        for k in 0..path.len() {
            let q = self.hop(path, k);
            if q <= 0.0 {
                return Ok(f64::NEG_INFINITY);
            }
            acc += libm::log(q);
        }
        Ok(acc)
    }

    pub fn path_probability(&self, path: &Path) -> Result<f64> {
        if self.levels.len() > LOG_SPACE_COLUMNS {
            return Ok(libm::exp(self.ln_path_probability(path)?));
        }
        path.validate(&self.levels)?;
        Ok((0..path.len()).map(|k| self.hop(path, k)).product())
    }

    /// Law of the chain at every column, by forward propagation.
    pub fn marginals(&self) -> NodeMatrix<f64> {
        let mut columns = Vec::with_capacity(self.levels.len());
        let mut current = self.initial.clone();
        for step in &self.steps {
            let mut next = vec![0.0; step.cols];
            for (from, &mass) in current.iter().enumerate() {
                if mass == 0.0 {
                    continue;
                }
                for (to, q) in step.row(from).iter().enumerate() {
                    next[to] += mass * q;
                }
            }
            columns.push(core::mem::replace(&mut current, next));
        }
        columns.push(current);
        NodeMatrix::from_columns(columns)
    }

    pub fn node_marginal(&self, node: Node) -> Result<f64> {
        self.check_node(node)?;
        let mut current = self.initial.clone();
        for step in &self.steps[..node.column] {
            let mut next = vec![0.0; step.cols];
            for (from, &mass) in current.iter().enumerate() {
                for (to, q) in step.row(from).iter().enumerate() {
                    next[to] += mass * q;
                }
            }
            current = next;
        }
        Ok(current[node.level])
    }

    pub fn is_reachable(&self, node: Node) -> Result<bool> {
        Ok(self.node_marginal(node)? > ZERO_TOL)
    }

    /// `P(path | path passes through node)`; zero when the path misses the node.
    pub fn conditional_path_probability(&self, path: &Path, node: Node) -> Result<f64> {
        let marginal = self.node_marginal(node)?;
        if marginal <= ZERO_TOL {
            return Err(Error::NullEvent(node));
        }
        path.validate(&self.levels)?;
        if !path.passes_through(node) {
            return Ok(0.0);
        }
        if self.levels.len() > LOG_SPACE_COLUMNS {
            let ln = self.ln_path_probability(path)? - libm::log(marginal);
            return Ok(libm::exp(ln));
        }
        Ok(self.path_probability(path)? / marginal)
    }

    /// All positive-probability paths, optionally restricted to those through
    /// `through`, with their (unconditional) probabilities.
    pub fn support_paths(&self, through: Option<Node>, cap: usize) -> Result<Vec<(Path, f64)>> {
        if let Some(node) = through {
            self.check_node(node)?;
        }
        let candidates = self
            .levels
            .iter()
            .fold(1u128, |acc, &r| acc.saturating_mul(r as u128));
        if candidates > cap as u128 {
            return Err(Error::EnumerationCap { paths: candidates, cap });
        }
        let c = self.levels.len();
        let allowed = |column: usize, level: usize| match through {
            Some(n) if n.column == column => n.level == level,
            _ => true,
        };
        let mut out = Vec::new();
        let mut levels = vec![0usize; c];
        // (column, level, probability of the prefix ending here)
        let mut stack: Vec<(usize, usize, f64)> = Vec::new();
        for (level, &q) in self.initial.iter().enumerate().rev() {
            if q > ZERO_TOL && allowed(0, level) {
                stack.push((0, level, q));
            }
        }
        while let Some((column, level, prob)) = stack.pop() {
            levels[column] = level;
            if column + 1 == c {
                out.push((Path::new(levels.clone()), prob));
                continue;
            }
            let row = self.steps[column].row(level);
            for (to, &q) in row.iter().enumerate().rev() {
                if q > ZERO_TOL && allowed(column + 1, to) {
                    stack.push((column + 1, to, prob * q));
                }
            }
        }
        Ok(out)
    }

    /// Same support pattern entry by entry.
    pub fn is_equivalent(&self, other: &TransitionKernel) -> Result<bool> {
        self.check_same_shape(other)?;
        let same = |a: &[f64], b: &[f64]| {
            a.iter().zip(b).all(|(x, y)| (*x > ZERO_TOL) == (*y > ZERO_TOL))
        };
        Ok(same(&self.initial, &other.initial)
            && self.steps.iter().zip(&other.steps).all(|(a, b)| same(&a.data, &b.data)))
    }

    /// Whether levels `a` and `b` of `column` have identical incoming and
    /// outgoing transition probabilities. For such a pair the unweighted
    /// sample means are already consistent for the difference of node means.
    pub fn column_exchangeable(&self, column: usize, a: usize, b: usize) -> Result<bool> {
        for level in [a, b] {
            let node = Node::new(level, column);
            if !self.is_reachable(node)? {
                return Err(Error::NullEvent(node));
            }
        }
        const TOL: f64 = 1e-12;
        let close = |x: f64, y: f64| (x - y).abs() <= TOL;
        let incoming = if column == 0 {
            close(self.initial[a], self.initial[b])
        } else {
            let step = &self.steps[column - 1];
            (0..step.rows).all(|from| close(step.get(from, a), step.get(from, b)))
        };
        let outgoing = match self.steps.get(column) {
            Some(step) => step.row(a).iter().zip(step.row(b)).all(|(x, y)| close(*x, *y)),
            None => true,
        };
        Ok(incoming && outgoing)
    }

    /// FNV-1a hash of the shape and entry bits; identifies a kernel in reports.
    pub fn fingerprint(&self) -> u64 {
        const OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
        const PRIME: u64 = 0x0000_0100_0000_01b3;
        let mut h = OFFSET;
        let mut eat = |x: u64| {
            for b in x.to_le_bytes() {
                h ^= b as u64;
                h = h.wrapping_mul(PRIME);
            }
        };
        for &r in &self.levels {
            eat(r as u64);
        }
        for &q in &self.initial {
            eat(q.to_bits());
        }
        for s in &self.steps {
            for &q in &s.data {
                eat(q.to_bits());
            }
        }
        h
    }
}

/// Kernel fitted to data, with the nodes that were never visited.
///
/// Rows leaving unvisited nodes are filled uniformly so the kernel stays
/// stochastic; those nodes still carry zero mass unless smoothing is used,
/// and [`EstimatedKernel::check_observed`] refuses them either way.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimatedKernel {
    pub kernel: TransitionKernel,
    pub visits: NodeMatrix<usize>,
    pub unobserved: Vec<Node>,
}

impl EstimatedKernel {
    pub fn check_observed(&self, node: Node) -> Result<()> {
        if self.unobserved.contains(&node) {
            Err(Error::UnobservedNode(node))
        } else {
            Ok(())
        }
    }
}

/// Empirical transition frequencies, with optional additive smoothing
/// `alpha` (0 gives the raw frequencies).
pub fn estimate_kernel(data: &PathDataset, alpha: f64) -> Result<EstimatedKernel> {
    if !(alpha >= 0.0 && alpha.is_finite()) {
        return Err(Error::InvalidConfig(format!("smoothing {alpha} must be finite and >= 0")));
    }
    let levels = data.spec().levels.clone();
    if data.is_empty() && alpha == 0.0 {
        return Err(Error::InvalidData("cannot estimate a kernel from an empty dataset".into()));
    }
    let mut visits = NodeMatrix::filled(&levels, 0usize);
    let mut transitions: Vec<Vec<f64>> = levels
        .windows(2)
        .map(|w| vec![0.0; w[0] * w[1]])
        .collect();
    for rec in data {
        for node in rec.path.nodes() {
            *visits.get_mut(node).expect("validated path") += 1;
        }
        for (k, w) in rec.path.levels().windows(2).enumerate() {
            transitions[k][w[0] * levels[k + 1] + w[1]] += 1.0;
        }
    }
    let r0 = levels[0] as f64;
    let total = data.len() as f64 + alpha * r0;
    let initial = visits.column(0).iter().map(|&v| (v as f64 + alpha) / total).collect();
    let mut steps = Vec::with_capacity(levels.len().saturating_sub(1));
    for (k, counts) in transitions.iter().enumerate() {
        let cols = levels[k + 1];
        let rows = counts
            .chunks(cols)
            .map(|row| {
                let row_total: f64 = row.iter().sum::<f64>() + alpha * cols as f64;
                if row_total == 0.0 {
                    vec![1.0 / cols as f64; cols]
                } else {
                    row.iter().map(|c| (c + alpha) / row_total).collect()
                }
            })
            .collect();
        steps.push(rows);
    }
    let kernel = TransitionKernel::new(initial, steps)?;
    let unobserved = visits.iter().filter(|(_, &v)| v == 0).map(|(n, _)| n).collect();
    Ok(EstimatedKernel { kernel, visits, unobserved })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reference;

    fn p(levels: &[usize]) -> Path {
        Path::from_one_based(levels)
    }

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn rejects_bad_kernels() {
        assert!(TransitionKernel::new(vec![0.5, 0.6], vec![]).is_err());
        assert!(TransitionKernel::new(vec![1.0, -0.0], vec![]).is_ok());
        assert!(TransitionKernel::new(vec![1.5, -0.5], vec![]).is_err());
        assert!(matches!(
            TransitionKernel::new(vec![1.0], vec![vec![vec![0.5, 0.5], vec![0.5, 0.5]]]),
            Err(Error::ShapeMismatch(_))
        ));
        assert!(TransitionKernel::new(vec![1.0], vec![vec![vec![0.5, 0.4]]]).is_err());
        assert!(TransitionKernel::new(vec![1.0], vec![vec![vec![0.5, 0.5 + 1e-13]]]).is_ok());
    }

    #[test]
    fn uniform_examples() {
        let u = TransitionKernel::uniform(&DagSpec::new(vec![2, 2]).unwrap()).unwrap();
        assert_eq!(u.initial(), &[0.5, 0.5]);
        assert_eq!(u.step(0).to_rows(), vec![vec![0.5, 0.5], vec![0.5, 0.5]]);
        let u = TransitionKernel::uniform(&DagSpec::new(vec![4, 3]).unwrap()).unwrap();
        for row in u.step(0).to_rows() {
            assert_eq!(row, vec![1.0 / 3.0; 3]);
        }
        let spec = DagSpec::new(vec![4, 3, 2, 4]).unwrap();
        let u = TransitionKernel::uniform(&spec).unwrap();
        for (path, prob) in u.support_paths(None, DEFAULT_ENUMERATION_CAP).unwrap() {
            assert!(close(prob, 1.0 / 96.0, 1e-15), "{path}");
            assert!(close(u.path_probability(&path).unwrap(), 1.0 / 96.0, 1e-15));
        }
    }

    #[test]
    fn path_probability_examples() {
        let (_, q, _) = reference::correlated_2x2();
        assert_eq!(q.path_probability(&p(&[1, 1])).unwrap(), 0.375);
        assert_eq!(q.path_probability(&p(&[1, 2])).unwrap(), 0.125);
        let u = TransitionKernel::uniform(&DagSpec::new(vec![2, 2]).unwrap()).unwrap();
        for path in [[1, 1], [1, 2], [2, 1], [2, 2]] {
            assert_eq!(u.path_probability(&p(&path)).unwrap(), 0.25);
        }
        assert!(q.path_probability(&p(&[1])).is_err());
    }

    #[test]
    fn marginal_examples() {
        let (_, q, _) = reference::correlated_2x2();
        assert_eq!(q.node_marginal(Node::new(0, 1)).unwrap(), 0.5);
        assert_eq!(q.node_marginal(Node::new(0, 0)).unwrap(), 0.5);
        let spec = DagSpec::new(vec![4, 3, 2, 4]).unwrap();
        let u = TransitionKernel::uniform(&spec).unwrap();
        for node in spec.nodes() {
            let r = spec.levels[node.column] as f64;
            assert!(close(u.node_marginal(node).unwrap(), 1.0 / r, 1e-15));
        }
        assert!(matches!(q.node_marginal(Node::new(2, 0)), Err(Error::NodeOutOfRange(_))));
        assert_eq!(q.marginals().column(1), &[0.5, 0.5]);
    }

    #[test]
    fn conditional_examples() {
        let (_, q, _) = reference::correlated_2x2();
        let node = Node::new(0, 1);
        assert_eq!(q.conditional_path_probability(&p(&[1, 1]), node).unwrap(), 0.75);
        assert_eq!(q.conditional_path_probability(&p(&[2, 1]), node).unwrap(), 0.25);
        assert_eq!(q.conditional_path_probability(&p(&[2, 2]), node).unwrap(), 0.0);

        let blocked =
            TransitionKernel::new(vec![1.0, 0.0], vec![vec![vec![0.5, 0.5], vec![0.5, 0.5]]])
                .unwrap();
        assert_eq!(
            blocked.conditional_path_probability(&p(&[2, 1]), Node::new(1, 0)),
            Err(Error::NullEvent(Node::new(1, 0)))
        );
    }

    #[test]
    fn support_examples() {
        let (_, q, _) = reference::correlated_2x2();
        let all = q.support_paths(None, DEFAULT_ENUMERATION_CAP).unwrap();
        let probs: Vec<f64> = all.iter().map(|(_, pr)| *pr).collect();
        assert_eq!(probs, vec![0.375, 0.125, 0.125, 0.375]);

        let through = q.support_paths(Some(Node::new(0, 1)), DEFAULT_ENUMERATION_CAP).unwrap();
        assert_eq!(through.len(), 2);
        assert_eq!(through.iter().map(|(_, pr)| pr).sum::<f64>(), 0.5);

        let gap =
            TransitionKernel::new(vec![0.5, 0.5], vec![vec![vec![1.0, 0.0], vec![0.5, 0.5]]])
                .unwrap();
        let paths: Vec<Path> = gap
            .support_paths(None, DEFAULT_ENUMERATION_CAP)
            .unwrap()
            .into_iter()
            .map(|(path, _)| path)
            .collect();
        assert!(!paths.contains(&p(&[1, 2])));
        assert_eq!(paths.len(), 3);

        assert!(matches!(q.support_paths(None, 3), Err(Error::EnumerationCap { paths: 4, cap: 3 })));
    }

    #[test]
    fn equivalence_examples() {
        let (spec, q, _) = reference::correlated_2x2();
        let u = TransitionKernel::uniform(&spec).unwrap();
        assert!(q.is_equivalent(&u).unwrap());
        assert!(q.is_equivalent(&q).unwrap());
        let gap =
            TransitionKernel::new(vec![0.5, 0.5], vec![vec![vec![1.0, 0.0], vec![0.5, 0.5]]])
                .unwrap();
        assert!(!gap.is_equivalent(&u).unwrap());
        let tiny = TransitionKernel::new(
            vec![0.5, 0.5],
            vec![vec![vec![1.0 - 1e-16, 1e-16], vec![0.5, 0.5]]],
        )
        .unwrap();
        assert!(tiny.is_equivalent(&gap).unwrap());
        let other = TransitionKernel::uniform(&DagSpec::new(vec![2, 3]).unwrap()).unwrap();
        assert!(matches!(q.is_equivalent(&other), Err(Error::ShapeMismatch(_))));
    }

    #[test]
    fn exchangeable_examples() {
        let (spec, q, _) = reference::correlated_2x2();
        let u = TransitionKernel::uniform(&spec).unwrap();
        assert!(u.column_exchangeable(0, 0, 1).unwrap());
        assert!(u.column_exchangeable(1, 0, 1).unwrap());
        assert!(!q.column_exchangeable(1, 0, 1).unwrap());

        let one_row = TransitionKernel::new(
            vec![1.0 / 3.0; 3],
            vec![vec![vec![0.5, 0.5], vec![0.5, 0.5], vec![0.25, 0.75]]],
        )
        .unwrap();
        assert!(one_row.column_exchangeable(0, 0, 1).unwrap());
        assert!(!one_row.column_exchangeable(0, 1, 2).unwrap());

        let blocked =
            TransitionKernel::new(vec![1.0, 0.0], vec![vec![vec![0.5, 0.5], vec![0.5, 0.5]]])
                .unwrap();
        assert!(matches!(blocked.column_exchangeable(0, 0, 1), Err(Error::NullEvent(_))));
    }

    #[test]
    fn estimate_kernel_examples() {
        let spec = DagSpec::new(vec![2, 2]).unwrap();
        let mut data = PathDataset::new(spec.clone()).unwrap();
        for path in [[1, 1], [1, 2], [2, 1], [2, 2]] {
            data.push(p(&path), 0.0).unwrap();
        }
        let est = estimate_kernel(&data, 0.0).unwrap();
        assert_eq!(est.kernel.step(0).to_rows(), vec![vec![0.5, 0.5], vec![0.5, 0.5]]);
        assert!(est.unobserved.is_empty());

        let mut data = PathDataset::new(spec.clone()).unwrap();
        for (path, times) in [([1, 1], 3), ([1, 2], 1), ([2, 1], 1), ([2, 2], 3)] {
            for _ in 0..times {
                data.push(p(&path), 0.0).unwrap();
            }
        }
        let est = estimate_kernel(&data, 0.0).unwrap();
        assert_eq!(est.kernel.step(0).to_rows(), vec![vec![0.75, 0.25], vec![0.25, 0.75]]);
        assert_eq!(est.kernel.initial(), &[0.5, 0.5]);
    }

    #[test]
    fn estimate_kernel_flags_unobserved() {
        let spec = DagSpec::new(vec![2, 3]).unwrap();
        let mut data = PathDataset::new(spec).unwrap();
        data.push(p(&[1, 1]), 0.0).unwrap();
        data.push(p(&[1, 2]), 0.0).unwrap();
        let est = estimate_kernel(&data, 0.0).unwrap();
        assert_eq!(est.unobserved, vec![Node::new(1, 0), Node::new(2, 1)]);
        assert_eq!(est.kernel.initial(), &[1.0, 0.0]);
        assert_eq!(est.kernel.step(0).row(1), &[1.0 / 3.0; 3]);
        assert_eq!(est.check_observed(Node::new(1, 0)), Err(Error::UnobservedNode(Node::new(1, 0))));
        assert!(matches!(
            est.kernel.conditional_path_probability(&p(&[2, 1]), Node::new(1, 0)),
            Err(Error::NullEvent(_))
        ));

        let smooth = estimate_kernel(&data, 1.0).unwrap();
        assert_eq!(smooth.kernel.initial(), &[0.75, 0.25]);
        assert_eq!(smooth.kernel.step(0).row(0), &[0.4, 0.4, 0.2]);
    }

    #[test]
    fn long_chains_use_log_space() {
        let spec = DagSpec::new(vec![3; 700]).unwrap();
        let u = TransitionKernel::uniform(&spec).unwrap();
        let path = Path::new(vec![1; 700]);
        let ln = u.ln_path_probability(&path).unwrap();
        assert!(close(ln, -700.0 * libm::log(3.0), 1e-9));
        // 3^-700 underflows to zero
        assert_eq!(u.path_probability(&path).unwrap(), 0.0);
        let spec = DagSpec::new(vec![2; 40]).unwrap();
        let u = TransitionKernel::uniform(&spec).unwrap();
        let path = Path::new(vec![0; 40]);
        let cond = u.conditional_path_probability(&path, Node::new(0, 5)).unwrap();
        assert!(close(cond, libm::pow(0.5, 39.0), 1e-25));
    }

    #[test]
    fn fingerprint_distinguishes_kernels() {
        let (spec, q, _) = reference::correlated_2x2();
        let u = TransitionKernel::uniform(&spec).unwrap();
        assert_ne!(q.fingerprint(), u.fingerprint());
        assert_eq!(q.fingerprint(), q.clone().fingerprint());
    }
}
