//! Layered DAG: columns of levels, paths through one level per column, and
//! per-node storage.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::error::{Error, Result};

/// A node of the layered DAG, 0-based. Displayed 1-based as `(level,column)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Node {
    pub level: usize,
    pub column: usize,
}

impl Node {
    pub const fn new(level: usize, column: usize) -> Self {
        Node { level, column }
    }
}

impl fmt::Display for Node {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.level + 1, self.column + 1)
    }
}

/// Shape of the DAG: number of levels per column plus optional category labels.
///
/// Source and sink are implicit. Every node of column `j` connects to every
/// node of column `j + 1`; which edges carry mass is the kernel's business.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DagSpec {
    pub levels: Vec<usize>,
    pub labels: Option<Vec<Vec<String>>>,
}

/// A broken [`DagSpec`] invariant.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    NoColumns,
    EmptyColumn { column: usize },
    LabelColumns { expected: usize, found: usize },
    LabelCount { column: usize, expected: usize, found: usize },
    DuplicateLabel { column: usize, label: String },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::NoColumns => f.write_str("no columns"),
            Violation::EmptyColumn { column } => write!(f, "column {} empty", column + 1),
            Violation::LabelColumns { expected, found } => {
                write!(f, "labels given for {found} columns, expected {expected}")
            }
            Violation::LabelCount { column, expected, found } => write!(
                f,
                "column {} has {found} labels, expected {expected}",
                column + 1
            ),
            Violation::DuplicateLabel { column, label } => {
                write!(f, "column {} repeats label {label:?}", column + 1)
            }
        }
    }
}

/// Returns every invariant violation of `spec`; empty means valid.
pub fn validate_dag(spec: &DagSpec) -> Vec<Violation> {
    let mut out = Vec::new();
    if spec.levels.is_empty() {
        out.push(Violation::NoColumns);
    }
    for (column, &r) in spec.levels.iter().enumerate() {
        if r == 0 {
            out.push(Violation::EmptyColumn { column });
        }
    }
    if let Some(labels) = &spec.labels {
        if labels.len() != spec.levels.len() {
            out.push(Violation::LabelColumns {
                expected: spec.levels.len(),
                found: labels.len(),
            });
        }
        for (column, (names, &r)) in labels.iter().zip(&spec.levels).enumerate() {
            if names.len() != r {
                out.push(Violation::LabelCount { column, expected: r, found: names.len() });
            }
            for (k, name) in names.iter().enumerate() {
                if names[..k].contains(name) {
                    out.push(Violation::DuplicateLabel { column, label: name.clone() });
                }
            }
        }
    }
    out
}

impl DagSpec {
    pub fn new(levels: Vec<usize>) -> Result<Self> {
        DagSpec { levels, labels: None }.checked()
    }

    pub fn with_labels(mut self, labels: Vec<Vec<String>>) -> Result<Self> {
        self.labels = Some(labels);
        self.checked()
    }

    /// Fails with all violations joined when the spec is invalid.
    pub fn checked(self) -> Result<Self> {
        let violations = validate_dag(&self);
        if violations.is_empty() {
            return Ok(self);
        }
        let msg: Vec<String> = violations.iter().map(|v| format!("{v}")).collect();
        Err(Error::InvalidDag(msg.join("; ")))
    }

    pub fn columns(&self) -> usize {
        self.levels.len()
    }

    pub fn max_levels(&self) -> usize {
        self.levels.iter().copied().max().unwrap_or(0)
    }

    /// Number of source-to-sink paths, saturating.
    pub fn path_count(&self) -> u128 {
        self.levels
            .iter()
            .fold(1u128, |acc, &r| acc.saturating_mul(r as u128))
    }

    pub fn contains(&self, node: Node) -> bool {
        node.column < self.levels.len() && node.level < self.levels[node.column]
    }

    pub fn label(&self, node: Node) -> Option<&str> {
        self.labels
            .as_ref()
            .and_then(|l| l.get(node.column))
            .and_then(|c| c.get(node.level))
            .map(String::as_str)
    }

    pub fn nodes(&self) -> impl Iterator<Item = Node> + '_ {
        self.levels
            .iter()
            .enumerate()
            .flat_map(|(column, &r)| (0..r).map(move |level| Node { level, column }))
    }
}

/// One level per column. Stored 0-based; displayed 1-based.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Path(Vec<usize>);

impl Path {
    pub fn new(levels: Vec<usize>) -> Self {
        Path(levels)
    }

    /// Builds a path from 1-based levels, as written in reports.
    ///
    /// Panics on a zero entry.
    pub fn from_one_based(levels: &[usize]) -> Self {
        Path(levels.iter().map(|&l| l.checked_sub(1).expect("1-based level")).collect())
    }

    pub fn levels(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn level(&self, column: usize) -> usize {
        self.0[column]
    }

    pub fn passes_through(&self, node: Node) -> bool {
        self.0.get(node.column) == Some(&node.level)
    }

    pub fn nodes(&self) -> impl Iterator<Item = Node> + '_ {
        self.0.iter().enumerate().map(|(column, &level)| Node { level, column })
    }

    pub fn validate(&self, levels: &[usize]) -> Result<()> {
        if self.0.len() != levels.len() {
            return Err(Error::PathOutOfRange(format!(
                "path {self} has {} columns, expected {}",
                self.0.len(),
                levels.len()
            )));
        }
        for (column, (&level, &r)) in self.0.iter().zip(levels).enumerate() {
            if level >= r {
                return Err(Error::PathOutOfRange(format!(
                    "path {self}: level {} exceeds {r} levels of column {}",
                    level + 1,
                    column + 1
                )));
            }
        }
        Ok(())
    }
}

impl fmt::Display for Path {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("(")?;
        for (k, l) in self.0.iter().enumerate() {
            if k > 0 {
                f.write_str(",")?;
            }
            write!(f, "{}", l + 1)?;
        }
        f.write_str(")")
    }
}

/// Ragged per-node storage: column `j` holds `r_j` entries.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeMatrix<T> {
    columns: Vec<Vec<T>>,
}

impl<T> NodeMatrix<T> {
    pub fn from_fn(levels: &[usize], mut f: impl FnMut(Node) -> T) -> Self {
        let columns = levels
            .iter()
            .enumerate()
            .map(|(column, &r)| (0..r).map(|level| f(Node { level, column })).collect())
            .collect();
        NodeMatrix { columns }
    }

    pub fn from_columns(columns: Vec<Vec<T>>) -> Self {
        NodeMatrix { columns }
    }

    pub fn get(&self, node: Node) -> Option<&T> {
        self.columns.get(node.column).and_then(|c| c.get(node.level))
    }

    pub fn get_mut(&mut self, node: Node) -> Option<&mut T> {
        self.columns.get_mut(node.column).and_then(|c| c.get_mut(node.level))
    }

    pub fn column(&self, column: usize) -> &[T] {
        &self.columns[column]
    }

    pub fn columns(&self) -> &[Vec<T>] {
        &self.columns
    }

    pub fn levels(&self) -> Vec<usize> {
        self.columns.iter().map(Vec::len).collect()
    }

    pub fn iter(&self) -> impl Iterator<Item = (Node, &T)> {
        self.columns.iter().enumerate().flat_map(|(column, c)| {
            c.iter().enumerate().map(move |(level, v)| (Node { level, column }, v))
        })
    }
}

impl<T: Clone> NodeMatrix<T> {
    pub fn filled(levels: &[usize], value: T) -> Self {
        NodeMatrix { columns: levels.iter().map(|&r| vec![value.clone(); r]).collect() }
    }
}

/// Dense `r_max × c` 0/1 matrix with a single 1 per column.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IndicatorMatrix {
    rows: usize,
    cols: usize,
    data: Vec<u8>,
}

impl IndicatorMatrix {
    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, level: usize, column: usize) -> u8 {
        self.data[level * self.cols + column]
    }

    /// Row-major nested form, row `i` holding level `i` of every column.
    pub fn to_rows(&self) -> Vec<Vec<u8>> {
        self.data.chunks(self.cols).map(<[u8]>::to_vec).collect()
    }
}

pub fn indicator_matrix(path: &Path, spec: &DagSpec) -> Result<IndicatorMatrix> {
    path.validate(&spec.levels)?;
    let rows = spec.max_levels();
    let cols = spec.columns();
    let mut data = vec![0u8; rows * cols];
    for node in path.nodes() {
        data[node.level * cols + node.column] = 1;
    }
    Ok(IndicatorMatrix { rows, cols, data })
}

/// Response of a path given one realization of the node values, laid out as
/// `realization[level][column]`.
pub fn cumulated_quality(path: &Path, realization: &[Vec<f64>]) -> Result<f64> {
    path.nodes().try_fold(0.0, |acc, node| {
        realization
            .get(node.level)
            .and_then(|row| row.get(node.column))
            .map(|v| acc + v)
            .ok_or(Error::MissingNodeValue(node))
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;

    #[test]
    fn validate_examples() {
        assert!(validate_dag(&DagSpec { levels: vec![2, 2], labels: None }).is_empty());
        assert!(validate_dag(&DagSpec { levels: vec![4, 3, 2, 4], labels: None }).is_empty());
        let v = validate_dag(&DagSpec { levels: vec![2, 0], labels: None });
        assert_eq!(v, vec![Violation::EmptyColumn { column: 1 }]);
        assert_eq!(v[0].to_string(), "column 2 empty");
        assert_eq!(
            validate_dag(&DagSpec { levels: vec![], labels: None }),
            vec![Violation::NoColumns]
        );
    }

    #[test]
    fn label_violations() {
        let spec = DagSpec {
            levels: vec![2, 2],
            labels: Some(vec![
                vec!["a".into(), "a".into()],
                vec!["x".into()],
            ]),
        };
        let v = validate_dag(&spec);
        assert!(v.contains(&Violation::DuplicateLabel { column: 0, label: "a".into() }));
        assert!(v.contains(&Violation::LabelCount { column: 1, expected: 2, found: 1 }));
        assert!(spec.checked().is_err());
    }

    #[test]
    fn indicator_examples() {
        let spec = DagSpec::new(vec![2, 2]).unwrap();
        let m = indicator_matrix(&Path::from_one_based(&[1, 1]), &spec).unwrap();
        assert_eq!(m.to_rows(), vec![vec![1, 1], vec![0, 0]]);
        let m = indicator_matrix(&Path::from_one_based(&[2, 1]), &spec).unwrap();
        assert_eq!(m.to_rows(), vec![vec![0, 1], vec![1, 0]]);

        let fig = DagSpec::new(vec![4, 3, 2, 4]).unwrap();
        let m = indicator_matrix(&Path::from_one_based(&[1, 3, 2, 4]), &fig).unwrap();
        assert_eq!(m.rows(), 4);
        for j in 0..4 {
            let s: u8 = (0..4).map(|i| m.get(i, j)).sum();
            assert_eq!(s, 1);
        }
        // rows beyond r_j stay zero
        assert_eq!(m.get(3, 2), 0);
        assert_eq!(m.get(2, 2), 0);

        let err = indicator_matrix(&Path::from_one_based(&[3, 1]), &spec).unwrap_err();
        assert!(matches!(err, Error::PathOutOfRange(_)));
        assert!(err.to_string().contains("path out of range"));
    }

    #[test]
    fn cumulated_quality_examples() {
        let s = vec![vec![0.0, 1.0], vec![-2.0, 2.0]];
        assert_eq!(cumulated_quality(&Path::from_one_based(&[1, 1]), &s).unwrap(), 1.0);
        assert_eq!(cumulated_quality(&Path::from_one_based(&[2, 2]), &s).unwrap(), 0.0);
        let zero = vec![vec![0.0; 2]; 2];
        assert_eq!(cumulated_quality(&Path::from_one_based(&[2, 1]), &zero).unwrap(), 0.0);
        let short = vec![vec![0.0, 1.0]];
        assert_eq!(
            cumulated_quality(&Path::from_one_based(&[2, 1]), &short),
            Err(Error::MissingNodeValue(Node::new(1, 0)))
        );
    }

    #[test]
    fn display_is_one_based() {
        assert_eq!(Path::new(vec![0, 2]).to_string(), "(1,3)");
        assert_eq!(Node::new(0, 1).to_string(), "(1,2)");
    }
}
