use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::dag::{Node, Path};

pub type Result<T, E = Error> = core::result::Result<T, E>;

/// Paths rendered for diagnostics, 1-based and comma separated.
#[derive(Debug, Clone, PartialEq)]
pub struct PathList(pub Vec<Path>);

impl fmt::Display for PathList {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, p) in self.0.iter().enumerate() {
            if k > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{p}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid DAG: {0}")]
    InvalidDag(String),
    #[error("path out of range: {0}")]
    PathOutOfRange(String),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("invalid transition kernel: {0}")]
    InvalidKernel(String),
    #[error("invalid quality model: {0}")]
    InvalidQuality(String),
    #[error("invalid dataset: {0}")]
    InvalidData(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("node {0} is out of range")]
    NodeOutOfRange(Node),
    #[error("missing value for node {0}")]
    MissingNodeValue(Node),
    #[error("conditioning on null event: node {0} is unreachable")]
    NullEvent(Node),
    #[error("node {0} was never observed; its estimated kernel row is undefined")]
    UnobservedNode(Node),
    #[error(
        "enumeration cap exceeded: {paths} candidate paths > cap {cap}; use sampling-based methods"
    )]
    EnumerationCap { paths: u128, cap: usize },
    #[error("measures not equivalent: sampling and target kernels have different supports")]
    NotEquivalent,
    #[error("path {path} has zero probability under the sampling kernel")]
    OutsideSupport { path: Path },
    #[error("no data at node {0}")]
    NoData(Node),
    #[error("zero empirical frequency for path {path} through node {node}")]
    ZeroEmpiricalFrequency { path: Path, node: Node },
    #[error("target measure excludes observed path {path} through node {node}")]
    TargetExcludesObservedPath { path: Path, node: Node },
    #[error(
        "target measure puts mass {missing:.3e} on paths through node {node} that were never observed"
    )]
    TargetMassUnobserved { node: Node, missing: f64 },
    #[error("node {node} has no moments up to order {order}")]
    MissingMoments { node: Node, order: usize },
    #[error("paths through node {node} observed fewer than 2 times: {paths}")]
    InsufficientReplication { node: Node, paths: PathList },
    #[error("confidence level {0} is outside (0, 1)")]
    InvalidLevel(f64),
    #[error("node {0} has no sampler (empirical-moments distribution)")]
    NotSamplable(Node),
    #[error("internal numerical failure: {0}")]
    Numerical(String),
}

impl Error {
    /// True for failures caused by the data being statistically insufficient
    /// rather than malformed.
    pub fn is_statistical(&self) -> bool {
        matches!(
            self,
            Error::NoData(_)
                | Error::NullEvent(_)
                | Error::UnobservedNode(_)
                | Error::ZeroEmpiricalFrequency { .. }
                | Error::TargetExcludesObservedPath { .. }
                | Error::TargetMassUnobserved { .. }
                | Error::InsufficientReplication { .. }
                | Error::NotEquivalent
                | Error::OutsideSupport { .. }
                | Error::EnumerationCap { .. }
                | Error::Numerical(_)
        )
    }
}
