//! Measure-change estimators for additive models whose categorical factors
//! are correlated through a Markov chain over a layered DAG.
//!
//! A record is a path through `c` columns (one level per factor) together
//! with a response, the sum of independent per-node contributions along the
//! path. Paths are drawn from a time-inhomogeneous Markov chain (the
//! sampling kernel). Reweighting the records by the ratio of conditional path
//! probabilities under a target kernel (typically the uniform kernel, which
//! makes the factors independent) gives estimators whose within-column
//! differences recover differences of node means and node variances.
//!
//! The crate is `no_std` with `alloc`; file formats, parallel replicate
//! runners and the command-line tool live in the `markov-anova` crate.
//!
//! Indices are 0-based throughout this crate. Files and reports use 1-based
//! levels and columns.

#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod asymptotics;
pub mod dag;
pub mod dataset;
pub mod error;
pub mod estimators;
pub mod kernel;
pub mod oracle;
pub mod quality;
pub mod reference;
pub mod simulation;
pub mod stats;

pub use asymptotics::{AsymptoticVariance, Components, ConfidenceInterval, Regime};
pub use dag::{DagSpec, IndicatorMatrix, Node, NodeMatrix, Path, Violation};
pub use dataset::{PathDataset, Record};
pub use error::{Error, Result};
pub use estimators::{CellEstimate, Estimator, EstimatorKind, Moment, NodeAggregate};
pub use kernel::{EstimatedKernel, TransitionKernel, DEFAULT_ENUMERATION_CAP};
pub use quality::{NodeDistribution, QualityModel};
pub use simulation::{AvSource, ExperimentConfig};
