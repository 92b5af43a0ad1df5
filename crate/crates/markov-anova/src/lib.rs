//! File formats, parallel replicate runners and the `markov-anova` command
//! line on top of [`markov_anova_core`].

pub mod cli;
pub mod discretize;
pub mod error;
pub mod experiment_file;
pub mod markov_check;
pub mod model_file;
pub mod parallel;
pub mod report;
pub mod tabular;

pub use error::{exit, Error, Result};
