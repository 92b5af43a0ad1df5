//! JSON experiment files for `simulate` and `validate`.
//!
//! ```json
//! {
//!   "model": "example1.json",
//!   "n": 1000,
//!   "seed": 42,
//!   "replicates": 200,
//!   "target_kernel": "uniform",
//!   "estimators": ["weighted", "plugin"],
//!   "level": 0.95,
//!   "nodes": ["1,2"],
//!   "moments": ["mean"]
//! }
//! ```
//!
//! `model` and a non-`uniform` `target_kernel` are paths relative to the
//! experiment file. Everything after `seed` is optional; `nodes` defaults
//! to every node reachable under the sampling kernel.

use std::path::{Path as FsPath, PathBuf};

use markov_anova_core::{EstimatorKind, Moment, Node, TransitionKernel};
use serde::Deserialize;

use crate::error::{Error, Result};
use crate::model_file::{parse_node_key, read_model, Model};

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentFile {
    pub model: PathBuf,
    pub n: usize,
    pub seed: u64,
    #[serde(default = "default_replicates")]
    pub replicates: usize,
    #[serde(default = "default_target")]
    pub target_kernel: String,
    #[serde(default = "default_estimators")]
    pub estimators: Vec<String>,
    #[serde(default = "default_level")]
    pub level: f64,
    #[serde(default)]
    pub nodes: Vec<String>,
    #[serde(default = "default_moments")]
    pub moments: Vec<String>,
}

fn default_replicates() -> usize {
    200
}
fn default_target() -> String {
    "uniform".into()
}
fn default_estimators() -> Vec<String> {
    vec!["weighted".into(), "plugin".into()]
}
fn default_level() -> f64 {
    0.95
}
fn default_moments() -> Vec<String> {
    vec!["mean".into()]
}

/// A resolved experiment: model and target loaded, names parsed.
#[derive(Debug, Clone, PartialEq)]
pub struct Experiment {
    pub model: Model,
    pub target: TransitionKernel,
    pub target_name: String,
    pub n: usize,
    pub seed: u64,
    pub replicates: usize,
    pub estimators: Vec<EstimatorKind>,
    pub level: f64,
    pub nodes: Vec<Node>,
    pub moments: Vec<Moment>,
}

fn parse_moment(s: &str) -> std::result::Result<Moment, String> {
    match s {
        "mean" => Ok(Moment::Mean),
        "variance" => Ok(Moment::Variance),
        other => Err(format!("unknown moment '{other}' (expected mean or variance)")),
    }
}

/// `uniform` or a model file whose kernel is used (its quality is ignored).
pub fn load_target(arg: &str, base: &FsPath, model_levels: &[usize]) -> Result<TransitionKernel> {
    let kernel = if arg == "uniform" {
        let spec = markov_anova_core::DagSpec::new(model_levels.to_vec())?;
        TransitionKernel::uniform(&spec)?
    } else {
        read_model(&base.join(arg))?.kernel
    };
    if kernel.levels() != model_levels {
        return Err(Error::Data(format!(
            "target kernel '{arg}' has levels {:?}, data/model has {:?}",
            kernel.levels(),
            model_levels
        )));
    }
    Ok(kernel)
}

pub fn read_experiment(path: &FsPath) -> Result<Experiment> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let file: ExperimentFile = serde_json::from_str(&text).map_err(|e| Error::parse(path, e))?;
    let base = path.parent().unwrap_or(FsPath::new("."));
    let model = read_model(&base.join(&file.model))?;
    let target = load_target(&file.target_kernel, base, &model.spec.levels)?;
    let estimators = file
        .estimators
        .iter()
        .map(|s| s.parse::<EstimatorKind>().map_err(|e| Error::parse(path, e)))
        .collect::<Result<Vec<_>>>()?;
    let moments = file
        .moments
        .iter()
        .map(|s| parse_moment(s).map_err(|e| Error::parse(path, e)))
        .collect::<Result<Vec<_>>>()?;
    let nodes = if file.nodes.is_empty() {
        let mut v = Vec::new();
        for node in model.spec.nodes() {
            if model.kernel.is_reachable(node)? {
                v.push(node);
            }
        }
        v
    } else {
        let mut v = Vec::new();
        for key in &file.nodes {
            let node = parse_node_key(key).map_err(|e| Error::parse(path, e))?;
            if !model.spec.contains(node) {
                return Err(Error::parse(path, format!("node {node} is outside the model")));
            }
            v.push(node);
        }
        v
    };
    if !(file.level > 0.0 && file.level < 1.0) {
        return Err(Error::parse(path, format!("level {} is outside (0, 1)", file.level)));
    }
    Ok(Experiment {
        model,
        target,
        target_name: file.target_kernel,
        n: file.n,
        seed: file.seed,
        replicates: file.replicates,
        estimators,
        level: file.level,
        nodes,
        moments,
    })
}
