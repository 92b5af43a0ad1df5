//! JSON model files: DAG shape, transition kernel and node distributions.
//!
//! ```json
//! {
//!   "columns": [2, 2],
//!   "labels": [["a", "b"], ["x", "y"]],
//!   "initial": [0.5, 0.5],
//!   "steps": [[[0.75, 0.25], [0.25, 0.75]]],
//!   "quality": {
//!     "1,1": {"kind": "gaussian", "mean": 0, "variance": 2},
//!     "2,1": {"kind": "bernoulli", "p": 0.3},
//!     "1,2": {"kind": "point-mass", "value": 1},
//!     "2,2": {"kind": "empirical-moments", "raw": [1, 2, 3.5, 9]}
//!   }
//! }
//! ```
//!
//! Quality keys are `"level,column"`, 1-based. `empirical-moments` takes
//! either `raw` (E S, E S², …) or `mean` plus `central` (central moments of
//! order 2, 3, 4). `labels` and `quality` are optional; unknown fields are
//! rejected.

use std::collections::BTreeMap;
use std::path::Path as FsPath;

use markov_anova_core::quality::{NodeDistribution, QualityModel};
use markov_anova_core::{DagSpec, Node, TransitionKernel};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    pub columns: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<Vec<Vec<String>>>,
    pub initial: Vec<f64>,
    #[serde(default)]
    pub steps: Vec<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub quality: BTreeMap<String, QualitySpec>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QualitySpec {
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mean: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub variance: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub raw: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub central: Option<Vec<f64>>,
}

impl QualitySpec {
    fn to_distribution(&self) -> std::result::Result<NodeDistribution, String> {
        let allowed: &[&str] = match self.kind.as_str() {
            "gaussian" => &["mean", "variance"],
            "bernoulli" => &["p"],
            "point-mass" => &["value"],
            "empirical-moments" => &["raw", "mean", "central"],
            other => {
                return Err(format!(
                    "unknown kind '{other}' (expected gaussian, bernoulli, point-mass or empirical-moments)"
                ))
            }
        };
        let present = [
            ("mean", self.mean.is_some()),
            ("variance", self.variance.is_some()),
            ("p", self.p.is_some()),
            ("value", self.value.is_some()),
            ("raw", self.raw.is_some()),
            ("central", self.central.is_some()),
        ];
        for (field, set) in present {
            if set && !allowed.contains(&field) {
                return Err(format!("field '{field}' does not apply to kind '{}'", self.kind));
            }
        }
        let need = |v: Option<f64>, field: &str| v.ok_or_else(|| format!("kind '{}' needs '{field}'", self.kind));
        Ok(match self.kind.as_str() {
            "gaussian" => NodeDistribution::Gaussian {
                mean: need(self.mean, "mean")?,
                variance: need(self.variance, "variance")?,
            },
            "bernoulli" => NodeDistribution::Bernoulli { p: need(self.p, "p")? },
            "point-mass" => NodeDistribution::PointMass { value: need(self.value, "value")? },
            _ => match (&self.raw, self.mean, &self.central) {
                (Some(raw), None, None) => NodeDistribution::EmpiricalMoments { raw: raw.clone() },
                (None, Some(mean), central) => {
                    NodeDistribution::from_central(mean, central.as_deref().unwrap_or(&[]))
                }
                _ => return Err("give either 'raw' or 'mean' with optional 'central'".into()),
            },
        })
    }

    pub fn from_distribution(d: &NodeDistribution) -> Self {
        match *d {
            NodeDistribution::Gaussian { mean, variance } => QualitySpec {
                kind: "gaussian".into(),
                mean: Some(mean),
                variance: Some(variance),
                ..Default::default()
            },
            NodeDistribution::Bernoulli { p } => {
                QualitySpec { kind: "bernoulli".into(), p: Some(p), ..Default::default() }
            }
            NodeDistribution::PointMass { value } => {
                QualitySpec { kind: "point-mass".into(), value: Some(value), ..Default::default() }
            }
            NodeDistribution::EmpiricalMoments { ref raw } => QualitySpec {
                kind: "empirical-moments".into(),
                raw: Some(raw.clone()),
                ..Default::default()
            },
        }
    }
}

/// A parsed and validated model.
#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    pub spec: DagSpec,
    pub kernel: TransitionKernel,
    pub quality: QualityModel,
}

pub fn parse_node_key(key: &str) -> std::result::Result<Node, String> {
    let mut parts = key.split(',').map(str::trim);
    let (Some(i), Some(j), None) = (parts.next(), parts.next(), parts.next()) else {
        return Err(format!("node key '{key}' is not 'level,column'"));
    };
    let parse = |s: &str| match s.parse::<usize>() {
        Ok(v) if v >= 1 => Ok(v - 1),
        _ => Err(format!("node key '{key}' must use 1-based integers")),
    };
    Ok(Node::new(parse(i)?, parse(j)?))
}

impl ModelFile {
    pub fn into_model(self) -> std::result::Result<Model, String> {
        let mut spec = DagSpec::new(self.columns.clone()).map_err(|e| e.to_string())?;
        if let Some(labels) = self.labels {
            spec = spec.with_labels(labels).map_err(|e| e.to_string())?;
        }
        let kernel = TransitionKernel::new(self.initial, self.steps).map_err(|e| e.to_string())?;
        kernel.check_spec(&spec).map_err(|e| e.to_string())?;
        let mut quality = QualityModel::empty(&spec.levels);
        for (key, q) in &self.quality {
            let node = parse_node_key(key)?;
            let d = q.to_distribution().map_err(|e| format!("quality {key}: {e}"))?;
            quality.set(node, d).map_err(|e| format!("quality {key}: {e}"))?;
        }
        Ok(Model { spec, kernel, quality })
    }

    pub fn from_parts(spec: &DagSpec, kernel: &TransitionKernel, quality: Option<&QualityModel>) -> Self {
        let quality = quality
            .map(|q| {
                q.iter()
                    .map(|(n, d)| {
                        (format!("{},{}", n.level + 1, n.column + 1), QualitySpec::from_distribution(d))
                    })
                    .collect()
            })
            .unwrap_or_default();
        ModelFile {
            columns: spec.levels.clone(),
            labels: spec.labels.clone(),
            initial: kernel.initial().to_vec(),
            steps: kernel.steps().iter().map(|s| s.to_rows()).collect(),
            quality,
        }
    }
}

pub fn parse_model(text: &str, origin: &FsPath) -> Result<Model> {
    let file: ModelFile = serde_json::from_str(text).map_err(|e| Error::parse(origin, e))?;
    file.into_model().map_err(|e| Error::parse(origin, e))
}

pub fn read_model(path: &FsPath) -> Result<Model> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_model(&text, path)
}
