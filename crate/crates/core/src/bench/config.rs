//! Experiment configuration documents.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::data::Typing;
use super::model::ModelKind;
use crate::error::{IrdError, Result};
use crate::evaluation::LevelSetConfig;
use crate::localization::DEFAULT_GRID_STEPS;
use crate::maire::MaireConfig;
use crate::maxbox::MaxboxConfig;
use crate::postprocess::PostprocConfig;
use crate::predictor::CartParams;
use crate::prim::PrimConfig;
use crate::region::TaskMode;
use crate::result::Method;

/// A single value or a list of values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OneOrMany<T> {
    One(T),
    Many(Vec<T>),
}

impl<T: Clone> OneOrMany<T> {
    pub fn to_vec(&self) -> Vec<T> {
        match self {
            OneOrMany::One(v) => vec![v.clone()],
            OneOrMany::Many(v) => v.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SchemeKind {
    Train,
    Sampled,
}

impl SchemeKind {
    pub fn name(self) -> &'static str {
        match self {
            SchemeKind::Train => "train",
            SchemeKind::Sampled => "sampled",
        }
    }
}

impl std::str::FromStr for SchemeKind {
    type Err = IrdError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(SchemeKind::Train),
            "sampled" => Ok(SchemeKind::Sampled),
            other => Err(IrdError::Config(format!("unknown data scheme `{other}`"))),
        }
    }
}

fn default_n_points() -> usize {
    5
}
fn default_eval_samples() -> usize {
    1000
}
fn default_runs() -> usize {
    5
}
fn default_multiplier() -> f64 {
    2.0
}
fn default_grid_steps() -> usize {
    DEFAULT_GRID_STEPS
}
fn default_methods() -> Vec<Method> {
    Method::ALL.to_vec()
}
fn default_schemes() -> OneOrMany<SchemeKind> {
    OneOrMany::One(SchemeKind::Train)
}
fn default_postproc() -> OneOrMany<bool> {
    OneOrMany::One(false)
}
fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// CSV path; relative paths are resolved against the config file.
    pub data: PathBuf,
    pub target: String,
    #[serde(default)]
    pub typing: Typing,
    pub model: ModelKind,
    pub mode: TaskMode,
    #[serde(default)]
    pub cart: CartParams,
    #[serde(default = "default_n_points")]
    pub n_points: usize,
    #[serde(default = "default_methods")]
    pub methods: Vec<Method>,
    #[serde(default = "default_schemes")]
    pub schemes: OneOrMany<SchemeKind>,
    /// Size of the sampled working data relative to the training data.
    #[serde(default = "default_multiplier")]
    pub multiplier: f64,
    #[serde(default = "default_postproc")]
    pub postproc: OneOrMany<bool>,
    #[serde(default = "default_eval_samples")]
    pub eval_samples: usize,
    #[serde(default = "default_runs")]
    pub robustness_runs: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_grid_steps")]
    pub grid_steps: usize,
    /// Feature names fixed at the value of the explained point.
    #[serde(default)]
    pub immutable: Vec<String>,
    #[serde(default)]
    pub maxbox: MaxboxConfig,
    #[serde(default)]
    pub prim: PrimConfig,
    #[serde(default)]
    pub maire: MaireConfig,
    #[serde(default)]
    pub postproc_config: PostprocConfig,
    #[serde(default)]
    pub level_set: LevelSetConfig,
    /// Also report coverage relative to the connected level set.
    #[serde(default = "default_true")]
    pub coverage_l: bool,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads a config file and resolves a relative data path against it.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let mut cfg = ExperimentConfig::from_json(&std::fs::read_to_string(path)?)?;
        if cfg.data.is_relative() {
            if let Some(dir) = path.parent() {
                cfg.data = dir.join(&cfg.data);
            }
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_points < 1 {
            return Err(IrdError::Config("n_points must be at least 1".into()));
        }
        if self.robustness_runs < 1 {
            return Err(IrdError::Config(
                "robustness_runs must be at least 1".into(),
            ));
        }
        if self.eval_samples < 1 {
            return Err(IrdError::Config("eval_samples must be at least 1".into()));
        }
        if self.methods.is_empty() {
            return Err(IrdError::Config("no methods selected".into()));
        }
        if self.schemes.to_vec().is_empty() || self.postproc.to_vec().is_empty() {
            return Err(IrdError::Config(
                "schemes and postproc need at least one value".into(),
            ));
        }
        if !(self.multiplier > 0.0) {
            return Err(IrdError::Config("multiplier must be positive".into()));
        }
        if self.grid_steps < 2 {
            return Err(IrdError::Config("grid_steps must be at least 2".into()));
        }
        self.prim.validate()?;
        self.maire.validate()?;
        self.postproc_config.validate()?;
        self.level_set.validate()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_gets_defaults() {
        let cfg = ExperimentConfig::from_json(
            r#"{"data": "d.csv", "target": "y", "model": "tree", "mode": "binary"}"#,
        )
        .unwrap();
        assert_eq!(cfg.n_points, 5);
        assert_eq!(cfg.eval_samples, 1000);
        assert_eq!(cfg.robustness_runs, 5);
        assert_eq!(cfg.methods, Method::ALL.to_vec());
        assert_eq!(cfg.schemes.to_vec(), vec![SchemeKind::Train]);
        assert_eq!(cfg.postproc.to_vec(), vec![false]);
    }

    #[test]
    fn lists_and_nested_settings_parse() {
        let cfg = ExperimentConfig::from_json(
            r#"{"data": "d.csv", "target": "y", "model": "logistic", "mode": "binary",
                "schemes": ["train", "sampled"], "postproc": [false, true],
                "typing": {"columns": {"job": {"ordinal": ["a", "b"]}}},
                "prim": {"alpha": 0.1}, "cart": {"max_depth": 3}}"#,
        )
        .unwrap();
        assert_eq!(
            cfg.schemes.to_vec(),
            vec![SchemeKind::Train, SchemeKind::Sampled]
        );
        assert_eq!(cfg.postproc.to_vec(), vec![false, true]);
        assert_eq!(cfg.prim.alpha, 0.1);
        assert_eq!(cfg.cart.max_depth, 3);
        assert_eq!(cfg.cart.min_leaf, CartParams::default().min_leaf);
    }

    #[test]
    fn rejects_zero_runs_and_unknown_keys() {
        let base = r#"{"data": "d.csv", "target": "y", "model": "tree", "mode": "binary""#;
        assert!(ExperimentConfig::from_json(&format!("{base}, \"robustness_runs\": 0}}")).is_err());
        assert!(ExperimentConfig::from_json(&format!("{base}, \"n_points\": 0}}")).is_err());
        assert!(ExperimentConfig::from_json(&format!("{base}, \"colour\": 1}}")).is_err());
    }
}
