//! Run configuration and the bundled scenarios.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{ChenError, Result};
use crate::flowmodel::ModelParams;
use crate::initialdata::{CurveSpec, Shape};
use crate::stepper::StepConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub curve_spec: CurveSpec,
    #[serde(default)]
    pub model: ModelParams,
    pub step: StepConfig,
    pub output_dir: PathBuf,
    /// Write a curve file for every recorded state.
    #[serde(default)]
    pub emit_frames: bool,
    /// Recorded in the summary; the flow itself is deterministic.
    #[serde(default)]
    pub seed: u64,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let config: RunConfig = serde_json::from_str(text)
            .map_err(|e| ChenError::InvalidConfig(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    /// Reads a config file. A relative curve file path is taken relative to
    /// the config file.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let mut config = Self::from_json(&fs::read_to_string(path)?)?;
        if let Shape::FromFile { path: curve } = &mut config.curve_spec.shape {
            if curve.is_relative() {
                if let Some(base) = path.parent() {
                    *curve = base.join(&*curve);
                }
            }
        }
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        self.curve_spec.validate()?;
        self.model.validate()?;
        self.step.validate()?;
        if self.output_dir.as_os_str().is_empty() {
            return Err(ChenError::InvalidConfig("output_dir must not be empty".into()));
        }
        Ok(())
    }
}

macro_rules! scenario {
    ($name:literal) => {
        ($name, include_str!(concat!("../../scenarios/", $name, ".json")))
    };
}

const SCENARIOS: [(&str, &str); 10] = [
    scenario!("circle"),
    scenario!("convergence_test"),
    scenario!("ellipse"),
    scenario!("bernoulli_lemniscate"),
    scenario!("gerono_variant"),
    scenario!("lame"),
    scenario!("star"),
    scenario!("limacon"),
    scenario!("dumbbell"),
    scenario!("cocompact_sine"),
];

pub fn scenario_names() -> impl Iterator<Item = &'static str> {
    SCENARIOS.iter().map(|(name, _)| *name)
}

/// A bundled scenario by name.
pub fn scenario(name: &str) -> Result<RunConfig> {
    let (_, text) = SCENARIOS
        .iter()
        .find(|(n, _)| *n == name)
        .ok_or_else(|| ChenError::InvalidConfig(format!("unknown scenario '{name}'")))?;
    RunConfig::from_json(text)
}
