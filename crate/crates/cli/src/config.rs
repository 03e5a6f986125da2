//! JSON run configuration.
//!
//! ```json
//! {
//!   "model": {"kind": "fourier", "M": 128, "N": 256},
//!   "blocks": {"layout": "contiguous", "N": 256, "K": 8},
//!   "beta": 1e-6,
//!   "seed": 7,
//!   "optimizer": {"max_outer": 30},
//!   "benchmark": {"trials": 50, "levels": [1, 2, 3]},
//!   "demo": {"s_b": 2}
//! }
//! ```
//!
//! `blocks` may be omitted for the EM model, which then uses its pixel
//! squares. `seed` and `beta` are given once at the top level and feed the
//! optimizer and the benchmark.

use std::path::{Path, PathBuf};

use blockcap::bench::CurveConfig;
use blockcap::{BlockSpec, BlockStructure, DesignOptions, ModelDescriptor, SensingModel, DEFAULT_BETA};
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DemoConfig {
    /// Active blocks in the demo scene.
    pub s_b: usize,
    /// Trial index used to draw the scene.
    pub trial: usize,
}

impl Default for DemoConfig {
    fn default() -> Self {
        Self { s_b: 2, trial: 0 }
    }
}

fn default_beta() -> f64 {
    DEFAULT_BETA
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelDescriptor,
    #[serde(default)]
    pub blocks: Option<BlockSpec>,
    #[serde(default = "default_beta")]
    pub beta: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub optimizer: DesignOptions,
    #[serde(default)]
    pub benchmark: CurveConfig,
    #[serde(default)]
    pub demo: DemoConfig,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
}

/// A validated configuration with its model and block structure built.
pub struct Resolved {
    pub config: RunConfig,
    pub model: Box<dyn SensingModel>,
    pub bs: BlockStructure,
}

impl std::fmt::Debug for Resolved {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Resolved").field("config", &self.config).field("bs", &self.bs).finish()
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let raw: serde_json::Value =
            serde_json::from_str(text).map_err(|e| CliError::Usage(format!("config: {e}")))?;
        for (section, key) in [("optimizer", "seed"), ("optimizer", "beta"), ("benchmark", "seed")] {
            if raw.get(section).and_then(|s| s.get(key)).is_some() {
                return Err(CliError::Usage(format!("config: set `{key}` at the top level, not in `{section}`")));
            }
        }
        let mut cfg: RunConfig = serde_json::from_value(raw).map_err(|e| CliError::Usage(format!("config: {e}")))?;
        cfg.optimizer.seed = cfg.seed;
        cfg.optimizer.beta = cfg.beta;
        cfg.benchmark.seed = cfg.seed;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self.optimizer.seed = seed;
        self.benchmark.seed = seed;
        self
    }

    /// Checks every section and builds the model and blocks.
    pub fn resolve(self) -> Result<Resolved, CliError> {
        let usage = |e: blockcap::Error| CliError::Usage(format!("config: {e}"));
        let model = self.model.build().map_err(usage)?;
        let bs = match &self.blocks {
            Some(spec) => spec.build().map_err(usage)?,
            None => model
                .natural_blocks()
                .ok_or_else(|| CliError::Usage("config: `blocks` is required for this model".into()))?,
        };
        if bs.signal_len() != model.cols() {
            return Err(CliError::Usage(format!(
                "config: blocks cover {} columns, model has {}",
                bs.signal_len(),
                model.cols()
            )));
        }
        if !(self.beta >= 0.0) || !self.beta.is_finite() {
            return Err(CliError::Usage(format!("config: beta must be finite and non-negative, got {}", self.beta)));
        }
        self.optimizer.validate().map_err(usage)?;
        let k = bs.num_blocks();
        let b = &self.benchmark;
        if b.trials == 0 {
            return Err(CliError::Usage("config: benchmark.trials must be at least 1".into()));
        }
        if let Some(&s) = b.levels.iter().find(|&&s| s == 0 || s > k) {
            return Err(CliError::Usage(format!("config: benchmark level {s} outside 1..={k}")));
        }
        if !(b.tol_success > 0.0) || !(b.eta_rel >= 0.0) || b.solvers.is_empty() {
            return Err(CliError::Usage(
                "config: benchmark needs tol_success > 0, eta_rel >= 0 and at least one solver".into(),
            ));
        }
        if self.demo.s_b == 0 || self.demo.s_b > k {
            return Err(CliError::Usage(format!("config: demo.s_b {} outside 1..={k}", self.demo.s_b)));
        }
        Ok(Resolved { config: self, model, bs })
    }
}
