//! Run configuration: JSON config files merged with command-line flags
//! (flags win).  The resolved configuration is embedded verbatim in the run
//! manifest, and a manifest can be fed back through `--config` to reproduce
//! the run.

use dgpe_core::{ModelParams, SolverConfig};
use serde::{Deserialize, Serialize};
use std::path::Path;

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    #[serde(default)]
    pub command: Option<String>,
    #[serde(default)]
    pub instance: Option<InstanceConfig>,
    #[serde(default)]
    pub grid: Option<GridConfig>,
    #[serde(default)]
    pub solver: Option<SolverFileConfig>,
    #[serde(default)]
    pub io: Option<IoConfig>,
    #[serde(default)]
    pub evolve: Option<EvolveConfig>,
    #[serde(default)]
    pub sweep: Option<SweepConfig>,
    #[serde(default)]
    pub stability: Option<StabilityConfig>,
    #[serde(default)]
    pub wp: Option<WpConfig>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceConfig {
    pub lambda1: f64,
    pub lambda2: f64,
    pub lambda3: f64,
    pub p: f64,
    /// Mass; `"mass_frac"` below scales it off the instance threshold instead.
    #[serde(default)]
    pub c: Option<f64>,
    /// Mass as a fraction of the threshold `c_star` (used when `c` absent).
    #[serde(default)]
    pub mass_frac: Option<f64>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    #[serde(default)]
    pub n: Option<usize>,
    /// Cubic box side length; derived from the instance scale when absent.
    #[serde(default)]
    pub box_len: Option<f64>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverFileConfig {
    #[serde(default)]
    pub step: Option<f64>,
    #[serde(default)]
    pub tol_grad: Option<f64>,
    #[serde(default)]
    pub tol_p: Option<f64>,
    #[serde(default)]
    pub max_iter: Option<usize>,
    #[serde(default)]
    pub well_cap: Option<f64>,
    #[serde(default)]
    pub precondition: Option<bool>,
    #[serde(default)]
    pub init: Option<String>,
    #[serde(default)]
    pub init_file: Option<String>,
}

impl SolverFileConfig {
    pub fn apply(&self, base: &mut SolverConfig) {
        if let Some(v) = self.step {
            base.step = v;
        }
        if let Some(v) = self.tol_grad {
            base.tol_grad = v;
        }
        if let Some(v) = self.tol_p {
            base.tol_p = v;
        }
        if let Some(v) = self.max_iter {
            base.max_iter = v;
        }
        if let Some(v) = self.well_cap {
            base.well_cap = Some(v);
        }
        if let Some(v) = self.precondition {
            base.precondition = v;
        }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IoConfig {
    #[serde(default)]
    pub out: Option<String>,
    #[serde(default)]
    pub formats: Option<Vec<String>>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub repro: Option<bool>,
    #[serde(default)]
    pub jobs: Option<usize>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvolveConfig {
    #[serde(default)]
    pub t_final: Option<f64>,
    #[serde(default)]
    pub dt: Option<f64>,
    #[serde(default)]
    pub psi0: Option<String>,
    #[serde(default)]
    pub sample_every: Option<usize>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    #[serde(default)]
    pub masses: Option<Vec<f64>>,
    #[serde(default)]
    pub count: Option<usize>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StabilityConfig {
    #[serde(default)]
    pub eps: Option<Vec<f64>>,
    #[serde(default)]
    pub trials: Option<usize>,
    #[serde(default)]
    pub t_final: Option<f64>,
    #[serde(default)]
    pub dt: Option<f64>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WpConfig {
    #[serde(default)]
    pub p: Option<f64>,
    #[serde(default)]
    pub r_max: Option<f64>,
    #[serde(default)]
    pub tol: Option<f64>,
}

impl InstanceConfig {
    pub fn from_params(params: &ModelParams) -> Self {
        Self {
            lambda1: params.lambda1,
            lambda2: params.lambda2,
            lambda3: params.lambda3,
            p: params.p,
            c: Some(params.c),
            mass_frac: None,
        }
    }
}

/// Load a config file; a manifest (`{"config": {...}}`) is unwrapped so runs
/// can be replayed from their own manifests.
pub fn load_config(path: &Path) -> Result<FileConfig, String> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
    let value: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| format!("config parse error: {e}"))?;
    let config_value = if let Some(embedded) = value.get("config") {
        embedded.clone()
    } else {
        value
    };
    serde_json::from_value(config_value).map_err(|e| format!("config structure error: {e}"))
}
