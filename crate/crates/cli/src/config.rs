//! Run configuration: one JSON document with `model`, `solver`, `sim` and
//! `output` blocks. Every block and field is optional in the file; command
//! line flags are layered on top before validation.
//!
//! ```json
//! {
//!   "model":  { "rho": 0.4, "mu0": 1.0, "K": 8, "f": 0.4 },
//!   "solver": { "n_max": 60, "alpha": 0.999, "tol": 1e-9, "margin": 5 },
//!   "sim":    { "horizon": 1e5, "warmup": 1e4, "replications": 20, "seed": 1 },
//!   "output": { "out_dir": "out" }
//! }
//! ```
//!
//! The model takes exactly one of `rho` / `lambda` and exactly one of
//! `(mu0, K, f)` / `(mu_c1, mu_l2, mu_c2)`; the solver takes exactly one of
//! `alpha` / `beta`.

use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use offload_core::model::{lambda_from_utilization, ServiceScale};
use offload_core::simulator::CouplingMode;
use offload_core::solver::SweepMode;
use offload_core::{Discount, ModelParams, SimConfig, ViOptions};

pub const DEFAULT_N_MAX: u32 = 60;
pub const DEFAULT_CHECKPOINT_EVERY: u64 = 1000;
pub const DEFAULT_OUT_DIR: &str = "out";

/// A configuration that is incomplete, contradictory or out of range.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

fn bad<T>(msg: impl Into<String>) -> Result<T, ConfigError> {
    Err(ConfigError(msg.into()))
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelBlock {
    pub rho: Option<f64>,
    pub lambda: Option<f64>,
    pub mu0: Option<f64>,
    #[serde(rename = "K", alias = "k")]
    pub k: Option<f64>,
    pub f: Option<f64>,
    pub mu_c1: Option<f64>,
    pub mu_l2: Option<f64>,
    pub mu_c2: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverBlock {
    pub n_max: Option<u32>,
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    pub tol: Option<f64>,
    pub max_iters: Option<u64>,
    pub margin: Option<u32>,
    pub checkpoint_every: Option<u64>,
    /// `"jacobi"` (default) or `"gauss_seidel"`.
    pub sweep: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimBlock {
    pub horizon: Option<f64>,
    /// Defaults to 10% of the horizon.
    pub warmup: Option<f64>,
    pub replications: Option<usize>,
    pub seed: Option<u64>,
    /// `"shared"` (default) or `"independent"`.
    pub coupling: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputBlock {
    pub out_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub model: ModelBlock,
    #[serde(default)]
    pub solver: SolverBlock,
    #[serde(default)]
    pub sim: SimBlock,
    #[serde(default)]
    pub output: OutputBlock,
}

/// Everything the solver needs.
#[derive(Debug, Clone, Copy)]
pub struct SolverSettings {
    pub n_max: u32,
    pub discount: Discount,
    pub vi: ViOptions,
    pub margin: u32,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        serde_json::from_str(text).map_err(|e| ConfigError(format!("config: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn set_rho(&mut self, rho: f64) {
        self.model.rho = Some(rho);
        self.model.lambda = None;
    }

    pub fn set_lambda(&mut self, lambda: f64) {
        self.model.lambda = Some(lambda);
        self.model.rho = None;
    }

    pub fn set_alpha(&mut self, alpha: f64) {
        self.solver.alpha = Some(alpha);
        self.solver.beta = None;
    }

    pub fn set_beta(&mut self, beta: f64) {
        self.solver.beta = Some(beta);
        self.solver.alpha = None;
    }

    pub fn model_params(&self) -> Result<ModelParams, ConfigError> {
        let m = &self.model;
        let homogeneous = [m.mu0, m.k, m.f];
        let heterogeneous = [m.mu_c1, m.mu_l2, m.mu_c2];
        let any = |xs: &[Option<f64>]| xs.iter().any(Option::is_some);
        let scale = match (any(&homogeneous), any(&heterogeneous)) {
            (true, true) => return bad("model: give either (mu0, K, f) or (mu_c1, mu_l2, mu_c2), not both"),
            (false, false) => return bad("model: missing service parameters (mu0, K, f)"),
            (true, false) => {
                let [mu0, k, f] = require(homogeneous, ["mu0", "K", "f"])?;
                ServiceScale { mu0, k, f }
            }
            (false, true) => {
                let [c1, l2, c2] = require(heterogeneous, ["mu_c1", "mu_l2", "mu_c2"])?;
                ServiceScale::from_heterogeneous(c1, l2, c2).map_err(|e| ConfigError(format!("model: {e}")))?
            }
        };
        let lambda = match (m.rho, m.lambda) {
            (Some(_), Some(_)) => return bad("model: give either rho or lambda, not both"),
            (None, None) => return bad("model: missing rho or lambda"),
            (None, Some(l)) => l,
            (Some(rho), None) => {
                lambda_from_utilization(rho, scale.mu0, scale.k).map_err(|e| ConfigError(format!("model: {e}")))?
            }
        };
        let p = match (m.mu_c1, m.mu_l2, m.mu_c2) {
            (Some(c1), Some(l2), Some(c2)) => ModelParams::from_heterogeneous(lambda, c1, l2, c2),
            _ => ModelParams::derive_rates(lambda, scale.mu0, scale.k, scale.f),
        };
        p.map_err(|e| ConfigError(format!("model: {e}")))
    }

    pub fn solver_settings(&self) -> Result<SolverSettings, ConfigError> {
        let s = &self.solver;
        let discount = match (s.alpha, s.beta) {
            (Some(_), Some(_)) => return bad("solver: give either alpha or beta, not both"),
            (None, None) => return bad("solver: missing alpha or beta"),
            (Some(a), None) => Discount::Alpha(a),
            (None, Some(b)) => Discount::Beta(b),
        };
        let sweep = match s.sweep.as_deref() {
            None | Some("jacobi") => SweepMode::Jacobi,
            Some("gauss_seidel") => SweepMode::GaussSeidel,
            Some(other) => return bad(format!("solver: unknown sweep {other:?} (jacobi or gauss_seidel)")),
        };
        let defaults = ViOptions::default();
        let vi = ViOptions {
            tol: s.tol.unwrap_or(defaults.tol),
            max_iters: s.max_iters.unwrap_or(defaults.max_iters),
            sweep,
            checkpoint_every: s.checkpoint_every.unwrap_or(DEFAULT_CHECKPOINT_EVERY),
        };
        if !(vi.tol > 0.0) {
            return bad(format!("solver: tol must be positive, got {}", vi.tol));
        }
        let n_max = s.n_max.unwrap_or(DEFAULT_N_MAX);
        if n_max == 0 {
            return bad("solver: n_max must be at least 1");
        }
        Ok(SolverSettings {
            n_max,
            discount,
            vi,
            margin: s.margin.unwrap_or(offload_core::structure::DEFAULT_MARGIN),
        })
    }

    pub fn sim_config(&self) -> Result<SimConfig, ConfigError> {
        let d = SimConfig::default();
        let horizon = self.sim.horizon.unwrap_or(d.horizon);
        let coupling = match self.sim.coupling.as_deref() {
            None | Some("shared") => CouplingMode::SharedArrivalsAndTriplets,
            Some("independent") => CouplingMode::Independent,
            Some(other) => return bad(format!("sim: unknown coupling {other:?} (shared or independent)")),
        };
        let cfg = SimConfig {
            horizon,
            warmup: self.sim.warmup.unwrap_or(0.1 * horizon),
            replications: self.sim.replications.unwrap_or(d.replications),
            seed: self.sim.seed.unwrap_or(d.seed),
            coupling,
        };
        cfg.validate().map_err(|e| ConfigError(format!("sim: {e}")))?;
        Ok(cfg)
    }

    pub fn out_dir(&self) -> PathBuf {
        self.output
            .out_dir
            .clone()
            .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR))
    }
}

fn require<const N: usize>(vals: [Option<f64>; N], names: [&str; N]) -> Result<[f64; N], ConfigError> {
    let mut out = [0.0; N];
    for i in 0..N {
        match vals[i] {
            Some(v) => out[i] = v,
            None => return bad(format!("model: missing {}", names[i])),
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(json: &str) -> RunConfig {
        RunConfig::from_json(json).unwrap()
    }

    #[test]
    fn config_a_resolves() {
        let c = cfg(r#"{"model":{"rho":0.4,"mu0":1,"K":8,"f":0.4},"solver":{"alpha":0.999}}"#);
        let p = c.model_params().unwrap();
        assert!((p.lambda - 3.6).abs() < 1e-12);
        assert_eq!(p.mu_c1, 8.0);
        let s = c.solver_settings().unwrap();
        assert_eq!(s.n_max, 60);
        assert_eq!(s.discount, Discount::Alpha(0.999));
        assert_eq!(s.margin, 5);
    }

    #[test]
    fn heterogeneous_rates_with_rho() {
        let c = cfg(r#"{"model":{"rho":0.4,"mu_c1":8,"mu_l2":2.5,"mu_c2":13.333333333333334}}"#);
        let p = c.model_params().unwrap();
        assert_eq!(p.mu_l2, 2.5);
        assert!((p.k - 8.0).abs() < 1e-9);
        assert!((p.lambda - 3.6).abs() < 1e-9);
    }

    #[test]
    fn rejects_incomplete_or_contradictory_blocks() {
        let missing_f = cfg(r#"{"model":{"rho":0.4,"mu0":1,"K":8}}"#);
        assert!(missing_f.model_params().unwrap_err().0.contains("missing f"));
        let both = cfg(r#"{"model":{"rho":0.4,"lambda":3,"mu0":1,"K":8,"f":0.4}}"#);
        assert!(both.model_params().is_err());
        let mixed = cfg(r#"{"model":{"rho":0.4,"mu0":1,"K":8,"f":0.4,"mu_c1":8}}"#);
        assert!(mixed.model_params().is_err());
        assert!(cfg(r#"{"solver":{"alpha":0.9,"beta":1}}"#).solver_settings().is_err());
        assert!(cfg("{}").solver_settings().is_err());
        assert!(RunConfig::from_json(r#"{"model":{"rh0":0.4}}"#).is_err());
    }

    #[test]
    fn flags_replace_the_exclusive_partner() {
        let mut c = cfg(r#"{"model":{"lambda":3.6},"solver":{"beta":0.5}}"#);
        c.set_rho(0.8);
        c.set_alpha(0.99);
        assert_eq!(c.model.lambda, None);
        assert_eq!(c.solver.beta, None);
    }

    #[test]
    fn warmup_defaults_to_a_tenth_of_the_horizon() {
        let s = cfg(r#"{"sim":{"horizon":2e5}}"#).sim_config().unwrap();
        assert_eq!(s.warmup, 2e4);
        assert!(cfg(r#"{"sim":{"horizon":10,"warmup":20}}"#).sim_config().is_err());
    }
}
