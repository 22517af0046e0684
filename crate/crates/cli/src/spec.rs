//! Experiment configuration.
//!
//! An experiment file is TOML. Physical quantities carry their SI unit in
//! the key name (`power_sweep_w`, `[scenario] noise_power_w`, ...).
//!
//! ```toml
//! solvers = ["apo", "ranking", "maxrate"]
//! power_sweep_w = [0.01, 0.02, 0.03, 0.04]
//! monte_carlo_runs = 20
//! output_dir = "results"
//!
//! [scenario]
//! num_frames = 288
//! rician_k = 1000.0
//!
//! [trace]
//! kind = "synthetic"
//! tail_fraction = 0.15
//! ```

use std::path::{Path, PathBuf};

use gsclo::apo::ApoSettings;
use gsclo::robust::BilsSettings;
use gsclo::ScenarioConfig64;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};
use crate::metrics::PsnrCalibration;
use crate::solvers::SolverId;
use crate::synth::GeneratorParams;

/// Where the frames of each Monte Carlo run come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TraceSource {
    /// A trace CSV reused by every run; runs differ only in channel draws.
    File { path: PathBuf },
    /// A fresh synthetic trace per run.
    Synthetic(GeneratorParams),
}

impl Default for TraceSource {
    fn default() -> Self {
        TraceSource::Synthetic(GeneratorParams::default())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ApoConfig {
    pub penalty_scale: f64,
    pub max_iterations: usize,
    pub convergence_tol: f64,
    pub binary_tol: f64,
}

impl Default for ApoConfig {
    fn default() -> Self {
        let s = ApoSettings::<f64>::default();
        Self {
            penalty_scale: s.penalty_scale,
            max_iterations: s.max_iterations,
            convergence_tol: s.convergence_tol,
            binary_tol: s.binary_tol,
        }
    }
}

impl ApoConfig {
    pub fn settings(&self) -> ApoSettings<f64> {
        ApoSettings {
            penalty_scale: self.penalty_scale,
            max_iterations: self.max_iterations,
            convergence_tol: self.convergence_tol,
            binary_tol: self.binary_tol,
            ..ApoSettings::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BilsConfig {
    pub max_outer_iterations: usize,
    /// Upper end of the per-frame power bisection; defaults to the budget.
    pub power_cap_w: Option<f64>,
}

impl Default for BilsConfig {
    fn default() -> Self {
        Self {
            max_outer_iterations: BilsSettings::<f64>::default().max_outer_iterations,
            power_cap_w: None,
        }
    }
}

impl BilsConfig {
    /// Settings for one run; the radius is clamped to the horizon.
    pub fn settings(&self, cfg: &ScenarioConfig64, seed: u64) -> BilsSettings<f64> {
        BilsSettings {
            max_outer_iterations: self.max_outer_iterations,
            neighborhood_radius: cfg.neighborhood_radius.min(cfg.num_frames.max(1)),
            rng_seed: seed,
            power_cap: self.power_cap_w,
        }
    }
}

fn default_sweep() -> Vec<f64> {
    vec![0.01, 0.02, 0.03, 0.04]
}

fn default_thresholds() -> Vec<f64> {
    vec![0.02, 0.025, 0.03, 0.035, 0.04]
}

fn default_runs() -> usize {
    1
}

fn default_draws() -> usize {
    200
}

fn default_qoe_threshold() -> f64 {
    0.03
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    #[serde(default)]
    pub scenario: ScenarioConfig64,
    #[serde(default)]
    pub trace: TraceSource,
    pub solvers: Vec<SolverId>,
    #[serde(default = "default_sweep")]
    pub power_sweep_w: Vec<f64>,
    /// Thresholds swept by the power-minimizing solvers.
    #[serde(default = "default_thresholds")]
    pub loss_thresholds: Vec<f64>,
    /// Threshold used when a power-minimizing solver is invoked directly.
    #[serde(default = "default_qoe_threshold")]
    pub loss_threshold: f64,
    #[serde(default = "default_runs")]
    pub monte_carlo_runs: usize,
    /// True-channel draws per cell when the trace carries uncertainty.
    #[serde(default = "default_draws")]
    pub channel_draws: usize,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    /// Master seed; `--seed` overrides it and it defaults to the scenario seed.
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub apo: ApoConfig,
    #[serde(default)]
    pub bils: BilsConfig,
    #[serde(default)]
    pub psnr: PsnrCalibration,
}

impl ExperimentSpec {
    pub fn from_toml(text: &str) -> Result<Self> {
        let spec: Self = toml::from_str(text)?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let mut spec = Self::from_toml(&text)?;
        // Relative trace paths are resolved against the config file.
        if let TraceSource::File { path: trace } = &mut spec.trace {
            if trace.is_relative() {
                if let Some(dir) = path.parent() {
                    *trace = dir.join(&*trace);
                }
            }
        }
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.solvers.is_empty() {
            return Err(CliError::Spec("at least one solver is required".into()));
        }
        if self.monte_carlo_runs == 0 {
            return Err(CliError::Spec("monte_carlo_runs must be at least 1".into()));
        }
        if self.channel_draws == 0 {
            return Err(CliError::Spec("channel_draws must be at least 1".into()));
        }
        if self.power_sweep_w.is_empty() || self.power_sweep_w.iter().any(|&p| !(p > 0.0) || !p.is_finite()) {
            return Err(CliError::Spec("power_sweep_w must hold positive budgets".into()));
        }
        if self.loss_thresholds.iter().chain([&self.loss_threshold]).any(|&l| !(l >= 0.0) || !l.is_finite()) {
            return Err(CliError::Spec("loss thresholds must be finite and nonnegative".into()));
        }
        self.scenario.validate()?;
        if let TraceSource::Synthetic(g) = &self.trace {
            g.validate()?;
        }
        self.psnr.validate()?;
        Ok(())
    }

    pub fn master_seed(&self) -> u64 {
        self.seed.unwrap_or(self.scenario.rng_seed)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_spec_uses_defaults() {
        let spec = ExperimentSpec::from_toml("solvers = [\"apo\"]").unwrap();
        assert_eq!(spec.solvers, vec![SolverId::Apo]);
        assert_eq!(spec.power_sweep_w, default_sweep());
        assert_eq!(spec.monte_carlo_runs, 1);
        assert_eq!(spec.trace, TraceSource::default());
        assert_eq!(spec.scenario, ScenarioConfig64::default());
    }

    #[test]
    fn scenario_keys_carry_units() {
        let spec = ExperimentSpec::from_toml(
            "solvers = [\"ranking\"]\n[scenario]\nnum_frames = 16\nnoise_power_w = 1e-12\n[trace]\nkind = \"file\"\npath = \"t.csv\"\n",
        )
        .unwrap();
        assert_eq!(spec.scenario.num_frames, 16);
        assert_eq!(spec.scenario.noise_power, 1e-12);
        assert_eq!(spec.trace, TraceSource::File { path: "t.csv".into() });
    }

    #[test]
    fn rejects_bad_specs() {
        assert!(ExperimentSpec::from_toml("solvers = []").is_err());
        assert!(ExperimentSpec::from_toml("solvers = [\"nope\"]").is_err());
        assert!(ExperimentSpec::from_toml("solvers = [\"apo\"]\nmonte_carlo_runs = 0").is_err());
        assert!(ExperimentSpec::from_toml("solvers = [\"apo\"]\npower_sweep_w = [-1.0]").is_err());
        assert!(ExperimentSpec::from_toml("solvers = [\"apo\"]\n[scenario]\nnoise_power = 1.0").is_err());
    }
}
