//! Experiment configuration files and resolution of the MDP they refer to.

use std::fs;
use std::path::{Path, PathBuf};

use erl_core::dist::AtomGrid;
use erl_core::Policy;
use erl_core::TabularMdp;
use ndarray::Array1;
use serde::{Deserialize, Serialize};

use crate::builtins::{builtin, BuiltinName};
use crate::error::{ExpError, Result};
use crate::io::load_mdp;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub min: f64,
    pub max: f64,
    pub count: usize,
}

/// Settings shared by all experiments. Every field has a default, so an
/// empty JSON object is a valid configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub mdp_path: Option<PathBuf>,
    /// Used when `mdp_path` is absent; each experiment has its own default.
    pub builtin: Option<String>,
    /// Strictly decreasing temperature ladder; each experiment has its own default.
    pub temperatures: Option<Vec<f64>>,
    /// `sigma = tau^decouple_exponent`.
    pub decouple_exponent: f64,
    pub n_control: usize,
    pub n_eval: usize,
    pub grid: Option<GridConfig>,
    pub seed: u64,
    pub output_dir: PathBuf,
    pub q_learning_steps: u64,
    pub oracle_rollouts: usize,
    /// Resolution of the simplex lattice over optimal deterministic policies.
    pub mixture_resolution: usize,
    pub solver_eps: f64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            mdp_path: None,
            builtin: None,
            temperatures: None,
            decouple_exponent: 2.0,
            n_control: 1000,
            n_eval: 1000,
            grid: None,
            seed: 0,
            output_dir: PathBuf::from("out"),
            q_learning_steps: 1_000_000,
            oracle_rollouts: 1_000_000,
            mixture_resolution: 18,
            solver_eps: 1e-12,
        }
    }
}

/// `{1e-1, 1e-2, ..., 1e-9}`.
pub fn decade_ladder() -> Vec<f64> {
    (1..=9).map(|k| 10f64.powi(-k)).collect()
}

/// `{1e-1, 1e-3, ..., 1e-9}`.
pub fn odd_decade_ladder() -> Vec<f64> {
    (0..5).map(|m| 10f64.powi(-(2 * m + 1))).collect()
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| ExpError::io(path, e))?;
        let cfg: Self = serde_json::from_str(&text).map_err(|source| ExpError::Json { path: path.into(), source })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(t) = &self.temperatures {
            check_ladder(t)?;
        }
        if !(self.decouple_exponent.is_finite() && self.decouple_exponent > 0.0) {
            return Err(ExpError::Config(format!("decouple_exponent must be positive, got {}", self.decouple_exponent)));
        }
        if self.n_control == 0 || self.n_eval == 0 {
            return Err(ExpError::Config("n_control and n_eval must be at least 1".into()));
        }
        if let Some(g) = &self.grid {
            if g.count < 2 {
                return Err(ExpError::Config(format!("grid.count must be at least 2, got {}", g.count)));
            }
            if !(g.min.is_finite() && g.max.is_finite() && g.min < g.max) {
                return Err(ExpError::Config(format!("grid bounds must satisfy min < max, got [{}, {}]", g.min, g.max)));
            }
        }
        if self.q_learning_steps == 0 || self.oracle_rollouts < 2 || self.mixture_resolution == 0 {
            return Err(ExpError::Config("q_learning_steps, oracle_rollouts and mixture_resolution must be positive".into()));
        }
        if !(self.solver_eps.is_finite() && self.solver_eps > 0.0) {
            return Err(ExpError::Config(format!("solver_eps must be positive, got {}", self.solver_eps)));
        }
        if let Some(b) = &self.builtin {
            b.parse::<BuiltinName>()?;
        }
        Ok(())
    }

    /// The configured ladder, or `default` when none was given.
    pub fn ladder(&self, default: fn() -> Vec<f64>) -> Result<Vec<f64>> {
        let t = self.temperatures.clone().unwrap_or_else(default);
        check_ladder(&t)?;
        Ok(t)
    }

    /// Loads the configured MDP, falling back to `default` when neither a
    /// path nor a builtin name is set.
    pub fn setup(&self, default: BuiltinName) -> Result<Setup> {
        let mut setup = match (&self.mdp_path, &self.builtin) {
            (Some(path), _) => {
                let spec = load_mdp(path)?;
                let grid = AtomGrid::default_for(&spec.mdp)?;
                Setup {
                    label: path.display().to_string(),
                    builtin: None,
                    mdp: spec.mdp,
                    reference: spec.reference,
                    initial_dist: spec.initial_dist,
                    grid,
                }
            }
            (None, name) => {
                let name = name.as_deref().map(str::parse).transpose()?.unwrap_or(default);
                let b = builtin(name)?;
                Setup {
                    label: name.to_string(),
                    builtin: Some(name),
                    mdp: b.mdp,
                    reference: b.reference,
                    initial_dist: b.initial_dist,
                    grid: b.grid,
                }
            }
        };
        if let Some(g) = &self.grid {
            setup.grid = AtomGrid::uniform(g.min, g.max, g.count)?;
        }
        Ok(setup)
    }
}

fn check_ladder(t: &[f64]) -> Result<()> {
    if t.is_empty() {
        return Err(ExpError::Config("temperature ladder is empty".into()));
    }
    if let Some(bad) = t.iter().find(|&&v| !(v > 0.0 && v.is_finite())) {
        return Err(ExpError::Config(format!("temperatures must be positive and finite, got {bad}")));
    }
    if t.windows(2).any(|w| w[1] >= w[0]) {
        return Err(ExpError::Config("temperatures must be strictly decreasing".into()));
    }
    Ok(())
}

/// A resolved MDP with everything an experiment needs.
#[derive(Debug, Clone)]
pub struct Setup {
    pub label: String,
    pub builtin: Option<BuiltinName>,
    pub mdp: TabularMdp,
    pub reference: Policy,
    pub initial_dist: Array1<f64>,
    pub grid: AtomGrid,
}
