//! Categorical return estimation with coupled and decoupled temperatures,
//! compared with a Monte-Carlo oracle of the reference-optimal return.

use std::path::{Path, PathBuf};

use erl_core::dist::{
    cramer_projection, decoupled_return_estimation, mix_state_distribution, wasserstein_p_particles, AtomGrid,
    ReturnDistributionFn, StateReturnDistribution, TraceOptions,
};
use erl_core::precision::Precision;
use erl_core::Policy;
use rayon::prelude::*;

use super::policy_limit::reference_optimal_policy;
use crate::config::{odd_decade_ladder, ExperimentConfig, Setup};
use crate::error::Result;
use crate::montecarlo::{empirical, mean_and_se, sample_returns};
use crate::output::{num, Table, DISTRIBUTIONS_HEADER, SUMMARY_HEADER};

/// State whose return distribution is compared with the oracle.
pub const ORACLE_STATE: usize = 0;

/// One run of control followed by evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct ReturnEstimate {
    /// Evaluation temperature, the one the Gibbs policy is built at.
    pub tau: f64,
    /// Control temperature.
    pub sigma: f64,
    pub z: ReturnDistributionFn,
    pub policy: Policy,
    /// State return distributions `sum_a pi(a | x) z(x, a)`.
    pub eta: StateReturnDistribution,
    pub clipped_mass: f64,
}

impl ReturnEstimate {
    pub fn state_particles(&self, x: usize) -> Vec<(f64, f64)> {
        self.eta.grid().atoms().iter().copied().zip(self.eta.row(x).iter().copied()).filter(|p| p.1 > 0.0).collect()
    }
}

/// Control at `sigma` for `n_control` steps from a point mass at zero, then
/// `n_eval` evaluation steps of `G_tau` of the extracted mean at `tau`.
pub fn estimate(
    setup: &Setup,
    tau: f64,
    sigma: f64,
    n_control: usize,
    n_eval: usize,
    precision: Precision,
) -> Result<ReturnEstimate> {
    let (ns, na) = (setup.mdp.n_states(), setup.mdp.n_actions());
    let z0 = ReturnDistributionFn::point_mass(ns, na, setup.grid.clone(), 0.0);
    let opts = TraceOptions { precision, snapshot_every: 0 };
    let est = decoupled_return_estimation(&setup.mdp, &setup.reference, tau, sigma, n_control, n_eval, &z0, &opts)?;
    let eta = mix_state_distribution(&est.z_hat, &est.pi_hat)?;
    Ok(ReturnEstimate { tau, sigma, z: est.z_hat, policy: est.pi_hat, eta, clipped_mass: est.max_clipped_mass })
}

/// Empirical return distribution of `pi*_ref` from one state.
#[derive(Debug, Clone, PartialEq)]
pub struct Oracle {
    pub state: usize,
    pub particles: Vec<(f64, f64)>,
    pub mean: f64,
    pub standard_error: f64,
}

impl Oracle {
    pub fn w1(&self, est: &ReturnEstimate) -> Result<f64> {
        Ok(wasserstein_p_particles(&est.state_particles(self.state), &self.particles, 1.0)?)
    }

    pub fn projected(&self, grid: &AtomGrid) -> Vec<f64> {
        cramer_projection(&self.particles, grid).probs
    }
}

pub fn oracle(setup: &Setup, state: usize, rollouts: usize, seed: u64, eps: f64) -> Result<Oracle> {
    let pi = reference_optimal_policy(setup, eps)?;
    let samples = sample_returns(&setup.mdp, &pi, state, rollouts, seed)?;
    let (mean, standard_error) = mean_and_se(&samples);
    Ok(Oracle { state, particles: empirical(&samples), mean, standard_error })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReturnRung {
    pub coupled: ReturnEstimate,
    pub decoupled: ReturnEstimate,
    pub coupled_w1: f64,
    pub decoupled_w1: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReturnDistReport {
    pub oracle: Oracle,
    pub rungs: Vec<ReturnRung>,
}

/// For each control temperature `c` on the ladder: the coupled estimate
/// evaluates `G_c` at `c`, the decoupled one evaluates `G_t` at
/// `t = c^(1 / decouple_exponent)`, both from the same control run.
pub fn run(setup: &Setup, cfg: &ExperimentConfig, precision: Precision) -> Result<ReturnDistReport> {
    let ladder = cfg.ladder(odd_decade_ladder)?;
    let oracle = oracle(setup, ORACLE_STATE, cfg.oracle_rollouts, cfg.seed, cfg.solver_eps)?;
    let rungs = ladder
        .par_iter()
        .map(|&c| -> Result<ReturnRung> {
            let target = c.powf(1.0 / cfg.decouple_exponent);
            let coupled = estimate(setup, c, c, cfg.n_control, cfg.n_eval, precision)?;
            let decoupled = estimate(setup, target, c, cfg.n_control, cfg.n_eval, precision)?;
            Ok(ReturnRung { coupled_w1: oracle.w1(&coupled)?, decoupled_w1: oracle.w1(&decoupled)?, coupled, decoupled })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ReturnDistReport { oracle, rungs })
}

/// Writes `distributions.csv` and `summary.csv`. Distribution rows hold
/// `z(x, a)` for each action and the state mixture with action `mixed`;
/// the `atom` column is the atom location. The oracle, projected onto the
/// grid, appears with method `oracle` and `tau = sigma = 0`.
pub fn write(report: &ReturnDistReport, grid: &AtomGrid, dir: &Path) -> Result<Vec<PathBuf>> {
    let mut dists = Table::create(dir, "distributions.csv", &DISTRIBUTIONS_HEADER)?;
    let mut summary = Table::create(dir, "summary.csv", &SUMMARY_HEADER)?;
    let atoms = grid.atoms();
    let o = &report.oracle;
    for (k, &p) in o.projected(grid).iter().enumerate() {
        dists.row(&[num(0.0), num(0.0), "oracle".into(), o.state.to_string(), "mixed".into(), num(atoms[k]), num(p)])?;
    }
    for r in &report.rungs {
        for (method, est, w1) in [("coupled", &r.coupled, r.coupled_w1), ("decoupled", &r.decoupled, r.decoupled_w1)] {
            let head = [num(est.tau), num(est.sigma), method.to_string()];
            for x in 0..est.z.n_states() {
                for a in 0..est.z.n_actions() {
                    for (k, &p) in est.z.slice(x, a).iter().enumerate() {
                        let mut row = head.to_vec();
                        row.extend([x.to_string(), a.to_string(), num(atoms[k]), num(p)]);
                        dists.row(&row)?;
                    }
                }
                for (k, &p) in est.eta.row(x).iter().enumerate() {
                    let mut row = head.to_vec();
                    row.extend([x.to_string(), "mixed".into(), num(atoms[k]), num(p)]);
                    dists.row(&row)?;
                }
            }
            let mut row = head.to_vec();
            row.extend([o.state.to_string(), num(w1), num(est.clipped_mass)]);
            summary.row(&row)?;
        }
    }
    Ok(vec![dists.finish()?, summary.finish()?])
}
