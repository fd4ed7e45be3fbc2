//! Coupled and decoupled policies along a temperature ladder, exact and
//! from soft Q-learning, compared with the reference-optimal policy.

use std::path::{Path, PathBuf};

use erl_core::divergence::tv_distance;
use erl_core::solvers::{
    boltzmann_policy, decoupled_policy, default_opt_tol, optimality_filtered_reference, reference_value_iteration,
    soft_q_learning, soft_value_iteration, DecoupleConfig, SoftQLearningConfig,
};
use erl_core::Policy;
use rayon::prelude::*;

use crate::builtins::SOLVER_MAX_ITER;
use crate::config::{decade_ladder, ExperimentConfig, Setup};
use crate::error::Result;
use crate::output::{num, Table, POLICIES_HEADER, TV_HEADER};

pub const METHODS: [&str; 4] = ["coupled", "decoupled", "qlearning-coupled", "qlearning-decoupled"];

#[derive(Debug, Clone, PartialEq)]
pub struct PolicyRung {
    pub tau: f64,
    pub sigma: f64,
    /// Policies in [`METHODS`] order.
    pub policies: [Policy; 4],
    /// `sup_x TV(pi_x, pi*_ref,x)` in [`METHODS`] order.
    pub sup_tv: [f64; 4],
}

#[derive(Debug, Clone, PartialEq)]
pub struct PolicyLimitReport {
    pub reference_optimal: Policy,
    pub rungs: Vec<PolicyRung>,
}

pub fn sup_tv(a: &Policy, b: &Policy) -> Result<f64> {
    let mut m = 0.0_f64;
    for x in 0..a.n_states() {
        m = m.max(tv_distance(a.row(x), b.row(x))?);
    }
    Ok(m)
}

/// `G_tau q*_ref` restricted to the optimal actions, i.e. `pi*_ref`.
pub fn reference_optimal_policy(setup: &Setup, eps: f64) -> Result<Policy> {
    let q_ref = reference_value_iteration(&setup.mdp, &setup.reference, eps, SOLVER_MAX_ITER)?.q;
    Ok(optimality_filtered_reference(&q_ref, &setup.reference, default_opt_tol(&q_ref))?)
}

pub fn run(setup: &Setup, cfg: &ExperimentConfig) -> Result<PolicyLimitReport> {
    let ladder = cfg.ladder(decade_ladder)?;
    let target = reference_optimal_policy(setup, cfg.solver_eps)?;
    let (mdp, reference) = (&setup.mdp, &setup.reference);
    let rungs = ladder
        .par_iter()
        .enumerate()
        .map(|(k, &tau)| -> Result<PolicyRung> {
            let dc = DecoupleConfig::with_exponent(tau, cfg.decouple_exponent)?;
            let sigma = dc.decoupled();
            let q_tau = soft_value_iteration(mdp, reference, tau, cfg.solver_eps, SOLVER_MAX_ITER)?.q;
            let coupled = boltzmann_policy(&q_tau, reference, tau)?;
            let decoupled = decoupled_policy(mdp, reference, &dc, cfg.solver_eps, SOLVER_MAX_ITER)?;
            let ql = |temp: f64, stream: u64| {
                let mut c = SoftQLearningConfig::new(cfg.q_learning_steps, cfg.seed.wrapping_add(2 * k as u64 + stream));
                c.initial_dist = Some(setup.initial_dist.clone());
                soft_q_learning(mdp, reference, temp, &c)
            };
            let ql_coupled = boltzmann_policy(&ql(tau, 0)?, reference, tau)?;
            let ql_decoupled = boltzmann_policy(&ql(sigma, 1)?, reference, tau)?;
            let policies = [coupled, decoupled, ql_coupled, ql_decoupled];
            let mut tv = [0.0; 4];
            for (t, p) in tv.iter_mut().zip(&policies) {
                *t = sup_tv(p, &target)?;
            }
            Ok(PolicyRung { tau, sigma, policies, sup_tv: tv })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(PolicyLimitReport { reference_optimal: target, rungs })
}

/// Writes `policies.csv` and `tv.csv`. The reference-optimal policy is
/// included in `policies.csv` as method `reference-optimal` with `tau = sigma = 0`.
pub fn write(report: &PolicyLimitReport, dir: &Path) -> Result<Vec<PathBuf>> {
    let mut policies = Table::create(dir, "policies.csv", &POLICIES_HEADER)?;
    let mut tv = Table::create(dir, "tv.csv", &TV_HEADER)?;
    let mut emit = |tau: f64, sigma: f64, method: &str, p: &Policy| -> Result<()> {
        for ((x, a), &v) in p.probs().indexed_iter() {
            policies.row(&[num(tau), num(sigma), method.into(), x.to_string(), a.to_string(), num(v)])?;
        }
        Ok(())
    };
    emit(0.0, 0.0, "reference-optimal", &report.reference_optimal)?;
    for r in &report.rungs {
        for (m, p) in METHODS.iter().zip(&r.policies) {
            let sigma = if m.ends_with("decoupled") { r.sigma } else { r.tau };
            emit(r.tau, sigma, m, p)?;
        }
        for (m, v) in METHODS.iter().zip(r.sup_tv) {
            tv.row(&[num(r.tau), m.to_string(), num(v)])?;
        }
    }
    Ok(vec![policies.finish()?, tv.finish()?])
}
