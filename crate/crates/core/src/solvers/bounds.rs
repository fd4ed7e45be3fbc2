//! Total-variation bounds between Gibbs policies and the soft-value gap
//! `M_tau` that controls `q*_ref - q*_tau`.

use super::gibbs::{boltzmann_policy, lse_row, supported_max};
use crate::divergence::tv_distance;
use crate::error::{check_temperature, mismatch, Error, Result};
use crate::mdp::{Policy, QFunction};

/// Slack for floating-point evaluation of the total variation distance.
const TV_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct StateTvBound {
    /// `TV((G_tau q)_x, (G_tau q')_x)`.
    pub lhs: f64,
    /// Reference-supported sup of `|q(x, .) - q'(x, .)|`.
    pub delta: f64,
    /// `min { sqrt(delta / tau), sinh(4 delta / tau) / 2 }`.
    pub rhs_min: f64,
    /// `(2e - 3) / 4 * delta / tau`, only when `delta < tau / 2`.
    pub rhs_linear: Option<f64>,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TvBoundReport {
    pub states: Vec<StateTvBound>,
    pub holds: bool,
}

/// Evaluate both sides of the Gibbs-policy TV bound at every state.
pub fn tv_bound_check(q: &QFunction, q_other: &QFunction, reference: &Policy, tau: f64) -> Result<TvBoundReport> {
    check_temperature(tau)?;
    if q.values().dim() != q_other.values().dim() {
        return Err(mismatch(
            "q-function pair",
            format!("{:?}", q.values().dim()),
            format!("{:?}", q_other.values().dim()),
        ));
    }
    let p = boltzmann_policy(q, reference, tau)?;
    let p_other = boltzmann_policy(q_other, reference, tau)?;
    let linear_const = (2.0 * std::f64::consts::E - 3.0) / 4.0;
    let mut states = Vec::with_capacity(q.values().nrows());
    for x in 0..q.values().nrows() {
        let lhs = tv_distance(p.row(x), p_other.row(x))?;
        let delta = reference
            .support(x)
            .map(|a| (q.values()[[x, a]] - q_other.values()[[x, a]]).abs())
            .fold(0.0, f64::max);
        let ratio = delta / tau;
        let rhs_min = ratio.sqrt().min(0.5 * (4.0 * ratio).sinh());
        let rhs_linear = (delta < tau / 2.0).then(|| linear_const * ratio);
        let holds = lhs <= rhs_min + TV_SLACK && rhs_linear.map_or(true, |b| lhs <= b + TV_SLACK);
        states.push(StateTvBound { lhs, delta, rhs_min, rhs_linear, holds });
    }
    let holds = states.iter().all(|s| s.holds);
    Ok(TvBoundReport { states, holds })
}

/// `M_tau(q) = sup_x (max_{supp ref_x} q(x, .) - v_tau q(x))`.
pub fn m_tau_gap(q: &QFunction, reference: &Policy, tau: f64) -> Result<f64> {
    check_temperature(tau)?;
    if q.values().dim() != reference.probs().dim() {
        return Err(mismatch(
            "q-function vs reference",
            format!("{:?}", reference.probs().dim()),
            format!("{:?}", q.values().dim()),
        ));
    }
    let mut gap = 0.0_f64;
    for x in 0..q.values().nrows() {
        let row = q.values().row(x);
        let m = supported_max(row, reference.row(x)).ok_or(Error::EmptySupport { state: x })?;
        let v = lse_row(row, reference.row(x), tau).ok_or(Error::EmptySupport { state: x })?;
        gap = gap.max(m - v);
    }
    // v <= max holds exactly in real arithmetic.
    Ok(gap.max(0.0))
}

/// Smallest reference mass of the per-state optimal set of `q`.
pub fn min_optimal_mass(q: &QFunction, reference: &Policy, opt_tol: f64) -> Result<f64> {
    let sets = super::decouple::optimal_action_sets(q, reference, opt_tol)?;
    Ok(sets
        .iter()
        .enumerate()
        .map(|(x, set)| set.iter().map(|&a| reference.probs()[[x, a]]).sum::<f64>())
        .fold(f64::INFINITY, f64::min))
}
