//! One-step Bellman-type operators on action-value functions.

use ndarray::{Array1, Array2, Axis};

use super::gibbs::{lse_row, supported_max};
use crate::divergence::kl_divergence;
use crate::error::{check_temperature, Error, Result};
use crate::mdp::{Policy, QFunction, TabularMdp};

fn check_reference(mdp: &TabularMdp, reference: &Policy) -> Result<()> {
    mdp.check_policy(reference, "reference policy")
}

fn lift(mdp: &TabularMdp, next_value: &Array1<f64>) -> QFunction {
    QFunction::new(mdp.reward() + &(mdp.expect_next(next_value) * mdp.discount()))
}

/// Soft Bellman optimality operator:
/// `(T*_tau q)(x, a) = r(x, a) + gamma E_{x'} v_tau q(x')`.
pub fn soft_optimality_backup(mdp: &TabularMdp, reference: &Policy, tau: f64, q: &QFunction) -> Result<QFunction> {
    check_temperature(tau)?;
    check_reference(mdp, reference)?;
    mdp.check_q(q)?;
    let mut v = Array1::zeros(mdp.n_states());
    for (x, vx) in v.iter_mut().enumerate() {
        *vx = lse_row(q.values().row(x), reference.row(x), tau).ok_or(Error::EmptySupport { state: x })?;
    }
    Ok(lift(mdp, &v))
}

/// States `y` with `P(y | x, a) > 0` for some `(x, a)`.
pub(crate) fn reachable_states(mdp: &TabularMdp) -> Vec<bool> {
    let mut hit = vec![false; mdp.n_states()];
    for ((_, _, y), &p) in mdp.transition().indexed_iter() {
        if p > 0.0 {
            hit[y] = true;
        }
    }
    hit
}

/// KL penalties `KL(pi_x || ref_x)`, failing only where a state can be
/// entered and the penalty is infinite. Unreachable states get zero.
pub(crate) fn reachable_kl(mdp: &TabularMdp, policy: &Policy, reference: &Policy) -> Result<Array1<f64>> {
    let reachable = reachable_states(mdp);
    let mut kl = Array1::zeros(mdp.n_states());
    for x in 0..mdp.n_states() {
        let k = kl_divergence(policy.row(x), reference.row(x));
        if k.is_infinite() {
            if reachable[x] {
                return Err(Error::KlSupport { state: x });
            }
        } else {
            kl[x] = k;
        }
    }
    Ok(kl)
}

/// Soft policy-evaluation operator:
/// `(T^pi_tau q)(x, a) = r(x, a) + gamma E_{x'} [ E_{a' ~ pi} q(x', a') - tau KL(pi_x' || ref_x') ]`.
pub fn soft_policy_backup(
    mdp: &TabularMdp,
    reference: &Policy,
    tau: f64,
    policy: &Policy,
    q: &QFunction,
) -> Result<QFunction> {
    if !(tau >= 0.0) || !tau.is_finite() {
        return Err(Error::InvalidTemperature(tau));
    }
    check_reference(mdp, reference)?;
    mdp.check_policy(policy, "policy")?;
    mdp.check_q(q)?;
    let mut v = (q.values() * policy.probs()).sum_axis(Axis(1));
    if tau > 0.0 {
        let kl = reachable_kl(mdp, policy, reference)?;
        v.scaled_add(-tau, &kl);
    }
    Ok(lift(mdp, &v))
}

/// Bellman reference-optimality operator: the max in the classic optimality
/// backup is restricted to the support of the reference.
pub fn reference_optimality_backup(mdp: &TabularMdp, reference: &Policy, q: &QFunction) -> Result<QFunction> {
    check_reference(mdp, reference)?;
    mdp.check_q(q)?;
    let mut v = Array1::zeros(mdp.n_states());
    for (x, vx) in v.iter_mut().enumerate() {
        *vx = supported_max(q.values().row(x), reference.row(x)).ok_or(Error::EmptySupport { state: x })?;
    }
    Ok(lift(mdp, &v))
}

/// Classic optimality backup `r + gamma E max_a q(x', a)` (no support filter).
pub fn optimality_backup(mdp: &TabularMdp, q: &QFunction) -> Result<QFunction> {
    mdp.check_q(q)?;
    let v = q.values().map_axis(Axis(1), |row| row.iter().copied().fold(f64::NEG_INFINITY, f64::max));
    Ok(lift(mdp, &v))
}

pub(crate) fn zeros_like(mdp: &TabularMdp) -> QFunction {
    QFunction::new(Array2::zeros((mdp.n_states(), mdp.n_actions())))
}
