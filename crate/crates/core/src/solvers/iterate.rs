//! Fixed-point solvers for the contractive operators in [`super::operators`].

use super::operators::{reference_optimality_backup, soft_optimality_backup, soft_policy_backup, zeros_like};
use crate::error::{check_temperature, check_tolerance, Error, Result};
use crate::mdp::{Policy, QFunction, TabularMdp};

/// Result of a successful fixed-point solve.
#[derive(Debug, Clone, PartialEq)]
pub struct SoftSolveReport {
    pub q: QFunction,
    pub iterations: usize,
    /// Sup-norm distance between the last two iterates.
    pub final_residual: f64,
    /// Temperature of the solved operator; `0.0` for the reference-optimality operator.
    pub temperature: f64,
}

/// Iterate `backup` from `q = 0` until successive iterates are within
/// `eps (1 - gamma) / gamma`, which certifies `||q - q_fix|| <= eps`.
fn solve_contraction<F>(mdp: &TabularMdp, eps: f64, max_iter: usize, temperature: f64, mut backup: F) -> Result<SoftSolveReport>
where
    F: FnMut(&QFunction) -> Result<QFunction>,
{
    check_tolerance(eps)?;
    let gamma = mdp.discount();
    let stop = eps * (1.0 - gamma) / gamma;
    let mut q = zeros_like(mdp);
    let mut residual = f64::INFINITY;
    for it in 1..=max_iter {
        let next = backup(&q)?;
        residual = next.sup_distance(&q);
        q = next;
        if residual <= stop {
            return Ok(SoftSolveReport { q, iterations: it, final_residual: residual, temperature });
        }
    }
    Err(Error::NotConverged { iterations: max_iter, residual, best: Box::new(q) })
}

/// Computes `q*_tau`, the fixed point of the soft optimality operator, to
/// sup-norm accuracy `eps`.
pub fn soft_value_iteration(mdp: &TabularMdp, reference: &Policy, tau: f64, eps: f64, max_iter: usize) -> Result<SoftSolveReport> {
    check_temperature(tau)?;
    solve_contraction(mdp, eps, max_iter, tau, |q| soft_optimality_backup(mdp, reference, tau, q))
}

/// Computes the soft action values `q^pi_tau` of a fixed policy.
pub fn soft_policy_evaluation(
    mdp: &TabularMdp,
    reference: &Policy,
    tau: f64,
    policy: &Policy,
    eps: f64,
    max_iter: usize,
) -> Result<SoftSolveReport> {
    check_temperature(tau)?;
    solve_contraction(mdp, eps, max_iter, tau, |q| soft_policy_backup(mdp, reference, tau, policy, q))
}

/// Computes `q*_ref`, the reference-optimal action-value function.
pub fn reference_value_iteration(mdp: &TabularMdp, reference: &Policy, eps: f64, max_iter: usize) -> Result<SoftSolveReport> {
    solve_contraction(mdp, eps, max_iter, 0.0, |q| reference_optimality_backup(mdp, reference, q))
}
