//! Divergences between probability vectors over a finite set.

use ndarray::{Array1, ArrayView1};

use crate::error::{mismatch, Error, Result};
use crate::mdp::Policy;

/// `KL(p || q)` with `0 log(0/q) = 0`; `+inf` when `p` charges a `q`-null point.
pub fn kl_divergence(p: ArrayView1<'_, f64>, q: ArrayView1<'_, f64>) -> f64 {
    debug_assert_eq!(p.len(), q.len());
    let mut kl = 0.0;
    for (&pi, &qi) in p.iter().zip(q.iter()) {
        if pi > 0.0 {
            if qi <= 0.0 {
                return f64::INFINITY;
            }
            kl += pi * (pi / qi).ln();
        }
    }
    // Rounding can push the sum a hair below zero for p == q.
    kl.max(0.0)
}

/// Total variation distance, half the L1 distance.
pub fn tv_distance(p: ArrayView1<'_, f64>, q: ArrayView1<'_, f64>) -> Result<f64> {
    if p.len() != q.len() {
        return Err(mismatch("distribution length", p.len(), q.len()));
    }
    Ok(0.5 * p.iter().zip(q.iter()).map(|(a, b)| (a - b).abs()).sum::<f64>())
}

/// `kappa_pi(x) = KL(pi_x || reference_x)` for every state.
///
/// Fails with [`Error::KlSupport`] naming the first state where `pi_x` is not
/// absolutely continuous w.r.t. `reference_x`.
pub fn policy_kl_vector(policy: &Policy, reference: &Policy) -> Result<Array1<f64>> {
    if policy.probs().dim() != reference.probs().dim() {
        return Err(mismatch(
            "policy vs reference",
            format!("{:?}", reference.probs().dim()),
            format!("{:?}", policy.probs().dim()),
        ));
    }
    let mut out = Array1::zeros(policy.n_states());
    for x in 0..policy.n_states() {
        let kl = kl_divergence(policy.row(x), reference.row(x));
        if kl.is_infinite() {
            return Err(Error::KlSupport { state: x });
        }
        out[x] = kl;
    }
    Ok(out)
}
