//! Random instances for the property sweeps.

use erl_core::{Policy, QFunction, TabularMdp};
use ndarray::{Array2, Array3};
use rand::Rng;

/// A point drawn uniformly from the probability simplex.
pub fn simplex<R: Rng>(rng: &mut R, n: usize) -> Vec<f64> {
    let e: Vec<f64> = (0..n).map(|_| -(1.0 - rng.gen::<f64>()).ln()).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|v| v / s).collect()
}

/// Dense random transitions and rewards in `[-1, 1]`.
pub fn mdp<R: Rng>(rng: &mut R, ns: usize, na: usize, gamma: f64) -> TabularMdp {
    let mut p = Array3::zeros((ns, na, ns));
    for x in 0..ns {
        for a in 0..na {
            for (y, v) in simplex(rng, ns).into_iter().enumerate() {
                p[[x, a, y]] = v;
            }
        }
    }
    let r = Array2::from_shape_fn((ns, na), |_| rng.gen_range(-1.0..=1.0));
    TabularMdp::new(p, r, gamma).expect("simplex rows are valid")
}

/// Random policy; with probability `sparsity` per entry an action is dropped
/// from the support, always keeping at least one.
pub fn policy<R: Rng>(rng: &mut R, ns: usize, na: usize, sparsity: f64) -> Policy {
    let mut w = Array2::zeros((ns, na));
    for x in 0..ns {
        let keep = rng.gen_range(0..na);
        for (a, v) in simplex(rng, na).into_iter().enumerate() {
            if a == keep || rng.gen::<f64>() >= sparsity {
                w[[x, a]] = v;
            }
        }
    }
    Policy::from_weights(w).expect("each row keeps positive mass")
}

/// Random policy supported inside the support of `reference`.
pub fn policy_within<R: Rng>(rng: &mut R, reference: &Policy) -> Policy {
    let w = reference.probs().mapv(|p| if p > 0.0 { rng.gen_range(0.01..1.0) } else { 0.0 });
    Policy::from_weights(w).expect("reference rows have support")
}

pub fn q_function<R: Rng>(rng: &mut R, ns: usize, na: usize, scale: f64) -> QFunction {
    QFunction::new(Array2::from_shape_fn((ns, na), |_| rng.gen_range(-scale..=scale)))
}

/// `10^u` for `u` uniform on `[lo, hi]`.
pub fn log_uniform<R: Rng>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    10f64.powf(rng.gen_range(lo..=hi))
}
