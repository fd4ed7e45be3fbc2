//! Optimality filtering of the reference policy and temperature-decoupled
//! Boltzmann-Gibbs policies.

use ndarray::Array2;

use super::gibbs::{boltzmann_policy, supported_max};
use super::iterate::soft_value_iteration;
use crate::error::{check_temperature, Error, Result};
use crate::mdp::{Policy, QFunction, TabularMdp};

/// Default optimal-set tolerance `1e-8 (1 + ||q||_sup)`.
pub fn default_opt_tol(q: &QFunction) -> f64 {
    1e-8 * (1.0 + q.sup_norm())
}

/// Reference-supported actions within `opt_tol` of the supported max, per state.
pub fn optimal_action_sets(q: &QFunction, reference: &Policy, opt_tol: f64) -> Result<Vec<Vec<usize>>> {
    if !(opt_tol >= 0.0) {
        return Err(Error::InvalidArgument(format!("opt_tol must be nonnegative, got {opt_tol}")));
    }
    if q.values().dim() != reference.probs().dim() {
        return Err(crate::error::mismatch(
            "q-function vs reference",
            format!("{:?}", reference.probs().dim()),
            format!("{:?}", q.values().dim()),
        ));
    }
    (0..q.values().nrows())
        .map(|x| {
            let row = q.values().row(x);
            let best = supported_max(row, reference.row(x)).ok_or(Error::EmptySupport { state: x })?;
            Ok(reference.support(x).filter(|&a| row[a] >= best - opt_tol).collect())
        })
        .collect()
}

/// The reference policy restricted to (near-)optimal actions and renormalized.
pub fn optimality_filtered_reference(q_star_ref: &QFunction, reference: &Policy, opt_tol: f64) -> Result<Policy> {
    let sets = optimal_action_sets(q_star_ref, reference, opt_tol)?;
    let mut w = Array2::zeros(reference.probs().dim());
    for (x, set) in sets.iter().enumerate() {
        for &a in set {
            w[[x, a]] = reference.probs()[[x, a]];
        }
    }
    Policy::from_weights(w)
}

/// Target temperature `tau` and the faster-vanishing temperature `sigma` at
/// which the potential is computed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecoupleConfig {
    target: f64,
    decoupled: f64,
}

impl DecoupleConfig {
    pub fn new(target: f64, decoupled: f64) -> Result<Self> {
        check_temperature(target)?;
        check_temperature(decoupled)?;
        Ok(Self { target, decoupled })
    }

    /// `sigma = tau^exponent`; the default schedule uses exponent 2.
    pub fn with_exponent(target: f64, exponent: f64) -> Result<Self> {
        Self::new(target, target.powf(exponent))
    }

    pub fn target(&self) -> f64 {
        self.target
    }

    pub fn decoupled(&self) -> f64 {
        self.decoupled
    }

    /// `sigma / tau < 1`.
    pub fn is_gambit_regime(&self) -> bool {
        self.decoupled < self.target
    }
}

/// `G_tau q*_sigma`: solve the soft optimality fixed point at `sigma`, then
/// take its Gibbs policy at `tau`.
pub fn decoupled_policy(
    mdp: &TabularMdp,
    reference: &Policy,
    cfg: &DecoupleConfig,
    eps: f64,
    max_iter: usize,
) -> Result<Policy> {
    let solved = soft_value_iteration(mdp, reference, cfg.decoupled, eps, max_iter)?;
    boltzmann_policy(&solved.q, reference, cfg.target)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::{random_mdp, random_policy};
    use ndarray::array;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn tied_actions_get_uniform_mass() {
        let q = QFunction::new(array![[1.0, 1.0, 0.0]]);
        let pi = optimality_filtered_reference(&q, &Policy::uniform(1, 3), 0.0).unwrap();
        assert_eq!(pi.row(0).to_vec(), vec![0.5, 0.5, 0.0]);
    }

    #[test]
    fn unique_optimum_is_deterministic() {
        let q = QFunction::new(array![[0.0, 2.0, 1.0]]);
        let pi = optimality_filtered_reference(&q, &Policy::uniform(1, 3), 1e-8).unwrap();
        assert_eq!(pi.row(0).to_vec(), vec![0.0, 1.0, 0.0]);
    }

    #[test]
    fn restriction_keeps_reference_weights() {
        let reference = Policy::new(array![[0.9, 0.1]]).unwrap();
        let q = QFunction::new(array![[3.0, 3.0]]);
        let pi = optimality_filtered_reference(&q, &reference, 0.0).unwrap();
        assert_eq!(pi, reference);
    }

    #[test]
    fn unsupported_maximizer_is_ignored() {
        let reference = Policy::new(array![[0.0, 0.5, 0.5]]).unwrap();
        let q = QFunction::new(array![[9.0, 1.0, 0.0]]);
        let pi = optimality_filtered_reference(&q, &reference, 0.0).unwrap();
        assert_eq!(pi.row(0).to_vec(), vec![0.0, 1.0, 0.0]);
    }

    #[test]
    fn exact_ties_match_brute_force_argmax() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        for _ in 0..200 {
            let (ns, na) = (3, 5);
            // Small integer grid to force ties.
            let q = QFunction::new(Array2::from_shape_fn((ns, na), |_| rng.gen_range(0..3) as f64));
            let mut w = random_policy(&mut rng, ns, na).into_inner();
            for x in 0..ns {
                for a in 1..na {
                    if rng.gen_bool(0.3) {
                        w[[x, a]] = 0.0;
                    }
                }
            }
            let reference = Policy::from_weights(w).unwrap();
            let pi = optimality_filtered_reference(&q, &reference, 0.0).unwrap();
            for x in 0..ns {
                let supported: Vec<usize> = (0..na).filter(|&a| reference.probs()[[x, a]] > 0.0).collect();
                let best = supported.iter().map(|&a| q.values()[[x, a]]).fold(f64::NEG_INFINITY, f64::max);
                let argmax: Vec<usize> = supported.into_iter().filter(|&a| q.values()[[x, a]] == best).collect();
                assert_eq!(pi.support(x).collect::<Vec<_>>(), argmax);
            }
        }
    }

    #[test]
    fn config_validation_and_regime() {
        assert!(DecoupleConfig::new(0.0, 0.1).is_err());
        assert!(DecoupleConfig::new(0.1, -1.0).is_err());
        let cfg = DecoupleConfig::with_exponent(0.1, 2.0).unwrap();
        assert!((cfg.decoupled() - 0.01).abs() < 1e-17);
        assert!(cfg.is_gambit_regime());
        assert!(!DecoupleConfig::new(0.1, 0.1).unwrap().is_gambit_regime());
    }

    #[test]
    fn equal_temperatures_give_coupled_policy() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let mdp = random_mdp(&mut rng, 4, 3, 0.9);
        let reference = random_policy(&mut rng, 4, 3);
        let cfg = DecoupleConfig::new(0.2, 0.2).unwrap();
        let dec = decoupled_policy(&mdp, &reference, &cfg, 1e-10, 10_000).unwrap();
        let star = soft_value_iteration(&mdp, &reference, 0.2, 1e-10, 10_000).unwrap();
        let coupled = boltzmann_policy(&star.q, &reference, 0.2).unwrap();
        assert_eq!(dec, coupled);
    }
}
