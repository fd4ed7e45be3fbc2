//! Discounted state-action occupancy measures and the KL-regularized
//! objective defined on them.

use ndarray::{Array1, Array2, Axis};

use crate::divergence::kl_divergence;
use crate::error::{mismatch, Error, Result};
use crate::linalg;
use crate::mdp::{policy_state_kernel, Policy, TabularMdp};

/// Residual tolerance on the Bellman-flow equation for valid occupancies.
pub const FLOW_TOL: f64 = 1e-10;

/// A normalized discounted visitation distribution over `(state, action)`
/// together with the initial state distribution it was generated from.
#[derive(Debug, Clone, PartialEq)]
pub struct OccupancyMeasure {
    mass: Array2<f64>,
    initial_dist: Array1<f64>,
}

impl OccupancyMeasure {
    /// Wrap an arbitrary joint mass matrix; no flow constraint is checked.
    pub fn from_mass(mass: Array2<f64>, initial_dist: Array1<f64>) -> Result<Self> {
        if mass.nrows() != initial_dist.len() {
            return Err(mismatch("occupancy initial distribution", mass.nrows(), initial_dist.len()));
        }
        Ok(Self { mass, initial_dist })
    }

    pub fn mass(&self) -> &Array2<f64> {
        &self.mass
    }

    pub fn initial_dist(&self) -> &Array1<f64> {
        &self.initial_dist
    }

    /// `nu(x) = sum_a mu(x, a)`.
    pub fn state_marginal(&self) -> Array1<f64> {
        self.mass.sum_axis(Axis(1))
    }

    /// Conditional action distribution; zero-marginal states fall back to `fallback`.
    pub fn conditional_policy(&self, fallback: &Policy) -> Result<Policy> {
        if fallback.probs().dim() != self.mass.dim() {
            return Err(mismatch(
                "fallback policy",
                format!("{:?}", self.mass.dim()),
                format!("{:?}", fallback.probs().dim()),
            ));
        }
        let mut probs = fallback.probs().clone();
        for (x, row) in self.mass.outer_iter().enumerate() {
            let nu = row.sum();
            if nu > 0.0 {
                probs.row_mut(x).assign(&row.mapv(|m| m / nu));
            }
        }
        Ok(Policy::from_normalized(probs))
    }

    /// Convex combination `alpha * self + (1 - alpha) * other`.
    pub fn mix(&self, other: &OccupancyMeasure, alpha: f64) -> Result<OccupancyMeasure> {
        if self.mass.dim() != other.mass.dim() {
            return Err(mismatch(
                "occupancy mixture",
                format!("{:?}", self.mass.dim()),
                format!("{:?}", other.mass.dim()),
            ));
        }
        Ok(OccupancyMeasure {
            mass: &self.mass * alpha + &other.mass * (1.0 - alpha),
            initial_dist: &self.initial_dist * alpha + &other.initial_dist * (1.0 - alpha),
        })
    }

    /// Total variation distance between the joint masses.
    pub fn tv_distance(&self, other: &OccupancyMeasure) -> f64 {
        0.5 * self.mass.iter().zip(other.mass.iter()).map(|(a, b)| (a - b).abs()).sum::<f64>()
    }
}

/// Occupancy measure `(1 - gamma) sum_t gamma^t Pr(X_t = x, A_t = a)` of `policy`.
///
/// The state marginal `d` solves the flow equation
/// `d = (1 - gamma) nu0 + gamma K_pi^T d`; the joint mass is `d(x) pi(a|x)`.
pub fn occupancy_measure(mdp: &TabularMdp, policy: &Policy, initial_dist: &Array1<f64>) -> Result<OccupancyMeasure> {
    let ns = mdp.n_states();
    if initial_dist.len() != ns {
        return Err(mismatch("initial distribution", ns, initial_dist.len()));
    }
    if initial_dist.iter().any(|&p| p < 0.0) || (initial_dist.sum() - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidArgument("initial distribution must be a probability vector".into()));
    }
    let gamma = mdp.discount();
    let kernel = policy_state_kernel(mdp, policy)?;
    let system = Array2::eye(ns) - &kernel.t() * gamma;
    let rhs = initial_dist * (1.0 - gamma);
    let d = linalg::solve(&system, &rhs)?;
    let mut mass = policy.probs().clone();
    for (x, mut row) in mass.outer_iter_mut().enumerate() {
        // The exact solution is nonnegative; clamp LU round-off.
        let dx = d[x].max(0.0);
        row.mapv_inplace(|p| p * dx);
    }
    Ok(OccupancyMeasure { mass, initial_dist: initial_dist.clone() })
}

/// `sup_y |nu(y) - (1 - gamma) nu0(y) - gamma sum_{x,a} P(y|x,a) mu(x,a)|`.
pub fn occupancy_flow_residual(mdp: &TabularMdp, occ: &OccupancyMeasure) -> Result<f64> {
    let (ns, na) = (mdp.n_states(), mdp.n_actions());
    if occ.mass.dim() != (ns, na) {
        return Err(mismatch("occupancy", format!("{:?}", (ns, na)), format!("{:?}", occ.mass.dim())));
    }
    let gamma = mdp.discount();
    let nu = occ.state_marginal();
    let mut inflow = Array1::<f64>::zeros(ns);
    for x in 0..ns {
        for a in 0..na {
            let m = occ.mass[[x, a]];
            if m != 0.0 {
                inflow.scaled_add(m, &mdp.next_states(x, a));
            }
        }
    }
    Ok((0..ns)
        .map(|y| (nu[y] - (1.0 - gamma) * occ.initial_dist[y] - gamma * inflow[y]).abs())
        .fold(0.0, f64::max))
}

/// `R(mu) = sum_x nu(x) KL(pi^mu_x || reference_x)`; `+inf` on an
/// absolute-continuity failure at a charged state.
pub fn regularizer(occ: &OccupancyMeasure, reference: &Policy) -> Result<f64> {
    if reference.probs().dim() != occ.mass.dim() {
        return Err(mismatch(
            "reference policy",
            format!("{:?}", occ.mass.dim()),
            format!("{:?}", reference.probs().dim()),
        ));
    }
    let mut total = 0.0;
    for (x, row) in occ.mass.outer_iter().enumerate() {
        let nu = row.sum();
        if nu > 0.0 {
            let cond = row.mapv(|m| m / nu);
            let kl = kl_divergence(cond.view(), reference.row(x));
            if kl.is_infinite() {
                return Ok(f64::INFINITY);
            }
            total += nu * kl;
        }
    }
    Ok(total)
}

/// `J_tau(mu) = <r, mu> - tau R(mu)`; `-inf` when `R` is infinite and `tau > 0`.
pub fn erl_objective(mdp: &TabularMdp, occ: &OccupancyMeasure, reference: &Policy, temperature: f64) -> Result<f64> {
    if !(temperature >= 0.0) || !temperature.is_finite() {
        return Err(Error::InvalidTemperature(temperature));
    }
    if occ.mass.dim() != mdp.reward().dim() {
        return Err(mismatch(
            "occupancy",
            format!("{:?}", mdp.reward().dim()),
            format!("{:?}", occ.mass.dim()),
        ));
    }
    let linear = (mdp.reward() * &occ.mass).sum();
    if temperature == 0.0 {
        return Ok(linear);
    }
    let r = regularizer(occ, reference)?;
    if r.is_infinite() {
        Ok(f64::NEG_INFINITY)
    } else {
        Ok(linear - temperature * r)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::{random_mdp, random_policy, random_simplex};
    use ndarray::{array, Array3};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn single_state_occupancy() {
        let mdp = TabularMdp::new(Array3::ones((1, 1, 1)), array![[0.0]], 0.5).unwrap();
        let occ = occupancy_measure(&mdp, &Policy::uniform(1, 1), &array![1.0]).unwrap();
        assert_eq!(occ.mass(), &array![[1.0]]);
        assert_eq!(occupancy_flow_residual(&mdp, &occ).unwrap(), 0.0);
    }

    #[test]
    fn absorbing_chain_splits_geometrically() {
        let mut p = Array3::zeros((2, 1, 2));
        p[[0, 0, 1]] = 1.0;
        p[[1, 0, 1]] = 1.0;
        let gamma = 0.7;
        let mdp = TabularMdp::new(p, Array2::zeros((2, 1)), gamma).unwrap();
        let occ = occupancy_measure(&mdp, &Policy::uniform(2, 1), &array![1.0, 0.0]).unwrap();
        let nu = occ.state_marginal();
        assert!((nu[0] - (1.0 - gamma)).abs() < 1e-14);
        assert!((nu[1] - gamma).abs() < 1e-14);
    }

    #[test]
    fn produced_occupancies_satisfy_flow() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..50 {
            let ns = rng.gen_range(1..7);
            let na = rng.gen_range(1..4);
            let gamma = rng.gen_range(0.05..0.99);
            let mdp = random_mdp(&mut rng, ns, na, gamma);
            let pi = random_policy(&mut rng, ns, na);
            let nu0 = Array1::from(random_simplex(&mut rng, ns));
            let occ = occupancy_measure(&mdp, &pi, &nu0).unwrap();
            assert!(occupancy_flow_residual(&mdp, &occ).unwrap() <= FLOW_TOL);
            assert!((occ.mass().sum() - 1.0).abs() <= 1e-10);
        }
    }

    #[test]
    fn uniform_mass_violates_flow() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let mdp = random_mdp(&mut rng, 4, 2, 0.9);
        let occ = OccupancyMeasure::from_mass(Array2::from_elem((4, 2), 1.0 / 8.0), array![1.0, 0.0, 0.0, 0.0]).unwrap();
        assert!(occupancy_flow_residual(&mdp, &occ).unwrap() > 1e-3);
    }

    #[test]
    fn regularizer_examples() {
        let reference = Policy::uniform(2, 2);
        let same = OccupancyMeasure::from_mass(array![[0.2, 0.2], [0.3, 0.3]], array![0.5, 0.5]).unwrap();
        assert_eq!(regularizer(&same, &reference).unwrap(), 0.0);

        let greedy = OccupancyMeasure::from_mass(array![[0.4, 0.0], [0.0, 0.6]], array![0.5, 0.5]).unwrap();
        let r = regularizer(&greedy, &reference).unwrap();
        assert!((r - 2f64.ln()).abs() < 1e-15);

        let narrow = Policy::new(array![[1.0, 0.0], [0.5, 0.5]]).unwrap();
        let off = OccupancyMeasure::from_mass(array![[0.1, 0.1], [0.4, 0.4]], array![0.5, 0.5]).unwrap();
        assert_eq!(regularizer(&off, &narrow).unwrap(), f64::INFINITY);
    }

    #[test]
    fn zero_marginal_states_carry_no_weight() {
        let narrow = Policy::new(array![[1.0, 0.0], [0.5, 0.5]]).unwrap();
        let occ = OccupancyMeasure::from_mass(array![[0.0, 0.0], [0.5, 0.5]], array![0.0, 1.0]).unwrap();
        assert_eq!(regularizer(&occ, &narrow).unwrap(), 0.0);
        let cond = occ.conditional_policy(&narrow).unwrap();
        assert_eq!(cond.row(0), narrow.row(0));
    }

    #[test]
    fn objective_limits() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let mdp = random_mdp(&mut rng, 3, 2, 0.8);
        let reference = random_policy(&mut rng, 3, 2);
        let nu0 = array![1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0];
        let occ_ref = occupancy_measure(&mdp, &reference, &nu0).unwrap();
        let linear = (mdp.reward() * occ_ref.mass()).sum();
        for tau in [0.0, 0.3, 5.0] {
            let j = erl_objective(&mdp, &occ_ref, &reference, tau).unwrap();
            assert!((j - linear).abs() < 1e-12);
        }
        let pi = random_policy(&mut rng, 3, 2);
        let occ = occupancy_measure(&mdp, &pi, &nu0).unwrap();
        let j0 = erl_objective(&mdp, &occ, &reference, 0.0).unwrap();
        assert!((j0 - (mdp.reward() * occ.mass()).sum()).abs() < 1e-15);
        assert!(erl_objective(&mdp, &occ, &reference, -1.0).is_err());

        let narrow = Policy::new(array![[1.0, 0.0], [1.0, 0.0], [1.0, 0.0]]).unwrap();
        assert_eq!(erl_objective(&mdp, &occ, &narrow, 0.1).unwrap(), f64::NEG_INFINITY);
    }
}
