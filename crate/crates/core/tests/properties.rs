mod common;

use erl_core::dist::{
    cramer_projection, mean_extraction, particle_eval_backup, particle_sup_wasserstein, soft_dist_control_backup,
    soft_dist_eval_backup, soft_dist_value_iteration, sup_wasserstein, wasserstein_p, AtomGrid, ParticleReturnFn,
    ReturnDistributionFn, TraceOptions,
};
use erl_core::occupancy::{occupancy_flow_residual, occupancy_measure, regularizer};
use erl_core::solvers::{
    boltzmann_policy, reference_optimality_backup, soft_optimality_backup, soft_policy_backup, soft_value_iteration,
};
use erl_core::QFunction;
use ndarray::{Array1, Array2};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn occupancy_mixtures_satisfy_flow(seed in any::<u64>(), alpha in 0.0..=1.0f64) {
        let mut r = rng(seed);
        let mdp = common::mdp(&mut r, 4, 3, 0.9);
        let nu0 = Array1::from(common::simplex(&mut r, 4));
        let m0 = occupancy_measure(&mdp, &common::policy(&mut r, 4, 3), &nu0).unwrap();
        let m1 = occupancy_measure(&mdp, &common::policy(&mut r, 4, 3), &nu0).unwrap();
        let mix = m0.mix(&m1, alpha).unwrap();
        prop_assert!(occupancy_flow_residual(&mdp, &mix).unwrap() <= 1e-10);
        prop_assert!((mix.mass().sum() - 1.0).abs() <= 1e-10);
    }

    #[test]
    fn regularizer_is_strictly_convex(seed in any::<u64>(), alpha in 0.05..0.95f64) {
        let mut r = rng(seed);
        let mdp = common::mdp(&mut r, 4, 3, 0.9);
        let reference = common::policy(&mut r, 4, 3);
        let nu0 = Array1::from(common::simplex(&mut r, 4));
        let m0 = occupancy_measure(&mdp, &common::policy(&mut r, 4, 3), &nu0).unwrap();
        let m1 = occupancy_measure(&mdp, &common::policy(&mut r, 4, 3), &nu0).unwrap();
        let lhs = regularizer(&m0.mix(&m1, alpha).unwrap(), &reference).unwrap();
        let rhs = alpha * regularizer(&m0, &reference).unwrap() + (1.0 - alpha) * regularizer(&m1, &reference).unwrap();
        prop_assert!(lhs < rhs - 1e-12, "{lhs} vs {rhs}");
    }

    #[test]
    fn scalar_operators_contract(seed in any::<u64>(), log_tau in -4.0..1.0f64) {
        let mut r = rng(seed);
        let gamma = r.gen_range(0.1..0.99);
        let mdp = common::mdp(&mut r, 4, 3, gamma);
        let reference = common::policy(&mut r, 4, 3);
        let pi = common::policy(&mut r, 4, 3);
        let tau = 10f64.powf(log_tau);
        let q1 = QFunction::new(Array2::from_shape_fn((4, 3), |_| r.gen_range(-20.0..20.0)));
        let q2 = QFunction::new(Array2::from_shape_fn((4, 3), |_| r.gen_range(-20.0..20.0)));
        let d = q1.sup_distance(&q2);
        let pairs = [
            (soft_optimality_backup(&mdp, &reference, tau, &q1).unwrap(), soft_optimality_backup(&mdp, &reference, tau, &q2).unwrap()),
            (reference_optimality_backup(&mdp, &reference, &q1).unwrap(), reference_optimality_backup(&mdp, &reference, &q2).unwrap()),
            (soft_policy_backup(&mdp, &reference, tau, &pi, &q1).unwrap(), soft_policy_backup(&mdp, &reference, tau, &pi, &q2).unwrap()),
        ];
        for (a, b) in pairs {
            prop_assert!(a.sup_distance(&b) <= gamma * d + 1e-12);
        }
    }

    #[test]
    fn wasserstein_metric_axioms(seed in any::<u64>(), p in 1.0..4.0f64) {
        let mut r = rng(seed);
        let g = AtomGrid::uniform(-1.0, 2.0, 13).unwrap();
        let a = Array1::from(common::simplex(&mut r, 13));
        let b = Array1::from(common::simplex(&mut r, 13));
        let c = Array1::from(common::simplex(&mut r, 13));
        let w = |u: &Array1<f64>, v: &Array1<f64>| wasserstein_p(&g, u.view(), &g, v.view(), p).unwrap();
        prop_assert_eq!(w(&a, &a), 0.0);
        prop_assert!(w(&a, &b) > 0.0);
        prop_assert!((w(&a, &b) - w(&b, &a)).abs() <= 1e-12);
        prop_assert!(w(&a, &b) <= w(&a, &c) + w(&c, &b) + 1e-12);
    }

    #[test]
    fn projected_evaluation_contracts_up_to_grid_slack(seed in any::<u64>(), tau in 0.0..1.0f64) {
        let mut r = rng(seed);
        let mdp = common::mdp(&mut r, 3, 2, 0.9);
        let reference = common::policy(&mut r, 3, 2);
        let pi = common::policy(&mut r, 3, 2);
        let g = AtomGrid::uniform(-40.0, 40.0, 161).unwrap();
        let z1 = common::dist_fn(&mut r, &g, 3, 2, 70, 20);
        let z2 = common::dist_fn(&mut r, &g, 3, 2, 70, 20);
        let b1 = soft_dist_eval_backup(&mdp, &reference, tau, &pi, &z1).unwrap();
        let b2 = soft_dist_eval_backup(&mdp, &reference, tau, &pi, &z2).unwrap();
        let lhs = sup_wasserstein(&b1.z, &b2.z, 1.0).unwrap();
        let rhs = 0.9 * sup_wasserstein(&z1, &z2, 1.0).unwrap();
        prop_assert!(lhs <= rhs + 2.0 * g.spacing().unwrap());
        for b in [&b1, &b2] {
            let (err, nonneg) = b.z.mass_error();
            prop_assert!(err <= 1e-10 && nonneg);
        }
    }

    #[test]
    fn particle_evaluation_contracts_exactly(seed in any::<u64>(), tau in 0.0..1.0f64, p in 1.0..3.0f64) {
        let mut r = rng(seed);
        let gamma = r.gen_range(0.3..0.95);
        let mdp = common::mdp(&mut r, 3, 2, gamma);
        let reference = common::policy(&mut r, 3, 2);
        let pi = common::policy(&mut r, 3, 2);
        let parts = |r: &mut ChaCha8Rng| {
            let lists = (0..6)
                .map(|_| common::simplex(r, 3).into_iter().map(|m| (r.gen_range(-5.0..5.0), m)).collect())
                .collect();
            ParticleReturnFn::new(3, 2, lists).unwrap()
        };
        let (mut z1, mut z2) = (parts(&mut r), parts(&mut r));
        // Two applications, each a gamma-contraction.
        for _ in 0..2 {
            let before = particle_sup_wasserstein(&z1, &z2, p).unwrap();
            z1 = particle_eval_backup(&mdp, &reference, tau, &pi, &z1).unwrap();
            z2 = particle_eval_backup(&mdp, &reference, tau, &pi, &z2).unwrap();
            prop_assert!(particle_sup_wasserstein(&z1, &z2, p).unwrap() <= gamma * before + 1e-12);
        }
    }

    #[test]
    fn control_backup_commutes_with_mean(seed in any::<u64>(), log_tau in -3.0..0.5f64) {
        let mut r = rng(seed);
        let mdp = common::mdp(&mut r, 4, 2, 0.9);
        let reference = common::policy(&mut r, 4, 2);
        let tau = 10f64.powf(log_tau);
        let g = AtomGrid::uniform(-40.0, 40.0, 321).unwrap();
        let z = common::dist_fn(&mut r, &g, 4, 2, 150, 20);
        let out = soft_dist_control_backup(&mdp, &reference, tau, &z).unwrap();
        prop_assert_eq!(out.clipped_mass, 0.0);
        let scalar = soft_optimality_backup(&mdp, &reference, tau, &mean_extraction(&z)).unwrap();
        prop_assert!(mean_extraction(&out.z).sup_distance(&scalar) <= 1e-10);
    }

    #[test]
    fn projection_conserves_mass(
        locs in prop::collection::vec(-100.0..100.0f64, 1..30),
        seed in any::<u64>(),
    ) {
        let mut r = rng(seed);
        let w = common::simplex(&mut r, locs.len());
        let parts: Vec<(f64, f64)> = locs.iter().copied().zip(w).collect();
        let g = AtomGrid::from_atoms(vec![-3.0, -1.0, 0.0, 0.5, 4.0, 10.0]).unwrap();
        let proj = cramer_projection(&parts, &g);
        prop_assert!((proj.probs.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
        prop_assert!(proj.probs.iter().all(|&v| v >= 0.0));
        let outside: f64 = parts.iter().filter(|(z, _)| *z < -3.0 || *z > 10.0).map(|p| p.1).sum();
        prop_assert!((proj.clipped_mass - outside).abs() <= 1e-12);
    }
}

#[test]
fn control_iterates_stay_within_return_bounds() {
    let mut r = rng(99);
    let mdp = common::mdp(&mut r, 4, 3, 0.8);
    let reference = common::policy(&mut r, 4, 3);
    let tau = 0.2;
    let bound = mdp.reward_sup() / (1.0 - mdp.discount());
    let g = AtomGrid::uniform(-bound - 10.0, bound + 1.0, 301).unwrap();
    let z0 = ReturnDistributionFn::point_mass(4, 3, g, 0.0);
    let tr = soft_dist_value_iteration(&mdp, &reference, tau, &z0, 200, &TraceOptions::default()).unwrap();
    // The iterates follow G_tau of their means; bound its penalty.
    let pi = boltzmann_policy(&mean_extraction(&tr.z), &reference, tau).unwrap();
    let max_kl = (0..4)
        .map(|x| erl_core::divergence::kl_divergence(pi.row(x), reference.row(x)))
        .fold(0.0, f64::max);
    let slack = mdp.discount() * tau * max_kl / (1.0 - mdp.discount());
    let (lo, hi) = tr.z.support_range();
    assert!(lo >= -bound - slack - 2.0 * tr.z.grid().spacing().unwrap(), "{lo}");
    assert!(hi <= bound + tr.z.grid().spacing().unwrap(), "{hi}");
    assert_eq!(tr.max_clipped_mass, 0.0);
    let star = soft_value_iteration(&mdp, &reference, tau, 1e-12, 10_000).unwrap().q;
    assert!(mean_extraction(&tr.z).sup_distance(&star) < 1e-10);
}
