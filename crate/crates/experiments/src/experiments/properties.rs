//! Seeded sweeps over random instances and builtins, summarized in a JSON report.

use std::path::{Path, PathBuf};

use erl_core::dist::{
    mean_extraction, particle_eval_backup, particle_sup_wasserstein, soft_dist_control_backup, soft_dist_eval_backup,
    sup_wasserstein, AtomGrid, ParticleReturnFn, ReturnDistributionFn,
};
use erl_core::solvers::{
    boltzmann_policy, reference_optimality_backup, reference_value_iteration, soft_optimality_backup,
    soft_policy_backup, soft_value_iteration, tv_bound_check,
};
use erl_core::{Policy, QFunction};
use ndarray::Array3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::builtins::{builtin, BuiltinMdp, BuiltinName, SOLVER_MAX_ITER};
use crate::config::decade_ladder;
use crate::error::{ExpError, Result};
use crate::random;

/// Additive slack for exact inequalities.
pub const EXACT_SLACK: f64 = 1e-12;
/// Tolerance for the mean of the distributional control backup.
pub const COMMUTE_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PropertyOutcome {
    pub name: String,
    pub passed: bool,
    pub cases: usize,
    pub detail: String,
}

impl PropertyOutcome {
    fn new(name: &str, passed: bool, cases: usize, detail: String) -> Self {
        Self { name: name.into(), passed, cases, detail }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PropertyReport {
    pub seed: u64,
    pub passed: bool,
    pub properties: Vec<PropertyOutcome>,
}

fn stream(seed: u64, i: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(i as u64);
    rng
}

/// Runs `case` for `i in 0..n` in parallel and returns the results in order.
fn sweep<T: Send>(n: usize, case: impl Fn(usize) -> Result<T> + Sync + Send) -> Result<Vec<T>> {
    (0..n).into_par_iter().map(case).collect()
}

fn max(v: impl IntoIterator<Item = f64>) -> f64 {
    v.into_iter().fold(f64::NEG_INFINITY, f64::max)
}

/// Sup-norm `gamma`-contraction of the soft optimality, support-max and soft
/// evaluation operators on random 4-state, 3-action MDPs. Reports the largest
/// `||T q - T q'|| - gamma ||q - q'||`.
pub fn scalar_contraction(seed: u64, n: usize) -> Result<PropertyOutcome> {
    let excess = sweep(n, |i| {
        let mut rng = stream(seed, i);
        let gamma = rng.gen_range(0.05..0.99);
        let mdp = random::mdp(&mut rng, 4, 3, gamma);
        let reference = random::policy(&mut rng, 4, 3, 0.3);
        let pi = random::policy_within(&mut rng, &reference);
        let tau = random::log_uniform(&mut rng, -4.0, 1.0);
        let q1 = random::q_function(&mut rng, 4, 3, 20.0);
        let q2 = random::q_function(&mut rng, 4, 3, 20.0);
        let d = gamma * q1.sup_distance(&q2);
        let pairs = [
            (soft_optimality_backup(&mdp, &reference, tau, &q1)?, soft_optimality_backup(&mdp, &reference, tau, &q2)?),
            (reference_optimality_backup(&mdp, &reference, &q1)?, reference_optimality_backup(&mdp, &reference, &q2)?),
            (soft_policy_backup(&mdp, &reference, tau, &pi, &q1)?, soft_policy_backup(&mdp, &reference, tau, &pi, &q2)?),
        ];
        Ok(max(pairs.iter().map(|(a, b)| a.sup_distance(b) - d)))
    })?;
    let worst = max(excess.iter().copied());
    Ok(PropertyOutcome::new(
        "scalar_contraction",
        worst <= EXACT_SLACK,
        3 * n,
        format!("max ||Tq - Tq'|| - gamma ||q - q'|| = {worst:.3e}"),
    ))
}

/// The Gibbs total-variation bound on random `(q, q', tau)` draws.
pub fn tv_bound(seed: u64, n: usize) -> Result<PropertyOutcome> {
    let results = sweep(n, |i| {
        let mut rng = stream(seed, i);
        let (ns, na) = (rng.gen_range(1..=4), rng.gen_range(2..=5));
        let reference = random::policy(&mut rng, ns, na, 0.2);
        let tau = random::log_uniform(&mut rng, -3.0, 1.0);
        let q = random::q_function(&mut rng, ns, na, 10.0);
        let scale = random::log_uniform(&mut rng, -4.0, 1.0) * tau;
        let noise = random::q_function(&mut rng, ns, na, 1.0);
        let q2 = QFunction::new(q.values() + &(noise.values() * scale));
        let rep = tv_bound_check(&q, &q2, &reference, tau)?;
        let linear = rep.states.iter().filter(|s| s.rhs_linear.is_some()).count();
        let violations = rep.states.iter().filter(|s| !s.holds).count();
        Ok((rep.states.len(), linear, violations))
    })?;
    let states: usize = results.iter().map(|r| r.0).sum();
    let linear: usize = results.iter().map(|r| r.1).sum();
    let violations: usize = results.iter().map(|r| r.2).sum();
    Ok(PropertyOutcome::new(
        "tv_bound",
        violations == 0,
        n,
        format!("{violations} violations over {states} states ({linear} in the linear regime)"),
    ))
}

/// Monotone convergence of `q*_tau` on one builtin along the decade ladder.
#[derive(Debug, Clone, PartialEq)]
pub struct MonotoneQ {
    /// Largest `q_k - q_{k+1}` entry, where `k` runs along the decreasing ladder.
    pub max_decrease: f64,
    /// Largest `||q*_ref - q*_tau|| - (gamma / (1 - gamma) tau log |A| + 2 eps)`.
    pub max_bound_excess: f64,
    pub eps: f64,
}

impl MonotoneQ {
    pub fn passed(&self) -> bool {
        self.max_decrease <= 2.0 * self.eps && self.max_bound_excess <= 0.0
    }
}

pub fn monotone_q(b: &BuiltinMdp, eps: f64) -> Result<MonotoneQ> {
    let (mdp, reference) = (&b.mdp, &b.reference);
    let gamma = mdp.discount();
    let q_ref = reference_value_iteration(mdp, reference, eps, SOLVER_MAX_ITER)?.q;
    let ladder = decade_ladder();
    let qs = ladder
        .iter()
        .map(|&tau| Ok(soft_value_iteration(mdp, reference, tau, eps, SOLVER_MAX_ITER)?.q))
        .collect::<Result<Vec<_>>>()?;
    let max_decrease = max(qs.windows(2).flat_map(|w| (w[0].values() - w[1].values()).into_iter()));
    let log_a = (mdp.n_actions() as f64).ln();
    let max_bound_excess = max(
        ladder.iter().zip(&qs).map(|(&tau, q)| q_ref.sup_distance(q) - (gamma / (1.0 - gamma) * tau * log_a + 2.0 * eps)),
    );
    Ok(MonotoneQ { max_decrease, max_bound_excess, eps })
}

fn monotone_q_outcome(eps: f64) -> Result<PropertyOutcome> {
    let mut passed = true;
    let mut detail = Vec::new();
    for name in [BuiltinName::Tristate, BuiltinName::ReturnDemo] {
        let m = monotone_q(&builtin(name)?, eps)?;
        passed &= m.passed();
        detail.push(format!("{name}: max decrease {:.3e}, bound excess {:.3e}", m.max_decrease, m.max_bound_excess));
    }
    Ok(PropertyOutcome::new("monotone_q_convergence", passed, 2, detail.join("; ")))
}

/// Atom range `[lo, hi]` such that one soft backup at temperature at most
/// `tau_max` of a distribution supported there stays inside the grid.
pub fn interior_window(b: &BuiltinMdp, grid: &AtomGrid, tau_max: f64) -> Option<(f64, f64)> {
    let g = b.mdp.discount();
    let r = b.mdp.reward();
    let (r_min, r_max) = r.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, c), &v| (a.min(v), c.max(v)));
    // KL(p || ref) <= -log of the smallest reference mass.
    let kl_max = b.reference.probs().iter().filter(|&&p| p > 0.0).fold(0.0_f64, |m, &p| m.max(-p.ln()));
    let lo = grid.min().max((grid.min() - r_min + g * tau_max * kl_max) / g);
    let hi = grid.max().min((grid.max() - r_max) / g);
    (lo < hi).then_some((lo, hi))
}

/// Random categorical distribution function supported on `[lo, hi]`.
pub fn random_interior<R: Rng>(rng: &mut R, grid: &AtomGrid, ns: usize, na: usize, lo: f64, hi: f64) -> ReturnDistributionFn {
    let inside: Vec<usize> = (0..grid.len()).filter(|&k| grid.atoms()[k] >= lo && grid.atoms()[k] <= hi).collect();
    let mut probs = Array3::zeros((ns, na, grid.len()));
    for x in 0..ns {
        for a in 0..na {
            let w = random::simplex(rng, inside.len());
            for (&k, v) in inside.iter().zip(w) {
                probs[[x, a, k]] = v;
            }
        }
    }
    ReturnDistributionFn::new(grid.clone(), probs).expect("simplex rows")
}

/// `||E O*_tau z - T*_tau E z||` on random interior-supported `z` for one builtin.
pub fn commutativity(b: &BuiltinMdp, seed: u64, n: usize) -> Result<f64> {
    let tau_max = 1.0;
    let (lo, hi) = interior_window(b, &b.grid, tau_max)
        .ok_or_else(|| ExpError::Config(format!("grid of {} has no interior window", b.name)))?;
    let errs = sweep(n, |i| {
        let mut rng = stream(seed, i);
        let tau = random::log_uniform(&mut rng, -3.0, tau_max.log10());
        let z = random_interior(&mut rng, &b.grid, b.mdp.n_states(), b.mdp.n_actions(), lo, hi);
        let out = soft_dist_control_backup(&b.mdp, &b.reference, tau, &z)?;
        let scalar = soft_optimality_backup(&b.mdp, &b.reference, tau, &mean_extraction(&z))?;
        let d = mean_extraction(&out.z).sup_distance(&scalar);
        Ok(if out.clipped_mass > 0.0 { f64::INFINITY } else { d })
    })?;
    Ok(max(errs))
}

fn commutativity_outcome(seed: u64, n: usize) -> Result<PropertyOutcome> {
    let mut worst = 0.0_f64;
    let mut detail = Vec::new();
    for name in BuiltinName::ALL {
        let e = commutativity(&builtin(name)?, seed, n)?;
        worst = worst.max(e);
        detail.push(format!("{name}: {e:.3e}"));
    }
    Ok(PropertyOutcome::new("commutativity", worst <= COMMUTE_TOL, 3 * n, detail.join("; ")))
}

/// Projected evaluation backups on random pairs: returns the largest
/// `sup-W1(Oz, Oz') - gamma sup-W1(z, z')` in units of grid spacing.
pub fn projected_contraction(seed: u64, n: usize) -> Result<f64> {
    let grid = AtomGrid::uniform(-40.0, 40.0, 161)?;
    let spacing = grid.spacing().expect("uniform grid");
    let excess = sweep(n, |i| {
        let mut rng = stream(seed, i);
        let gamma = rng.gen_range(0.1..0.95);
        let mdp = random::mdp(&mut rng, 3, 2, gamma);
        let reference = random::policy(&mut rng, 3, 2, 0.0);
        let pi = random::policy(&mut rng, 3, 2, 0.0);
        let tau = rng.gen_range(0.0..1.0);
        let lo = rng.gen_range(-20.0..0.0);
        let hi = lo + rng.gen_range(1.0..20.0);
        let z1 = random_interior(&mut rng, &grid, 3, 2, lo, hi);
        let z2 = random_interior(&mut rng, &grid, 3, 2, lo, hi);
        let b1 = soft_dist_eval_backup(&mdp, &reference, tau, &pi, &z1)?;
        let b2 = soft_dist_eval_backup(&mdp, &reference, tau, &pi, &z2)?;
        Ok((sup_wasserstein(&b1.z, &b2.z, 1.0)? - gamma * sup_wasserstein(&z1, &z2, 1.0)?) / spacing)
    })?;
    Ok(max(excess))
}

/// Projection-free evaluation backups applied twice to random particle
/// pairs: returns the largest `W_p(Oz, Oz') - gamma W_p(z, z')` over both steps.
pub fn particle_contraction(seed: u64, n: usize) -> Result<f64> {
    let excess = sweep(n, |i| {
        let mut rng = stream(seed, i);
        let gamma = rng.gen_range(0.1..0.95);
        let mdp = random::mdp(&mut rng, 3, 2, gamma);
        let reference = random::policy(&mut rng, 3, 2, 0.0);
        let pi = random::policy(&mut rng, 3, 2, 0.0);
        let tau = rng.gen_range(0.0..1.0);
        let p = rng.gen_range(1.0..3.0);
        let parts = |rng: &mut ChaCha8Rng| {
            let lists = (0..6)
                .map(|_| random::simplex(rng, 3).into_iter().map(|m| (rng.gen_range(-5.0..5.0), m)).collect())
                .collect();
            ParticleReturnFn::new(3, 2, lists)
        };
        let (mut z1, mut z2) = (parts(&mut rng)?, parts(&mut rng)?);
        let mut worst = f64::NEG_INFINITY;
        for _ in 0..2 {
            let before = particle_sup_wasserstein(&z1, &z2, p)?;
            z1 = particle_eval_backup(&mdp, &reference, tau, &pi, &z1)?;
            z2 = particle_eval_backup(&mdp, &reference, tau, &pi, &z2)?;
            worst = worst.max(particle_sup_wasserstein(&z1, &z2, p)? - gamma * before);
        }
        Ok(worst)
    })?;
    Ok(max(excess))
}

fn dist_contraction_outcome(seed: u64, n: usize) -> Result<PropertyOutcome> {
    let projected = projected_contraction(seed, n)?;
    let particle = particle_contraction(seed ^ 0x5eed, n)?;
    Ok(PropertyOutcome::new(
        "distributional_contraction",
        projected <= 2.0 && particle <= EXACT_SLACK,
        2 * n,
        format!("projected excess {projected:.3e} spacings; particle excess {particle:.3e}"),
    ))
}

fn builtin_outcome() -> PropertyOutcome {
    let failures: Vec<String> =
        BuiltinName::ALL.iter().filter_map(|&n| builtin(n).err().map(|e| e.to_string())).collect();
    let detail = if failures.is_empty() { "all builtins certified".to_string() } else { failures.join("; ") };
    PropertyOutcome::new("builtin_certification", failures.is_empty(), BuiltinName::ALL.len(), detail)
}

/// A discount above one must be rejected with a pointer to `/gamma`.
fn validation_outcome() -> PropertyOutcome {
    let mut doc = crate::io::mdp_to_json(&crate::io::MdpSpec {
        mdp: builtin(BuiltinName::Tristate).map(|b| b.mdp).expect("tristate certifies"),
        reference: Policy::uniform(3, 2),
        initial_dist: ndarray::Array1::from_elem(3, 1.0 / 3.0),
    });
    doc["gamma"] = serde_json::json!(1.5);
    let (passed, detail) = match crate::io::parse_mdp(&doc) {
        Err(ExpError::Schema { pointer, message }) if pointer == "/gamma" => (true, format!("rejected: {message}")),
        other => (false, format!("unexpected outcome {other:?}")),
    };
    PropertyOutcome::new("validation_rejects_discount", passed, 1, detail)
}

/// Gibbs policies are normalized and supported on the reference support.
fn gibbs_normalization(seed: u64, n: usize) -> Result<PropertyOutcome> {
    let worst = sweep(n, |i| {
        let mut rng = stream(seed, i);
        let reference = random::policy(&mut rng, 4, 5, 0.4);
        let tau = random::log_uniform(&mut rng, -9.0, 2.0);
        let q = random::q_function(&mut rng, 4, 5, 1e3);
        let pi = boltzmann_policy(&q, &reference, tau)?;
        let mut err = 0.0_f64;
        for x in 0..4 {
            err = err.max((pi.row(x).sum() - 1.0).abs());
            if pi.row(x).iter().zip(reference.row(x)).any(|(&p, &r)| r == 0.0 && p > 0.0) {
                err = f64::INFINITY;
            }
        }
        Ok(err)
    })?;
    let worst = max(worst);
    Ok(PropertyOutcome::new("gibbs_normalization", worst <= 1e-12, n, format!("max row-sum error {worst:.3e}")))
}

/// Runs every property with seed-derived streams.
pub fn run_suite(seed: u64) -> Result<PropertyReport> {
    let properties = vec![
        builtin_outcome(),
        validation_outcome(),
        scalar_contraction(seed, 1000)?,
        tv_bound(seed.wrapping_add(1), 10_000)?,
        monotone_q_outcome(1e-12)?,
        commutativity_outcome(seed.wrapping_add(2), 100)?,
        dist_contraction_outcome(seed.wrapping_add(3), 100)?,
        gibbs_normalization(seed.wrapping_add(4), 1000)?,
    ];
    let passed = properties.iter().all(|p| p.passed);
    Ok(PropertyReport { seed, passed, properties })
}

pub fn write(report: &PropertyReport, dir: &Path) -> Result<PathBuf> {
    std::fs::create_dir_all(dir).map_err(|e| ExpError::io(dir, e))?;
    let path = dir.join("report.json");
    let text = serde_json::to_string_pretty(report).expect("report serializes");
    std::fs::write(&path, text + "\n").map_err(|e| ExpError::io(&path, e))?;
    Ok(path)
}
