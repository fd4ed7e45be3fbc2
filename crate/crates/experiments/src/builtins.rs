//! Small hand-built MDPs used by the experiments, each with a check of the
//! property it is built to exhibit.

use std::fmt;
use std::str::FromStr;

use erl_core::dist::AtomGrid;
use erl_core::mdp::exact_policy_evaluation;
use erl_core::solvers::{
    boltzmann_policy, decoupled_policy, default_opt_tol, optimality_filtered_reference, reference_value_iteration,
    soft_value_iteration, DecoupleConfig,
};
use erl_core::divergence::tv_distance;
use erl_core::{Policy, TabularMdp};
use ndarray::{Array1, Array2, Array3};

use crate::error::{ExpError, Result};

/// Solver accuracy used by the certification checks and experiments.
pub const SOLVER_EPS: f64 = 1e-12;
pub const SOLVER_MAX_ITER: usize = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BuiltinName {
    Tristate,
    ReturnDemo,
    MeanTie,
}

impl BuiltinName {
    pub const ALL: [BuiltinName; 3] = [BuiltinName::Tristate, BuiltinName::ReturnDemo, BuiltinName::MeanTie];

    pub fn as_str(self) -> &'static str {
        match self {
            BuiltinName::Tristate => "tristate",
            BuiltinName::ReturnDemo => "return-demo",
            BuiltinName::MeanTie => "mean-tie",
        }
    }
}

impl fmt::Display for BuiltinName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for BuiltinName {
    type Err = ExpError;

    fn from_str(s: &str) -> Result<Self> {
        BuiltinName::ALL
            .into_iter()
            .find(|b| b.as_str() == s)
            .ok_or_else(|| ExpError::UnknownBuiltin(s.to_string()))
    }
}

/// An MDP together with the data every experiment needs alongside it.
#[derive(Debug, Clone, PartialEq)]
pub struct BuiltinMdp {
    pub name: BuiltinName,
    pub mdp: TabularMdp,
    pub reference: Policy,
    pub initial_dist: Array1<f64>,
    /// Recommended atom grid for distributional runs.
    pub grid: AtomGrid,
}

/// Constructs and certifies a builtin.
pub fn builtin(name: BuiltinName) -> Result<BuiltinMdp> {
    let b = match name {
        BuiltinName::Tristate => tristate(),
        BuiltinName::ReturnDemo => return_demo(),
        BuiltinName::MeanTie => mean_tie(),
    };
    match name {
        BuiltinName::Tristate => {
            certify_tristate(&b)?;
        }
        BuiltinName::ReturnDemo => certify_return_demo(&b)?,
        BuiltinName::MeanTie => certify_mean_tie(&b)?,
    }
    Ok(b)
}

fn uniform_dist(n: usize) -> Array1<f64> {
    Array1::from_elem(n, 1.0 / n as f64)
}

/// Deterministic transitions `next[x][a]` with self-contained rewards.
fn deterministic(next: &[[usize; 2]], reward: &[[f64; 2]], gamma: f64) -> TabularMdp {
    let ns = next.len();
    let mut p = Array3::zeros((ns, 2, ns));
    for (x, row) in next.iter().enumerate() {
        for (a, &y) in row.iter().enumerate() {
            p[[x, a, y]] = 1.0;
        }
    }
    let r = Array2::from_shape_fn((ns, 2), |(x, a)| reward[x][a]);
    TabularMdp::new(p, r, gamma).expect("builtin MDPs are valid")
}

/// Three states, two actions, `gamma = 0.9`.
///
/// From `x0` both actions are optimal: `a0` leads to `x1`, where both
/// actions are equally good forever; `a1` leads to `x2`, where only `a0`
/// keeps earning reward. The soft value of `x2` therefore pays an entropy
/// cost that `x1` does not, and the coupled policy at `x0` concentrates on
/// `a0` while the reference-optimal policy is uniform there.
pub fn tristate() -> BuiltinMdp {
    let mdp = deterministic(&[[1, 2], [1, 1], [2, 2]], &[[0.0, 0.0], [1.0, 1.0], [1.0, 0.0]], 0.9);
    let grid = AtomGrid::default_for(&mdp).expect("finite rewards");
    BuiltinMdp { name: BuiltinName::Tristate, reference: Policy::uniform(3, 2), initial_dist: uniform_dist(3), mdp, grid }
}

/// Result of the tristate brute-force certification.
#[derive(Debug, Clone, PartialEq)]
pub struct TristateCertificate {
    /// `|q*(x0, a0) - q*(x0, a1)|` from exhaustive deterministic evaluation.
    pub optimal_gap_x0: f64,
    pub coupled_max_prob_x0: f64,
    pub decoupled_sup_tv: f64,
}

/// Checks that both actions at `x0` are optimal, that the coupled policy
/// concentrates at `tau = 1e-9`, and that the decoupled policy is within
/// `1e-3` TV of uniform-on-optimal everywhere.
pub fn certify_tristate(b: &BuiltinMdp) -> Result<TristateCertificate> {
    let fail = |reason: String| ExpError::Certification { name: "tristate", reason };
    let (ns, na) = (b.mdp.n_states(), b.mdp.n_actions());
    let mut best = Array2::from_elem((ns, na), f64::NEG_INFINITY);
    for code in 0..na.pow(ns as u32) {
        let actions: Vec<usize> = (0..ns).map(|i| (code / na.pow(i as u32)) % na).collect();
        let q = exact_policy_evaluation(&b.mdp, &Policy::deterministic(&actions, na)?)?;
        best.zip_mut_with(q.values(), |m, &v| *m = m.max(v));
    }
    let q_star_x0 = best.row(0).iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let optimal_gap_x0 = (best[[0, 0]] - best[[0, 1]]).abs();
    if (0..na).any(|a| q_star_x0 - best[[0, a]] > 1e-10) {
        return Err(fail(format!("actions at x0 are not both optimal (gap {optimal_gap_x0:e})")));
    }

    let tau = 1e-9;
    let q_tau = soft_value_iteration(&b.mdp, &b.reference, tau, SOLVER_EPS, SOLVER_MAX_ITER)?.q;
    let coupled = boltzmann_policy(&q_tau, &b.reference, tau)?;
    let coupled_max_prob_x0 = coupled.row(0).iter().copied().fold(0.0, f64::max);
    if coupled_max_prob_x0 < 0.99 {
        return Err(fail(format!("coupled policy at x0 does not concentrate ({coupled_max_prob_x0})")));
    }

    let q_ref = reference_value_iteration(&b.mdp, &b.reference, SOLVER_EPS, SOLVER_MAX_ITER)?.q;
    let target = optimality_filtered_reference(&q_ref, &b.reference, default_opt_tol(&q_ref))?;
    let cfg = DecoupleConfig::with_exponent(tau, 2.0)?;
    let dec = decoupled_policy(&b.mdp, &b.reference, &cfg, SOLVER_EPS, SOLVER_MAX_ITER)?;
    let mut decoupled_sup_tv = 0.0_f64;
    for x in 0..ns {
        decoupled_sup_tv = decoupled_sup_tv.max(tv_distance(dec.row(x), target.row(x))?);
    }
    if decoupled_sup_tv > 1e-3 {
        return Err(fail(format!("decoupled policy is {decoupled_sup_tv:e} from uniform-on-optimal")));
    }
    Ok(TristateCertificate { optimal_gap_x0, coupled_max_prob_x0, decoupled_sup_tv })
}

/// State indices of the return-distribution MDP.
pub mod return_demo_states {
    pub const X0: usize = 0;
    pub const X1: usize = 1;
    pub const BLUE: usize = 2;
    pub const HIGH: usize = 3;
    pub const LOW: usize = 4;
}

/// Five states, `gamma = 1/2`, uniform reference. Action 0 is blue and
/// action 1 is green. From `x1`, blue moves to a state paying 2 forever and
/// green moves with probability 1/2 each to states paying 4 or 0 forever,
/// so the returns from `x1` are `2` and `4 Bernoulli(1/2)`, with equal means.
/// The high and low states each have a worse second action, which makes
/// their soft values lower than that of the blue state.
pub fn return_demo() -> BuiltinMdp {
    use return_demo_states::*;
    let gamma = 0.5;
    let mut p = Array3::zeros((5, 2, 5));
    let mut r = Array2::zeros((5, 2));
    for a in 0..2 {
        p[[X0, a, X1]] = 1.0;
        p[[BLUE, a, BLUE]] = 1.0;
        p[[HIGH, a, HIGH]] = 1.0;
        p[[LOW, a, LOW]] = 1.0;
        r[[BLUE, a]] = 2.0;
    }
    p[[X1, 0, BLUE]] = 1.0;
    p[[X1, 1, HIGH]] = 0.5;
    p[[X1, 1, LOW]] = 0.5;
    r[[HIGH, 0]] = 4.0;
    r[[HIGH, 1]] = 3.0;
    r[[LOW, 0]] = 0.0;
    r[[LOW, 1]] = -1.0;
    let mdp = TabularMdp::new(p, r, gamma).expect("builtin MDPs are valid");
    BuiltinMdp {
        name: BuiltinName::ReturnDemo,
        reference: Policy::uniform(5, 2),
        initial_dist: uniform_dist(5),
        mdp,
        grid: AtomGrid::uniform(-2.0, 8.0, 121).expect("valid grid"),
    }
}

fn certify_return_demo(b: &BuiltinMdp) -> Result<()> {
    use return_demo_states::*;
    let q_ref = reference_value_iteration(&b.mdp, &b.reference, SOLVER_EPS, SOLVER_MAX_ITER)?.q;
    let g = b.mdp.discount();
    let blue = 2.0 * g / (1.0 - g);
    for a in 0..2 {
        if (q_ref.values()[[X1, a]] - blue).abs() > 1e-10 {
            return Err(ExpError::Certification {
                name: "return-demo",
                reason: format!("q*_ref(x1, {a}) = {} differs from {blue}", q_ref.values()[[X1, a]]),
            });
        }
    }
    Ok(())
}

/// State indices of the mean-tie MDP.
pub mod mean_tie_states {
    pub const START: usize = 0;
    pub const DECISION: usize = 1;
    pub const DET: usize = 2;
    pub const HIGH: usize = 3;
    pub const LOW: usize = 4;
    pub const CLOCK_A: usize = 5;
    pub const CLOCK_B: usize = 6;
}

/// Discount of the mean-tie MDP.
pub const MEAN_TIE_GAMMA: f64 = 0.975;

/// Seven states with one real decision. From the decision state, action 0
/// collects 2 and action 1 collects 4 or 0 with probability 1/2 each; both
/// then enter a two-state clock that alternates rewards 1 and 0, in opposite
/// phases. The reward on action 0 cancels the phase difference, so the two
/// actions have equal means while value iteration from zero estimates them
/// with errors of alternating sign. The start state precedes the decision so
/// that the greedy choice shows up in its return distribution.
pub fn mean_tie() -> BuiltinMdp {
    use mean_tie_states::*;
    let g = MEAN_TIE_GAMMA;
    let mut p = Array3::zeros((7, 2, 7));
    let mut r = Array2::zeros((7, 2));
    let step = |p: &mut Array3<f64>, x: usize, y: usize| {
        for a in 0..2 {
            p[[x, a, y]] = 1.0;
        }
    };
    step(&mut p, START, DECISION);
    step(&mut p, DET, CLOCK_B);
    step(&mut p, HIGH, CLOCK_A);
    step(&mut p, LOW, CLOCK_A);
    step(&mut p, CLOCK_A, CLOCK_B);
    step(&mut p, CLOCK_B, CLOCK_A);
    p[[DECISION, 0, DET]] = 1.0;
    p[[DECISION, 1, HIGH]] = 0.5;
    p[[DECISION, 1, LOW]] = 0.5;
    for a in 0..2 {
        r[[DET, a]] = 2.0;
        r[[HIGH, a]] = 4.0;
        r[[CLOCK_A, a]] = 1.0;
    }
    r[[DECISION, 0]] = g * g / (1.0 + g);
    let mdp = TabularMdp::new(p, r, g).expect("builtin MDPs are valid");
    BuiltinMdp {
        name: BuiltinName::MeanTie,
        reference: Policy::uniform(7, 2),
        initial_dist: uniform_dist(7),
        mdp,
        grid: AtomGrid::uniform(-1.0, 27.0, 113).expect("valid grid"),
    }
}

fn certify_mean_tie(b: &BuiltinMdp) -> Result<()> {
    use mean_tie_states::*;
    let q = exact_policy_evaluation(&b.mdp, &b.reference)?;
    let gap = (q.values()[[DECISION, 0]] - q.values()[[DECISION, 1]]).abs();
    if gap > 1e-10 {
        return Err(ExpError::Certification { name: "mean-tie", reason: format!("decision means differ by {gap:e}") });
    }
    Ok(())
}
