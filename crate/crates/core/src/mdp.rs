//! Finite discounted MDPs, policies, action-value functions and exact
//! (unregularized) policy evaluation.

use std::fmt;

use ndarray::{Array1, Array2, Array3, ArrayView1, Axis};

use crate::error::{mismatch, Error, Result};
use crate::linalg;

/// Tolerance on the row sums of transition kernels.
pub const TRANSITION_ROW_TOL: f64 = 1e-12;
/// Tolerance on the row sums of policies.
pub const POLICY_ROW_TOL: f64 = 1e-12;

/// A finite discounted MDP `(X, A, P, r, gamma)`.
///
/// `transition[[x, a, y]]` is the probability of moving to `y` after playing
/// `a` in `x`; `reward[[x, a]]` is the deterministic one-step reward.
#[derive(Debug, Clone, PartialEq)]
pub struct TabularMdp {
    transition: Array3<f64>,
    reward: Array2<f64>,
    discount: f64,
}

/// A single failed invariant reported by [`validate_mdp`].
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    EmptySpace { n_states: usize, n_actions: usize },
    Shape { what: &'static str, expected: Vec<usize>, got: Vec<usize> },
    NegativeProbability { state: usize, action: usize, next: usize, value: f64 },
    NonFiniteProbability { state: usize, action: usize, next: usize },
    RowSum { state: usize, action: usize, sum: f64 },
    NonFiniteReward { state: usize, action: usize, value: f64 },
    Discount(f64),
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::EmptySpace { n_states, n_actions } => {
                write!(f, "state/action spaces must be nonempty (n_states={n_states}, n_actions={n_actions})")
            }
            Violation::Shape { what, expected, got } => {
                write!(f, "{what} has shape {got:?}, expected {expected:?}")
            }
            Violation::NegativeProbability { state, action, next, value } => {
                write!(f, "transition[{state}][{action}][{next}] = {value} is negative")
            }
            Violation::NonFiniteProbability { state, action, next } => {
                write!(f, "transition[{state}][{action}][{next}] is not finite")
            }
            Violation::RowSum { state, action, sum } => {
                write!(f, "transition[{state}][{action}] sums to {sum}, not 1")
            }
            Violation::NonFiniteReward { state, action, value } => {
                write!(f, "reward[{state}][{action}] = {value} is not finite")
            }
            Violation::Discount(g) => write!(f, "discount {g} is outside (0, 1)"),
        }
    }
}

/// Check every structural invariant of an MDP. An empty list means valid.
pub fn validate_mdp(mdp: &TabularMdp) -> Vec<Violation> {
    let mut out = Vec::new();
    let (ns, na, ny) = mdp.transition.dim();
    if ns == 0 || na == 0 {
        out.push(Violation::EmptySpace { n_states: ns, n_actions: na });
    }
    if ny != ns {
        out.push(Violation::Shape {
            what: "transition",
            expected: vec![ns, na, ns],
            got: vec![ns, na, ny],
        });
    }
    if mdp.reward.dim() != (ns, na) {
        let (rs, ra) = mdp.reward.dim();
        out.push(Violation::Shape { what: "reward", expected: vec![ns, na], got: vec![rs, ra] });
    }
    for x in 0..ns {
        for a in 0..na {
            let mut sum = 0.0;
            let mut finite = true;
            for y in 0..ny {
                let p = mdp.transition[[x, a, y]];
                if !p.is_finite() {
                    finite = false;
                    out.push(Violation::NonFiniteProbability { state: x, action: a, next: y });
                } else if p < 0.0 {
                    out.push(Violation::NegativeProbability { state: x, action: a, next: y, value: p });
                }
                sum += p;
            }
            if finite && (sum - 1.0).abs() > TRANSITION_ROW_TOL {
                out.push(Violation::RowSum { state: x, action: a, sum });
            }
        }
    }
    for ((x, a), &r) in mdp.reward.indexed_iter() {
        if !r.is_finite() {
            out.push(Violation::NonFiniteReward { state: x, action: a, value: r });
        }
    }
    if !(mdp.discount > 0.0 && mdp.discount < 1.0) {
        out.push(Violation::Discount(mdp.discount));
    }
    out
}

impl TabularMdp {
    /// Build and validate an MDP.
    pub fn new(transition: Array3<f64>, reward: Array2<f64>, discount: f64) -> Result<Self> {
        let mdp = Self::new_unchecked(transition, reward, discount);
        let violations = validate_mdp(&mdp);
        if violations.is_empty() {
            Ok(mdp)
        } else {
            Err(Error::InvalidMdp(violations))
        }
    }

    /// Build without validation; pair with [`validate_mdp`] for diagnostics.
    pub fn new_unchecked(transition: Array3<f64>, reward: Array2<f64>, discount: f64) -> Self {
        Self { transition, reward, discount }
    }

    pub fn n_states(&self) -> usize {
        self.transition.dim().0
    }

    pub fn n_actions(&self) -> usize {
        self.transition.dim().1
    }

    pub fn discount(&self) -> f64 {
        self.discount
    }

    pub fn transition(&self) -> &Array3<f64> {
        &self.transition
    }

    pub fn reward(&self) -> &Array2<f64> {
        &self.reward
    }

    /// Next-state distribution `P(. | x, a)`.
    pub fn next_states(&self, x: usize, a: usize) -> ArrayView1<'_, f64> {
        self.transition.slice(ndarray::s![x, a, ..])
    }

    /// Iterate the support of `P(. | x, a)` as `(next_state, probability)`.
    pub fn successors(&self, x: usize, a: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.next_states(x, a)
            .into_iter()
            .copied()
            .enumerate()
            .filter(|&(_, p)| p > 0.0)
    }

    pub fn reward_sup(&self) -> f64 {
        self.reward.iter().fold(0.0_f64, |m, r| m.max(r.abs()))
    }

    /// `[min r, max r] / (1 - gamma)`, the range of achievable unregularized returns.
    pub fn return_bounds(&self) -> (f64, f64) {
        let lo = self.reward.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = self.reward.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        (lo / (1.0 - self.discount), hi / (1.0 - self.discount))
    }

    /// `E_{x' ~ P(.|x,a)} f(x')` for every `(x, a)`.
    pub fn expect_next(&self, f: &Array1<f64>) -> Array2<f64> {
        let (ns, na) = (self.n_states(), self.n_actions());
        Array2::from_shape_fn((ns, na), |(x, a)| self.next_states(x, a).dot(f))
    }

    /// Checks that `policy` has this MDP's shape and valid rows.
    pub fn check_policy(&self, policy: &Policy, what: &'static str) -> Result<()> {
        let want = (self.n_states(), self.n_actions());
        if policy.probs().dim() != want {
            return Err(mismatch(what, format!("{want:?}"), format!("{:?}", policy.probs().dim())));
        }
        Ok(())
    }

    pub(crate) fn check_q(&self, q: &QFunction) -> Result<()> {
        let want = (self.n_states(), self.n_actions());
        if q.values().dim() != want {
            return Err(mismatch("q-function", format!("{want:?}"), format!("{:?}", q.values().dim())));
        }
        Ok(())
    }
}

/// A Markov policy: one probability vector over actions per state.
#[derive(Debug, Clone, PartialEq)]
pub struct Policy {
    probs: Array2<f64>,
}

impl Policy {
    /// Validates nonnegativity and unit row sums (within [`POLICY_ROW_TOL`]).
    pub fn new(probs: Array2<f64>) -> Result<Self> {
        if probs.nrows() == 0 || probs.ncols() == 0 {
            return Err(Error::InvalidArgument("policy must have at least one state and action".into()));
        }
        for (x, row) in probs.outer_iter().enumerate() {
            if row.iter().any(|&p| !(p >= 0.0) || !p.is_finite()) {
                return Err(Error::InvalidArgument(format!("policy row {x} has a negative or non-finite entry")));
            }
            let s = row.sum();
            if (s - 1.0).abs() > POLICY_ROW_TOL {
                return Err(Error::InvalidArgument(format!("policy row {x} sums to {s}")));
            }
        }
        Ok(Self { probs })
    }

    /// Normalize each row of a nonnegative weight matrix.
    pub fn from_weights(weights: Array2<f64>) -> Result<Self> {
        let mut probs = weights;
        for (x, mut row) in probs.outer_iter_mut().enumerate() {
            let s = row.sum();
            if !(s > 0.0) || !s.is_finite() {
                return Err(Error::InvalidArgument(format!("weights of row {x} do not normalize (sum {s})")));
            }
            row.mapv_inplace(|w| w / s);
        }
        Self::new(probs)
    }

    pub(crate) fn from_normalized(probs: Array2<f64>) -> Self {
        debug_assert!(probs.outer_iter().all(|r| (r.sum() - 1.0).abs() < 1e-9));
        Self { probs }
    }

    pub fn uniform(n_states: usize, n_actions: usize) -> Self {
        Self { probs: Array2::from_elem((n_states, n_actions), 1.0 / n_actions as f64) }
    }

    /// Deterministic policy playing `actions[x]` in state `x`.
    pub fn deterministic(actions: &[usize], n_actions: usize) -> Result<Self> {
        let mut probs = Array2::zeros((actions.len(), n_actions));
        for (x, &a) in actions.iter().enumerate() {
            if a >= n_actions {
                return Err(Error::InvalidArgument(format!("action {a} out of range at state {x}")));
            }
            probs[[x, a]] = 1.0;
        }
        Ok(Self { probs })
    }

    pub fn probs(&self) -> &Array2<f64> {
        &self.probs
    }

    pub fn row(&self, x: usize) -> ArrayView1<'_, f64> {
        self.probs.row(x)
    }

    pub fn n_states(&self) -> usize {
        self.probs.nrows()
    }

    pub fn n_actions(&self) -> usize {
        self.probs.ncols()
    }

    /// Actions with positive probability in state `x`.
    pub fn support(&self, x: usize) -> impl Iterator<Item = usize> + '_ {
        self.probs.row(x).into_iter().enumerate().filter(|(_, &p)| p > 0.0).map(|(a, _)| a)
    }

    pub fn into_inner(self) -> Array2<f64> {
        self.probs
    }
}

/// Action-value function indexed by `(state, action)`.
#[derive(Debug, Clone, PartialEq)]
pub struct QFunction(Array2<f64>);

impl QFunction {
    pub fn new(values: Array2<f64>) -> Self {
        Self(values)
    }

    pub fn zeros(n_states: usize, n_actions: usize) -> Self {
        Self(Array2::zeros((n_states, n_actions)))
    }

    pub fn values(&self) -> &Array2<f64> {
        &self.0
    }

    pub fn values_mut(&mut self) -> &mut Array2<f64> {
        &mut self.0
    }

    pub fn into_inner(self) -> Array2<f64> {
        self.0
    }

    pub fn sup_norm(&self) -> f64 {
        self.0.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    /// `max |self - other|` over all entries.
    pub fn sup_distance(&self, other: &QFunction) -> f64 {
        self.0
            .iter()
            .zip(other.0.iter())
            .fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()))
    }
}

impl From<Array2<f64>> for QFunction {
    fn from(values: Array2<f64>) -> Self {
        Self(values)
    }
}

/// State-value function.
#[derive(Debug, Clone, PartialEq)]
pub struct ValueFunction(Array1<f64>);

impl ValueFunction {
    pub fn new(values: Array1<f64>) -> Self {
        Self(values)
    }

    pub fn values(&self) -> &Array1<f64> {
        &self.0
    }

    pub fn into_inner(self) -> Array1<f64> {
        self.0
    }
}

/// State transition kernel induced by a policy:
/// `K[x, y] = sum_a policy[x, a] * P(y | x, a)`.
pub fn policy_state_kernel(mdp: &TabularMdp, policy: &Policy) -> Result<Array2<f64>> {
    mdp.check_policy(policy, "policy")?;
    let ns = mdp.n_states();
    let mut kernel = Array2::zeros((ns, ns));
    for x in 0..ns {
        for (a, &pa) in policy.row(x).iter().enumerate() {
            if pa > 0.0 {
                kernel.row_mut(x).scaled_add(pa, &mdp.next_states(x, a));
            }
        }
    }
    Ok(kernel)
}

/// Expected one-step reward under a policy, per state.
pub(crate) fn policy_reward(mdp: &TabularMdp, policy: &Policy) -> Array1<f64> {
    (mdp.reward() * policy.probs()).sum_axis(Axis(1))
}

/// Action values `q^pi`, the unique solution of `q = r + gamma P^pi q`.
///
/// Solves the state-level system `(I - gamma K_pi) v = r_pi` by LU and lifts
/// to actions; falls back to fixed-point iteration if the direct residual is
/// above `1e-12`.
pub fn exact_policy_evaluation(mdp: &TabularMdp, policy: &Policy) -> Result<QFunction> {
    const RESIDUAL_TOL: f64 = 1e-12;
    const MAX_FALLBACK_ITERS: usize = 100_000;

    let gamma = mdp.discount();
    let kernel = policy_state_kernel(mdp, policy)?;
    let ns = mdp.n_states();
    let system = Array2::eye(ns) - &kernel * gamma;
    let r_pi = policy_reward(mdp, policy);
    let v = linalg::solve(&system, &r_pi)?;
    let mut q = mdp.reward() + &(mdp.expect_next(&v) * gamma);

    let backup = |q: &Array2<f64>| -> Array2<f64> {
        let v = (q * policy.probs()).sum_axis(Axis(1));
        mdp.reward() + &(mdp.expect_next(&v) * gamma)
    };
    let mut residual = sup_diff(&backup(&q), &q);
    let scale = 1.0 + q.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let mut iterations = 0;
    while residual > RESIDUAL_TOL * scale {
        if iterations == MAX_FALLBACK_ITERS {
            return Err(Error::NotConverged { iterations, residual, best: Box::new(QFunction(q)) });
        }
        let next = backup(&q);
        residual = sup_diff(&next, &q);
        q = next;
        iterations += 1;
    }
    Ok(QFunction(q))
}

pub(crate) fn sup_diff(a: &Array2<f64>, b: &Array2<f64>) -> f64 {
    a.iter().zip(b.iter()).fold(0.0_f64, |m, (x, y)| m.max((x - y).abs()))
}
