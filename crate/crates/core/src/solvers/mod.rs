//! Expected-value entropy-regularized operators and their solvers.

mod bounds;
mod decouple;
mod gibbs;
mod iterate;
mod operators;
mod qlearning;

pub use bounds::{m_tau_gap, min_optimal_mass, tv_bound_check, StateTvBound, TvBoundReport};
pub use decouple::{
    decoupled_policy, default_opt_tol, optimal_action_sets, optimality_filtered_reference, DecoupleConfig,
};
pub use gibbs::{boltzmann_policy, log_sum_exp_value};
pub use iterate::{reference_value_iteration, soft_policy_evaluation, soft_value_iteration, SoftSolveReport};
pub use operators::{optimality_backup, reference_optimality_backup, soft_optimality_backup, soft_policy_backup};
pub use qlearning::{soft_q_learning, SoftQLearningConfig, StepSize};


pub(crate) use operators::reachable_kl;
