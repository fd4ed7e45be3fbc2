//! Tabular entropy-regularized reinforcement learning: soft Bellman operators,
//! occupancy measures, temperature decoupling and categorical return
//! distributions.

pub mod dist;
pub mod divergence;
pub mod error;
mod linalg;
pub mod mdp;
pub mod occupancy;
pub mod precision;
pub mod solvers;

#[cfg(test)]
mod testutil;

pub use error::{Error, Result};
pub use mdp::{Policy, QFunction, TabularMdp, ValueFunction};
