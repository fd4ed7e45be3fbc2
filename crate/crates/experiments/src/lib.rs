//! Experiment drivers for `erl-core`: builtin MDPs, MDP and configuration
//! files, temperature-ladder experiments and CSV output.

pub mod builtins;
pub mod config;
pub mod error;
pub mod experiments;
pub mod io;
pub mod montecarlo;
pub mod output;
pub mod random;

pub use error::{ExpError, Result};
