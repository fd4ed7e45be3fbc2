//! Occupancy measures of the coupled optimal policies along a ladder and
//! their limit among mixtures of optimal deterministic policies.

use std::path::{Path, PathBuf};

use erl_core::occupancy::{occupancy_flow_residual, occupancy_measure, regularizer, OccupancyMeasure};
use erl_core::solvers::{
    boltzmann_policy, default_opt_tol, optimal_action_sets, reference_value_iteration, soft_value_iteration,
};
use erl_core::Policy;
use ndarray::Array2;
use rayon::prelude::*;

use crate::builtins::SOLVER_MAX_ITER;
use crate::config::{decade_ladder, ExperimentConfig, Setup};
use crate::error::{ExpError, Result};
use crate::output::{num, Table, OCCUPANCY_HEADER};

/// Flow residual tolerance at every rung.
pub const FLOW_TOL: f64 = 1e-10;
/// Allowed decrease of `R` between successive rungs, for rounding.
pub const MONOTONE_SLACK: f64 = 1e-12;
/// Distance from the final occupancy to the grid minimizer.
pub const LIMIT_TV_TOL: f64 = 1e-3;
const MAX_LATTICE: usize = 1_000_000;

#[derive(Debug, Clone, PartialEq)]
pub struct OccupancyRung {
    pub tau: f64,
    pub occupancy: OccupancyMeasure,
    pub regularizer: f64,
    pub flow_residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OccupancyLimitReport {
    pub rungs: Vec<OccupancyRung>,
    /// Number of optimal deterministic policies and of mixture grid points.
    pub n_vertices: usize,
    pub n_mixtures: usize,
    /// Grid point with the smallest regularizer.
    pub minimizer: OccupancyMeasure,
    pub minimizer_regularizer: f64,
    pub final_tv_to_minimizer: f64,
    pub max_flow_residual: f64,
    /// Largest `R(mu_k) - R(mu_{k+1})` along the ladder; `R` should not
    /// decrease as the temperature does.
    pub max_regularizer_drop: f64,
}

impl OccupancyLimitReport {
    pub fn flow_ok(&self) -> bool {
        self.max_flow_residual <= FLOW_TOL
    }

    pub fn monotone_ok(&self) -> bool {
        self.max_regularizer_drop <= MONOTONE_SLACK
    }

    pub fn limit_ok(&self) -> bool {
        self.final_tv_to_minimizer <= LIMIT_TV_TOL
    }

    pub fn passed(&self) -> bool {
        self.flow_ok() && self.monotone_ok() && self.limit_ok()
    }
}

/// All compositions of `total` into `parts` nonnegative integers, in lexicographic order.
pub fn simplex_lattice(parts: usize, total: usize) -> Vec<Vec<usize>> {
    fn go(parts: usize, total: usize, prefix: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if parts == 1 {
            prefix.push(total);
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        for k in 0..=total {
            prefix.push(k);
            go(parts - 1, total - k, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    if parts > 0 {
        go(parts, total, &mut Vec::with_capacity(parts), &mut out);
    }
    out
}

fn lattice_size(parts: usize, total: usize) -> usize {
    // C(total + parts - 1, parts - 1) computed incrementally.
    let mut c = 1usize;
    for i in 1..parts {
        c = c.saturating_mul(total + i) / i;
    }
    c
}

/// Deterministic policies choosing only optimal actions.
pub fn optimal_deterministic_policies(setup: &Setup, eps: f64) -> Result<Vec<Policy>> {
    let q_ref = reference_value_iteration(&setup.mdp, &setup.reference, eps, SOLVER_MAX_ITER)?.q;
    let sets = optimal_action_sets(&q_ref, &setup.reference, default_opt_tol(&q_ref))?;
    let na = setup.mdp.n_actions();
    let mut choices: Vec<Vec<usize>> = vec![vec![]];
    for set in &sets {
        choices = choices.iter().flat_map(|c| set.iter().map(move |&a| [c.as_slice(), &[a]].concat())).collect();
        if choices.len() > MAX_LATTICE {
            return Err(ExpError::Config("too many optimal deterministic policies to enumerate".into()));
        }
    }
    choices.iter().map(|c| Ok(Policy::deterministic(c, na)?)).collect()
}

pub fn run(setup: &Setup, cfg: &ExperimentConfig) -> Result<OccupancyLimitReport> {
    let ladder = cfg.ladder(decade_ladder)?;
    let (mdp, reference, nu0) = (&setup.mdp, &setup.reference, &setup.initial_dist);
    let rungs = ladder
        .par_iter()
        .map(|&tau| -> Result<OccupancyRung> {
            let q = soft_value_iteration(mdp, reference, tau, cfg.solver_eps, SOLVER_MAX_ITER)?.q;
            let pi = boltzmann_policy(&q, reference, tau)?;
            let occupancy = occupancy_measure(mdp, &pi, nu0)?;
            Ok(OccupancyRung {
                tau,
                regularizer: regularizer(&occupancy, reference)?,
                flow_residual: occupancy_flow_residual(mdp, &occupancy)?,
                occupancy,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let vertices = optimal_deterministic_policies(setup, cfg.solver_eps)?
        .iter()
        .map(|p| occupancy_measure(mdp, p, nu0))
        .collect::<erl_core::Result<Vec<_>>>()?;
    let m = cfg.mixture_resolution;
    if lattice_size(vertices.len(), m) > MAX_LATTICE {
        return Err(ExpError::Config(format!(
            "mixture grid over {} policies at resolution {m} exceeds {MAX_LATTICE} points",
            vertices.len()
        )));
    }
    let lattice = simplex_lattice(vertices.len(), m);
    let scored = lattice
        .par_iter()
        .map(|w| -> Result<(f64, OccupancyMeasure)> {
            let mut mass = Array2::zeros(vertices[0].mass().dim());
            for (v, &k) in vertices.iter().zip(w) {
                mass.scaled_add(k as f64 / m as f64, v.mass());
            }
            let occ = OccupancyMeasure::from_mass(mass, nu0.clone())?;
            Ok((regularizer(&occ, reference)?, occ))
        })
        .collect::<Result<Vec<_>>>()?;
    // First minimizer in lattice order, for determinism.
    let (minimizer_regularizer, minimizer) =
        scored.into_iter().fold(None, |best: Option<(f64, OccupancyMeasure)>, cur| match best {
            Some(b) if b.0 <= cur.0 => Some(b),
            _ => Some(cur),
        })
        .expect("the lattice is nonempty");

    let last = rungs.last().expect("ladder is nonempty");
    let final_tv_to_minimizer = last.occupancy.tv_distance(&minimizer);
    let max_flow_residual = rungs.iter().map(|r| r.flow_residual).fold(0.0, f64::max);
    let max_regularizer_drop =
        rungs.windows(2).map(|w| w[0].regularizer - w[1].regularizer).fold(f64::NEG_INFINITY, f64::max);
    Ok(OccupancyLimitReport {
        n_vertices: vertices.len(),
        n_mixtures: lattice.len(),
        rungs,
        minimizer,
        minimizer_regularizer,
        final_tv_to_minimizer,
        max_flow_residual,
        max_regularizer_drop,
    })
}

/// Writes `occupancy.csv`; the grid minimizer appears with `tau = 0`.
pub fn write(report: &OccupancyLimitReport, dir: &Path) -> Result<PathBuf> {
    let mut t = Table::create(dir, "occupancy.csv", &OCCUPANCY_HEADER)?;
    let mut emit = |tau: f64, occ: &OccupancyMeasure, reg: f64, res: f64| -> Result<()> {
        for ((x, a), &v) in occ.mass().indexed_iter() {
            t.row(&[num(tau), x.to_string(), a.to_string(), num(v), num(reg), num(res)])?;
        }
        Ok(())
    };
    for r in &report.rungs {
        emit(r.tau, &r.occupancy, r.regularizer, r.flow_residual)?;
    }
    emit(0.0, &report.minimizer, report.minimizer_regularizer, 0.0)?;
    t.finish()
}
