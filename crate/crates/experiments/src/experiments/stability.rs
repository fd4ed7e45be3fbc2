//! Successive iterates of the classic greedy and the soft distributional
//! optimality operators.

use std::path::{Path, PathBuf};

use erl_core::dist::{
    classic_dist_value_iteration, soft_dist_value_iteration, DistTrace, ReturnDistributionFn, TraceOptions,
};
use erl_core::precision::Precision;

use crate::config::{ExperimentConfig, Setup};
use crate::error::Result;
use crate::output::{num, Table, ITERATES_HEADER, TRACE_HEADER};

/// Temperature of the soft run when the configuration gives none.
pub const DEFAULT_TAU: f64 = 0.1;
/// Number of leading and trailing iterates kept for `iterates.csv`.
pub const FILMSTRIP_EDGE: usize = 10;

#[derive(Debug, Clone, PartialEq)]
pub struct StabilityReport {
    pub tau: f64,
    pub soft: DistTrace,
    pub classic: DistTrace,
}

impl StabilityReport {
    /// `sup-W1` between the last two soft iterates.
    pub fn soft_final_step(&self) -> f64 {
        self.soft.sup_w1_to_previous.last().copied().unwrap_or(0.0)
    }

    /// Smallest successive classic distance over iterations `from..=to` (1-based).
    pub fn classic_min_step(&self, from: usize, to: usize) -> f64 {
        self.classic.sup_w1_to_previous[from - 1..to].iter().copied().fold(f64::INFINITY, f64::min)
    }
}

/// Runs both operators for `n_control` steps from a point mass at zero at
/// the first ladder temperature.
pub fn run(setup: &Setup, cfg: &ExperimentConfig, precision: Precision) -> Result<StabilityReport> {
    let tau = cfg.ladder(|| vec![DEFAULT_TAU])?[0];
    let n = cfg.n_control;
    let (ns, na) = (setup.mdp.n_states(), setup.mdp.n_actions());
    let z0 = ReturnDistributionFn::point_mass(ns, na, setup.grid.clone(), 0.0);
    let opts = TraceOptions { precision, snapshot_every: 1 };
    let keep = |tr: DistTrace| DistTrace {
        snapshots: tr.snapshots.into_iter().filter(|(k, _)| *k <= FILMSTRIP_EDGE || *k + FILMSTRIP_EDGE >= n).collect(),
        ..tr
    };
    let soft = keep(soft_dist_value_iteration(&setup.mdp, &setup.reference, tau, &z0, n, &opts)?);
    let classic = keep(classic_dist_value_iteration(&setup.mdp, &z0, n, &opts)?);
    Ok(StabilityReport { tau, soft, classic })
}

/// Writes `iterates.csv` with the kept snapshots and `trace.csv` with every
/// successive distance.
pub fn write(report: &StabilityReport, dir: &Path) -> Result<Vec<PathBuf>> {
    let mut it = Table::create(dir, "iterates.csv", &ITERATES_HEADER)?;
    let mut tr = Table::create(dir, "trace.csv", &TRACE_HEADER)?;
    for (method, trace) in [("soft", &report.soft), ("classic", &report.classic)] {
        for (k, z) in &trace.snapshots {
            let atoms = z.grid().atoms();
            for ((x, a, j), &p) in z.probs().indexed_iter() {
                it.row(&[method.into(), k.to_string(), x.to_string(), a.to_string(), num(atoms[j]), num(p)])?;
            }
        }
        for (k, d) in trace.sup_w1_to_previous.iter().enumerate() {
            tr.row(&[method.into(), (k + 1).to_string(), num(*d)])?;
        }
    }
    Ok(vec![it.finish()?, tr.finish()?])
}
