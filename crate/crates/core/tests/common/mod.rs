#![allow(dead_code)]

use erl_core::dist::{AtomGrid, ReturnDistributionFn};
use erl_core::{Policy, TabularMdp};
use ndarray::{Array1, Array2, Array3};
use rand::Rng;

pub fn simplex<R: Rng>(rng: &mut R, n: usize) -> Vec<f64> {
    let w: Vec<f64> = (0..n).map(|_| -rng.gen::<f64>().max(1e-300).ln()).collect();
    let s: f64 = w.iter().sum();
    w.into_iter().map(|v| v / s).collect()
}

pub fn mdp<R: Rng>(rng: &mut R, ns: usize, na: usize, gamma: f64) -> TabularMdp {
    let mut p = Array3::zeros((ns, na, ns));
    for x in 0..ns {
        for a in 0..na {
            p.slice_mut(ndarray::s![x, a, ..]).assign(&Array1::from(simplex(rng, ns)));
        }
    }
    let r = Array2::from_shape_fn((ns, na), |_| rng.gen_range(-1.0..1.0));
    TabularMdp::new(p, r, gamma).unwrap()
}

pub fn policy<R: Rng>(rng: &mut R, ns: usize, na: usize) -> Policy {
    let mut w = Array2::zeros((ns, na));
    for x in 0..ns {
        w.row_mut(x).assign(&Array1::from(simplex(rng, na)));
    }
    Policy::from_weights(w).unwrap()
}

/// Random categorical distributions whose support lies in atoms `lo..lo + width`.
pub fn dist_fn<R: Rng>(rng: &mut R, grid: &AtomGrid, ns: usize, na: usize, lo: usize, width: usize) -> ReturnDistributionFn {
    let mut probs = Array3::zeros((ns, na, grid.len()));
    for x in 0..ns {
        for a in 0..na {
            for (j, w) in simplex(rng, width).into_iter().enumerate() {
                probs[[x, a, lo + j]] = w;
            }
        }
    }
    ReturnDistributionFn::new(grid.clone(), probs).unwrap()
}

/// Index of a draw from a discrete distribution.
pub fn draw<R: Rng>(rng: &mut R, probs: impl IntoIterator<Item = f64>) -> usize {
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    let mut last = 0;
    for (i, p) in probs.into_iter().enumerate() {
        if p > 0.0 {
            last = i;
        }
        acc += p;
        if u < acc {
            return i;
        }
    }
    last
}
