//! Random instance generators shared by unit tests.

use ndarray::{Array2, Array3};
use rand::Rng;

use crate::mdp::{Policy, TabularMdp};

pub(crate) fn random_simplex<R: Rng>(rng: &mut R, n: usize) -> Vec<f64> {
    let w: Vec<f64> = (0..n).map(|_| -rng.gen::<f64>().max(1e-300).ln()).collect();
    let s: f64 = w.iter().sum();
    w.into_iter().map(|v| v / s).collect()
}

pub(crate) fn random_mdp<R: Rng>(rng: &mut R, ns: usize, na: usize, gamma: f64) -> TabularMdp {
    let mut p = Array3::zeros((ns, na, ns));
    for x in 0..ns {
        for a in 0..na {
            for (y, v) in random_simplex(rng, ns).into_iter().enumerate() {
                p[[x, a, y]] = v;
            }
        }
    }
    let r = Array2::from_shape_fn((ns, na), |_| rng.gen_range(-1.0..1.0));
    TabularMdp::new(p, r, gamma).unwrap()
}

pub(crate) fn random_policy<R: Rng>(rng: &mut R, ns: usize, na: usize) -> Policy {
    let mut probs = Array2::zeros((ns, na));
    for x in 0..ns {
        for (a, v) in random_simplex(rng, na).into_iter().enumerate() {
            probs[[x, a]] = v;
        }
    }
    Policy::from_weights(probs).unwrap()
}

pub(crate) fn random_q<R: Rng>(rng: &mut R, ns: usize, na: usize, scale: f64) -> Array2<f64> {
    Array2::from_shape_fn((ns, na), |_| rng.gen_range(-scale..scale))
}
