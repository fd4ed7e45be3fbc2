//! Trajectory sampling of discounted returns.

use erl_core::{Policy, Result, TabularMdp};
use rand::distributions::{Distribution, WeightedIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

/// Rollouts are truncated once `gamma^t` falls below this.
pub const HORIZON_TOL: f64 = 1e-12;
const CHUNK: usize = 1 << 14;

/// Smallest `t` with `gamma^t < HORIZON_TOL`.
pub fn horizon(gamma: f64) -> usize {
    let mut t = 0;
    let mut d = 1.0;
    while d >= HORIZON_TOL {
        d *= gamma;
        t += 1;
    }
    t
}

/// `n` truncated discounted returns of `policy` from state `start`. Work is
/// split into fixed chunks, each with its own ChaCha stream, so the output
/// depends only on `seed`.
pub fn sample_returns(mdp: &TabularMdp, policy: &Policy, start: usize, n: usize, seed: u64) -> Result<Vec<f64>> {
    mdp.check_policy(policy, "rollout policy")?;
    let (ns, na) = (mdp.n_states(), mdp.n_actions());
    let weighted = |w: Vec<f64>| WeightedIndex::new(w).expect("validated distributions");
    let act: Vec<_> = (0..ns).map(|x| weighted(policy.row(x).to_vec())).collect();
    let next: Vec<_> = (0..ns * na).map(|i| weighted(mdp.next_states(i / na, i % na).to_vec())).collect();
    let gamma = mdp.discount();
    let h = horizon(gamma);
    let n_chunks = n.div_ceil(CHUNK);
    let chunks: Vec<Vec<f64>> = (0..n_chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(c as u64);
            let len = CHUNK.min(n - c * CHUNK);
            (0..len).map(|_| rollout(mdp, &act, &next, start, h, &mut rng)).collect()
        })
        .collect();
    Ok(chunks.concat())
}

fn rollout<R: Rng>(
    mdp: &TabularMdp,
    act: &[WeightedIndex<f64>],
    next: &[WeightedIndex<f64>],
    start: usize,
    horizon: usize,
    rng: &mut R,
) -> f64 {
    let na = mdp.n_actions();
    let (mut x, mut g, mut disc) = (start, 0.0, 1.0);
    for _ in 0..horizon {
        let a = act[x].sample(rng);
        g += disc * mdp.reward()[[x, a]];
        disc *= mdp.discount();
        x = next[x * na + a].sample(rng);
    }
    g
}

/// Sorted `(value, mass)` pairs with equal samples merged.
pub fn empirical(samples: &[f64]) -> Vec<(f64, f64)> {
    let mut s = samples.to_vec();
    s.sort_by(f64::total_cmp);
    let w = 1.0 / s.len() as f64;
    let mut out: Vec<(f64, f64)> = Vec::new();
    for v in s {
        match out.last_mut() {
            Some(last) if last.0 == v => last.1 += w,
            _ => out.push((v, w)),
        }
    }
    out
}

/// Sample mean and its standard error.
pub fn mean_and_se(samples: &[f64]) -> (f64, f64) {
    let n = samples.len() as f64;
    let m = samples.iter().sum::<f64>() / n;
    let var = samples.iter().map(|s| (s - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, (var / n).sqrt())
}
