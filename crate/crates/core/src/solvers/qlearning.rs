//! Tabular soft Q-learning on samples drawn from a behavior occupancy.

use ndarray::Array1;
use rand::distributions::{Distribution, WeightedIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::gibbs::lse_row;
use crate::error::{check_temperature, mismatch, Error, Result};
use crate::mdp::{Policy, QFunction, TabularMdp};

/// Step-size schedule `alpha_t`, indexed from `t = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepSize {
    /// `c / (c + t)`.
    Harmonic { c: f64 },
    Constant(f64),
}

impl Default for StepSize {
    fn default() -> Self {
        StepSize::Harmonic { c: 1000.0 }
    }
}

impl StepSize {
    pub fn at(&self, t: u64) -> f64 {
        match *self {
            StepSize::Harmonic { c } => c / (c + t as f64),
            StepSize::Constant(a) => a,
        }
    }

    /// Both schedules are monotone, so checking the first and last step suffices.
    fn validate(&self, steps: u64) -> Result<()> {
        for t in [0, steps.saturating_sub(1)] {
            let a = self.at(t);
            if !(a > 0.0 && a <= 1.0) {
                return Err(Error::InvalidStepSize { step: t, value: a });
            }
        }
        Ok(())
    }
}

/// Inputs for [`soft_q_learning`] besides the MDP and temperature.
#[derive(Debug, Clone)]
pub struct SoftQLearningConfig {
    pub steps: u64,
    pub step_size: StepSize,
    /// Defaults to the reference policy.
    pub behavior: Option<Policy>,
    /// Restart distribution of the sampling chain; defaults to uniform.
    pub initial_dist: Option<Array1<f64>>,
    pub seed: u64,
}

impl SoftQLearningConfig {
    pub fn new(steps: u64, seed: u64) -> Self {
        Self { steps, step_size: StepSize::default(), behavior: None, initial_dist: None, seed }
    }
}

/// Runs `q(x, a) <- (1 - alpha_t) q(x, a) + alpha_t (r(x, a) + gamma v_tau q(x'))`
/// from `q = 0`. Pairs `(x, a)` come from a chain that restarts from the
/// initial distribution with probability `1 - gamma` after each transition,
/// whose stationary law is the behavior occupancy measure.
pub fn soft_q_learning(mdp: &TabularMdp, reference: &Policy, tau: f64, cfg: &SoftQLearningConfig) -> Result<QFunction> {
    check_temperature(tau)?;
    cfg.step_size.validate(cfg.steps)?;
    mdp.check_policy(reference, "reference policy")?;
    let (ns, na) = (mdp.n_states(), mdp.n_actions());
    let behavior = cfg.behavior.clone().unwrap_or_else(|| reference.clone());
    mdp.check_policy(&behavior, "behavior policy")?;
    for x in 0..ns {
        if reference.support(x).any(|a| behavior.probs()[[x, a]] <= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "behavior policy must cover the reference support at state {x}"
            )));
        }
    }
    let nu0 = cfg.initial_dist.clone().unwrap_or_else(|| Array1::from_elem(ns, 1.0 / ns as f64));
    if nu0.len() != ns {
        return Err(mismatch("initial distribution", ns.to_string(), nu0.len().to_string()));
    }

    let invalid = |e: rand::distributions::WeightedError| Error::InvalidArgument(e.to_string());
    let restart = WeightedIndex::new(nu0.iter().copied()).map_err(invalid)?;
    let act: Vec<_> = (0..ns)
        .map(|x| WeightedIndex::new(behavior.row(x).iter().copied()).map_err(invalid))
        .collect::<Result<_>>()?;
    let next: Vec<_> = (0..ns * na)
        .map(|i| WeightedIndex::new(mdp.next_states(i / na, i % na).iter().copied()).map_err(invalid))
        .collect::<Result<_>>()?;

    let gamma = mdp.discount();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut q = QFunction::zeros(ns, na);
    let mut x = restart.sample(&mut rng);
    for t in 0..cfg.steps {
        let a = act[x].sample(&mut rng);
        let y = next[x * na + a].sample(&mut rng);
        let v = lse_row(q.values().row(y), reference.row(y), tau).ok_or(Error::EmptySupport { state: y })?;
        let alpha = cfg.step_size.at(t);
        let target = mdp.reward()[[x, a]] + gamma * v;
        let cell = &mut q.values_mut()[[x, a]];
        *cell += alpha * (target - *cell);
        x = if rng.gen::<f64>() < gamma { y } else { restart.sample(&mut rng) };
    }
    Ok(q)
}
