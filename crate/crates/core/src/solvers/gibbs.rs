//! Log-sum-exp values and Boltzmann-Gibbs policies relative to a reference.

use ndarray::{Array1, Array2, ArrayView1};

use crate::error::{check_temperature, mismatch, Error, Result};
use crate::mdp::{Policy, QFunction, ValueFunction};

fn check_shapes(q: &QFunction, reference: &Policy) -> Result<()> {
    if q.values().dim() != reference.probs().dim() {
        return Err(mismatch(
            "q-function vs reference",
            format!("{:?}", reference.probs().dim()),
            format!("{:?}", q.values().dim()),
        ));
    }
    Ok(())
}

/// Max of `q_row` over the support of `ref_row`, or `None` for an empty support.
pub(crate) fn supported_max(q_row: ArrayView1<'_, f64>, ref_row: ArrayView1<'_, f64>) -> Option<f64> {
    q_row
        .iter()
        .zip(ref_row.iter())
        .filter(|(_, &w)| w > 0.0)
        .map(|(&v, _)| v)
        .fold(None, |m, v| Some(m.map_or(v, |m: f64| m.max(v))))
}

/// `tau * log sum_a ref(a) exp(q(a) / tau)`, shifted by the supported max.
pub(crate) fn lse_row(q_row: ArrayView1<'_, f64>, ref_row: ArrayView1<'_, f64>, tau: f64) -> Option<f64> {
    let m = supported_max(q_row, ref_row)?;
    let s: f64 = q_row
        .iter()
        .zip(ref_row.iter())
        .filter(|(_, &w)| w > 0.0)
        .map(|(&v, &w)| w * ((v - m) / tau).exp())
        .sum();
    Some(m + tau * s.ln())
}

/// Writes the Gibbs row `ref(a) exp((q(a) - v) / tau)` into `out`.
pub(crate) fn gibbs_row(q_row: ArrayView1<'_, f64>, ref_row: ArrayView1<'_, f64>, tau: f64, out: &mut [f64]) -> Option<()> {
    let m = supported_max(q_row, ref_row)?;
    let mut total = 0.0;
    for ((o, &v), &w) in out.iter_mut().zip(q_row.iter()).zip(ref_row.iter()) {
        *o = if w > 0.0 { w * ((v - m) / tau).exp() } else { 0.0 };
        total += *o;
    }
    for o in out.iter_mut() {
        *o /= total;
    }
    Some(())
}

/// Soft state values `v_tau q(x) = tau log E_{a ~ ref_x} exp(q(x, a) / tau)`.
pub fn log_sum_exp_value(q: &QFunction, reference: &Policy, tau: f64) -> Result<ValueFunction> {
    check_temperature(tau)?;
    check_shapes(q, reference)?;
    let mut out = Array1::zeros(q.values().nrows());
    for (x, o) in out.iter_mut().enumerate() {
        *o = lse_row(q.values().row(x), reference.row(x), tau).ok_or(Error::EmptySupport { state: x })?;
    }
    Ok(ValueFunction::new(out))
}

/// The Boltzmann-Gibbs policy `G_tau q`, with density `exp((q - v_tau q) / tau)`
/// against the reference. Its support is exactly the reference's support.
pub fn boltzmann_policy(q: &QFunction, reference: &Policy, tau: f64) -> Result<Policy> {
    check_temperature(tau)?;
    check_shapes(q, reference)?;
    let (ns, na) = q.values().dim();
    let mut probs = Array2::zeros((ns, na));
    let mut buf = vec![0.0; na];
    for x in 0..ns {
        gibbs_row(q.values().row(x), reference.row(x), tau, &mut buf).ok_or(Error::EmptySupport { state: x })?;
        probs.row_mut(x).assign(&ArrayView1::from(&buf[..]));
    }
    Ok(Policy::from_normalized(probs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use proptest::prelude::*;

    #[test]
    fn constant_rows_are_invariant() {
        let q = QFunction::new(array![[3.0, 3.0, 3.0], [-1.0, -1.0, -1.0]]);
        let reference = Policy::new(array![[0.2, 0.3, 0.5], [0.6, 0.4, 0.0]]).unwrap();
        for tau in [1e-9, 0.3, 10.0] {
            let v = log_sum_exp_value(&q, &reference, tau).unwrap();
            assert!((v.values()[0] - 3.0).abs() < 1e-14);
            assert!((v.values()[1] + 1.0).abs() < 1e-14);
            let pi = boltzmann_policy(&q, &reference, tau).unwrap();
            assert!(pi.probs().iter().zip(reference.probs().iter()).all(|(a, b)| (a - b).abs() < 1e-15));
        }
    }

    #[test]
    fn single_supported_action() {
        let q = QFunction::new(array![[5.0, 100.0]]);
        let reference = Policy::new(array![[1.0, 0.0]]).unwrap();
        let v = log_sum_exp_value(&q, &reference, 0.5).unwrap();
        assert_eq!(v.values()[0], 5.0);
        let pi = boltzmann_policy(&q, &reference, 0.5).unwrap();
        assert_eq!(pi.row(0).to_vec(), vec![1.0, 0.0]);
    }

    #[test]
    fn two_action_closed_forms() {
        let q = QFunction::new(array![[0.0, 1.0]]);
        let reference = Policy::uniform(1, 2);
        let v = log_sum_exp_value(&q, &reference, 1.0).unwrap();
        // log((1 + e) / 2), evaluated directly.
        let expected = ((1.0 + std::f64::consts::E) / 2.0).ln();
        assert!((v.values()[0] - expected).abs() < 1e-15);
        assert!((v.values()[0] - 0.62011).abs() < 1e-5);

        let pi = boltzmann_policy(&q, &reference, 0.5).unwrap();
        let e2 = 2f64.exp();
        assert!((pi.probs()[[0, 0]] - 1.0 / (1.0 + e2)).abs() < 1e-15);
        assert!((pi.probs()[[0, 0]] - 0.1192).abs() < 1e-4);
        assert!((pi.probs()[[0, 1]] - 0.8808).abs() < 1e-4);
    }

    #[test]
    fn high_temperature_recovers_reference() {
        let q = QFunction::new(array![[0.0, 1.0, -2.0], [4.0, 0.5, 0.0]]);
        let reference = Policy::new(array![[0.2, 0.3, 0.5], [0.1, 0.1, 0.8]]).unwrap();
        let pi = boltzmann_policy(&q, &reference, 1e6).unwrap();
        let dist = pi.probs().iter().zip(reference.probs().iter()).fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()));
        assert!(dist <= 1e-4);
    }

    #[test]
    fn tiny_temperature_does_not_overflow() {
        let q = QFunction::new(array![[1000.0, 999.0, -1e6]]);
        let pi = boltzmann_policy(&q, &Policy::uniform(1, 3), 1e-9).unwrap();
        assert_eq!(pi.row(0).to_vec(), vec![1.0, 0.0, 0.0]);
        let v = log_sum_exp_value(&q, &Policy::uniform(1, 3), 1e-9).unwrap();
        assert!((v.values()[0] - 1000.0).abs() < 1e-8);
    }

    #[test]
    fn rejects_nonpositive_temperature() {
        let q = QFunction::zeros(1, 2);
        let reference = Policy::uniform(1, 2);
        assert!(matches!(log_sum_exp_value(&q, &reference, 0.0), Err(Error::InvalidTemperature(_))));
        assert!(matches!(boltzmann_policy(&q, &reference, -1.0), Err(Error::InvalidTemperature(_))));
    }

    proptest! {
        #[test]
        fn gibbs_rows_normalize_and_keep_support(
            qs in prop::collection::vec(-50.0..50.0f64, 4),
            ws in prop::collection::vec(0.0..1.0f64, 4),
            mask in prop::collection::vec(any::<bool>(), 4),
            log_tau in -9.0..2.0f64,
        ) {
            let mut w: Vec<f64> = ws.iter().zip(&mask).map(|(&w, &m)| if m { w + 0.01 } else { 0.0 }).collect();
            if w.iter().all(|&v| v == 0.0) {
                w[0] = 1.0;
            }
            let reference = Policy::from_weights(Array2::from_shape_vec((1, 4), w).unwrap()).unwrap();
            let q = QFunction::new(Array2::from_shape_vec((1, 4), qs).unwrap());
            let tau = 10f64.powf(log_tau);
            let pi = boltzmann_policy(&q, &reference, tau).unwrap();
            prop_assert!((pi.row(0).sum() - 1.0).abs() <= 1e-12);
            for a in 0..4 {
                if reference.probs()[[0, a]] == 0.0 {
                    prop_assert_eq!(pi.probs()[[0, a]], 0.0);
                } else if tau >= 1.0 {
                    // exp((q - m) / tau) >= exp(-100): no underflow.
                    prop_assert!(pi.probs()[[0, a]] > 0.0);
                }
            }
            let v = log_sum_exp_value(&q, &reference, tau).unwrap().values()[0];
            let m = supported_max(q.values().row(0), reference.row(0)).unwrap();
            prop_assert!(v <= m + 1e-12);
        }
    }
}
