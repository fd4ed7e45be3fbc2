use nalgebra::{DMatrix, DVector};
use ndarray::{Array1, Array2};

use crate::error::{Error, Result};

/// Solve the dense square system `a x = b` by LU with partial pivoting.
pub(crate) fn solve(a: &Array2<f64>, b: &Array1<f64>) -> Result<Array1<f64>> {
    let n = b.len();
    debug_assert_eq!(a.dim(), (n, n));
    let m = DMatrix::from_fn(n, n, |i, j| a[[i, j]]);
    let rhs = DVector::from_iterator(n, b.iter().copied());
    let x = m.lu().solve(&rhs).ok_or(Error::Singular)?;
    Ok(Array1::from_iter(x.iter().copied()))
}
