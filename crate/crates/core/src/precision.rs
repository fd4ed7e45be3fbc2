//! Emulation of single-precision arithmetic by rounding intermediate results.

use ndarray::{ArrayBase, DataMut, Dimension};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash)]
pub enum Precision {
    #[default]
    F64,
    /// Round every stored intermediate to the nearest `f32`.
    F32,
}

impl Precision {
    pub fn from_bits(bits: u32) -> Result<Self> {
        match bits {
            64 => Ok(Precision::F64),
            32 => Ok(Precision::F32),
            b => Err(Error::InvalidArgument(format!("precision must be 32 or 64 bits, got {b}"))),
        }
    }

    pub fn bits(self) -> u32 {
        match self {
            Precision::F64 => 64,
            Precision::F32 => 32,
        }
    }

    #[inline]
    pub fn round(self, x: f64) -> f64 {
        match self {
            Precision::F64 => x,
            Precision::F32 => x as f32 as f64,
        }
    }

    pub fn round_array<S, D>(self, a: &mut ArrayBase<S, D>)
    where
        S: DataMut<Elem = f64>,
        D: Dimension,
    {
        if self == Precision::F32 {
            a.mapv_inplace(|v| v as f32 as f64);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn rounding() {
        let x = 1.0 + 1e-12;
        assert_eq!(Precision::F64.round(x), x);
        assert_eq!(Precision::F32.round(x), 1.0);
        let mut a = array![0.1, 1.0 / 3.0];
        Precision::F32.round_array(&mut a);
        assert_eq!(a[0], 0.1f32 as f64);
        assert!(Precision::from_bits(16).is_err());
        assert_eq!(Precision::from_bits(32).unwrap().bits(), 32);
    }
}
