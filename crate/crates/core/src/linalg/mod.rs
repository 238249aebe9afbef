//! Small dense linear algebra: matrices over `f64` or exact rationals,
//! induced norms, matrix measures and the matrix exponential.

mod expm;
mod matrix;
mod norms;
mod scalar;

pub use expm::{mat_exp, spectral_abscissa, EXP_OVERFLOW_GUARD, MAX_SMALL_DIM};
pub use matrix::Matrix;
pub use norms::{matrix_measure, norm, require_dim, NormKind};
pub use scalar::{format_rational, is_terminating, parse_rational, q, qi, Scalar, Q};

use crate::error::{Error, Result};

/// Componentwise absolute value.
pub fn abs_matrix<S: Scalar>(m: &Matrix<S>) -> Matrix<S> {
    m.abs()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundKind {
    SupNorm,
    MeasureUpperBound,
}

/// A scalar bound supplied for a time-varying coefficient: either an
/// essential-sup norm or an upper bound on its matrix measure.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarBound<S> {
    value: S,
    kind: BoundKind,
}

impl<S: Scalar> ScalarBound<S> {
    pub fn sup_norm(value: S) -> Result<Self> {
        if value.lt_zero() || !value.is_finite_value() {
            return Err(Error::Precondition(format!("sup norm must be finite and >= 0, got {value}")));
        }
        Ok(Self { value, kind: BoundKind::SupNorm })
    }

    pub fn measure_upper(value: S) -> Result<Self> {
        if !value.is_finite_value() {
            return Err(Error::NonFinite("measure bound"));
        }
        Ok(Self { value, kind: BoundKind::MeasureUpperBound })
    }

    pub fn value(&self) -> &S {
        &self.value
    }

    pub fn kind(&self) -> BoundKind {
        self.kind
    }

    /// The bound as a decay rate `alpha < 0`.
    pub fn as_alpha(&self) -> Result<&S> {
        match self.kind {
            BoundKind::MeasureUpperBound if self.value.lt_zero() => Ok(&self.value),
            BoundKind::MeasureUpperBound => {
                Err(Error::Precondition(format!("measure bound alpha = {} is not negative", self.value)))
            }
            BoundKind::SupNorm => Err(Error::Precondition("a sup-norm bound cannot serve as alpha".into())),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scalar_bound_validation() {
        assert!(ScalarBound::sup_norm(-1.0).is_err());
        assert!(ScalarBound::sup_norm(2.0).unwrap().as_alpha().is_err());
        assert!(ScalarBound::measure_upper(0.0).unwrap().as_alpha().is_err());
        assert_eq!(*ScalarBound::measure_upper(-3.0).unwrap().as_alpha().unwrap(), -3.0);
    }

    #[test]
    fn abs_of_example_interior_matrix() {
        // [[-1 + 2c, 2], [-2 + 4c, 3 + 2s]] at c = 1, s = 0
        let (c, s) = (1.0, 0.0);
        let m = Matrix::from_rows(vec![vec![-1.0 + 2.0 * c, 2.0], vec![-2.0 + 4.0 * c, 3.0 + 2.0 * s]]).unwrap();
        assert_eq!(abs_matrix(&m), Matrix::from_rows(vec![vec![1.0, 2.0], vec![2.0, 3.0]]).unwrap());
    }
}
