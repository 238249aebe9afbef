//! Induced matrix norms and matrix measures (logarithmic norms).
//!
//! The matrix measure is `mu(M) = lim_{h->0+} (||I + hM|| - 1) / h`. It is
//! never evaluated through the limit; each norm has a closed form:
//!
//! * `Inf`: `max_i (m_ii + sum_{j != i} |m_ij|)`
//! * `One`: the same over columns
//! * `Two`: largest eigenvalue of the symmetric part `(M + M^T) / 2`
//!
//! `Inf` and `One` are evaluated in the scalar field of the matrix, hence
//! exactly for rationals. `Two` goes through `f64`.

use nalgebra::SymmetricEigen;
use serde::{Deserialize, Serialize};

use super::matrix::Matrix;
use super::scalar::Scalar;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NormKind {
    #[default]
    Inf,
    One,
    Two,
}

impl NormKind {
    pub fn name(self) -> &'static str {
        match self {
            NormKind::Inf => "inf",
            NormKind::One => "one",
            NormKind::Two => "two",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "inf" => Some(NormKind::Inf),
            "one" => Some(NormKind::One),
            "two" => Some(NormKind::Two),
            _ => None,
        }
    }
}

/// Induced norm of `m`.
pub fn norm<S: Scalar>(m: &Matrix<S>, kind: NormKind) -> Result<S> {
    match kind {
        NormKind::Inf => Ok(max_row_abs_sum(m)),
        NormKind::One => Ok(max_row_abs_sum(&m.transpose())),
        NormKind::Two => {
            m.require_square()?;
            let svd = m.to_nalgebra().svd(false, false);
            let largest = svd.singular_values.iter().copied().fold(0.0, f64::max);
            Ok(S::from_f64_lossy(largest))
        }
    }
}

fn max_row_abs_sum<S: Scalar>(m: &Matrix<S>) -> S {
    (0..m.rows()).map(|i| m.row(i).iter().fold(S::zero(), |acc, x| acc + x.abs())).fold(S::zero(), S::max_of)
}

/// Matrix measure of a square matrix.
pub fn matrix_measure<S: Scalar>(m: &Matrix<S>, kind: NormKind) -> Result<S> {
    m.require_square()?;
    match kind {
        NormKind::Inf => Ok(measure_rows(m)),
        NormKind::One => Ok(measure_rows(&m.transpose())),
        NormKind::Two => {
            let a = m.to_nalgebra();
            let sym = (&a + a.transpose()) * 0.5;
            let eig = SymmetricEigen::new(sym);
            let top = eig.eigenvalues.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            Ok(S::from_f64_lossy(top))
        }
    }
}

fn measure_rows<S: Scalar>(m: &Matrix<S>) -> S {
    let n = m.rows();
    let mut best: Option<S> = None;
    for i in 0..n {
        let mut s = m[(i, i)].clone();
        for j in (0..n).filter(|&j| j != i) {
            s = s + m[(i, j)].abs();
        }
        best = Some(match best {
            Some(b) => S::max_of(b, s),
            None => s,
        });
    }
    best.expect("square matrices are non-empty")
}

/// Sanity guard used by callers that receive bare dimensions.
pub fn require_dim(m: &Matrix<impl Scalar>, d: usize, what: &str) -> Result<()> {
    if m.rows() != d || m.cols() != d {
        return Err(Error::Dimension(format!("{what} is {}x{}, expected {d}x{d}", m.rows(), m.cols())));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::scalar::{qi, Q};

    fn m(rows: &[&[f64]]) -> Matrix {
        Matrix::from_rows(rows.iter().map(|r| r.to_vec()).collect()).unwrap()
    }

    fn mq(rows: &[&[i64]]) -> Matrix<Q> {
        Matrix::from_rows(rows.iter().map(|r| r.iter().map(|&x| qi(x)).collect()).collect()).unwrap()
    }

    #[test]
    fn inf_norm_of_example_b_envelope() {
        // Worst-case envelope of B(t) = [[4, 2 sin^2 t], [2 cos^2 t, 8]].
        assert_eq!(norm(&mq(&[&[4, 2], &[2, 8]]), NormKind::Inf).unwrap(), qi(10));
        assert_eq!(norm(&Matrix::<f64>::identity(3), NormKind::Inf).unwrap(), 1.0);
    }

    #[test]
    fn two_norm_of_rank_one() {
        // [[3,4],[0,0]] has singular values 5 and 0.
        let v = norm(&m(&[&[3.0, 4.0], &[0.0, 0.0]]), NormKind::Two).unwrap();
        assert!((v - 5.0).abs() < 1e-12);
    }

    #[test]
    fn one_norm_is_column_sum() {
        assert_eq!(norm(&m(&[&[1.0, -7.0], &[2.0, 3.0]]), NormKind::One).unwrap(), 10.0);
    }

    #[test]
    fn measures_match_hand_values() {
        assert_eq!(matrix_measure(&mq(&[&[-4, -1], &[-1, -6]]), NormKind::Inf).unwrap(), qi(-3));
        assert_eq!(matrix_measure(&mq(&[&[-4, 1], &[-1, -6]]), NormKind::Inf).unwrap(), qi(-3));
        for k in [NormKind::Inf, NormKind::One, NormKind::Two] {
            assert_eq!(matrix_measure(&Matrix::<f64>::zeros(3, 3), k).unwrap(), 0.0);
        }
        // symmetric part of [[1,2],[0,1]] is [[1,1],[1,1]] with top eigenvalue 2
        let mu2 = matrix_measure(&m(&[&[1.0, 2.0], &[0.0, 1.0]]), NormKind::Two).unwrap();
        assert!((mu2 - 2.0).abs() < 1e-12);
    }

    #[test]
    fn measure_rejects_rectangular() {
        let r = Matrix::new(1, 2, vec![1.0, 2.0]).unwrap();
        assert!(matches!(matrix_measure(&r, NormKind::Inf), Err(Error::NotSquare { .. })));
        assert_eq!(norm(&r, NormKind::Inf).unwrap(), 3.0);
        assert!(norm(&r, NormKind::Two).is_err());
    }
}
