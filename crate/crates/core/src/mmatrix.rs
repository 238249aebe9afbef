//! Non-singular M-matrix detection.
//!
//! A Z-matrix (non-positive off-diagonal) is a non-singular M-matrix when its
//! leading principal minors are positive, equivalently when it is invertible
//! with an entrywise non-negative inverse. [`m_matrix_check`] decides by the
//! minors and then confirms the inverse condition.

use crate::error::{Error, Result};
use crate::linalg::{Matrix, Scalar};

pub const MAX_MMATRIX_DIM: usize = 32;

/// Relative factor in the minor-positivity threshold (floating point only).
pub const MINOR_REL_TOL: f64 = 1e-12;

/// Lower bound accepted for inverse entries (floating point only).
pub const INVERSE_NEG_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct MMatrixReport<S: Scalar> {
    pub is_z_matrix: bool,
    pub leading_minors: Vec<S>,
    pub is_m_matrix: bool,
    pub inverse: Option<Matrix<S>>,
    pub min_minor: S,
}

pub fn is_z_matrix<S: Scalar>(m: &Matrix<S>) -> Result<bool> {
    let n = m.require_square()?;
    Ok((0..n).all(|i| (0..n).all(|j| i == j || !m[(i, j)].gt_zero())))
}

/// Determinant by Gaussian elimination with partial pivoting.
pub fn determinant<S: Scalar>(m: &Matrix<S>) -> Result<S> {
    let n = m.require_square()?;
    let mut a = m.to_rows();
    let mut det = S::one();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&x, &y| a[x][col].abs().partial_cmp(&a[y][col].abs()).expect("finite entries"))
            .expect("non-empty range");
        if a[pivot][col].is_zero() {
            return Ok(S::zero());
        }
        if pivot != col {
            a.swap(pivot, col);
            det = -det;
        }
        let p = a[col][col].clone();
        det = det * p.clone();
        for r in col + 1..n {
            if a[r][col].is_zero() {
                continue;
            }
            let f = a[r][col].clone() / p.clone();
            let pivot_row = a[col].clone();
            for (x, v) in a[r].iter_mut().zip(pivot_row).skip(col) {
                *x = x.clone() - v * f.clone();
            }
        }
    }
    Ok(det)
}

pub fn leading_minors<S: Scalar>(m: &Matrix<S>) -> Result<Vec<S>> {
    let n = m.require_square()?;
    (1..=n).map(|k| determinant(&Matrix::from_fn(k, k, |i, j| m[(i, j)].clone()))).collect()
}

/// Inverse by Gauss-Jordan elimination; `None` when singular.
pub fn inverse<S: Scalar>(m: &Matrix<S>) -> Result<Option<Matrix<S>>> {
    let n = m.require_square()?;
    let mut a = m.to_rows();
    let mut inv = Matrix::<S>::identity(n).to_rows();
    let tiny = if S::EXACT { S::zero() } else { S::from_f64_lossy(1e-300) };
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&x, &y| a[x][col].abs().partial_cmp(&a[y][col].abs()).expect("finite entries"))
            .expect("non-empty range");
        if a[pivot][col].abs() <= tiny {
            return Ok(None);
        }
        a.swap(pivot, col);
        inv.swap(pivot, col);
        let p = a[col][col].clone();
        for c in 0..n {
            a[col][c] = a[col][c].clone() / p.clone();
            inv[col][c] = inv[col][c].clone() / p.clone();
        }
        for r in (0..n).filter(|&r| r != col) {
            let f = a[r][col].clone();
            if f.is_zero() {
                continue;
            }
            for c in 0..n {
                let va = a[col][c].clone() * f.clone();
                a[r][c] = a[r][c].clone() - va;
                let vi = inv[col][c].clone() * f.clone();
                inv[r][c] = inv[r][c].clone() - vi;
            }
        }
    }
    Matrix::from_rows(inv).map(Some)
}

/// Solve `m x = b`; `None` when `m` is singular.
pub fn solve<S: Scalar>(m: &Matrix<S>, b: &[S]) -> Result<Option<Vec<S>>> {
    if b.len() != m.rows() {
        return Err(Error::Dimension(format!("rhs length {} vs {} rows", b.len(), m.rows())));
    }
    Ok(inverse(m)?.map(|inv| inv.mul_vec(b)))
}

/// Threshold a leading minor of the k x k block must exceed.
fn minor_threshold<S: Scalar>(m: &Matrix<S>, k: usize) -> S {
    if S::EXACT {
        return S::zero();
    }
    // Product of absolute row sums bounds |det| of the block.
    let magnitude =
        (0..k).map(|i| (0..k).fold(S::zero(), |acc, j| acc + m[(i, j)].abs())).fold(S::one(), |acc, r| acc * r);
    S::from_f64_lossy(MINOR_REL_TOL) * (S::one() + magnitude)
}

pub fn m_matrix_check<S: Scalar>(m: &Matrix<S>) -> Result<MMatrixReport<S>> {
    let n = m.require_square()?;
    if n > MAX_MMATRIX_DIM {
        return Err(Error::TooLarge { dim: n, max: MAX_MMATRIX_DIM });
    }
    let is_z = is_z_matrix(m)?;
    let minors = leading_minors(m)?;
    let min_minor = minors.iter().cloned().reduce(|a, b| if b < a { b } else { a }).expect("n >= 1");
    let minors_positive = minors.iter().enumerate().all(|(k, mk)| *mk > minor_threshold(m, k + 1));

    let mut inverse_ok = false;
    let mut inv = None;
    if is_z && minors_positive {
        if let Some(x) = inverse(m)? {
            let floor = if S::EXACT { S::zero() } else { -S::from_f64_lossy(INVERSE_NEG_TOL) };
            inverse_ok = x.data().iter().all(|v| *v >= floor);
            inv = Some(x);
        }
    }
    Ok(MMatrixReport {
        is_z_matrix: is_z,
        leading_minors: minors,
        is_m_matrix: is_z && minors_positive && inverse_ok,
        inverse: inv,
        min_minor,
    })
}
