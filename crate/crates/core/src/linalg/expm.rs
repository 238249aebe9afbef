use nalgebra::Schur;

use super::matrix::Matrix;
use super::norms::{norm, NormKind};
use crate::error::{Error, Result};

/// Largest dimension accepted by [`mat_exp`] and [`spectral_abscissa`].
pub const MAX_SMALL_DIM: usize = 8;

/// Bound on `|t| * ||M||_inf`; beyond it `exp(tM)` may overflow f64.
pub const EXP_OVERFLOW_GUARD: f64 = 700.0;

const SERIES_TERMS: usize = 24;

/// `exp(t M)` by scaling and squaring with a truncated Taylor series.
///
/// The argument is scaled by `2^-s` until its ∞-norm is at most 1/2, where
/// 24 series terms leave a truncation error far below 1e-16; the result is
/// then squared `s` times.
pub fn mat_exp(m: &Matrix, t: f64) -> Result<Matrix> {
    let n = m.require_square()?;
    if n > MAX_SMALL_DIM {
        return Err(Error::TooLarge { dim: n, max: MAX_SMALL_DIM });
    }
    if !t.is_finite() {
        return Err(Error::NonFinite("time argument"));
    }
    let a = m.scale(&t);
    let size = norm(&a, NormKind::Inf)?;
    if size > EXP_OVERFLOW_GUARD {
        return Err(Error::Range { scaled: size, limit: EXP_OVERFLOW_GUARD });
    }
    let squarings = if size > 0.5 { (size / 0.5).log2().ceil() as u32 } else { 0 };
    let a = a.scale(&0.5f64.powi(squarings as i32));

    let mut result = Matrix::identity(n);
    let mut term = Matrix::identity(n);
    for k in 1..=SERIES_TERMS {
        term = (&term * &a).scale(&(1.0 / k as f64));
        result = &result + &term;
        if term.max_abs() <= f64::EPSILON * 1e-3 * result.max_abs() {
            break;
        }
    }
    for _ in 0..squarings {
        result = &result * &result;
    }
    Ok(result)
}

/// Maximum real part over the eigenvalues of `m`.
pub fn spectral_abscissa(m: &Matrix) -> Result<f64> {
    let n = m.require_square()?;
    if n > MAX_SMALL_DIM {
        return Err(Error::TooLarge { dim: n, max: MAX_SMALL_DIM });
    }
    const MAX_ITER: usize = 10_000;
    let a = m.to_nalgebra();
    let scale = a.amax().max(1.0);
    let schur = Schur::try_new(a.clone(), 1e-14 * scale, MAX_ITER).ok_or_else(|| {
        // Report how far the input is from upper-triangular as the residual.
        let residual =
            (0..n).flat_map(|i| (0..i).map(move |j| (i, j))).map(|(i, j)| a[(i, j)].abs()).fold(0.0, f64::max);
        Error::NoConvergence { iterations: MAX_ITER, residual }
    })?;
    Ok(schur.complex_eigenvalues().iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: &Matrix, b: &Matrix, tol: f64) -> bool {
        (a - b).max_abs() <= tol * (1.0 + b.max_abs())
    }

    #[test]
    fn exp_of_zero_is_identity() {
        let z = Matrix::zeros(3, 3);
        assert_eq!(mat_exp(&z, 5.0).unwrap(), Matrix::identity(3));
    }

    #[test]
    fn exp_of_diagonal() {
        let d = Matrix::diag(&[-1.5, 0.3]);
        let e = mat_exp(&d, 2.0).unwrap();
        let expected = Matrix::diag(&[(-3.0f64).exp(), 0.6f64.exp()]);
        assert!(close(&e, &expected, 1e-13));
    }

    #[test]
    fn exp_of_nilpotent_is_affine() {
        let n = Matrix::from_rows(vec![vec![0.0, 1.0], vec![0.0, 0.0]]).unwrap();
        for t in [0.0, 0.5, 3.0, 9.0] {
            let e = mat_exp(&n, t).unwrap();
            let expected = Matrix::from_rows(vec![vec![1.0, t], vec![0.0, 1.0]]).unwrap();
            assert!(close(&e, &expected, 1e-13), "t={t}");
        }
    }

    #[test]
    fn exp_of_rotation_generator() {
        let r = Matrix::from_rows(vec![vec![0.0, 1.0], vec![-1.0, 0.0]]).unwrap();
        let t = 2.3f64;
        let e = mat_exp(&r, t).unwrap();
        let expected = Matrix::from_rows(vec![vec![t.cos(), t.sin()], vec![-t.sin(), t.cos()]]).unwrap();
        assert!(close(&e, &expected, 1e-12));
    }

    #[test]
    fn exp_matches_nalgebra_on_fixed_matrix() {
        let m = Matrix::from_rows(vec![vec![-1.0, 0.4, 2.0], vec![0.3, -2.0, 0.1], vec![-0.7, 1.1, 0.5]]).unwrap();
        let mine = mat_exp(&m, 1.7).unwrap();
        let reference = Matrix::from_nalgebra(&(m.to_nalgebra() * 1.7).exp());
        assert!(close(&mine, &reference, 1e-10));
    }

    #[test]
    fn exp_guards() {
        let big = Matrix::identity(9);
        assert!(matches!(mat_exp(&big, 1.0), Err(Error::TooLarge { .. })));
        let m = Matrix::identity(2).scale(&100.0);
        assert!(matches!(mat_exp(&m, 10.0), Err(Error::Range { .. })));
    }

    #[test]
    fn spectral_abscissa_examples() {
        assert!((spectral_abscissa(&Matrix::diag(&[-1.0, -2.0])).unwrap() + 1.0).abs() < 1e-12);
        let rot = Matrix::from_rows(vec![vec![0.0, 1.0], vec![-1.0, 0.0]]).unwrap();
        assert!(spectral_abscissa(&rot).unwrap().abs() < 1e-12);
        let s = Matrix::from_rows(vec![vec![4.0, 1.0], vec![1.0, 6.0]]).unwrap();
        assert!((spectral_abscissa(&s).unwrap() - (5.0 + 2f64.sqrt())).abs() < 1e-10);
    }
}
