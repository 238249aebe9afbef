//! Comparison with the Lyapunov-functional delay bound `tau < a1 / (a0 sqrt(d))`.

use super::second_order::const_criterion;
use crate::error::{Error, Result};
use crate::linalg::{Matrix, NormKind, Scalar};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Winner {
    /// The constant-coefficient measure test allows longer delays.
    MeasureCriterion,
    LyapunovCriterion,
    Tie,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Comparison<S: Scalar> {
    /// Supremum of delays certified by the constant-coefficient test.
    pub c41_threshold: S,
    /// `a1 / (a0 sqrt(d))`, rounded to f64.
    pub p51_threshold: f64,
    pub winner: Winner,
}

fn check_positive<S: Scalar>(a1: &S, a0: &S, d: usize) -> Result<()> {
    if !a1.gt_zero() || !a0.gt_zero() || d == 0 {
        return Err(Error::Precondition(format!(
            "a1 = {}, a0 = {} and d = {d} must all be positive",
            a1.pretty(),
            a0.pretty()
        )));
    }
    Ok(())
}

pub fn tunc_threshold<S: Scalar>(a1: &S, a0: &S, d: usize) -> Result<f64> {
    check_positive(a1, a0, d)?;
    Ok(a1.to_f64_lossy() / (a0.to_f64_lossy() * (d as f64).sqrt()))
}

/// Both thresholds; the winner is decided without square roots:
/// `a1 / (a0 sqrt(d)) > t` iff `a1^2 > t^2 a0^2 d`.
pub fn compare_criteria<S: Scalar>(
    a: &Matrix<S>,
    b: &Matrix<S>,
    d: usize,
    a1: &S,
    a0: &S,
    kind: NormKind,
) -> Result<Comparison<S>> {
    check_positive(a1, a0, d)?;
    let crit = const_criterion(a, b, kind)?;
    let t = crit.closed_form().ok_or_else(|| Error::Precondition("the measure test does not depend on tau".into()))?;
    let p51 = tunc_threshold(a1, a0, d)?;
    let dd = S::from_usize(d).expect("dimension fits");
    let lhs = a1.clone() * a1.clone();
    let rhs = t.clone() * t.clone() * a0.clone() * a0.clone() * dd;
    let winner = if lhs > rhs {
        Winner::LyapunovCriterion
    } else if lhs < rhs {
        Winner::MeasureCriterion
    } else {
        Winner::Tie
    };
    Ok(Comparison { c41_threshold: t, p51_threshold: p51, winner })
}
