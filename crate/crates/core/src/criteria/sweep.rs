use crate::error::{Error, Result};
use crate::linalg::Scalar;

/// Absolute width of the final bisection bracket.
pub const BISECTION_TOL: f64 = 1e-12;

/// Allowed gap between bisection and a closed-form root (relative above 1).
pub const CLOSED_FORM_TOL: f64 = 1e-9;

const MAX_BISECTIONS: usize = 200;

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult<S: Scalar> {
    /// Largest delay found certified; the supremum lies in `[tau_max, tau_max + BISECTION_TOL]`.
    pub tau_max: f64,
    pub closed_form: Option<S>,
    pub iterations: usize,
    pub notes: Vec<String>,
}

/// Supremum of certified delays on `[0, tau_hi]`, assuming the certified set
/// is an interval starting at 0.
pub fn sweep_max_tau<S: Scalar>(
    eval: impl Fn(&S) -> Result<bool>,
    tau_hi: f64,
    closed_form: Option<S>,
) -> Result<SweepResult<S>> {
    if !(tau_hi.is_finite() && tau_hi > 0.0) {
        return Err(Error::Spec(format!("tau_max = {tau_hi} must be positive and finite")));
    }
    let at = |x: f64| eval(&S::from_f64_lossy(x));
    let mut notes = Vec::new();
    if !eval(&S::zero())? {
        notes.push("not certified at tau = 0: no positive certified delay".into());
        return Ok(SweepResult { tau_max: 0.0, closed_form, iterations: 0, notes });
    }
    if at(tau_hi)? {
        notes.push(format!("certified on all of [0, {tau_hi}]; the threshold is not bracketed"));
        return Ok(SweepResult { tau_max: tau_hi, closed_form, iterations: 0, notes });
    }
    let (mut lo, mut hi) = (0.0f64, tau_hi);
    let mut iterations = 0;
    // Run to full precision; BISECTION_TOL is the guaranteed bracket width.
    while iterations < MAX_BISECTIONS {
        let mid = lo + (hi - lo) / 2.0;
        if mid <= lo || mid >= hi {
            break;
        }
        if at(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
        iterations += 1;
    }
    if let Some(cf) = &closed_form {
        let c = cf.to_f64_lossy();
        let tolerance = CLOSED_FORM_TOL * c.abs().max(1.0);
        if (lo - c).abs() > tolerance {
            return Err(Error::SweepDisagreement { bisection: lo, closed_form: c, tolerance });
        }
    }
    Ok(SweepResult { tau_max: lo, closed_form, iterations, notes })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{q, Q};

    #[test]
    fn finds_a_rational_threshold() {
        let r = sweep_max_tau(|t: &Q| Ok(*t < q(1, 96)), 10.0, Some(q(1, 96))).unwrap();
        assert!((r.tau_max - 1.0 / 96.0).abs() < 1e-11);
        assert!(r.notes.is_empty());
    }

    #[test]
    fn false_at_zero() {
        let r = sweep_max_tau(|_: &f64| Ok(false), 1.0, None).unwrap();
        assert_eq!(r.tau_max, 0.0);
        assert_eq!(r.notes.len(), 1);
    }

    #[test]
    fn unbracketed() {
        let r = sweep_max_tau(|_: &f64| Ok(true), 2.0, None).unwrap();
        assert_eq!(r.tau_max, 2.0);
        assert!(r.notes[0].contains("not bracketed"));
    }

    #[test]
    fn disagreement_is_an_error() {
        let e = sweep_max_tau(|t: &f64| Ok(*t < 0.5), 1.0, Some(0.25)).unwrap_err();
        assert!(matches!(e, Error::SweepDisagreement { .. }));
    }

    #[test]
    fn rejects_bad_range() {
        assert!(sweep_max_tau(|_: &f64| Ok(true), 0.0, None).is_err());
        assert!(sweep_max_tau(|_: &f64| Ok(true), f64::NAN, None).is_err());
    }
}
