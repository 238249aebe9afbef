//! Post-processing of trajectories: exponential-decay fits, forcing-response
//! properties, and the `||exp(tD)|| <= exp(t mu(D))` check.

use serde::Serialize;

use super::integrator::Trajectory;
use crate::error::{Error, Result};
use crate::linalg::{mat_exp, matrix_measure, norm, Matrix, NormKind, MAX_SMALL_DIM};

/// Norms below this are treated as numerically zero before taking logs.
pub const LOG_CLIP: f64 = 1e-14;

/// Minimum number of post-transient points for a fit.
pub const MIN_FIT_POINTS: usize = 50;

/// Tail statistic ratios for the forcing properties.
pub const BOUNDED_RATIO: f64 = 2.0;
pub const VANISHING_RATIO: f64 = 0.1;

/// Absolute slack in the exponential bound, scaled by `max(1, rhs)`.
pub const COPPEL_TOL: f64 = 1e-9;

/// Fitted `||x(t)|| ~ H e^{-nu (t - t0)} sup||phi||`. The pair is an
/// empirical proxy, not the existential constants of exponential stability.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecayEstimate {
    pub nu_hat: f64,
    pub h_hat: f64,
    pub r_squared: f64,
    pub decayed: bool,
    /// Set when the solution fell below the clip level and `nu_hat` is only a lower bound.
    pub nu_is_lower_bound: bool,
    pub fit_start: f64,
    pub fit_end: f64,
    pub fit_points: usize,
}

fn least_squares(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let intercept = my - slope * mx;
    let ss_res: f64 = xs.iter().zip(ys).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum();
    let r2 = if syy > 0.0 { (1.0 - ss_res / syy).clamp(0.0, 1.0) } else { 1.0 };
    (slope, intercept, r2)
}

/// Least-squares fit of `ln ||x||` against `t` after the first
/// `transient_fraction` of the horizon, stopping at the first clipped point.
pub fn estimate_decay(traj: &Trajectory, transient_fraction: f64) -> Result<DecayEstimate> {
    if !(0.0..1.0).contains(&transient_fraction) {
        return Err(Error::Precondition(format!("transient fraction {transient_fraction} must be in [0, 1)")));
    }
    let n = traj.len();
    let start = ((n as f64) * transient_fraction).ceil() as usize;
    if n < start + MIN_FIT_POINTS {
        return Err(Error::InsufficientData(format!(
            "{} post-transient points, need {MIN_FIT_POINTS}",
            n.saturating_sub(start)
        )));
    }
    let peak = traj.norms.iter().cloned().fold(0.0, f64::max);
    let final_norm = traj.norms[n - 1];
    let scale = if traj.history_sup > 0.0 { traj.history_sup } else { 1.0 };
    let clipped = (start..n).find(|&k| traj.norms[k] < LOG_CLIP).unwrap_or(n);

    if clipped - start < MIN_FIT_POINTS {
        // Reached numerical zero: bound the rate from the first clipped time.
        let first = (0..n).find(|&k| traj.norms[k] < LOG_CLIP).expect("a clipped point exists");
        // An identically negligible trajectory bounds nothing beyond the horizon.
        let end = if peak < LOG_CLIP { n - 1 } else { first };
        let elapsed = (traj.t(end) - traj.t0).max(traj.step);
        let nu = (peak.max(1.0) / LOG_CLIP).ln() / elapsed;
        return Ok(DecayEstimate {
            nu_hat: nu,
            h_hat: peak / scale,
            r_squared: 1.0,
            decayed: true,
            nu_is_lower_bound: true,
            fit_start: traj.t(first),
            fit_end: traj.t(first),
            fit_points: 0,
        });
    }

    let xs: Vec<f64> = (start..clipped).map(|k| traj.t(k) - traj.t0).collect();
    let ys: Vec<f64> = (start..clipped).map(|k| traj.norms[k].ln()).collect();
    let (slope, intercept, r2) = least_squares(&xs, &ys);
    let nu = -slope;
    Ok(DecayEstimate {
        nu_hat: nu,
        h_hat: intercept.exp() / scale,
        r_squared: r2,
        decayed: nu > 0.0 && final_norm < 0.5 * peak,
        nu_is_lower_bound: false,
        fit_start: traj.t(start),
        fit_end: traj.t(clipped - 1),
        fit_points: clipped - start,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ForcingProperty {
    Bounded,
    WindowIntegralBounded,
    VanishingForcing,
    VanishingWindowIntegral,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ForcingCheck {
    pub property: ForcingProperty,
    pub holds: bool,
    /// Statistic over the first 20% of the horizon.
    pub head: f64,
    /// Statistic over the last 20% of the horizon.
    pub tail: f64,
    /// `tail` must not exceed this.
    pub ceiling: f64,
}

/// `int_{t-1}^t ||x||` by the trapezoid rule, for every grid time at least one unit in.
fn window_integrals(traj: &Trajectory) -> Vec<(usize, f64)> {
    let w = (1.0 / traj.step).round() as usize;
    if w == 0 || traj.len() <= w {
        return Vec::new();
    }
    let mut cum = vec![0.0; traj.len()];
    for k in 1..traj.len() {
        cum[k] = cum[k - 1] + 0.5 * traj.step * (traj.norms[k - 1] + traj.norms[k]);
    }
    (w..traj.len()).map(|k| (k, cum[k] - cum[k - w])).collect()
}

/// Compares a sup statistic over the tail of the horizon with its head value.
pub fn check_forcing_property(traj: &Trajectory, property: ForcingProperty) -> ForcingCheck {
    let n = traj.len();
    let fifth = (n / 5).max(1);
    let series: Vec<(usize, f64)> = match property {
        ForcingProperty::Bounded | ForcingProperty::VanishingForcing => {
            traj.norms.iter().cloned().enumerate().collect()
        }
        ForcingProperty::WindowIntegralBounded | ForcingProperty::VanishingWindowIntegral => window_integrals(traj),
    };
    let sup_over =
        |lo: usize, hi: usize| series.iter().filter(|(k, _)| *k >= lo && *k < hi).map(|(_, v)| *v).fold(0.0, f64::max);
    let head = sup_over(0, fifth.max(series.first().map_or(0, |s| s.0 + 1)));
    let tail = sup_over(n - fifth, n);
    let ratio = match property {
        ForcingProperty::Bounded | ForcingProperty::WindowIntegralBounded => BOUNDED_RATIO,
        _ => VANISHING_RATIO,
    };
    let ceiling = ratio * head;
    let finite = !series.is_empty() && series.iter().all(|(_, v)| v.is_finite());
    ForcingCheck { property, holds: finite && tail <= ceiling, head, tail, ceiling }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoppelCheck {
    pub holds: bool,
    pub first_violation: Option<f64>,
    /// Smallest `exp(t mu) - ||exp(tD)||` seen.
    pub min_slack: f64,
}

/// Checks `||exp(tD)|| <= exp(t mu(D)) + tol` at `samples` evenly spaced `t` in `[0, t_max]`.
pub fn coppel_check(d: &Matrix<f64>, t_max: f64, samples: usize, kind: NormKind) -> Result<CoppelCheck> {
    let n = d.require_square()?;
    if n > MAX_SMALL_DIM {
        return Err(Error::TooLarge { dim: n, max: MAX_SMALL_DIM });
    }
    if !(t_max.is_finite() && t_max >= 0.0) || samples == 0 {
        return Err(Error::Precondition("t_max must be finite and >= 0, samples >= 1".into()));
    }
    let mu = matrix_measure(d, kind)?;
    let mut min_slack = f64::INFINITY;
    for k in 0..samples {
        let t = if samples == 1 { t_max } else { t_max * k as f64 / (samples - 1) as f64 };
        let lhs = norm(&mat_exp(d, t)?, kind)?;
        let rhs = (t * mu).exp();
        let slack = rhs - lhs;
        min_slack = min_slack.min(slack);
        if lhs > rhs + COPPEL_TOL * rhs.max(1.0) {
            return Ok(CoppelCheck { holds: false, first_violation: Some(t), min_slack });
        }
    }
    Ok(CoppelCheck { holds: true, first_violation: None, min_slack })
}
