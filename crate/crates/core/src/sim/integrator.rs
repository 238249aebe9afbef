use std::sync::Arc;

use crate::error::{Error, Result};

/// States above this ∞-norm abort the integration.
pub const BLOWUP_NORM: f64 = 1e12;

pub(crate) fn inf_norm(x: &[f64]) -> f64 {
    x.iter().fold(0.0, |m, v| m.max(v.abs()))
}

/// Initial function `phi(t)` for `t <= t0`.
#[derive(Clone)]
pub struct History {
    dim: usize,
    f: Arc<dyn Fn(f64) -> Vec<f64> + Send + Sync>,
}

impl History {
    pub fn constant(v: Vec<f64>) -> Self {
        let dim = v.len();
        Self { dim, f: Arc::new(move |_| v.clone()) }
    }

    pub fn zero(dim: usize) -> Self {
        Self::constant(vec![0.0; dim])
    }

    pub fn from_fn(dim: usize, f: impl Fn(f64) -> Vec<f64> + Send + Sync + 'static) -> Self {
        Self { dim, f: Arc::new(f) }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn eval(&self, t: f64) -> Vec<f64> {
        (self.f)(t)
    }

    /// `(x, v)` history of a second-order equation from `phi` and `phi'`.
    pub fn stacked(x: History, v: History) -> Self {
        let dim = x.dim + v.dim;
        Self::from_fn(dim, move |t| {
            let mut out = x.eval(t);
            out.extend(v.eval(t));
            out
        })
    }
}

impl std::fmt::Debug for History {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "History(dim = {})", self.dim)
    }
}

/// Right-hand side of `x'(t) = F(t, x(t), x(s) for s <= t)`.
pub trait DelaySystem {
    fn dim(&self) -> usize;

    /// Upper bound on `t - s` over every past value read by [`rhs`](Self::rhs).
    fn max_delay(&self) -> f64;

    fn rhs(&self, t: f64, x: &[f64], past: &Past<'_>, out: &mut [f64]);
}

/// Read access to the solution up to the current stage time.
pub struct Past<'a> {
    history: &'a History,
    t0: f64,
    step: f64,
    dim: usize,
    /// Completed grid states, flat.
    grid: &'a [f64],
    stage_t: f64,
    stage_x: &'a [f64],
}

impl<'a> Past<'a> {
    fn grid_len(&self) -> usize {
        self.grid.len() / self.dim
    }

    fn last_index(&self) -> usize {
        self.grid_len() - 1
    }

    /// State at grid index `k`; negative indices read the history.
    fn grid_point(&self, k: i64) -> Vec<f64> {
        if k < 0 {
            self.history.eval(self.t0 + k as f64 * self.step)
        } else {
            let k = k as usize;
            self.grid[k * self.dim..(k + 1) * self.dim].to_vec()
        }
    }

    fn grid_time(&self, k: i64) -> f64 {
        self.t0 + k as f64 * self.step
    }

    /// `x(s)` for `s <= t`: history before `t0`, linear interpolation on the
    /// grid, two-point extrapolation inside the step being computed.
    pub fn at(&self, s: f64) -> Vec<f64> {
        if s >= self.stage_t {
            return self.stage_x.to_vec();
        }
        if s <= self.t0 {
            return self.history.eval(s);
        }
        let last = self.last_index() as i64;
        let pos = (s - self.t0) / self.step;
        let (k0, k1) = if pos >= last as f64 {
            (last - 1, last)
        } else {
            let k = pos.floor() as i64;
            (k, k + 1)
        };
        let (a, b) = (self.grid_point(k0), self.grid_point(k1));
        let w = (s - self.grid_time(k0)) / self.step;
        a.iter().zip(&b).map(|(p, q)| p + w * (q - p)).collect()
    }

    /// Trapezoid nodes `(s, weight)` on `[a, t]`: the endpoints plus every grid
    /// time strictly inside, with grid times before `t0` continuing the grid.
    pub fn trapezoid_nodes(&self, a: f64) -> Vec<(f64, f64)> {
        let t = self.stage_t;
        if a >= t {
            return Vec::new();
        }
        let mut pts = vec![a];
        let mut k = ((a - self.t0) / self.step).floor() as i64 + 1;
        loop {
            let s = self.grid_time(k);
            if s >= t - 1e-12 * self.step {
                break;
            }
            if s > a + 1e-12 * self.step {
                pts.push(s);
            }
            k += 1;
        }
        pts.push(t);
        let mut nodes: Vec<(f64, f64)> = pts.iter().map(|&s| (s, 0.0)).collect();
        for i in 0..pts.len() - 1 {
            let h = pts[i + 1] - pts[i];
            nodes[i].1 += h / 2.0;
            nodes[i + 1].1 += h / 2.0;
        }
        nodes
    }
}

/// Solution on the uniform grid `t0 + k * step`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub t0: f64,
    pub step: f64,
    pub dim: usize,
    data: Vec<f64>,
    pub norms: Vec<f64>,
    /// Sup of `||phi||_inf` sampled on `[t0 - max_delay, t0]`.
    pub history_sup: f64,
}

impl Trajectory {
    /// Builds a trajectory from flat state data; norms are recomputed.
    pub fn from_parts(t0: f64, step: f64, dim: usize, data: Vec<f64>, history_sup: f64) -> Self {
        assert!(dim > 0 && data.len().is_multiple_of(dim), "data length must be a multiple of dim");
        let norms = data.chunks(dim).map(inf_norm).collect();
        Self { t0, step, dim, data, norms, history_sup }
    }

    pub fn len(&self) -> usize {
        self.norms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.norms.is_empty()
    }

    pub fn t(&self, k: usize) -> f64 {
        self.t0 + k as f64 * self.step
    }

    pub fn state(&self, k: usize) -> &[f64] {
        &self.data[k * self.dim..(k + 1) * self.dim]
    }

    pub fn last(&self) -> &[f64] {
        self.state(self.len() - 1)
    }

    /// Components `range` of every state, as a new trajectory.
    pub fn project(&self, range: std::ops::Range<usize>) -> Trajectory {
        let dim = range.len();
        let mut data = Vec::with_capacity(dim * self.len());
        for k in 0..self.len() {
            data.extend_from_slice(&self.state(k)[range.clone()]);
        }
        let norms = data.chunks(dim).map(inf_norm).collect();
        Trajectory { t0: self.t0, step: self.step, dim, data, norms, history_sup: self.history_sup }
    }

    /// Write as CSV with header `t,x1,...,xd,norm_inf`.
    pub fn write_csv<W: std::io::Write>(&self, mut w: W) -> std::io::Result<()> {
        let header: Vec<String> = (1..=self.dim).map(|i| format!("x{i}")).collect();
        writeln!(w, "t,{},norm_inf", header.join(","))?;
        for k in 0..self.len() {
            write!(w, "{:.16e}", self.t(k))?;
            for v in self.state(k) {
                write!(w, ",{v:.16e}")?;
            }
            writeln!(w, ",{:.16e}", self.norms[k])?;
        }
        Ok(())
    }
}

fn history_sup(h: &History, t0: f64, max_delay: f64, step: f64) -> f64 {
    let n = (max_delay / step).ceil() as usize;
    (0..=n).map(|k| inf_norm(&h.eval(t0 - (k as f64 * step).min(max_delay)))).fold(0.0, f64::max)
}

/// Classical RK4 on the grid `t0 + k * step`, `k * step <= horizon`.
pub fn integrate<D: DelaySystem + ?Sized>(
    sys: &D,
    history: &History,
    t0: f64,
    horizon: f64,
    step: f64,
) -> Result<Trajectory> {
    let dim = sys.dim();
    let max_delay = sys.max_delay();
    for (name, v) in [("t0", t0), ("horizon", horizon), ("step", step), ("max delay", max_delay)] {
        if !v.is_finite() {
            return Err(Error::NonFinite(name));
        }
    }
    if step <= 0.0 || horizon <= 0.0 {
        return Err(Error::Precondition(format!("step = {step} and horizon = {horizon} must be positive")));
    }
    if max_delay > 0.0 && step > max_delay {
        return Err(Error::Precondition(format!("step = {step} exceeds the largest delay {max_delay}")));
    }
    if history.dim() != dim {
        return Err(Error::Dimension(format!("history has dimension {}, system {dim}", history.dim())));
    }
    let x0 = history.eval(t0);
    if x0.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("history"));
    }

    let steps = (horizon / step + 1e-9).floor() as usize;
    let mut data = Vec::with_capacity(dim * (steps + 1));
    let mut norms = Vec::with_capacity(steps + 1);
    norms.push(inf_norm(&x0));
    data.extend_from_slice(&x0);

    let mut k = [vec![0.0; dim], vec![0.0; dim], vec![0.0; dim], vec![0.0; dim]];
    let mut stage = vec![0.0; dim];
    for n in 0..steps {
        let t = t0 + n as f64 * step;
        let x: Vec<f64> = data[n * dim..].to_vec();
        let offsets = [0.0, 0.5, 0.5, 1.0];
        for s in 0..4 {
            for i in 0..dim {
                stage[i] = if s == 0 { x[i] } else { x[i] + offsets[s] * step * k[s - 1][i] };
            }
            let ts = t + offsets[s] * step;
            let past = Past { history, t0, step, dim, grid: &data, stage_t: ts, stage_x: &stage };
            let mut out = vec![0.0; dim];
            sys.rhs(ts, &stage, &past, &mut out);
            k[s] = out;
        }
        let next: Vec<f64> =
            (0..dim).map(|i| x[i] + step / 6.0 * (k[0][i] + 2.0 * k[1][i] + 2.0 * k[2][i] + k[3][i])).collect();
        let nn = inf_norm(&next);
        if !nn.is_finite() || nn > BLOWUP_NORM || next.iter().any(|v| !v.is_finite()) {
            return Err(Error::BlowUp { t: t + step, norm: nn, last_finite: t });
        }
        norms.push(nn);
        data.extend_from_slice(&next);
    }
    Ok(Trajectory { t0, step, dim, data, norms, history_sup: history_sup(history, t0, max_delay, step) })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// `x' = -c x(t - tau)`, scalar.
    struct Scalar {
        c: f64,
        tau: f64,
    }

    impl DelaySystem for Scalar {
        fn dim(&self) -> usize {
            1
        }
        fn max_delay(&self) -> f64 {
            self.tau
        }
        fn rhs(&self, t: f64, _x: &[f64], past: &Past<'_>, out: &mut [f64]) {
            out[0] = -self.c * past.at(t - self.tau)[0];
        }
    }

    #[test]
    fn scalar_ode() {
        let tr = integrate(&Scalar { c: 1.0, tau: 0.0 }, &History::constant(vec![1.0]), 0.0, 10.0, 1e-3).unwrap();
        assert_eq!(tr.len(), 10_001);
        assert!((tr.last()[0] - (-10f64).exp()).abs() < 1e-8);
    }

    #[test]
    fn scalar_dde_decays() {
        let tr = integrate(&Scalar { c: 1.0, tau: 0.1 }, &History::constant(vec![1.0]), 0.0, 40.0, 1e-2).unwrap();
        assert!(tr.last()[0].abs() < 1e-10);
    }

    #[test]
    fn method_of_steps_first_interval() {
        // x' = -x(t-1), phi = 1: x(t) = 1 - t on [0, 1], then 1 - t + (t-1)^2/2 on [1, 2]
        let tr = integrate(&Scalar { c: 1.0, tau: 1.0 }, &History::constant(vec![1.0]), 0.0, 2.0, 1e-2).unwrap();
        assert!((tr.state(100)[0] - 0.0).abs() < 1e-12);
        assert!((tr.last()[0] - (-1.0 + 0.5)).abs() < 1e-4);
    }

    #[test]
    fn zero_rhs_conserves() {
        let tr = integrate(&Scalar { c: 0.0, tau: 0.5 }, &History::constant(vec![3.5]), 0.0, 5.0, 0.1).unwrap();
        assert!(tr.norms.iter().all(|&n| n == 3.5));
    }

    #[test]
    fn blow_up_is_an_error() {
        let e = integrate(&Scalar { c: -30.0, tau: 0.0 }, &History::constant(vec![1.0]), 0.0, 10.0, 1e-2).unwrap_err();
        match e {
            Error::BlowUp { t, last_finite, .. } => assert!(t > last_finite && t < 1.0),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn preconditions() {
        let s = Scalar { c: 1.0, tau: 0.01 };
        let h = History::constant(vec![1.0]);
        assert!(integrate(&s, &h, 0.0, 1.0, 0.1).is_err());
        assert!(integrate(&s, &h, 0.0, -1.0, 0.001).is_err());
        assert!(integrate(&s, &History::constant(vec![1.0, 2.0]), 0.0, 1.0, 0.001).is_err());
    }

    #[test]
    fn trapezoid_nodes_cover_interval() {
        let h = History::constant(vec![1.0]);
        let grid = vec![1.0; 4];
        let stage = [1.0];
        let past = Past { history: &h, t0: 0.0, step: 0.1, dim: 1, grid: &grid, stage_t: 0.35, stage_x: &stage };
        let nodes = past.trapezoid_nodes(-0.12);
        let total: f64 = nodes.iter().map(|n| n.1).sum();
        assert!((total - 0.47).abs() < 1e-14);
        assert_eq!(nodes.len(), 7);
        // linear interpolation reproduces a linear function exactly
        let lin = History::from_fn(1, |t| vec![2.0 * t]);
        let g = vec![0.0, 0.2, 0.4];
        let st = [0.5];
        let p = Past { history: &lin, t0: 0.0, step: 0.1, dim: 1, grid: &g, stage_t: 0.25, stage_x: &st };
        assert!((p.at(0.15)[0] - 0.3).abs() < 1e-14);
        assert!((p.at(0.22)[0] - 0.44).abs() < 1e-14);
        assert!((p.at(-0.3)[0] + 0.6).abs() < 1e-14);
        assert_eq!(p.at(0.25)[0], 0.5);
    }
}
