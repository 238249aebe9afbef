//! Runtime systems: linear block systems with point and distributed delays,
//! and second-order equations in `(x, x')` form.

use std::sync::Arc;

use super::integrator::{integrate, DelaySystem, History, Past, Trajectory};
use crate::criteria::{ModulatedMatrix, SecondOrderSpec};
use crate::error::{Error, Result};
use crate::linalg::{Matrix, Scalar};

type StateFn<T> = Arc<dyn Fn(f64, &[f64]) -> T + Send + Sync>;

/// Delay `tau(t)` in `h(t) = t - tau(t)`; varying delays are clamped to `[0, tau_bar]`.
#[derive(Clone)]
pub enum Delay {
    Constant(f64),
    Varying { tau_bar: f64, f: Arc<dyn Fn(f64) -> f64 + Send + Sync> },
}

impl Delay {
    pub fn bound(&self) -> f64 {
        match self {
            Self::Constant(t) => *t,
            Self::Varying { tau_bar, .. } => *tau_bar,
        }
    }

    pub fn at(&self, t: f64) -> f64 {
        match self {
            Self::Constant(v) => *v,
            Self::Varying { tau_bar, f } => f(t).clamp(0.0, *tau_bar),
        }
    }
}

/// A coefficient evaluated along the solution.
#[derive(Clone)]
pub enum Coefficient {
    Constant(Matrix<f64>),
    /// Weights may depend on the current state passed to [`Coefficient::eval`].
    Modulated(ModulatedMatrix<f64>),
    Custom(StateFn<Matrix<f64>>),
}

impl Coefficient {
    pub fn eval(&self, t: f64, x: &[f64]) -> Matrix<f64> {
        match self {
            Self::Constant(m) => m.clone(),
            Self::Modulated(m) => m.eval(t, x),
            Self::Custom(f) => f(t, x),
        }
    }

    pub fn from_modulated<S: Scalar>(m: &ModulatedMatrix<S>) -> Self {
        let base = m.base.to_f64();
        if m.is_constant() {
            return Self::Constant(base);
        }
        let terms = m.terms.iter().map(|(w, mat)| (*w, mat.to_f64())).collect();
        Self::Modulated(ModulatedMatrix { base, terms })
    }
}

/// Forcing `L(t)` from the catalogue.
#[derive(Clone)]
pub enum Forcing {
    Zero,
    /// `amplitude * (sin t, cos t, sin t, ...)`
    BoundedSine {
        amplitude: f64,
    },
    /// `amplitude * exp(-t) * (1, ..., 1)`
    DecayingExp {
        amplitude: f64,
    },
    Custom(Arc<dyn Fn(f64) -> Vec<f64> + Send + Sync>),
}

impl Forcing {
    pub fn add_to(&self, t: f64, out: &mut [f64]) {
        match self {
            Self::Zero => {}
            Self::BoundedSine { amplitude } => {
                for (i, o) in out.iter_mut().enumerate() {
                    *o += amplitude * if i % 2 == 0 { t.sin() } else { t.cos() };
                }
            }
            Self::DecayingExp { amplitude } => {
                let v = amplitude * (-t).exp();
                out.iter_mut().for_each(|o| *o += v);
            }
            Self::Custom(f) => {
                for (o, v) in out.iter_mut().zip(f(t)) {
                    *o += v;
                }
            }
        }
    }

    pub fn eval(&self, t: f64, dim: usize) -> Vec<f64> {
        let mut v = vec![0.0; dim];
        self.add_to(t, &mut v);
        v
    }
}

/// `C(t) x_j(t - tau(t))` added to block `i`.
#[derive(Clone)]
pub struct PointTerm {
    pub to: usize,
    pub from: usize,
    pub coeff: Coefficient,
    pub delay: Delay,
}

/// `int_{t - sigma(t)}^t K(t, s) x_j(s) ds` added to block `i`.
#[derive(Clone)]
pub struct KernelTerm {
    pub to: usize,
    pub from: usize,
    pub kernel: Arc<dyn Fn(f64, f64) -> Matrix<f64> + Send + Sync>,
    pub window: Delay,
}

/// Linear system of `n` blocks of equal size `block_dim`, plus forcing on the full state.
#[derive(Clone)]
pub struct LinearDelaySystem {
    pub block_dim: usize,
    pub blocks: usize,
    pub point: Vec<PointTerm>,
    pub kernels: Vec<KernelTerm>,
    pub forcing: Forcing,
}

impl LinearDelaySystem {
    pub fn new(block_dim: usize, blocks: usize) -> Self {
        Self { block_dim, blocks, point: Vec::new(), kernels: Vec::new(), forcing: Forcing::Zero }
    }

    pub fn point(mut self, to: usize, from: usize, coeff: Coefficient, delay: Delay) -> Self {
        self.point.push(PointTerm { to, from, coeff, delay });
        self
    }

    pub fn kernel(
        mut self,
        to: usize,
        from: usize,
        kernel: impl Fn(f64, f64) -> Matrix<f64> + Send + Sync + 'static,
        window: Delay,
    ) -> Self {
        self.kernels.push(KernelTerm { to, from, kernel: Arc::new(kernel), window });
        self
    }

    pub fn with_forcing(mut self, forcing: Forcing) -> Self {
        self.forcing = forcing;
        self
    }

    fn slice(&self, j: usize) -> std::ops::Range<usize> {
        j * self.block_dim..(j + 1) * self.block_dim
    }
}

impl DelaySystem for LinearDelaySystem {
    fn dim(&self) -> usize {
        self.block_dim * self.blocks
    }

    fn max_delay(&self) -> f64 {
        self.point
            .iter()
            .map(|p| p.delay.bound())
            .chain(self.kernels.iter().map(|k| k.window.bound()))
            .fold(0.0, f64::max)
    }

    fn rhs(&self, t: f64, x: &[f64], past: &Past<'_>, out: &mut [f64]) {
        out.iter_mut().for_each(|o| *o = 0.0);
        for p in &self.point {
            let c = p.coeff.eval(t, x);
            let tau = p.delay.at(t);
            let src = if tau == 0.0 { x.to_vec() } else { past.at(t - tau) };
            let rows = self.slice(p.to);
            c.mul_vec_acc(&src[self.slice(p.from)], &mut out[rows], 1.0);
        }
        for k in &self.kernels {
            let rows = self.slice(k.to);
            for (s, w) in past.trapezoid_nodes(t - k.window.at(t)) {
                let xs = past.at(s);
                (k.kernel)(t, s).mul_vec_acc(&xs[self.slice(k.from)], &mut out[rows.clone()], w);
            }
        }
        self.forcing.add_to(t, out);
    }
}

/// `x'' + A(t, x) x' + B(t, x) x(t - tau(t)) = L(t)` with state `(x, x')`.
#[derive(Clone)]
pub struct SecondOrderSystem {
    pub dim: usize,
    pub a: Coefficient,
    pub b: Coefficient,
    pub delay: Delay,
    pub forcing: Forcing,
}

impl DelaySystem for SecondOrderSystem {
    fn dim(&self) -> usize {
        2 * self.dim
    }

    fn max_delay(&self) -> f64 {
        self.delay.bound()
    }

    fn rhs(&self, t: f64, state: &[f64], past: &Past<'_>, out: &mut [f64]) {
        let d = self.dim;
        let (x, v) = state.split_at(d);
        let tau = self.delay.at(t);
        let xh = if tau == 0.0 { x.to_vec() } else { past.at(t - tau)[..d].to_vec() };
        let (dx, dv) = out.split_at_mut(d);
        dx.copy_from_slice(v);
        dv.iter_mut().for_each(|o| *o = 0.0);
        self.forcing.add_to(t, dv);
        let mut acc = vec![0.0; d];
        self.a.eval(t, x).mul_vec_acc(v, &mut acc, 1.0);
        self.b.eval(t, x).mul_vec_acc(&xh, &mut acc, 1.0);
        for (o, a) in dv.iter_mut().zip(acc) {
            *o -= a;
        }
    }
}

/// Integrates the augmented state `(x, x')`; the history is `(phi, phi')`.
pub fn simulate_second_order(
    sys: &SecondOrderSystem,
    phi: History,
    phi_dot: History,
    t0: f64,
    horizon: f64,
    step: f64,
) -> Result<Trajectory> {
    if phi.dim() != sys.dim || phi_dot.dim() != sys.dim {
        return Err(Error::Dimension(format!(
            "histories of dimension {} and {} for an equation of dimension {}",
            phi.dim(),
            phi_dot.dim(),
            sys.dim
        )));
    }
    integrate(sys, &History::stacked(phi, phi_dot), t0, horizon, step)
}

/// The runtime system for `(x, y)`, `y = x' + At/2 x`, of a constant-coefficient
/// equation with a constant delay `tau`.
pub fn reduced_system<S: Scalar>(spec: &SecondOrderSpec<S>, tau: f64) -> Result<LinearDelaySystem> {
    let (a, b) = spec
        .constant_coefficients()
        .ok_or_else(|| Error::Precondition("the reduced runtime system needs constant A and B".into()))?;
    let (a, b, at) = (a.to_f64(), b.to_f64(), spec.a_tilde.to_f64());
    let d = at.rows();
    let half_at = at.scale(&0.5);
    let diag2 = &half_at - &a;
    let coupling = &(&(&a * &at).scale(&0.5) - &(&at * &at).scale(&0.25)) - &b;
    let k_x = (&b * &at).scale(&-0.5);
    let k_y = b.clone();
    let sys = LinearDelaySystem::new(d, 2)
        .point(0, 0, Coefficient::Constant(-&half_at), Delay::Constant(0.0))
        .point(0, 1, Coefficient::Constant(Matrix::identity(d)), Delay::Constant(0.0))
        .point(1, 1, Coefficient::Constant(diag2), Delay::Constant(0.0))
        .point(1, 0, Coefficient::Constant(coupling), Delay::Constant(0.0));
    if tau == 0.0 {
        return Ok(sys);
    }
    Ok(sys.kernel(1, 0, move |_, _| k_x.clone(), Delay::Constant(tau)).kernel(
        1,
        1,
        move |_, _| k_y.clone(),
        Delay::Constant(tau),
    ))
}

/// `y = x' + At/2 x` for a constant pair of histories.
pub fn reduced_history(at: &Matrix<f64>, phi: &[f64], phi_dot: &[f64]) -> History {
    let mut y = phi_dot.to_vec();
    at.mul_vec_acc(phi, &mut y, 0.5);
    let mut v = phi.to_vec();
    v.extend(y);
    History::constant(v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::NormKind;
    use crate::sim::estimate_decay;

    fn m(rows: Vec<Vec<f64>>) -> Matrix<f64> {
        Matrix::from_rows(rows).unwrap()
    }

    #[test]
    fn critically_damped() {
        let sys = SecondOrderSystem {
            dim: 2,
            a: Coefficient::Constant(Matrix::identity(2).scale(&2.0)),
            b: Coefficient::Constant(Matrix::identity(2)),
            delay: Delay::Constant(0.0),
            forcing: Forcing::Zero,
        };
        let tr =
            simulate_second_order(&sys, History::constant(vec![1.0, 1.0]), History::zero(2), 0.0, 10.0, 1e-3).unwrap();
        for k in (0..tr.len()).step_by(500) {
            let t = tr.t(k);
            let exact = (1.0 + t) * (-t).exp();
            assert!((tr.state(k)[0] - exact).abs() < 1e-6, "t = {t}");
            assert!((tr.state(k)[2] + t * (-t).exp()).abs() < 1e-6);
        }
    }

    #[test]
    fn zero_in_zero_out() {
        let sys = SecondOrderSystem {
            dim: 2,
            a: Coefficient::Constant(m(vec![vec![4.0, 1.0], vec![1.0, 6.0]])),
            b: Coefficient::Constant(m(vec![vec![4.0, 2.0], vec![2.0, 8.0]])),
            delay: Delay::Constant(0.01),
            forcing: Forcing::Zero,
        };
        let tr = simulate_second_order(&sys, History::zero(2), History::zero(2), 0.0, 2.0, 1e-3).unwrap();
        assert!(tr.norms.iter().all(|&n| n == 0.0));
    }

    #[test]
    fn reduced_matches_second_order_with_distinct_shift() {
        let a = m(vec![vec![3.0, 0.5], vec![-0.4, 4.0]]);
        let b = m(vec![vec![1.0, 0.3], vec![0.2, 2.0]]);
        let at = m(vec![vec![3.5, 0.2], vec![0.1, 3.0]]);
        let spec = SecondOrderSpec::constant(a.clone(), b.clone(), Some(at.clone()), 0.05, NormKind::Inf).unwrap();
        let step = 1e-3;
        let so = SecondOrderSystem {
            dim: 2,
            a: Coefficient::Constant(a),
            b: Coefficient::Constant(b),
            delay: Delay::Constant(0.05),
            forcing: Forcing::Zero,
        };
        let phi = [1.0, -0.5];
        let direct =
            simulate_second_order(&so, History::constant(phi.to_vec()), History::zero(2), 0.0, 5.0, step).unwrap();
        let red =
            integrate(&reduced_system(&spec, 0.05).unwrap(), &reduced_history(&at, &phi, &[0.0, 0.0]), 0.0, 5.0, step)
                .unwrap();
        let err = (0..direct.len())
            .map(|k| (0..2).map(|i| (direct.state(k)[i] - red.state(k)[i]).abs()).fold(0.0, f64::max))
            .fold(0.0, f64::max);
        assert!(err < 10.0 * step * step, "err = {err}");
    }

    #[test]
    fn block_system_with_kernel_decays() {
        // x' = -2x + 0.5 int_{t-0.2}^t x
        let sys = LinearDelaySystem::new(1, 1)
            .point(0, 0, Coefficient::Constant(m(vec![vec![-2.0]])), Delay::Constant(0.0))
            .kernel(0, 0, |_, _| m(vec![vec![0.5]]), Delay::Constant(0.2));
        let tr = integrate(&sys, &History::constant(vec![1.0]), 0.0, 20.0, 1e-2).unwrap();
        let est = estimate_decay(&tr, 0.2).unwrap();
        assert!(est.decayed);
        // characteristic root of l = -2 + 0.5 (1 - e^{-0.2 l}) / l near -1.9
        assert!((est.nu_hat - 1.9).abs() < 0.05, "{}", est.nu_hat);
    }

    #[test]
    fn varying_delay_is_clamped() {
        let d = Delay::Varying { tau_bar: 0.1, f: Arc::new(|t: f64| t.sin()) };
        assert_eq!(d.at(-1.0), 0.0);
        assert_eq!(d.at(1.5), 0.1);
        assert_eq!(d.bound(), 0.1);
    }

    #[test]
    fn forcing_catalogue() {
        assert_eq!(Forcing::BoundedSine { amplitude: 2.0 }.eval(0.0, 3), vec![0.0, 2.0, 0.0]);
        assert_eq!(Forcing::DecayingExp { amplitude: 1.0 }.eval(0.0, 2), vec![1.0, 1.0]);
        assert_eq!(Forcing::Zero.eval(5.0, 2), vec![0.0, 0.0]);
    }
}
