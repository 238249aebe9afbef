//! Second-order vector equations `x'' + A(t) x' + B(t) x(h(t)) = 0`.
//!
//! With a constant shift matrix `At`, the substitution `x' = -At/2 x + y`
//! turns the equation into a two-block first-order system
//! ([`reduce_second_order`]) whose two-block M-matrix condition is the
//! ratio-norm test [`Form::Ratio`]. Bounding every ratio by uniform envelope
//! constants gives the simpler [`Form::Bound`]:
//!
//! `||2 A At - At^2 - 4B|| + 2 tau ||B At|| < |mu(-At)| (|alpha| - 2 tau ||B||)`
//!
//! with `mu(At - 2A(t)) <= alpha < 0`. All tests are affine in `tau`, which is
//! what [`TauCriterion`] captures.

use super::block::{Block, BlockSystemSpec};
use super::envelope::{CoefficientEnvelope, ModulatedMatrix, Vertices};
use super::{Certificate, CriterionId, Margin};
use crate::error::{Error, Result};
use crate::linalg::{matrix_measure, norm, Matrix, NormKind, Scalar};

/// Uniform norms entering the bound form.
#[derive(Debug, Clone, PartialEq)]
pub struct CrossNorms<S: Scalar> {
    /// `sup ||2 A At - At^2 - 4B||`
    pub n_main: S,
    /// `sup ||B At||`
    pub n_cross: S,
    /// `sup ||B||`
    pub n_b: S,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SecondOrderSpec<S: Scalar> {
    pub a: CoefficientEnvelope<S>,
    pub b: CoefficientEnvelope<S>,
    pub a_tilde: Matrix<S>,
    /// Upper bound on `mu(At - 2A(t))`.
    pub alpha: S,
    /// Upper bound on `t - h(t)`.
    pub tau: S,
    pub norm: NormKind,
    pub cross: Option<CrossNorms<S>>,
}

fn two<S: Scalar>() -> S {
    S::one() + S::one()
}

fn main_combination<S: Scalar>(at: &Matrix<S>, a: &Matrix<S>, b: &Matrix<S>) -> Matrix<S> {
    let two_a_at = (a * at).scale(&two());
    let four_b = b.scale(&(two::<S>() * two()));
    &(&two_a_at - &(at * at)) - &four_b
}

impl<S: Scalar> SecondOrderSpec<S> {
    /// Constant coefficients; `At` defaults to `A` and `alpha` to `mu(At - 2A)`.
    pub fn constant(a: Matrix<S>, b: Matrix<S>, a_tilde: Option<Matrix<S>>, tau: S, kind: NormKind) -> Result<Self> {
        let at = a_tilde.unwrap_or_else(|| a.clone());
        check_shapes(&a, &b, &at)?;
        let alpha = matrix_measure(&(&at - &a.scale(&two())), kind)?;
        let cross = CrossNorms {
            n_main: norm(&main_combination(&at, &a, &b), kind)?,
            n_cross: norm(&(&b * &at), kind)?,
            n_b: norm(&b, kind)?,
        };
        let spec = Self {
            a: CoefficientEnvelope::Constant(a),
            b: CoefficientEnvelope::Constant(b),
            a_tilde: at,
            alpha,
            tau,
            norm: kind,
            cross: Some(cross),
        };
        spec.check_tau()?;
        Ok(spec)
    }

    /// Coefficients of the form `M0 + sum_k w_k(t, x) M_k`; all suprema are
    /// taken exactly over the weight box, with shared weights kept shared.
    pub fn from_modulated(
        a: &ModulatedMatrix<S>,
        b: &ModulatedMatrix<S>,
        a_tilde: Matrix<S>,
        tau: S,
        kind: NormKind,
    ) -> Result<Self> {
        if a.is_constant() && b.is_constant() {
            return Self::constant(a.base.clone(), b.base.clone(), Some(a_tilde), tau, kind);
        }
        check_shapes(&a.base, &b.base, &a_tilde)?;
        let fams = [a, b];
        let v = Vertices::of(&fams)?;
        let at = &a_tilde;
        let alpha = v.sup(&fams, |m| matrix_measure(&(at - &m[0].scale(&two())), kind))?;
        let n_main = v.sup(&fams, |m| norm(&main_combination(at, &m[0], &m[1]), kind))?;
        let n_cross = v.sup(&fams, |m| norm(&(&m[1] * at), kind))?;
        let n_b = v.sup(&fams, |m| norm(&m[1], kind))?;
        let a_env = CoefficientEnvelope::from_modulated(a, kind)?;
        let b_env = CoefficientEnvelope::bounds(n_b.clone(), b_measure(b, &v, &fams, kind)?)?;
        let spec = Self {
            a: a_env,
            b: b_env,
            a_tilde,
            alpha,
            tau,
            norm: kind,
            cross: Some(CrossNorms { n_main, n_cross, n_b }),
        };
        spec.check_tau()?;
        Ok(spec)
    }

    /// Fully user-supplied envelope constants.
    pub fn with_bounds(
        a: CoefficientEnvelope<S>,
        b: CoefficientEnvelope<S>,
        a_tilde: Matrix<S>,
        alpha: S,
        tau: S,
        kind: NormKind,
        cross: Option<CrossNorms<S>>,
    ) -> Result<Self> {
        a_tilde.require_square()?;
        let d = a_tilde.rows();
        for (name, env) in [("A", &a), ("B", &b)] {
            if let Some(k) = env.dim() {
                if k != d {
                    return Err(Error::Dimension(format!("{name} is {k}x{k}, A_tilde is {d}x{d}")));
                }
            }
        }
        let spec = Self { a, b, a_tilde, alpha, tau, norm: kind, cross };
        spec.check_tau()?;
        if spec.cross.is_none() && (spec.a.as_constant().is_none() || spec.b.as_constant().is_none()) {
            return Err(Error::Spec(
                "cross norms (n_main, n_cross, n_B) are required when A or B is given by bounds".into(),
            ));
        }
        Ok(spec)
    }

    /// Replace the computed `alpha` by a user value, which must not be
    /// smaller than the computed bound.
    pub fn with_alpha(mut self, alpha: S) -> Result<Self> {
        if alpha < self.alpha {
            return Err(Error::Spec(format!(
                "alpha = {} is below sup mu(A_tilde - 2A) = {}",
                alpha.pretty(),
                self.alpha.pretty()
            )));
        }
        self.alpha = alpha;
        Ok(self)
    }

    pub fn with_tau(&self, tau: S) -> Self {
        Self { tau, ..self.clone() }
    }

    pub fn dim(&self) -> usize {
        self.a_tilde.rows()
    }

    pub fn constant_coefficients(&self) -> Option<(&Matrix<S>, &Matrix<S>)> {
        Some((self.a.as_constant()?, self.b.as_constant()?))
    }

    pub fn cross_norms(&self) -> Result<CrossNorms<S>> {
        if let Some(c) = &self.cross {
            return Ok(c.clone());
        }
        let (a, b) = self
            .constant_coefficients()
            .ok_or_else(|| Error::Spec("cross norms missing for bound envelopes".into()))?;
        Ok(CrossNorms {
            n_main: norm(&main_combination(&self.a_tilde, a, b), self.norm)?,
            n_cross: norm(&(b * &self.a_tilde), self.norm)?,
            n_b: norm(b, self.norm)?,
        })
    }

    /// `mu(-At)`, required negative.
    pub fn shift_measure(&self) -> Result<S> {
        let m = matrix_measure(&-&self.a_tilde, self.norm)?;
        if !m.lt_zero() {
            return Err(Error::Precondition(format!("mu(-A_tilde) = {} is not negative", m.pretty())));
        }
        Ok(m)
    }

    fn check_alpha(&self) -> Result<()> {
        if !self.alpha.lt_zero() {
            return Err(Error::Precondition(format!("alpha = {} is not negative", self.alpha.pretty())));
        }
        Ok(())
    }

    fn check_tau(&self) -> Result<()> {
        if self.tau.lt_zero() {
            return Err(Error::Spec(format!("tau = {} must be >= 0", self.tau.pretty())));
        }
        Ok(())
    }
}

fn b_measure<S: Scalar>(
    b: &ModulatedMatrix<S>,
    v: &Vertices,
    fams: &[&ModulatedMatrix<S>],
    kind: NormKind,
) -> Result<Option<S>> {
    if b.is_constant() {
        return matrix_measure(&b.base, kind).map(Some);
    }
    v.sup(fams, |m| matrix_measure(&m[1], kind)).map(Some)
}

fn check_shapes<S: Scalar>(a: &Matrix<S>, b: &Matrix<S>, at: &Matrix<S>) -> Result<()> {
    let d = at.require_square()?;
    for (name, m) in [("A", a), ("B", b)] {
        if m.rows() != d || m.cols() != d {
            return Err(Error::Dimension(format!("{name} is {}x{}, A_tilde is {d}x{d}", m.rows(), m.cols())));
        }
    }
    Ok(())
}

/// An inequality `ls (l0 + l1 tau) < rs (r0 - r1 tau)` with non-negative coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct TauCriterion<S: Scalar> {
    pub id: CriterionId,
    pub label: &'static str,
    pub ls: S,
    pub l0: S,
    pub l1: S,
    pub rs: S,
    pub r0: S,
    pub r1: S,
    pub quantities: Vec<(String, S)>,
}

impl<S: Scalar> TauCriterion<S> {
    pub fn margin(&self, tau: &S) -> Margin<S> {
        let lhs = self.ls.clone() * (self.l0.clone() + self.l1.clone() * tau.clone());
        let rhs = self.rs.clone() * (self.r0.clone() - self.r1.clone() * tau.clone());
        Margin::new(self.label, lhs, rhs)
    }

    pub fn holds(&self, tau: &S) -> bool {
        self.margin(tau).holds()
    }

    /// Supremum of certified delays: `(rs r0 - ls l0) / (ls l1 + rs r1)`,
    /// zero when the test fails at `tau = 0`, `None` when it does not depend on `tau`.
    pub fn closed_form(&self) -> Option<S> {
        let gap = self.rs.clone() * self.r0.clone() - self.ls.clone() * self.l0.clone();
        if !gap.gt_zero() {
            return Some(S::zero());
        }
        let slope = self.ls.clone() * self.l1.clone() + self.rs.clone() * self.r1.clone();
        if slope.is_zero() {
            None
        } else {
            Some(gap / slope)
        }
    }

    pub fn certificate(&self, tau: &S) -> Certificate<S> {
        let mut c = Certificate::from_margins(self.id, vec![self.margin(tau)]);
        c.notes.extend(self.quantities.iter().map(|(k, v)| format!("{k} = {}", v.pretty())));
        c
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Form {
    /// Ratio norms divided by `|mu(At - 2A)|`; constant coefficients only.
    Ratio,
    /// Uniform envelope constants and `alpha`.
    Bound,
}

/// The bound form for the spec's envelope constants.
pub fn bound_criterion<S: Scalar>(spec: &SecondOrderSpec<S>) -> Result<TauCriterion<S>> {
    let mu_shift = spec.shift_measure()?;
    spec.check_alpha()?;
    let c = spec.cross_norms()?;
    let two = two::<S>();
    Ok(TauCriterion {
        id: CriterionId::C40,
        label: "||2*A*At - At^2 - 4B|| + 2*tau*||B*At|| < |mu(-At)|*(|alpha| - 2*tau*||B||)",
        ls: S::one(),
        l0: c.n_main.clone(),
        l1: two.clone() * c.n_cross.clone(),
        rs: mu_shift.abs(),
        r0: spec.alpha.abs(),
        r1: two * c.n_b.clone(),
        quantities: vec![
            ("mu(-A_tilde)".into(), mu_shift),
            ("alpha".into(), spec.alpha.clone()),
            ("||2*A*At - At^2 - 4B||".into(), c.n_main),
            ("||B*At||".into(), c.n_cross),
            ("||B||".into(), c.n_b),
        ],
    })
}

/// The ratio form; needs constant `A` and `B`.
pub fn exact_criterion<S: Scalar>(spec: &SecondOrderSpec<S>) -> Result<TauCriterion<S>> {
    let (a, b) = spec
        .constant_coefficients()
        .ok_or_else(|| Error::Precondition("the ratio form needs constant A and B".into()))?;
    let mu_shift = spec.shift_measure()?;
    let at = &spec.a_tilde;
    let m = matrix_measure(&(at - &a.scale(&two())), spec.norm)?;
    if !m.lt_zero() {
        return Err(Error::Precondition(format!("mu(A_tilde - 2A) = {} is not negative", m.pretty())));
    }
    let den = m.abs();
    let n_main = norm(&main_combination(at, a, b), spec.norm)?;
    let n_cross = norm(&(b * at), spec.norm)?;
    let n_b = norm(b, spec.norm)?;
    let two = two::<S>();
    Ok(TauCriterion {
        id: CriterionId::T41,
        label: "(||N/m|| + 2*tau*||B*At/m||)/|mu(-At)| < 1 - 2*tau*||B/m||, m = mu(At - 2A)",
        ls: S::one() / mu_shift.abs(),
        l0: n_main.clone() / den.clone(),
        l1: two.clone() * n_cross.clone() / den.clone(),
        rs: S::one(),
        r0: S::one(),
        r1: two * n_b.clone() / den,
        quantities: vec![
            ("mu(-A_tilde)".into(), mu_shift),
            ("mu(A_tilde - 2A)".into(), m),
            ("||2*A*At - At^2 - 4B||".into(), n_main),
            ("||B*At||".into(), n_cross),
            ("||B||".into(), n_b),
        ],
    })
}

pub fn certify_second_order<S: Scalar>(spec: &SecondOrderSpec<S>, form: Form) -> Result<Certificate<S>> {
    let crit = match form {
        Form::Ratio => exact_criterion(spec)?,
        Form::Bound => bound_criterion(spec)?,
    };
    Ok(crit.certificate(&spec.tau))
}

/// Both forms when the coefficients are constant; certified if either holds.
pub fn certify_second_order_auto<S: Scalar>(spec: &SecondOrderSpec<S>) -> Result<Certificate<S>> {
    let bound = certify_second_order(spec, Form::Bound)?;
    if spec.constant_coefficients().is_none() {
        return Ok(bound);
    }
    let ratio = certify_second_order(spec, Form::Ratio)?;
    let (mut primary, other) =
        if ratio.is_certified() || !bound.is_certified() { (ratio, bound) } else { (bound, ratio) };
    primary.alternatives.push(other);
    Ok(primary)
}

/// Constant coefficients with `At = A`:
/// `||A^2 - 4B|| + 2 tau ||BA|| < |mu(-A)| (|mu(-A)| - 2 tau ||B||)`.
pub fn const_criterion<S: Scalar>(a: &Matrix<S>, b: &Matrix<S>, kind: NormKind) -> Result<TauCriterion<S>> {
    check_shapes(a, b, a)?;
    let mu = matrix_measure(&-a, kind)?;
    if !mu.lt_zero() {
        return Err(Error::Precondition(format!("mu(-A) = {} is not negative", mu.pretty())));
    }
    let two = two::<S>();
    let four_b = b.scale(&(two.clone() * two.clone()));
    let n_main = norm(&(&(a * a) - &four_b), kind)?;
    let n_cross = norm(&(b * a), kind)?;
    let n_b = norm(b, kind)?;
    Ok(TauCriterion {
        id: CriterionId::C41,
        label: "||A^2 - 4B|| + 2*tau*||BA|| < |mu(-A)|*(|mu(-A)| - 2*tau*||B||)",
        ls: S::one(),
        l0: n_main.clone(),
        l1: two.clone() * n_cross.clone(),
        rs: mu.abs(),
        r0: mu.abs(),
        r1: two * n_b.clone(),
        quantities: vec![
            ("mu(-A)".into(), mu),
            ("||A^2 - 4B||".into(), n_main),
            ("||BA||".into(), n_cross),
            ("||B||".into(), n_b),
        ],
    })
}

pub fn certify_second_order_const<S: Scalar>(
    a: &Matrix<S>,
    b: &Matrix<S>,
    tau: &S,
    kind: NormKind,
) -> Result<Certificate<S>> {
    if tau.lt_zero() {
        return Err(Error::Spec("tau must be >= 0".into()));
    }
    Ok(const_criterion(a, b, kind)?.certificate(tau))
}

/// Non-delayed equation: `||2 At A - At^2 - 4B|| < |alpha| |mu(-At)|`.
pub fn certify_ode<S: Scalar>(spec: &SecondOrderSpec<S>) -> Result<Certificate<S>> {
    let mut crit = bound_criterion(spec)?;
    crit.id = CriterionId::C42;
    crit.label = "||2*A*At - At^2 - 4B|| < |alpha|*|mu(-At)|";
    Ok(crit.certificate(&S::zero()))
}

/// Constant non-delayed equation: `||A^2 - 4B|| < mu(-A)^2`.
pub fn certify_ode_const<S: Scalar>(a: &Matrix<S>, b: &Matrix<S>, kind: NormKind) -> Result<Certificate<S>> {
    let mut crit = const_criterion(a, b, kind)?;
    crit.id = CriterionId::C43;
    crit.label = "||A^2 - 4B|| < mu(-A)^2";
    Ok(crit.certificate(&S::zero()))
}

/// The two-block first-order system for `(x, y)` with `y = x' + At/2 x`:
///
/// ```text
/// x' = -At/2 x + y
/// y' = (At/2 - A) y + (A At/2 - At^2/4 - B) x - B At/2 int_h^t x + B int_h^t y
/// ```
///
/// The distributed terms enter through `||B At/2|| tau` and `||B|| tau`.
/// `A` and `B` multiply `At` from the left, which matters when they do not commute.
pub fn reduce_second_order<S: Scalar>(spec: &SecondOrderSpec<S>) -> Result<BlockSystemSpec<S>> {
    let d = spec.dim();
    let half = S::one() / two::<S>();
    let at = &spec.a_tilde;
    let cross = spec.cross_norms()?;
    let zero = S::zero();

    let first = Block::new(CoefficientEnvelope::Constant(at.scale(&-half.clone())), zero.clone()).coupling(
        1,
        CoefficientEnvelope::Constant(Matrix::identity(d)),
        zero.clone(),
    );

    let (diag, coupling) = match spec.constant_coefficients() {
        Some((a, b)) => {
            let diag = &at.scale(&half) - a;
            let quarter = half.clone() * half.clone();
            let coupling = &(&(a * at).scale(&half) - &(at * at).scale(&quarter)) - b;
            (CoefficientEnvelope::Constant(diag), CoefficientEnvelope::Constant(coupling))
        }
        None => {
            let sup = norm(at, spec.norm)? * half.clone() + spec.a.sup_norm(spec.norm)?;
            let diag = CoefficientEnvelope::bounds(sup, Some(spec.alpha.clone() * half.clone()))?;
            let quarter = half.clone() * half.clone();
            let coupling = CoefficientEnvelope::bounds(cross.n_main.clone() * quarter, None)?;
            (diag, coupling)
        }
    };
    let second = Block::new(diag, zero.clone())
        .coupling(0, coupling, zero)
        .distributed(0, CoefficientEnvelope::bounds(cross.n_cross * half * spec.tau.clone(), None)?, spec.tau.clone())
        .distributed(1, CoefficientEnvelope::bounds(cross.n_b * spec.tau.clone(), None)?, spec.tau.clone());

    BlockSystemSpec::new(d, spec.norm, vec![first, second])
}
