//! Coefficient envelopes.
//!
//! A time-varying coefficient never enters a criterion through samples. It is
//! either a constant matrix, a pair of user-supplied bounds, or a
//! [`ModulatedMatrix`] `M(t) = M0 + sum_k w_k(t) M_k` whose weights are
//! `sin^2` / `cos^2` waves with values in `[0, 1]`. For the last form every
//! norm or measure of an expression affine in the weights is a convex function
//! of the weight vector, so its supremum over `[0, 1]^K` is attained at a
//! vertex and [`Vertices`] computes it exactly.

use std::fmt;

use crate::error::{Error, Result};
use crate::linalg::{matrix_measure, norm, Matrix, NormKind, Scalar, ScalarBound};

/// Largest number of distinct weights enumerated (2^16 vertices).
pub const MAX_MODULATORS: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Wave {
    Sin2,
    Cos2,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum WaveArg {
    /// `t`
    Time,
    /// `t * x_k` with a 0-based state component `k`.
    TimeTimesState(usize),
}

/// A weight `sin^2(arg)` or `cos^2(arg)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Modulator {
    pub wave: Wave,
    pub arg: WaveArg,
}

impl Modulator {
    pub fn new(wave: Wave, arg: WaveArg) -> Self {
        Self { wave, arg }
    }

    pub fn eval(&self, t: f64, x: &[f64]) -> f64 {
        let arg = match self.arg {
            WaveArg::Time => t,
            WaveArg::TimeTimesState(k) => t * x.get(k).copied().unwrap_or(0.0),
        };
        match self.wave {
            Wave::Sin2 => arg.sin().powi(2),
            Wave::Cos2 => arg.cos().powi(2),
        }
    }

    pub fn is_state_dependent(&self) -> bool {
        matches!(self.arg, WaveArg::TimeTimesState(_))
    }

    /// Parses `sin2(t)`, `cos2(t)`, `sin2(t*x1)`, `cos2(t*x2)`, ... (1-based `x`).
    pub fn parse(text: &str) -> Option<Self> {
        let s: String = text.chars().filter(|c| !c.is_whitespace()).collect();
        let (wave, rest) = if let Some(r) = s.strip_prefix("sin2(") {
            (Wave::Sin2, r)
        } else {
            (Wave::Cos2, s.strip_prefix("cos2(")?)
        };
        let inner = rest.strip_suffix(')')?;
        let arg = if inner == "t" {
            WaveArg::Time
        } else {
            let k: usize = inner.strip_prefix("t*x")?.parse().ok()?;
            if k == 0 {
                return None;
            }
            WaveArg::TimeTimesState(k - 1)
        };
        Some(Self { wave, arg })
    }
}

impl fmt::Display for Modulator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let w = match self.wave {
            Wave::Sin2 => "sin2",
            Wave::Cos2 => "cos2",
        };
        match self.arg {
            WaveArg::Time => write!(f, "{w}(t)"),
            WaveArg::TimeTimesState(k) => write!(f, "{w}(t*x{})", k + 1),
        }
    }
}

/// `M(t, x) = base + sum_k w_k(t, x) * M_k`, each weight ranging over `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ModulatedMatrix<S: Scalar> {
    pub base: Matrix<S>,
    pub terms: Vec<(Modulator, Matrix<S>)>,
}

impl<S: Scalar> ModulatedMatrix<S> {
    pub fn constant(base: Matrix<S>) -> Self {
        Self { base, terms: Vec::new() }
    }

    pub fn new(base: Matrix<S>, terms: Vec<(Modulator, Matrix<S>)>) -> Result<Self> {
        base.require_square()?;
        for (m, t) in &terms {
            if !t.same_shape(&base) {
                return Err(Error::Dimension(format!("term for {m} does not match the base shape")));
            }
        }
        Ok(Self { base, terms })
    }

    pub fn dim(&self) -> usize {
        self.base.rows()
    }

    pub fn is_constant(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_state_dependent(&self) -> bool {
        self.terms.iter().any(|(m, _)| m.is_state_dependent())
    }

    pub fn modulators(&self) -> impl Iterator<Item = Modulator> + '_ {
        self.terms.iter().map(|(m, _)| *m)
    }

    /// The matrix with each weight replaced by `weight(modulator)`.
    pub fn at(&self, weight: impl Fn(&Modulator) -> S) -> Matrix<S> {
        self.terms.iter().fold(self.base.clone(), |acc, (m, mat)| &acc + &mat.scale(&weight(m)))
    }

    /// Numerical value at time `t` and state `x`.
    pub fn eval(&self, t: f64, x: &[f64]) -> Matrix<f64> {
        let mut out = self.base.to_f64();
        for (m, mat) in &self.terms {
            let w = m.eval(t, x);
            let mf = mat.to_f64();
            out = &out + &mf.scale(&w);
        }
        out
    }
}

/// Vertex enumeration over the weights shared by several modulated matrices.
///
/// A modulator appearing in more than one matrix is one parameter, so
/// cancellations between matrices driven by the same wave are kept.
pub struct Vertices {
    mods: Vec<Modulator>,
}

impl Vertices {
    pub fn of<S: Scalar>(families: &[&ModulatedMatrix<S>]) -> Result<Self> {
        let mut mods: Vec<Modulator> = families.iter().flat_map(|f| f.modulators()).collect();
        mods.sort();
        mods.dedup();
        if mods.len() > MAX_MODULATORS {
            return Err(Error::TooLarge { dim: mods.len(), max: MAX_MODULATORS });
        }
        Ok(Self { mods })
    }

    pub fn count(&self) -> usize {
        1 << self.mods.len()
    }

    /// Supremum of `f` over all vertices; `f` receives each family evaluated at the vertex.
    pub fn sup<S: Scalar>(&self, families: &[&ModulatedMatrix<S>], f: impl Fn(&[Matrix<S>]) -> Result<S>) -> Result<S> {
        let mut best: Option<S> = None;
        for mask in 0..self.count() {
            let weight = |m: &Modulator| {
                let idx = self.mods.iter().position(|x| x == m).expect("enumerated modulator");
                if mask >> idx & 1 == 1 {
                    S::one()
                } else {
                    S::zero()
                }
            };
            let mats: Vec<Matrix<S>> = families.iter().map(|fam| fam.at(weight)).collect();
            let v = f(&mats)?;
            best = Some(match best {
                Some(b) => S::max_of(b, v),
                None => v,
            });
        }
        Ok(best.expect("at least one vertex"))
    }
}

/// How a coefficient enters a criterion.
#[derive(Debug, Clone, PartialEq)]
pub enum CoefficientEnvelope<S: Scalar> {
    Constant(Matrix<S>),
    Bounds { sup_norm: ScalarBound<S>, measure_upper: Option<ScalarBound<S>> },
}

impl<S: Scalar> CoefficientEnvelope<S> {
    pub fn bounds(sup_norm: S, measure_upper: Option<S>) -> Result<Self> {
        Ok(Self::Bounds {
            sup_norm: ScalarBound::sup_norm(sup_norm)?,
            measure_upper: measure_upper.map(ScalarBound::measure_upper).transpose()?,
        })
    }

    /// Exact bounds of a modulated family: sup of the norm and of the measure.
    pub fn from_modulated(m: &ModulatedMatrix<S>, kind: NormKind) -> Result<Self> {
        if m.is_constant() {
            return Ok(Self::Constant(m.base.clone()));
        }
        let v = Vertices::of(&[m])?;
        let sup = v.sup(&[m], |x| norm(&x[0], kind))?;
        let mu = v.sup(&[m], |x| matrix_measure(&x[0], kind))?;
        Self::bounds(sup, Some(mu))
    }

    pub fn sup_norm(&self, kind: NormKind) -> Result<S> {
        match self {
            Self::Constant(m) => norm(m, kind),
            Self::Bounds { sup_norm, .. } => Ok(sup_norm.value().clone()),
        }
    }

    /// Upper bound on the matrix measure, when one is known.
    pub fn measure_bound(&self, kind: NormKind) -> Result<Option<S>> {
        match self {
            Self::Constant(m) => matrix_measure(m, kind).map(Some),
            Self::Bounds { measure_upper, .. } => Ok(measure_upper.as_ref().map(|b| b.value().clone())),
        }
    }

    pub fn as_constant(&self) -> Option<&Matrix<S>> {
        match self {
            Self::Constant(m) => Some(m),
            Self::Bounds { .. } => None,
        }
    }

    /// Same envelope with the sup norm multiplied by `factor` (constants become bounds).
    pub fn inflated(&self, factor: &S, kind: NormKind) -> Result<Self> {
        let sup = self.sup_norm(kind)? * factor.clone();
        Self::bounds(sup, self.measure_bound(kind)?)
    }

    pub fn dim(&self) -> Option<usize> {
        self.as_constant().map(Matrix::rows)
    }
}
