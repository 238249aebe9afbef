//! Stability criteria for block delay systems and second-order equations.
//!
//! Every test is a set of strict inequalities. A [`Certificate`] carries each
//! inequality as a [`Margin`] (`lhs < rhs`) together with the intermediate
//! objects (the comparison matrix `D`, the M-matrix report) that decided it.
//! Equality is never certified.

mod block;
mod compare;
mod envelope;
mod second_order;
mod sweep;

use std::fmt;

pub use block::{
    build_d, certify_block_system, certify_two_delay_pair, nondelayed_d, Block, BlockSystemSpec, CouplingTerm,
    DistributedTerm, TwoDelayPair,
};
pub use compare::{compare_criteria, tunc_threshold, Comparison, Winner};
pub use envelope::{CoefficientEnvelope, ModulatedMatrix, Modulator, Vertices, Wave, WaveArg, MAX_MODULATORS};
pub use second_order::{
    bound_criterion, certify_ode, certify_ode_const, certify_second_order, certify_second_order_auto,
    certify_second_order_const, const_criterion, exact_criterion, reduce_second_order, CrossNorms, Form,
    SecondOrderSpec, TauCriterion,
};
pub use sweep::{sweep_max_tau, SweepResult, BISECTION_TOL, CLOSED_FORM_TOL};

use crate::linalg::{Matrix, Scalar};
use crate::mmatrix::MMatrixReport;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Certified,
    NotCertified,
}

/// Which test produced a certificate.
///
/// `T31`/`C31`/`C32`/`C34`: M-matrix test on the block comparison matrix
/// (general, non-delayed diagonal, no distributed terms, two blocks).
/// `C35`: two-block, two-delay inequality pair. `T41`: second-order test with
/// ratio norms. `C40`: second-order test with uniform bounds. `C41`: constant
/// coefficients. `C42`/`C43`: second-order ODE versions. `P51`: the
/// Lyapunov-functional threshold used for comparison.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CriterionId {
    T31,
    C31,
    C32,
    C34,
    C35,
    T41,
    C40,
    C41,
    C42,
    C43,
    P51,
}

impl CriterionId {
    pub fn code(self) -> &'static str {
        match self {
            Self::T31 => "T31",
            Self::C31 => "C31",
            Self::C32 => "C32",
            Self::C34 => "C34",
            Self::C35 => "C35",
            Self::T41 => "T41",
            Self::C40 => "C40",
            Self::C41 => "C41",
            Self::C42 => "C42",
            Self::C43 => "C43",
            Self::P51 => "P51",
        }
    }

    pub fn description(self) -> &'static str {
        match self {
            Self::T31 => "M-matrix test on the block comparison matrix",
            Self::C31 => "M-matrix test, non-delayed diagonal terms",
            Self::C32 => "M-matrix test, no distributed terms",
            Self::C34 => "two-block M-matrix test",
            Self::C35 => "two-block test with two delays",
            Self::T41 => "second-order test with ratio norms",
            Self::C40 => "second-order test with uniform envelope bounds",
            Self::C41 => "second-order test, constant coefficients",
            Self::C42 => "second-order ODE test",
            Self::C43 => "second-order ODE test, constant coefficients",
            Self::P51 => "Lyapunov-functional delay threshold",
        }
    }
}

impl fmt::Display for CriterionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

/// One strict inequality `lhs < rhs`.
#[derive(Debug, Clone, PartialEq)]
pub struct Margin<S: Scalar> {
    pub label: String,
    pub lhs: S,
    pub rhs: S,
}

impl<S: Scalar> Margin<S> {
    pub fn new(label: impl Into<String>, lhs: S, rhs: S) -> Self {
        Self { label: label.into(), lhs, rhs }
    }

    pub fn holds(&self) -> bool {
        self.lhs < self.rhs
    }

    /// `rhs - lhs`; positive when the inequality holds.
    pub fn slack(&self) -> S {
        self.rhs.clone() - self.lhs.clone()
    }
}

impl<S: Scalar> fmt::Display for Margin<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let op = if self.holds() { "<" } else { ">=" };
        write!(f, "{}: {} {op} {}", self.label, self.lhs.pretty(), self.rhs.pretty())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Certificate<S: Scalar> {
    pub verdict: Verdict,
    pub criterion: CriterionId,
    pub d: Option<Matrix<S>>,
    pub mmatrix: Option<MMatrixReport<S>>,
    pub margins: Vec<Margin<S>>,
    pub notes: Vec<String>,
    /// Other tests evaluated on the same input.
    pub alternatives: Vec<Certificate<S>>,
}

impl<S: Scalar> Certificate<S> {
    /// Certificate decided by its margins alone.
    pub fn from_margins(criterion: CriterionId, margins: Vec<Margin<S>>) -> Self {
        let verdict = if !margins.is_empty() && margins.iter().all(Margin::holds) {
            Verdict::Certified
        } else {
            Verdict::NotCertified
        };
        Self { verdict, criterion, d: None, mmatrix: None, margins, notes: Vec::new(), alternatives: Vec::new() }
    }

    pub fn is_certified(&self) -> bool {
        self.verdict == Verdict::Certified
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.notes.push(note.into());
        self
    }
}
