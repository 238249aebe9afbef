use super::envelope::CoefficientEnvelope;
use super::{Certificate, CriterionId, Margin, Verdict};
use crate::error::{Error, Result};
use crate::linalg::{norm, Matrix, NormKind, Scalar};
use crate::mmatrix::m_matrix_check;

/// `B_ij^k(t) x_j(h_ij^k(t))` with `0 <= t - h_ij^k(t) <= delay_bound`.
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingTerm<S: Scalar> {
    pub from: usize,
    pub coeff: CoefficientEnvelope<S>,
    pub delay_bound: S,
}

/// `int_{g(t)}^t K_ij(t,s) x_j(s) ds`, entering only through a bound on
/// `int |K_ij(t,s)| ds`; `span` bounds `t - g(t)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DistributedTerm<S: Scalar> {
    pub from: usize,
    pub bound: CoefficientEnvelope<S>,
    pub span: S,
}

/// Equation `i`: `x_i' = A_i(t) x_i(h_i(t)) + couplings + distributed terms`.
#[derive(Debug, Clone, PartialEq)]
pub struct Block<S: Scalar> {
    pub diag: CoefficientEnvelope<S>,
    pub delay_bound: S,
    pub terms: Vec<CouplingTerm<S>>,
    pub distributed: Vec<DistributedTerm<S>>,
}

impl<S: Scalar> Block<S> {
    pub fn new(diag: CoefficientEnvelope<S>, delay_bound: S) -> Self {
        Self { diag, delay_bound, terms: Vec::new(), distributed: Vec::new() }
    }

    pub fn coupling(mut self, from: usize, coeff: CoefficientEnvelope<S>, delay_bound: S) -> Self {
        self.terms.push(CouplingTerm { from, coeff, delay_bound });
        self
    }

    pub fn distributed(mut self, from: usize, bound: CoefficientEnvelope<S>, span: S) -> Self {
        self.distributed.push(DistributedTerm { from, bound, span });
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BlockSystemSpec<S: Scalar> {
    /// State dimension of every block.
    pub dim: usize,
    pub norm: NormKind,
    pub blocks: Vec<Block<S>>,
}

impl<S: Scalar> BlockSystemSpec<S> {
    pub fn new(dim: usize, norm: NormKind, blocks: Vec<Block<S>>) -> Result<Self> {
        let spec = Self { dim, norm, blocks };
        spec.validate()?;
        Ok(spec)
    }

    pub fn n(&self) -> usize {
        self.blocks.len()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.blocks.len();
        if n == 0 {
            return Err(Error::Spec("a block system needs at least one block".into()));
        }
        let check_env = |env: &CoefficientEnvelope<S>, what: String| -> Result<()> {
            match env.dim() {
                Some(d) if d != self.dim => Err(Error::Dimension(format!("{what} is {d}x{d}, expected {}", self.dim))),
                _ => Ok(()),
            }
        };
        let check_delay = |v: &S, what: String| -> Result<()> {
            if v.lt_zero() {
                Err(Error::Spec(format!("{what} = {v} must be >= 0")))
            } else {
                Ok(())
            }
        };
        for (i, b) in self.blocks.iter().enumerate() {
            let bi = i + 1;
            check_env(&b.diag, format!("A of block {bi}"))?;
            check_delay(&b.delay_bound, format!("tau of block {bi}"))?;
            for t in &b.terms {
                if t.from >= n {
                    return Err(Error::Spec(format!("block {bi}: coupling from block {} of {n}", t.from + 1)));
                }
                check_env(&t.coeff, format!("B_{bi},{}", t.from + 1))?;
                check_delay(&t.delay_bound, format!("tau of B_{bi},{}", t.from + 1))?;
            }
            for t in &b.distributed {
                if t.from >= n {
                    return Err(Error::Spec(format!("block {bi}: distributed term from block {} of {n}", t.from + 1)));
                }
                check_env(&t.bound, format!("K_bound_{bi},{}", t.from + 1))?;
                check_delay(&t.span, format!("sigma of K_{bi},{}", t.from + 1))?;
            }
        }
        Ok(())
    }

    /// Same system with every diagonal delay bound set to `tau`.
    pub fn with_uniform_tau(&self, tau: &S) -> Self {
        let mut s = self.clone();
        for b in &mut s.blocks {
            b.delay_bound = tau.clone();
        }
        s
    }

    fn all_diag_undelayed(&self) -> bool {
        self.blocks.iter().all(|b| b.delay_bound.is_zero())
    }

    fn has_self_or_distributed(&self) -> bool {
        self.blocks.iter().enumerate().any(|(i, b)| !b.distributed.is_empty() || b.terms.iter().any(|t| t.from == i))
    }
}

/// `(|mu(A_i)| or |alpha_i|, ||A_i||)` for block `i`.
fn diag_scales<S: Scalar>(spec: &BlockSystemSpec<S>, i: usize) -> Result<(S, S)> {
    let b = &spec.blocks[i];
    let mu = b
        .diag
        .measure_bound(spec.norm)?
        .ok_or_else(|| Error::Precondition(format!("block {}: no measure bound alpha given for A", i + 1)))?;
    if !mu.lt_zero() {
        return Err(Error::Precondition(format!(
            "block {}: measure of A is bounded by {} which is not negative",
            i + 1,
            mu.pretty()
        )));
    }
    Ok((mu.abs(), b.diag.sup_norm(spec.norm)?))
}

/// Per source block `j`: (sum of coupling norms, sum of distributed norms, sum of ratios).
fn row_sums<S: Scalar>(spec: &BlockSystemSpec<S>, i: usize, divisor: &S) -> Result<Vec<(S, S, S)>> {
    let n = spec.n();
    let mut rows = vec![(S::zero(), S::zero(), S::zero()); n];
    let b = &spec.blocks[i];
    for t in &b.terms {
        let v = t.coeff.sup_norm(spec.norm)?;
        let r = &mut rows[t.from];
        r.0 = r.0.clone() + v.clone();
        r.2 = r.2.clone() + v / divisor.clone();
    }
    for t in &b.distributed {
        let v = t.bound.sup_norm(spec.norm)?;
        let r = &mut rows[t.from];
        r.1 = r.1.clone() + v.clone();
        r.2 = r.2.clone() + v / divisor.clone();
    }
    Ok(rows)
}

/// The comparison matrix `D` of a block system.
///
/// `d_ij = tau_i R_i (delta_ij ||A_i|| + sum_k ||B_ij^k|| + ||C_ij||) + sum_k rho(B_ij^k) + rho(C_ij)`
/// with `R_i = ||A_i|| / |mu(A_i)|` and `rho(M) = ||M|| / |mu(A_i)|`. For bound
/// envelopes `|mu(A_i)|` is replaced by `|alpha_i|`.
pub fn build_d<S: Scalar>(spec: &BlockSystemSpec<S>) -> Result<Matrix<S>> {
    spec.validate()?;
    let n = spec.n();
    let mut d = Matrix::zeros(n, n);
    for i in 0..n {
        let (div, norm_a) = diag_scales(spec, i)?;
        let ratio = norm_a.clone() / div.clone();
        let tau = spec.blocks[i].delay_bound.clone();
        for (j, (b_sum, c_sum, rho)) in row_sums(spec, i, &div)?.into_iter().enumerate() {
            let own = if i == j { norm_a.clone() } else { S::zero() };
            let delayed = tau.clone() * ratio.clone() * (own + b_sum + c_sum);
            d[(i, j)] = delayed + rho;
        }
    }
    Ok(d)
}

/// `D` for non-delayed diagonal terms: `d_ij = sum_k rho(B_ij^k) + rho(C_ij)`.
pub fn nondelayed_d<S: Scalar>(spec: &BlockSystemSpec<S>) -> Result<Matrix<S>> {
    spec.validate()?;
    let n = spec.n();
    let mut d = Matrix::zeros(n, n);
    for i in 0..n {
        let (div, _) = diag_scales(spec, i)?;
        for (j, (_, _, rho)) in row_sums(spec, i, &div)?.into_iter().enumerate() {
            d[(i, j)] = rho;
        }
    }
    Ok(d)
}

/// Certifies uniform exponential stability when `I - D` is a non-singular M-matrix.
pub fn certify_block_system<S: Scalar>(spec: &BlockSystemSpec<S>) -> Result<Certificate<S>> {
    let d = build_d(spec)?;
    let n = spec.n();
    let l = &Matrix::identity(n) - &d;
    let report = m_matrix_check(&l)?;
    let one = S::one();

    let criterion = if n == 2 {
        CriterionId::C34
    } else if spec.all_diag_undelayed() {
        CriterionId::C31
    } else if !spec.has_self_or_distributed() {
        CriterionId::C32
    } else {
        CriterionId::T31
    };

    let margins = if n == 2 {
        let (d11, d12, d21, d22) = (d[(0, 0)].clone(), d[(0, 1)].clone(), d[(1, 0)].clone(), d[(1, 1)].clone());
        vec![
            Margin::new("d11 < 1", d11.clone(), one.clone()),
            Margin::new("d22 < 1", d22.clone(), one.clone()),
            Margin::new("d12*d21 < (1-d11)*(1-d22)", d12 * d21, (one.clone() - d11) * (one - d22)),
        ]
    } else {
        report
            .leading_minors
            .iter()
            .enumerate()
            .map(|(k, m)| Margin::new(format!("0 < leading minor {} of I-D", k + 1), S::zero(), m.clone()))
            .collect()
    };

    let mut cert = Certificate::from_margins(criterion, margins);
    if !report.is_m_matrix {
        cert.verdict = Verdict::NotCertified;
    }
    if n == 2 {
        if let Some(note) = distributed_divisor_note(spec)? {
            cert.notes.push(note);
        }
    }
    cert.d = Some(d);
    cert.mmatrix = Some(report);
    Ok(cert)
}

/// For two blocks, the distributed term of `d21` is divided by `|mu(A_2)|`.
/// When `|mu(A_1)|` differs, report the alternative value of `d21`.
fn distributed_divisor_note<S: Scalar>(spec: &BlockSystemSpec<S>) -> Result<Option<String>> {
    let c21: Vec<_> = spec.blocks[1].distributed.iter().filter(|t| t.from == 0).collect();
    if c21.is_empty() {
        return Ok(None);
    }
    let (div1, _) = diag_scales(spec, 0)?;
    let (div2, _) = diag_scales(spec, 1)?;
    if div1 == div2 {
        return Ok(None);
    }
    let mut c_norm = S::zero();
    for t in c21 {
        c_norm = c_norm + t.bound.sup_norm(spec.norm)?;
    }
    if c_norm.is_zero() {
        return Ok(None);
    }
    let used = c_norm.clone() / div2;
    let alt = c_norm / div1;
    Ok(Some(format!(
        "d21 divides ||C21|| by |mu(A2)| (term {}); dividing by |mu(A1)| would give {}",
        used.pretty(),
        alt.pretty()
    )))
}

/// Inputs of the two-block, two-delay test. The matrices are entrywise
/// upper bounds of the absolute coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoDelayPair<S: Scalar> {
    pub a1: Matrix<S>,
    pub a2: Matrix<S>,
    pub b12: Matrix<S>,
    pub b21: Matrix<S>,
    pub tau1: S,
    pub tau2: S,
    pub alpha1: S,
    pub alpha2: S,
}

/// `tau_i ||A_i||^2 < |alpha_i|` and
/// `||B12|| ||B21|| (1 + tau1 ||A1||)(1 + tau2 ||A2||) < (|alpha1| - tau1 ||A1||^2)(|alpha2| - tau2 ||A2||^2)`.
pub fn certify_two_delay_pair<S: Scalar>(p: &TwoDelayPair<S>, kind: NormKind) -> Result<Certificate<S>> {
    for (name, a) in [("alpha1", &p.alpha1), ("alpha2", &p.alpha2)] {
        if !a.lt_zero() {
            return Err(Error::Precondition(format!("{name} = {} must be negative", a.pretty())));
        }
    }
    for (name, t) in [("tau1", &p.tau1), ("tau2", &p.tau2)] {
        if t.lt_zero() {
            return Err(Error::Precondition(format!("{name} must be >= 0")));
        }
    }
    for (name, m) in [("A1", &p.a1), ("A2", &p.a2), ("B12", &p.b12), ("B21", &p.b21)] {
        if m.data().iter().any(|x| x.lt_zero()) {
            return Err(Error::Precondition(format!("envelope {name} must be entrywise non-negative")));
        }
    }
    let (na1, na2) = (norm(&p.a1, kind)?, norm(&p.a2, kind)?);
    let (nb12, nb21) = (norm(&p.b12, kind)?, norm(&p.b21, kind)?);
    let (al1, al2) = (p.alpha1.abs(), p.alpha2.abs());
    let one = S::one();
    let s1 = p.tau1.clone() * na1.clone() * na1.clone();
    let s2 = p.tau2.clone() * na2.clone() * na2.clone();
    let coupled_lhs = nb12 * nb21 * (one.clone() + p.tau1.clone() * na1) * (one + p.tau2.clone() * na2);
    let coupled_rhs = (al1.clone() - s1.clone()) * (al2.clone() - s2.clone());
    let margins = vec![
        Margin::new("tau1*||A1||^2 < |alpha1|", s1, al1),
        Margin::new("tau2*||A2||^2 < |alpha2|", s2, al2),
        Margin::new(
            "||B12||*||B21||*(1+tau1*||A1||)*(1+tau2*||A2||) < (|alpha1|-tau1*||A1||^2)*(|alpha2|-tau2*||A2||^2)",
            coupled_lhs,
            coupled_rhs,
        ),
    ];
    Ok(Certificate::from_margins(CriterionId::C35, margins))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{q, qi, Q};

    fn scalar(x: Q) -> Matrix<Q> {
        Matrix::new(1, 1, vec![x]).unwrap()
    }

    fn env(x: Q) -> CoefficientEnvelope<Q> {
        CoefficientEnvelope::Constant(scalar(x))
    }

    #[test]
    fn single_block_reduces_to_ratio() {
        let spec = BlockSystemSpec::new(
            1,
            NormKind::Inf,
            vec![Block::new(env(qi(-4)), qi(0)).coupling(0, env(qi(3)), q(1, 2))],
        )
        .unwrap();
        assert_eq!(build_d(&spec).unwrap(), scalar(q(3, 4)));
        let cert = certify_block_system(&spec).unwrap();
        assert!(cert.is_certified());
        assert_eq!(cert.criterion, CriterionId::C31);
    }

    #[test]
    fn only_diagonal_terms() {
        // D = diag(tau_i ||A_i||^2 / |alpha_i|)
        let a = Matrix::from_rows(vec![vec![qi(-3), qi(1)], vec![qi(0), qi(-5)]]).unwrap();
        let spec = BlockSystemSpec::new(
            2,
            NormKind::Inf,
            vec![
                Block::new(CoefficientEnvelope::Constant(a.clone()), q(1, 10)),
                Block::new(CoefficientEnvelope::bounds(qi(6), Some(qi(-2))).unwrap(), q(1, 20)),
            ],
        )
        .unwrap();
        let d = build_d(&spec).unwrap();
        // block 1: ||A||=5, mu=-2 -> 0.1*25/2; block 2: 0.05*36/2
        let expected = Matrix::diag(&[q(5, 4), q(9, 10)]);
        assert_eq!(d, expected);
        assert!(!certify_block_system(&spec).unwrap().is_certified());
    }

    #[test]
    fn zero_diagonal_pair() {
        let cert = |d12: Q, d21: Q| {
            let spec = BlockSystemSpec::new(
                1,
                NormKind::Inf,
                vec![
                    Block::new(env(qi(-1)), qi(0)).coupling(1, env(d12), qi(1)),
                    Block::new(env(qi(-1)), qi(0)).coupling(0, env(d21), qi(0)),
                ],
            )
            .unwrap();
            certify_block_system(&spec).unwrap()
        };
        let c = cert(q(1, 2), qi(1));
        assert!(c.is_certified());
        assert_eq!(c.criterion, CriterionId::C34);
        assert_eq!(c.margins[2].lhs, q(1, 2));
        assert!(!cert(qi(2), q(1, 2)).is_certified());
        assert!(!cert(qi(3), qi(1)).is_certified());
    }

    #[test]
    fn nonnegative_measure_is_rejected() {
        let spec = BlockSystemSpec::new(1, NormKind::Inf, vec![Block::new(env(qi(0)), qi(0))]).unwrap();
        let err = build_d(&spec).unwrap_err();
        assert!(err.to_string().contains("block 1"));
        let bounds_no_alpha = BlockSystemSpec::new(
            1,
            NormKind::Inf,
            vec![Block::new(CoefficientEnvelope::bounds(qi(1), None).unwrap(), qi(0))],
        )
        .unwrap();
        assert!(matches!(build_d(&bounds_no_alpha), Err(Error::Precondition(_))));
    }

    #[test]
    fn validation_errors() {
        assert!(BlockSystemSpec::<Q>::new(1, NormKind::Inf, vec![]).is_err());
        assert!(BlockSystemSpec::new(1, NormKind::Inf, vec![Block::new(env(qi(-1)), qi(-1))]).is_err());
        assert!(BlockSystemSpec::new(
            1,
            NormKind::Inf,
            vec![Block::new(env(qi(-1)), qi(0)).coupling(3, env(qi(1)), qi(0))]
        )
        .is_err());
        assert!(BlockSystemSpec::new(2, NormKind::Inf, vec![Block::new(env(qi(-1)), qi(0))]).is_err());
    }

    #[test]
    fn two_delay_pair_cases() {
        let m = |x: i64| scalar(qi(x));
        let base = TwoDelayPair {
            a1: m(2),
            a2: m(1),
            b12: m(0),
            b21: m(0),
            tau1: q(1, 10),
            tau2: q(1, 10),
            alpha1: qi(-1),
            alpha2: qi(-1),
        };
        // decoupled: 0.4 < 1 and 0.1 < 1
        assert!(certify_two_delay_pair(&base, NormKind::Inf).unwrap().is_certified());
        // tau = 0 reduces to ||B12|| ||B21|| < |alpha1| |alpha2|
        let mut p = base.clone();
        p.tau1 = qi(0);
        p.tau2 = qi(0);
        p.b12 = m(1);
        p.b21 = scalar(q(99, 100));
        assert!(certify_two_delay_pair(&p, NormKind::Inf).unwrap().is_certified());
        p.b21 = m(1);
        let c = certify_two_delay_pair(&p, NormKind::Inf).unwrap();
        assert!(!c.is_certified(), "equality is not certified");
        assert_eq!(c.margins[2].lhs, c.margins[2].rhs);
        let mut bad = base.clone();
        bad.alpha2 = qi(0);
        assert!(certify_two_delay_pair(&bad, NormKind::Inf).is_err());
    }

    #[test]
    fn two_delay_pair_is_implied_by_block_test() {
        // The pair test bounds the d_ij of the block test from above, so it
        // can only certify when the block test does.
        let a1 = Matrix::from_rows(vec![vec![qi(-3), qi(1)], vec![qi(0), qi(-4)]]).unwrap();
        let a2 = Matrix::from_rows(vec![vec![qi(-5), qi(0)], vec![qi(1), qi(-2)]]).unwrap();
        let b12 = Matrix::from_rows(vec![vec![q(1, 2), qi(0)], vec![qi(0), q(1, 3)]]).unwrap();
        let b21 = Matrix::from_rows(vec![vec![q(1, 4), q(1, 4)], vec![qi(0), q(1, 5)]]).unwrap();
        for tau in [qi(0), q(1, 100), q(1, 30), q(1, 10)] {
            let spec = BlockSystemSpec::new(
                2,
                NormKind::Inf,
                vec![
                    Block::new(CoefficientEnvelope::Constant(a1.clone()), tau.clone()).coupling(
                        1,
                        CoefficientEnvelope::Constant(b12.clone()),
                        qi(1),
                    ),
                    Block::new(CoefficientEnvelope::Constant(a2.clone()), tau.clone()).coupling(
                        0,
                        CoefficientEnvelope::Constant(b21.clone()),
                        qi(1),
                    ),
                ],
            )
            .unwrap();
            let pair = TwoDelayPair {
                a1: a1.abs(),
                a2: a2.abs(),
                b12: b12.clone(),
                b21: b21.clone(),
                tau1: tau.clone(),
                tau2: tau.clone(),
                alpha1: crate::linalg::matrix_measure(&a1, NormKind::Inf).unwrap(),
                alpha2: crate::linalg::matrix_measure(&a2, NormKind::Inf).unwrap(),
            };
            let p = certify_two_delay_pair(&pair, NormKind::Inf).unwrap();
            let b = certify_block_system(&spec).unwrap();
            if p.is_certified() {
                assert!(b.is_certified(), "tau = {tau}");
            }
        }
    }
}
