//! The JSON spec-file format.
//!
//! Parsing is strict: unknown fields are errors, and every error names the
//! offending field path. Numbers are read exactly as rationals and may also be
//! given as strings such as `"1/96"`.
//!
//! A coefficient is one of
//!
//! * a nested array, a constant matrix;
//! * `{"sup_norm": s, "alpha": a}`, bounds (alpha optional except on diagonals);
//! * `{"constant": M0, "varying": [{"modulator": "sin2(t)", "matrix": M1}, ...]}`,
//!   `M0 + sum_k w_k M_k` with `w_k` one of `sin2(t)`, `cos2(t)`, `sin2(t*xK)`, `cos2(t*xK)`.

use std::sync::Arc;

use serde::de::Error as _;
use serde::{Deserialize, Deserializer};

use crate::criteria::{
    Block, BlockSystemSpec, CoefficientEnvelope, CrossNorms, ModulatedMatrix, Modulator, SecondOrderSpec, TwoDelayPair,
};
use crate::error::{Error, Result};
use crate::linalg::{matrix_measure, parse_rational, Matrix, NormKind, Scalar, Q};
use crate::sim::{Coefficient, Delay, Forcing, History, LinearDelaySystem, SecondOrderSystem};

pub const SPEC_VERSION: u32 = 1;

/// An exact number read from a JSON number or a string.
#[derive(Debug, Clone, PartialEq)]
pub struct Num(pub Q);

impl Num {
    pub fn f64(&self) -> f64 {
        self.0.to_f64_lossy()
    }
}

impl<'de> Deserialize<'de> for Num {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let v = serde_json::Value::deserialize(d)?;
        let text = match &v {
            serde_json::Value::Number(n) => n.to_string(),
            serde_json::Value::String(s) => s.clone(),
            other => return Err(D::Error::custom(format!("expected a number, got {other}"))),
        };
        parse_rational(&text).map(Num).ok_or_else(|| D::Error::custom(format!("not a number: {text:?}")))
    }
}

/// A non-empty rectangular matrix of exact numbers.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixSpec(pub Matrix<Q>);

impl<'de> Deserialize<'de> for MatrixSpec {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let rows: Vec<Vec<Num>> = Vec::deserialize(d)?;
        if rows.is_empty() || rows[0].is_empty() {
            return Err(D::Error::custom("matrix must have at least one row and one column"));
        }
        let cols = rows[0].len();
        if let Some((i, r)) = rows.iter().enumerate().find(|(_, r)| r.len() != cols) {
            return Err(D::Error::custom(format!("row {} has {} entries, row 1 has {cols}", i + 1, r.len())));
        }
        let rows: Vec<Vec<Q>> = rows.into_iter().map(|r| r.into_iter().map(|n| n.0).collect()).collect();
        Matrix::from_rows(rows).map(MatrixSpec).map_err(D::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VaryingTerm {
    pub modulator: String,
    pub matrix: MatrixSpec,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundsSpec {
    pub sup_norm: Num,
    #[serde(default)]
    pub alpha: Option<Num>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModulatedSpec {
    pub constant: MatrixSpec,
    pub varying: Vec<VaryingTerm>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum EnvelopeSpec {
    Constant(MatrixSpec),
    Bounds(BoundsSpec),
    Modulated(ModulatedSpec),
}

impl<'de> Deserialize<'de> for EnvelopeSpec {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let v = serde_json::Value::deserialize(d)?;
        let fail = |e: serde_json::Error| D::Error::custom(e.to_string());
        match &v {
            serde_json::Value::Array(_) => MatrixSpec::deserialize(v).map(Self::Constant).map_err(fail),
            serde_json::Value::Object(map) if map.contains_key("sup_norm") => {
                BoundsSpec::deserialize(v).map(Self::Bounds).map_err(fail)
            }
            serde_json::Value::Object(map) if map.contains_key("constant") => {
                ModulatedSpec::deserialize(v).map(Self::Modulated).map_err(fail)
            }
            _ => Err(D::Error::custom("expected a matrix, {\"sup_norm\", \"alpha\"} or {\"constant\", \"varying\"}")),
        }
    }
}

impl EnvelopeSpec {
    /// `None` for bounds.
    pub fn modulated(&self, what: &str) -> Result<Option<ModulatedMatrix<Q>>> {
        match self {
            Self::Constant(m) => Ok(Some(ModulatedMatrix::constant(m.0.clone()))),
            Self::Bounds(_) => Ok(None),
            Self::Modulated(m) => {
                let mut terms = Vec::with_capacity(m.varying.len());
                for (k, t) in m.varying.iter().enumerate() {
                    let w = Modulator::parse(&t.modulator).ok_or_else(|| {
                        Error::Spec(format!("{what}.varying[{k}].modulator: unknown modulator {:?}", t.modulator))
                    })?;
                    terms.push((w, t.matrix.0.clone()));
                }
                ModulatedMatrix::new(m.constant.0.clone(), terms)
                    .map(Some)
                    .map_err(|e| Error::Spec(format!("{what}: {e}")))
            }
        }
    }

    pub fn envelope(&self, what: &str, kind: NormKind) -> Result<CoefficientEnvelope<Q>> {
        match self {
            Self::Bounds(b) => CoefficientEnvelope::bounds(b.sup_norm.0.clone(), b.alpha.as_ref().map(|a| a.0.clone()))
                .map_err(|e| Error::Spec(format!("{what}: {e}"))),
            _ => {
                let m = self.modulated(what)?.expect("not bounds");
                CoefficientEnvelope::from_modulated(&m, kind)
            }
        }
    }

    pub fn coefficient(&self, what: &str) -> Result<Coefficient> {
        match self.modulated(what)? {
            Some(m) => Ok(Coefficient::from_modulated(&m)),
            None => Err(Error::Spec(format!("{what}: a bounds-only coefficient cannot be simulated"))),
        }
    }

    fn constant(&self) -> Option<&Matrix<Q>> {
        match self {
            Self::Constant(m) => Some(&m.0),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpecKind {
    BlockSystem,
    SecondOrder,
    SecondOrderNonlinearEnvelope,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CouplingSpec {
    /// 1-based source block.
    pub from: usize,
    pub value: EnvelopeSpec,
    #[serde(default)]
    pub tau: Option<Num>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelSpec {
    pub from: usize,
    /// Bound on `int |K(t, s)| ds`.
    pub value: EnvelopeSpec,
    pub sigma: Num,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BlockSpec {
    #[serde(rename = "A")]
    pub a: EnvelopeSpec,
    #[serde(default)]
    pub tau: Option<Num>,
    #[serde(rename = "B", default)]
    pub b: Vec<CouplingSpec>,
    #[serde(rename = "K_bound", default)]
    pub k_bound: Vec<KernelSpec>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CrossNormsSpec {
    pub n_main: Num,
    pub n_cross: Num,
    #[serde(rename = "n_B")]
    pub n_b: Num,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ForcingKind {
    Zero,
    BoundedSine,
    DecayingExp,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ForcingSpec {
    pub kind: ForcingKind,
    #[serde(default)]
    pub amplitude: Option<Num>,
}

impl ForcingSpec {
    pub fn forcing(&self) -> Forcing {
        let amplitude = self.amplitude.as_ref().map_or(1.0, Num::f64);
        match self.kind {
            ForcingKind::Zero => Forcing::Zero,
            ForcingKind::BoundedSine => Forcing::BoundedSine { amplitude },
            ForcingKind::DecayingExp => Forcing::DecayingExp { amplitude },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DelayProfile {
    /// `tau(t) = tau`
    #[default]
    Constant,
    /// `tau(t) = tau * sin^2(t)`
    Sin2,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationSpec {
    /// Length of the simulated interval.
    pub horizon: Num,
    pub step: Num,
    /// Constant initial function.
    pub history: Vec<Num>,
    /// Constant initial derivative (second-order kinds); zero by default.
    #[serde(default)]
    pub history_dot: Option<Vec<Num>>,
    #[serde(default)]
    pub t0: Option<Num>,
    #[serde(default)]
    pub delay_profile: DelayProfile,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpecFile {
    pub version: u32,
    pub kind: SpecKind,
    #[serde(default)]
    pub norm: NormKind,
    #[serde(default)]
    pub blocks: Option<Vec<BlockSpec>>,
    #[serde(rename = "A", default)]
    pub a: Option<EnvelopeSpec>,
    #[serde(rename = "B", default)]
    pub b: Option<EnvelopeSpec>,
    #[serde(rename = "A_tilde", default)]
    pub a_tilde: Option<MatrixSpec>,
    #[serde(default)]
    pub alpha: Option<Num>,
    #[serde(default)]
    pub tau: Option<Num>,
    #[serde(default)]
    pub cross_norms: Option<CrossNormsSpec>,
    #[serde(default)]
    pub a1: Option<Num>,
    #[serde(default)]
    pub a0: Option<Num>,
    #[serde(default)]
    pub forcing: Option<ForcingSpec>,
    #[serde(default)]
    pub simulation: Option<SimulationSpec>,
}

fn nonneg(n: &Option<Num>, what: &str) -> Result<Q> {
    let v = n.as_ref().map_or_else(|| Q::from_integer(0.into()), |n| n.0.clone());
    if v.lt_zero() {
        return Err(Error::Spec(format!("{what}: must be >= 0, got {}", v.pretty())));
    }
    Ok(v)
}

impl SpecFile {
    pub fn parse(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let spec: SpecFile = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            if path == "." {
                Error::Spec(e.inner().to_string())
            } else {
                Error::Spec(format!("{path}: {}", e.inner()))
            }
        })?;
        spec.validate()?;
        Ok(spec)
    }

    fn validate(&self) -> Result<()> {
        if self.version != SPEC_VERSION {
            return Err(Error::Spec(format!("version: expected {SPEC_VERSION}, got {}", self.version)));
        }
        match self.kind {
            SpecKind::BlockSystem => {
                if self.blocks.is_none() {
                    return Err(Error::Spec("blocks: required for kind block_system".into()));
                }
                for (name, present) in
                    [("A", self.a.is_some()), ("B", self.b.is_some()), ("A_tilde", self.a_tilde.is_some())]
                {
                    if present {
                        return Err(Error::Spec(format!("{name}: not allowed for kind block_system (use blocks)")));
                    }
                }
            }
            SpecKind::SecondOrder | SpecKind::SecondOrderNonlinearEnvelope => {
                if self.blocks.is_some() {
                    return Err(Error::Spec("blocks: only allowed for kind block_system".into()));
                }
                if self.a.is_none() || self.b.is_none() {
                    return Err(Error::Spec("A and B: required for second-order kinds".into()));
                }
                nonneg(&self.tau, "tau")?;
                if self.kind == SpecKind::SecondOrder {
                    for (name, env) in [("A", &self.a), ("B", &self.b)] {
                        if let Some(m) = env.as_ref().and_then(|e| e.modulated(name).transpose()) {
                            if m?.is_state_dependent() {
                                return Err(Error::Spec(format!(
                                    "{name}: state-dependent modulators need kind second_order_nonlinear_envelope"
                                )));
                            }
                        }
                    }
                }
            }
        }
        if let Some(s) = &self.simulation {
            for (name, v) in [("simulation.horizon", &s.horizon), ("simulation.step", &s.step)] {
                if !v.0.gt_zero() {
                    return Err(Error::Spec(format!("{name}: must be positive")));
                }
            }
            if s.history.is_empty() {
                return Err(Error::Spec("simulation.history: must not be empty".into()));
            }
        }
        Ok(())
    }

    pub fn tau(&self) -> Result<Q> {
        nonneg(&self.tau, "tau")
    }

    /// Second-order spec with envelopes reduced to exact constants.
    pub fn second_order(&self, kind: NormKind) -> Result<SecondOrderSpec<Q>> {
        let (a, b) = match (&self.a, &self.b) {
            (Some(a), Some(b)) if self.kind != SpecKind::BlockSystem => (a, b),
            _ => return Err(Error::Spec("kind: a second-order spec is required".into())),
        };
        let tau = self.tau()?;
        let given_cross = self.cross_norms.as_ref().map(|c| CrossNorms {
            n_main: c.n_main.0.clone(),
            n_cross: c.n_cross.0.clone(),
            n_b: c.n_b.0.clone(),
        });
        let spec = match (a.modulated("A")?, b.modulated("B")?) {
            (Some(am), Some(bm)) => {
                let at = match &self.a_tilde {
                    Some(m) => m.0.clone(),
                    None if am.is_constant() => am.base.clone(),
                    None => return Err(Error::Spec("A_tilde: required when A varies".into())),
                };
                let mut spec = SecondOrderSpec::from_modulated(&am, &bm, at, tau, kind)?;
                if let Some(alpha) = &self.alpha {
                    spec = spec.with_alpha(alpha.0.clone())?;
                }
                if let Some(given) = given_cross {
                    let computed = spec.cross_norms()?;
                    let pairs = [
                        ("n_main", &given.n_main, &computed.n_main),
                        ("n_cross", &given.n_cross, &computed.n_cross),
                        ("n_B", &given.n_b, &computed.n_b),
                    ];
                    for (name, g, c) in pairs {
                        if g < c {
                            return Err(Error::Spec(format!(
                                "cross_norms.{name} = {} is below the computed bound {}",
                                g.pretty(),
                                c.pretty()
                            )));
                        }
                    }
                    spec.cross = Some(given);
                }
                spec
            }
            _ => {
                let at = self
                    .a_tilde
                    .as_ref()
                    .ok_or_else(|| Error::Spec("A_tilde: required when A or B is given by bounds".into()))?;
                let alpha = self
                    .alpha
                    .as_ref()
                    .ok_or_else(|| Error::Spec("alpha: required when A or B is given by bounds".into()))?;
                SecondOrderSpec::with_bounds(
                    a.envelope("A", kind)?,
                    b.envelope("B", kind)?,
                    at.0.clone(),
                    alpha.0.clone(),
                    tau,
                    kind,
                    given_cross,
                )?
            }
        };
        Ok(spec)
    }

    fn blocks(&self) -> Result<&[BlockSpec]> {
        match (&self.blocks, self.kind) {
            (Some(b), SpecKind::BlockSystem) => Ok(b),
            _ => Err(Error::Spec("kind: a block_system spec is required".into())),
        }
    }

    fn source(from: usize, n: usize, what: &str) -> Result<usize> {
        if from == 0 || from > n {
            return Err(Error::Spec(format!("{what}.from: block {from} out of 1..={n}")));
        }
        Ok(from - 1)
    }

    pub fn block_system(&self, kind: NormKind) -> Result<BlockSystemSpec<Q>> {
        let specs = self.blocks()?;
        let n = specs.len();
        let mut dim = None;
        let mut blocks = Vec::with_capacity(n);
        for (i, bs) in specs.iter().enumerate() {
            let p = format!("blocks[{i}]");
            let diag = bs.a.envelope(&format!("{p}.A"), kind)?;
            dim = dim.or(diag.dim());
            let mut block = Block::new(diag, nonneg(&bs.tau, &format!("{p}.tau"))?);
            for (k, c) in bs.b.iter().enumerate() {
                let w = format!("{p}.B[{k}]");
                let env = c.value.envelope(&w, kind)?;
                dim = dim.or(env.dim());
                block = block.coupling(Self::source(c.from, n, &w)?, env, nonneg(&c.tau, &format!("{w}.tau"))?);
            }
            for (k, c) in bs.k_bound.iter().enumerate() {
                let w = format!("{p}.K_bound[{k}]");
                let env = c.value.envelope(&w, kind)?;
                dim = dim.or(env.dim());
                block = block.distributed(
                    Self::source(c.from, n, &w)?,
                    env,
                    nonneg(&Some(c.sigma.clone()), &format!("{w}.sigma"))?,
                );
            }
            blocks.push(block);
        }
        BlockSystemSpec::new(dim.unwrap_or(1), kind, blocks).map_err(|e| match e {
            Error::Dimension(m) => Error::Spec(m),
            other => other,
        })
    }

    /// Two blocks with constant matrices, one coupling each way, no distributed terms.
    pub fn two_delay_pair(&self, kind: NormKind) -> Result<TwoDelayPair<Q>> {
        let specs = self.blocks()?;
        let shape_err =
            || Error::Spec("the two-delay test needs two blocks with constant A and one coupling each way".into());
        if specs.len() != 2 || specs.iter().any(|b| b.b.len() != 1 || !b.k_bound.is_empty()) {
            return Err(shape_err());
        }
        if specs[0].b[0].from != 2 || specs[1].b[0].from != 1 {
            return Err(shape_err());
        }
        let a1 = specs[0].a.constant().ok_or_else(shape_err)?;
        let a2 = specs[1].a.constant().ok_or_else(shape_err)?;
        let b12 = specs[0].b[0].value.constant().ok_or_else(shape_err)?;
        let b21 = specs[1].b[0].value.constant().ok_or_else(shape_err)?;
        Ok(TwoDelayPair {
            a1: a1.abs(),
            a2: a2.abs(),
            b12: b12.abs(),
            b21: b21.abs(),
            tau1: nonneg(&specs[0].tau, "blocks[0].tau")?,
            tau2: nonneg(&specs[1].tau, "blocks[1].tau")?,
            alpha1: matrix_measure(a1, kind)?,
            alpha2: matrix_measure(a2, kind)?,
        })
    }

    pub fn simulation(&self) -> Result<&SimulationSpec> {
        self.simulation.as_ref().ok_or_else(|| Error::Spec("simulation: required for simulate".into()))
    }

    pub fn forcing(&self) -> Forcing {
        self.forcing.as_ref().map_or(Forcing::Zero, ForcingSpec::forcing)
    }

    fn delay(tau: f64, profile: DelayProfile) -> Delay {
        match profile {
            DelayProfile::Constant => Delay::Constant(tau),
            DelayProfile::Sin2 => Delay::Varying { tau_bar: tau, f: Arc::new(move |t: f64| tau * t.sin().powi(2)) },
        }
    }

    /// Runtime second-order system and its `(x, x')` histories.
    pub fn second_order_runtime(&self) -> Result<(SecondOrderSystem, History, History)> {
        let sim = self.simulation()?;
        let (a, b) = match (&self.a, &self.b) {
            (Some(a), Some(b)) => (a, b),
            _ => return Err(Error::Spec("kind: a second-order spec is required".into())),
        };
        let a = a.coefficient("A")?;
        let b = b.coefficient("B")?;
        let d = match &a {
            Coefficient::Constant(m) => m.rows(),
            Coefficient::Modulated(m) => m.dim(),
            Coefficient::Custom(_) => unreachable!("spec files have no custom coefficients"),
        };
        let phi: Vec<f64> = sim.history.iter().map(Num::f64).collect();
        let phi_dot: Vec<f64> = match &sim.history_dot {
            Some(v) => v.iter().map(Num::f64).collect(),
            None => vec![0.0; d],
        };
        if phi.len() != d || phi_dot.len() != d {
            return Err(Error::Spec(format!(
                "simulation.history: expected {d} entries (and history_dot), got {} and {}",
                phi.len(),
                phi_dot.len()
            )));
        }
        let sys = SecondOrderSystem {
            dim: d,
            a,
            b,
            delay: Self::delay(self.tau()?.to_f64_lossy(), sim.delay_profile),
            forcing: self.forcing(),
        };
        Ok((sys, History::constant(phi), History::constant(phi_dot)))
    }

    /// Runtime block system: distributed terms use the kernel `K_bound / sigma`
    /// spread uniformly over `[t - sigma, t]`.
    pub fn block_runtime(&self) -> Result<(LinearDelaySystem, History)> {
        let sim = self.simulation()?;
        let specs = self.blocks()?;
        if sim.history_dot.is_some() {
            return Err(Error::Spec("simulation.history_dot: only for second-order kinds".into()));
        }
        let spec = self.block_system(self.norm)?;
        let d = spec.dim;
        let n = specs.len();
        let mut sys = LinearDelaySystem::new(d, n).with_forcing(self.forcing());
        for (i, bs) in specs.iter().enumerate() {
            let p = format!("blocks[{i}]");
            let tau = nonneg(&bs.tau, &p)?.to_f64_lossy();
            sys = sys.point(i, i, bs.a.coefficient(&format!("{p}.A"))?, Self::delay(tau, sim.delay_profile));
            for (k, c) in bs.b.iter().enumerate() {
                let w = format!("{p}.B[{k}]");
                let tau = nonneg(&c.tau, &w)?.to_f64_lossy();
                sys = sys.point(i, c.from - 1, c.value.coefficient(&w)?, Delay::Constant(tau));
            }
            for (k, c) in bs.k_bound.iter().enumerate() {
                let w = format!("{p}.K_bound[{k}]");
                let m = c
                    .value
                    .constant()
                    .ok_or_else(|| Error::Spec(format!("{w}: simulation needs a constant matrix")))?;
                let sigma = c.sigma.f64();
                if sigma == 0.0 {
                    continue;
                }
                let kernel = m.to_f64().scale(&(1.0 / sigma));
                sys = sys.kernel(i, c.from - 1, move |_, _| kernel.clone(), Delay::Constant(sigma));
            }
        }
        let phi: Vec<f64> = sim.history.iter().map(Num::f64).collect();
        if phi.len() != d * n {
            return Err(Error::Spec(format!("simulation.history: expected {} entries, got {}", d * n, phi.len())));
        }
        Ok((sys, History::constant(phi)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{q, qi};

    const EXAMPLE: &str = r#"{
        "version": 1, "kind": "second_order", "norm": "inf",
        "A": {"constant": [[4, 0], [0, 6]], "varying": [
            {"modulator": "sin2(t)", "matrix": [[0, 1], [0, 0]]},
            {"modulator": "cos2(t)", "matrix": [[0, 0], [1, 0]]}]},
        "B": {"constant": [[4, 0], [0, 8]], "varying": [
            {"modulator": "sin2(t)", "matrix": [[0, 2], [0, 0]]},
            {"modulator": "cos2(t)", "matrix": [[0, 0], [2, 0]]}]},
        "A_tilde": [[4, 1], [1, 6]],
        "tau": 0.01
    }"#;

    #[test]
    fn example_parses_exactly() {
        let s = SpecFile::parse(EXAMPLE).unwrap();
        assert_eq!(s.tau().unwrap(), q(1, 100));
        let so = s.second_order(NormKind::Inf).unwrap();
        assert_eq!(so.alpha, qi(-3));
        assert_eq!(so.cross_norms().unwrap().n_cross, qi(66));
    }

    #[test]
    fn fractions_as_strings() {
        let s = SpecFile::parse(&EXAMPLE.replace("\"tau\": 0.01", "\"tau\": \"1/96\"")).unwrap();
        assert_eq!(s.tau().unwrap(), q(1, 96));
    }

    #[test]
    fn unknown_fields_are_rejected_with_path() {
        let e = SpecFile::parse(&EXAMPLE.replace("\"tau\": 0.01", "\"tau\": 0.01, \"tua\": 1")).unwrap_err();
        assert!(e.to_string().contains("tua"), "{e}");
        let e =
            SpecFile::parse(&EXAMPLE.replace("\"matrix\": [[0, 1], [0, 0]]", "\"matrix\": [[0, 1], [0]]")).unwrap_err();
        let msg = e.to_string();
        assert!(msg.contains("A") && msg.contains("row 2"), "{msg}");
    }

    #[test]
    fn version_and_kind_checks() {
        assert!(SpecFile::parse(&EXAMPLE.replace("\"version\": 1", "\"version\": 2")).is_err());
        assert!(SpecFile::parse(&EXAMPLE.replace("second_order", "third_order")).is_err());
        let nl = EXAMPLE.replace("sin2(t)", "sin2(t*x1)");
        assert!(SpecFile::parse(&nl).unwrap_err().to_string().contains("nonlinear"));
        let ok = nl.replace("\"second_order\"", "\"second_order_nonlinear_envelope\"");
        let s = SpecFile::parse(&ok).unwrap();
        assert_eq!(s.second_order(NormKind::Inf).unwrap().cross_norms().unwrap().n_main, qi(7));
    }

    #[test]
    fn bounds_need_explicit_constants() {
        let text = r#"{"version": 1, "kind": "second_order",
            "A": {"sup_norm": 7, "alpha": -3}, "B": {"sup_norm": 10},
            "A_tilde": [[4, 1], [1, 6]], "alpha": -3, "tau": 0.01,
            "cross_norms": {"n_main": 7, "n_cross": 66, "n_B": 10}}"#;
        let s = SpecFile::parse(text).unwrap();
        let so = s.second_order(NormKind::Inf).unwrap();
        assert_eq!(so.alpha, qi(-3));
        let missing = text.replace(",\n            \"cross_norms\": {\"n_main\": 7, \"n_cross\": 66, \"n_B\": 10}", "");
        assert!(SpecFile::parse(&missing).unwrap().second_order(NormKind::Inf).is_err());
    }

    #[test]
    fn block_system_parses() {
        let text = r#"{"version": 1, "kind": "block_system",
            "blocks": [
              {"A": [[-2, 0], [0, -3]], "tau": 0.05, "B": [{"from": 2, "value": [[0.5, 0], [0, 0.5]], "tau": 0.2}]},
              {"A": {"sup_norm": 4, "alpha": -2}, "K_bound": [{"from": 1, "value": {"sup_norm": 0.3}, "sigma": 0.1}]}
            ]}"#;
        let s = SpecFile::parse(text).unwrap();
        let b = s.block_system(NormKind::Inf).unwrap();
        assert_eq!(b.dim, 2);
        assert_eq!(b.blocks[0].terms[0].from, 1);
        let bad = text.replace("\"from\": 2", "\"from\": 3");
        assert!(SpecFile::parse(&bad).unwrap().block_system(NormKind::Inf).is_err());
    }

    #[test]
    fn malformed_matrix_row() {
        let e = SpecFile::parse(&EXAMPLE.replace("\"A_tilde\": [[4, 1], [1, 6]]", "\"A_tilde\": [[4, 1], [1]]"))
            .unwrap_err();
        assert!(e.to_string().contains("A_tilde"), "{e}");
    }
}
