//! The `certify`, `sweep`, `simulate` and `compare` commands.
//!
//! Each command returns an [`Outcome`]: an exit code, a human-readable report
//! and a JSON run record. The record holds the input digest, the tool version
//! and every tolerance in force, and no timestamp, so identical inputs give
//! byte-identical records.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::criteria::{
    certify_block_system, certify_ode, certify_ode_const, certify_second_order, certify_second_order_auto,
    certify_second_order_const, certify_two_delay_pair, compare_criteria, const_criterion, reduce_second_order,
    sweep_max_tau, Certificate, Form, SecondOrderSpec, TauCriterion, Winner, BISECTION_TOL, CLOSED_FORM_TOL,
};
use crate::error::{Error, Result};
use crate::linalg::{Matrix, NormKind, Scalar, EXP_OVERFLOW_GUARD, Q};
use crate::mmatrix::{INVERSE_NEG_TOL, MINOR_REL_TOL};
use crate::sim::{
    check_forcing_property, estimate_decay, integrate, simulate_second_order, DecayEstimate, ForcingProperty,
    Trajectory, BLOWUP_NORM, COPPEL_TOL, LOG_CLIP,
};
use crate::specfile::{ForcingKind, SpecFile, SpecKind};

pub const EXIT_OK: i32 = 0;
pub const EXIT_NOT_CERTIFIED: i32 = 1;
pub const EXIT_INVALID: i32 = 2;
pub const EXIT_DIVERGED: i32 = 3;

/// Fraction of the horizon skipped before fitting the decay rate.
pub const TRANSIENT_FRACTION: f64 = 0.2;

pub const DEFAULT_TAU_MAX: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Certify,
    Sweep,
    Simulate,
    Compare,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Self::Certify => "certify",
            Self::Sweep => "sweep",
            Self::Simulate => "simulate",
            Self::Compare => "compare",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CriterionChoice {
    #[default]
    Auto,
    T31,
    C35,
    T41,
    C40,
    C41,
    C42,
    C43,
}

impl CriterionChoice {
    pub fn name(self) -> &'static str {
        match self {
            Self::Auto => "auto",
            Self::T31 => "t31",
            Self::C35 => "c35",
            Self::T41 => "t41",
            Self::C40 => "c40",
            Self::C41 => "c41",
            Self::C42 => "c42",
            Self::C43 => "c43",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Options {
    pub tau_max: f64,
    /// CSV for `simulate`, run record for the other commands.
    pub out: Option<PathBuf>,
    pub norm: Option<NormKind>,
    pub criterion: CriterionChoice,
}

impl Default for Options {
    fn default() -> Self {
        Self { tau_max: DEFAULT_TAU_MAX, out: None, norm: None, criterion: CriterionChoice::Auto }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub exit_code: i32,
    pub report: String,
    pub record: Value,
}

pub fn exit_code_for(e: &Error) -> i32 {
    match e {
        Error::BlowUp { .. } => EXIT_DIVERGED,
        Error::Precondition(_) => EXIT_NOT_CERTIFIED,
        _ => EXIT_INVALID,
    }
}

fn tolerances() -> Value {
    json!({
        "minor_rel_tol": MINOR_REL_TOL,
        "inverse_neg_tol": INVERSE_NEG_TOL,
        "bisection_tol": BISECTION_TOL,
        "closed_form_tol": CLOSED_FORM_TOL,
        "blowup_norm": BLOWUP_NORM,
        "log_clip": LOG_CLIP,
        "coppel_tol": COPPEL_TOL,
        "exp_overflow_guard": EXP_OVERFLOW_GUARD,
        "transient_fraction": TRANSIENT_FRACTION,
    })
}

fn digest(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

fn q_json(v: &Q) -> Value {
    json!({ "exact": v.to_string(), "display": v.pretty(), "value": v.to_f64_lossy() })
}

fn matrix_json(m: &Matrix<Q>) -> Value {
    Value::Array(
        m.to_rows().iter().map(|r| Value::Array(r.iter().map(|v| Value::String(v.pretty())).collect())).collect(),
    )
}

pub fn certificate_json(c: &Certificate<Q>) -> Value {
    json!({
        "verdict": if c.is_certified() { "Certified" } else { "NotCertified" },
        "criterion_id": c.criterion.code(),
        "criterion": c.criterion.description(),
        "D": c.d.as_ref().map(matrix_json),
        "mmatrix_report": c.mmatrix.as_ref().map(|r| json!({
            "is_z_matrix": r.is_z_matrix,
            "is_m_matrix": r.is_m_matrix,
            "leading_minors": r.leading_minors.iter().map(q_json).collect::<Vec<_>>(),
        })),
        "margins": c.margins.iter().map(|m| json!({
            "label": m.label,
            "lhs": q_json(&m.lhs),
            "rhs": q_json(&m.rhs),
            "holds": m.holds(),
        })).collect::<Vec<_>>(),
        "notes": c.notes,
        "alternatives": c.alternatives.iter().map(certificate_json).collect::<Vec<_>>(),
    })
}

fn write_matrix(out: &mut String, m: &Matrix<Q>, indent: &str) {
    let cells: Vec<Vec<String>> = m.to_rows().iter().map(|r| r.iter().map(Scalar::pretty).collect()).collect();
    let width = cells.iter().flatten().map(String::len).max().unwrap_or(1);
    for row in cells {
        let line: Vec<String> = row.iter().map(|c| format!("{c:>width$}")).collect();
        let _ = writeln!(out, "{indent}  [ {} ]", line.join("  "));
    }
}

pub fn certificate_text(c: &Certificate<Q>, indent: &str) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "{indent}criterion: {} ({})", c.criterion.code(), c.criterion.description());
    for n in &c.notes {
        let _ = writeln!(s, "{indent}  {n}");
    }
    if let Some(d) = &c.d {
        let _ = writeln!(s, "{indent}D =");
        write_matrix(&mut s, d, indent);
    }
    if let Some(r) = &c.mmatrix {
        let minors: Vec<String> = r.leading_minors.iter().map(Scalar::pretty).collect();
        let _ = writeln!(s, "{indent}leading minors of I - D: {}", minors.join(", "));
        let _ = writeln!(s, "{indent}I - D is a non-singular M-matrix: {}", if r.is_m_matrix { "yes" } else { "no" });
    }
    for m in &c.margins {
        let _ = writeln!(s, "{indent}margin {m}  [{}]", if m.holds() { "holds" } else { "fails" });
    }
    let _ = writeln!(s, "{indent}verdict: {}", if c.is_certified() { "Certified" } else { "NotCertified" });
    for alt in &c.alternatives {
        let _ = writeln!(s, "{indent}also evaluated:");
        s.push_str(&certificate_text(alt, &format!("{indent}  ")));
    }
    s
}

struct Context {
    spec: SpecFile,
    norm: NormKind,
    digest: String,
}

fn load(path: &Path, opts: &Options) -> Result<Context> {
    let bytes = std::fs::read(path).map_err(|e| Error::Spec(format!("cannot read {}: {e}", path.display())))?;
    let text = std::str::from_utf8(&bytes).map_err(|_| Error::Spec("spec file is not UTF-8".into()))?;
    let spec = SpecFile::parse(text)?;
    let norm = opts.norm.unwrap_or(spec.norm);
    Ok(Context { spec, norm, digest: digest(&bytes) })
}

fn record(cmd: Command, ctx: Option<&Context>, opts: &Options, exit_code: i32, result: Value) -> Value {
    json!({
        "command": cmd.name(),
        "tool": "delaystab",
        "version": env!("CARGO_PKG_VERSION"),
        "input_sha256": ctx.map(|c| c.digest.clone()),
        "norm": ctx.map(|c| c.norm.name()),
        "criterion": opts.criterion.name(),
        "tau_max": opts.tau_max,
        "exit_code": exit_code,
        "result": result,
        "tolerances": tolerances(),
    })
}

/// Runs one command; never panics on bad input.
pub fn run(cmd: Command, path: &Path, opts: &Options) -> Outcome {
    let ctx = match load(path, opts) {
        Ok(c) => c,
        Err(e) => {
            let report = format!("error: {e}\n");
            let rec = record(cmd, None, opts, EXIT_INVALID, json!({ "error": e.to_string() }));
            return Outcome { exit_code: EXIT_INVALID, report, record: rec };
        }
    };
    let res = match cmd {
        Command::Certify => certify(&ctx, opts),
        Command::Sweep => sweep(&ctx, opts),
        Command::Simulate => simulate(&ctx, opts),
        Command::Compare => compare(&ctx),
    };
    let (exit_code, report, result) = match res {
        Ok(r) => r,
        Err(e) => {
            let code = exit_code_for(&e);
            let prefix = match code {
                EXIT_NOT_CERTIFIED => "not certified: criterion not applicable",
                EXIT_DIVERGED => "divergence",
                _ => "error",
            };
            let mut report = format!("{prefix}: {e}\n");
            if let Error::BlowUp { last_finite, .. } = e {
                let _ = writeln!(report, "last finite time: {last_finite}");
            }
            if cmd == Command::Sweep && code == EXIT_NOT_CERTIFIED {
                report.push_str("tau* = 0.000000000000\n");
            }
            (code, report, json!({ "error": e.to_string() }))
        }
    };
    Outcome { exit_code, record: record(cmd, Some(&ctx), opts, exit_code, result), report }
}

type CmdResult = Result<(i32, String, Value)>;

fn is_block(ctx: &Context) -> bool {
    ctx.spec.kind == SpecKind::BlockSystem
}

fn not_for(choice: CriterionChoice, what: &str) -> Error {
    Error::Spec(format!("criterion {} does not apply to {what}", choice.name()))
}

fn constant_pair(so: &SecondOrderSpec<Q>) -> Result<(Matrix<Q>, Matrix<Q>)> {
    let (a, b) =
        so.constant_coefficients().ok_or_else(|| Error::Spec("this criterion needs constant A and B".into()))?;
    if so.a_tilde != *a {
        return Err(Error::Spec("this criterion takes A_tilde = A; drop A_tilde or use c40/t41".into()));
    }
    Ok((a.clone(), b.clone()))
}

fn certificate_at(ctx: &Context, choice: CriterionChoice, tau: Option<&Q>) -> Result<Certificate<Q>> {
    let norm = ctx.norm;
    if is_block(ctx) {
        return match choice {
            CriterionChoice::Auto | CriterionChoice::T31 => {
                let mut sys = ctx.spec.block_system(norm)?;
                if let Some(t) = tau {
                    sys = sys.with_uniform_tau(t);
                }
                certify_block_system(&sys)
            }
            CriterionChoice::C35 => {
                let mut pair = ctx.spec.two_delay_pair(norm)?;
                if let Some(t) = tau {
                    pair.tau1 = t.clone();
                    pair.tau2 = t.clone();
                }
                certify_two_delay_pair(&pair, norm)
            }
            other => Err(not_for(other, "block systems")),
        };
    }
    let mut so = ctx.spec.second_order(norm)?;
    if let Some(t) = tau {
        so = so.with_tau(t.clone());
    }
    match choice {
        CriterionChoice::Auto => certify_second_order_auto(&so),
        CriterionChoice::T41 => certify_second_order(&so, Form::Ratio),
        CriterionChoice::C40 => certify_second_order(&so, Form::Bound),
        CriterionChoice::C41 => {
            let (a, b) = constant_pair(&so)?;
            certify_second_order_const(&a, &b, &so.tau, norm)
        }
        CriterionChoice::C42 => certify_ode(&so),
        CriterionChoice::C43 => {
            let (a, b) = constant_pair(&so)?;
            certify_ode_const(&a, &b, norm)
        }
        CriterionChoice::T31 => certify_block_system(&reduce_second_order(&so)?),
        CriterionChoice::C35 => Err(not_for(choice, "second-order equations")),
    }
}

fn certify(ctx: &Context, opts: &Options) -> CmdResult {
    let cert = certificate_at(ctx, opts.criterion, None)?;
    let mut report = format!("norm: {}\n", ctx.norm.name());
    if !is_block(ctx) {
        let tau = ctx.spec.tau()?;
        let _ = writeln!(report, "tau = {}", tau.pretty());
    }
    report.push_str(&certificate_text(&cert, ""));
    let code = if cert.is_certified() { EXIT_OK } else { EXIT_NOT_CERTIFIED };
    Ok((code, report, certificate_json(&cert)))
}

/// Affine criterion used for the closed-form cross-check, when one exists.
fn affine_criterion(ctx: &Context, choice: CriterionChoice) -> Result<Option<Vec<TauCriterion<Q>>>> {
    if is_block(ctx) {
        return Ok(None);
    }
    let so = ctx.spec.second_order(ctx.norm)?;
    use crate::criteria::{bound_criterion, exact_criterion};
    Ok(match choice {
        CriterionChoice::Auto => {
            let mut v = vec![bound_criterion(&so)?];
            if so.constant_coefficients().is_some() {
                v.push(exact_criterion(&so)?);
            }
            Some(v)
        }
        CriterionChoice::T41 => Some(vec![exact_criterion(&so)?]),
        CriterionChoice::C40 => Some(vec![bound_criterion(&so)?]),
        CriterionChoice::C41 => {
            let (a, b) = constant_pair(&so)?;
            Some(vec![const_criterion(&a, &b, ctx.norm)?])
        }
        CriterionChoice::C42 | CriterionChoice::C43 => {
            return Err(Error::Spec(format!("criterion {} does not depend on tau", choice.name())))
        }
        _ => None,
    })
}

fn sweep(ctx: &Context, opts: &Options) -> CmdResult {
    // Surface structural errors before bisecting.
    certificate_at(ctx, opts.criterion, Some(&Q::from_integer(0.into())))?;
    let closed = affine_criterion(ctx, opts.criterion)?.and_then(|crits| {
        crits
            .iter()
            .map(TauCriterion::closed_form)
            .collect::<Option<Vec<Q>>>()
            .map(|v| v.into_iter().fold(Q::from_integer(0.into()), Q::max_of))
    });
    let eval = |t: &Q| certificate_at(ctx, opts.criterion, Some(t)).map(|c| c.is_certified());
    let res = sweep_max_tau(eval, opts.tau_max, closed.clone())?;

    let mut report = format!("norm: {}\ncriterion: {}\n", ctx.norm.name(), opts.criterion.name());
    let _ = writeln!(report, "tau* = {:.12}", res.tau_max);
    if let Some(c) = &closed {
        let _ = writeln!(report, "closed form: {} = {:.12}", c, c.to_f64_lossy());
        let _ = writeln!(report, "bisection and closed form agree within {CLOSED_FORM_TOL:e}");
    }
    for n in &res.notes {
        let _ = writeln!(report, "note: {n}");
    }
    let code = if res.tau_max > 0.0 { EXIT_OK } else { EXIT_NOT_CERTIFIED };
    let result = json!({
        "tau_star": res.tau_max,
        "closed_form": closed.as_ref().map(q_json),
        "iterations": res.iterations,
        "notes": res.notes,
    });
    Ok((code, report, result))
}

fn decay_json(e: &DecayEstimate) -> Value {
    serde_json::to_value(e).expect("plain struct serializes")
}

fn decay_text(label: &str, r: &Result<DecayEstimate>) -> String {
    match r {
        Ok(e) => format!(
            "{label}: nu_hat = {:.6}{}, H_hat = {:.6}, r^2 = {:.6}, decayed = {}\n",
            e.nu_hat,
            if e.nu_is_lower_bound { " (lower bound, reached the clip level)" } else { "" },
            e.h_hat,
            e.r_squared,
            e.decayed
        ),
        Err(err) => format!("{label}: decay not estimated ({err})\n"),
    }
}

fn simulate(ctx: &Context, opts: &Options) -> CmdResult {
    let sim = ctx.spec.simulation()?;
    let horizon = sim.horizon.f64();
    let step = sim.step.f64();
    let t0 = sim.t0.as_ref().map_or(0.0, |n| n.f64());
    let (traj, parts): (Trajectory, Vec<(&str, Trajectory)>) = if is_block(ctx) {
        let (sys, hist) = ctx.spec.block_runtime()?;
        let tr = integrate(&sys, &hist, t0, horizon, step)?;
        (tr.clone(), vec![("state", tr)])
    } else {
        let (sys, phi, phi_dot) = ctx.spec.second_order_runtime()?;
        let d = sys.dim;
        let tr = simulate_second_order(&sys, phi, phi_dot, t0, horizon, step)?;
        let parts = vec![("state", tr.project(0..d)), ("derivative", tr.project(d..2 * d))];
        (tr, parts)
    };

    if let Some(path) = &opts.out {
        let f =
            std::fs::File::create(path).map_err(|e| Error::Spec(format!("cannot write {}: {e}", path.display())))?;
        traj.write_csv(std::io::BufWriter::new(f))
            .map_err(|e| Error::Spec(format!("cannot write {}: {e}", path.display())))?;
    }

    let mut report = format!("simulated t in [{t0}, {}] with step {step} ({} points)\n", t0 + horizon, traj.len());
    let mut decay = serde_json::Map::new();
    for (label, p) in &parts {
        let est = estimate_decay(p, TRANSIENT_FRACTION);
        report.push_str(&decay_text(label, &est));
        decay.insert(
            label.to_string(),
            match &est {
                Ok(e) => decay_json(e),
                Err(err) => json!({ "error": err.to_string() }),
            },
        );
    }
    report.push_str("(fitted H, nu are an empirical proxy, not the constants of exponential stability)\n");

    let property = ctx.spec.forcing.as_ref().and_then(|f| match f.kind {
        ForcingKind::Zero => None,
        ForcingKind::BoundedSine => Some(ForcingProperty::Bounded),
        ForcingKind::DecayingExp => Some(ForcingProperty::VanishingForcing),
    });
    let forcing = property.map(|p| {
        let c = check_forcing_property(&parts[0].1, p);
        let _ = writeln!(
            report,
            "forcing property {:?}: {} (tail sup {:.6e}, ceiling {:.6e})",
            p, c.holds, c.tail, c.ceiling
        );
        serde_json::to_value(c).expect("plain struct serializes")
    });
    if let Some(path) = &opts.out {
        let _ = writeln!(report, "trajectory written to {}", path.display());
    }
    let result = json!({
        "points": traj.len(),
        "final_norm": traj.norms.last(),
        "decay": Value::Object(decay),
        "forcing": forcing,
    });
    Ok((EXIT_OK, report, result))
}

fn compare(ctx: &Context) -> CmdResult {
    let (a1, a0) = match (&ctx.spec.a1, &ctx.spec.a0) {
        (Some(a1), Some(a0)) => (a1.0.clone(), a0.0.clone()),
        _ => return Err(Error::Spec("a1, a0: both are required for compare".into())),
    };
    let so = ctx.spec.second_order(ctx.norm)?;
    let (a, b) = constant_pair(&so)?;
    let d = a.rows();
    let cmp = compare_criteria(&a, &b, d, &a1, &a0, ctx.norm)?;
    let winner = match cmp.winner {
        Winner::MeasureCriterion => "C41 (measure test)",
        Winner::LyapunovCriterion => "P51 (Lyapunov-functional test)",
        Winner::Tie => "tie",
    };
    let mut report = format!("dimension d = {d}\n");
    let _ = writeln!(report, "C41 threshold: tau < {} = {:.12}", cmp.c41_threshold, cmp.c41_threshold.to_f64_lossy());
    let _ = writeln!(report, "P51 threshold: tau < a1/(a0*sqrt(d)) = {:.12}", cmp.p51_threshold);
    let _ = writeln!(report, "larger threshold: {winner}");
    let result = json!({
        "d": d,
        "c41_threshold": q_json(&cmp.c41_threshold),
        "p51_threshold": cmp.p51_threshold,
        "winner": format!("{:?}", cmp.winner),
    });
    Ok((EXIT_OK, report, result))
}
