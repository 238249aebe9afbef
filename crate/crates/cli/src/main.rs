use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use delaystab_core::commands::{run, Command, CriterionChoice, Options, DEFAULT_TAU_MAX, EXIT_INVALID};
use delaystab_core::linalg::NormKind;

/// Delay-independent and delay-dependent stability certificates for linear
/// delay differential systems.
///
/// Exit codes: 0 certified or ok, 1 not certified, 2 invalid input,
/// 3 numerical divergence.
#[derive(Parser, Debug)]
#[command(name = "delaystab", version)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Evaluate a stability criterion at the delay given in the spec.
    Certify(CommonArgs),
    /// Integrate the system and estimate its decay rate.
    Simulate(CommonArgs),
    /// Find the largest certified delay on [0, tau-max].
    Sweep(CommonArgs),
    /// Compare the measure test with the Lyapunov-functional bound.
    Compare(CommonArgs),
}

#[derive(Args, Debug)]
struct CommonArgs {
    /// JSON spec file.
    spec: PathBuf,
    #[arg(long, default_value_t = DEFAULT_TAU_MAX)]
    tau_max: f64,
    /// Trajectory CSV for simulate, run record for the other commands.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides the norm named in the spec.
    #[arg(long, value_enum)]
    norm: Option<NormArg>,
    #[arg(long, value_enum, default_value_t = CriterionArg::Auto)]
    criterion: CriterionArg,
    /// Write the JSON run record here.
    #[arg(long)]
    record: Option<PathBuf>,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum NormArg {
    Inf,
    One,
    Two,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum CriterionArg {
    Auto,
    T31,
    C35,
    T41,
    C40,
    C41,
    C42,
    C43,
}

impl From<NormArg> for NormKind {
    fn from(n: NormArg) -> Self {
        match n {
            NormArg::Inf => NormKind::Inf,
            NormArg::One => NormKind::One,
            NormArg::Two => NormKind::Two,
        }
    }
}

impl From<CriterionArg> for CriterionChoice {
    fn from(c: CriterionArg) -> Self {
        match c {
            CriterionArg::Auto => Self::Auto,
            CriterionArg::T31 => Self::T31,
            CriterionArg::C35 => Self::C35,
            CriterionArg::T41 => Self::T41,
            CriterionArg::C40 => Self::C40,
            CriterionArg::C41 => Self::C41,
            CriterionArg::C42 => Self::C42,
            CriterionArg::C43 => Self::C43,
        }
    }
}

fn write_json(path: &PathBuf, value: &serde_json::Value) -> Result<(), String> {
    let text = serde_json::to_string_pretty(value).map_err(|e| e.to_string())?;
    std::fs::write(path, text + "\n").map_err(|e| format!("cannot write {}: {e}", path.display()))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_INVALID as u8 } else { 0 });
        }
    };
    let (command, args) = match cli.command {
        Cmd::Certify(a) => (Command::Certify, a),
        Cmd::Simulate(a) => (Command::Simulate, a),
        Cmd::Sweep(a) => (Command::Sweep, a),
        Cmd::Compare(a) => (Command::Compare, a),
    };
    let opts = Options {
        tau_max: args.tau_max,
        out: if command == Command::Simulate { args.out.clone() } else { None },
        norm: args.norm.map(Into::into),
        criterion: args.criterion.into(),
    };
    let outcome = run(command, &args.spec, &opts);
    print!("{}", outcome.report);

    let mut code = outcome.exit_code;
    let record_paths = [if command == Command::Simulate { None } else { args.out.as_ref() }, args.record.as_ref()];
    for path in record_paths.into_iter().flatten() {
        if let Err(e) = write_json(path, &outcome.record) {
            eprintln!("error: {e}");
            code = EXIT_INVALID;
        }
    }
    ExitCode::from(code as u8)
}
