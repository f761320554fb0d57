use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use cstar_cli::{parse_system, run, CliError, CommandKind, Options};

/// Numerical checker for finite-dimensional C*-dynamical systems: GNS data,
/// dilation towers, reversible dilations and ergodic classification.
#[derive(Parser)]
#[command(name = "cstar", version, about, max_term_width = 100)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct CommonArgs {
    /// System spec (JSON).
    spec: PathBuf,
    /// Tower depth for the truncated constructions.
    #[arg(long, default_value_t = 3)]
    depth: usize,
    /// Isometry headroom for budgeted checks (defaults to the depth).
    #[arg(long)]
    budget: Option<usize>,
    /// Tolerance override; the spec file value (default 1e-10) otherwise.
    #[arg(long)]
    tol: Option<f64>,
    /// Seed override for coordinate gauges and sampled elements.
    #[arg(long)]
    seed: Option<u64>,
    /// Write the JSON report here ("-" for stdout).
    #[arg(long)]
    json: Option<PathBuf>,
    /// Cesàro range for the ergodic cross-check.
    #[arg(long, default_value_t = 10_000)]
    cesaro: usize,
    /// Cap on the projected tower stage dimension.
    #[arg(long, default_value_t = 8192)]
    cap: usize,
}

#[derive(Subcommand)]
enum Command {
    /// Validate the spec: ucp dynamics, state, invariance.
    Validate(CommonArgs),
    /// GNS triple, transfer contraction and induced system.
    Gns(CommonArgs),
    /// One dilation step and the factorization of the transfer contraction.
    Stinespring(CommonArgs),
    /// Iterated dilation tower and its commutation relations.
    Tower(CommonArgs),
    /// Truncated limit quadruple and all of its identities.
    CgnsVerify(CommonArgs),
    /// Modular pair and the state adjoint of the dynamics.
    Adjoint(CommonArgs),
    /// Reversible dilation with conditional expectation certificates.
    Dilate(CommonArgs),
    /// Ergodic / weakly-mixing classification and its dilation transfer.
    Ergodic(CommonArgs),
    /// Certify a candidate right inverse of the dynamics.
    RightInverse(CommonArgs),
    /// Every applicable pipeline in sequence.
    All(CommonArgs),
}

impl Command {
    fn split(&self) -> (CommandKind, &CommonArgs) {
        match self {
            Command::Validate(a) => (CommandKind::Validate, a),
            Command::Gns(a) => (CommandKind::Gns, a),
            Command::Stinespring(a) => (CommandKind::Stinespring, a),
            Command::Tower(a) => (CommandKind::Tower, a),
            Command::CgnsVerify(a) => (CommandKind::CgnsVerify, a),
            Command::Adjoint(a) => (CommandKind::Adjoint, a),
            Command::Dilate(a) => (CommandKind::Dilate, a),
            Command::Ergodic(a) => (CommandKind::Ergodic, a),
            Command::RightInverse(a) => (CommandKind::RightInverse, a),
            Command::All(a) => (CommandKind::All, a),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (kind, args) = cli.command.split();
    match execute(kind, args) {
        Ok(pass) => {
            if pass {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("cstar: {e}");
            ExitCode::from(2)
        }
    }
}

fn execute(kind: CommandKind, args: &CommonArgs) -> Result<bool, CliError> {
    let sys = parse_system(&args.spec)?;
    let opts = Options {
        depth: args.depth,
        budget: args.budget,
        tol: args.tol,
        seed: args.seed,
        cesaro: args.cesaro,
        cap: args.cap,
    };
    let report = run(kind, &sys, &opts)?;
    print!("{}", report.to_text());
    if let Some(path) = &args.json {
        let json = report.to_json();
        if path.as_os_str() == "-" {
            println!("{json}");
        } else {
            std::fs::write(path, json)
                .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        }
    }
    Ok(report.passed())
}
