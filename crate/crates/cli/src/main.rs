//! `epilim`: run the family registry through the convex-analysis checks.
//!
//! Exit codes: 0 all checks pass, 2 a verdict fails, 3 a hypothesis fails,
//! 1 usage or input errors.

mod config;
mod error;
mod run;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use epilim_core::Grid1D;

use config::{ExperimentConfig, Format};
use error::CliError;

#[derive(Debug, Parser)]
#[command(name = "epilim", version, about = "Epi-convergence checks for convex function families")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    #[command(flatten)]
    common: Common,
}

#[derive(Debug, Args)]
struct Common {
    /// Grid override, `lo:hi:count`.
    #[arg(long, global = true, allow_hyphen_values = true, value_parser = parse_grid)]
    grid: Option<Grid1D>,

    /// Slope grid override, `lo:hi:count`.
    #[arg(long, global = true, allow_hyphen_values = true, value_parser = parse_grid)]
    slope_grid: Option<Grid1D>,

    /// Horizon N.
    #[arg(long, global = true)]
    n: Option<usize>,

    #[arg(long, global = true)]
    tail_start: Option<usize>,

    /// Slack on top of each check's discretization allowance.
    #[arg(long, global = true)]
    tol: Option<f64>,

    #[arg(long, global = true, value_enum)]
    format: Option<Format>,

    /// Write the main output here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Directory for per-grid CSV curves of the checks.
    #[arg(long, global = true)]
    curves: Option<PathBuf>,

    /// Flat `key = value` settings; flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[arg(long, global = true)]
    family: Option<String>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Conjugate of a function file or of a family member.
    Conjugate(Source),
    /// Moreau envelope of a function file or of a family member.
    Moreau {
        #[command(flatten)]
        source: Source,
        #[arg(long)]
        lambda: Option<f64>,
    },
    /// Γ-limit of a family against its expected limit.
    GammaCheck,
    /// Γ-limits of the members and of their conjugates.
    DualCheck,
    /// The three equivalent convergence statements.
    AttouchCheck,
    /// Dual witness sequence converging to a slope.
    Witness {
        #[arg(long, allow_hyphen_values = true)]
        x_star: Option<f64>,
    },
    /// Worked examples: `blowup` or `nested-intervals`.
    Reproduce { id: String },
    /// The family registry.
    List,
}

#[derive(Debug, Args)]
struct Source {
    /// Function file (`.csv` or `.json`).
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long)]
    member: Option<usize>,
}

fn parse_grid(s: &str) -> Result<Grid1D, String> {
    Grid1D::parse(s).map_err(|e| e.to_string())
}

fn settings(cli: &Cli) -> Result<ExperimentConfig, CliError> {
    let c = &cli.common;
    let mut flags = ExperimentConfig {
        family: c.family.clone(),
        grid: c.grid,
        slope_grid: c.slope_grid,
        n: c.n,
        tail_start: c.tail_start,
        tol: c.tol,
        format: c.format,
        out: c.out.clone(),
        curves: c.curves.clone(),
        ..Default::default()
    };
    match &cli.command {
        Command::Conjugate(src) => {
            flags.input = src.input.clone();
            flags.member = src.member;
        }
        Command::Moreau { source, lambda } => {
            flags.input = source.input.clone();
            flags.member = source.member;
            flags.lambda = *lambda;
        }
        Command::Witness { x_star } => flags.x_star = *x_star,
        _ => {}
    }
    let file = match &c.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    Ok(file.overridden_by(flags))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = settings(&cli).and_then(|cfg| match &cli.command {
        Command::Conjugate(_) => run::conjugate(&cfg),
        Command::Moreau { .. } => run::moreau(&cfg),
        Command::GammaCheck => run::check(&cfg, run::CheckKind::Gamma),
        Command::DualCheck => run::check(&cfg, run::CheckKind::Dual),
        Command::AttouchCheck => run::check(&cfg, run::CheckKind::Attouch),
        Command::Witness { .. } => run::witness(&cfg),
        Command::Reproduce { id } => run::reproduce(&cfg, id),
        Command::List => run::list(&cfg),
    });
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("epilim: {e}");
            ExitCode::from(1)
        }
    }
}
