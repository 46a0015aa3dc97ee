//! `stokes-limits`: batch runner for the invariant experiments.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use stokes_core::harness::{execute, load_config, Command, Flags, Format};
use stokes_core::precision::Precision;
use stokes_core::{Complex64, Error};

#[derive(Parser, Debug)]
#[command(name = "stokes-limits", version, about = "Classification invariants as limits of perturbed charts")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug)]
struct Common {
    /// Experiment configuration (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Residual tolerance before escalating precision.
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Samples per sampling line.
    #[arg(long, global = true)]
    grid: Option<usize>,
    /// Arithmetic: double or double-double.
    #[arg(long, global = true, value_parser = parse_precision)]
    precision: Option<Precision>,
    /// A single ε, as `re` or `re,im`.
    #[arg(long, global = true, value_parser = parse_complex, allow_hyphen_values = true)]
    eps: Option<Complex64>,
    /// Artifact path; a manifest is written beside it.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// json or csv.
    #[arg(long, global = true, value_parser = parse_format)]
    format: Option<Format>,
    /// Codimension `k`.
    #[arg(long, global = true)]
    k: Option<usize>,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Cmd {
    /// Dividing rays of the model field.
    Rays,
    /// Transition functions of a single parabolic germ.
    Modulus,
    /// Fixed points, multipliers and linearizing-chart residuals.
    Koenigs,
    /// Transition functions of a perturbed germ at one ε.
    Transition,
    /// Transition coefficients along a sequence ε → 0.
    Sweep,
    /// Holonomy of a planar field on a transversal.
    Monodromy,
    /// Stable separatrix of a perturbed saddle.
    Separatrix,
    /// Formal central manifold of a saddle-node field.
    CentralManifold,
    /// Formal invariant of a parabolic germ.
    Invariant,
}

impl From<Cmd> for Command {
    fn from(c: Cmd) -> Self {
        match c {
            Cmd::Rays => Command::Rays,
            Cmd::Modulus => Command::Modulus,
            Cmd::Koenigs => Command::Koenigs,
            Cmd::Transition => Command::Transition,
            Cmd::Sweep => Command::Sweep,
            Cmd::Monodromy => Command::Monodromy,
            Cmd::Separatrix => Command::Separatrix,
            Cmd::CentralManifold => Command::CentralManifold,
            Cmd::Invariant => Command::Invariant,
        }
    }
}

fn parse_precision(s: &str) -> Result<Precision, String> {
    Precision::parse(s).ok_or_else(|| format!("unknown precision `{s}` (double or double-double)"))
}

fn parse_format(s: &str) -> Result<Format, String> {
    Format::parse(s).map_err(|e| e.to_string())
}

fn parse_complex(s: &str) -> Result<Complex64, String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    let num = |p: &str| p.parse::<f64>().map_err(|e| format!("`{p}`: {e}"));
    match parts.as_slice() {
        [re] => Ok(Complex64::new(num(re)?, 0.0)),
        [re, im] => Ok(Complex64::new(num(re)?, num(im)?)),
        _ => Err(format!("expected `re` or `re,im`, got `{s}`")),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn run(cli: Cli) -> Result<(), Error> {
    let c = cli.common;
    let cfg = c.config.as_deref().map(load_config).transpose()?;
    let flags = Flags { tol: c.tol, grid: c.grid, precision: c.precision, eps: c.eps, out: c.out, format: c.format, k: c.k };
    let to_file = flags.out.is_some() || cfg.as_ref().is_some_and(|c| c.output.path.is_some());
    let stream = !to_file && flags.format.is_some();
    let (out, text) = execute(cli.command.into(), cfg, &flags)?;
    if stream {
        print!("{text}");
        for line in &out.summary {
            eprintln!("{line}");
        }
    } else {
        for line in &out.summary {
            println!("{line}");
        }
    }
    Ok(())
}
