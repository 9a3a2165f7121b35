//! Command-line front end.
//!
//! Exit codes: 0 success, 1 unreadable or malformed input, 2 an
//! equilibrium failed to converge, 3 input that violates a model
//! constraint (or bad command-line usage).

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};

use crate::dynamics::{limit_gap, simulate};
use crate::io::{emit_trajectory, parse_network, parse_prices, parse_scenario, DocumentError, OutputFormat};
use crate::network::Network;
use crate::solver::{check_contraction, solve_equilibrium, SolveError, SolverConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 1;
pub const EXIT_NO_CONVERGENCE: i32 = 2;
pub const EXIT_INVALID: i32 = 3;

/// Value cross-owned financial firms and simulate delayed-information dynamics
#[derive(Parser, Debug)]
#[command(name = "reflexnet", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Report whether the network's fixed point is guaranteed unique
    Check {
        network: PathBuf,
    },
    /// Solve the full-information equilibrium at given prices
    Solve {
        network: PathBuf,
        /// JSON object mapping asset names to prices
        #[arg(long)]
        prices: PathBuf,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
        #[arg(long = "max-iter", default_value_t = 10_000)]
        max_iter: usize,
        /// Print full precision instead of two decimals
        #[arg(long)]
        precise: bool,
    },
    /// Simulate a scenario and write the trajectory
    Simulate {
        network: PathBuf,
        scenario: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
        /// Round values to two decimals for display
        #[arg(long = "round-2")]
        round_2: bool,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Format {
    Csv,
    Json,
}

/// Runs the CLI against the process's standard streams.
pub fn run_cli<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run_cli_with(args, &mut stdout.lock(), &mut stderr.lock())
}

/// Runs the CLI with data written to `out` and diagnostics to `err`.
pub fn run_cli_with<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = write!(err, "{e}");
            return if e.use_stderr() { EXIT_INVALID } else { EXIT_OK };
        }
    };
    let result = match cli.command {
        Command::Check { network } => check(&network, out),
        Command::Solve {
            network,
            prices,
            tol,
            max_iter,
            precise,
        } => solve(&network, &prices, tol, max_iter, precise, out, err),
        Command::Simulate {
            network,
            scenario,
            out: out_path,
            format,
            round_2,
        } => run_simulation(&network, &scenario, out_path.as_deref(), format, round_2, out, err),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

fn read(path: &Path) -> Result<Vec<u8>, DocumentError> {
    fs::read(path).map_err(|e| DocumentError::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))
}

fn load_network(path: &Path) -> Result<Network, DocumentError> {
    parse_network(&read(path)?)
}

fn check(network: &Path, out: &mut dyn Write) -> Result<(), DocumentError> {
    let network = load_network(network)?;
    let report = check_contraction(&network);
    writeln!(out, "{report}")?;
    for (claim, sum) in &report.offending_claims {
        writeln!(out, "offending: {} (column sum {sum})", claim.describe(&network))?;
    }
    Ok(())
}

fn fmt_value(x: f64, precise: bool) -> String {
    if precise {
        x.to_string()
    } else {
        format!("{x:.2}")
    }
}

fn solve(
    network: &Path,
    prices: &Path,
    tol: f64,
    max_iter: usize,
    precise: bool,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> Result<(), DocumentError> {
    let network = load_network(network)?;
    let prices = parse_prices(&read(prices)?, &network)?;
    let config = SolverConfig {
        tolerance: tol,
        max_iterations: max_iter,
        ..Default::default()
    };
    let (state, diag) = match solve_equilibrium(&network, &prices, &config) {
        Ok(solved) => solved,
        Err(e @ SolveError::NoConvergence { .. }) => {
            if let SolveError::NoConvergence { diagnostics, .. } = &e {
                writeln!(err, "guaranteed_unique: {}", diagnostics.guaranteed_unique)?;
            }
            return Err(e.into());
        }
        Err(e) => return Err(e.into()),
    };
    let equities: Vec<String> = state.equity.iter().map(|&e| fmt_value(e, precise)).collect();
    writeln!(out, "e = {}", equities.join(", "))?;
    for (firm, (e, d)) in network.firms().iter().zip(state.equity.iter().zip(&state.debt)) {
        let debt: Vec<String> = d.iter().map(|&x| fmt_value(x, precise)).collect();
        writeln!(
            out,
            "{}: equity {}, debt [{}]",
            firm.name,
            fmt_value(*e, precise),
            debt.join(", ")
        )?;
    }
    let estimate = diag
        .contraction_estimate
        .map_or_else(|| "n/a".to_string(), |r| format!("{r:.6}"));
    writeln!(
        err,
        "iterations: {}, final_residual: {:e}, contraction_estimate: {estimate}, guaranteed_unique: {}",
        diag.iterations, diag.final_residual, diag.guaranteed_unique
    )?;
    Ok(())
}

fn run_simulation(
    network: &Path,
    scenario: &Path,
    out_path: Option<&Path>,
    format: Format,
    round_2: bool,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> Result<(), DocumentError> {
    let network = load_network(network)?;
    let scenario = parse_scenario(&read(scenario)?, &network)?;
    let trajectory = simulate(&network, &scenario)?;
    let format = match format {
        Format::Csv => OutputFormat::Csv,
        Format::Json => OutputFormat::Json,
    };
    let bytes = emit_trajectory(&trajectory, &network, format, round_2)?;
    match out_path {
        Some(path) => fs::write(path, &bytes)?,
        None => out.write_all(&bytes)?,
    }

    let classification = trajectory
        .classification
        .map_or_else(|| "unclassified".to_string(), |c| c.to_string());
    writeln!(err, "classification: {classification}")?;
    if let Some(t) = trajectory.halted_at {
        writeln!(err, "halted at t = {t}: values exceeded the divergence cutoff")?;
    } else {
        // The summary is best effort; a non-convergent final equilibrium
        // does not invalidate the trajectory already written.
        match limit_gap(&trajectory, &network, &scenario, &SolverConfig::default()) {
            Ok(gaps) => writeln!(
                err,
                "gap to final equilibrium at t = {}: {:.6}",
                scenario.horizon(),
                gaps.last().copied().unwrap_or(0.0)
            )?,
            Err(e) => writeln!(err, "final equilibrium unavailable: {e}")?,
        }
    }
    Ok(())
}
