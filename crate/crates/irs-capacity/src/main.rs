use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use irs_capacity::experiment::{
    capacity_csv, capacity_rows, pdf_csv, pdf_rows, phases_csv, run_optimize, run_sweep, sweep_csv, sweep_svg,
    trace_csv, ExperimentConfig,
};
use irs_capacity::optimizer::Termination;
use irs_capacity::Error;

/// Thread-count override for the worker pool.
const THREADS_ENV: &str = "IRS_CAPACITY_THREADS";

#[derive(Parser)]
#[command(name = "irs-capacity", version, about = "Ergodic capacity of IRS-assisted MIMO links")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Marginal eigenvalue density on a grid.
    Pdf(Common),
    /// Analytic capacity next to its Monte-Carlo estimate, one row per SNR.
    Capacity(Common),
    /// Phase optimisation trace; final phases go to a companion file.
    Optimize(Common),
    /// Capacity of each series along the configured sweep axis.
    Sweep(Common),
}

#[derive(Args)]
struct Common {
    /// JSON configuration; defaults apply to every missing field.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// CSV destination; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// SVG chart destination (sweep only).
    #[arg(long)]
    svg: Option<PathBuf>,
    /// Monte-Carlo trials.
    #[arg(long)]
    trials: Option<usize>,
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_) | Error::Domain(_) => 2,
        Error::Numerical(_) | Error::Quadrature { .. } | Error::Io(_) => 4,
    }
}

/// A stall is reported as exit 3 after the trace is written; hitting
/// `max_iters` is only a warning.
fn termination_code(t: Termination) -> u8 {
    match t {
        Termination::Stalled => 3,
        Termination::Converged | Termination::MaxIterations => 0,
    }
}

fn load(c: &Common) -> Result<ExperimentConfig, Error> {
    let mut cfg = match &c.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    if let Some(s) = c.seed {
        cfg.mc.seed = s;
    }
    if let Some(t) = c.trials {
        cfg.mc.trials = t;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn emit(text: &str, path: Option<&Path>) -> Result<(), Error> {
    match path {
        Some(p) => std::fs::write(p, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn out_path(c: &Common, fallback: &Option<String>) -> Option<PathBuf> {
    c.out.clone().or_else(|| fallback.as_ref().map(PathBuf::from))
}

/// `trace.csv` becomes `trace.phases.csv`.
fn phases_path(out: &Path) -> PathBuf {
    out.with_extension("phases.csv")
}

fn run(cli: Cli) -> Result<u8, Error> {
    match cli.command {
        Command::Pdf(c) => {
            let cfg = load(&c)?;
            emit(&pdf_csv(&pdf_rows(&cfg)?), out_path(&c, &cfg.output.csv).as_deref())?;
        }
        Command::Capacity(c) => {
            let cfg = load(&c)?;
            emit(&capacity_csv(&capacity_rows(&cfg)?), out_path(&c, &cfg.output.csv).as_deref())?;
        }
        Command::Optimize(c) => {
            let cfg = load(&c)?;
            let outcome = run_optimize(&cfg)?;
            let out = out_path(&c, &cfg.output.csv);
            emit(&trace_csv(&outcome), out.as_deref())?;
            let phases = cfg.output.phases.as_ref().map(PathBuf::from).or_else(|| out.as_deref().map(phases_path));
            match phases {
                Some(p) => emit(&phases_csv(&outcome.phases), Some(&p))?,
                None => eprint!("{}", phases_csv(&outcome.phases)),
            }
            match outcome.termination {
                Termination::Stalled => {
                    eprintln!("irs-capacity: line search stalled at iteration {}", outcome.trace.len() - 1)
                }
                Termination::MaxIterations => {
                    eprintln!("irs-capacity: stopped at max_iters = {} before the gradient tolerance", cfg.optimizer.max_iters)
                }
                Termination::Converged => {}
            }
            return Ok(termination_code(outcome.termination));
        }
        Command::Sweep(c) => {
            let cfg = load(&c)?;
            let points = run_sweep(&cfg)?;
            emit(&sweep_csv(&points), out_path(&c, &cfg.output.csv).as_deref())?;
            if let Some(p) = c.svg.clone().or_else(|| cfg.output.svg.as_ref().map(PathBuf::from)) {
                emit(&sweep_svg(&cfg, &points), Some(&p))?;
            }
        }
    }
    Ok(0)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if let Some(n) = std::env::var(THREADS_ENV).ok().and_then(|v| v.parse::<usize>().ok()) {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("irs-capacity: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes() {
        assert_eq!(termination_code(Termination::Stalled), 3);
        assert_eq!(termination_code(Termination::Converged), 0);
        assert_eq!(termination_code(Termination::MaxIterations), 0);
        assert_eq!(exit_code(&Error::Config("x".into())), 2);
        assert_eq!(exit_code(&Error::Domain("x".into())), 2);
        assert_eq!(exit_code(&Error::Numerical("x".into())), 4);
        assert_eq!(exit_code(&Error::Quadrature { estimate: 0.0, error_estimate: 1.0 }), 4);
    }

    #[test]
    fn phases_file_sits_next_to_the_trace() {
        assert_eq!(phases_path(Path::new("out/trace.csv")), PathBuf::from("out/trace.phases.csv"));
    }
}
