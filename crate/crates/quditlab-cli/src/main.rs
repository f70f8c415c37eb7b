//! Command-line front end: run experiment sweeps, fit decay curves,
//! emit CSV tables and companion gnuplot scripts.
//!
//! Exit codes: 0 success, 2 configuration error, 3 numerical failure.

mod output;
mod validate;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use quditlab::experiments::{has_errors, run, ExperimentSpec, Family};
use quditlab::fit::{fit, FidelitySeries};
use quditlab::ErrorModelKind;

#[derive(Parser)]
#[command(
    name = "quditlab",
    about = "Qudit-embedded logical qubit decoherence experiments",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct SweepArgs {
    /// Error model: z | xprime | xprime-plus-z
    #[arg(long, value_parser = parse_model)]
    model: Option<ErrorModelKind>,

    /// Qudit dimensions to sweep
    #[arg(long = "d", num_args = 1.., value_name = "D")]
    d_values: Option<Vec<usize>>,

    /// Error probability per step
    #[arg(long)]
    p: Option<f64>,

    /// Number of map applications
    #[arg(long)]
    steps: Option<usize>,

    /// Logical levels as "l0 l1" (default: maximally polarized 0, d-1)
    #[arg(long, num_args = 2, value_name = "LEVEL")]
    levels: Option<Vec<usize>>,

    /// Seed for trajectory sampling
    #[arg(long)]
    seed: Option<u64>,

    /// Worker threads (default: logical cores)
    #[arg(long)]
    jobs: Option<usize>,

    /// Base config JSON mirroring the experiment spec; flags override it
    #[arg(long)]
    config: Option<PathBuf>,

    /// Output CSV path
    #[arg(long, value_name = "FILE")]
    out: PathBuf,

    /// Also emit a companion gnuplot script next to the CSV
    #[arg(long)]
    plot: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Process-fidelity decay curves (per-d, per-l1 or shifted-pair sweeps)
    Fidelity {
        #[command(flatten)]
        sweep: SweepArgs,
        /// vs-d | vs-l1 | shifted-pair
        #[arg(long, default_value = "vs-d")]
        family: String,
    },
    /// Entropy production of total/encoding/non-encoding subspaces
    Entropy {
        #[command(flatten)]
        sweep: SweepArgs,
    },
    /// Kohlrausch fits of per-d fidelity curves from a CSV
    Fit {
        /// Input CSV produced by the fidelity subcommand
        #[arg(long = "in", value_name = "FILE")]
        input: PathBuf,
        /// Output CSV (columns d,b,tau,alpha)
        #[arg(long, value_name = "FILE")]
        out: PathBuf,
    },
    /// With/without-QEC comparison over an error-probability grid
    Qec {
        #[command(flatten)]
        sweep: SweepArgs,
        /// Storage times tau
        #[arg(long, num_args = 1.., value_name = "TAU")]
        taus: Option<Vec<usize>>,
        /// Number of log-spaced grid points in p
        #[arg(long)]
        p_points: Option<usize>,
        /// Trajectory count for registers above the dense cap
        #[arg(long)]
        trajectories: Option<usize>,
    },
    /// Built-in analytic self-checks; prints PASS/FAIL per check
    Validate,
}

fn parse_model(s: &str) -> Result<ErrorModelKind, String> {
    s.parse().map_err(|e| format!("{e}"))
}

enum CliError {
    Config(String),
    Numerical(String),
}

impl CliError {
    fn report(self) -> ExitCode {
        match self {
            CliError::Config(msg) => {
                eprintln!("quditlab: configuration error: {msg}");
                ExitCode::from(2)
            }
            CliError::Numerical(msg) => {
                eprintln!("quditlab: numerical failure: {msg}");
                ExitCode::from(3)
            }
        }
    }
}

fn load_base_spec(
    config: &Option<PathBuf>,
    family: Family,
    model: ErrorModelKind,
) -> Result<ExperimentSpec, CliError> {
    match config {
        None => Ok(ExperimentSpec::new(family, model)),
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
            serde_json::from_str(&text)
                .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
        }
    }
}

/// Applies explicit flags over the base spec (flags take precedence).
fn apply_flags(spec: &mut ExperimentSpec, sweep: &SweepArgs) -> Result<(), CliError> {
    if let Some(m) = sweep.model {
        spec.model = m;
    }
    if let Some(ds) = &sweep.d_values {
        spec.d_values = ds.clone();
    }
    if let Some(p) = sweep.p {
        if !(0.0..=1.0).contains(&p) {
            return Err(CliError::Config(format!("--p {p} outside [0, 1]")));
        }
        spec.p = p;
    }
    if let Some(s) = sweep.steps {
        spec.steps = s;
    }
    if let Some(levels) = &sweep.levels {
        spec.levels = Some((levels[0], levels[1]));
    }
    if let Some(seed) = sweep.seed {
        spec.seed = seed;
    }
    Ok(())
}

fn configure_jobs(jobs: Option<usize>) -> Result<(), CliError> {
    if let Some(n) = jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build_global()
            .map_err(|e| CliError::Config(format!("--jobs: {e}")))?;
    }
    Ok(())
}

fn run_sweep(spec: &ExperimentSpec, sweep: &SweepArgs) -> Result<(), CliError> {
    let rows = run(spec);
    output::write_rows_csv(&sweep.out, spec, &rows)
        .map_err(|e| CliError::Config(format!("{}: {e}", sweep.out.display())))?;
    if sweep.plot {
        let gp = sweep.out.with_extension("gp");
        output::write_gnuplot(&gp, spec, &sweep.out)
            .map_err(|e| CliError::Config(format!("{}: {e}", gp.display())))?;
    }
    if has_errors(&rows) {
        return Err(CliError::Numerical(
            "one or more sweep cells failed; see error rows and stderr".into(),
        ));
    }
    println!("wrote {} rows to {}", rows.len(), sweep.out.display());
    Ok(())
}

fn cmd_fidelity(sweep: SweepArgs, family: String) -> Result<(), CliError> {
    let family = match family.as_str() {
        "vs-d" => Family::FidelityVsD,
        "vs-l1" => Family::FidelityVsL1,
        "shifted-pair" => Family::FidelityShiftedPair,
        other => {
            return Err(CliError::Config(format!(
                "unknown fidelity family '{other}' (vs-d | vs-l1 | shifted-pair)"
            )))
        }
    };
    configure_jobs(sweep.jobs)?;
    let mut spec = load_base_spec(&sweep.config, family, ErrorModelKind::XPrime)?;
    spec.family = family;
    apply_flags(&mut spec, &sweep)?;
    run_sweep(&spec, &sweep)
}

fn cmd_entropy(sweep: SweepArgs) -> Result<(), CliError> {
    configure_jobs(sweep.jobs)?;
    let mut spec = load_base_spec(&sweep.config, Family::EntropyVsD, ErrorModelKind::Z)?;
    spec.family = Family::EntropyVsD;
    apply_flags(&mut spec, &sweep)?;
    if sweep.steps.is_none() && sweep.config.is_none() {
        spec.steps = 200;
    }
    run_sweep(&spec, &sweep)
}

fn cmd_qec(
    sweep: SweepArgs,
    taus: Option<Vec<usize>>,
    p_points: Option<usize>,
    trajectories: Option<usize>,
) -> Result<(), CliError> {
    configure_jobs(sweep.jobs)?;
    let mut spec = load_base_spec(&sweep.config, Family::QecCompare, ErrorModelKind::Z)?;
    spec.family = Family::QecCompare;
    if sweep.d_values.is_none() && sweep.config.is_none() {
        spec.d_values = vec![3];
    }
    apply_flags(&mut spec, &sweep)?;
    if let Some(taus) = taus {
        spec.taus = taus;
    }
    if let Some(n) = p_points {
        spec.p_grid_points = n;
    }
    if let Some(n) = trajectories {
        spec.trajectories = n;
    }
    run_sweep(&spec, &sweep)
}

fn cmd_fit(input: PathBuf, out: PathBuf) -> Result<(), CliError> {
    let text = std::fs::read_to_string(&input)
        .map_err(|e| CliError::Config(format!("{}: {e}", input.display())))?;
    let curves = output::read_fidelity_curves(&text)
        .map_err(|e| CliError::Config(format!("{}: {e}", input.display())))?;
    if curves.is_empty() {
        return Err(CliError::Config(format!(
            "{}: no process_fidelity rows found",
            input.display()
        )));
    }
    let mut lines = vec!["d,b,tau,alpha".to_string()];
    for (d, series) in curves {
        let series = FidelitySeries::new(series.0, series.1)
            .map_err(|e| CliError::Numerical(format!("d={d}: {e}")))?;
        let k = fit(&series).map_err(|e| CliError::Numerical(format!("d={d}: {e}")))?;
        lines.push(format!(
            "{d},{},{},{}",
            output::fmt_value(k.b),
            output::fmt_value(k.tau),
            output::fmt_value(k.alpha)
        ));
        if !k.converged {
            eprintln!("quditlab: warning: fit for d={d} did not meet the convergence tolerance");
        }
    }
    std::fs::write(&out, lines.join("\n") + "\n")
        .map_err(|e| CliError::Config(format!("{}: {e}", out.display())))?;
    println!("wrote {} fits to {}", lines.len() - 1, out.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Fidelity { sweep, family } => cmd_fidelity(sweep, family),
        Command::Entropy { sweep } => cmd_entropy(sweep),
        Command::Qec {
            sweep,
            taus,
            p_points,
            trajectories,
        } => cmd_qec(sweep, taus, p_points, trajectories),
        Command::Fit { input, out } => cmd_fit(input, out),
        Command::Validate => {
            return if validate::run_all() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(3)
            }
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => e.report(),
    }
}
