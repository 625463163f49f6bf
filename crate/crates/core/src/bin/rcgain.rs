use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use rcgain::estimator::PowerIterationConfig;
use rcgain::harness;
use rcgain::lti::read_system_spec;
use rcgain::Error;

#[derive(Parser)]
#[command(name = "rcgain", version, about = "Reset-free data-driven H-infinity norm estimation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Circulant structure and spectra for one batch length.
    Analyze {
        #[arg(long)]
        system: PathBuf,
        #[arg(long, default_value_t = 50)]
        n: usize,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Reset-free vs reset-based estimates along N = n_start * 2^k.
    Sweep {
        #[arg(long)]
        system: PathBuf,
        #[arg(long, default_value_t = 8)]
        n_start: usize,
        #[arg(long, default_value_t = 8)]
        n_doublings: u32,
        /// Frequency grid for the reference column.
        #[arg(long, default_value_t = harness::SWEEP_ORACLE_GRID)]
        grid: usize,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Run the reset-free power iteration against a simulated plant.
    Estimate {
        #[arg(long)]
        system: PathBuf,
        #[arg(long, default_value_t = 50)]
        n: usize,
        #[arg(long, default_value_t = 10)]
        n_update: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, allow_negative_numbers = true)]
        shift: Option<f64>,
        /// Use the transient-free plant `y = M u`.
        #[arg(long)]
        ideal_plant: bool,
        #[arg(long, default_value_t = 1000)]
        max_updates: usize,
        /// Stop when |beta_j - beta_{j-1}| falls below this.
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Dense frequency-grid H-infinity norm.
    Oracle {
        #[arg(long)]
        system: PathBuf,
        #[arg(long, default_value_t = 4096)]
        grid: usize,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
}

fn run(cli: Cli) -> Result<ExitCode, Error> {
    match cli.command {
        Command::Analyze { system, n, out } => {
            let report = harness::analyze(&read_system_spec(&system)?, n)?;
            harness::write_analyze(&report, &out)?;
            println!("N = {n}");
            println!("reset-free lambda_max = {} (bin {})", report.reset_free_max, report.reset_free_bin);
            println!("max |lambda_m|        = {}", report.max_abs_lambda);
            println!("reset-based lambda_max = {}", report.reset_based_max);
            println!("max off-diagonal of F*MF = {:e}", report.max_off_diag);
            if report.j_is_zero {
                println!("J = 0: the reset-based iteration sees no output at this N");
            }
        }
        Command::Sweep { system, n_start, n_doublings, grid, out } => {
            let schedule = harness::doubling_schedule(n_start, n_doublings)?;
            let result = harness::sweep(&read_system_spec(&system)?, &schedule, grid)?;
            harness::write_sweep(&result, &out)?;
            harness::print_sweep(&result, std::io::stdout().lock())?;
        }
        Command::Estimate { system, n, n_update, seed, shift, ideal_plant, max_updates, tol, out } => {
            let mut config = PowerIterationConfig::new(n);
            config.n_update = n_update;
            config.seed = seed;
            config.shift = shift;
            config.max_updates = max_updates;
            config.convergence_tol = tol.unwrap_or(if ideal_plant {
                rcgain::estimator::IDEAL_PLANT_TOL
            } else {
                rcgain::estimator::TRANSIENT_PLANT_TOL
            });
            let outcome = harness::estimate(&read_system_spec(&system)?, &config, ideal_plant)?;
            harness::write_estimate(&outcome, &out)?;
            let trace = &outcome.trace;
            println!("estimate  = {}", trace.estimate);
            println!("reference = {}", outcome.reference);
            println!("shift = {}, updates = {}", trace.shift, trace.updates.len());
            println!("final input bin = {}, peak bin = {}", outcome.final_input_bin, outcome.peak_bin);
            if !trace.converged {
                eprintln!("rcgain: no convergence after {} updates", trace.updates.len());
                return Ok(ExitCode::from(2));
            }
        }
        Command::Oracle { system, grid, out } => {
            let report = harness::oracle(&read_system_spec(&system)?, grid)?;
            harness::write_oracle(&report, &out)?;
            println!("||P||inf = {} at omega = {}", report.peak.value, report.peak.omega);
            if let Some((mag, angle)) = report.dominant_pole {
                println!("dominant pole: |p| = {mag}, angle = {angle}");
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("rcgain: {e}");
            match e {
                Error::NonConvergence(_) => ExitCode::from(2),
                _ => ExitCode::from(1),
            }
        }
    }
}
