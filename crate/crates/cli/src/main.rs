//! Command-line front end: simulation, oracle validation, fitting, and
//! reproduction presets, all deterministic in (command, config, seed).

mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "sqfluor",
    version,
    about = "Fluorescence and reflection spectra of a driven two-level emitter in squeezed vacuum",
    long_about = "Simulate, validate, and fit the spectra of a coherently driven two-level \
                  emitter coupled to broadband squeezed vacuum. Every run is fully determined \
                  by (command, flags, config file, seed). Set SQFLUOR_WORKERS to bound the \
                  number of sweep workers."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct CommonArgs {
    /// Output directory (created if missing).
    #[arg(long, default_value = "out")]
    out_dir: PathBuf,
    /// Seed for every random draw in the run.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Offset unit of emitted traces: `gamma` or `hz`.
    #[arg(long, default_value = "gamma")]
    format: String,
    /// Sampling grid as SPAN:POINTS in units of γ (for example 8:2001).
    #[arg(long)]
    grid: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate a spectral model and write trace files.
    Sim {
        #[command(flatten)]
        common: CommonArgs,
        /// Job description file (TOML); overrides the preset.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Built-in model preset: `vacuum-mollow` or `squeezed-no-drive`.
        #[arg(long)]
        preset: Option<String>,
        /// Rabi amplitude in units of γ.
        #[arg(long)]
        rabi: Option<f64>,
        /// Amplifier power gain in dB.
        #[arg(long)]
        gain_db: Option<f64>,
        /// Overall efficiency diluting the ideal moments.
        #[arg(long)]
        eta: Option<f64>,
        /// Strong-port quantum efficiency.
        #[arg(long)]
        eta_c: Option<f64>,
        /// Squeezing phases in radians (comma separated); one trace each.
        #[arg(long, value_delimiter = ',')]
        phi: Vec<f64>,
        /// Relative noise level of the synthetic traces.
        #[arg(long, default_value_t = 0.0)]
        noise: f64,
    },
    /// Run the analytic-vs-oracle equivalence suite.
    OracleCheck {
        /// Write the report (and a manifest) into this directory.
        #[arg(long)]
        out_dir: Option<PathBuf>,
        /// Seed of the random parameter draw.
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Number of random parameter sets.
        #[arg(long, default_value_t = 50)]
        sets: usize,
        /// Relative L∞ tolerance on the spectrum comparison.
        #[arg(long, default_value_t = 1e-3)]
        tolerance: f64,
        /// Deliberately corrupt a rate sign on the analytic side; the suite
        /// must then fail (harness self-test).
        #[arg(long, hide = true)]
        corrupt_rates: bool,
    },
    /// Fit a model to one or more trace files.
    Fit {
        #[command(flatten)]
        common: CommonArgs,
        /// Job description file (TOML) naming model kind and traces.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Model kind: `no-drive`, `three-lorentzian`, or `full-analytic`.
        #[arg(long)]
        model: Option<String>,
        /// Trace files to fit (repeatable).
        #[arg(long)]
        trace: Vec<PathBuf>,
        /// Total linewidth in hertz, when not carried by the traces.
        #[arg(long)]
        gamma_hz: Option<f64>,
        /// Strong-port quantum efficiency, when not carried by the traces.
        #[arg(long)]
        eta_c: Option<f64>,
        /// Known relative squeezing phases of the traces, radians.
        #[arg(long, value_delimiter = ',')]
        phase_offsets: Vec<f64>,
    },
    /// Synthesize a phase sweep, fit each trace, and summarize linewidths.
    SweepPhase {
        #[command(flatten)]
        common: CommonArgs,
        /// Number of phases spread over [0, π).
        #[arg(long, default_value_t = 13)]
        phases: usize,
        #[arg(long, default_value_t = 1.5)]
        gain_db: f64,
        #[arg(long, default_value_t = 0.55)]
        eta: f64,
        #[arg(long, default_value_t = 0.81)]
        eta_c: f64,
        /// Rabi amplitude in units of γ.
        #[arg(long, default_value_t = 3.947)]
        rabi: f64,
        #[arg(long, default_value_t = 0.01)]
        noise: f64,
        /// Generate from the full reflection model instead of the
        /// three-Lorentzian strong-drive limit.
        #[arg(long)]
        full_model: bool,
    },
    /// Synthesize a gain sweep, fit each trace, and fit the efficiency.
    SweepGain {
        #[command(flatten)]
        common: CommonArgs,
        /// Gain points in dB (comma separated).
        #[arg(long, value_delimiter = ',', default_values_t = vec![0.5, 1.0, 1.5, 2.5, 3.5, 4.5, 5.5, 6.6])]
        gains: Vec<f64>,
        #[arg(long, default_value_t = 0.55)]
        eta: f64,
        #[arg(long, default_value_t = 0.81)]
        eta_c: f64,
        #[arg(long, default_value_t = 0.01)]
        noise: f64,
    },
    /// Reproduce a named measurement configuration end to end.
    Reproduce {
        #[command(flatten)]
        common: CommonArgs,
        /// One of `fig2a`, `fig3`, `fig4`, `fig6`.
        preset: String,
        /// Override the squeezing phases (radians, comma separated).
        #[arg(long, value_delimiter = ',')]
        phi: Vec<f64>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Ok(workers) = std::env::var("SQFLUOR_WORKERS") {
        if let Ok(n) = workers.parse::<usize>() {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
        }
    }
    let result = match cli.command {
        Command::Sim {
            common,
            config,
            preset,
            rabi,
            gain_db,
            eta,
            eta_c,
            phi,
            noise,
        } => commands::sim(commands::SimArgs {
            common,
            config,
            preset,
            rabi,
            gain_db,
            eta,
            eta_c,
            phi,
            noise,
        }),
        Command::OracleCheck {
            out_dir,
            seed,
            sets,
            tolerance,
            corrupt_rates,
        } => commands::oracle_check(out_dir, sets, seed, tolerance, corrupt_rates),
        Command::Fit {
            common,
            config,
            model,
            trace,
            gamma_hz,
            eta_c,
            phase_offsets,
        } => commands::fit(common, config, model, trace, gamma_hz, eta_c, phase_offsets),
        Command::SweepPhase {
            common,
            phases,
            gain_db,
            eta,
            eta_c,
            rabi,
            noise,
            full_model,
        } => commands::sweep_phase(common, phases, gain_db, eta, eta_c, rabi, noise, full_model),
        Command::SweepGain {
            common,
            gains,
            eta,
            eta_c,
            noise,
        } => commands::sweep_gain(common, gains, eta, eta_c, noise),
        Command::Reproduce { common, preset, phi } => commands::reproduce(common, &preset, phi),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(commands::RunError::Config(message)) => {
            eprintln!("error: {message}");
            ExitCode::from(2)
        }
        Err(commands::RunError::Validation(message)) => {
            eprintln!("error: {message}");
            ExitCode::from(1)
        }
    }
}
