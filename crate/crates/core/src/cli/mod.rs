//! Command-line front end.
//!
//! Every run is described by a flat [`RunConfig`]. Values come from an
//! optional JSON file (`--config`), then from flags, and the effective config
//! is echoed into the run's `meta.json` so that feeding that file back with
//! `--config` repeats the run.

mod commands;
mod config;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub use commands::{dispatch, Outcome};
pub use config::{Command, RunConfig, DEFAULT_OUT};

use crate::harness::Norm;
use crate::spectral::{Stepper, TimeStep};
use crate::{Error, Result};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 1;
pub const EXIT_SOLVER: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "hyperbolize", version, about = "First-order relaxations of high-order evolution equations")]
struct Cli {
    #[command(subcommand)]
    command: Option<CommandArg>,
    /// JSON config; a meta.json from an earlier run is accepted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Suppress progress output on stderr.
    #[arg(long, global = true)]
    quiet: bool,
    #[command(flatten)]
    flags: Flags,
}

#[derive(Debug, Subcommand)]
enum CommandArg {
    /// Print the relaxation system as JSON.
    Hyperbolize,
    /// Dispersion branches over a wavenumber grid.
    Dispersion,
    /// Stability census over signed permutations.
    Census,
    /// Run one solve and write snapshots.
    Solve,
    /// Error against the reference for a ladder of relaxation times.
    Converge,
    /// Regenerate a preset bundle.
    Reproduce {
        /// heat, kdv, nls, ch, ks-solution or ks-error.
        preset: Option<String>,
    },
}

#[derive(Debug, Default, Args)]
struct Flags {
    /// Model: heat, linear-kdv, kdv, nls, ch, ks or linear (default)
    #[arg(long, global = true)]
    model: Option<String>,
    /// Derivative order of a general linear model
    #[arg(long, global = true)]
    m: Option<usize>,
    /// Largest order for census
    #[arg(long, global = true)]
    m_max: Option<usize>,
    /// Sign of the highest-order term
    #[arg(long, global = true, allow_hyphen_values = true)]
    sigma0: Option<i8>,
    /// Lower-order coefficients, comma separated
    #[arg(long, global = true, value_delimiter = ',', allow_hyphen_values = true)]
    alpha: Option<Vec<f64>>,
    /// NLS nonlinearity
    #[arg(long, global = true, allow_hyphen_values = true)]
    kappa: Option<f64>,
    /// Relaxation time
    #[arg(long, global = true)]
    tau: Option<f64>,
    /// Descending relaxation times for converge
    #[arg(long, global = true, value_delimiter = ',')]
    taus: Option<Vec<f64>>,
    /// Single wavenumber
    #[arg(long, global = true, allow_hyphen_values = true)]
    k: Option<f64>,
    #[arg(long, global = true)]
    k_min: Option<f64>,
    #[arg(long, global = true)]
    k_max: Option<f64>,
    /// Magnitudes per sign between k-min and k-max
    #[arg(long, global = true)]
    k_count: Option<usize>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    x_left: Option<f64>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    x_right: Option<f64>,
    /// Grid nodes (even)
    #[arg(long, global = true)]
    n: Option<usize>,
    /// Solve the relaxation instead of the original
    #[arg(long, global = true, num_args = 0..=1, default_missing_value = "true")]
    hyperbolized: Option<bool>,
    /// ssprk33, rk4 or imex
    #[arg(long, global = true)]
    stepper: Option<Stepper>,
    /// Stepper for the original model in converge
    #[arg(long, global = true)]
    original_stepper: Option<Stepper>,
    /// Fixed step or auto
    #[arg(long, global = true)]
    dt: Option<TimeStep>,
    /// Final time
    #[arg(long = "T", visible_alias = "t-final", global = true)]
    t_final: Option<f64>,
    #[arg(long, global = true, value_delimiter = ',')]
    snapshot_times: Option<Vec<f64>>,
    /// gaussian, nls-soliton, ch-pulse or mode
    #[arg(long, global = true)]
    initial: Option<String>,
    #[arg(long, global = true)]
    soliton_alpha: Option<f64>,
    /// Apply the 2/3 rule to nonlinear terms
    #[arg(long, global = true, num_args = 0..=1, default_missing_value = "true")]
    dealias: Option<bool>,
    /// linf or l2
    #[arg(long, global = true)]
    norm: Option<Norm>,
    #[arg(long, global = true)]
    preset: Option<String>,
    /// Output directory [default: out]
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

impl Flags {
    fn into_config(self, command: Option<Command>) -> RunConfig {
        RunConfig {
            command,
            model: self.model,
            m: self.m,
            m_max: self.m_max,
            sigma0: self.sigma0,
            alpha: self.alpha,
            kappa: self.kappa,
            tau: self.tau,
            taus: self.taus,
            k: self.k,
            k_min: self.k_min,
            k_max: self.k_max,
            k_count: self.k_count,
            x_left: self.x_left,
            x_right: self.x_right,
            n: self.n,
            hyperbolized: self.hyperbolized,
            stepper: self.stepper,
            original_stepper: self.original_stepper,
            dt: self.dt,
            t_final: self.t_final,
            snapshot_times: self.snapshot_times,
            initial: self.initial,
            soliton_alpha: self.soliton_alpha,
            dealias: self.dealias,
            norm: self.norm,
            preset: self.preset,
            out: self.out,
        }
    }
}

fn effective_config(cli: Cli) -> Result<RunConfig> {
    let (command, positional) = match cli.command {
        None => (None, None),
        Some(CommandArg::Hyperbolize) => (Some(Command::Hyperbolize), None),
        Some(CommandArg::Dispersion) => (Some(Command::Dispersion), None),
        Some(CommandArg::Census) => (Some(Command::Census), None),
        Some(CommandArg::Solve) => (Some(Command::Solve), None),
        Some(CommandArg::Converge) => (Some(Command::Converge), None),
        Some(CommandArg::Reproduce { preset }) => (Some(Command::Reproduce), preset),
    };
    let mut flags = cli.flags.into_config(command);
    if positional.is_some() {
        flags.preset = positional;
    }
    let file = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            RunConfig::from_json_str(&text).map_err(|e| Error::InvalidConfig(format!("{}: {e}", path.display())))?
        }
        None => RunConfig::default(),
    };
    file.merged(&flags)
}

pub fn exit_code(err: &Error) -> i32 {
    if err.is_solver_failure() {
        EXIT_SOLVER
    } else {
        EXIT_INVALID
    }
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_INVALID } else { EXIT_OK };
        }
    };
    let quiet = cli.quiet;
    let result = effective_config(cli).and_then(|cfg| dispatch(&cfg));
    match result {
        Ok(outcome) => {
            if let Some(stdout) = &outcome.stdout {
                println!("{stdout}");
            }
            if !quiet {
                for path in &outcome.written {
                    eprintln!("wrote {}", path.display());
                }
            }
            EXIT_OK
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
