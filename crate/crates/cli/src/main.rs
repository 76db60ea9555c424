//! Experiment runner for the torusns library.
//!
//! One JSON config per run, plain CSV outputs with a one-line header plus
//! JSON sidecar metadata, all embedding the normalization conventions.
//! Exit codes: 0 pass, 1 bound violation (falsification), 2 numerical
//! non-convergence, 3 config error.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::output::OutDir;

#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    pub fn violation(msg: &str) -> Self {
        Self { code: 1, message: msg.into() }
    }

    pub fn nonconverged(msg: &str) -> Self {
        Self { code: 2, message: msg.into() }
    }

    pub fn config(msg: &str) -> Self {
        Self { code: 3, message: msg.into() }
    }

    pub fn io(msg: &str) -> Self {
        Self { code: 3, message: msg.into() }
    }
}

#[derive(Parser)]
#[command(
    name = "torusns",
    version,
    about = "Pseudo-spectral 2D periodic Navier-Stokes experiments: kernel bounds, \
             Lorentz norm sweeps, mild-solution simulation, smoothing profiles and \
             short-time L2 stability campaigns",
    after_help = "Exit codes: 0 pass, 1 bound violation, 2 numerical non-convergence, 3 config error."
)]
struct Cli {
    /// JSON run configuration (command-specific; defaults apply when omitted).
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory for CSV/JSON artifacts.
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,

    /// Worker threads for parallel sections (0 = automatic).
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,

    /// Override the config seed.
    #[arg(long, global = true)]
    seed: Option<u64>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// L1/Linf norm profile of the periodic Oseen-type kernel and the
    /// empirical constant C_hat.
    ///
    /// Writes kernel_profile.csv with columns
    /// t,n,l1,linf,sqrt_t_l1,t32_linf,converged and kernel_bounds.json.
    /// Exits 2 when an entry fails to grid-converge at the requested
    /// tolerance.
    KernelBounds,
    /// Seeded Lorentz-norm corpus sweep: embedding ratios and the weak-type
    /// product estimate.
    ///
    /// Writes lorentz_corpus.csv with columns field_id,p,r,norm,ratio,bound,pass
    /// and lorentz_summary.json. Exits 1 on any inequality violation.
    Lorentz,
    /// Evolve an initial-data preset under the mild formulation.
    ///
    /// Writes trajectory.csv with columns t,l2,linf,energy, optional binary
    /// state dumps, and simulate_summary.json. Exits 2 on solver
    /// non-convergence, 1 on a trajectory invariant violation.
    Simulate,
    /// Restart-smoothing profile M(delta) over a log-spaced delta list with
    /// a least-squares log-log slope fit.
    ///
    /// Writes smoothing.csv with columns delta,m_delta and
    /// smoothing_summary.json. Exits 1 when monotonicity or the expected
    /// slope range fails.
    Smoothing,
    /// Seeded short-time L2 stability campaign with auto-shrunk windows.
    ///
    /// Writes campaign.csv with columns
    /// seed,t0,delta,eps,c_hat,m_delta,kappa,w0,sup_w,bound,margin,pass,
    /// per-trial JSON reports, and stability_summary.json. Exits 1 on a
    /// bound violation, 2 on delta underflow or a non-converged C_hat.
    Stability,
    /// Quick end-to-end sanity checks across all modules.
    Selftest,
}

fn run(cli: &Cli) -> Result<(), Failure> {
    if cli.threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cli.threads)
            .build_global()
            .map_err(|e| Failure::config(&format!("--threads: {e}")))?;
    }
    let config_path = cli.config.as_deref();
    match cli.command {
        Command::KernelBounds => {
            let cfg: config::KernelBoundsConfig = config::load(config_path)?;
            cfg.times()?;
            let mut out = OutDir::new(&cli.out)?;
            commands::write_effective_config(&mut out, &cfg, "run_config.json")?;
            commands::kernel_bounds(&cfg, &mut out)?;
            println!("{}", commands::outputs_line(&out, &cli.out));
            Ok(())
        }
        Command::Lorentz => {
            let cfg: config::LorentzConfig = config::load(config_path)?;
            cfg.validate()?;
            let mut out = OutDir::new(&cli.out)?;
            commands::write_effective_config(&mut out, &cfg, "run_config.json")?;
            commands::lorentz(&cfg, &mut out, cli.seed)?;
            println!("{}", commands::outputs_line(&out, &cli.out));
            Ok(())
        }
        Command::Simulate => {
            let cfg: config::SimulateConfig = config::load(config_path)?;
            cfg.validate()?;
            let mut out = OutDir::new(&cli.out)?;
            commands::write_effective_config(&mut out, &cfg, "run_config.json")?;
            commands::simulate(&cfg, &mut out, cli.seed)?;
            println!("{}", commands::outputs_line(&out, &cli.out));
            Ok(())
        }
        Command::Smoothing => {
            let cfg: config::SmoothingConfig = config::load(config_path)?;
            cfg.validate()?;
            let mut out = OutDir::new(&cli.out)?;
            commands::write_effective_config(&mut out, &cfg, "run_config.json")?;
            commands::smoothing(&cfg, &mut out, cli.seed)?;
            println!("{}", commands::outputs_line(&out, &cli.out));
            Ok(())
        }
        Command::Stability => {
            let cfg: config::StabilityCliConfig = config::load(config_path)?;
            cfg.validate()?;
            let mut out = OutDir::new(&cli.out)?;
            commands::write_effective_config(&mut out, &cfg, "run_config.json")?;
            commands::stability(&cfg, &mut out, cli.seed)?;
            println!("{}", commands::outputs_line(&out, &cli.out));
            Ok(())
        }
        Command::Selftest => commands::selftest(),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
