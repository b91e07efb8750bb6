//! Command-line front end.
//!
//! Exit status: 0 on success, 2 for configuration and input errors, 3 when
//! the integrator aborts.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use euler_alpha::io::{self, CompareOptions, RunConfig, VortexConfig};
use euler_alpha::{Error, Result};

#[derive(Parser)]
#[command(name = "euler-alpha", version, about = "Forced-dissipative averaged Euler turbulence and vortex blobs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RunArgs {
    /// Configuration file with dotted `section.key = value` lines.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory, overriding `output.dir`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Random seed, overriding `run.seed`.
    #[arg(long)]
    seed: Option<u64>,
}

impl RunArgs {
    fn load(&self) -> Result<RunConfig> {
        let mut config = match &self.config {
            Some(path) => RunConfig::from_path(path)?,
            None => RunConfig::default(),
        };
        if let Some(out) = &self.out {
            config.output.dir = out.clone();
        }
        if let Some(seed) = self.seed {
            config.run.seed = seed;
        }
        config.validate()?;
        Ok(config)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Integrate one configuration, writing series, spectra and checkpoints.
    Run {
        #[command(flatten)]
        args: RunArgs,
        /// Continue from this checkpoint.
        #[arg(long)]
        resume: Option<PathBuf>,
    },
    /// Time-average the spectrum snapshots of a run directory.
    Spectrum {
        /// Run directory.
        #[arg(long)]
        dir: PathBuf,
        #[arg(long, default_value_t = 5.0)]
        t_lo: f64,
        #[arg(long, default_value_t = 20.0)]
        t_hi: f64,
        /// Output CSV, default `<dir>/spectrum_avg.csv`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Fit a power law to a spectrum file over a shell range.
    Slope {
        /// `k,E` spectrum file.
        file: PathBuf,
        #[arg(long)]
        k_lo: usize,
        #[arg(long)]
        k_hi: usize,
    },
    /// Repeat a run at reduced resolution and compare spectra.
    CompareResolution {
        #[command(flatten)]
        args: RunArgs,
        /// Grid fractions of the full resolution.
        #[arg(long, value_delimiter = ',', default_values_t = [0.75, 0.5])]
        fractions: Vec<f64>,
        #[arg(long, default_value_t = 5.0)]
        t_lo: f64,
        #[arg(long, default_value_t = 20.0)]
        t_hi: f64,
        /// First shell of the summarised deviation range.
        #[arg(long, default_value_t = 14)]
        k_lo: usize,
        /// Last shell, default the smallest resolved k_max.
        #[arg(long)]
        k_hi: Option<usize>,
    },
    /// Evolve a vortex-blob system and report invariant drift.
    Vortex {
        /// Blob configuration (`vortex.*` and `output.dir` keys).
        #[arg(long)]
        config: PathBuf,
        /// Output directory, overriding `output.dir`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run { args, resume } => {
            let config = args.load()?;
            let summary = io::run(&config, resume.as_deref())?;
            let r = summary.last;
            println!(
                "t = {}  E = {:e}  Z = {:e}  E_H1 = {:e}  Z_H2 = {:e}  ({} accepted, {} rejected steps)",
                r.t, r.energy, r.enstrophy, r.energy_h1, r.enstrophy_h2, summary.accepted_steps, summary.rejected_steps
            );
            println!("output in {}", summary.dir.display());
        }
        Command::Spectrum { dir, t_lo, t_hi, out } => {
            let (spectrum, path) = io::spectrum_command(&dir, t_lo, t_hi, out.as_deref())?;
            println!("averaged {} shells over [{t_lo}, {t_hi}] into {}", spectrum.k_max(), path.display());
        }
        Command::Slope { file, k_lo, k_hi } => {
            let fit = io::slope_command(&file, k_lo, k_hi)?;
            println!("slope     {}", fit.slope);
            println!("intercept {}", fit.intercept);
            println!("residual  {}", fit.residual);
            println!("shells    {:?}", fit.shells_used);
            if !fit.shells_excluded.is_empty() {
                println!("excluded  {:?}", fit.shells_excluded);
            }
        }
        Command::CompareResolution { args, fractions, t_lo, t_hi, k_lo, k_hi } => {
            let config = args.load()?;
            let options = CompareOptions { fractions, t_lo, t_hi, k_lo, k_hi };
            let report = io::compare_resolution(&config, &options)?;
            println!("full: n = {}  k_max = {}", report.n, report.k_max);
            println!("mean |ln(E_reduced/E_full)| over shells {}..={}", report.k_range.0, report.k_range.1);
            for e in &report.entries {
                println!("  fraction {}  n = {}  k_max = {}  deviation {:.6}", e.fraction, e.n, e.k_max, e.mean_deviation);
            }
        }
        Command::Vortex { config, out } => {
            let mut config = VortexConfig::from_path(&config)?;
            if let Some(out) = out {
                config.output.dir = out;
            }
            let report = io::vortex_command(&config)?;
            println!("{} blobs, {} samples written to {}", report.trajectory.positions.first().map_or(0, Vec::len), report.trajectory.times.len(), report.trajectory_file.display());
            for (name, d) in report.drift {
                println!("  {name:<16} relative drift {d:.3e}");
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let usage = e.use_stderr();
            e.print().ok();
            return ExitCode::from(if usage { 2 } else { 0 });
        }
    };
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    e.exit_code() as u8
}
