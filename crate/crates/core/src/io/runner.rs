//! Forced-dissipative runs with periodic output and checkpoint/resume.

use std::path::{Path, PathBuf};

use log::{info, warn};

use crate::diagnostics::{energies, shell_spectrum, DiagnosticsRecord};
use crate::dynamics::{broadband_noise, initial_condition, Dynamics, ForcingSpec, PhysicsParams};
use crate::error::{Error, Result};
use crate::io::checkpoint::Checkpoint;
use crate::io::config::RunConfig;
use crate::io::files::{self, SeriesWriter, SpectrumIndex, CHECKPOINT_DIR, SERIES_FILE};
use crate::spectral::{GridSpec, Spectral, SpectralField};
use crate::timestepper::{advance, StepController};

pub const CONFIG_FILE: &str = "config.toml";

/// Relative slack when deciding whether a time sits on an output multiple.
const SCHEDULE_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub dir: PathBuf,
    pub last: DiagnosticsRecord,
    pub accepted_steps: usize,
    pub rejected_steps: usize,
    /// True when an identical finished run was found and nothing was computed.
    pub reused: bool,
}

/// Output cadences; targets are integer multiples of each interval.
struct Schedule {
    series: f64,
    spectrum: f64,
    checkpoint: f64,
    t_end: f64,
}

impl Schedule {
    fn new(config: &RunConfig) -> Self {
        Self {
            series: config.output.series_interval,
            spectrum: config.output.spectrum_interval,
            checkpoint: config.output.checkpoint_interval,
            t_end: config.run.t_end,
        }
    }

    fn on_multiple(t: f64, interval: f64) -> bool {
        let x = t / interval;
        (x - x.round()).abs() < SCHEDULE_SLACK
    }

    fn next_multiple(t: f64, interval: f64) -> f64 {
        ((t / interval + SCHEDULE_SLACK).floor() + 1.0) * interval
    }

    fn next_target(&self, t: f64) -> f64 {
        [self.series, self.spectrum, self.checkpoint]
            .into_iter()
            .map(|i| Self::next_multiple(t, i))
            .fold(self.t_end, f64::min)
    }

    fn series_due(&self, t: f64) -> bool {
        Self::on_multiple(t, self.series) || t == self.t_end
    }

    fn spectrum_due(&self, t: f64) -> bool {
        Self::on_multiple(t, self.spectrum)
    }

    fn checkpoint_due(&self, t: f64) -> bool {
        Self::on_multiple(t, self.checkpoint) || t == self.t_end
    }
}

fn checkpoint_path(dir: &Path, t: f64, prefix: &str) -> PathBuf {
    dir.join(CHECKPOINT_DIR).join(format!("{prefix}_t{t:012.6}.bin"))
}

fn make_checkpoint(grid: GridSpec, params: &PhysicsParams, config: &RunConfig, omega: &SpectralField, t: f64, dt: f64) -> Checkpoint {
    Checkpoint {
        grid,
        alpha: params.alpha,
        nu: params.nu,
        delta: params.delta,
        forcing_k_lo: config.forcing.k_lo,
        forcing_k_hi: config.forcing.k_hi,
        forcing_amplitude: config.forcing.amplitude,
        t,
        dt_next: dt,
        omega: omega.clone(),
    }
}

fn check_compatible(ck: &Checkpoint, expected: &Checkpoint) -> Result<()> {
    let pairs = [
        ("n", ck.grid.n() as f64, expected.grid.n() as f64),
        ("domain length", ck.grid.domain_length(), expected.grid.domain_length()),
        ("alpha", ck.alpha, expected.alpha),
        ("nu", ck.nu, expected.nu),
        ("delta", ck.delta, expected.delta),
        ("forcing.k_lo", ck.forcing_k_lo, expected.forcing_k_lo),
        ("forcing.k_hi", ck.forcing_k_hi, expected.forcing_k_hi),
        ("forcing.amplitude", ck.forcing_amplitude, expected.forcing_amplitude),
    ];
    for (name, a, b) in pairs {
        if a.to_bits() != b.to_bits() {
            return Err(Error::Config(format!(
                "checkpoint {name} = {a} does not match configuration value {b}"
            )));
        }
    }
    if ck.t > expected.t {
        return Err(Error::Config(format!(
            "checkpoint time {} lies beyond run.t_end = {}",
            ck.t, expected.t
        )));
    }
    Ok(())
}

/// The initial vorticity: forced shell plus broadband noise, forcing re-applied.
pub fn initial_vorticity(config: &RunConfig, spectral: &Spectral) -> Result<(SpectralField, ForcingSpec)> {
    let grid = *spectral.grid();
    let mut forcing = config.forcing_spec(&grid)?;
    let mut omega = initial_condition(&grid, &mut forcing, config.run.seed)?.omega;
    if config.init.noise > 0.0 {
        omega.add_scaled(1.0, &broadband_noise(spectral, config.run.seed, config.init.noise)?);
        forcing.apply(&mut omega)?;
    }
    Ok((omega, forcing))
}

/// True when `dir` holds a finished run of exactly this configuration.
fn finished_run(config: &RunConfig, dir: &Path) -> Result<Option<DiagnosticsRecord>> {
    let stored = match std::fs::read_to_string(dir.join(CONFIG_FILE)) {
        Ok(text) => text,
        Err(_) => return Ok(None),
    };
    if stored != config.to_flat_toml()? {
        return Ok(None);
    }
    let series = match files::read_series(&dir.join(SERIES_FILE)) {
        Ok(s) => s,
        Err(_) => return Ok(None),
    };
    Ok(series.last().filter(|r| r.t == config.run.t_end).copied())
}

/// Like [`run`], but returns immediately if `config.output.dir` already holds
/// the finished run of the same configuration.
pub fn run_or_reuse(config: &RunConfig) -> Result<RunSummary> {
    config.validate()?;
    if let Some(last) = finished_run(config, &config.output.dir)? {
        info!("reusing finished run in {}", config.output.dir.display());
        return Ok(RunSummary {
            dir: config.output.dir.clone(),
            last,
            accepted_steps: 0,
            rejected_steps: 0,
            reused: true,
        });
    }
    run(config, None)
}

/// Integrates to `run.t_end`, writing `series.csv`, spectra and checkpoints
/// under `output.dir`.
///
/// With `resume`, starts from that checkpoint; earlier output in the
/// directory is kept up to the checkpoint time and replaced after it. On a
/// numerical abort the last accepted state is checkpointed before the error
/// is returned.
pub fn run(config: &RunConfig, resume: Option<&Path>) -> Result<RunSummary> {
    config.validate()?;
    let grid = config.grid_spec()?;
    let spectral = Spectral::new(grid);
    let (initial, forcing) = initial_vorticity(config, &spectral)?;
    let mut params = config.physics_params()?;
    params.forcing = Some(forcing.clone());
    let dynamics = Dynamics::new(spectral.clone(), params.clone())?;
    let alpha = params.alpha;
    let schedule = Schedule::new(config);

    let dir = config.output.dir.clone();
    std::fs::create_dir_all(dir.join(CHECKPOINT_DIR))?;
    std::fs::write(dir.join(CONFIG_FILE), config.to_flat_toml()?)?;

    let mut ctrl = config.controller();
    let (mut omega, mut t, mut series, mut spectra, fresh_series) = match resume {
        Some(path) => {
            let ck = Checkpoint::load(path)?;
            let expected = make_checkpoint(grid, &params, config, &ck.omega, config.run.t_end, 0.0);
            check_compatible(&ck, &expected)?;
            ctrl = StepController { dt: ck.dt_next, ..ctrl };
            let series_path = dir.join(SERIES_FILE);
            let fresh = !series_path.exists();
            let series = SeriesWriter::resume(&series_path, ck.t)?;
            let spectra = SpectrumIndex::open(&dir, Some(ck.t))?;
            info!("resuming from {} at t = {}", path.display(), ck.t);
            (ck.omega, ck.t, series, spectra, fresh)
        }
        None => {
            let series = SeriesWriter::create(&dir.join(SERIES_FILE))?;
            let spectra = SpectrumIndex::open(&dir, None)?;
            (initial, 0.0, series, spectra, true)
        }
    };
    let t_start = t;

    let record = |omega: &SpectralField, t: f64, dt: f64| energies(&spectral, omega, alpha).record(t, dt);
    let mut last = record(&omega, t, ctrl.dt);
    if fresh_series {
        series.write(&last)?;
        if schedule.spectrum_due(t) {
            spectra.add(&shell_spectrum(&spectral, &omega, t))?;
        }
    }

    let mut rhs = |_t: f64, w: &SpectralField| dynamics.rhs(w);
    let (mut accepted, mut rejected) = (0, 0);
    while t < schedule.t_end {
        let target = schedule.next_target(t);
        let outcome = advance(&mut omega, &mut t, &mut rhs, &mut ctrl, target, |_, w| {
            // The band is validated against this grid, so projection cannot fail.
            forcing.apply(w).expect("forced modes lie on the grid")
        });
        let log = match outcome {
            Ok(log) => log,
            Err(e) => {
                let path = checkpoint_path(&dir, t, "abort");
                warn!("integration aborted at t = {t}: {e}; state saved to {}", path.display());
                make_checkpoint(grid, &params, config, &omega, t, ctrl.dt).save(&path)?;
                series.flush()?;
                spectra.flush()?;
                return Err(e);
            }
        };
        accepted += log.iter().filter(|o| o.accepted).count();
        rejected += log.iter().filter(|o| !o.accepted).count();
        last = record(&omega, t, ctrl.dt);
        if schedule.series_due(t) {
            series.write(&last)?;
        }
        if schedule.spectrum_due(t) {
            spectra.add(&shell_spectrum(&spectral, &omega, t))?;
        }
        if schedule.checkpoint_due(t) && t > t_start {
            series.flush()?;
            spectra.flush()?;
            make_checkpoint(grid, &params, config, &omega, t, ctrl.dt).save(&checkpoint_path(&dir, t, "checkpoint"))?;
            info!("t = {t:.4}  E = {:.6e}  Z = {:.6e}  dt = {:.3e}", last.energy, last.enstrophy, ctrl.dt);
        }
    }
    series.flush()?;
    spectra.flush()?;
    Ok(RunSummary {
        dir,
        last,
        accepted_steps: accepted,
        rejected_steps: rejected,
        reused: false,
    })
}

/// Checkpoints written by a run, sorted by time.
pub fn list_checkpoints(run_dir: &Path) -> Result<Vec<PathBuf>> {
    let mut out: Vec<PathBuf> = std::fs::read_dir(run_dir.join(CHECKPOINT_DIR))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.file_name()
                .and_then(|n| n.to_str())
                .is_some_and(|n| n.starts_with("checkpoint_t") && n.ends_with(".bin"))
        })
        .collect();
    out.sort();
    Ok(out)
}
