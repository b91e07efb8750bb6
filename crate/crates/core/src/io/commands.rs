//! Post-processing and auxiliary drivers behind the command-line subcommands.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::diagnostics::{fit_slope, time_averaged_spectrum, SlopeFit, Spectrum};
use crate::error::{Error, Result};
use crate::io::config::RunConfig;
use crate::io::files::{read_snapshots, read_spectrum, write_spectrum};
use crate::io::runner::run_or_reuse;
use crate::timestepper::StepController;
use crate::vortex::{blob_hamiltonian, evolve, BlobKernel, Trajectory, VortexSystem};

pub const AVERAGED_SPECTRUM_FILE: &str = "spectrum_avg.csv";

/// Time-averages the snapshots of `run_dir` over `[t_lo, t_hi]` and writes
/// the result to `out`, or to `spectrum_avg.csv` in the run directory.
pub fn spectrum_command(run_dir: &Path, t_lo: f64, t_hi: f64, out: Option<&Path>) -> Result<(Spectrum, PathBuf)> {
    let snapshots = read_snapshots(run_dir)?;
    let averaged = time_averaged_spectrum(&snapshots, t_lo, t_hi)?;
    let path = out.map_or_else(|| run_dir.join(AVERAGED_SPECTRUM_FILE), Path::to_path_buf);
    write_spectrum(&path, &averaged)?;
    Ok((averaged, path))
}

/// Power-law fit of a `k,E` file over shells `[k_lo, k_hi]`.
pub fn slope_command(spectrum_file: &Path, k_lo: usize, k_hi: usize) -> Result<SlopeFit> {
    fit_slope(&read_spectrum(spectrum_file, 0.0)?, k_lo, k_hi)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompareOptions {
    pub fractions: Vec<f64>,
    /// Averaging window for the spectra.
    pub t_lo: f64,
    pub t_hi: f64,
    /// First shell of the range summarised by the mean deviation.
    pub k_lo: usize,
    /// Last shell; defaults to the smallest `k_max` among the compared grids.
    pub k_hi: Option<usize>,
}

impl Default for CompareOptions {
    fn default() -> Self {
        Self {
            fractions: vec![0.75, 0.5],
            t_lo: 5.0,
            t_hi: 20.0,
            k_lo: 14,
            k_hi: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResolutionEntry {
    pub fraction: f64,
    pub n: usize,
    pub k_max: usize,
    pub spectrum: Spectrum,
    /// `(k, ln(E_reduced(k) / E_full(k)))` for every shell both runs resolve.
    pub log_ratio: Vec<(usize, f64)>,
    /// Mean of `|ln ratio|` over the summary range.
    pub mean_deviation: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResolutionReport {
    pub n: usize,
    pub k_max: usize,
    pub full: Spectrum,
    pub k_range: (usize, usize),
    pub entries: Vec<ResolutionEntry>,
}

/// Grid size nearest `fraction · n` that is even.
pub fn reduced_size(n: usize, fraction: f64) -> Result<usize> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::Config(format!("resolution fraction must lie in (0, 1], got {fraction}")));
    }
    Ok(2 * ((fraction * n as f64 / 2.0).round() as usize))
}

/// Per-shell `ln(E_r/E_f)` on shells resolved by both, skipping empty shells.
pub fn log_ratios(full: &Spectrum, reduced: &Spectrum) -> Vec<(usize, f64)> {
    full.shells()
        .zip(reduced.shells())
        .filter(|((_, f), (_, r))| *f > 0.0 && *r > 0.0)
        .map(|((k, f), (_, r))| (k, (r / f).ln()))
        .collect()
}

fn mean_abs_in(ratios: &[(usize, f64)], (lo, hi): (usize, usize)) -> f64 {
    let inside: Vec<f64> = ratios
        .iter()
        .filter(|(k, _)| (lo..=hi).contains(k))
        .map(|(_, r)| r.abs())
        .collect();
    if inside.is_empty() {
        f64::NAN
    } else {
        inside.iter().sum::<f64>() / inside.len() as f64
    }
}

/// Runs the configuration at full and reduced resolution with identical
/// physics (`ν` included) and compares time-averaged spectra.
///
/// Sub-runs go to `output.dir/n<N>`; finished sub-runs with the same
/// configuration are reused. Writes `resolution.csv` and one
/// `deviation_n<N>.csv` per reduced grid into `output.dir`.
pub fn compare_resolution(config: &RunConfig, options: &CompareOptions) -> Result<ResolutionReport> {
    config.validate()?;
    let root = config.output.dir.clone();
    let n = config.grid.n;
    let sizes: Vec<usize> = options
        .fractions
        .iter()
        .map(|&f| reduced_size(n, f))
        .collect::<Result<_>>()?;

    let averaged_run = |size: usize| -> Result<Spectrum> {
        let mut sub = config.at_resolution(size)?;
        sub.output.dir = root.join(format!("n{size}"));
        run_or_reuse(&sub)?;
        Ok(spectrum_command(&sub.output.dir, options.t_lo, options.t_hi, None)?.0)
    };

    let full = averaged_run(n)?;
    let k_max = full.k_max();
    let mut spectra = Vec::with_capacity(sizes.len());
    for &size in &sizes {
        spectra.push(if size == n { full.clone() } else { averaged_run(size)? });
    }
    let k_common = spectra.iter().map(Spectrum::k_max).fold(k_max, usize::min);
    let k_range = (options.k_lo, options.k_hi.unwrap_or(k_common));

    let entries: Vec<ResolutionEntry> = options
        .fractions
        .iter()
        .zip(sizes)
        .zip(spectra)
        .map(|((&fraction, size), spectrum)| {
            let log_ratio = log_ratios(&full, &spectrum);
            ResolutionEntry {
                fraction,
                n: size,
                k_max: spectrum.k_max(),
                mean_deviation: mean_abs_in(&log_ratio, k_range),
                log_ratio,
                spectrum,
            }
        })
        .collect();

    let mut summary = BufWriter::new(File::create(root.join("resolution.csv"))?);
    writeln!(summary, "fraction,n,k_max,mean_abs_log_deviation")?;
    for e in &entries {
        writeln!(summary, "{},{},{},{:e}", e.fraction, e.n, e.k_max, e.mean_deviation)?;
        let mut detail = BufWriter::new(File::create(root.join(format!("deviation_n{}.csv", e.n)))?);
        writeln!(detail, "k,E_full,E_reduced,log_ratio")?;
        for &(k, r) in &e.log_ratio {
            let (f, s) = (full.at(k).unwrap_or(0.0), e.spectrum.at(k).unwrap_or(0.0));
            writeln!(detail, "{k},{f:e},{s:e},{r:e}")?;
        }
        detail.flush()?;
    }
    summary.flush()?;
    Ok(ResolutionReport { n, k_max, full, k_range, entries })
}

/// Input of the `vortex` subcommand.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VortexConfig {
    pub vortex: VortexSection,
    #[serde(default)]
    pub output: VortexOutput,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VortexSection {
    /// Blob radius; `0` gives point vortices.
    #[serde(default)]
    pub alpha: f64,
    pub t_end: f64,
    #[serde(default = "default_vortex_rtol")]
    pub rtol: f64,
    #[serde(default = "default_vortex_atol")]
    pub atol: f64,
    #[serde(default = "default_vortex_dt")]
    pub dt: f64,
    pub positions: Vec<[f64; 2]>,
    pub circulations: Vec<f64>,
}

fn default_vortex_rtol() -> f64 {
    1e-10
}

fn default_vortex_atol() -> f64 {
    1e-12
}

fn default_vortex_dt() -> f64 {
    1e-3
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VortexOutput {
    pub dir: PathBuf,
}

impl Default for VortexOutput {
    fn default() -> Self {
        Self { dir: PathBuf::from("vortex") }
    }
}

impl VortexConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let c: Self = toml::from_str(text).map_err(|e| Error::Config(e.message().to_string()))?;
        c.system()?;
        if !(c.vortex.t_end >= 0.0 && c.vortex.t_end.is_finite()) {
            return Err(Error::Config(format!("vortex.t_end must be >= 0, got {}", c.vortex.t_end)));
        }
        c.controller().validate().map_err(|e| Error::Config(e.to_string()))?;
        Ok(c)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn system(&self) -> Result<VortexSystem> {
        let kernel = BlobKernel::for_alpha(self.vortex.alpha).map_err(|e| Error::Config(e.to_string()))?;
        VortexSystem::new(self.vortex.positions.clone(), self.vortex.circulations.clone(), kernel)
            .map_err(|e| Error::Config(e.to_string()))
    }

    pub fn controller(&self) -> StepController {
        StepController::new(self.vortex.rtol, self.vortex.atol, self.vortex.dt)
    }
}

/// Conserved quantities of a blob system.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Invariants {
    pub circulation: f64,
    pub impulse_x: f64,
    pub impulse_y: f64,
    pub angular_impulse: f64,
    pub hamiltonian: f64,
}

impl Invariants {
    pub fn of(system: &VortexSystem) -> Result<Self> {
        let [ix, iy] = system.linear_impulse();
        Ok(Self {
            circulation: system.total_circulation(),
            impulse_x: ix,
            impulse_y: iy,
            angular_impulse: system.angular_impulse(),
            hamiltonian: blob_hamiltonian(system)?,
        })
    }

    fn values(&self) -> [(&'static str, f64); 5] {
        [
            ("circulation", self.circulation),
            ("impulse_x", self.impulse_x),
            ("impulse_y", self.impulse_y),
            ("angular_impulse", self.angular_impulse),
            ("hamiltonian", self.hamiltonian),
        ]
    }
}

/// Magnitude scales used to normalise invariant drift, so that quantities
/// which vanish initially still have a meaningful relative drift.
fn invariant_scales(system: &VortexSystem, h0: f64) -> [f64; 5] {
    let g_abs: f64 = system.circulations.iter().map(|g| g.abs()).sum();
    let mut r1 = 0.0;
    let mut r2 = 0.0;
    for (p, g) in system.positions.iter().zip(&system.circulations) {
        let r = p[0].hypot(p[1]);
        r1 += g.abs() * r;
        r2 += g.abs() * r * r;
    }
    let h_scale = if h0 != 0.0 { h0.abs() } else { g_abs * g_abs / (2.0 * std::f64::consts::PI) };
    [g_abs, r1, r1, r2, h_scale].map(|s| if s > 0.0 { s } else { 1.0 })
}

#[derive(Debug, Clone, PartialEq)]
pub struct VortexReport {
    pub trajectory: Trajectory,
    pub initial: Invariants,
    pub last: Invariants,
    /// `|final - initial| / scale` per invariant, in the order of [`Invariants`].
    pub drift: [(&'static str, f64); 5],
    pub trajectory_file: PathBuf,
}

impl VortexReport {
    pub fn max_drift(&self) -> f64 {
        self.drift.iter().map(|(_, d)| *d).fold(0.0, f64::max)
    }
}

/// Evolves the configured blobs and reports invariant drift. Writes
/// `trajectory.csv` and `invariants.csv` into the output directory.
pub fn vortex_command(config: &VortexConfig) -> Result<VortexReport> {
    let system = config.system()?;
    let mut ctrl = config.controller();
    let trajectory = evolve(&system, config.vortex.t_end, &mut ctrl)?;
    let mut final_system = system.clone();
    final_system.positions = trajectory.final_positions().to_vec();
    let initial = Invariants::of(&system)?;
    let last = Invariants::of(&final_system)?;
    let scales = invariant_scales(&system, initial.hamiltonian);
    let mut drift = [("", 0.0); 5];
    for (i, ((name, a), (_, b))) in initial.values().into_iter().zip(last.values()).enumerate() {
        drift[i] = (name, (b - a).abs() / scales[i]);
    }

    let dir = &config.output.dir;
    std::fs::create_dir_all(dir)?;
    let trajectory_file = dir.join("trajectory.csv");
    let mut w = BufWriter::new(File::create(&trajectory_file)?);
    trajectory.write_csv(&mut w)?;
    w.flush()?;
    let mut inv = BufWriter::new(File::create(dir.join("invariants.csv"))?);
    writeln!(inv, "quantity,initial,final,relative_drift")?;
    for (((name, a), (_, b)), (_, d)) in initial.values().into_iter().zip(last.values()).zip(drift) {
        writeln!(inv, "{name},{a:e},{b:e},{d:e}")?;
    }
    inv.flush()?;
    Ok(VortexReport { trajectory, initial, last, drift, trajectory_file })
}
