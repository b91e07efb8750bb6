//! Right-hand side of the forced-dissipative averaged Euler vorticity equation.
//!
//! ```text
//! ∂ω/∂t = -(1 - α²Δ)⁻¹ J[ψ, (1 - α²Δ)ω] + D(ω),    D = δψ - (-νΔ)⁴ω
//! ```
//!
//! Forcing holds the moduli of the modes in a thin wavenumber band fixed and
//! is applied as a projection after each accepted step, see [`ForcingSpec`].

use std::cell::RefCell;

use ndarray::{Array2, Zip};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::spectral::{inverse_minus_laplacian_symbol, GridSpec, Spectral, SpectralField};

/// Physical coefficients of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct PhysicsParams {
    /// Averaging length; `0` is the Euler limit.
    pub alpha: f64,
    /// Hyperviscosity coefficient in `(-νΔ)⁴`.
    pub nu: f64,
    /// Large-scale friction coefficient multiplying `ψ`.
    pub delta: f64,
    pub forcing: Option<ForcingSpec>,
}

impl PhysicsParams {
    /// Unforced, undamped dynamics.
    pub fn inviscid(alpha: f64) -> Self {
        Self {
            alpha,
            nu: 0.0,
            delta: 0.0,
            forcing: None,
        }
    }

    /// `α = 1/k_α`, with `k_α = 0` standing for `k_α = ∞` (Euler).
    pub fn alpha_from_k_alpha(k_alpha: f64) -> Result<f64> {
        if !(k_alpha >= 0.0 && k_alpha.is_finite()) {
            return Err(Error::Parameter(format!("k_alpha must be >= 0, got {k_alpha}")));
        }
        Ok(if k_alpha == 0.0 { 0.0 } else { 1.0 / k_alpha })
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("alpha", self.alpha), ("nu", self.nu), ("delta", self.delta)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::Parameter(format!("{name} must be >= 0, got {v}")));
            }
        }
        Ok(())
    }
}

/// One forced wavenumber (the `-k` partner is implied).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ForcedMode {
    pub k1: i64,
    pub k2: i64,
    /// Target modulus of the vorticity coefficient.
    pub amplitude: f64,
    /// Phase used when the current coefficient is exactly zero.
    pub fallback_phase: f64,
}

/// Modes with `k_lo ≤ |k| < k_hi` whose vorticity moduli are held fixed.
#[derive(Debug, Clone, PartialEq)]
pub struct ForcingSpec {
    pub k_lo: f64,
    pub k_hi: f64,
    modes: Vec<ForcedMode>,
}

impl ForcingSpec {
    /// Every lattice mode in the band, each with target modulus `amplitude`.
    pub fn new(grid: &GridSpec, k_lo: f64, k_hi: f64, amplitude: f64) -> Result<Self> {
        if !(k_lo >= 0.0 && k_hi > k_lo) {
            return Err(Error::Config(format!("forcing band [{k_lo}, {k_hi}) is empty")));
        }
        if !(amplitude >= 0.0 && amplitude.is_finite()) {
            return Err(Error::Config(format!("forcing amplitude must be >= 0, got {amplitude}")));
        }
        let base = grid.base_wavenumber();
        let reach = (k_hi / base).ceil() as i64;
        let k_max_sq = (grid.k_max() * grid.k_max()) as i64;
        let mut modes = Vec::new();
        for k1 in -reach..=reach {
            for k2 in 0..=reach {
                // one representative per ±k pair
                if k2 == 0 && k1 <= 0 {
                    continue;
                }
                let m2 = k1 * k1 + k2 * k2;
                let magnitude = (m2 as f64).sqrt() * base;
                if magnitude < k_lo || magnitude >= k_hi {
                    continue;
                }
                if m2 > k_max_sq {
                    return Err(Error::Config(format!(
                        "forced mode ({k1}, {k2}) lies outside the dealiasing radius {}",
                        grid.k_max()
                    )));
                }
                modes.push(ForcedMode {
                    k1,
                    k2,
                    amplitude,
                    fallback_phase: 0.0,
                });
            }
        }
        if modes.is_empty() {
            return Err(Error::Config(format!(
                "forcing band [{k_lo}, {k_hi}) contains no lattice modes"
            )));
        }
        Ok(Self { k_lo, k_hi, modes })
    }

    /// Representatives of the forced `±k` pairs.
    pub fn modes(&self) -> &[ForcedMode] {
        &self.modes
    }

    /// Number of forced lattice modes, counting `k` and `-k` separately.
    pub fn mode_count(&self) -> usize {
        2 * self.modes.len()
    }

    pub fn set_fallback_phases(&mut self, phases: impl IntoIterator<Item = f64>) {
        for (m, p) in self.modes.iter_mut().zip(phases) {
            m.fallback_phase = p;
        }
    }

    /// Resets each forced modulus to its target, keeping the current phase.
    pub fn apply(&self, omega: &mut SpectralField) -> Result<()> {
        for m in &self.modes {
            let current = omega.mode(m.k1, m.k2);
            let phase = if current.norm() == 0.0 {
                m.fallback_phase
            } else {
                current.arg()
            };
            let value = if current.norm() == 0.0 {
                Complex64::from_polar(m.amplitude, phase)
            } else {
                current * (m.amplitude / current.norm())
            };
            omega.set_mode_pair(m.k1, m.k2, value)?;
        }
        Ok(())
    }
}

/// Functional form of [`ForcingSpec::apply`].
pub fn apply_forcing(omega: &SpectralField, forcing: &ForcingSpec) -> Result<SpectralField> {
    let mut out = omega.clone();
    forcing.apply(&mut out)?;
    Ok(out)
}

/// Vorticity and time.
#[derive(Debug, Clone, PartialEq)]
pub struct EvolutionState {
    pub omega: SpectralField,
    pub t: f64,
}

/// Zero vorticity except the forced modes, which get their target moduli and
/// seeded random phases. The phases are recorded in `forcing` as fallbacks.
pub fn initial_condition(grid: &GridSpec, forcing: &mut ForcingSpec, seed: u64) -> Result<EvolutionState> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let phases: Vec<f64> = forcing
        .modes()
        .iter()
        .map(|_| rng.gen::<f64>() * std::f64::consts::TAU)
        .collect();
    forcing.set_fallback_phases(phases);
    let mut omega = SpectralField::zeros(*grid);
    for m in forcing.modes() {
        omega.set_mode_pair(m.k1, m.k2, Complex64::from_polar(m.amplitude, m.fallback_phase))?;
    }
    Ok(EvolutionState { omega, t: 0.0 })
}

/// Random vorticity with modulus `amplitude · U / |k|` and uniform phase on every
/// retained mode except the mean.
///
/// Each `±k` pair draws from its own generator stream keyed by `(k₁, k₂)`, so
/// the modes shared by two grids receive identical values.
pub fn broadband_noise(spectral: &Spectral, seed: u64, amplitude: f64) -> Result<SpectralField> {
    let grid = spectral.grid();
    let base = grid.base_wavenumber();
    let mut out = spectral.zeros();
    for &(i, j) in &spectral.wavenumbers().retained_modes {
        let (k1, k2) = (grid.lattice_wavenumber(i), grid.lattice_wavenumber(j));
        // one representative per pair
        if k2 < 0 || (k2 == 0 && k1 <= 0) {
            continue;
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(((k1 as i32 as u32 as u64) << 32) | k2 as u32 as u64);
        let k = ((k1 * k1 + k2 * k2) as f64).sqrt() * base;
        let modulus = amplitude / k * rng.gen::<f64>();
        let phase = rng.gen::<f64>() * std::f64::consts::TAU;
        out.set_mode_pair(k1, k2, Complex64::from_polar(modulus, phase))?;
    }
    Ok(out)
}

/// Per-mode dissipation symbol `-δ/|k|² - (ν|k|²)⁴`, zero at `k = 0`.
pub fn dissipation_rate(k2: f64, nu: f64, delta: f64) -> f64 {
    if k2 == 0.0 {
        0.0
    } else {
        -delta / k2 - (nu * k2).powi(4)
    }
}

/// `D(ω) = δψ - (-νΔ)⁴ω` in spectral space.
pub fn apply_dissipation(spectral: &Spectral, omega: &SpectralField, params: &PhysicsParams) -> SpectralField {
    let (nu, delta) = (params.nu, params.delta);
    omega.map_symbol(&spectral.wavenumbers().k_squared, |k2| dissipation_rate(k2, nu, delta))
}

/// Evaluates the tendency `dω/dt` without forcing.
#[derive(Debug, Clone)]
pub struct Dynamics {
    spectral: Spectral,
    params: PhysicsParams,
    /// `1 + α²|k|²`
    helmholtz: Array2<f64>,
    /// `-1/|k|²`, zero at the mean mode
    streamfunction: Array2<f64>,
    dissipation: Array2<f64>,
    /// Transform buffers reused across calls.
    work: RefCell<(Array2<Complex64>, Array2<Complex64>)>,
}

impl Dynamics {
    pub fn new(spectral: Spectral, params: PhysicsParams) -> Result<Self> {
        params.validate()?;
        let wn = spectral.wavenumbers();
        let a2 = params.alpha * params.alpha;
        let helmholtz = wn.k_squared.mapv(|k2| 1.0 + a2 * k2);
        let streamfunction = wn.k_squared.mapv(inverse_minus_laplacian_symbol);
        let dissipation = wn
            .k_squared
            .mapv(|k2| dissipation_rate(k2, params.nu, params.delta));
        let n = spectral.grid().n();
        let work = RefCell::new((Array2::zeros((n, n)), Array2::zeros((n, n))));
        Ok(Self {
            spectral,
            params,
            helmholtz,
            streamfunction,
            dissipation,
            work,
        })
    }

    pub fn spectral(&self) -> &Spectral {
        &self.spectral
    }

    pub fn params(&self) -> &PhysicsParams {
        &self.params
    }

    /// `-(1 - α²Δ)⁻¹ J[ψ, (1 - α²Δ)ω] + D(ω)`, dealiased.
    ///
    /// Modes of `omega` beyond the dealiasing radius are ignored.
    pub fn rhs(&self, omega: &SpectralField) -> Result<SpectralField> {
        if omega.grid() != self.spectral.grid() {
            return Err(Error::size(
                format!("{:?}", self.spectral.grid()),
                format!("{:?}", omega.grid()),
            ));
        }
        let w = omega.coeffs();
        let mut work = self.work.borrow_mut();
        let (a, b) = &mut *work;
        // ψ̂ = -ω̂/|k|², q̂ = (1 + α²|k|²)ω̂
        self.spectral.pack_gradient(w, Some(&self.streamfunction), a);
        self.spectral.pack_gradient(w, Some(&self.helmholtz), b);
        let mut out = self.spectral.zeros();
        self.spectral.jacobian_packed(a, b, out.coeffs_mut());
        Zip::from(out.coeffs_mut())
            .and(w)
            .and(&self.helmholtz)
            .and(&self.dissipation)
            .and(&self.spectral.wavenumbers().retained)
            .for_each(|o, &wv, &h, &d, &keep| {
                *o = if keep { -*o / h + wv * d } else { Complex64::new(0.0, 0.0) };
            });
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn setup(n: usize) -> (GridSpec, Spectral) {
        let g = GridSpec::new(n).unwrap();
        (g, Spectral::new(g))
    }

    fn max_diff(a: &SpectralField, b: &SpectralField) -> f64 {
        a.coeffs()
            .iter()
            .zip(b.coeffs().iter())
            .fold(0.0, |m, (x, y)| m.max((x - y).norm()))
    }

    #[test]
    fn forced_band_is_the_twelve_modes_of_shell_ten() {
        let (g, _) = setup(64);
        let forcing = ForcingSpec::new(&g, 10.0, 10.001, 1.0).unwrap();
        assert_eq!(forcing.mode_count(), 12);
        let mut ks: Vec<(i64, i64)> = forcing.modes().iter().map(|m| (m.k1, m.k2)).collect();
        ks.sort();
        assert_eq!(ks, vec![(-8, 6), (-6, 8), (0, 10), (6, 8), (8, 6), (10, 0)]);
    }

    #[test]
    fn forcing_outside_radius_is_config_error() {
        let (g, _) = setup(16); // k_max = 5
        assert!(matches!(ForcingSpec::new(&g, 10.0, 10.001, 1.0), Err(Error::Config(_))));
    }

    #[test]
    fn rest_state_has_zero_tendency() {
        let (_, sp) = setup(32);
        let params = PhysicsParams { alpha: 0.1, nu: 0.01, delta: 0.1, forcing: None };
        let dyn_ = Dynamics::new(sp.clone(), params).unwrap();
        assert_eq!(dyn_.rhs(&sp.zeros()).unwrap().max_abs(), 0.0);
    }

    #[test]
    fn single_mode_is_steady() {
        let (_, sp) = setup(32);
        for (k1, k2) in [(1, 0), (3, 4), (-2, 7)] {
            let mut w = sp.zeros();
            w.set_mode_pair(k1, k2, Complex64::from_polar(0.8, 1.1)).unwrap();
            for alpha in [0.0, 0.1, 0.5] {
                let d = Dynamics::new(sp.clone(), PhysicsParams::inviscid(alpha)).unwrap();
                assert!(d.rhs(&w).unwrap().max_abs() < 1e-15);
            }
        }
    }

    #[test]
    fn small_alpha_approaches_euler() {
        let (_, sp) = setup(32);
        let w = sp.random_field(3, |k| 1.0 / (1.0 + k));
        let base = PhysicsParams { alpha: 0.0, nu: 0.05, delta: 0.2, forcing: None };
        let euler = Dynamics::new(sp.clone(), base.clone()).unwrap().rhs(&w).unwrap();
        let near = Dynamics::new(sp.clone(), PhysicsParams { alpha: 1e-9, ..base.clone() })
            .unwrap()
            .rhs(&w)
            .unwrap();
        assert!(max_diff(&euler, &near) < 1e-12);

        // explicit Euler form: -J[ψ, ω] + D
        let psi = sp.poisson_solve(&w);
        let mut expected = sp.jacobian(&psi, &w).unwrap();
        expected.scale(-1.0);
        expected.add_scaled(1.0, &apply_dissipation(&sp, &w, &base));
        assert!(max_diff(&euler, &expected) < 1e-12);
    }

    #[test]
    fn dissipation_per_mode() {
        let (_, sp) = setup(16);
        let mut w = sp.zeros();
        w.set_mode_pair(1, 0, Complex64::new(1.0, 0.0)).unwrap();
        let p = PhysicsParams { alpha: 0.0, nu: 0.0, delta: 0.1, forcing: None };
        assert!((apply_dissipation(&sp, &w, &p).mode(1, 0).re + 0.1).abs() < 1e-15);

        let mut w = sp.zeros();
        w.set_mode_pair(2, 0, Complex64::new(1.0, 0.0)).unwrap();
        let p = PhysicsParams { alpha: 0.0, nu: 1.0, delta: 0.0, forcing: None };
        assert_eq!(apply_dissipation(&sp, &w, &p).mode(2, 0).re, -256.0);
        assert_eq!(dissipation_rate(0.0, 1.0, 1.0), 0.0);
    }

    #[test]
    fn dissipation_never_adds_energy() {
        for k2 in (1..500).map(|m| m as f64) {
            for (nu, delta) in [(0.0, 0.3), (0.02, 0.0), (0.05, 1.0)] {
                assert!(dissipation_rate(k2, nu, delta) <= 0.0);
            }
        }
    }

    #[test]
    fn forcing_resets_modulus_keeping_phase() {
        let (g, sp) = setup(64);
        let forcing = ForcingSpec::new(&g, 10.0, 10.001, 0.5).unwrap();
        let mut w = sp.random_field(5, |_| 0.1);
        w.set_mode_pair(10, 0, Complex64::from_polar(0.3, 0.7)).unwrap();
        let f = apply_forcing(&w, &forcing).unwrap();
        let c = f.mode(10, 0);
        assert!((c.norm() - 0.5).abs() < 1e-15);
        assert!((c.arg() - 0.7).abs() < 1e-14);
        assert_eq!(f.mode(-10, 0), c.conj());
        // unforced modes untouched
        assert_eq!(f.mode(3, 4), w.mode(3, 4));
        for m in forcing.modes() {
            let (a, b) = (w.mode(m.k1, m.k2), f.mode(m.k1, m.k2));
            assert!((a.arg() - b.arg()).abs() < 1e-14);
        }
        // idempotent once at target
        let again = apply_forcing(&f, &forcing).unwrap();
        assert!(max_diff(&again, &f) < 1e-15);
    }

    #[test]
    fn initial_condition_is_seeded_forced_shell() {
        let (g, sp) = setup(64);
        let mut spec_a = ForcingSpec::new(&g, 10.0, 10.001, 1.0).unwrap();
        let mut spec_b = spec_a.clone();
        let a = initial_condition(&g, &mut spec_a, 17).unwrap();
        let b = initial_condition(&g, &mut spec_b, 17).unwrap();
        assert_eq!(a, b);
        assert_eq!(spec_a, spec_b);
        let c = initial_condition(&g, &mut spec_b, 18).unwrap();
        assert_ne!(a, c);

        assert_eq!(a.omega.hermitian_defect(), 0.0);
        let nonzero = a.omega.coeffs().iter().filter(|c| c.norm() > 0.0).count();
        assert_eq!(nonzero, 12);
        // physically real
        let phys = sp.inverse(&a.omega).unwrap();
        assert!(phys.iter().all(|v| v.is_finite()));
        // zero-modulus forced modes fall back to the recorded phase
        let forced = apply_forcing(&sp.zeros(), &spec_a).unwrap();
        assert_eq!(forced, a.omega);
    }

    #[test]
    fn broadband_noise_shared_modes_agree_across_grids() {
        let (_, small) = setup(32);
        let (_, large) = setup(64);
        let a = broadband_noise(&small, 3, 0.5).unwrap();
        let b = broadband_noise(&large, 3, 0.5).unwrap();
        assert_eq!(a.hermitian_defect(), 0.0);
        assert_eq!(a.mode(0, 0), Complex64::new(0.0, 0.0));
        let k_max = small.grid().k_max() as i64;
        for k1 in -k_max..=k_max {
            for k2 in -k_max..=k_max {
                if k1 * k1 + k2 * k2 <= k_max * k_max {
                    assert_eq!(a.mode(k1, k2), b.mode(k1, k2));
                }
            }
        }
        // modulus bounded by the envelope
        assert!(a.mode(3, 4).norm() <= 0.5 / 5.0);
        assert_ne!(a, broadband_noise(&small, 4, 0.5).unwrap());
    }
}
