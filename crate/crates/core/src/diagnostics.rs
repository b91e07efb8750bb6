//! Energies, shell spectra, slope fits and the dimensional slope predictor.

use num_rational::Ratio;

use crate::error::{Error, Result};
use crate::spectral::{Spectral, SpectralField};

/// Time-stamped integral quantities of one state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiagnosticsRecord {
    pub t: f64,
    /// `½∫|u|²`
    pub energy: f64,
    /// `½∫ω²`
    pub enstrophy: f64,
    /// `½∫(|u|² + α²|∇u|²)`
    pub energy_h1: f64,
    /// `½∫[(1 - α²Δ)ω]²`
    pub enstrophy_h2: f64,
    /// Last accepted step.
    pub dt: f64,
}

/// Energy-type integrals computed from vorticity coefficients.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Energies {
    pub energy: f64,
    pub enstrophy: f64,
    pub energy_h1: f64,
    pub enstrophy_h2: f64,
}

impl Energies {
    pub fn record(self, t: f64, dt: f64) -> DiagnosticsRecord {
        DiagnosticsRecord {
            t,
            energy: self.energy,
            enstrophy: self.enstrophy,
            energy_h1: self.energy_h1,
            enstrophy_h2: self.enstrophy_h2,
            dt,
        }
    }
}

/// Parseval sums with `|û|² = |ω̂|²/|k|²` and the domain area as weight.
pub fn energies(spectral: &Spectral, omega: &SpectralField, alpha: f64) -> Energies {
    let k_squared = &spectral.wavenumbers().k_squared;
    let a2 = alpha * alpha;
    let (mut e, mut z, mut eh, mut zh) = (0.0, 0.0, 0.0, 0.0);
    for (c, &k2) in omega.coeffs().iter().zip(k_squared.iter()) {
        let w2 = c.norm_sqr();
        if w2 == 0.0 {
            continue;
        }
        let h = 1.0 + a2 * k2;
        z += w2;
        zh += h * h * w2;
        if k2 > 0.0 {
            e += w2 / k2;
            eh += h * w2 / k2;
        }
    }
    let scale = 0.5 * spectral.grid().area();
    Energies {
        energy: scale * e,
        enstrophy: scale * z,
        energy_h1: scale * eh,
        enstrophy_h2: scale * zh,
    }
}

/// Kinetic energy per integer wavenumber shell.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub t: f64,
    /// `energy[k - 1]` is `E(k)` for `k = 1..=k_max`.
    pub energy: Vec<f64>,
}

impl Spectrum {
    pub fn k_max(&self) -> usize {
        self.energy.len()
    }

    /// `E(k)`, or `None` outside `1..=k_max`.
    pub fn at(&self, k: usize) -> Option<f64> {
        if k == 0 {
            None
        } else {
            self.energy.get(k - 1).copied()
        }
    }

    pub fn total(&self) -> f64 {
        self.energy.iter().sum()
    }

    pub fn shells(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.energy.iter().enumerate().map(|(i, &e)| (i + 1, e))
    }
}

/// Shell sums of `½|û|²` (times area) with shells `round(|k|)`.
pub fn shell_spectrum(spectral: &Spectral, omega: &SpectralField, t: f64) -> Spectrum {
    let wn = spectral.wavenumbers();
    let k_max = spectral.grid().k_max();
    let mut energy = vec![0.0; k_max];
    let scale = 0.5 * spectral.grid().area();
    for &(i, j) in &wn.retained_modes {
        let k2 = wn.k_squared[[i, j]];
        let shell = wn.shell[[i, j]];
        if k2 == 0.0 || shell == 0 {
            continue;
        }
        energy[shell - 1] += scale * omega.coeffs()[[i, j]].norm_sqr() / k2;
    }
    Spectrum { t, energy }
}

/// Per-shell arithmetic mean of the snapshots with `t ∈ [t_lo, t_hi]`.
///
/// Snapshots of different lengths are averaged over their common shells.
pub fn time_averaged_spectrum(snapshots: &[Spectrum], t_lo: f64, t_hi: f64) -> Result<Spectrum> {
    let window: Vec<&Spectrum> = snapshots
        .iter()
        .filter(|s| s.t >= t_lo && s.t <= t_hi)
        .collect();
    if window.is_empty() {
        return Err(Error::EmptyWindow { lo: t_lo, hi: t_hi });
    }
    let len = window.iter().map(|s| s.energy.len()).min().unwrap_or(0);
    let mut energy = vec![0.0; len];
    for s in &window {
        for (acc, e) in energy.iter_mut().zip(&s.energy) {
            *acc += e;
        }
    }
    let count = window.len() as f64;
    energy.iter_mut().for_each(|e| *e /= count);
    Ok(Spectrum {
        t: 0.5 * (t_lo + t_hi),
        energy,
    })
}

/// Least-squares power law through a band of shells.
#[derive(Debug, Clone, PartialEq)]
pub struct SlopeFit {
    pub slope: f64,
    /// Natural-log intercept: `ln E(k) ≈ intercept + slope · ln k`.
    pub intercept: f64,
    /// RMS residual in `ln E`.
    pub residual: f64,
    pub shells_used: Vec<usize>,
    /// Shells in the band skipped for non-positive energy.
    pub shells_excluded: Vec<usize>,
}

pub fn fit_slope(spectrum: &Spectrum, k_lo: usize, k_hi: usize) -> Result<SlopeFit> {
    if k_lo >= k_hi {
        return Err(Error::Parameter(format!("fit band [{k_lo}, {k_hi}] is empty")));
    }
    let mut points = Vec::new();
    let mut shells_used = Vec::new();
    let mut shells_excluded = Vec::new();
    for k in k_lo.max(1)..=k_hi {
        match spectrum.at(k) {
            Some(e) if e > 0.0 && e.is_finite() => {
                points.push(((k as f64).ln(), e.ln()));
                shells_used.push(k);
            }
            Some(_) => shells_excluded.push(k),
            None => {}
        }
    }
    if points.len() < 3 {
        return Err(Error::Fit { usable: points.len() });
    }
    let m = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / m;
    let my = points.iter().map(|p| p.1).sum::<f64>() / m;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residual = (points
        .iter()
        .map(|p| (p.1 - intercept - slope * p.0).powi(2))
        .sum::<f64>()
        / m)
        .sqrt();
    Ok(SlopeFit {
        slope,
        intercept,
        residual,
        shells_used,
        shells_excluded,
    })
}

pub type Rational = Ratio<i64>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Subrange {
    /// Downscale transfer of `Z_H2`, rate `β_H2`.
    EnstrophyCascade,
    /// Upscale transfer of `E_H1`, rate `ε_H1`.
    EnergyCascade,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    AlphaMuchSmaller,
    AlphaMuchLarger,
    AlphaComparable,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Exponent {
    Point(Rational),
    /// The spectrum is steeper than `shallow` and shallower than `steep`.
    Between { shallow: Rational, steep: Rational },
}

/// Predicted `E(k) ~ rate^a k^b`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SlopePrediction {
    pub subrange: Subrange,
    pub regime: Regime,
    pub a: Rational,
    pub b: Exponent,
}

/// Exponents of the balance `L³T⁻² = T^(-3a) (1 + α²L⁻²)^(p·a) L^(q·a - b)`.
///
/// `E(k)` has dimension `L³T⁻²`; the cascaded rate has dimension
/// `T⁻³ (1 + α²L⁻²)^p L^q`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DimensionBalance {
    /// Power of the Helmholtz factor in the rate.
    pub helmholtz_power: Rational,
    /// Power of `L` in the rate.
    pub length_power: Rational,
}

impl DimensionBalance {
    pub fn for_subrange(subrange: Subrange) -> Self {
        match subrange {
            // β_H2 ~ T⁻³ (1 + α²L⁻²)²
            Subrange::EnstrophyCascade => Self {
                helmholtz_power: Rational::from_integer(2),
                length_power: Rational::from_integer(0),
            },
            // ε_H1 ~ T⁻³ (1 + α²L⁻²) L²
            Subrange::EnergyCascade => Self {
                helmholtz_power: Rational::from_integer(1),
                length_power: Rational::from_integer(2),
            },
        }
    }

    /// Time balance `-2 = -3a`.
    pub fn a(&self) -> Rational {
        Rational::new(2, 3)
    }

    /// Length exponent of the Helmholtz factor in a limit: `0` for `α ≪ L`,
    /// `-2` for `α ≫ L` where `(1 + α²L⁻²) ~ α²L⁻²`.
    fn helmholtz_length_power(regime: Regime) -> Option<Rational> {
        match regime {
            Regime::AlphaMuchSmaller => Some(Rational::from_integer(0)),
            Regime::AlphaMuchLarger => Some(Rational::from_integer(-2)),
            Regime::AlphaComparable => None,
        }
    }

    /// Solves the length balance `3 = a(p·h + q) - b` for `b`.
    pub fn b(&self, regime: Regime) -> Option<Rational> {
        let h = Self::helmholtz_length_power(regime)?;
        let a = self.a();
        Some(a * (self.helmholtz_power * h + self.length_power) - Rational::from_integer(3))
    }

    /// Residuals of the time and length balances for given `(a, b)`.
    pub fn residuals(&self, regime: Regime, a: Rational, b: Rational) -> Option<(Rational, Rational)> {
        let h = Self::helmholtz_length_power(regime)?;
        let time = Rational::from_integer(-2) + Rational::from_integer(3) * a;
        let length = Rational::from_integer(3) - (a * (self.helmholtz_power * h + self.length_power) - b);
        Some((time, length))
    }
}

pub fn predicted_slope(subrange: Subrange, regime: Regime) -> SlopePrediction {
    let balance = DimensionBalance::for_subrange(subrange);
    let b = match balance.b(regime) {
        Some(b) => Exponent::Point(b),
        None => {
            let shallow = balance.b(Regime::AlphaMuchSmaller).expect("limit exists");
            let steep = balance.b(Regime::AlphaMuchLarger).expect("limit exists");
            Exponent::Between { shallow, steep }
        }
    };
    SlopePrediction {
        subrange,
        regime,
        a: balance.a(),
        b,
    }
}
