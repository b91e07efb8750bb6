//! Independent reference evaluations shared by the integration tests.

#![allow(dead_code)]

use euler_alpha::spectral::{GridSpec, SpectralField};
use ndarray::Array2;
use num_complex::Complex64;

/// Retained lattice modes `(k₁, k₂)` of a grid on the 2π domain: `|k| ≤ ⌊n/3⌋`.
pub fn retained_lattice(n: usize) -> Vec<(i64, i64)> {
    let r = (n / 3) as i64;
    let mut out = Vec::new();
    for k1 in -r..=r {
        for k2 in -r..=r {
            if k1 * k1 + k2 * k2 <= r * r {
                out.push((k1, k2));
            }
        }
    }
    out
}

fn index(n: usize, k: i64) -> usize {
    k.rem_euclid(n as i64) as usize
}

/// Vorticity tendency by direct triad summation over retained modes.
///
/// `Ĵ(k) = -Σ_{p+r=k} (p₁r₂ - p₂r₁) ψ̂(p) q̂(r)` with `ψ̂ = -ω̂/|p|²` and
/// `q̂ = (1 + α²|r|²) ω̂`; then `-Ĵ/(1 + α²|k|²) - (δ/|k|² + (ν|k|²)⁴) ω̂`.
pub fn galerkin_rhs(omega: &SpectralField, alpha: f64, nu: f64, delta: f64) -> Array2<Complex64> {
    let n = omega.grid().n();
    let w = omega.coeffs();
    let modes = retained_lattice(n);
    let r = (n / 3) as i64;
    let a2 = alpha * alpha;
    let value = |k1: i64, k2: i64| w[[index(n, k1), index(n, k2)]];
    let mut out = Array2::zeros((n, n));
    for &(k1, k2) in &modes {
        let mut jac = Complex64::new(0.0, 0.0);
        for &(p1, p2) in &modes {
            let (r1, r2) = (k1 - p1, k2 - p2);
            if r1 * r1 + r2 * r2 > r * r || (p1 == 0 && p2 == 0) {
                continue;
            }
            let cross = (p1 * r2 - p2 * r1) as f64;
            if cross == 0.0 {
                continue;
            }
            let psi = -value(p1, p2) / (p1 * p1 + p2 * p2) as f64;
            let q = value(r1, r2) * (1.0 + a2 * (r1 * r1 + r2 * r2) as f64);
            jac -= psi * q * cross;
        }
        let k2sq = (k1 * k1 + k2 * k2) as f64;
        let damping = if k2sq == 0.0 { 0.0 } else { delta / k2sq + (nu * k2sq).powi(4) };
        out[[index(n, k1), index(n, k2)]] = -jac / (1.0 + a2 * k2sq) - value(k1, k2) * damping;
    }
    out
}

/// Grid on the 2π domain.
pub fn grid(n: usize) -> GridSpec {
    GridSpec::new(n).expect("valid grid size")
}

/// `max |a - b| / max |b|`.
pub fn relative_max_error(a: &Array2<Complex64>, b: &Array2<Complex64>) -> f64 {
    let scale = b.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let diff = a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max);
    diff / scale
}
