//! Periodic-domain spectral kernel.
//!
//! Fields live on `[0, L)²` sampled on an `n × n` grid. Transforms are
//! normalized so that coefficients are mode amplitudes, nonlinear products
//! are evaluated pseudospectrally and truncated to the circular radius
//! `k_max = ⌊n/3⌋`, which makes every quadratic product alias-free.

mod field;
mod grid;

use std::sync::Arc;

use ndarray::{Array2, Zip};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustfft::{Fft, FftPlanner};

pub use field::SpectralField;
pub use grid::{GridSpec, WavenumberSet};

use crate::error::{Error, Result};

/// Relative tolerance on the Hermitian defect accepted by [`Spectral::inverse`].
pub const HERMITIAN_TOLERANCE: f64 = 1e-9;

/// Transform plans and wavenumber tables for one grid.
///
/// All operations take `&self` and allocate their own work buffers, so one
/// instance can be shared between threads.
#[derive(Clone)]
pub struct Spectral {
    grid: GridSpec,
    wn: WavenumberSet,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for Spectral {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Spectral").field("grid", &self.grid).finish()
    }
}

impl Spectral {
    pub fn new(grid: GridSpec) -> Self {
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(grid.n());
        let inverse = planner.plan_fft_inverse(grid.n());
        Self {
            wn: WavenumberSet::new(&grid),
            grid,
            forward,
            inverse,
        }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn wavenumbers(&self) -> &WavenumberSet {
        &self.wn
    }

    pub fn zeros(&self) -> SpectralField {
        SpectralField::zeros(self.grid)
    }

    /// Physical samples `f(x₁ = i h, x₂ = j h)` to mode amplitudes.
    pub fn forward(&self, values: &Array2<f64>) -> Result<SpectralField> {
        let n = self.grid.n();
        if values.dim() != (n, n) {
            return Err(Error::size(format!("{n}x{n}"), format!("{:?}", values.dim())));
        }
        let mut data: Array2<Complex64> = values.mapv(|v| Complex64::new(v, 0.0));
        self.transform(&mut data, &self.forward);
        let norm = 1.0 / (n * n) as f64;
        data.mapv_inplace(|c| c * norm);
        SpectralField::from_coeffs(self.grid, data)
    }

    /// Mode amplitudes back to real physical samples.
    pub fn inverse(&self, field: &SpectralField) -> Result<Array2<f64>> {
        self.check_grid(field)?;
        let defect = field.hermitian_defect();
        if defect > HERMITIAN_TOLERANCE * field.max_abs().max(1.0) {
            return Err(Error::Symmetry { defect });
        }
        let mut data = field.coeffs().clone();
        self.transform(&mut data, &self.inverse);
        Ok(data.mapv(|c| c.re))
    }

    /// Zeroes every mode with `|k| > k_max`.
    pub fn dealias(&self, field: &SpectralField) -> SpectralField {
        let mut out = field.clone();
        self.dealias_in_place(&mut out);
        out
    }

    pub fn dealias_in_place(&self, field: &mut SpectralField) {
        Zip::from(field.coeffs_mut())
            .and(&self.wn.retained)
            .for_each(|c, &keep| {
                if !keep {
                    *c = Complex64::new(0.0, 0.0);
                }
            });
    }

    pub fn laplacian(&self, field: &SpectralField) -> SpectralField {
        field.map_symbol(&self.wn.k_squared, |k2| -k2)
    }

    /// Applies `(1 - α²Δ)`.
    pub fn helmholtz(&self, field: &SpectralField, alpha: f64) -> Result<SpectralField> {
        check_alpha(alpha)?;
        let a2 = alpha * alpha;
        Ok(field.map_symbol(&self.wn.k_squared, |k2| 1.0 + a2 * k2))
    }

    /// Applies `(1 - α²Δ)⁻¹`.
    pub fn helmholtz_inverse(&self, field: &SpectralField, alpha: f64) -> Result<SpectralField> {
        check_alpha(alpha)?;
        let a2 = alpha * alpha;
        Ok(field.map_symbol(&self.wn.k_squared, |k2| 1.0 / (1.0 + a2 * k2)))
    }

    /// Streamfunction with `Δψ = ω - mean(ω)` and zero mean.
    pub fn poisson_solve(&self, omega: &SpectralField) -> SpectralField {
        omega.map_symbol(&self.wn.k_squared, inverse_minus_laplacian_symbol)
    }

    /// `∂f/∂x₁` (`axis = 0`) or `∂f/∂x₂` (`axis = 1`).
    pub fn derivative(&self, field: &SpectralField, axis: usize) -> SpectralField {
        let mut out = field.clone();
        let k = &self.wn.k_deriv;
        for ((i, j), c) in out.coeffs_mut().indexed_iter_mut() {
            let kk = if axis == 0 { k[i] } else { k[j] };
            *c *= Complex64::new(0.0, kk);
        }
        out
    }

    /// `u = (-∂ψ/∂x₂, ∂ψ/∂x₁)`, so that `curl u = Δψ`.
    pub fn velocity_from_streamfunction(&self, psi: &SpectralField) -> (SpectralField, SpectralField) {
        let mut u1 = self.derivative(psi, 1);
        u1.scale(-1.0);
        (u1, self.derivative(psi, 0))
    }

    pub fn divergence(&self, u1: &SpectralField, u2: &SpectralField) -> SpectralField {
        let mut d = self.derivative(u1, 0);
        d.add_scaled(1.0, &self.derivative(u2, 1));
        d
    }

    pub fn curl(&self, u1: &SpectralField, u2: &SpectralField) -> SpectralField {
        let mut c = self.derivative(u2, 0);
        c.add_scaled(-1.0, &self.derivative(u1, 1));
        c
    }

    /// Dealiased `J[ψ, q] = ∂₁ψ ∂₂q - ∂₂ψ ∂₁q`.
    ///
    /// Inputs are truncated to `|k| ≤ k_max` before the product is formed.
    pub fn jacobian(&self, psi: &SpectralField, q: &SpectralField) -> Result<SpectralField> {
        self.check_grid(psi)?;
        self.check_grid(q)?;
        let n = self.grid.n();
        let mut a = Array2::zeros((n, n));
        let mut b = Array2::zeros((n, n));
        self.pack_gradient(psi.coeffs(), None, &mut a);
        self.pack_gradient(q.coeffs(), None, &mut b);
        let mut out = self.zeros();
        self.jacobian_packed(&mut a, &mut b, out.coeffs_mut());
        Ok(out)
    }

    /// `(i k₁ - k₂) f̂` on the retained modes, zero elsewhere: the spectrum of
    /// `∂₁f + i∂₂f`.
    pub(crate) fn pack_gradient(&self, f: &Array2<Complex64>, symbol: Option<&Array2<f64>>, dst: &mut Array2<Complex64>) {
        let k = &self.wn.k_deriv;
        dst.fill(Complex64::new(0.0, 0.0));
        for &(i, j) in &self.wn.retained_modes {
            let s = Complex64::new(-k[j], k[i]);
            let v = f[[i, j]] * s;
            dst[[i, j]] = match symbol {
                Some(m) => v * m[[i, j]],
                None => v,
            };
        }
    }

    /// Jacobian from packed gradients `a ↔ ∂₁ψ + i∂₂ψ`, `b ↔ ∂₁q + i∂₂q` (see
    /// [`Self::pack_gradient`]), written to `out`.
    ///
    /// `J = Im(conj(a)·b)` pointwise. `a` and `b` are used as workspace. The
    /// result is dealiased and exactly Hermitian.
    pub(crate) fn jacobian_packed(
        &self,
        a: &mut Array2<Complex64>,
        b: &mut Array2<Complex64>,
        out: &mut Array2<Complex64>,
    ) {
        let n = self.grid.n();
        self.inverse_to_transposed(a);
        self.inverse_to_transposed(b);
        Zip::from(&mut *a).and(&*b).for_each(|av, &bv| {
            *av = Complex64::new((av.conj() * bv).im, 0.0);
        });
        self.forward_from_transposed(a);
        let norm = 1.0 / (n * n) as f64;
        out.fill(Complex64::new(0.0, 0.0));
        for &(i, j) in &self.wn.retained_modes {
            let (ci, cj) = self.grid.conjugate_index(i, j);
            if (ci, cj) < (i, j) {
                continue;
            }
            if (ci, cj) == (i, j) {
                out[[i, j]] = Complex64::new(a[[i, j]].re * norm, 0.0);
            } else {
                let v = (a[[i, j]] + a[[ci, cj]].conj()) * (0.5 * norm);
                out[[i, j]] = v;
                out[[ci, cj]] = v.conj();
            }
        }
    }

    /// Random dealiased Hermitian field: each retained mode gets a uniform
    /// random phase and modulus `envelope(|k|)` times a uniform factor in `[0, 1)`.
    pub fn random_field(&self, seed: u64, envelope: impl Fn(f64) -> f64) -> SpectralField {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut out = self.zeros();
        for &(i, j) in &self.wn.retained_modes {
            let (ci, cj) = self.grid.conjugate_index(i, j);
            let modulus = envelope(self.wn.k_squared[[i, j]].sqrt()) * rng.gen::<f64>();
            let phase = rng.gen::<f64>() * std::f64::consts::TAU;
            if (ci, cj) < (i, j) {
                continue;
            }
            let value = Complex64::from_polar(modulus, phase);
            if (ci, cj) == (i, j) {
                out.coeffs_mut()[[i, j]] = Complex64::new(value.re, 0.0);
            } else {
                out.coeffs_mut()[[i, j]] = value;
                out.coeffs_mut()[[ci, cj]] = value.conj();
            }
        }
        out
    }

    fn check_grid(&self, field: &SpectralField) -> Result<()> {
        if *field.grid() != self.grid {
            return Err(Error::size(format!("{:?}", self.grid), format!("{:?}", field.grid())));
        }
        Ok(())
    }

    /// Row FFTs over the rows selected by `rows`, in place.
    fn row_transforms(&self, data: &mut [Complex64], plan: &Arc<dyn Fft<f64>>, rows: impl Fn(usize) -> bool) {
        let n = self.grid.n();
        let mut scratch = vec![Complex64::new(0.0, 0.0); plan.get_inplace_scratch_len()];
        for (i, row) in data.chunks_exact_mut(n).enumerate() {
            if rows(i) {
                plan.process_with_scratch(row, &mut scratch);
            }
        }
    }

    fn in_band(&self, i: usize) -> bool {
        self.grid.lattice_wavenumber(i).unsigned_abs() as usize <= self.grid.k_max()
    }

    /// Unnormalized 2-D transform in natural `[i, j]` layout.
    fn transform(&self, data: &mut Array2<Complex64>, plan: &Arc<dyn Fft<f64>>) {
        let n = self.grid.n();
        let slice = contiguous(data);
        self.row_transforms(slice, plan, |_| true);
        transpose_square(slice, n);
        self.row_transforms(slice, plan, |_| true);
        transpose_square(slice, n);
    }

    /// Inverse transform of a dealiased spectrum, leaving the physical values
    /// transposed. Rows beyond the dealiasing radius are zero and skipped.
    fn inverse_to_transposed(&self, data: &mut Array2<Complex64>) {
        let n = self.grid.n();
        let slice = contiguous(data);
        self.row_transforms(slice, &self.inverse, |i| self.in_band(i));
        transpose_square(slice, n);
        self.row_transforms(slice, &self.inverse, |_| true);
    }

    /// Forward transform of transposed physical values back to the natural
    /// spectral layout; only rows within the dealiasing radius are computed,
    /// the others are zeroed.
    fn forward_from_transposed(&self, data: &mut Array2<Complex64>) {
        let n = self.grid.n();
        let slice = contiguous(data);
        self.row_transforms(slice, &self.forward, |_| true);
        transpose_square(slice, n);
        for (i, row) in slice.chunks_exact_mut(n).enumerate() {
            if !self.in_band(i) {
                row.fill(Complex64::new(0.0, 0.0));
            }
        }
        self.row_transforms(slice, &self.forward, |i| self.in_band(i));
    }
}

fn contiguous(data: &mut Array2<Complex64>) -> &mut [Complex64] {
    data.as_slice_mut().expect("spectral arrays are contiguous row-major")
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha >= 0.0 && alpha.is_finite() {
        Ok(())
    } else {
        Err(Error::Parameter(format!("alpha must be >= 0, got {alpha}")))
    }
}

/// Symbol of `(-Δ)⁻¹` with the mean mode mapped to zero, negated: `-1/|k|²`.
pub(crate) fn inverse_minus_laplacian_symbol(k2: f64) -> f64 {
    if k2 == 0.0 {
        0.0
    } else {
        -1.0 / k2
    }
}

fn transpose_square(data: &mut [Complex64], n: usize) {
    const BLOCK: usize = 32;
    for ib in (0..n).step_by(BLOCK) {
        for jb in (ib..n).step_by(BLOCK) {
            for i in ib..(ib + BLOCK).min(n) {
                let j_start = if ib == jb { i + 1 } else { jb };
                for j in j_start..(jb + BLOCK).min(n) {
                    data.swap(i * n + j, j * n + i);
                }
            }
        }
    }
}
