use ndarray::{Array2, Zip};
use num_complex::Complex64;

use super::grid::GridSpec;
use crate::error::{Error, Result};

/// Fourier coefficients of a real scalar field on a periodic grid.
///
/// `coeffs[[i, j]]` is the amplitude of `exp(i (k₁ x₁ + k₂ x₂))` with
/// `k₁ = grid.lattice_wavenumber(i)` and `k₂ = grid.lattice_wavenumber(j)`.
/// Coefficients are mode amplitudes: a constant field `c` has `coeffs[[0, 0]] = c`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralField {
    grid: GridSpec,
    coeffs: Array2<Complex64>,
}

impl SpectralField {
    pub fn zeros(grid: GridSpec) -> Self {
        let n = grid.n();
        Self {
            grid,
            coeffs: Array2::zeros((n, n)),
        }
    }

    pub fn from_coeffs(grid: GridSpec, coeffs: Array2<Complex64>) -> Result<Self> {
        let n = grid.n();
        if coeffs.dim() != (n, n) {
            return Err(Error::size(format!("{n}x{n}"), format!("{:?}", coeffs.dim())));
        }
        Ok(Self { grid, coeffs })
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn coeffs(&self) -> &Array2<Complex64> {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut Array2<Complex64> {
        &mut self.coeffs
    }

    pub fn into_coeffs(self) -> Array2<Complex64> {
        self.coeffs
    }

    /// Coefficient of integer wavenumber `(k1, k2)`; zero if off the grid.
    pub fn mode(&self, k1: i64, k2: i64) -> Complex64 {
        match (self.grid.index_of(k1), self.grid.index_of(k2)) {
            (Some(i), Some(j)) => self.coeffs[[i, j]],
            _ => Complex64::new(0.0, 0.0),
        }
    }

    /// Sets mode `k` to `value` and mode `-k` to its conjugate.
    pub fn set_mode_pair(&mut self, k1: i64, k2: i64, value: Complex64) -> Result<()> {
        let (i, j) = match (self.grid.index_of(k1), self.grid.index_of(k2)) {
            (Some(i), Some(j)) => (i, j),
            _ => {
                return Err(Error::Parameter(format!(
                    "mode ({k1}, {k2}) is not on a {} grid",
                    self.grid.n()
                )))
            }
        };
        let (ci, cj) = self.grid.conjugate_index(i, j);
        if (ci, cj) == (i, j) {
            self.coeffs[[i, j]] = Complex64::new(value.re, 0.0);
        } else {
            self.coeffs[[i, j]] = value;
            self.coeffs[[ci, cj]] = value.conj();
        }
        Ok(())
    }

    pub fn ensure_same_grid(&self, other: &SpectralField) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::size(
                format!("{:?}", self.grid),
                format!("{:?}", other.grid),
            ));
        }
        Ok(())
    }

    /// Largest `|c(k) - conj(c(-k))|` over the lattice.
    pub fn hermitian_defect(&self) -> f64 {
        let n = self.grid.n();
        let mut defect: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                let (ci, cj) = self.grid.conjugate_index(i, j);
                defect = defect.max((self.coeffs[[i, j]] - self.coeffs[[ci, cj]].conj()).norm());
            }
        }
        defect
    }

    /// Projects onto the Hermitian subspace: `c(k) <- (c(k) + conj(c(-k)))/2`.
    pub fn symmetrize(&mut self) {
        let n = self.grid.n();
        for i in 0..n {
            for j in 0..n {
                let (ci, cj) = self.grid.conjugate_index(i, j);
                if (ci, cj) < (i, j) {
                    continue;
                }
                if (ci, cj) == (i, j) {
                    self.coeffs[[i, j]].im = 0.0;
                } else {
                    let avg = (self.coeffs[[i, j]] + self.coeffs[[ci, cj]].conj()) * 0.5;
                    self.coeffs[[i, j]] = avg;
                    self.coeffs[[ci, cj]] = avg.conj();
                }
            }
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |m, c| m.max(c.norm()))
    }

    /// `self += a * x`.
    pub fn add_scaled(&mut self, a: f64, x: &SpectralField) {
        Zip::from(&mut self.coeffs)
            .and(&x.coeffs)
            .for_each(|y, &xv| *y += xv * a);
    }

    pub fn scale(&mut self, a: f64) {
        self.coeffs.mapv_inplace(|c| c * a);
    }

    /// Per-mode multiply by a real symbol `f(|k|²)`.
    pub(crate) fn map_symbol(&self, k_squared: &Array2<f64>, f: impl Fn(f64) -> f64) -> Self {
        let mut out = self.clone();
        Zip::from(&mut out.coeffs)
            .and(k_squared)
            .for_each(|c, &k2| *c *= f(k2));
        out
    }
}
