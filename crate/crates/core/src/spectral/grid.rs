use std::f64::consts::PI;

use ndarray::Array2;

use crate::error::{Error, Result};

/// Periodic square grid and its dealiasing radius.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    n: usize,
    domain_length: f64,
    k_max: usize,
}

impl GridSpec {
    /// `n × n` grid on `[0, 2π)²` with the two-thirds truncation radius `⌊n/3⌋`.
    pub fn new(n: usize) -> Result<Self> {
        Self::with_domain_length(n, 2.0 * PI)
    }

    pub fn with_domain_length(n: usize, domain_length: f64) -> Result<Self> {
        if n < 4 || !n.is_multiple_of(2) {
            return Err(Error::Parameter(format!(
                "grid size must be an even integer >= 4, got {n}"
            )));
        }
        if !(domain_length > 0.0 && domain_length.is_finite()) {
            return Err(Error::Parameter(format!(
                "domain length must be positive, got {domain_length}"
            )));
        }
        Ok(Self {
            n,
            domain_length,
            k_max: n / 3,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn domain_length(&self) -> f64 {
        self.domain_length
    }

    /// Dealiasing radius in lattice units.
    pub fn k_max(&self) -> usize {
        self.k_max
    }

    /// Spacing between collocation points.
    pub fn spacing(&self) -> f64 {
        self.domain_length / self.n as f64
    }

    pub fn area(&self) -> f64 {
        self.domain_length * self.domain_length
    }

    /// Physical wavenumber per lattice step (1 on the 2π domain).
    pub fn base_wavenumber(&self) -> f64 {
        2.0 * PI / self.domain_length
    }

    /// Signed integer wavenumber stored at array index `i`.
    pub fn lattice_wavenumber(&self, i: usize) -> i64 {
        let n = self.n as i64;
        let i = i as i64;
        if i <= n / 2 {
            i
        } else {
            i - n
        }
    }

    /// Array index holding integer wavenumber `k`, if it fits on the grid.
    pub fn index_of(&self, k: i64) -> Option<usize> {
        let n = self.n as i64;
        if k > n / 2 || k <= -n / 2 {
            None
        } else {
            Some(k.rem_euclid(n) as usize)
        }
    }

    /// Index of the mode `-k` for the mode stored at `(i, j)`.
    pub fn conjugate_index(&self, i: usize, j: usize) -> (usize, usize) {
        ((self.n - i) % self.n, (self.n - j) % self.n)
    }

    /// Collocation coordinate for index `i`.
    pub fn coordinate(&self, i: usize) -> f64 {
        i as f64 * self.spacing()
    }
}

/// Precomputed wavenumber lattice: `|k|²`, shell index and dealiasing mask.
#[derive(Debug, Clone)]
pub struct WavenumberSet {
    /// Physical wavenumber along each axis, indexed by array position.
    pub k: Vec<f64>,
    /// Wavenumber for first derivatives, with the Nyquist entry zeroed.
    pub k_deriv: Vec<f64>,
    pub k_squared: Array2<f64>,
    /// `round(|k|)` in lattice units.
    pub shell: Array2<usize>,
    pub retained: Array2<bool>,
    /// Indices of retained modes, row-major.
    pub retained_modes: Vec<(usize, usize)>,
}

impl WavenumberSet {
    pub fn new(grid: &GridSpec) -> Self {
        let n = grid.n();
        let base = grid.base_wavenumber();
        let lattice: Vec<i64> = (0..n).map(|i| grid.lattice_wavenumber(i)).collect();
        let k: Vec<f64> = lattice.iter().map(|&m| m as f64 * base).collect();
        let k_deriv = lattice
            .iter()
            .map(|&m| if m == (n / 2) as i64 { 0.0 } else { m as f64 * base })
            .collect();
        let k_max_sq = (grid.k_max() * grid.k_max()) as i64;
        let k_squared = Array2::from_shape_fn((n, n), |(i, j)| k[i] * k[i] + k[j] * k[j]);
        let shell = Array2::from_shape_fn((n, n), |(i, j)| {
            let m2 = lattice[i] * lattice[i] + lattice[j] * lattice[j];
            (m2 as f64).sqrt().round() as usize
        });
        let retained = Array2::from_shape_fn((n, n), |(i, j)| {
            lattice[i] * lattice[i] + lattice[j] * lattice[j] <= k_max_sq
        });
        let retained_modes = retained
            .indexed_iter()
            .filter(|(_, &keep)| keep)
            .map(|(ij, _)| ij)
            .collect();
        Self {
            k,
            k_deriv,
            k_squared,
            shell,
            retained,
            retained_modes,
        }
    }
}
