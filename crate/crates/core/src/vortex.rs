//! Lagrangian vortex blobs in the unbounded plane.
//!
//! Each blob carries a fixed circulation and is advected by the velocity its
//! neighbours induce. The point kernel is the classical Biot-Savart law; the
//! `K₀` kernel smooths each blob over the length `α` so that the induced flow
//! is the averaged-Euler velocity of a delta in the transported vorticity.

use std::f64::consts::PI;
use std::io::Write;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::bessel;
use crate::error::{Error, Result};
use crate::spectral::GridSpec;
use crate::timestepper::{advance, StepController};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelKind {
    Point,
    BesselK0,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlobKernel {
    pub alpha: f64,
    pub kind: KernelKind,
}

impl BlobKernel {
    pub fn point() -> Self {
        Self { alpha: 0.0, kind: KernelKind::Point }
    }

    pub fn bessel_k0(alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::Parameter(format!("blob radius must be positive, got {alpha}")));
        }
        Ok(Self { alpha, kind: KernelKind::BesselK0 })
    }

    /// Point kernel for `α = 0`, `K₀` blobs otherwise.
    pub fn for_alpha(alpha: f64) -> Result<Self> {
        if alpha == 0.0 {
            Ok(Self::point())
        } else {
            Self::bessel_k0(alpha)
        }
    }

    /// `u_θ / Γ` at distance `r`.
    fn speed_per_circulation(&self, r: f64) -> Result<f64> {
        if !(r >= 0.0) {
            return Err(Error::Parameter(format!("distance must be nonnegative, got {r}")));
        }
        match self.kind {
            KernelKind::Point => {
                if r == 0.0 {
                    return Err(Error::Singularity("point vortex evaluated at its own centre".into()));
                }
                Ok(1.0 / (2.0 * PI * r))
            }
            KernelKind::BesselK0 => {
                if r == 0.0 {
                    return Ok(0.0);
                }
                let x = r / self.alpha;
                Ok(bessel::one_minus_x_k1(x) / (2.0 * PI * r))
            }
        }
    }

    /// Azimuthal speed induced at distance `r` by a blob of circulation `gamma`.
    pub fn tangential_speed(&self, r: f64, gamma: f64) -> Result<f64> {
        Ok(gamma * self.speed_per_circulation(r)?)
    }

    /// Stream Green's function, normalised so that `u_θ = -Γ dG/dr`.
    ///
    /// Point: `-ln r / 2π`. `K₀` blob: `-(ln r + K₀(r/α)) / 2π`, which solves
    /// `-Δ(1 - α²Δ)G = δ` and is finite at the origin.
    pub fn green(&self, r: f64) -> Result<f64> {
        if !(r >= 0.0) {
            return Err(Error::Parameter(format!("distance must be nonnegative, got {r}")));
        }
        match self.kind {
            KernelKind::Point => {
                if r == 0.0 {
                    return Err(Error::Singularity("point vortex Green's function at zero distance".into()));
                }
                Ok(-r.ln() / (2.0 * PI))
            }
            KernelKind::BesselK0 => {
                let x = r / self.alpha;
                Ok(-(bessel::k0_plus_ln(x) + self.alpha.ln()) / (2.0 * PI))
            }
        }
    }

    /// Velocity at offset `(dx, dy)` from a blob of circulation `gamma`.
    fn induced(&self, dx: f64, dy: f64, gamma: f64) -> Result<[f64; 2]> {
        let r = dx.hypot(dy);
        if r == 0.0 {
            // The smoothed kernel vanishes at its centre.
            self.speed_per_circulation(r)?;
            return Ok([0.0, 0.0]);
        }
        let s = gamma * self.speed_per_circulation(r)? / r;
        Ok([-s * dy, s * dx])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VortexSystem {
    pub positions: Vec<[f64; 2]>,
    pub circulations: Vec<f64>,
    pub kernel: BlobKernel,
}

impl VortexSystem {
    pub fn new(positions: Vec<[f64; 2]>, circulations: Vec<f64>, kernel: BlobKernel) -> Result<Self> {
        if positions.len() != circulations.len() {
            return Err(Error::Parameter(format!(
                "{} positions but {} circulations",
                positions.len(),
                circulations.len()
            )));
        }
        Ok(Self { positions, circulations, kernel })
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn total_circulation(&self) -> f64 {
        self.circulations.iter().sum()
    }

    /// `Σ Γ_i x_i`.
    pub fn linear_impulse(&self) -> [f64; 2] {
        self.positions
            .iter()
            .zip(&self.circulations)
            .fold([0.0, 0.0], |acc, (p, g)| [acc[0] + g * p[0], acc[1] + g * p[1]])
    }

    /// `Σ Γ_i |x_i|²`.
    pub fn angular_impulse(&self) -> f64 {
        self.positions
            .iter()
            .zip(&self.circulations)
            .map(|(p, g)| g * (p[0] * p[0] + p[1] * p[1]))
            .sum()
    }

    /// Velocity of every blob, excluding self-induction.
    pub fn blob_velocities(&self) -> Result<Vec<[f64; 2]>> {
        let n = self.len();
        let mut out = vec![[0.0; 2]; n];
        for i in 0..n {
            let [xi, yi] = self.positions[i];
            for j in (i + 1)..n {
                let [xj, yj] = self.positions[j];
                let (dx, dy) = (xi - xj, yi - yj);
                if dx == 0.0 && dy == 0.0 {
                    if self.kernel.kind == KernelKind::Point {
                        return Err(Error::Singularity(format!("point vortices {i} and {j} coincide")));
                    }
                    continue;
                }
                let r = dx.hypot(dy);
                let s = self.kernel.speed_per_circulation(r)? / r;
                // induced on i by j, and the reverse with opposite offset
                let gj = self.circulations[j] * s;
                let gi = self.circulations[i] * s;
                out[i][0] -= gj * dy;
                out[i][1] += gj * dx;
                out[j][0] += gi * dy;
                out[j][1] -= gi * dx;
            }
        }
        Ok(out)
    }

    fn flat_positions(&self) -> Vec<f64> {
        self.positions.iter().flat_map(|p| [p[0], p[1]]).collect()
    }

    fn with_flat_positions(&self, flat: &[f64]) -> Self {
        Self {
            positions: flat.chunks_exact(2).map(|c| [c[0], c[1]]).collect(),
            circulations: self.circulations.clone(),
            kernel: self.kernel,
        }
    }
}

/// Direct summation of the blob velocities at arbitrary points.
pub fn velocity_field(system: &VortexSystem, query_points: &[[f64; 2]]) -> Result<Vec<[f64; 2]>> {
    query_points
        .iter()
        .map(|q| {
            let mut u = [0.0, 0.0];
            for (p, &g) in system.positions.iter().zip(&system.circulations) {
                let v = system.kernel.induced(q[0] - p[0], q[1] - p[1], g)?;
                u[0] += v[0];
                u[1] += v[1];
            }
            Ok(u)
        })
        .collect()
}

/// `H = -Σ_{i<j} Γ_i Γ_j G(|x_i - x_j|)`.
pub fn blob_hamiltonian(system: &VortexSystem) -> Result<f64> {
    let mut h = 0.0;
    for i in 0..system.len() {
        for j in (i + 1)..system.len() {
            let [xi, yi] = system.positions[i];
            let [xj, yj] = system.positions[j];
            let r = (xi - xj).hypot(yi - yj);
            h -= system.circulations[i] * system.circulations[j] * system.kernel.green(r)?;
        }
    }
    Ok(h)
}

/// Blob positions at the initial time and after every accepted step.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub positions: Vec<Vec<[f64; 2]>>,
}

impl Trajectory {
    pub fn final_positions(&self) -> &[[f64; 2]] {
        self.positions.last().map(Vec::as_slice).unwrap_or(&[])
    }

    /// CSV with columns `t,x1,y1,...,xN,yN`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        let n = self.positions.first().map_or(0, Vec::len);
        write!(w, "t")?;
        for i in 1..=n {
            write!(w, ",x{i},y{i}")?;
        }
        writeln!(w)?;
        for (t, ps) in self.times.iter().zip(&self.positions) {
            write!(w, "{t:e}")?;
            for p in ps {
                write!(w, ",{:e},{:e}", p[0], p[1])?;
            }
            writeln!(w)?;
        }
        Ok(())
    }
}

/// Advects the blobs from `t = 0` to `t_end`; circulations never change.
pub fn evolve(system: &VortexSystem, t_end: f64, controller: &mut StepController) -> Result<Trajectory> {
    let mut state = system.flat_positions();
    let mut t = 0.0;
    let mut trajectory = Trajectory {
        times: vec![0.0],
        positions: vec![system.positions.clone()],
    };
    let mut rhs = |_t: f64, y: &Vec<f64>| -> Result<Vec<f64>> {
        let vel = system.with_flat_positions(y).blob_velocities()?;
        Ok(vel.into_iter().flat_map(|v| [v[0], v[1]]).collect())
    };
    advance(&mut state, &mut t, &mut rhs, controller, t_end, |t, y| {
        trajectory.times.push(t);
        trajectory.positions.push(y.chunks_exact(2).map(|c| [c[0], c[1]]).collect());
    })?;
    Ok(trajectory)
}

/// One blob per grid cell centred on the grid point, `Γ = q · cell area`.
pub fn sample_field_to_blobs(omega: &Array2<f64>, grid: &GridSpec, alpha: f64) -> Result<VortexSystem> {
    let n = grid.n();
    if omega.dim() != (n, n) {
        return Err(Error::size(format!("{n}x{n}"), format!("{:?}", omega.dim())));
    }
    let cell = grid.spacing() * grid.spacing();
    let mut positions = Vec::with_capacity(n * n);
    let mut circulations = Vec::with_capacity(n * n);
    for ((i, j), &q) in omega.indexed_iter() {
        positions.push([grid.coordinate(i), grid.coordinate(j)]);
        circulations.push(q * cell);
    }
    VortexSystem::new(positions, circulations, BlobKernel::for_alpha(alpha)?)
}
