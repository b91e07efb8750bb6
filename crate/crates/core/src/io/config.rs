//! Run configuration read from flat `section.key = value` text.
//!
//! ```text
//! grid.n = 256
//! physics.k_alpha = 21      # 0 means k_α = ∞ (Euler)
//! physics.delta = 2.0
//! run.t_end = 20.0
//! ```
//!
//! Every key is optional; omitted keys take the defaults below.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::dynamics::{ForcingSpec, PhysicsParams};
use crate::error::{Error, Result};
use crate::spectral::GridSpec;
use crate::timestepper::StepController;

/// Default `ν k_max²` when `physics.nu` is omitted, so `(ν k_max²)⁴ = 81`.
pub const DEFAULT_NU_KMAX_SQUARED: f64 = 3.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    pub n: usize,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self { n: 256 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PhysicsConfig {
    /// `1/α`; `0` selects the Euler equations.
    pub k_alpha: f64,
    /// Hyperviscosity; derived from the grid when absent.
    pub nu: Option<f64>,
    /// Large-scale friction multiplying `ψ`.
    pub delta: f64,
}

impl Default for PhysicsConfig {
    fn default() -> Self {
        Self { k_alpha: 0.0, nu: None, delta: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ForcingConfig {
    pub k_lo: f64,
    pub k_hi: f64,
    /// Modulus held by every forced vorticity coefficient.
    pub amplitude: f64,
}

impl Default for ForcingConfig {
    fn default() -> Self {
        Self { k_lo: 10.0, k_hi: 10.001, amplitude: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InitConfig {
    /// Amplitude of the broadband perturbation added to the forced shell.
    pub noise: f64,
}

impl Default for InitConfig {
    fn default() -> Self {
        Self { noise: 0.5 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunSection {
    pub t_end: f64,
    pub rtol: f64,
    pub atol: f64,
    pub seed: u64,
    /// First trial step.
    pub dt: f64,
}

impl Default for RunSection {
    fn default() -> Self {
        Self { t_end: 20.0, rtol: 1e-5, atol: 1e-6, seed: 1, dt: 1e-3 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub series_interval: f64,
    pub spectrum_interval: f64,
    pub checkpoint_interval: f64,
    pub dir: PathBuf,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            series_interval: 0.1,
            spectrum_interval: 0.1,
            checkpoint_interval: 5.0,
            dir: PathBuf::from("run"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub grid: GridConfig,
    pub physics: PhysicsConfig,
    pub forcing: ForcingConfig,
    pub init: InitConfig,
    pub run: RunSection,
    pub output: OutputConfig,
}

impl RunConfig {
    /// Parses and validates.
    pub fn from_toml(text: &str) -> Result<Self> {
        let config: Self = toml::from_str(text).map_err(|e| Error::Config(e.message().to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    /// One `section.key = value` line per setting, with `physics.nu` resolved.
    pub fn to_flat_toml(&self) -> Result<String> {
        let mut resolved = self.clone();
        resolved.physics.nu = Some(self.nu()?);
        let value = toml::Value::try_from(&resolved).map_err(|e| Error::Config(e.to_string()))?;
        let mut out = String::new();
        if let toml::Value::Table(sections) = value {
            for (section, body) in sections {
                if let toml::Value::Table(keys) = body {
                    for (key, v) in keys {
                        out.push_str(&format!("{section}.{key} = {v}\n"));
                    }
                }
            }
        }
        Ok(out)
    }

    pub fn validate(&self) -> Result<()> {
        let grid = self.grid_spec()?;
        let positive = [
            ("run.rtol", self.run.rtol),
            ("run.dt", self.run.dt),
            ("output.series_interval", self.output.series_interval),
            ("output.spectrum_interval", self.output.spectrum_interval),
            ("output.checkpoint_interval", self.output.checkpoint_interval),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("{name} must be positive, got {v}")));
            }
        }
        let nonnegative = [
            ("physics.k_alpha", self.physics.k_alpha),
            ("physics.delta", self.physics.delta),
            ("init.noise", self.init.noise),
            ("run.t_end", self.run.t_end),
            ("run.atol", self.run.atol),
        ];
        for (name, v) in nonnegative {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("{name} must be >= 0, got {v}")));
            }
        }
        if let Some(nu) = self.physics.nu {
            if !(nu >= 0.0 && nu.is_finite()) {
                return Err(Error::Config(format!("physics.nu must be >= 0, got {nu}")));
            }
        }
        self.forcing_spec(&grid)?;
        Ok(())
    }

    pub fn grid_spec(&self) -> Result<GridSpec> {
        GridSpec::new(self.grid.n).map_err(|e| Error::Config(format!("grid.n: {e}")))
    }

    pub fn alpha(&self) -> Result<f64> {
        PhysicsParams::alpha_from_k_alpha(self.physics.k_alpha).map_err(|e| Error::Config(e.to_string()))
    }

    /// `physics.nu`, or `DEFAULT_NU_KMAX_SQUARED / k_max²` for this grid.
    pub fn nu(&self) -> Result<f64> {
        match self.physics.nu {
            Some(nu) => Ok(nu),
            None => {
                let k_max = self.grid_spec()?.k_max() as f64;
                Ok(DEFAULT_NU_KMAX_SQUARED / (k_max * k_max))
            }
        }
    }

    pub fn forcing_spec(&self, grid: &GridSpec) -> Result<ForcingSpec> {
        ForcingSpec::new(grid, self.forcing.k_lo, self.forcing.k_hi, self.forcing.amplitude)
            .map_err(|e| Error::Config(e.to_string()))
    }

    /// Physical parameters; forcing phases are filled in by the initial condition.
    pub fn physics_params(&self) -> Result<PhysicsParams> {
        let grid = self.grid_spec()?;
        Ok(PhysicsParams {
            alpha: self.alpha()?,
            nu: self.nu()?,
            delta: self.physics.delta,
            forcing: Some(self.forcing_spec(&grid)?),
        })
    }

    pub fn controller(&self) -> StepController {
        StepController::new(self.run.rtol, self.run.atol, self.run.dt)
    }

    /// Same physics on an `n`-point grid; `ν` is pinned to this grid's value.
    pub fn at_resolution(&self, n: usize) -> Result<Self> {
        let mut out = self.clone();
        out.physics.nu = Some(self.nu()?);
        out.grid.n = n;
        out.validate()?;
        Ok(out)
    }
}
