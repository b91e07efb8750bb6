//! Binary checkpoints.
//!
//! Layout, all little-endian:
//!
//! | bytes | content |
//! |-------|---------|
//! | 4 | magic `AEU2` |
//! | 4 | format version (`u32`) |
//! | 4 | `n` (`u32`) |
//! | 8 × 9 | `f64`: domain length, α, ν, δ, forcing `k_lo`, `k_hi`, amplitude, `t`, next step size |
//! | 16 × n² | coefficients as interleaved `(re, im)` `f64`, row-major in `(k₁, k₂)` index order |

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use ndarray::Array2;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::spectral::{GridSpec, SpectralField};

pub const MAGIC: &[u8; 4] = b"AEU2";
pub const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub grid: GridSpec,
    pub alpha: f64,
    pub nu: f64,
    pub delta: f64,
    pub forcing_k_lo: f64,
    pub forcing_k_hi: f64,
    pub forcing_amplitude: f64,
    pub t: f64,
    /// Step size the controller would try next.
    pub dt_next: f64,
    pub omega: SpectralField,
}

impl Checkpoint {
    fn params(&self) -> [f64; 9] {
        [
            self.grid.domain_length(),
            self.alpha,
            self.nu,
            self.delta,
            self.forcing_k_lo,
            self.forcing_k_hi,
            self.forcing_amplitude,
            self.t,
            self.dt_next,
        ]
    }

    pub fn write_to<W: Write>(&self, w: &mut W) -> std::io::Result<()> {
        w.write_all(MAGIC)?;
        w.write_all(&VERSION.to_le_bytes())?;
        w.write_all(&(self.grid.n() as u32).to_le_bytes())?;
        for p in self.params() {
            w.write_all(&p.to_le_bytes())?;
        }
        for c in self.omega.coeffs().iter() {
            w.write_all(&c.re.to_le_bytes())?;
            w.write_all(&c.im.to_le_bytes())?;
        }
        Ok(())
    }

    /// Writes through a temporary file so a crash never leaves a torn checkpoint.
    pub fn save(&self, path: &Path) -> Result<()> {
        let tmp = path.with_extension("partial");
        {
            let mut w = BufWriter::new(File::create(&tmp)?);
            self.write_to(&mut w)?;
            w.flush()?;
        }
        std::fs::rename(&tmp, path)?;
        Ok(())
    }

    pub fn read_from<R: Read>(r: &mut R, origin: &Path) -> Result<Self> {
        let bad = |reason: &str| Error::format(origin, reason);
        let mut head = [0u8; 12];
        r.read_exact(&mut head).map_err(|_| bad("truncated header"))?;
        if &head[..4] != MAGIC {
            return Err(bad("not a checkpoint (bad magic)"));
        }
        let version = u32::from_le_bytes(head[4..8].try_into().unwrap());
        if version != VERSION {
            return Err(bad(&format!("unsupported version {version}")));
        }
        let n = u32::from_le_bytes(head[8..12].try_into().unwrap()) as usize;
        let mut read_f64 = |what: &str| -> Result<f64> {
            let mut b = [0u8; 8];
            r.read_exact(&mut b).map_err(|_| bad(&format!("truncated {what}")))?;
            Ok(f64::from_le_bytes(b))
        };
        let mut p = [0.0; 9];
        for v in &mut p {
            *v = read_f64("parameters")?;
        }
        let grid = GridSpec::with_domain_length(n, p[0]).map_err(|e| bad(&e.to_string()))?;
        let mut coeffs = Array2::<Complex64>::zeros((n, n));
        for c in coeffs.iter_mut() {
            let re = read_f64("coefficients")?;
            let im = read_f64("coefficients")?;
            *c = Complex64::new(re, im);
        }
        let mut extra = [0u8; 1];
        if r.read(&mut extra)? != 0 {
            return Err(bad("trailing bytes"));
        }
        Ok(Self {
            grid,
            alpha: p[1],
            nu: p[2],
            delta: p[3],
            forcing_k_lo: p[4],
            forcing_k_hi: p[5],
            forcing_amplitude: p[6],
            t: p[7],
            dt_next: p[8],
            omega: SpectralField::from_coeffs(grid, coeffs)?,
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = File::open(path).map_err(|e| Error::format(path, e))?;
        Self::read_from(&mut BufReader::new(file), path)
    }
}
