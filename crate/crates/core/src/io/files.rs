//! CSV artifacts of a run and their readers.
//!
//! Floats are written with Rust's shortest round-trip formatting, so every
//! file parses back to the exact values that were written.

use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::diagnostics::{DiagnosticsRecord, Spectrum};
use crate::error::{Error, Result};
use crate::vortex::Trajectory;

pub const SERIES_FILE: &str = "series.csv";
pub const SERIES_HEADER: &str = "t,E,Z,E_H1,Z_H2,dt";
pub const SPECTRA_DIR: &str = "spectra";
pub const SPECTRUM_INDEX: &str = "index.csv";
pub const SPECTRUM_HEADER: &str = "k,E";
pub const CHECKPOINT_DIR: &str = "checkpoints";

/// Reads a numeric CSV, checking the header, and returns the rows.
fn read_table(path: &Path, header: Option<&str>) -> Result<(String, Vec<Vec<String>>)> {
    let file = File::open(path).map_err(|e| Error::format(path, e))?;
    let mut lines = BufReader::new(file).lines();
    let head = match lines.next() {
        Some(line) => line?,
        None => return Err(Error::format(path, "empty file")),
    };
    if let Some(expected) = header {
        if head.trim() != expected {
            return Err(Error::format(path, format!("expected header '{expected}', found '{head}'")));
        }
    }
    let mut rows = Vec::new();
    for line in lines {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        rows.push(line.split(',').map(|s| s.trim().to_string()).collect());
    }
    Ok((head, rows))
}

fn parse_f64(path: &Path, field: &str) -> Result<f64> {
    field
        .parse()
        .map_err(|_| Error::format(path, format!("'{field}' is not a number")))
}

fn parse_numeric_rows(path: &Path, rows: &[Vec<String>], width: usize) -> Result<Vec<Vec<f64>>> {
    rows.iter()
        .map(|r| {
            if r.len() != width {
                return Err(Error::format(path, format!("expected {width} columns, found {}", r.len())));
            }
            r.iter().map(|f| parse_f64(path, f)).collect()
        })
        .collect()
}

/// Keeps the header and every row whose first field is at most `t`.
///
/// Used on resume so artifacts written after the checkpoint are replaced.
pub fn truncate_after(path: &Path, t: f64) -> Result<()> {
    let text = std::fs::read_to_string(path)?;
    let mut kept = String::new();
    for (i, line) in text.lines().enumerate() {
        let keep = i == 0
            || line
                .split(',')
                .next()
                .and_then(|f| f.trim().parse::<f64>().ok())
                .is_some_and(|v| v <= t);
        if keep {
            kept.push_str(line);
            kept.push('\n');
        }
    }
    std::fs::write(path, kept)?;
    Ok(())
}

/// Appends rows to `series.csv`.
pub struct SeriesWriter {
    out: BufWriter<File>,
}

impl SeriesWriter {
    /// Fresh file with header.
    pub fn create(path: &Path) -> Result<Self> {
        let mut out = BufWriter::new(File::create(path)?);
        writeln!(out, "{SERIES_HEADER}")?;
        Ok(Self { out })
    }

    /// Existing file truncated after `t`, or a fresh one.
    pub fn resume(path: &Path, t: f64) -> Result<Self> {
        if !path.exists() {
            return Self::create(path);
        }
        read_table(path, Some(SERIES_HEADER))?;
        truncate_after(path, t)?;
        let out = BufWriter::new(OpenOptions::new().append(true).open(path)?);
        Ok(Self { out })
    }

    pub fn write(&mut self, r: &DiagnosticsRecord) -> Result<()> {
        writeln!(
            self.out,
            "{:e},{:e},{:e},{:e},{:e},{:e}",
            r.t, r.energy, r.enstrophy, r.energy_h1, r.enstrophy_h2, r.dt
        )?;
        Ok(())
    }

    pub fn flush(&mut self) -> Result<()> {
        self.out.flush()?;
        Ok(())
    }
}

pub fn read_series(path: &Path) -> Result<Vec<DiagnosticsRecord>> {
    let (_, rows) = read_table(path, Some(SERIES_HEADER))?;
    Ok(parse_numeric_rows(path, &rows, 6)?
        .into_iter()
        .map(|v| DiagnosticsRecord {
            t: v[0],
            energy: v[1],
            enstrophy: v[2],
            energy_h1: v[3],
            enstrophy_h2: v[4],
            dt: v[5],
        })
        .collect())
}

pub fn write_spectrum(path: &Path, spectrum: &Spectrum) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    writeln!(out, "{SPECTRUM_HEADER}")?;
    for (k, e) in spectrum.shells() {
        writeln!(out, "{k},{e:e}")?;
    }
    out.flush()?;
    Ok(())
}

/// Reads a `k,E` file; shells must be `1, 2, …` in order.
pub fn read_spectrum(path: &Path, t: f64) -> Result<Spectrum> {
    let (_, rows) = read_table(path, Some(SPECTRUM_HEADER))?;
    let values = parse_numeric_rows(path, &rows, 2)?;
    let mut energy = Vec::with_capacity(values.len());
    for (i, v) in values.iter().enumerate() {
        if v[0] != (i + 1) as f64 {
            return Err(Error::format(path, format!("shell {} out of order", v[0])));
        }
        energy.push(v[1]);
    }
    Ok(Spectrum { t, energy })
}

/// Snapshot files of a run directory, listed in `spectra/index.csv`.
pub struct SpectrumIndex {
    dir: PathBuf,
    out: BufWriter<File>,
}

impl SpectrumIndex {
    pub fn open(run_dir: &Path, resume_t: Option<f64>) -> Result<Self> {
        let dir = run_dir.join(SPECTRA_DIR);
        std::fs::create_dir_all(&dir)?;
        let path = dir.join(SPECTRUM_INDEX);
        let out = match resume_t {
            Some(t) if path.exists() => {
                truncate_after(&path, t)?;
                BufWriter::new(OpenOptions::new().append(true).open(&path)?)
            }
            _ => {
                let mut out = BufWriter::new(File::create(&path)?);
                writeln!(out, "t,file")?;
                out
            }
        };
        Ok(Self { dir, out })
    }

    /// Writes the snapshot file and its index row.
    pub fn add(&mut self, spectrum: &Spectrum) -> Result<()> {
        let name = format!("spectrum_t{:012.6}.csv", spectrum.t);
        write_spectrum(&self.dir.join(&name), spectrum)?;
        writeln!(self.out, "{:e},{name}", spectrum.t)?;
        Ok(())
    }

    pub fn flush(&mut self) -> Result<()> {
        self.out.flush()?;
        Ok(())
    }
}

/// Every snapshot listed in the index of `run_dir`.
pub fn read_snapshots(run_dir: &Path) -> Result<Vec<Spectrum>> {
    let dir = run_dir.join(SPECTRA_DIR);
    let index = dir.join(SPECTRUM_INDEX);
    let (_, rows) = read_table(&index, Some("t,file"))?;
    rows.iter()
        .map(|r| {
            if r.len() != 2 {
                return Err(Error::format(&index, "expected 2 columns"));
            }
            let t = parse_f64(&index, &r[0])?;
            read_spectrum(&dir.join(&r[1]), t)
        })
        .collect()
}

pub fn read_trajectory(path: &Path) -> Result<Trajectory> {
    let (head, rows) = read_table(path, None)?;
    let cols: Vec<&str> = head.split(',').collect();
    let width = cols.len();
    if cols.first() != Some(&"t") || width % 2 != 1 {
        return Err(Error::format(path, "trajectory header must be t,x1,y1,..."));
    }
    let values = parse_numeric_rows(path, &rows, width)?;
    Ok(Trajectory {
        times: values.iter().map(|v| v[0]).collect(),
        positions: values
            .iter()
            .map(|v| v[1..].chunks_exact(2).map(|c| [c[0], c[1]]).collect())
            .collect(),
    })
}
