//! File formats: cubes as a JSON header plus a raw little-endian `f64`
//! companion, and two-column CSV series.

use std::fs;
use std::io::{BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimator::Cube;
use crate::laguerre::TimeGrid;

pub const DTYPE: &str = "f64";
pub const ORDER: &str = "t-major row-major";
pub const ENDIANNESS: &str = "little";

/// JSON header of a cube file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CubeHeader {
    pub n1: usize,
    pub n2: usize,
    pub n: usize,
    #[serde(rename = "T")]
    pub horizon: f64,
    pub dtype: String,
    pub order: String,
    pub endianness: String,
}

impl CubeHeader {
    pub fn for_cube(cube: &Cube<f64>) -> Self {
        let (n, n1, n2) = cube.shape();
        Self {
            n1,
            n2,
            n,
            horizon: cube.grid().horizon(),
            dtype: DTYPE.into(),
            order: ORDER.into(),
            endianness: ENDIANNESS.into(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n1 == 0 || self.n2 == 0 || self.n == 0 {
            return Err(Error::Format(format!(
                "header sizes must be positive (n={}, n1={}, n2={})",
                self.n, self.n1, self.n2
            )));
        }
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return Err(Error::Format(format!(
                "header T must be positive, got {}",
                self.horizon
            )));
        }
        for (field, got, want) in [
            ("dtype", &self.dtype, DTYPE),
            ("order", &self.order, ORDER),
            ("endianness", &self.endianness, ENDIANNESS),
        ] {
            if got != want {
                return Err(Error::Format(format!(
                    "unsupported {field} `{got}`, expected `{want}`"
                )));
            }
        }
        Ok(())
    }

    pub fn byte_len(&self) -> u64 {
        8 * (self.n * self.n1 * self.n2) as u64
    }
}

/// Binary companion of a header path: same name with extension `bin`.
pub fn companion_path(header: &Path) -> PathBuf {
    header.with_extension("bin")
}

/// Writes `<path>` (JSON header) and its `.bin` companion.
pub fn write_cube(path: &Path, cube: &Cube<f64>) -> Result<()> {
    let header = CubeHeader::for_cube(cube);
    fs::write(path, serde_json::to_string_pretty(&header)? + "\n")?;
    let mut w = BufWriter::new(fs::File::create(companion_path(path))?);
    for v in cube.as_slice() {
        w.write_all(&v.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_header(path: &Path) -> Result<CubeHeader> {
    let header: CubeHeader = serde_json::from_str(&fs::read_to_string(path)?)?;
    header.validate()?;
    Ok(header)
}

/// Reads a cube, checking the binary length against the header before
/// loading any samples.
pub fn read_cube(path: &Path) -> Result<Cube<f64>> {
    let header = read_header(path)?;
    let bin = companion_path(path);
    let actual = fs::metadata(&bin)?.len();
    if actual != header.byte_len() {
        return Err(Error::Format(format!(
            "{} holds {actual} bytes, header requires {}",
            bin.display(),
            header.byte_len()
        )));
    }
    let mut bytes = Vec::with_capacity(actual as usize);
    fs::File::open(&bin)?.read_to_end(&mut bytes)?;
    let data = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
        .collect();
    let grid = TimeGrid::new(header.n, header.horizon)?;
    Cube::new(grid, header.n1, header.n2, data).map_err(|e| Error::Format(e.to_string()))
}

/// A sampled curve `(t_k, v_k)` with strictly increasing `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub t: Vec<f64>,
    pub values: Vec<f64>,
}

impl Series {
    pub fn new(t: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if t.len() != values.len() {
            return Err(Error::LengthMismatch {
                what: "series values",
                expected: t.len(),
                found: values.len(),
            });
        }
        if let Some(w) = t
            .windows(2)
            .position(|w| w[1].partial_cmp(&w[0]) != Some(std::cmp::Ordering::Greater))
        {
            return Err(Error::Format(format!(
                "series times must increase strictly (row {})",
                w + 2
            )));
        }
        if t.iter().chain(&values).any(|v| !v.is_finite()) {
            return Err(Error::Format("series contains non-finite values".into()));
        }
        Ok(Self { t, values })
    }

    pub fn on_grid(grid: &TimeGrid, values: Vec<f64>) -> Result<Self> {
        Self::new((0..grid.len()).map(|k| grid.point(k)).collect(), values)
    }

    /// Checks the times against `grid` (relative tolerance `1e-9`).
    pub fn check_grid(&self, grid: &TimeGrid) -> Result<()> {
        if self.t.len() != grid.len() {
            return Err(Error::LengthMismatch {
                what: "series samples on the data grid",
                expected: grid.len(),
                found: self.t.len(),
            });
        }
        for (k, t) in self.t.iter().enumerate() {
            let want = grid.point(k);
            if (t - want).abs() > 1e-9 * want.abs().max(1.0) {
                return Err(Error::ShapeMismatch(format!(
                    "series time {t} at row {} does not match grid time {want}",
                    k + 1
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct SeriesRow {
    t: f64,
    value: f64,
}

/// CSV with header `t,value`. Values are written in shortest round-trip form.
pub fn write_series(path: &Path, series: &Series) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for (t, value) in series.t.iter().zip(&series.values) {
        w.serialize(SeriesRow {
            t: *t,
            value: *value,
        })?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_series(path: &Path) -> Result<Series> {
    let mut r = csv::Reader::from_path(path)?;
    let (mut t, mut values) = (Vec::new(), Vec::new());
    for row in r.deserialize() {
        let row: SeriesRow = row?;
        t.push(row.t);
        values.push(row.value);
    }
    if t.is_empty() {
        return Err(Error::Format(format!("{} has no rows", path.display())));
    }
    Series::new(t, values)
}

/// Reads a one-column CSV of Laguerre coefficients (header `coeff`).
pub fn read_coeffs(path: &Path) -> Result<Vec<f64>> {
    let mut r = csv::Reader::from_path(path)?;
    let mut out = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let field = rec
            .get(0)
            .ok_or_else(|| Error::Format("empty coefficient row".into()))?;
        out.push(
            field
                .trim()
                .parse::<f64>()
                .map_err(|e| Error::Format(format!("bad coefficient `{field}`: {e}")))?,
        );
    }
    if out.is_empty() {
        return Err(Error::Format(format!(
            "{} has no coefficients",
            path.display()
        )));
    }
    Ok(out)
}

pub fn write_coeffs(path: &Path, coeffs: &[f64]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["coeff"])?;
    for c in coeffs {
        w.write_record([c.to_string()])?;
    }
    w.flush()?;
    Ok(())
}
