//! Little-endian binary formats for amplitude datasets (`BIHAMP1`) and grid
//! fields (`BIHFLD1`).
//!
//! `BIHAMP1`: magic `BIHAMP1\0`; `u32 n`, `f64 k0`, `u32 count_k`,
//! `u32 count_dirs`, `f64 x n theta0`; then `count_k` k values, `count_dirs`
//! direction vectors of `n` components, `count_dirs` weights, and the values
//! as interleaved `(re, im)` pairs in k-major order.
//!
//! `BIHFLD1`: magic `BIHFLD1\0`; `u32 n`, `u32 N`, `f64 L`, `u8 kind`
//! (0 real, 1 complex); then the node values in row-major order.

use std::io::{Read, Write};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::farfield::{AmplitudeDataset, Provenance};
use crate::geometry::{point_from_slice, Dim, DirectionSet, Grid};

pub const AMPLITUDE_MAGIC: &[u8; 8] = b"BIHAMP1\0";
pub const FIELD_MAGIC: &[u8; 8] = b"BIHFLD1\0";

/// Values stored in a field file.
#[derive(Clone, Debug, PartialEq)]
pub enum FieldValues {
    Real(Vec<f64>),
    Complex(Vec<Complex64>),
}

impl FieldValues {
    pub fn len(&self) -> usize {
        match self {
            FieldValues::Real(v) => v.len(),
            FieldValues::Complex(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FieldFile {
    pub grid: Grid,
    pub values: FieldValues,
}

struct Reader<R> {
    inner: R,
    offset: u64,
}

impl<R: Read> Reader<R> {
    fn bytes<const K: usize>(&mut self, what: &str) -> Result<[u8; K]> {
        let mut buf = [0u8; K];
        let mut filled = 0;
        while filled < K {
            match self.inner.read(&mut buf[filled..]) {
                Ok(0) => {
                    return Err(Error::Format {
                        offset: self.offset + filled as u64,
                        message: format!("truncated while reading {what}"),
                    })
                }
                Ok(m) => filled += m,
                Err(e) if e.kind() == std::io::ErrorKind::Interrupted => {}
                Err(e) => return Err(Error::Io(e)),
            }
        }
        self.offset += K as u64;
        Ok(buf)
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.bytes(what)?))
    }

    fn f64(&mut self, what: &str) -> Result<f64> {
        Ok(f64::from_le_bytes(self.bytes(what)?))
    }

    fn magic(&mut self, expected: &[u8; 8]) -> Result<()> {
        let got: [u8; 8] = self.bytes("magic")?;
        if &got != expected {
            return Err(Error::Format {
                offset: 0,
                message: format!(
                    "bad magic {:?}, expected {:?}",
                    String::from_utf8_lossy(&got),
                    String::from_utf8_lossy(expected)
                ),
            });
        }
        Ok(())
    }

    fn dim(&mut self) -> Result<Dim> {
        let at = self.offset;
        let n = self.u32("dimension")?;
        Dim::from_n(n).map_err(|_| Error::Format {
            offset: at,
            message: format!("dimension {n} is not 2 or 3"),
        })
    }

    fn finish(&mut self) -> Result<()> {
        let mut extra = [0u8; 1];
        match self.inner.read(&mut extra)? {
            0 => Ok(()),
            _ => Err(Error::Format {
                offset: self.offset,
                message: "trailing bytes after payload".into(),
            }),
        }
    }

    fn bad(&self, at: u64, message: String) -> Error {
        Error::Format {
            offset: at,
            message,
        }
    }
}

/// Guards length fields against absurd allocations.
fn checked_count(count: u32, per_item: usize, at: u64) -> Result<usize> {
    let c = count as usize;
    if c.saturating_mul(per_item) > (1usize << 34) {
        return Err(Error::Format {
            offset: at,
            message: format!("count {count} is implausibly large"),
        });
    }
    Ok(c)
}

pub fn write_amplitudes<W: Write>(mut w: W, ds: &AmplitudeDataset) -> Result<()> {
    let n = ds.dim.n();
    let mut buf = Vec::with_capacity(64 + 16 * ds.values.len());
    buf.extend_from_slice(AMPLITUDE_MAGIC);
    buf.extend_from_slice(&(n as u32).to_le_bytes());
    buf.extend_from_slice(&ds.k0.to_le_bytes());
    buf.extend_from_slice(&(ds.ks.len() as u32).to_le_bytes());
    buf.extend_from_slice(&(ds.directions.len() as u32).to_le_bytes());
    for c in &ds.theta0[..n] {
        buf.extend_from_slice(&c.to_le_bytes());
    }
    for k in &ds.ks {
        buf.extend_from_slice(&k.to_le_bytes());
    }
    for d in &ds.directions.directions {
        for c in &d[..n] {
            buf.extend_from_slice(&c.to_le_bytes());
        }
    }
    for wt in &ds.directions.weights {
        buf.extend_from_slice(&wt.to_le_bytes());
    }
    for v in &ds.values {
        buf.extend_from_slice(&v.re.to_le_bytes());
        buf.extend_from_slice(&v.im.to_le_bytes());
    }
    w.write_all(&buf)?;
    w.flush()?;
    Ok(())
}

/// Reads a `BIHAMP1` stream; provenance is [`Provenance::Unspecified`].
pub fn read_amplitudes<R: Read>(r: R) -> Result<AmplitudeDataset> {
    let mut rd = Reader {
        inner: r,
        offset: 0,
    };
    rd.magic(AMPLITUDE_MAGIC)?;
    let dim = rd.dim()?;
    let n = dim.n();
    let k0 = rd.f64("k0")?;
    let at = rd.offset;
    let count_k = checked_count(rd.u32("count_k")?, 8, at)?;
    let at = rd.offset;
    let count_dirs = checked_count(rd.u32("count_dirs")?, 8 * (n + 1), at)?;
    checked_count((count_k * count_dirs).min(u32::MAX as usize) as u32, 16, at)?;
    let mut t = Vec::with_capacity(n);
    for _ in 0..n {
        t.push(rd.f64("theta0")?);
    }
    let theta0 = point_from_slice(dim, &t)?;
    let ks_at = rd.offset;
    let mut ks = Vec::with_capacity(count_k);
    for _ in 0..count_k {
        ks.push(rd.f64("k values")?);
    }
    let dirs_at = rd.offset;
    let mut directions = Vec::with_capacity(count_dirs);
    for _ in 0..count_dirs {
        for c in t.iter_mut() {
            *c = rd.f64("direction vectors")?;
        }
        directions.push(point_from_slice(dim, &t)?);
    }
    let mut weights = Vec::with_capacity(count_dirs);
    for _ in 0..count_dirs {
        weights.push(rd.f64("quadrature weights")?);
    }
    let mut values = Vec::with_capacity(count_k * count_dirs);
    for _ in 0..count_k * count_dirs {
        let re = rd.f64("amplitude values")?;
        let im = rd.f64("amplitude values")?;
        values.push(Complex64::new(re, im));
    }
    rd.finish()?;
    let dirs =
        DirectionSet::new(dim, directions, weights).map_err(|e| rd.bad(dirs_at, e.to_string()))?;
    AmplitudeDataset::new(theta0, k0, ks, dirs, values, Provenance::Unspecified)
        .map_err(|e| rd.bad(ks_at, e.to_string()))
}

pub fn write_field<W: Write>(mut w: W, field: &FieldFile) -> Result<()> {
    if field.values.len() != field.grid.len() {
        return Err(Error::DimensionMismatch {
            expected: format!("{} nodes", field.grid.len()),
            found: format!("{} values", field.values.len()),
        });
    }
    let mut buf = Vec::with_capacity(32 + 16 * field.values.len());
    buf.extend_from_slice(FIELD_MAGIC);
    buf.extend_from_slice(&(field.grid.dim.n() as u32).to_le_bytes());
    buf.extend_from_slice(&(field.grid.n_per_axis as u32).to_le_bytes());
    buf.extend_from_slice(&field.grid.half_width.to_le_bytes());
    match &field.values {
        FieldValues::Real(v) => {
            buf.push(0);
            for x in v {
                buf.extend_from_slice(&x.to_le_bytes());
            }
        }
        FieldValues::Complex(v) => {
            buf.push(1);
            for x in v {
                buf.extend_from_slice(&x.re.to_le_bytes());
                buf.extend_from_slice(&x.im.to_le_bytes());
            }
        }
    }
    w.write_all(&buf)?;
    w.flush()?;
    Ok(())
}

pub fn read_field<R: Read>(r: R) -> Result<FieldFile> {
    let mut rd = Reader {
        inner: r,
        offset: 0,
    };
    rd.magic(FIELD_MAGIC)?;
    let dim = rd.dim()?;
    let at = rd.offset;
    let side = rd.u32("samples per axis")?;
    let half_width = rd.f64("half-width")?;
    let grid = Grid::new(dim, side as usize, half_width).map_err(|e| rd.bad(at, e.to_string()))?;
    checked_count(grid.len().min(u32::MAX as usize) as u32, 16, at)?;
    let kind_at = rd.offset;
    let kind: [u8; 1] = rd.bytes("value kind")?;
    let values = match kind[0] {
        0 => {
            let mut v = Vec::with_capacity(grid.len());
            for _ in 0..grid.len() {
                v.push(rd.f64("field values")?);
            }
            FieldValues::Real(v)
        }
        1 => {
            let mut v = Vec::with_capacity(grid.len());
            for _ in 0..grid.len() {
                let re = rd.f64("field values")?;
                let im = rd.f64("field values")?;
                v.push(Complex64::new(re, im));
            }
            FieldValues::Complex(v)
        }
        other => return Err(rd.bad(kind_at, format!("unknown value kind {other}"))),
    };
    rd.finish()?;
    Ok(FieldFile { grid, values })
}
