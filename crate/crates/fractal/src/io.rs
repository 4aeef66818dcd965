//! Flat binary and CSV encodings of grid measures and sets.
//!
//! Header: 4-byte magic (`PKGM` measure, `PKGS` set), then `version`, `d`, `n` as
//! little-endian `u32`. Measures follow with `n^d` little-endian `f64` weights, sets
//! with an LSB-first bitset of `⌈n^d / 8⌉` bytes. Both payloads are row-major.

use std::fmt::Write as _;
use std::io::{Read, Write};

use crate::error::{FractalError, Result};
use crate::grid::{cells, coords_of, GridMeasure, GridSet};

pub const FORMAT_VERSION: u32 = 1;
const MEASURE_MAGIC: &[u8; 4] = b"PKGM";
const SET_MAGIC: &[u8; 4] = b"PKGS";
/// Largest `n^d` written as CSV.
pub const CSV_CELL_LIMIT: usize = 1 << 16;

fn io_err(e: std::io::Error) -> FractalError {
    FractalError::Format(e.to_string())
}

fn write_header<W: Write>(w: &mut W, magic: &[u8; 4], d: usize, n: usize) -> Result<()> {
    w.write_all(magic).map_err(io_err)?;
    for v in [FORMAT_VERSION, d as u32, n as u32] {
        w.write_all(&v.to_le_bytes()).map_err(io_err)?;
    }
    Ok(())
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b).map_err(io_err)?;
    Ok(u32::from_le_bytes(b))
}

fn read_header<R: Read>(r: &mut R, magic: &[u8; 4]) -> Result<(usize, usize)> {
    let mut m = [0u8; 4];
    r.read_exact(&mut m).map_err(io_err)?;
    if &m != magic {
        return Err(FractalError::Format(format!("bad magic {:?}", String::from_utf8_lossy(&m))));
    }
    let version = read_u32(r)?;
    if version != FORMAT_VERSION {
        return Err(FractalError::Format(format!("unsupported version {version}")));
    }
    Ok((read_u32(r)? as usize, read_u32(r)? as usize))
}

pub fn write_measure<W: Write>(mu: &GridMeasure, w: &mut W) -> Result<()> {
    write_header(w, MEASURE_MAGIC, mu.d(), mu.n())?;
    for &x in mu.weights() {
        w.write_all(&x.to_le_bytes()).map_err(io_err)?;
    }
    Ok(())
}

pub fn read_measure<R: Read>(r: &mut R) -> Result<GridMeasure> {
    let (d, n) = read_header(r, MEASURE_MAGIC)?;
    crate::grid::check_shape(d, n)?;
    let mut weights = Vec::with_capacity(cells(d, n));
    let mut b = [0u8; 8];
    for _ in 0..cells(d, n) {
        r.read_exact(&mut b).map_err(io_err)?;
        weights.push(f64::from_le_bytes(b));
    }
    GridMeasure::from_normalized(d, n, weights)
}

pub fn write_set<W: Write>(set: &GridSet, w: &mut W) -> Result<()> {
    write_header(w, SET_MAGIC, set.d(), set.n())?;
    let mut bytes = vec![0u8; set.cells().len().div_ceil(8)];
    for (i, &b) in set.cells().iter().enumerate() {
        if b {
            bytes[i / 8] |= 1 << (i % 8);
        }
    }
    w.write_all(&bytes).map_err(io_err)
}

pub fn read_set<R: Read>(r: &mut R) -> Result<GridSet> {
    let (d, n) = read_header(r, SET_MAGIC)?;
    crate::grid::check_shape(d, n)?;
    let total = cells(d, n);
    let mut bytes = vec![0u8; total.div_ceil(8)];
    r.read_exact(&mut bytes).map_err(io_err)?;
    GridSet::new(d, n, (0..total).map(|i| bytes[i / 8] >> (i % 8) & 1 == 1).collect())
}

fn csv_guard(d: usize, n: usize) -> Result<()> {
    if cells(d, n) > CSV_CELL_LIMIT {
        return Err(FractalError::InvalidParameter(format!("{} cells exceed the CSV limit", cells(d, n))));
    }
    Ok(())
}

fn coord_header(d: usize) -> &'static str {
    if d == 1 {
        "i0"
    } else {
        "i0,i1"
    }
}

fn coord_text(d: usize, n: usize, i: usize) -> String {
    let c = coords_of(d, n, i);
    if d == 1 {
        c[0].to_string()
    } else {
        format!("{},{}", c[0], c[1])
    }
}

/// One row per cell: coordinates then weight.
pub fn measure_to_csv(mu: &GridMeasure) -> Result<String> {
    csv_guard(mu.d(), mu.n())?;
    let mut s = format!("{},weight\n", coord_header(mu.d()));
    for (i, w) in mu.weights().iter().enumerate() {
        writeln!(s, "{},{w}", coord_text(mu.d(), mu.n(), i)).expect("string write");
    }
    Ok(s)
}

/// One row per occupied cell.
pub fn set_to_csv(set: &GridSet) -> Result<String> {
    csv_guard(set.d(), set.n())?;
    let mut s = format!("{}\n", coord_header(set.d()));
    for i in set.indices() {
        writeln!(s, "{}", coord_text(set.d(), set.n(), i)).expect("string write");
    }
    Ok(s)
}
