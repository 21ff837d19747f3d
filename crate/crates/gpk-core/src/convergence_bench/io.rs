//! Output formats.
//!
//! CSV follows RFC 4180 (the `csv` crate quotes only where needed). JSON is
//! UTF-8 with object keys sorted, which `serde_json::Value` guarantees by
//! storing maps in a `BTreeMap`. Field dumps use the layout below, all
//! little-endian:
//!
//! | offset | type      | content                                   |
//! |--------|-----------|-------------------------------------------|
//! | 0      | [u8; 4]   | magic `GPKF`                              |
//! | 4      | u32       | format version (1)                        |
//! | 8      | u32       | dimension d                               |
//! | 12     | [u32; 3]  | points per axis, unused axes set to 1     |
//! | 24     | f64       | box length L                              |
//! | 32     | f64       | time t                                    |
//! | 40     | f64 pairs | (re, im) per grid point, last axis fastest |

use crate::error::{GpkError, Result};
use crate::gp_dynamics::{GridSpec, WaveFunction};
use num_complex::Complex64;
use serde::Serialize;
use std::fs;
use std::path::Path;

pub const FIELD_MAGIC: &[u8; 4] = b"GPKF";
pub const FIELD_VERSION: u32 = 1;
const HEADER_LEN: usize = 40;

/// Shortest round-trip decimal form, so reruns are byte-identical; exponent
/// notation outside [1e-4, 1e15).
pub fn fmt_f64(x: f64) -> String {
    let a = x.abs();
    if a == 0.0 || (1e-4..1e15).contains(&a) || !a.is_finite() {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

pub fn write_csv(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
    w.write_record(header).map_err(|e| csv_error(path, e))?;
    for row in rows {
        w.write_record(row).map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(|e| GpkError::io(path.display().to_string(), e))
}

fn csv_error(path: &Path, e: csv::Error) -> GpkError {
    GpkError::io(path.display().to_string(), std::io::Error::other(e.to_string()))
}

/// Read a CSV file into its header and string records.
pub fn read_csv(path: &Path) -> Result<(Vec<String>, Vec<Vec<String>>)> {
    let mut r = csv::Reader::from_path(path).map_err(|e| csv_error(path, e))?;
    let header = r.headers().map_err(|e| csv_error(path, e))?.iter().map(str::to_string).collect();
    let mut rows = Vec::new();
    for rec in r.records() {
        rows.push(rec.map_err(|e| csv_error(path, e))?.iter().map(str::to_string).collect());
    }
    Ok((header, rows))
}

/// Serialise through `serde_json::Value` so keys come out sorted.
pub fn to_sorted_json<T: Serialize>(value: &T) -> Result<String> {
    let v = serde_json::to_value(value).map_err(|e| GpkError::Invariant(format!("JSON encoding failed: {e}")))?;
    let mut s = serde_json::to_string_pretty(&v).map_err(|e| GpkError::Invariant(format!("JSON encoding failed: {e}")))?;
    s.push('\n');
    Ok(s)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    write_bytes(path, to_sorted_json(value)?.as_bytes())
}

pub fn read_json(path: &Path) -> Result<serde_json::Value> {
    let text = fs::read_to_string(path).map_err(|e| GpkError::io(path.display().to_string(), e))?;
    serde_json::from_str(&text).map_err(|e| GpkError::Config(format!("{}: invalid JSON: {e}", path.display())))
}

pub fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|e| GpkError::io(path.display().to_string(), e))
}

pub fn encode_field(psi: &WaveFunction, t: f64) -> Vec<u8> {
    let g = &psi.grid;
    let mut out = Vec::with_capacity(HEADER_LEN + 16 * psi.values.len());
    out.extend_from_slice(FIELD_MAGIC);
    out.extend_from_slice(&FIELD_VERSION.to_le_bytes());
    out.extend_from_slice(&(g.dim as u32).to_le_bytes());
    for axis in 0..3 {
        let n = if axis < g.dim { g.points_per_axis } else { 1 };
        out.extend_from_slice(&(n as u32).to_le_bytes());
    }
    out.extend_from_slice(&g.box_length.to_le_bytes());
    out.extend_from_slice(&t.to_le_bytes());
    for z in &psi.values {
        out.extend_from_slice(&z.re.to_le_bytes());
        out.extend_from_slice(&z.im.to_le_bytes());
    }
    out
}

/// Decoded field dump.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldDump {
    pub dim: usize,
    pub points: [usize; 3],
    pub box_length: f64,
    pub t: f64,
    pub values: Vec<Complex64>,
}

impl FieldDump {
    /// Wave function on a grid with the dump's geometry and the given time step data.
    pub fn to_wave_function(&self, dt: f64, t_final: f64) -> Result<WaveFunction> {
        let grid = GridSpec::new(self.dim, self.box_length, self.points[0], dt, t_final);
        WaveFunction::new(self.values.clone(), grid)
    }
}

pub fn decode_field(bytes: &[u8]) -> Result<FieldDump> {
    let bad = |m: &str| GpkError::Config(format!("malformed field dump: {m}"));
    if bytes.len() < HEADER_LEN {
        return Err(bad("shorter than the header"));
    }
    if &bytes[0..4] != FIELD_MAGIC {
        return Err(bad("wrong magic"));
    }
    let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().expect("4 bytes")) as usize;
    let f64_at = |o: usize| f64::from_le_bytes(bytes[o..o + 8].try_into().expect("8 bytes"));
    if u32_at(4) != FIELD_VERSION as usize {
        return Err(bad(&format!("unsupported version {}", u32_at(4))));
    }
    let dim = u32_at(8);
    let points = [u32_at(12), u32_at(16), u32_at(20)];
    if !(1..=3).contains(&dim) {
        return Err(bad(&format!("dimension {dim}")));
    }
    if points[..dim].iter().any(|&n| n != points[0]) || points[dim..].iter().any(|&n| n != 1) {
        return Err(bad(&format!("axis sizes {points:?} for dimension {dim}")));
    }
    let count: usize = points.iter().product();
    if bytes.len() != HEADER_LEN + 16 * count {
        return Err(bad(&format!("expected {} bytes, found {}", HEADER_LEN + 16 * count, bytes.len())));
    }
    let values = (0..count).map(|i| Complex64::new(f64_at(HEADER_LEN + 16 * i), f64_at(HEADER_LEN + 16 * i + 8))).collect();
    Ok(FieldDump { dim, points, box_length: f64_at(24), t: f64_at(32), values })
}

pub fn read_field(path: &Path) -> Result<FieldDump> {
    let bytes = fs::read(path).map_err(|e| GpkError::io(path.display().to_string(), e))?;
    decode_field(&bytes).map_err(|e| e.in_stage("read", path.display().to_string()))
}
