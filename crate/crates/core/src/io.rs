//! Binary field files and CSV export.
//!
//! A field file is a 20-byte header — magic `HSF1`, `u32` dimension, `u32`
//! points per axis, `f64` period — followed by the samples as `f64`, all
//! little-endian, in row-major order.

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::grid::{GridField, GridSpec};

pub const MAGIC: &[u8; 4] = b"HSF1";
pub const HEADER_LEN: usize = 20;

pub fn encode_field(f: &GridField) -> Vec<u8> {
    let spec = f.spec();
    let mut out = Vec::with_capacity(HEADER_LEN + 8 * spec.len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(spec.dim() as u32).to_le_bytes());
    out.extend_from_slice(&(spec.points() as u32).to_le_bytes());
    out.extend_from_slice(&spec.period().to_le_bytes());
    for v in f.samples() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn decode_field(bytes: &[u8]) -> Result<GridField> {
    if bytes.len() < HEADER_LEN || &bytes[..4] != MAGIC {
        return Err(Error::Format("missing HSF1 header".into()));
    }
    let word = |at: usize| u32::from_le_bytes(bytes[at..at + 4].try_into().unwrap()) as usize;
    let dim = word(4);
    let points = word(8);
    let period = f64::from_le_bytes(bytes[12..20].try_into().unwrap());
    let spec = GridSpec::new(dim, points, period)?;
    let body = &bytes[HEADER_LEN..];
    if body.len() != 8 * spec.len() {
        return Err(Error::Format(format!(
            "expected {} samples, found {} bytes",
            spec.len(),
            body.len()
        )));
    }
    let samples = body.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
    GridField::new(spec, samples)
}

pub fn write_field(path: &Path, f: &GridField) -> Result<()> {
    fs::write(path, encode_field(f))?;
    Ok(())
}

pub fn read_field(path: &Path) -> Result<GridField> {
    decode_field(&fs::read(path)?)
}

/// One row per sample: integer coordinates, position and value.
pub fn write_field_csv(path: &Path, f: &GridField) -> Result<()> {
    let spec = f.spec();
    let mut w = csv::Writer::from_path(path)?;
    match spec.dim() {
        1 => w.write_record(["i", "x", "value"])?,
        _ => w.write_record(["i", "j", "x", "y", "value"])?,
    }
    for (idx, v) in f.samples().iter().enumerate() {
        let c = spec.coords(idx);
        let x = spec.position(idx);
        match spec.dim() {
            1 => w.write_record([c[0].to_string(), x[0].to_string(), v.to_string()])?,
            _ => w.write_record([
                c[0].to_string(),
                c[1].to_string(),
                x[0].to_string(),
                x[1].to_string(),
                v.to_string(),
            ])?,
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut file = fs::File::create(path)?;
    serde_json::to_writer_pretty(&mut file, value)?;
    file.write_all(b"\n")?;
    Ok(())
}
