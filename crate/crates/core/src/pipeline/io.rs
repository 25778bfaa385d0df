//! File formats.
//!
//! GRID files are little-endian binary, samples row-major exactly as in [`ComplexGrid`]:
//!
//! ```text
//! b"DBGR" | u32 version = 1 | u32 nx | u32 ny = nx | f64 L | nx*nx * (f64 re, f64 im) | [u8; 64] config hash
//! ```
//!
//! The hash trailer is ASCII hex, zero padded. Readers that stop after the samples
//! see a plain grid. Boundary functions are CSV with a `# config_hash=...` comment
//! line and the header `theta,re,im`.

use crate::boundary::{BoundaryFunction, DtnOperator};
use crate::error::{Error, Result};
use crate::forward::ScatteringTransform;
use crate::grid::{relative_error, ComplexGrid, GridSpec};
use num_complex::Complex64;
use serde::Serialize;
use std::fs;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

const MAGIC: &[u8; 4] = b"DBGR";
const VERSION: u32 = 1;
const HEADER_LEN: usize = 24;
const HASH_LEN: usize = 64;

/// A grid file: the samples and the hash of the configuration that produced them.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFile {
    pub grid: ComplexGrid,
    pub config_hash: String,
}

pub fn write_grid(path: &Path, grid: &ComplexGrid, config_hash: &str) -> Result<()> {
    if config_hash.len() > HASH_LEN || !config_hash.is_ascii() {
        return Err(Error::Precondition("config hash must be at most 64 ASCII characters".into()));
    }
    let mut buf = Vec::with_capacity(HEADER_LEN + HASH_LEN + 16 * grid.samples().len());
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&VERSION.to_le_bytes());
    buf.extend_from_slice(&(grid.n() as u32).to_le_bytes());
    buf.extend_from_slice(&(grid.n() as u32).to_le_bytes());
    buf.extend_from_slice(&grid.half_width().to_le_bytes());
    for v in grid.samples() {
        buf.extend_from_slice(&v.re.to_le_bytes());
        buf.extend_from_slice(&v.im.to_le_bytes());
    }
    let mut hash = [0u8; HASH_LEN];
    hash[..config_hash.len()].copy_from_slice(config_hash.as_bytes());
    buf.extend_from_slice(&hash);
    let mut file = fs::File::create(path)?;
    file.write_all(&buf)?;
    Ok(())
}

pub fn read_grid(path: &Path) -> Result<GridFile> {
    let mut bytes = Vec::new();
    fs::File::open(path)?.read_to_end(&mut bytes)?;
    if bytes.len() < HEADER_LEN || &bytes[..4] != MAGIC {
        return Err(Error::Format(format!("{} is not a grid file", path.display())));
    }
    let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().expect("4 bytes"));
    let f64_at = |o: usize| f64::from_le_bytes(bytes[o..o + 8].try_into().expect("8 bytes"));
    if u32_at(4) != VERSION {
        return Err(Error::Format(format!("unsupported grid file version {}", u32_at(4))));
    }
    let (n, ny) = (u32_at(8) as usize, u32_at(12) as usize);
    if n != ny {
        return Err(Error::Format(format!("{}: non-square grid {n}x{ny}", path.display())));
    }
    let half_width = f64_at(16);
    let data_end = HEADER_LEN + 16 * n * n;
    if bytes.len() != data_end && bytes.len() != data_end + HASH_LEN {
        return Err(Error::Format(format!(
            "{}: expected {} samples, file holds {} bytes after the header",
            path.display(),
            n * n,
            bytes.len() - HEADER_LEN
        )));
    }
    let config_hash = match bytes.get(data_end..) {
        Some(trailer) if !trailer.is_empty() => {
            let end = trailer.iter().position(|&b| b == 0).unwrap_or(HASH_LEN);
            std::str::from_utf8(&trailer[..end])
                .map_err(|_| Error::Format("config hash is not ASCII".into()))?
                .to_string()
        }
        _ => String::new(),
    };
    let samples = (0..n * n)
        .map(|s| Complex64::new(f64_at(HEADER_LEN + 16 * s), f64_at(HEADER_LEN + 16 * s + 8)))
        .collect();
    let grid = ComplexGrid::from_samples(GridSpec::new(n, half_width)?, samples)?;
    Ok(GridFile { grid, config_hash })
}

/// Writes a scattering transform as a GRID file plus a JSON sidecar `{"K", "nx", "L"}`
/// next to it (same stem, `.json` extension).
pub fn write_transform(path: &Path, t: &ScatteringTransform, config_hash: &str) -> Result<()> {
    write_grid(path, t.grid(), config_hash)?;
    let sidecar = serde_json::json!({"K": t.radius(), "nx": t.spec().n, "L": t.spec().half_width});
    write_json(&path.with_extension("json"), &sidecar)
}

/// Reads a transform written by [`write_transform`]. Without a sidecar the truncation
/// radius falls back to `default_radius`.
pub fn read_transform(path: &Path, default_radius: f64) -> Result<ScatteringTransform> {
    let file = read_grid(path)?;
    let sidecar = path.with_extension("json");
    let radius = if sidecar.exists() {
        let meta: serde_json::Value = serde_json::from_str(&fs::read_to_string(&sidecar)?)?;
        meta["K"]
            .as_f64()
            .ok_or_else(|| Error::Format(format!("{}: missing K", sidecar.display())))?
    } else {
        default_radius
    };
    ScatteringTransform::new(file.grid, radius)
}

/// Relative discrete `p`-norm distance `||b - a|| / ||a||` between two grid files.
pub fn compare(a: &Path, b: &Path, p: f64) -> Result<f64> {
    let (a, b) = (read_grid(a)?, read_grid(b)?);
    if a.grid.spec() != b.grid.spec() {
        return Err(Error::Precondition(format!(
            "grid headers differ: {:?} vs {:?}",
            a.grid.spec(),
            b.grid.spec()
        )));
    }
    Ok(relative_error(&a.grid, &b.grid, p))
}

pub fn write_boundary(path: &Path, f: &BoundaryFunction, config_hash: &str) -> Result<()> {
    let mut file = fs::File::create(path)?;
    writeln!(file, "# config_hash={config_hash}")?;
    let mut w = csv::Writer::from_writer(file);
    w.write_record(["theta", "re", "im"])?;
    for (j, v) in f.values().iter().enumerate() {
        w.write_record([f.theta(j).to_string(), v.re.to_string(), v.im.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_boundary(path: &Path) -> Result<BoundaryFunction> {
    let file = BufReader::new(fs::File::open(path)?);
    let mut r = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(file);
    let headers = r.headers()?.clone();
    if headers.iter().collect::<Vec<_>>() != ["theta", "re", "im"] {
        return Err(Error::Format(format!("{}: expected header theta,re,im", path.display())));
    }
    let mut values = Vec::new();
    for record in r.records() {
        let record = record?;
        let field = |i: usize| -> Result<f64> {
            record[i]
                .trim()
                .parse()
                .map_err(|_| Error::Format(format!("bad number {:?} in {}", &record[i], path.display())))
        };
        values.push(Complex64::new(field(1)?, field(2)?));
    }
    BoundaryFunction::new(values)
}

/// Reads the `config_hash` comment of a boundary CSV file, if present.
pub fn boundary_hash(path: &Path) -> Result<Option<String>> {
    let mut first = String::new();
    BufReader::new(fs::File::open(path)?).read_line(&mut first)?;
    Ok(first.trim().strip_prefix("# config_hash=").map(str::to_string))
}

pub fn write_dtn(path: &Path, dtn: &DtnOperator) -> Result<()> {
    write_json(path, dtn)
}

pub fn read_dtn(path: &Path) -> Result<DtnOperator> {
    Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

/// Rounds `x` to `digits` significant digits.
pub fn round_significant(x: f64, digits: usize) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{:.*e}", digits.saturating_sub(1), x).parse().expect("formatted float parses")
}

/// Rounds every float in a JSON value to `digits` significant digits.
pub fn round_json(value: &mut serde_json::Value, digits: usize) {
    match value {
        serde_json::Value::Number(n) if n.is_f64() => {
            let x = n.as_f64().expect("f64 number");
            if let Some(r) = serde_json::Number::from_f64(round_significant(x, digits)) {
                *n = r;
            }
        }
        serde_json::Value::Array(items) => items.iter_mut().for_each(|v| round_json(v, digits)),
        serde_json::Value::Object(map) => map.values_mut().for_each(|v| round_json(v, digits)),
        _ => {}
    }
}
