//! Binary cache for assembled operator matrices.
//!
//! Assembly at a fixed parameter triple is deterministic, so a matrix
//! can be reused across runs as long as every ingredient of the
//! configuration matches. The cache key hashes the parameters, basis,
//! grid, kernel settings, and quadrature mesh; loading verifies magic,
//! version, and key before touching the payload.

use super::OperatorMatrix;
use crate::geometry::{FaultParams, ObservationGrid, SineBasis, SourceRegion};
use crate::kernel::KernelConfig;
use crate::{Error, Result};
use nalgebra::{DMatrix, DVector};
use std::io::{Read, Write};
use std::path::Path;

const MAGIC: &[u8; 4] = b"FSOC";
const VERSION: u32 = 1;

/// Cache key for an assembly configuration (FNV-1a over the canonical
/// little-endian encoding of every ingredient).
pub fn cache_key(
    m: &FaultParams,
    basis: &SineBasis,
    region: &SourceRegion,
    grid: &ObservationGrid,
    cfg: &KernelConfig,
    quad_order: usize,
) -> u64 {
    let mut hash = 0xcbf29ce484222325u64;
    let mut eat = |bytes: &[u8]| {
        for &b in bytes {
            hash ^= b as u64;
            hash = hash.wrapping_mul(0x100000001b3);
        }
    };
    eat(&m.a.to_le_bytes());
    eat(&m.b.to_le_bytes());
    eat(&m.d.to_le_bytes());
    eat(&(basis.k_max as u64).to_le_bytes());
    eat(&basis.half_width.to_le_bytes());
    eat(&region.half_width.to_le_bytes());
    eat(&(region.cells as u64).to_le_bytes());
    eat(&(grid.n_per_axis as u64).to_le_bytes());
    eat(&[cfg.cutoff_enabled as u8]);
    eat(&cfg.d0.to_le_bytes());
    eat(&(quad_order as u64).to_le_bytes());
    hash
}

/// Write an assembled matrix with its key.
pub fn save(path: &Path, op: &OperatorMatrix, key: u64) -> Result<()> {
    let mut file = std::io::BufWriter::new(std::fs::File::create(path)?);
    file.write_all(MAGIC)?;
    file.write_all(&VERSION.to_le_bytes())?;
    file.write_all(&key.to_le_bytes())?;
    file.write_all(&(op.rows() as u64).to_le_bytes())?;
    file.write_all(&(op.cols() as u64).to_le_bytes())?;
    file.write_all(&(op.grid_n as u64).to_le_bytes())?;
    file.write_all(&(op.k_max as u64).to_le_bytes())?;
    file.write_all(&op.m.a.to_le_bytes())?;
    file.write_all(&op.m.b.to_le_bytes())?;
    file.write_all(&op.m.d.to_le_bytes())?;
    file.write_all(&op.region.half_width.to_le_bytes())?;
    file.write_all(&(op.region.cells as u64).to_le_bytes())?;
    file.write_all(&[op.cfg.cutoff_enabled as u8])?;
    file.write_all(&op.cfg.d0.to_le_bytes())?;
    file.write_all(&(op.quad_order as u64).to_le_bytes())?;
    for j in 0..op.rows() {
        for i in 0..op.cols() {
            file.write_all(&op.weighted[(j, i)].to_le_bytes())?;
        }
    }
    for w in op.sqrt_weights.iter() {
        file.write_all(&w.to_le_bytes())?;
    }
    file.flush()?;
    Ok(())
}

/// Load a cached matrix, refusing on any magic, version, or key
/// mismatch.
pub fn load(path: &Path, expected_key: u64) -> Result<OperatorMatrix> {
    let display = path.display().to_string();
    let mut file = std::io::BufReader::new(std::fs::File::open(path)?);
    let fail = |detail: &str| Error::CacheMismatch {
        path: display.clone(),
        detail: detail.to_string(),
    };
    let mut magic = [0u8; 4];
    file.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(fail("bad magic bytes"));
    }
    let version = read_u32(&mut file)?;
    if version != VERSION {
        return Err(fail(&format!(
            "unsupported version {version}, expected {VERSION}"
        )));
    }
    let key = read_u64(&mut file)?;
    if key != expected_key {
        return Err(fail(&format!(
            "key {key:#018x} does not match requested configuration {expected_key:#018x}"
        )));
    }
    let rows = read_u64(&mut file)? as usize;
    let cols = read_u64(&mut file)? as usize;
    let grid_n = read_u64(&mut file)? as usize;
    let k_max = read_u64(&mut file)? as usize;
    if rows != grid_n * grid_n || cols != k_max * k_max {
        return Err(fail("inconsistent dimensions in header"));
    }
    let a = read_f64(&mut file)?;
    let b = read_f64(&mut file)?;
    let d = read_f64(&mut file)?;
    let half_width = read_f64(&mut file)?;
    let cells = read_u64(&mut file)? as usize;
    let mut flag = [0u8; 1];
    file.read_exact(&mut flag)?;
    let d0 = read_f64(&mut file)?;
    let quad_order = read_u64(&mut file)? as usize;
    let mut weighted = DMatrix::zeros(rows, cols);
    for j in 0..rows {
        for i in 0..cols {
            weighted[(j, i)] = read_f64(&mut file)?;
        }
    }
    let mut sqrt_weights = DVector::zeros(rows);
    for j in 0..rows {
        sqrt_weights[j] = read_f64(&mut file)?;
    }
    Ok(OperatorMatrix {
        m: FaultParams { a, b, d },
        weighted,
        sqrt_weights,
        grid_n,
        k_max,
        region: SourceRegion::new(half_width, cells).map_err(|_| Error::CacheMismatch {
            path: display.clone(),
            detail: format!("invalid source region ({half_width}, {cells}) in header"),
        })?,
        cfg: KernelConfig {
            cutoff_enabled: flag[0] != 0,
            d0,
        },
        quad_order,
    })
}

fn read_u32(r: &mut impl Read) -> Result<u32> {
    let mut buf = [0u8; 4];
    r.read_exact(&mut buf)?;
    Ok(u32::from_le_bytes(buf))
}

fn read_u64(r: &mut impl Read) -> Result<u64> {
    let mut buf = [0u8; 8];
    r.read_exact(&mut buf)?;
    Ok(u64::from_le_bytes(buf))
}

fn read_f64(r: &mut impl Read) -> Result<f64> {
    let mut buf = [0u8; 8];
    r.read_exact(&mut buf)?;
    Ok(f64::from_le_bytes(buf))
}
