//! Self-describing binary matrix files.
//!
//! Layout, all integers little-endian:
//!
//! ```text
//! magic       8 bytes   "LOCBASIS"
//! version     u32       FORMAT_VERSION
//! header_len  u32       length of the JSON header in bytes
//! header      JSON      MatrixHeader
//! data        n * n * (f64 re, f64 im), row-major
//! ```

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::CMatrix;
use crate::Real;

pub const MAGIC: &[u8; 8] = b"LOCBASIS";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MatrixKind {
    /// Rows are basis states over oscillator levels.
    Basis,
    /// Density matrix in the oscillator basis.
    DensityMatrix,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatrixHeader {
    pub format_version: u32,
    pub kind: MatrixKind,
    /// Dimension; the stored matrix is `n` x `n`.
    pub n: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub final_s: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    /// Configuration the matrix was produced with.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config: Option<serde_json::Value>,
}

impl MatrixHeader {
    pub fn new(kind: MatrixKind, n: usize) -> Self {
        Self {
            format_version: FORMAT_VERSION,
            kind,
            n,
            seed: None,
            final_s: None,
            beta: None,
            config: None,
        }
    }
}

pub fn write_matrix<T: Real, W: Write>(mut out: W, header: &MatrixHeader, m: &CMatrix<T>) -> Result<()> {
    if header.n != m.rows() || header.n != m.cols() {
        return Err(Error::InvalidArgument("header shape does not match the matrix".into()));
    }
    let json = serde_json::to_vec(header)?;
    let header_len = u32::try_from(json.len()).map_err(|_| Error::Format("header too long".into()))?;
    out.write_all(MAGIC)?;
    out.write_all(&FORMAT_VERSION.to_le_bytes())?;
    out.write_all(&header_len.to_le_bytes())?;
    out.write_all(&json)?;
    for z in m.as_slice() {
        out.write_all(&z.re.to_f64_lossy().to_le_bytes())?;
        out.write_all(&z.im.to_f64_lossy().to_le_bytes())?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_matrix<T: Real, R: Read>(mut input: R) -> Result<(MatrixHeader, CMatrix<T>)> {
    let mut magic = [0u8; 8];
    input.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Format("bad magic bytes".into()));
    }
    let mut word = [0u8; 4];
    input.read_exact(&mut word)?;
    let version = u32::from_le_bytes(word);
    if version != FORMAT_VERSION {
        return Err(Error::Format(format!("unsupported format version {version}")));
    }
    input.read_exact(&mut word)?;
    let header_len = u32::from_le_bytes(word) as usize;
    let mut json = vec![0u8; header_len];
    input.read_exact(&mut json)?;
    let header: MatrixHeader = serde_json::from_slice(&json)?;
    if header.format_version != version {
        return Err(Error::Format("header version disagrees with preamble".into()));
    }
    let count = header
        .n
        .checked_mul(header.n)
        .ok_or_else(|| Error::Format("matrix shape overflows".into()))?;
    let mut raw = Vec::new();
    input.read_to_end(&mut raw)?;
    if raw.len() != count * 16 {
        return Err(Error::Format(format!(
            "expected {} data bytes for a {n}x{n} matrix, found {}",
            count * 16,
            raw.len(),
            n = header.n
        )));
    }
    let data = raw
        .chunks_exact(16)
        .map(|c| {
            let re = f64::from_le_bytes(c[..8].try_into().expect("8 bytes"));
            let im = f64::from_le_bytes(c[8..].try_into().expect("8 bytes"));
            Complex::new(T::lit(re), T::lit(im))
        })
        .collect();
    let m = CMatrix::from_row_major(header.n, header.n, data).expect("length checked");
    Ok((header, m))
}

pub fn save_matrix<T: Real>(path: &Path, header: &MatrixHeader, m: &CMatrix<T>) -> Result<()> {
    write_matrix(BufWriter::new(File::create(path)?), header, m)
}

pub fn load_matrix<T: Real>(path: &Path) -> Result<(MatrixHeader, CMatrix<T>)> {
    read_matrix(BufReader::new(File::open(path)?))
}

/// Writes JSON to `path` via a temporary file and rename, so readers never
/// see a half-written file.
pub fn write_json_atomic<S: Serialize>(path: &Path, value: &S) -> Result<()> {
    let tmp = path.with_extension("json.tmp");
    {
        let mut out = BufWriter::new(File::create(&tmp)?);
        serde_json::to_writer_pretty(&mut out, value)?;
        out.write_all(b"\n")?;
        out.flush()?;
    }
    std::fs::rename(&tmp, path)?;
    Ok(())
}
