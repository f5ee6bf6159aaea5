//! Binary cache files and CSV export for magnetization grids.
//!
//! Layout (all integers and floats little-endian):
//!
//! ```text
//! magic   8 bytes  "SSMGRID1"
//! hash    u64      instance hash
//! nspin   u32
//! nt      u32
//! nd      u32
//! t[]     nt  f64
//! d[]     nd  f64
//! chk     u64      payload hash
//! data[]  nspin*nt*nd f64, row-major [spin][t][delta]
//! ```

use std::io::{Read, Write};
use std::path::Path;

use sha2::{Digest, Sha256};
use thiserror::Error;

use super::{GridSpec, MagnetizationGrid};
use crate::lattice::SquareLatticeInstance;

const MAGIC: &[u8; 8] = b"SSMGRID1";

#[derive(Debug, Error)]
pub enum GridFileError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("not a magnetization grid file (bad magic)")]
    BadMagic,
    #[error("instance hash mismatch: file {file:#018x}, expected {expected:#018x}")]
    HashMismatch { file: u64, expected: u64 },
    #[error("payload checksum mismatch, file is corrupt")]
    Corrupt,
    #[error("invalid grid header")]
    BadHeader,
}

/// Stable content hash of an instance (first 8 bytes of the SHA-256 of its
/// canonical JSON serialization).
pub fn instance_hash(instance: &SquareLatticeInstance) -> u64 {
    let json = serde_json::to_vec(instance).expect("instances serialize");
    let digest = Sha256::digest(&json);
    u64::from_le_bytes(digest[..8].try_into().unwrap())
}

fn hash_f64s(values: &[f64]) -> u64 {
    let mut hasher = Sha256::new();
    for v in values {
        hasher.update(v.to_le_bytes());
    }
    let digest = hasher.finalize();
    u64::from_le_bytes(digest[..8].try_into().unwrap())
}

impl MagnetizationGrid {
    /// Write the grid to a binary cache file. The caller supplies the hash of
    /// the producing instance for later validation.
    pub fn save(&self, path: &Path, instance_hash: u64) -> Result<(), GridFileError> {
        let mut buf = Vec::with_capacity(64 + self.data().len() * 8);
        buf.extend_from_slice(MAGIC);
        buf.extend_from_slice(&instance_hash.to_le_bytes());
        buf.extend_from_slice(&(self.n_spins as u32).to_le_bytes());
        buf.extend_from_slice(&(self.spec.nt() as u32).to_le_bytes());
        buf.extend_from_slice(&(self.spec.nd() as u32).to_le_bytes());
        for v in self.spec.t_values.iter().chain(self.spec.delta_values.iter()) {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        buf.extend_from_slice(&hash_f64s(self.data()).to_le_bytes());
        for v in self.data() {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        std::fs::File::create(path)?.write_all(&buf)?;
        Ok(())
    }

    /// Load a grid, validating magic, instance hash, and payload checksum.
    pub fn load(path: &Path, expected_hash: u64) -> Result<MagnetizationGrid, GridFileError> {
        let mut bytes = Vec::new();
        std::fs::File::open(path)?.read_to_end(&mut bytes)?;
        let mut off = 0usize;
        let take = |off: &mut usize, n: usize| -> Result<&[u8], GridFileError> {
            if *off + n > bytes.len() {
                return Err(GridFileError::BadHeader);
            }
            let s = &bytes[*off..*off + n];
            *off += n;
            Ok(s)
        };
        if take(&mut off, 8)? != MAGIC {
            return Err(GridFileError::BadMagic);
        }
        let read_u64 =
            |off: &mut usize| -> Result<u64, GridFileError> {
                Ok(u64::from_le_bytes(take(off, 8)?.try_into().unwrap()))
            };
        let read_u32 =
            |off: &mut usize| -> Result<u32, GridFileError> {
                Ok(u32::from_le_bytes(take(off, 4)?.try_into().unwrap()))
            };
        let file_hash = read_u64(&mut off)?;
        if file_hash != expected_hash {
            return Err(GridFileError::HashMismatch { file: file_hash, expected: expected_hash });
        }
        let n_spins = read_u32(&mut off)? as usize;
        let nt = read_u32(&mut off)? as usize;
        let nd = read_u32(&mut off)? as usize;
        if n_spins == 0 || nt == 0 || nd == 0 || n_spins * nt * nd > 1 << 28 {
            return Err(GridFileError::BadHeader);
        }
        let read_f64s = |off: &mut usize, n: usize| -> Result<Vec<f64>, GridFileError> {
            let raw = take(off, 8 * n)?;
            Ok(raw.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect())
        };
        let t_values = read_f64s(&mut off, nt)?;
        let delta_values = read_f64s(&mut off, nd)?;
        let checksum = read_u64(&mut off)?;
        let data = read_f64s(&mut off, n_spins * nt * nd)?;
        if off != bytes.len() {
            return Err(GridFileError::BadHeader);
        }
        if hash_f64s(&data) != checksum {
            return Err(GridFileError::Corrupt);
        }
        let spec = GridSpec::new(t_values, delta_values).map_err(|_| GridFileError::BadHeader)?;
        Ok(MagnetizationGrid::from_parts(spec, n_spins, data))
    }

    /// Export as CSV with a provenance comment header.
    pub fn write_csv<W: Write>(&self, mut out: W, instance_hash: u64) -> std::io::Result<()> {
        writeln!(out, "# magnetization_grid instance_hash={instance_hash:#018x} version={}", crate::TOOL_VERSION)?;
        write!(out, "T,Delta")?;
        for spin in 0..self.n_spins {
            write!(out, ",m{spin}")?;
        }
        writeln!(out)?;
        for (ti, t) in self.spec.t_values.iter().enumerate() {
            for (di, d) in self.spec.delta_values.iter().enumerate() {
                write!(out, "{t},{d}")?;
                for spin in 0..self.n_spins {
                    write!(out, ",{}", self.m(spin, ti, di))?;
                }
                writeln!(out)?;
            }
        }
        Ok(())
    }
}
