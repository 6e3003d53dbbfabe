//! Binary field snapshots.
//!
//! Layout: a 64-byte header followed by little-endian `f64` interleaved
//! `(re, im)` pairs in flat index order (x slowest, z fastest).
//!
//! ```text
//! offset  size  content
//!      0     4  magic "DGPE"
//!      4     4  version (u32 LE) = 1
//!      8    12  n0 n1 n2 (u32 LE each)
//!     20    24  box lengths (f64 LE each)
//!     44     4  flags (u32 LE), bit 0 = purely real
//!     48    16  reserved, zero
//! ```

use super::field::Field;
use super::grid::Grid3;
use crate::error::CoreError;
use num_complex::Complex64;
use std::io::{Read, Write};

pub const SNAPSHOT_MAGIC: &[u8; 4] = b"DGPE";
pub const SNAPSHOT_VERSION: u32 = 1;
const HEADER_LEN: usize = 64;
const FLAG_PURELY_REAL: u32 = 1;

/// Serialize a field into the binary snapshot format.
pub fn write_field<W: Write>(mut out: W, field: &Field) -> Result<(), CoreError> {
    let grid = field.grid();
    let mut header = [0u8; HEADER_LEN];
    header[0..4].copy_from_slice(SNAPSHOT_MAGIC);
    header[4..8].copy_from_slice(&SNAPSHOT_VERSION.to_le_bytes());
    for (i, &n) in grid.n().iter().enumerate() {
        header[8 + 4 * i..12 + 4 * i].copy_from_slice(&(n as u32).to_le_bytes());
    }
    for (i, &l) in grid.box_len().iter().enumerate() {
        header[20 + 8 * i..28 + 8 * i].copy_from_slice(&l.to_le_bytes());
    }
    let flags: u32 = if field.is_purely_real() {
        FLAG_PURELY_REAL
    } else {
        0
    };
    header[44..48].copy_from_slice(&flags.to_le_bytes());
    out.write_all(&header)?;

    let mut buf = Vec::with_capacity(field.values().len() * 16);
    for v in field.values() {
        buf.extend_from_slice(&v.re.to_le_bytes());
        buf.extend_from_slice(&v.im.to_le_bytes());
    }
    out.write_all(&buf)?;
    Ok(())
}

/// Read a field back from the binary snapshot format.
pub fn read_field<R: Read>(mut input: R) -> Result<Field, CoreError> {
    let mut header = [0u8; HEADER_LEN];
    input.read_exact(&mut header)?;
    if &header[0..4] != SNAPSHOT_MAGIC {
        return Err(CoreError::SnapshotFormat("bad magic".into()));
    }
    let version = u32::from_le_bytes(header[4..8].try_into().unwrap());
    if version != SNAPSHOT_VERSION {
        return Err(CoreError::SnapshotFormat(format!(
            "unsupported version {version}"
        )));
    }
    let mut n = [0usize; 3];
    for (i, slot) in n.iter_mut().enumerate() {
        *slot = u32::from_le_bytes(header[8 + 4 * i..12 + 4 * i].try_into().unwrap()) as usize;
    }
    let mut box_len = [0f64; 3];
    for (i, slot) in box_len.iter_mut().enumerate() {
        *slot = f64::from_le_bytes(header[20 + 8 * i..28 + 8 * i].try_into().unwrap());
    }
    let flags = u32::from_le_bytes(header[44..48].try_into().unwrap());
    let grid = Grid3::new(n, box_len)?;

    let mut buf = vec![0u8; grid.len() * 16];
    input.read_exact(&mut buf)?;
    let values: Vec<Complex64> = buf
        .chunks_exact(16)
        .map(|c| {
            Complex64::new(
                f64::from_le_bytes(c[0..8].try_into().unwrap()),
                f64::from_le_bytes(c[8..16].try_into().unwrap()),
            )
        })
        .collect();
    let mut field = Field::from_values(grid, values)?;
    field.set_purely_real(flags & FLAG_PURELY_REAL != 0);
    Ok(field)
}
