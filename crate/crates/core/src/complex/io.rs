//! `.cuvx` / `.cucx` binary files.
//!
//! Layout (all integers little-endian):
//!
//! | bytes | content                                   |
//! |-------|-------------------------------------------|
//! | 0..4  | magic, `CUVX` (voxel field) or `CUCX` (cell set) |
//! | 4     | version, `0x01`                           |
//! | 5     | dimension `d` as `u8`                     |
//! | 6..14 | side length `n` as `u64`                  |
//! | 14..  | packed occupancy bits, LSB first          |
//!
//! The payload holds `ceil(n^d / 8)` bytes for a field and `ceil((2n)^d / 8)`
//! bytes for a cell set. Unused bits of the last byte must be zero.

use std::fs;
use std::path::Path;

use thiserror::Error;

use super::{CellSet, VoxelField};
use crate::bits::Bits;
use crate::lattice::{LatticeError, LatticeSpec};

pub const FIELD_MAGIC: [u8; 4] = *b"CUVX";
pub const CELLS_MAGIC: [u8; 4] = *b"CUCX";
pub const VERSION: u8 = 1;
const HEADER_LEN: usize = 14;

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("bad magic {found:?}, expected {expected:?}")]
    BadMagic { expected: [u8; 4], found: [u8; 4] },
    #[error("unsupported format version {0}")]
    UnsupportedVersion(u8),
    #[error("file size mismatch: expected {expected} bytes, found {actual}")]
    SizeMismatch { expected: u64, actual: u64 },
    #[error("nonzero padding bits after the last cell")]
    NonZeroPadding,
    #[error("invalid lattice in header: {0}")]
    Lattice(#[from] LatticeError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Contents of either file kind.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Stored {
    Field(VoxelField),
    Cells(CellSet),
}

fn encode(magic: [u8; 4], spec: LatticeSpec, bits: &Bits) -> Vec<u8> {
    let payload = bits.to_bytes();
    let mut out = Vec::with_capacity(HEADER_LEN + payload.len());
    out.extend_from_slice(&magic);
    out.push(VERSION);
    out.push(spec.dim() as u8);
    out.extend_from_slice(&spec.side().to_le_bytes());
    out.extend_from_slice(&payload);
    out
}

fn decode(
    magic: [u8; 4],
    bytes: &[u8],
    bit_len: impl Fn(&LatticeSpec) -> u64,
) -> Result<(LatticeSpec, Bits), FormatError> {
    if bytes.len() < 4 {
        return Err(FormatError::SizeMismatch {
            expected: HEADER_LEN as u64,
            actual: bytes.len() as u64,
        });
    }
    let found: [u8; 4] = bytes[..4].try_into().unwrap();
    if found != magic {
        return Err(FormatError::BadMagic {
            expected: magic,
            found,
        });
    }
    if bytes.len() < HEADER_LEN {
        return Err(FormatError::SizeMismatch {
            expected: HEADER_LEN as u64,
            actual: bytes.len() as u64,
        });
    }
    if bytes[4] != VERSION {
        return Err(FormatError::UnsupportedVersion(bytes[4]));
    }
    let dim = usize::from(bytes[5]);
    let side = u64::from_le_bytes(bytes[6..HEADER_LEN].try_into().unwrap());
    let spec = LatticeSpec::new(dim, side)?;
    let len = bit_len(&spec);
    let expected = HEADER_LEN as u64 + len.div_ceil(8);
    if bytes.len() as u64 != expected {
        return Err(FormatError::SizeMismatch {
            expected,
            actual: bytes.len() as u64,
        });
    }
    let bits = Bits::from_bytes(&bytes[HEADER_LEN..], len).ok_or(FormatError::NonZeroPadding)?;
    Ok((spec, bits))
}

pub fn field_to_bytes(field: &VoxelField) -> Vec<u8> {
    encode(FIELD_MAGIC, field.spec(), field.bits())
}

pub fn field_from_bytes(bytes: &[u8]) -> Result<VoxelField, FormatError> {
    let (spec, bits) = decode(FIELD_MAGIC, bytes, LatticeSpec::top_count)?;
    Ok(VoxelField::from_bits(spec, bits))
}

pub fn cells_to_bytes(cells: &CellSet) -> Vec<u8> {
    encode(CELLS_MAGIC, cells.spec(), cells.bits())
}

pub fn cells_from_bytes(bytes: &[u8]) -> Result<CellSet, FormatError> {
    let (spec, bits) = decode(CELLS_MAGIC, bytes, LatticeSpec::total_cells)?;
    Ok(CellSet::from_bits(spec, bits))
}

pub fn write_field(field: &VoxelField, path: impl AsRef<Path>) -> Result<(), FormatError> {
    fs::write(path, field_to_bytes(field))?;
    Ok(())
}

pub fn read_field(path: impl AsRef<Path>) -> Result<VoxelField, FormatError> {
    field_from_bytes(&fs::read(path)?)
}

pub fn write_cells(cells: &CellSet, path: impl AsRef<Path>) -> Result<(), FormatError> {
    fs::write(path, cells_to_bytes(cells))?;
    Ok(())
}

pub fn read_cells(path: impl AsRef<Path>) -> Result<CellSet, FormatError> {
    cells_from_bytes(&fs::read(path)?)
}

/// Reads either file kind, dispatching on the magic.
pub fn read_any(path: impl AsRef<Path>) -> Result<Stored, FormatError> {
    let bytes = fs::read(path)?;
    if bytes.starts_with(&CELLS_MAGIC) {
        cells_from_bytes(&bytes).map(Stored::Cells)
    } else {
        field_from_bytes(&bytes).map(Stored::Field)
    }
}
