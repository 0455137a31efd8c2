//! `CHF1` binary field snapshots.
//!
//! Layout: the magic bytes `CHF1`, one `u8` dimension count, that many `u64`
//! little-endian extents, then `n^d` little-endian IEEE-754 doubles in
//! row-major order.

use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::field::{Field, TorusGrid};
use crate::scalar::Real;

pub const MAGIC: &[u8; 4] = b"CHF1";

pub fn write_chf1<T: Real, W: Write>(field: &Field<T>, mut out: W) -> Result<()> {
    let grid = field.grid();
    out.write_all(MAGIC)?;
    out.write_all(&[grid.dim() as u8])?;
    for extent in grid.extents() {
        out.write_all(&(extent as u64).to_le_bytes())?;
    }
    for v in field.values() {
        out.write_all(&v.to_f64_lossy().to_le_bytes())?;
    }
    Ok(())
}

pub fn read_chf1<T: Real, R: Read>(mut input: R) -> Result<Field<T>> {
    let mut magic = [0u8; 4];
    input.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Format(format!("bad magic {magic:?}, expected CHF1")));
    }
    let mut dim = [0u8; 1];
    input.read_exact(&mut dim)?;
    let mut extents = Vec::with_capacity(dim[0] as usize);
    let mut word = [0u8; 8];
    for _ in 0..dim[0] {
        input.read_exact(&mut word)?;
        let e = u64::from_le_bytes(word);
        extents
            .push(usize::try_from(e).map_err(|_| Error::Format(format!("extent {e} too large")))?);
    }
    let grid = TorusGrid::from_extents(&extents)?;
    let mut values = Vec::with_capacity(grid.len());
    for _ in 0..grid.len() {
        input.read_exact(&mut word)?;
        let v = f64::from_le_bytes(word);
        values.push(T::from_f64(v).ok_or(Error::NonFinite("snapshot values"))?);
    }
    let mut trailing = [0u8; 1];
    if input.read(&mut trailing)? != 0 {
        return Err(Error::Format("trailing bytes after field data".into()));
    }
    Field::new(grid, values)
}
