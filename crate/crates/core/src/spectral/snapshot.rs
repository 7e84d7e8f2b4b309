//! Little-endian binary snapshots of spectral fields.
//!
//! Layout: `b"NNSF"`, version `u32`, `L` as `f64`, `n` as `u32`, `lambda_cut`
//! as `f64` (`+inf` for an untruncated field), then `2 * n * n` complex
//! coefficients as `(re, im)` pairs of `f64`, component-major and row-major.

use std::io::{Read, Write};

use num_complex::Complex64;

use super::field::SpectralField;
use super::grid::TorusGrid;
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"NNSF";
pub const VERSION: u32 = 1;

pub fn write_snapshot<W: Write>(mut w: W, field: &SpectralField, lambda_cut: f64) -> Result<()> {
    let grid = field.grid();
    let mut buf = Vec::with_capacity(24 + 16 * field.coeffs().len());
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&VERSION.to_le_bytes());
    buf.extend_from_slice(&grid.length().to_le_bytes());
    buf.extend_from_slice(&(grid.n() as u32).to_le_bytes());
    buf.extend_from_slice(&lambda_cut.to_le_bytes());
    for c in field.coeffs() {
        buf.extend_from_slice(&c.re.to_le_bytes());
        buf.extend_from_slice(&c.im.to_le_bytes());
    }
    w.write_all(&buf)?;
    Ok(())
}

fn take<const N: usize>(bytes: &[u8], pos: &mut usize) -> Result<[u8; N]> {
    let end = *pos + N;
    let slice = bytes
        .get(*pos..end)
        .ok_or_else(|| Error::Validation(format!("snapshot truncated at byte {}", *pos)))?;
    *pos = end;
    Ok(slice.try_into().expect("slice length checked"))
}

/// Reads a snapshot, returning the field and its stored cutoff eigenvalue.
pub fn read_snapshot<R: Read>(mut r: R) -> Result<(SpectralField, f64)> {
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    let mut pos = 0;
    if &take::<4>(&bytes, &mut pos)? != MAGIC {
        return Err(Error::Validation("bad snapshot magic".into()));
    }
    let version = u32::from_le_bytes(take(&bytes, &mut pos)?);
    if version != VERSION {
        return Err(Error::Validation(format!("unsupported snapshot version {version}")));
    }
    let length = f64::from_le_bytes(take(&bytes, &mut pos)?);
    let n = u32::from_le_bytes(take(&bytes, &mut pos)?) as usize;
    let lambda_cut = f64::from_le_bytes(take(&bytes, &mut pos)?);
    let grid = TorusGrid::new(length, n)?;
    let count = 2 * grid.modes();
    if bytes.len() - pos != 16 * count {
        return Err(Error::Validation(format!(
            "snapshot payload has {} bytes, expected {}",
            bytes.len() - pos,
            16 * count
        )));
    }
    let mut coeffs = Vec::with_capacity(count);
    for _ in 0..count {
        let re = f64::from_le_bytes(take(&bytes, &mut pos)?);
        let im = f64::from_le_bytes(take(&bytes, &mut pos)?);
        coeffs.push(Complex64::new(re, im));
    }
    Ok((SpectralField::from_coeffs(grid, coeffs)?, lambda_cut))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{RawSpectrum, VelocitySamples};

    #[test]
    fn round_trip_is_bit_exact() {
        let g = TorusGrid::new(3.0, 8).unwrap();
        let k0 = g.base_wavenumber();
        let s = VelocitySamples::from_fn(g, |x, y| ((k0 * y).sin() + (2.0 * k0 * y).cos(), (k0 * x).cos()));
        let f: SpectralField = RawSpectrum::from_physical(&s).unwrap().try_into().unwrap();
        let mut bytes = Vec::new();
        write_snapshot(&mut bytes, &f, 5.0).unwrap();
        assert_eq!(&bytes[..4], b"NNSF");
        assert_eq!(bytes.len(), 28 + 16 * 128);
        let (back, cut) = read_snapshot(bytes.as_slice()).unwrap();
        assert_eq!(cut, 5.0);
        assert_eq!(back, f);
    }

    #[test]
    fn rejects_truncated_payload() {
        let g = TorusGrid::new(1.0, 4).unwrap();
        let mut bytes = Vec::new();
        write_snapshot(&mut bytes, &SpectralField::zeros(g), f64::INFINITY).unwrap();
        bytes.pop();
        assert!(read_snapshot(bytes.as_slice()).is_err());
    }
}
