//! `KFLD` field snapshot format.
//!
//! ```text
//! magic      4 bytes  "KFLD"
//! version    u32      1
//! dim        u32
//! components u32
//! resolution u32 x dim
//! storage    u32      1 = complex Fourier coefficients
//! payload    (re: f64, im: f64) per coefficient, component-major,
//!            row-major FFT index order within a component
//! ```
//! All integers and floats are little-endian.

use std::io;
use std::path::Path;

use num_complex::Complex64;

use super::{SpectralField, TorusGrid};
use crate::binio::{put_f64, put_u32, read_all, write_atomic, Reader};

pub const FIELD_MAGIC: &[u8; 4] = b"KFLD";
pub const FIELD_VERSION: u32 = 1;
pub const STORAGE_COMPLEX_COEFFS: u32 = 1;

pub fn encode_field(field: &SpectralField) -> Vec<u8> {
    let grid = field.grid();
    let mut buf = Vec::with_capacity(32 + 16 * grid.len() * field.components());
    buf.extend_from_slice(FIELD_MAGIC);
    put_u32(&mut buf, FIELD_VERSION);
    put_u32(&mut buf, grid.dim() as u32);
    put_u32(&mut buf, field.components() as u32);
    for &n in grid.res() {
        put_u32(&mut buf, n as u32);
    }
    put_u32(&mut buf, STORAGE_COMPLEX_COEFFS);
    for c in 0..field.components() {
        for z in field.coeffs(c) {
            put_f64(&mut buf, z.re);
            put_f64(&mut buf, z.im);
        }
    }
    buf
}

pub fn decode_field(bytes: &[u8]) -> io::Result<SpectralField> {
    let mut r = Reader::new(bytes);
    r.magic(FIELD_MAGIC)?;
    let version = r.u32()?;
    if version != FIELD_VERSION {
        return Err(invalid(format!("unsupported KFLD version {version}")));
    }
    let dim = r.u32()? as usize;
    let comps = r.u32()? as usize;
    let res: Vec<usize> = (0..dim).map(|_| r.u32().map(|n| n as usize)).collect::<io::Result<_>>()?;
    let storage = r.u32()?;
    if storage != STORAGE_COMPLEX_COEFFS {
        return Err(invalid(format!("unsupported KFLD storage {storage}")));
    }
    let grid = TorusGrid::new(&res).map_err(|e| invalid(e.to_string()))?;
    let mut data = Vec::with_capacity(comps);
    for _ in 0..comps {
        let mut c = Vec::with_capacity(grid.len());
        for _ in 0..grid.len() {
            let re = r.f64()?;
            let im = r.f64()?;
            c.push(Complex64::new(re, im));
        }
        data.push(c);
    }
    r.finish()?;
    SpectralField::from_coeffs(&grid, data).map_err(|e| invalid(e.to_string()))
}

pub fn write_field(path: &Path, field: &SpectralField) -> io::Result<()> {
    write_atomic(path, &encode_field(field))
}

pub fn read_field(path: &Path) -> io::Result<SpectralField> {
    decode_field(&read_all(path)?)
}

fn invalid(msg: String) -> io::Error {
    io::Error::new(io::ErrorKind::InvalidData, msg)
}
