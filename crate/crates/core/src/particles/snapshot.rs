//! `KPRT` particle snapshots: magic, `N` (u64), `d` (u32), then the `N x d`
//! positions and the `N x d` velocities as little-endian f64, row-major.

use std::io;
use std::path::Path;

use super::ParticleEnsemble;
use crate::binio::{put_f64, put_u32, put_u64, read_all, write_atomic, Reader};

pub const PARTICLE_MAGIC: &[u8; 4] = b"KPRT";

pub fn encode_particles(e: &ParticleEnsemble) -> Vec<u8> {
    let mut buf = Vec::with_capacity(16 + 16 * e.positions().len());
    buf.extend_from_slice(PARTICLE_MAGIC);
    put_u64(&mut buf, e.len() as u64);
    put_u32(&mut buf, e.dim() as u32);
    for &x in e.positions().iter().chain(e.velocities()) {
        put_f64(&mut buf, x);
    }
    buf
}

/// Decodes positions and velocities; `seed`, `sigma` and the step counter are
/// not part of the format and are supplied by the caller.
pub fn decode_particles(bytes: &[u8], seed: u64, sigma: f64) -> io::Result<ParticleEnsemble> {
    let mut r = Reader::new(bytes);
    r.magic(PARTICLE_MAGIC)?;
    let n = r.u64()? as usize;
    let d = r.u32()? as usize;
    if !(1..=3).contains(&d) {
        return Err(io::Error::new(io::ErrorKind::InvalidData, format!("bad dimension {d}")));
    }
    let mut x = Vec::with_capacity(n * d);
    for _ in 0..n * d {
        x.push(r.f64()?);
    }
    let mut v = Vec::with_capacity(n * d);
    for _ in 0..n * d {
        v.push(r.f64()?);
    }
    r.finish()?;
    ParticleEnsemble::new(d, x, v, seed, sigma).map_err(|e| io::Error::new(io::ErrorKind::InvalidData, e.to_string()))
}

pub fn write_particles(path: &Path, e: &ParticleEnsemble) -> io::Result<()> {
    write_atomic(path, &encode_particles(e))
}

pub fn read_particles(path: &Path, seed: u64, sigma: f64) -> io::Result<ParticleEnsemble> {
    decode_particles(&read_all(path)?, seed, sigma)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip_and_layout() {
        let e = ParticleEnsemble::new(2, vec![0.1, 0.2, 0.3, 0.4], vec![1.0, -1.0, 2.0, 0.5], 9, 0.3).unwrap();
        let b = encode_particles(&e);
        assert_eq!(&b[..4], b"KPRT");
        assert_eq!(u64::from_le_bytes(b[4..12].try_into().unwrap()), 2);
        assert_eq!(u32::from_le_bytes(b[12..16].try_into().unwrap()), 2);
        assert_eq!(f64::from_le_bytes(b[16..24].try_into().unwrap()), 0.1);
        assert_eq!(f64::from_le_bytes(b[48..56].try_into().unwrap()), 1.0);
        assert_eq!(decode_particles(&b, 9, 0.3).unwrap(), e);
        assert!(decode_particles(&b[..b.len() - 3], 9, 0.3).is_err());
    }
}
