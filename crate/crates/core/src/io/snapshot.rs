//! Binary field snapshots.
//!
//! Layout, all little-endian: `RBPF`, u32 version, u64 nx, u64 ny, f64 extent
//! (cm), f64 z (cm), then nx·ny (re, im) f64 pairs in row-major order.

use std::fs;
use std::path::Path;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::solver::ComplexField2D;

pub const MAGIC: &[u8; 4] = b"RBPF";
pub const VERSION: u32 = 1;
const HEADER_LEN: usize = 4 + 4 + 8 + 8 + 8 + 8;

pub fn encode(field: &ComplexField2D) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_LEN + 16 * field.values.len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(field.nx as u64).to_le_bytes());
    out.extend_from_slice(&(field.ny as u64).to_le_bytes());
    out.extend_from_slice(&field.extent.to_le_bytes());
    out.extend_from_slice(&field.z.to_le_bytes());
    for v in &field.values {
        out.extend_from_slice(&v.re.to_le_bytes());
        out.extend_from_slice(&v.im.to_le_bytes());
    }
    out
}

fn f64_at(bytes: &[u8], at: usize) -> f64 {
    f64::from_le_bytes(bytes[at..at + 8].try_into().unwrap())
}

fn u64_at(bytes: &[u8], at: usize) -> u64 {
    u64::from_le_bytes(bytes[at..at + 8].try_into().unwrap())
}

/// Decodes a snapshot; `path` is only used in error messages.
pub fn decode(bytes: &[u8], path: &Path) -> Result<ComplexField2D> {
    let bad = |reason: String| Error::Snapshot {
        path: path.to_path_buf(),
        reason,
    };
    if bytes.len() < HEADER_LEN {
        return Err(bad(format!("{} bytes is shorter than the header", bytes.len())));
    }
    if &bytes[..4] != MAGIC {
        return Err(bad("missing RBPF magic".into()));
    }
    let version = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
    if version != VERSION {
        return Err(bad(format!("unsupported version {version}")));
    }
    let (nx, ny) = (u64_at(bytes, 8), u64_at(bytes, 16));
    let (extent, z) = (f64_at(bytes, 24), f64_at(bytes, 32));
    let expected = nx
        .checked_mul(ny)
        .and_then(|n| n.checked_mul(16))
        .and_then(|n| n.checked_add(HEADER_LEN as u64));
    if expected != Some(bytes.len() as u64) {
        return Err(bad(format!(
            "{nx}x{ny} samples do not match a {}-byte file",
            bytes.len()
        )));
    }
    if nx == 0 || ny == 0 || !(extent > 0.0) || !z.is_finite() {
        return Err(bad(format!("bad header (nx {nx}, ny {ny}, extent {extent}, z {z})")));
    }
    let values = bytes[HEADER_LEN..]
        .chunks_exact(16)
        .map(|c| Complex64::new(f64_at(c, 0), f64_at(c, 8)))
        .collect();
    Ok(ComplexField2D {
        nx: nx as usize,
        ny: ny as usize,
        extent,
        z,
        values,
    })
}

pub fn write_snapshot(path: &Path, field: &ComplexField2D) -> Result<()> {
    fs::write(path, encode(field))?;
    Ok(())
}

pub fn read_snapshot(path: &Path) -> Result<ComplexField2D> {
    decode(&fs::read(path)?, path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn field(nx: usize, ny: usize) -> ComplexField2D {
        let mut f = ComplexField2D::zeros(nx, ny, 0.3);
        f.z = 1.25;
        for (n, v) in f.values.iter_mut().enumerate() {
            *v = Complex64::new(n as f64, -(n as f64) * 0.5);
        }
        f
    }

    #[test]
    fn header_layout_is_fixed() {
        let bytes = encode(&field(2, 3));
        assert_eq!(&bytes[..4], b"RBPF");
        assert_eq!(bytes[4..8], [1, 0, 0, 0]);
        assert_eq!(bytes[8..16], [2, 0, 0, 0, 0, 0, 0, 0]);
        assert_eq!(bytes[16..24], [3, 0, 0, 0, 0, 0, 0, 0]);
        assert_eq!(bytes[24..32], 0.3f64.to_le_bytes());
        assert_eq!(bytes[32..40], 1.25f64.to_le_bytes());
        assert_eq!(bytes.len(), 40 + 6 * 16);
        // sample (i=0, j=1) is the second pair
        assert_eq!(bytes[56..64], 1.0f64.to_le_bytes());
        assert_eq!(bytes[64..72], (-0.5f64).to_le_bytes());
    }

    #[test]
    fn truncated_and_foreign_files_are_rejected() {
        let p = Path::new("x.rbpf");
        let bytes = encode(&field(2, 2));
        assert!(matches!(
            decode(&bytes[..bytes.len() - 1], p),
            Err(Error::Snapshot { .. })
        ));
        let mut wrong = bytes.clone();
        wrong[0] = b'X';
        assert!(matches!(decode(&wrong, p), Err(Error::Snapshot { .. })));
        let mut version = bytes;
        version[4] = 2;
        assert!(matches!(decode(&version, p), Err(Error::Snapshot { .. })));
    }

    proptest! {
        #[test]
        fn round_trip_is_bit_exact(nx in 1usize..6, ny in 1usize..6, seed in any::<u64>()) {
            let mut f = ComplexField2D::zeros(nx, ny, 0.2);
            f.z = (seed % 1000) as f64 * 1e-3;
            for (n, v) in f.values.iter_mut().enumerate() {
                let bits = seed.wrapping_mul(n as u64 + 1);
                *v = Complex64::new(f64::from_bits(bits >> 2), -(bits as f64));
            }
            let back = decode(&encode(&f), Path::new("p")).unwrap();
            prop_assert_eq!(encode(&back), encode(&f));
        }
    }
}
