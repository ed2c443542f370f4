//! Binary container for MPS checkpoints.
//!
//! Layout (all integers and floats little-endian):
//!
//! ```text
//! magic   : 4 bytes, b"MPSC"
//! version : u32, currently 1
//! n_sites : u64
//! sites   : n_sites records of
//!             chi_left : u64
//!             phys_dim : u64
//!             chi_right: u64
//!             data     : chi_left * phys_dim * chi_right complex entries,
//!                        row-major in (left, phys, right) order, each as
//!                        (re: f64, im: f64)
//! bonds   : n_sites - 1 records of
//!             dim    : u64
//!             lambda : dim f64 values (strictly positive)
//! ```
//!
//! Bond inverses are not stored; they are rebuilt on load, and every
//! validation that applies to freshly constructed states (boundary bond
//! dimensions, neighbor consistency, weight positivity) runs on load too,
//! so a corrupt or truncated file is rejected rather than half-read.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use ndarray::{Array1, Array3};

use super::state::{BondWeights, InvCanonicalMps, SiteTensor};
use crate::error::{Error, Result};
use crate::C64;

const MAGIC: &[u8; 4] = b"MPSC";
const VERSION: u32 = 1;

/// Largest per-record element count accepted on load (2^33 complex entries
/// is a 128 GiB tensor; anything near it is a corrupt header).
const MAX_ELEMENTS: u64 = 1 << 33;

/// Writes `mps` to `path`, overwriting any existing file.
pub fn save_mps<P: AsRef<Path>>(path: P, mps: &InvCanonicalMps) -> Result<()> {
    let file = File::create(path.as_ref())?;
    let mut w = BufWriter::new(file);
    w.write_all(MAGIC)?;
    w.write_u32::<LittleEndian>(VERSION)?;
    w.write_u64::<LittleEndian>(mps.n_sites() as u64)?;
    for j in 0..mps.n_sites() {
        let site = mps.site(j);
        let (l, d, r) = site.dims();
        w.write_u64::<LittleEndian>(l as u64)?;
        w.write_u64::<LittleEndian>(d as u64)?;
        w.write_u64::<LittleEndian>(r as u64)?;
        for z in site.data().iter() {
            w.write_f64::<LittleEndian>(z.re)?;
            w.write_f64::<LittleEndian>(z.im)?;
        }
    }
    for j in 0..mps.n_sites() - 1 {
        let bond = mps.bond(j);
        w.write_u64::<LittleEndian>(bond.dim() as u64)?;
        for &v in bond.lambda() {
            w.write_f64::<LittleEndian>(v)?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Reads an MPS previously written by [`save_mps`].
pub fn load_mps<P: AsRef<Path>>(path: P) -> Result<InvCanonicalMps> {
    let file = File::open(path.as_ref())?;
    let mut r = BufReader::new(file);

    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Format("not an MPS container (bad magic)".into()));
    }
    let version = r.read_u32::<LittleEndian>()?;
    if version != VERSION {
        return Err(Error::Format(format!(
            "unsupported container version {version} (expected {VERSION})"
        )));
    }
    let n = r.read_u64::<LittleEndian>()?;
    if n < 2 || n > 1 << 20 {
        return Err(Error::Format(format!("implausible site count {n}")));
    }
    let n = n as usize;

    let mut sites = Vec::with_capacity(n);
    for _ in 0..n {
        let l = read_dim(&mut r)?;
        let d = read_dim(&mut r)?;
        let rr = read_dim(&mut r)?;
        let count = (l as u64)
            .checked_mul(d as u64)
            .and_then(|v| v.checked_mul(rr as u64))
            .filter(|&v| v > 0 && v <= MAX_ELEMENTS)
            .ok_or_else(|| Error::Format("implausible site tensor shape".into()))?;
        let mut data = Vec::with_capacity(count as usize);
        for _ in 0..count {
            let re = r.read_f64::<LittleEndian>()?;
            let im = r.read_f64::<LittleEndian>()?;
            data.push(C64::new(re, im));
        }
        let arr = Array3::from_shape_vec((l, d, rr), data)
            .map_err(|e| Error::Format(format!("site tensor shape mismatch: {e}")))?;
        sites.push(SiteTensor::new(arr)?);
    }

    let mut bonds = Vec::with_capacity(n - 1);
    for _ in 0..n - 1 {
        let dim = read_dim(&mut r)?;
        let mut lambda = Array1::<f64>::zeros(dim);
        for v in lambda.iter_mut() {
            *v = r.read_f64::<LittleEndian>()?;
        }
        bonds.push(BondWeights::new(lambda)?);
    }

    // Reject trailing garbage: a well-formed container ends exactly here.
    let mut probe = [0u8; 1];
    match r.read(&mut probe)? {
        0 => {}
        _ => return Err(Error::Format("trailing bytes after MPS container".into())),
    }

    InvCanonicalMps::new(sites, bonds)
}

fn read_dim<R: Read>(r: &mut R) -> Result<usize> {
    let v = r.read_u64::<LittleEndian>()?;
    if v == 0 || v > MAX_ELEMENTS {
        return Err(Error::Format(format!("implausible dimension {v}")));
    }
    Ok(v as usize)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn round_trip_is_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(81);
        let mps = InvCanonicalMps::random(6, 2, 7, &mut rng).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("state.mps");
        save_mps(&path, &mps).unwrap();
        let back = load_mps(&path).unwrap();

        assert_eq!(back.n_sites(), mps.n_sites());
        assert_eq!(back.bond_dims(), mps.bond_dims());
        for j in 0..mps.n_sites() {
            assert_eq!(back.site(j).data(), mps.site(j).data(), "site {j}");
        }
        for j in 0..mps.n_sites() - 1 {
            assert_eq!(back.bond(j).lambda(), mps.bond(j).lambda(), "bond {j}");
            assert_eq!(back.bond(j).inv(), mps.bond(j).inv(), "bond {j} inverse");
        }
    }

    #[test]
    fn rejects_bad_magic_and_version() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.mps");
        std::fs::write(&path, b"NOPE\x01\x00\x00\x00").unwrap();
        assert!(matches!(load_mps(&path), Err(Error::Format(_))));

        let mut bytes = Vec::new();
        bytes.extend_from_slice(b"MPSC");
        bytes.extend_from_slice(&9u32.to_le_bytes());
        bytes.extend_from_slice(&2u64.to_le_bytes());
        std::fs::write(&path, &bytes).unwrap();
        assert!(matches!(load_mps(&path), Err(Error::Format(_))));
    }

    #[test]
    fn rejects_truncated_file() {
        let mut rng = ChaCha8Rng::seed_from_u64(82);
        let mps = InvCanonicalMps::random(4, 2, 3, &mut rng).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cut.mps");
        save_mps(&path, &mps).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        std::fs::write(&path, &bytes[..bytes.len() / 2]).unwrap();
        assert!(load_mps(&path).is_err());
    }

    #[test]
    fn rejects_trailing_garbage() {
        let mut rng = ChaCha8Rng::seed_from_u64(83);
        let mps = InvCanonicalMps::random(3, 2, 2, &mut rng).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("tail.mps");
        save_mps(&path, &mps).unwrap();
        let mut bytes = std::fs::read(&path).unwrap();
        bytes.push(0x7f);
        std::fs::write(&path, &bytes).unwrap();
        assert!(matches!(load_mps(&path), Err(Error::Format(_))));
    }

    #[test]
    fn missing_file_is_an_io_error() {
        assert!(matches!(
            load_mps("/nonexistent/definitely/not/here.mps"),
            Err(Error::Io(_))
        ));
    }
}
