//! DTF1 binary tensor files.
//!
//! Layout: the magic bytes `DTF1`, the order as `u32` little-endian, each mode
//! size as `u64` little-endian, then every entry as little-endian IEEE-754
//! `f64` in first-index-fastest order.

use std::io::{Read, Write};
use std::path::Path;

use base64::engine::general_purpose::STANDARD;
use base64::Engine;

use crate::error::{Error, Result};
use crate::tensor::DenseTensor;

pub const MAGIC: &[u8; 4] = b"DTF1";

pub fn write_dtf<W: Write>(t: &DenseTensor, mut w: W) -> Result<()> {
    w.write_all(MAGIC)?;
    w.write_all(&(t.order() as u32).to_le_bytes())?;
    for &s in t.shape() {
        w.write_all(&(s as u64).to_le_bytes())?;
    }
    for &v in t.data() {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

pub fn read_dtf<R: Read>(mut r: R) -> Result<DenseTensor> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic).map_err(truncated)?;
    if &magic != MAGIC {
        return Err(Error::Format(format!("bad magic {:?}, expected DTF1", magic)));
    }
    let mut b4 = [0u8; 4];
    r.read_exact(&mut b4).map_err(truncated)?;
    let order = u32::from_le_bytes(b4) as usize;
    if order == 0 {
        return Err(Error::Format("DTF1 order must be at least 1".into()));
    }
    let mut shape = Vec::with_capacity(order);
    let mut b8 = [0u8; 8];
    for _ in 0..order {
        r.read_exact(&mut b8).map_err(truncated)?;
        let s = u64::from_le_bytes(b8);
        shape.push(usize::try_from(s).map_err(|_| Error::Format("mode size overflows usize".into()))?);
    }
    let len = shape
        .iter()
        .try_fold(1usize, |acc, &s| acc.checked_mul(s))
        .ok_or_else(|| Error::Format("DTF1 shape overflows".into()))?;
    let mut data = Vec::with_capacity(len);
    for _ in 0..len {
        r.read_exact(&mut b8).map_err(truncated)?;
        data.push(f64::from_le_bytes(b8));
    }
    let mut extra = [0u8; 1];
    if r.read(&mut extra)? != 0 {
        return Err(Error::Format("trailing bytes after DTF1 payload".into()));
    }
    DenseTensor::new(shape, data).map_err(|e| Error::Format(e.to_string()))
}

fn truncated(e: std::io::Error) -> Error {
    if e.kind() == std::io::ErrorKind::UnexpectedEof {
        Error::Format("truncated DTF1 stream".into())
    } else {
        Error::Io(e)
    }
}

pub fn to_bytes(t: &DenseTensor) -> Vec<u8> {
    let mut out = Vec::with_capacity(12 + 8 * (t.order() + t.len()));
    write_dtf(t, &mut out).expect("writing to a Vec cannot fail");
    out
}

pub fn from_bytes(bytes: &[u8]) -> Result<DenseTensor> {
    read_dtf(bytes)
}

pub fn to_base64(t: &DenseTensor) -> String {
    STANDARD.encode(to_bytes(t))
}

pub fn from_base64(s: &str) -> Result<DenseTensor> {
    let bytes = STANDARD.decode(s).map_err(|e| Error::Format(format!("base64: {}", e)))?;
    from_bytes(&bytes)
}

pub fn save(t: &DenseTensor, path: impl AsRef<Path>) -> Result<()> {
    let f = std::fs::File::create(path)?;
    let mut w = std::io::BufWriter::new(f);
    write_dtf(t, &mut w)?;
    w.flush()?;
    Ok(())
}

pub fn load(path: impl AsRef<Path>) -> Result<DenseTensor> {
    let f = std::fs::File::open(path)?;
    read_dtf(std::io::BufReader::new(f))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_layout_is_bit_exact() {
        let t = DenseTensor::new(vec![2, 1], vec![1.0, -2.5]).unwrap();
        let bytes = to_bytes(&t);
        let mut expected = b"DTF1".to_vec();
        expected.extend_from_slice(&2u32.to_le_bytes());
        expected.extend_from_slice(&2u64.to_le_bytes());
        expected.extend_from_slice(&1u64.to_le_bytes());
        expected.extend_from_slice(&1.0f64.to_le_bytes());
        expected.extend_from_slice(&(-2.5f64).to_le_bytes());
        assert_eq!(bytes, expected);
        assert_eq!(from_bytes(&bytes).unwrap(), t);
    }

    #[test]
    fn rejects_corrupt_streams() {
        let t = DenseTensor::new(vec![3], vec![1.0, 2.0, 3.0]).unwrap();
        let bytes = to_bytes(&t);
        assert!(matches!(from_bytes(&bytes[..bytes.len() - 1]), Err(Error::Format(_))));
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(matches!(from_bytes(&bad), Err(Error::Format(_))));
        let mut long = bytes.clone();
        long.push(0);
        assert!(matches!(from_bytes(&long), Err(Error::Format(_))));
    }

    #[test]
    fn base64_round_trip() {
        let t = DenseTensor::new(vec![1, 2, 2], vec![0.1, f64::MAX, -0.0, 1e-300]).unwrap();
        assert_eq!(from_base64(&to_base64(&t)).unwrap(), t);
    }
}
