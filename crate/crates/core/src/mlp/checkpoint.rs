//! Binary parameter container.
//!
//! Layout (little-endian):
//!
//! | bytes | field |
//! |-------|-------|
//! | 4 | magic `MCVR` |
//! | 2 | format version (1) |
//! | 1 | value width in bytes: 4 (f32) or 8 (f64) |
//! | 1 | reserved, 0 |
//! | 4 | number of networks `M` |
//! | 4 | number of layers `L` |
//! | 4 (L+1) | layer widths `d_0 .. d_L` |
//! | ... | for each network, for each layer: weights `d_l x d_{l-1}` row-major, then biases `d_l` |

use std::fs;
use std::path::Path;

use super::MlpParams;
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"MCVR";
pub const VERSION: u16 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Precision {
    F32,
    F64,
}

impl Precision {
    fn width(self) -> u8 {
        match self {
            Precision::F32 => 4,
            Precision::F64 => 8,
        }
    }
}

pub fn encode(nets: &[MlpParams], precision: Precision) -> Result<Vec<u8>> {
    let dims = nets
        .first()
        .map(MlpParams::dims)
        .ok_or_else(|| Error::Checkpoint("nothing to save".into()))?;
    if nets.iter().any(|n| n.dims() != dims) {
        return Err(Error::Checkpoint("networks differ in shape".into()));
    }
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.push(precision.width());
    out.push(0);
    out.extend_from_slice(&(nets.len() as u32).to_le_bytes());
    out.extend_from_slice(&((dims.len() - 1) as u32).to_le_bytes());
    for d in &dims {
        out.extend_from_slice(&(*d as u32).to_le_bytes());
    }
    for net in nets {
        for &v in net.params_in_file_order() {
            match precision {
                Precision::F32 => out.extend_from_slice(&(v as f32).to_le_bytes()),
                Precision::F64 => out.extend_from_slice(&v.to_le_bytes()),
            }
        }
    }
    Ok(out)
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos + n;
        let slice = self
            .buf
            .get(self.pos..end)
            .ok_or_else(|| Error::Checkpoint(format!("truncated at byte {} (need {end}, have {})", self.pos, self.buf.len())))?;
        self.pos = end;
        Ok(slice)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }
}

pub fn decode(buf: &[u8]) -> Result<(Precision, Vec<MlpParams>)> {
    let mut r = Reader { buf, pos: 0 };
    if r.take(4)? != MAGIC {
        return Err(Error::Checkpoint("not a checkpoint (bad magic)".into()));
    }
    let version = u16::from_le_bytes(r.take(2)?.try_into().expect("2 bytes"));
    if version != VERSION {
        return Err(Error::Checkpoint(format!("unsupported version {version}")));
    }
    let precision = match r.take(2)?[0] {
        4 => Precision::F32,
        8 => Precision::F64,
        w => return Err(Error::Checkpoint(format!("bad value width {w}"))),
    };
    let nets = r.u32()? as usize;
    let layers = r.u32()? as usize;
    let dims = (0..=layers).map(|_| r.u32().map(|d| d as usize)).collect::<Result<Vec<_>>>()?;
    let mut out = Vec::with_capacity(nets);
    for _ in 0..nets {
        let mut p = MlpParams::zeros(&dims);
        for v in p.params_in_file_order_mut() {
            *v = match precision {
                Precision::F32 => f32::from_le_bytes(r.take(4)?.try_into().expect("4 bytes")) as f64,
                Precision::F64 => f64::from_le_bytes(r.take(8)?.try_into().expect("8 bytes")),
            };
        }
        out.push(p);
    }
    if r.pos != buf.len() {
        return Err(Error::Checkpoint(format!("{} trailing bytes", buf.len() - r.pos)));
    }
    Ok((precision, out))
}

pub fn save(path: impl AsRef<Path>, nets: &[MlpParams], precision: Precision) -> Result<()> {
    fs::write(path, encode(nets, precision)?)?;
    Ok(())
}

pub fn load(path: impl AsRef<Path>) -> Result<(Precision, Vec<MlpParams>)> {
    decode(&fs::read(path)?)
}

impl MlpParams {
    fn params_in_file_order(&self) -> Vec<&f64> {
        let mut v = Vec::new();
        for (w, b) in self.weights.iter().zip(&self.biases) {
            v.extend(w.iter());
            v.extend(b.iter());
        }
        v
    }

    fn params_in_file_order_mut(&mut self) -> Vec<&mut f64> {
        let mut v = Vec::new();
        for (w, b) in self.weights.iter_mut().zip(self.biases.iter_mut()) {
            v.extend(w.iter_mut());
            v.extend(b.iter_mut());
        }
        v
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn round_trip_both_precisions() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let nets: Vec<MlpParams> = (0..2).map(|_| MlpParams::uniform_init(&[5, 3, 2], &mut rng)).collect();
        let (p, back) = decode(&encode(&nets, Precision::F64).unwrap()).unwrap();
        assert_eq!(p, Precision::F64);
        assert_eq!(back, nets);
        let (p, back) = decode(&encode(&nets, Precision::F32).unwrap()).unwrap();
        assert_eq!(p, Precision::F32);
        assert!(back[1].max_abs_diff(&nets[1]) < 1e-7);
    }

    #[test]
    fn header_layout() {
        let net = MlpParams::zeros(&[2, 1]);
        let bytes = encode(&[net], Precision::F32).unwrap();
        assert_eq!(&bytes[..4], b"MCVR");
        assert_eq!(&bytes[4..8], &[1, 0, 4, 0]);
        assert_eq!(bytes.len(), 8 + 4 + 4 + 8 + 4 * 3);
    }

    #[test]
    fn corrupt_inputs() {
        let net = MlpParams::zeros(&[2, 1]);
        let bytes = encode(&[net], Precision::F64).unwrap();
        assert!(decode(&bytes[..bytes.len() - 1]).is_err());
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(decode(&bad).is_err());
        let mut bad = bytes.clone();
        bad[6] = 3;
        assert!(decode(&bad).is_err());
        let mut long = bytes;
        long.push(0);
        assert!(decode(&long).is_err());
    }
}
