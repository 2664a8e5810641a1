//! IDX container reader/writer (MNIST layout), transparently gunzipping.

use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use flate2::read::GzDecoder;
use flate2::write::GzEncoder;
use flate2::Compression;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub const IMAGE_MAGIC: u32 = 2051;
pub const LABEL_MAGIC: u32 = 2049;

/// Where a dataset came from: paths and SHA-256 of the files as stored on disk.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Provenance {
    pub images_path: PathBuf,
    pub labels_path: PathBuf,
    pub images_sha256: String,
    pub labels_sha256: String,
}

impl Provenance {
    pub fn synthetic() -> Self {
        Provenance {
            images_path: PathBuf::from("synthetic"),
            labels_path: PathBuf::from("synthetic"),
            images_sha256: String::new(),
            labels_sha256: String::new(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IdxDataset {
    pub rows: usize,
    pub cols: usize,
    /// `count x rows x cols` raw pixels
    pub images: Vec<u8>,
    pub labels: Vec<u8>,
    pub provenance: Provenance,
}

impl IdxDataset {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn pixels_per_image(&self) -> usize {
        self.rows * self.cols
    }

    pub fn image(&self, i: usize) -> &[u8] {
        let d = self.pixels_per_image();
        &self.images[i * d..(i + 1) * d]
    }

    /// First `n` examples (in file order).
    pub fn truncated(&self, n: usize) -> Result<Self> {
        if n > self.len() {
            return Err(Error::Size {
                requested: n,
                available: self.len(),
            });
        }
        let d = self.pixels_per_image();
        Ok(IdxDataset {
            images: self.images[..n * d].to_vec(),
            labels: self.labels[..n].to_vec(),
            ..self.clone()
        })
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// File bytes plus their decompressed payload (gzip detected by its magic).
fn load(path: &Path) -> Result<(Vec<u8>, Vec<u8>)> {
    let raw = fs::read(path)?;
    if raw.starts_with(&[0x1f, 0x8b]) {
        let mut out = Vec::new();
        GzDecoder::new(raw.as_slice()).read_to_end(&mut out)?;
        Ok((raw, out))
    } else {
        Ok((raw.clone(), raw))
    }
}

fn be_u32(path: &Path, buf: &[u8], offset: usize) -> Result<u32> {
    match buf.get(offset..offset + 4) {
        Some(b) => Ok(u32::from_be_bytes([b[0], b[1], b[2], b[3]])),
        None => Err(Error::Truncated {
            path: path.to_path_buf(),
            offset,
            expected: offset + 4,
            actual: buf.len(),
        }),
    }
}

fn check_magic(path: &Path, buf: &[u8], expected: u32) -> Result<()> {
    let found = be_u32(path, buf, 0)?;
    if found != expected {
        return Err(Error::BadMagic {
            path: path.to_path_buf(),
            expected,
            found,
        });
    }
    Ok(())
}

fn payload<'a>(path: &Path, buf: &'a [u8], offset: usize, len: usize) -> Result<&'a [u8]> {
    if buf.len() < offset + len {
        return Err(Error::Truncated {
            path: path.to_path_buf(),
            offset,
            expected: offset + len,
            actual: buf.len(),
        });
    }
    Ok(&buf[offset..offset + len])
}

/// Parse an image file body: `(count, rows, cols, pixels)`.
pub fn parse_images(path: &Path, buf: &[u8]) -> Result<(usize, usize, usize, Vec<u8>)> {
    check_magic(path, buf, IMAGE_MAGIC)?;
    let count = be_u32(path, buf, 4)? as usize;
    let rows = be_u32(path, buf, 8)? as usize;
    let cols = be_u32(path, buf, 12)? as usize;
    let px = payload(path, buf, 16, count * rows * cols)?;
    Ok((count, rows, cols, px.to_vec()))
}

pub fn parse_labels(path: &Path, buf: &[u8]) -> Result<Vec<u8>> {
    check_magic(path, buf, LABEL_MAGIC)?;
    let count = be_u32(path, buf, 4)? as usize;
    Ok(payload(path, buf, 8, count)?.to_vec())
}

pub fn read_idx(images_path: impl AsRef<Path>, labels_path: impl AsRef<Path>) -> Result<IdxDataset> {
    let (ip, lp) = (images_path.as_ref(), labels_path.as_ref());
    let (iraw, ibuf) = load(ip)?;
    let (lraw, lbuf) = load(lp)?;
    let (count, rows, cols, images) = parse_images(ip, &ibuf)?;
    let labels = parse_labels(lp, &lbuf)?;
    if labels.len() != count {
        return Err(Error::CountMismatch {
            images: count,
            labels: labels.len(),
        });
    }
    Ok(IdxDataset {
        rows,
        cols,
        images,
        labels,
        provenance: Provenance {
            images_path: ip.to_path_buf(),
            labels_path: lp.to_path_buf(),
            images_sha256: sha256_hex(&iraw),
            labels_sha256: sha256_hex(&lraw),
        },
    })
}

pub fn encode_images(count: usize, rows: usize, cols: usize, pixels: &[u8]) -> Vec<u8> {
    let mut out = Vec::with_capacity(16 + pixels.len());
    for v in [IMAGE_MAGIC, count as u32, rows as u32, cols as u32] {
        out.extend_from_slice(&v.to_be_bytes());
    }
    out.extend_from_slice(pixels);
    out
}

pub fn encode_labels(labels: &[u8]) -> Vec<u8> {
    let mut out = Vec::with_capacity(8 + labels.len());
    out.extend_from_slice(&LABEL_MAGIC.to_be_bytes());
    out.extend_from_slice(&(labels.len() as u32).to_be_bytes());
    out.extend_from_slice(labels);
    out
}

fn store(path: &Path, bytes: &[u8]) -> Result<()> {
    if path.extension().is_some_and(|e| e == "gz") {
        let mut enc = GzEncoder::new(fs::File::create(path)?, Compression::default());
        enc.write_all(bytes)?;
        enc.finish()?;
    } else {
        fs::write(path, bytes)?;
    }
    Ok(())
}

/// Write both files; a `.gz` extension selects gzip.
pub fn write_idx(ds: &IdxDataset, images_path: impl AsRef<Path>, labels_path: impl AsRef<Path>) -> Result<()> {
    store(images_path.as_ref(), &encode_images(ds.len(), ds.rows, ds.cols, &ds.images))?;
    store(labels_path.as_ref(), &encode_labels(&ds.labels))
}

/// Standard MNIST file names inside `dir`, gzipped or not.
pub fn read_mnist_dir(dir: impl AsRef<Path>, train: bool) -> Result<IdxDataset> {
    let dir = dir.as_ref();
    let stem = if train { "train" } else { "t10k" };
    let find = |kind: &str| -> Result<PathBuf> {
        let plain = dir.join(format!("{stem}-{kind}-ubyte"));
        let gz = dir.join(format!("{stem}-{kind}-ubyte.gz"));
        [plain, gz]
            .into_iter()
            .find(|p| p.exists())
            .ok_or_else(|| Error::Config(format!("no {stem}-{kind}-ubyte[.gz] in {}", dir.display())))
    };
    read_idx(find("images-idx3")?, find("labels-idx1")?)
}
