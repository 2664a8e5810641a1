//! Dataset ingestion and preprocessing shared by the models.

mod idx;

pub use idx::{
    encode_images, encode_labels, parse_images, parse_labels, read_idx, read_mnist_dir, sha256_hex,
    write_idx, IdxDataset, Provenance, IMAGE_MAGIC, LABEL_MAGIC,
};

use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::Rng;

use crate::committee::CommitteeParams;
use crate::error::{Error, Result};

/// Environment variable naming the dataset root directory.
pub const DATA_ROOT_ENV: &str = "MCOVER_DATA";

pub const MNIST_MEAN: f64 = 0.1307;
pub const MNIST_STD: f64 = 0.3081;

#[inline]
pub fn normalize_pixel(p: u8) -> f64 {
    (p as f64 / 255.0 - MNIST_MEAN) / MNIST_STD
}

/// `(x / 255 - mean) / std`, one flattened row per image.
pub fn normalize_mnist(ds: &IdxDataset) -> Array2<f64> {
    let d = ds.pixels_per_image();
    Array2::from_shape_fn((ds.len(), d), |(i, j)| normalize_pixel(ds.images[i * d + j]))
}

/// +-1 inputs with +-1 labels.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BinaryTwoClassSet {
    pub n: usize,
    /// row-major `P x n`
    pub inputs: Vec<i8>,
    pub labels: Vec<i8>,
    /// source classes mapped to +1 and -1 respectively
    pub class_pair: (u8, u8),
}

impl BinaryTwoClassSet {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn input(&self, mu: usize) -> &[i8] {
        &self.inputs[mu * self.n..(mu + 1) * self.n]
    }

    /// Inputs as a dense `P x n` float matrix.
    pub fn input_matrix(&self) -> Array2<f64> {
        Array2::from_shape_fn((self.len(), self.n), |(i, j)| self.inputs[i * self.n + j] as f64)
    }
}

/// Keep classes `a` (label +1) and `b` (label -1), threshold pixels at
/// `threshold * 255`, and draw a class-balanced subsample of `p` examples
/// (all available examples, balanced, when `p` is `None`).
pub fn binarize_two_class<R: Rng + ?Sized>(
    ds: &IdxDataset,
    a: u8,
    b: u8,
    threshold: f64,
    p: Option<usize>,
    rng: &mut R,
) -> Result<BinaryTwoClassSet> {
    if a == b {
        return Err(Error::InvalidParameter("class_a and class_b must differ".into()));
    }
    let mut idx_a: Vec<usize> = (0..ds.len()).filter(|&i| ds.labels[i] == a).collect();
    let mut idx_b: Vec<usize> = (0..ds.len()).filter(|&i| ds.labels[i] == b).collect();
    let p = p.unwrap_or(2 * idx_a.len().min(idx_b.len()));
    let (na, nb) = (p - p / 2, p / 2);
    if na > idx_a.len() || nb > idx_b.len() {
        return Err(Error::Size {
            requested: p,
            available: 2 * idx_a.len().min(idx_b.len()) + (idx_a.len() != idx_b.len()) as usize,
        });
    }
    idx_a.shuffle(rng);
    idx_b.shuffle(rng);
    let mut chosen: Vec<(usize, i8)> = idx_a[..na]
        .iter()
        .map(|&i| (i, 1))
        .chain(idx_b[..nb].iter().map(|&i| (i, -1)))
        .collect();
    chosen.shuffle(rng);
    let cut = threshold * 255.0;
    let n = ds.pixels_per_image();
    let mut inputs = Vec::with_capacity(p * n);
    for &(i, _) in &chosen {
        inputs.extend(ds.image(i).iter().map(|&px| if px as f64 > cut { 1i8 } else { -1 }));
    }
    Ok(BinaryTwoClassSet {
        n,
        inputs,
        labels: chosen.iter().map(|&(_, y)| y).collect(),
        class_pair: (a, b),
    })
}

/// Random +-1 committee teacher labelling random +-1 inputs.
#[derive(Clone, Debug)]
pub struct SyntheticCommittee {
    pub teacher: CommitteeParams,
    pub train: BinaryTwoClassSet,
    pub test: BinaryTwoClassSet,
}

pub fn synthetic_committee_teacher<R: Rng + ?Sized>(
    n: usize,
    k: usize,
    p_train: usize,
    p_test: usize,
    rng: &mut R,
) -> Result<SyntheticCommittee> {
    if k % 2 == 0 {
        return Err(Error::InvalidParameter(format!("K must be odd, got {k}")));
    }
    let j: Vec<f64> = (0..k * n).map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 }).collect();
    let teacher = CommitteeParams::new(k, n, j)?;
    let mut draw = |p: usize| {
        let inputs: Vec<i8> = (0..p * n).map(|_| if rng.random::<bool>() { 1 } else { -1 }).collect();
        let labels = inputs.chunks_exact(n).map(|x| teacher.forward_hard(x)).collect();
        BinaryTwoClassSet {
            n,
            inputs,
            labels,
            class_pair: (1, 0),
        }
    };
    let train = draw(p_train);
    let test = draw(p_test);
    Ok(SyntheticCommittee { teacher, train, test })
}
