use ndarray::{s, Array1, Array2, ArrayView2, Axis};
use rand::Rng;

use crate::error::{Error, Result};

/// Layer widths plus, for every layer, a contiguous partition of its inputs
/// into blocks.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MlpArchitecture {
    dims: Vec<usize>,
    blocks: Vec<Vec<(usize, usize)>>,
}

/// `d` coordinates in `g` contiguous blocks whose sizes differ by at most one.
pub fn partition(d: usize, g: usize) -> Result<Vec<(usize, usize)>> {
    if g == 0 || g > d {
        return Err(Error::InvalidParameter(format!("cannot split {d} inputs into {g} blocks")));
    }
    let (base, extra) = (d / g, d % g);
    let mut out = Vec::with_capacity(g);
    let mut start = 0;
    for i in 0..g {
        let len = base + (i < extra) as usize;
        out.push((start, start + len));
        start += len;
    }
    Ok(out)
}

impl MlpArchitecture {
    pub fn new(dims: Vec<usize>, groups: &[usize]) -> Result<Self> {
        if dims.len() < 2 || dims.contains(&0) {
            return Err(Error::InvalidParameter(format!("bad layer dims {dims:?}")));
        }
        if groups.len() != dims.len() - 1 {
            return Err(Error::InvalidParameter(format!(
                "{} block counts for {} layers",
                groups.len(),
                dims.len() - 1
            )));
        }
        let blocks = groups
            .iter()
            .enumerate()
            .map(|(l, &g)| partition(dims[l], g))
            .collect::<Result<_>>()?;
        Ok(MlpArchitecture { dims, blocks })
    }

    /// 16 blocks on the input layer, 8 on the others, capped by the width.
    pub fn with_default_blocks(dims: Vec<usize>) -> Result<Self> {
        let groups: Vec<usize> = (0..dims.len().saturating_sub(1))
            .map(|l| (if l == 0 { 16 } else { 8 }).min(dims[l]))
            .collect();
        Self::new(dims, &groups)
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn layers(&self) -> usize {
        self.dims.len() - 1
    }

    pub fn d_in(&self, l: usize) -> usize {
        self.dims[l]
    }

    pub fn d_out(&self, l: usize) -> usize {
        self.dims[l + 1]
    }

    pub fn blocks(&self, l: usize) -> &[(usize, usize)] {
        &self.blocks[l]
    }

    pub fn groups(&self) -> Vec<usize> {
        self.blocks.iter().map(Vec::len).collect()
    }

    /// Trainable parameters of one network.
    pub fn param_count(&self) -> usize {
        (0..self.layers()).map(|l| (self.d_in(l) + 1) * self.d_out(l)).sum()
    }
}

/// Weights (`d_out x d_in`) and biases of one network.
#[derive(Clone, Debug, PartialEq)]
pub struct MlpParams {
    pub weights: Vec<Array2<f64>>,
    pub biases: Vec<Array1<f64>>,
}

impl MlpParams {
    pub fn zeros(dims: &[usize]) -> Self {
        MlpParams {
            weights: dims.windows(2).map(|w| Array2::zeros((w[1], w[0]))).collect(),
            biases: dims.windows(2).map(|w| Array1::zeros(w[1])).collect(),
        }
    }

    /// `U(-1/sqrt(fan_in), 1/sqrt(fan_in))` for weights and biases.
    pub fn uniform_init<R: Rng + ?Sized>(dims: &[usize], rng: &mut R) -> Self {
        let mut p = Self::zeros(dims);
        for (w, b) in p.weights.iter_mut().zip(p.biases.iter_mut()) {
            let bound = 1.0 / (w.ncols() as f64).sqrt();
            w.mapv_inplace(|_| rng.random_range(-bound..bound));
            b.mapv_inplace(|_| rng.random_range(-bound..bound));
        }
        p
    }

    pub fn dims(&self) -> Vec<usize> {
        let mut d = vec![self.weights[0].ncols()];
        d.extend(self.weights.iter().map(|w| w.nrows()));
        d
    }

    /// Plain forward pass: rectifier on hidden layers, identity on the output.
    pub fn forward(&self, x: &ArrayView2<f64>) -> Array2<f64> {
        let last = self.weights.len() - 1;
        let mut h = x.to_owned();
        for (l, (w, b)) in self.weights.iter().zip(&self.biases).enumerate() {
            h = h.dot(&w.t()) + b;
            if l < last {
                h.mapv_inplace(|v| v.max(0.0));
            }
        }
        h
    }

    /// Misclassification rate, evaluated in chunks of `eval_batch` rows.
    pub fn error_rate(&self, x: &ArrayView2<f64>, labels: &[usize], eval_batch: usize) -> f64 {
        let mut wrong = 0usize;
        let step = eval_batch.max(1);
        for start in (0..x.nrows()).step_by(step) {
            let end = (start + step).min(x.nrows());
            let logits = self.forward(&x.slice(s![start..end, ..]));
            for (row, &y) in logits.axis_iter(Axis(0)).zip(&labels[start..end]) {
                if argmax(row.iter().copied()) != y {
                    wrong += 1;
                }
            }
        }
        wrong as f64 / labels.len().max(1) as f64
    }

    pub fn max_abs_diff(&self, other: &MlpParams) -> f64 {
        let w = self.weights.iter().zip(&other.weights).flat_map(|(a, b)| a.iter().zip(b.iter()));
        let b = self.biases.iter().zip(&other.biases).flat_map(|(a, b)| a.iter().zip(b.iter()));
        w.chain(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
    }

    pub(crate) fn params_mut(&mut self) -> impl Iterator<Item = &mut f64> {
        self.weights
            .iter_mut()
            .flat_map(|w| w.iter_mut())
            .chain(self.biases.iter_mut().flat_map(|b| b.iter_mut()))
    }

    pub(crate) fn params(&self) -> impl Iterator<Item = &f64> {
        self.weights
            .iter()
            .flat_map(|w| w.iter())
            .chain(self.biases.iter().flat_map(|b| b.iter()))
    }
}

/// First index of the maximum (NaN never wins).
pub(crate) fn argmax(it: impl Iterator<Item = f64>) -> usize {
    let mut best = (0, f64::NEG_INFINITY);
    for (i, v) in it.enumerate() {
        if v > best.1 {
            best = (i, v);
        }
    }
    best.0
}

/// Entrywise mean over covers.
pub fn collapse_mlp(covers: &[MlpParams]) -> MlpParams {
    let m = covers.len() as f64;
    let mut out = MlpParams::zeros(&covers[0].dims());
    for c in covers {
        for (o, w) in out.weights.iter_mut().zip(&c.weights) {
            *o += w;
        }
        for (o, b) in out.biases.iter_mut().zip(&c.biases) {
            *o += b;
        }
    }
    out.weights.iter_mut().for_each(|w| *w /= m);
    out.biases.iter_mut().for_each(|b| *b /= m);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn partition_covers_exactly() {
        let p = partition(10, 3).unwrap();
        assert_eq!(p, vec![(0, 4), (4, 7), (7, 10)]);
        assert_eq!(partition(784, 16).unwrap().iter().map(|(a, b)| b - a).sum::<usize>(), 784);
        assert!(partition(3, 4).is_err());
        assert!(partition(3, 0).is_err());
    }

    #[test]
    fn default_architecture_size() {
        let a = MlpArchitecture::with_default_blocks(vec![784, 512, 512, 10]).unwrap();
        assert_eq!(a.param_count(), 669_706);
        assert_eq!(a.groups(), vec![16, 8, 8]);
    }

    #[test]
    fn collapse_cases() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let p = MlpParams::uniform_init(&[3, 4, 2], &mut rng);
        assert_eq!(collapse_mlp(&[p.clone(), p.clone()]), p);
        let mut neg = p.clone();
        neg.params_mut().for_each(|v| *v = -*v);
        assert!(collapse_mlp(&[p.clone(), neg]).params().all(|&v| v == 0.0));
        let covers: Vec<MlpParams> = (0..3).map(|_| MlpParams::uniform_init(&[3, 4, 2], &mut rng)).collect();
        let c = collapse_mlp(&covers);
        for l in 0..2 {
            for ((r, i), v) in c.weights[l].indexed_iter() {
                let direct = (covers[0].weights[l][[r, i]] + covers[1].weights[l][[r, i]] + covers[2].weights[l][[r, i]]) / 3.0;
                assert!((v - direct).abs() < 1e-15);
            }
        }
    }
}
