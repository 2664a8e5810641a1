use ndarray::{Array1, Array2, ArrayView2, Axis};

use crate::error::{Error, Result};

/// `K x n` real weights of a two-layer committee machine with +-1 inputs.
#[derive(Clone, Debug, PartialEq)]
pub struct CommitteeParams {
    pub j: Array2<f64>,
}

#[inline]
fn sign(x: f64) -> f64 {
    if x >= 0.0 {
        1.0
    } else {
        -1.0
    }
}

impl CommitteeParams {
    pub fn new(k: usize, n: usize, j: Vec<f64>) -> Result<Self> {
        if k == 0 || n == 0 {
            return Err(Error::InvalidParameter("K and n must be >= 1".into()));
        }
        let j = Array2::from_shape_vec((k, n), j)
            .map_err(|e| Error::InvalidInput(format!("weights do not fit K x n: {e}")))?;
        Self::from_array(j)
    }

    pub fn from_array(j: Array2<f64>) -> Result<Self> {
        if j.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("committee weights must be finite".into()));
        }
        Ok(CommitteeParams { j })
    }

    pub fn k(&self) -> usize {
        self.j.nrows()
    }

    pub fn n(&self) -> usize {
        self.j.ncols()
    }

    /// Hidden fields `F_k = sum_i x_i J_ki`.
    pub fn fields(&self, x: &[i8]) -> Vec<f64> {
        self.j
            .rows()
            .into_iter()
            .map(|row| row.iter().zip(x).map(|(&w, &xi)| w * xi as f64).sum())
            .collect()
    }

    /// `sign(sum_k sign(F_k))` with `sign(0) = +1` at both stages.
    pub fn forward_hard(&self, x: &[i8]) -> i8 {
        let vote: f64 = self.fields(x).into_iter().map(sign).sum();
        sign(vote) as i8
    }

    /// `tanh(beta sum_k tanh(beta F_k) / sqrt K)`.
    pub fn forward_soft(&self, x: &[i8], beta: f64) -> f64 {
        soft_output(&self.fields(x), beta).tanh()
    }

    /// Fraction of misclassified rows of `x` (`P x n`, +-1 entries).
    pub fn hard_error(&self, x: &ArrayView2<f64>, y: &[i8]) -> f64 {
        if y.is_empty() {
            return 0.0;
        }
        let f = x.dot(&self.j.t());
        let wrong = f
            .axis_iter(Axis(0))
            .zip(y)
            .filter(|(row, &label)| {
                let vote: f64 = row.iter().map(|&v| sign(v)).sum();
                sign(vote) as i8 != label
            })
            .count();
        wrong as f64 / y.len() as f64
    }
}

/// Pre-tanh output `z = beta sum_k tanh(beta F_k) / sqrt K`.
pub(crate) fn soft_output(fields: &[f64], beta: f64) -> f64 {
    let k = fields.len() as f64;
    beta * fields.iter().map(|f| (beta * f).tanh()).sum::<f64>() / k.sqrt()
}

/// `ln(1 + e^x)` without overflow.
#[inline]
pub(crate) fn softplus(x: f64) -> f64 {
    if x > 30.0 {
        x + (-x).exp()
    } else {
        x.exp().ln_1p()
    }
}

#[inline]
fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Cross-entropy of `(1 + s y) / 2` for `s = tanh(z)`, i.e. `softplus(-2 y z)`.
pub fn example_loss(z: f64, y: f64) -> f64 {
    softplus(-2.0 * y * z)
}

/// Mean surrogate loss over the batch and its gradient w.r.t. the hidden fields.
///
/// `fields` is `B x K`; returns `(mean loss, dL/dF)` with the `1/B` included.
pub fn loss_and_field_grad(fields: &Array2<f64>, y: &[f64], beta: f64) -> (f64, Array2<f64>) {
    let (b, k) = fields.dim();
    let root_k = (k as f64).sqrt();
    let mut grad = Array2::zeros((b, k));
    let mut total = 0.0;
    for (mu, (row, mut g)) in fields.axis_iter(Axis(0)).zip(grad.axis_iter_mut(Axis(0))).enumerate() {
        let t: Array1<f64> = row.mapv(|f| (beta * f).tanh());
        let z = beta * t.sum() / root_k;
        let yz = y[mu] * z;
        total += softplus(-2.0 * yz);
        // dL/dz = -2 y sigma(-2 y z)
        let dz = -2.0 * y[mu] * sigmoid(-2.0 * yz) / b as f64;
        let c = dz * beta * beta / root_k;
        for (gk, tk) in g.iter_mut().zip(t.iter()) {
            *gk = c * (1.0 - tk * tk);
        }
    }
    (total / b as f64, grad)
}

/// Mean surrogate loss of weights `w` on `(x, y)` and its gradient `dL/dw`.
pub fn loss_and_grad(w: &Array2<f64>, x: &ArrayView2<f64>, y: &[f64], beta: f64) -> (f64, Array2<f64>) {
    let fields = x.dot(&w.t());
    let (loss, df) = loss_and_field_grad(&fields, y, beta);
    (loss, df.t().dot(x))
}
