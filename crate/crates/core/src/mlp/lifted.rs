use ndarray::{s, Array1, Array2, ArrayView2, Axis, Zip};
use rand::Rng;
use rand_distr::{Distribution, Normal};

use super::{collapse_mlp, MixerSet, MlpArchitecture, MlpParams};
use crate::error::{Error, Result};
use crate::par::{map_indexed, Execution};

/// Multiply-add counts of one lifted forward pass.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct FlopCount {
    /// within-cover block products, `M B d_in d_out` per layer
    pub block: u64,
    /// cross-cover mixing, `M^2 B d_out G` per layer
    pub mix: u64,
}

impl FlopCount {
    pub fn total(&self) -> u64 {
        self.block + self.mix
    }

    /// Closed-form count for a batch of `b` rows.
    pub fn predicted(arch: &MlpArchitecture, m: usize, b: usize) -> Self {
        let mut f = FlopCount::default();
        for l in 0..arch.layers() {
            let (din, dout, g) = (arch.d_in(l) as u64, arch.d_out(l) as u64, arch.blocks(l).len() as u64);
            f.block += m as u64 * b as u64 * din * dout;
            f.mix += (m * m) as u64 * b as u64 * dout * g;
        }
        f
    }
}

/// Everything the backward pass needs, per layer and cover.
#[derive(Clone, Debug)]
pub struct ForwardTape {
    /// input of layer `l` in cover `alpha`: `inputs[l][alpha]`, `B x d_in`
    pub inputs: Vec<Vec<Array2<f64>>>,
    /// block messages `blocks[l][alpha][g]`, `B x d_out`
    pub blocks: Vec<Vec<Vec<Array2<f64>>>>,
    /// mixed preactivations `pre[l][beta]`, `B x d_out`
    pub pre: Vec<Vec<Array2<f64>>>,
    pub flops: FlopCount,
}

impl ForwardTape {
    pub fn logits(&self) -> &[Array2<f64>] {
        self.pre.last().expect("at least one layer")
    }
}

/// How per-cover cross-entropies combine into the training objective.
///
/// `Sum` gives every cover the full gradient of its own batch-mean loss, so an
/// identity kernel trains `M` independent networks at the base learning rate;
/// `Mean` divides the objective (and so the step) by `M`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum CoverLoss {
    #[default]
    Sum,
    Mean,
}

impl std::fmt::Display for CoverLoss {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            CoverLoss::Sum => "sum",
            CoverLoss::Mean => "mean",
        })
    }
}

impl std::str::FromStr for CoverLoss {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sum" => Ok(CoverLoss::Sum),
            "mean" => Ok(CoverLoss::Mean),
            _ => Err(Error::Config(format!("unknown cover loss '{s}' (sum|mean)"))),
        }
    }
}

/// Per-cover gradients, same shapes as the parameters.
pub type CoverGrads = Vec<MlpParams>;

/// `M` replicas of an MLP coupled through cached block mixers.
#[derive(Clone, Debug)]
pub struct MlpCoverEnsemble {
    arch: MlpArchitecture,
    pub covers: Vec<MlpParams>,
    mixers: MixerSet,
    cover_loss: CoverLoss,
}

impl MlpCoverEnsemble {
    pub fn new(arch: MlpArchitecture, covers: Vec<MlpParams>, mixers: MixerSet) -> Result<Self> {
        if covers.is_empty() || covers.len() != mixers.m() {
            return Err(Error::InvalidInput(format!(
                "{} covers for {}-cover mixers",
                covers.len(),
                mixers.m()
            )));
        }
        if covers.iter().any(|c| c.dims() != arch.dims()) {
            return Err(Error::InvalidInput("cover shapes disagree with the architecture".into()));
        }
        Ok(MlpCoverEnsemble {
            arch,
            covers,
            mixers,
            cover_loss: CoverLoss::default(),
        })
    }

    /// One shared draw plus independent `N(0, noise^2)` per cover and entry.
    pub fn shared_init<R: Rng + ?Sized>(
        arch: MlpArchitecture,
        mixers: MixerSet,
        noise: f64,
        rng: &mut R,
    ) -> Result<Self> {
        let base = MlpParams::uniform_init(arch.dims(), rng);
        let normal = Normal::new(0.0, noise).map_err(|e| Error::InvalidParameter(format!("init noise: {e}")))?;
        let covers = (0..mixers.m())
            .map(|_| {
                let mut c = base.clone();
                if noise > 0.0 {
                    c.params_mut().for_each(|v| *v += normal.sample(rng));
                }
                c
            })
            .collect();
        Self::new(arch, covers, mixers)
    }

    pub fn with_cover_loss(mut self, cover_loss: CoverLoss) -> Self {
        self.cover_loss = cover_loss;
        self
    }

    pub fn cover_loss(&self) -> CoverLoss {
        self.cover_loss
    }

    pub fn m(&self) -> usize {
        self.covers.len()
    }

    pub fn arch(&self) -> &MlpArchitecture {
        &self.arch
    }

    pub fn mixers(&self) -> &MixerSet {
        &self.mixers
    }

    pub fn collapse(&self) -> MlpParams {
        collapse_mlp(&self.covers)
    }

    /// Per-cover logits and the tape. The input batch is broadcast to every
    /// cover; block messages are formed inside each cover, then mixed into
    /// each destination cover's preactivation and offset by its bias.
    pub fn lifted_forward(&self, x: &ArrayView2<f64>, exec: Execution) -> Result<ForwardTape> {
        if x.ncols() != self.arch.d_in(0) {
            return Err(Error::InvalidInput(format!(
                "input width {} but the network expects {}",
                x.ncols(),
                self.arch.d_in(0)
            )));
        }
        let m = self.m();
        let b = x.nrows();
        let layers = self.arch.layers();
        let mut tape = ForwardTape {
            inputs: Vec::with_capacity(layers),
            blocks: Vec::with_capacity(layers),
            pre: Vec::with_capacity(layers),
            flops: FlopCount::default(),
        };
        let mut h: Vec<Array2<f64>> = vec![x.to_owned(); m];
        for l in 0..layers {
            let blocks = self.arch.blocks(l);
            let d_out = self.arch.d_out(l);
            let c: Vec<Vec<Array2<f64>>> = map_indexed(exec, m, |a| {
                let w = &self.covers[a].weights[l];
                blocks
                    .iter()
                    .map(|&(lo, hi)| h[a].slice(s![.., lo..hi]).dot(&w.slice(s![.., lo..hi]).t()))
                    .collect()
            });
            let pre: Vec<Array2<f64>> = map_indexed(exec, m, |beta| {
                let mut a = Array2::zeros((b, d_out));
                for g in 0..blocks.len() {
                    for (alpha, c_alpha) in c.iter().enumerate() {
                        let coef = self.mixers.coefficients(l, g, beta, alpha);
                        Zip::from(a.rows_mut()).and(c_alpha[g].rows()).for_each(|mut ar, cr| {
                            Zip::from(&mut ar).and(&cr).and(&coef).for_each(|x, &cv, &q| *x += q * cv);
                        });
                    }
                }
                a += &self.covers[beta].biases[l];
                a
            });
            tape.flops.block += (m * b * self.arch.d_in(l) * d_out) as u64;
            tape.flops.mix += (m * m * b * d_out * blocks.len()) as u64;
            let next: Vec<Array2<f64>> = if l + 1 < layers {
                pre.iter().map(|a| a.mapv(|v| v.max(0.0))).collect()
            } else {
                Vec::new()
            };
            tape.inputs.push(std::mem::replace(&mut h, next));
            tape.blocks.push(c);
            tape.pre.push(pre);
        }
        if cfg!(debug_assertions) {
            let dev = self.tape_identity_error(&tape);
            debug_assert!(dev < 1e-10, "preactivation identity violated by {dev}");
        }
        Ok(tape)
    }

    /// Largest entrywise deviation from `a = sum_g sum_alpha Q C + b`,
    /// recomputed naively.
    pub fn tape_identity_error(&self, tape: &ForwardTape) -> f64 {
        let m = self.m();
        let mut worst: f64 = 0.0;
        for l in 0..self.arch.layers() {
            let gs = self.arch.blocks(l).len();
            for beta in 0..m {
                for ((mu, r), &a) in tape.pre[l][beta].indexed_iter() {
                    let mut v = self.covers[beta].biases[l][r];
                    for g in 0..gs {
                        for alpha in 0..m {
                            v += self.mixers.get(l, r, g, beta, alpha) * tape.blocks[l][alpha][g][[mu, r]];
                        }
                    }
                    worst = worst.max((v - a).abs());
                }
            }
        }
        worst
    }

    /// Mean cross-entropy over covers and batch, and its gradient for every
    /// cover copy. Block-message errors are carried back through the
    /// transposed mixers: `dC^(alpha) = sum_beta Q_{beta alpha} dA^(beta)`.
    pub fn lifted_backward(&self, tape: &ForwardTape, labels: &[usize], exec: Execution) -> Result<(f64, CoverGrads)> {
        let m = self.m();
        let logits = tape.logits();
        let b = logits[0].nrows();
        if labels.len() != b {
            return Err(Error::InvalidInput(format!("{} labels for a batch of {b}", labels.len())));
        }
        let scale = match self.cover_loss {
            CoverLoss::Sum => 1.0 / b as f64,
            CoverLoss::Mean => 1.0 / (m * b) as f64,
        };
        let mut loss = 0.0;
        let mut d_pre: Vec<Array2<f64>> = Vec::with_capacity(m);
        for z in logits {
            let (l, g) = cross_entropy(z, labels, scale)?;
            loss += l * scale;
            d_pre.push(g);
        }
        if !loss.is_finite() {
            return Err(Error::Divergence(format!("non-finite loss {loss}")));
        }
        let mut grads: CoverGrads = vec![MlpParams::zeros(self.arch.dims()); m];
        for l in (0..self.arch.layers()).rev() {
            let blocks = self.arch.blocks(l);
            for (beta, d) in d_pre.iter().enumerate() {
                grads[beta].biases[l] = d.sum_axis(Axis(0));
            }
            let per_cover: Vec<(Array2<f64>, Array2<f64>)> = map_indexed(exec, m, |alpha| {
                let w = &self.covers[alpha].weights[l];
                let h = &tape.inputs[l][alpha];
                let mut dw = Array2::zeros(w.dim());
                let mut dh = Array2::zeros(h.dim());
                for (g, &(lo, hi)) in blocks.iter().enumerate() {
                    let mut dc = Array2::zeros(d_pre[0].dim());
                    for (beta, d) in d_pre.iter().enumerate() {
                        let coef = self.mixers.coefficients(l, g, beta, alpha);
                        Zip::from(dc.rows_mut()).and(d.rows()).for_each(|mut cr, dr| {
                            Zip::from(&mut cr).and(&dr).and(&coef).for_each(|x, &dv, &q| *x += q * dv);
                        });
                    }
                    dw.slice_mut(s![.., lo..hi]).assign(&dc.t().dot(&h.slice(s![.., lo..hi])));
                    dh.slice_mut(s![.., lo..hi]).assign(&dc.dot(&w.slice(s![.., lo..hi])));
                }
                (dw, dh)
            });
            let mut next = Vec::with_capacity(m);
            for (alpha, (dw, dh)) in per_cover.into_iter().enumerate() {
                grads[alpha].weights[l] = dw;
                if l > 0 {
                    let mut dh = dh;
                    Zip::from(&mut dh).and(&tape.pre[l - 1][alpha]).for_each(|g, &a| {
                        if a <= 0.0 {
                            *g = 0.0;
                        }
                    });
                    next.push(dh);
                }
            }
            d_pre = next;
        }
        if grads.iter().any(|g| g.params().any(|v| !v.is_finite())) {
            return Err(Error::Divergence("non-finite gradient".into()));
        }
        Ok((loss, grads))
    }

    /// Forward and backward in one call.
    pub fn loss_and_grad(&self, x: &ArrayView2<f64>, labels: &[usize], exec: Execution) -> Result<(f64, CoverGrads)> {
        let tape = self.lifted_forward(x, exec)?;
        self.lifted_backward(&tape, labels, exec)
    }
}

/// Summed cross-entropy of the rows of `z` and `scale * (softmax - onehot)`.
fn cross_entropy(z: &Array2<f64>, labels: &[usize], scale: f64) -> Result<(f64, Array2<f64>)> {
    let mut grad = Array2::zeros(z.dim());
    let mut total = 0.0;
    for ((row, mut g), &y) in z.axis_iter(Axis(0)).zip(grad.axis_iter_mut(Axis(0))).zip(labels) {
        if y >= row.len() {
            return Err(Error::InvalidInput(format!("label {y} outside {} classes", row.len())));
        }
        let max = row.fold(f64::NEG_INFINITY, |a, &b| a.max(b));
        let e: Array1<f64> = row.mapv(|v| (v - max).exp());
        let sum = e.sum();
        total += sum.ln() + max - row[y];
        for (k, (gk, ek)) in g.iter_mut().zip(e.iter()).enumerate() {
            *gk = scale * (ek / sum - (k == y) as u8 as f64);
        }
    }
    Ok((total, grad))
}

/// Mean cross-entropy of a single network (reference for the `M = 1` case).
pub fn single_loss(p: &MlpParams, x: &ArrayView2<f64>, labels: &[usize]) -> Result<f64> {
    let z = p.forward(x);
    Ok(cross_entropy(&z, labels, 1.0)?.0 / labels.len() as f64)
}
