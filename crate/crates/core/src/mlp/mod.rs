//! Replicated MLP trained with the block-message approximation: per-cover
//! block contributions mixed across covers by cached mixers, hand-written
//! backward pass, SGD with (Nesterov) momentum, collapsed readout.

mod arch;
pub mod checkpoint;
mod lifted;
mod mixers;

use std::time::Instant;

use ndarray::{s, Array2, Axis};
use rand::seq::SliceRandom;

pub use arch::{collapse_mlp, partition, MlpArchitecture, MlpParams};
pub use lifted::{single_loss, CoverGrads, CoverLoss, FlopCount, ForwardTape, MlpCoverEnsemble};
pub use mixers::{build_mixers, MixerMode, MixerSet};

use crate::data::IdxDataset;
use crate::error::{Error, Result};
use crate::par::Execution;
use crate::routing::kernel_from_spec;
use crate::seed::{self, stream};

/// `v <- momentum v - lr g`, then `w <- w + v` or, with Nesterov,
/// `w <- w + momentum v - lr g`.
pub fn sgd_momentum_step(
    params: &mut MlpParams,
    velocity: &mut MlpParams,
    grads: &MlpParams,
    lr: f64,
    momentum: f64,
    nesterov: bool,
) {
    for ((w, v), &g) in params.params_mut().zip(velocity.params_mut()).zip(grads.params()) {
        *v = momentum * *v - lr * g;
        if nesterov {
            *w += momentum * *v - lr * g;
        } else {
            *w += *v;
        }
    }
}

/// Dense inputs with integer class labels.
#[derive(Clone, Debug)]
pub struct MlpData {
    pub x: Array2<f64>,
    pub y: Vec<usize>,
}

impl MlpData {
    pub fn from_idx(ds: &IdxDataset) -> Self {
        MlpData {
            x: crate::data::normalize_mnist(ds),
            y: ds.labels.iter().map(|&l| l as usize).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MlpConfig {
    pub dims: Vec<usize>,
    /// blocks per layer; `None` uses 16 on the input layer and 8 elsewhere
    pub blocks: Option<Vec<usize>>,
    pub m: usize,
    pub kernel: String,
    pub mu: f64,
    pub sigma: f64,
    pub s_perm: usize,
    pub mode: MixerMode,
    pub shared_mixers: bool,
    pub cover_loss: CoverLoss,
    pub lr: f64,
    pub momentum: f64,
    pub nesterov: bool,
    pub batch: usize,
    pub epochs: usize,
    pub init_noise: f64,
    pub eval_batch: usize,
}

impl Default for MlpConfig {
    fn default() -> Self {
        MlpConfig {
            dims: vec![784, 512, 512, 10],
            blocks: None,
            m: 5,
            kernel: "ring".into(),
            mu: 1.0,
            sigma: 1.0,
            s_perm: 10,
            mode: MixerMode::Empirical,
            shared_mixers: false,
            cover_loss: CoverLoss::Sum,
            lr: 0.05,
            momentum: 0.9,
            nesterov: true,
            batch: 256,
            epochs: 40,
            init_noise: 0.01,
            eval_batch: 4096,
        }
    }
}

impl MlpConfig {
    pub fn architecture(&self) -> Result<MlpArchitecture> {
        match &self.blocks {
            Some(g) => MlpArchitecture::new(self.dims.clone(), g),
            None => MlpArchitecture::with_default_blocks(self.dims.clone()),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MlpEpoch {
    pub epoch: usize,
    pub train_loss: f64,
    pub test_error: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MlpOutcome {
    pub test_error: f64,
    pub train_loss: f64,
    pub epochs: usize,
    pub diverged: bool,
    pub trace: Vec<MlpEpoch>,
    /// multiply-adds of one lifted forward pass over a full batch
    pub flops_per_batch: FlopCount,
    pub wall_ms: u128,
    pub collapsed: MlpParams,
    /// final per-cover parameters
    pub covers: Vec<MlpParams>,
}

/// Build the ensemble for `cfg` from `seed` (mixers from the routing stream,
/// parameters from the init stream).
pub fn build_ensemble(cfg: &MlpConfig, seed: u64) -> Result<MlpCoverEnsemble> {
    let arch = cfg.architecture()?;
    if cfg.m == 0 {
        return Err(Error::InvalidParameter("M must be >= 1".into()));
    }
    let kernel = kernel_from_spec(&cfg.kernel, cfg.m, cfg.mu, cfg.sigma)?;
    let mixers = build_mixers(&arch, &kernel, cfg.s_perm, cfg.mode, cfg.shared_mixers, &mut stream(seed, seed::ROUTING))?;
    Ok(MlpCoverEnsemble::shared_init(arch, mixers, cfg.init_noise, &mut stream(seed, seed::INIT))?.with_cover_loss(cfg.cover_loss))
}

/// Train for `cfg.epochs`, evaluating the collapsed network on `test` after
/// every epoch.
pub fn train_mlp(cfg: &MlpConfig, train: &MlpData, test: &MlpData, seed: u64, exec: Execution) -> Result<MlpOutcome> {
    if cfg.batch == 0 || !(cfg.lr > 0.0) || !(0.0..1.0).contains(&cfg.momentum) {
        return Err(Error::InvalidParameter("need batch >= 1, lr > 0, 0 <= momentum < 1".into()));
    }
    if train.is_empty() {
        return Err(Error::InvalidInput("empty training set".into()));
    }
    let start = Instant::now();
    let mut ens = build_ensemble(cfg, seed)?;
    let mut velocity = vec![MlpParams::zeros(ens.arch().dims()); ens.m()];
    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut order_rng = stream(seed, seed::ORDER);
    let mut trace = Vec::with_capacity(cfg.epochs);
    let mut diverged = false;
    let mut train_loss = f64::NAN;
    'epochs: for epoch in 0..cfg.epochs {
        order.shuffle(&mut order_rng);
        let mut total = 0.0;
        for chunk in order.chunks(cfg.batch) {
            let xb = train.x.select(Axis(0), chunk);
            let yb: Vec<usize> = chunk.iter().map(|&i| train.y[i]).collect();
            match ens.loss_and_grad(&xb.view(), &yb, exec) {
                Ok((loss, grads)) => {
                    total += loss * chunk.len() as f64;
                    for ((c, v), g) in ens.covers.iter_mut().zip(velocity.iter_mut()).zip(&grads) {
                        sgd_momentum_step(c, v, g, cfg.lr, cfg.momentum, cfg.nesterov);
                    }
                }
                Err(Error::Divergence(_)) => {
                    diverged = true;
                    break 'epochs;
                }
                Err(e) => return Err(e),
            }
        }
        // mean per-cover cross-entropy regardless of the objective's reduction
        train_loss = total / train.len() as f64;
        if cfg.cover_loss == CoverLoss::Sum {
            train_loss /= ens.m() as f64;
        }
        let test_error = ens.collapse().error_rate(&test.x.view(), &test.y, cfg.eval_batch);
        trace.push(MlpEpoch {
            epoch,
            train_loss,
            test_error,
        });
    }
    let collapsed = ens.collapse();
    let test_error = if diverged {
        f64::NAN
    } else {
        collapsed.error_rate(&test.x.view(), &test.y, cfg.eval_batch)
    };
    let rows = cfg.batch.min(train.len());
    Ok(MlpOutcome {
        test_error,
        train_loss,
        epochs: trace.len(),
        diverged,
        trace,
        flops_per_batch: FlopCount::predicted(ens.arch(), ens.m(), rows),
        wall_ms: start.elapsed().as_millis(),
        collapsed,
        covers: ens.covers,
    })
}

/// First `n` rows of a dataset.
pub fn head(data: &MlpData, n: usize) -> MlpData {
    let n = n.min(data.len());
    MlpData {
        x: data.x.slice(s![..n, ..]).to_owned(),
        y: data.y[..n].to_vec(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::routing::MixKernel;
    use ndarray::Array4;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_mixers(arch: &MlpArchitecture, m: usize, rng: &mut ChaCha8Rng) -> MixerSet {
        let layers = (0..arch.layers())
            .map(|l| {
                let mut q = Array4::from_shape_simple_fn((arch.blocks(l).len(), m, m, arch.d_out(l)), || rng.random_range(0.05..1.0));
                // normalise every destination row
                for g in 0..arch.blocks(l).len() {
                    for b in 0..m {
                        for r in 0..arch.d_out(l) {
                            let s: f64 = (0..m).map(|a| q[[g, b, a, r]]).sum();
                            for a in 0..m {
                                q[[g, b, a, r]] /= s;
                            }
                        }
                    }
                }
                q
            })
            .collect();
        MixerSet::from_layers(m, layers).unwrap()
    }

    fn random_ensemble(dims: Vec<usize>, groups: &[usize], m: usize, rng: &mut ChaCha8Rng) -> MlpCoverEnsemble {
        let arch = MlpArchitecture::new(dims, groups).unwrap();
        let mixers = random_mixers(&arch, m, rng);
        let covers = (0..m).map(|_| MlpParams::uniform_init(arch.dims(), rng)).collect();
        MlpCoverEnsemble::new(arch, covers, mixers).unwrap()
    }

    fn batch(b: usize, d: usize, classes: usize, rng: &mut ChaCha8Rng) -> (Array2<f64>, Vec<usize>) {
        (
            Array2::from_shape_simple_fn((b, d), || rng.random_range(-1.5..1.5)),
            (0..b).map(|_| rng.random_range(0..classes)).collect(),
        )
    }

    #[test]
    fn single_cover_is_the_plain_network() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let ens = random_ensemble(vec![5, 6, 4, 3], &[2, 3, 2], 1, &mut rng);
        let (x, y) = batch(7, 5, 3, &mut rng);
        let tape = ens.lifted_forward(&x.view(), Execution::Sequential).unwrap();
        let reference = ens.covers[0].forward(&x.view());
        assert!(tape.logits()[0].iter().zip(&reference).all(|(a, b)| (a - b).abs() < 1e-12));
        let (loss, _) = ens.lifted_backward(&tape, &y, Execution::Sequential).unwrap();
        assert!((loss - single_loss(&ens.covers[0], &x.view(), &y).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn identical_covers_give_identical_logits() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut ens = random_ensemble(vec![4, 5, 3], &[2, 1], 3, &mut rng);
        let c0 = ens.covers[0].clone();
        ens.covers.iter_mut().for_each(|c| *c = c0.clone());
        let (x, y) = batch(6, 4, 3, &mut rng);
        let tape = ens.lifted_forward(&x.view(), Execution::Parallel).unwrap();
        let reference = c0.forward(&x.view());
        for z in tape.logits() {
            assert!(z.iter().zip(&reference).all(|(a, b)| (a - b).abs() < 1e-12));
        }
        // doubly stochastic mixers keep the symmetry in the gradients too
        let arch = ens.arch().clone();
        let uni = MixerSet::constant(&arch, &[1.0 / 3.0; 9], 3);
        let sym = MlpCoverEnsemble::new(arch, ens.covers.clone(), uni).unwrap();
        let (_, g) = sym.loss_and_grad(&x.view(), &y, Execution::Sequential).unwrap();
        assert!(g[1].max_abs_diff(&g[0]) < 1e-14 && g[2].max_abs_diff(&g[0]) < 1e-14);
    }

    #[test]
    fn forward_matches_direct_formulas() {
        // 3-4-2, M=2, G=2
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let ens = random_ensemble(vec![3, 4, 2], &[2, 2], 2, &mut rng);
        let (x, _) = batch(3, 3, 2, &mut rng);
        let tape = ens.lifted_forward(&x.view(), Execution::Sequential).unwrap();
        let arch = ens.arch();
        let mut h: Vec<Array2<f64>> = vec![x.clone(); 2];
        for l in 0..2 {
            let mut next = Vec::new();
            for beta in 0..2 {
                let mut a = Array2::<f64>::zeros((3, arch.d_out(l)));
                for mu in 0..3 {
                    for r in 0..arch.d_out(l) {
                        let mut v = ens.covers[beta].biases[l][r];
                        for (g, &(lo, hi)) in arch.blocks(l).iter().enumerate() {
                            for alpha in 0..2 {
                                let c: f64 = (lo..hi).map(|i| ens.covers[alpha].weights[l][[r, i]] * h[alpha][[mu, i]]).sum();
                                v += ens.mixers().get(l, r, g, beta, alpha) * c;
                            }
                        }
                        a[[mu, r]] = v;
                    }
                }
                assert!(a.iter().zip(&tape.pre[l][beta]).all(|(p, q)| (p - q).abs() < 1e-12));
                next.push(if l == 0 { a.mapv(|v| v.max(0.0)) } else { a });
            }
            h = next;
        }
        assert!(ens.tape_identity_error(&tape) < 1e-12);
    }

    fn fd_check(ens: &MlpCoverEnsemble, x: &Array2<f64>, y: &[usize]) {
        let (_, grads) = ens.loss_and_grad(&x.view(), y, Execution::Sequential).unwrap();
        let h = 1e-5;
        let loss_of = |e: &MlpCoverEnsemble| e.loss_and_grad(&x.view(), y, Execution::Sequential).unwrap().0;
        for c in 0..ens.m() {
            let n = ens.covers[c].params().count();
            for idx in 0..n {
                let mut plus = ens.clone();
                *plus.covers[c].params_mut().nth(idx).unwrap() += h;
                let mut minus = ens.clone();
                *minus.covers[c].params_mut().nth(idx).unwrap() -= h;
                let fd = (loss_of(&plus) - loss_of(&minus)) / (2.0 * h);
                let an = *grads[c].params().nth(idx).unwrap();
                assert!(
                    (fd - an).abs() <= 1e-4 * fd.abs().max(an.abs()).max(1e-4),
                    "cover {c} param {idx}: fd {fd} vs {an}"
                );
            }
        }
    }

    #[test]
    fn backward_matches_finite_differences() {
        // 8-4-4-3, M=3, G=2
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let ens = random_ensemble(vec![8, 4, 4, 3], &[2, 2, 2], 3, &mut rng);
        let (x, y) = batch(5, 8, 3, &mut rng);
        fd_check(&ens, &x, &y);
    }

    #[test]
    fn mean_reduction_gradients_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let ens = random_ensemble(vec![5, 3, 3], &[1, 3], 2, &mut rng).with_cover_loss(CoverLoss::Mean);
        let (x, y) = batch(4, 5, 3, &mut rng);
        fd_check(&ens, &x, &y);
        let (lm, gm) = ens.loss_and_grad(&x.view(), &y, Execution::Sequential).unwrap();
        let sum = ens.clone().with_cover_loss(CoverLoss::Sum);
        let (ls, gs) = sum.loss_and_grad(&x.view(), &y, Execution::Sequential).unwrap();
        assert!((ls - 2.0 * lm).abs() < 1e-12);
        let mut halved = gs[1].clone();
        halved.params_mut().for_each(|v| *v *= 0.5);
        assert!(halved.max_abs_diff(&gm[1]) < 1e-14);
    }

    #[test]
    fn exact_mode_gradients_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let arch = MlpArchitecture::new(vec![4, 4, 2], &[4, 1]).unwrap();
        let k = MixKernel::gaussian_ring(2, 1.0, 0.7).unwrap();
        let mixers = build_mixers(&arch, &k, 5, MixerMode::Exact, false, &mut rng).unwrap();
        let ens = MlpCoverEnsemble::shared_init(arch, mixers, 0.3, &mut rng).unwrap();
        let (x, y) = batch(4, 4, 2, &mut rng);
        fd_check(&ens, &x, &y);
    }

    #[test]
    fn nesterov_two_step_recursion() {
        let dims = [1, 1];
        let mut p = MlpParams::zeros(&dims);
        let mut v = MlpParams::zeros(&dims);
        let mut g = MlpParams::zeros(&dims);
        g.weights[0][[0, 0]] = 1.0;
        sgd_momentum_step(&mut p, &mut v, &g, 0.05, 0.9, true);
        // v1 = -0.05, w1 = 0.9 v1 - 0.05 = -0.095
        assert!((p.weights[0][[0, 0]] + 0.095).abs() < 1e-15);
        sgd_momentum_step(&mut p, &mut v, &g, 0.05, 0.9, true);
        // v2 = 0.9 v1 - 0.05 = -0.095, w2 = w1 + 0.9 v2 - 0.05 = -0.2305
        assert!((v.weights[0][[0, 0]] + 0.095).abs() < 1e-15);
        assert!((p.weights[0][[0, 0]] + 0.2305).abs() < 1e-15);
    }

    #[test]
    fn momentum_edge_cases() {
        let dims = [2, 1];
        let mut p = MlpParams::zeros(&dims);
        let mut v = MlpParams::zeros(&dims);
        let mut g = MlpParams::zeros(&dims);
        g.weights[0][[0, 1]] = 2.0;
        sgd_momentum_step(&mut p, &mut v, &g, 0.1, 0.0, false);
        assert_eq!(p.weights[0][[0, 1]], -0.2);
        let zero = MlpParams::zeros(&dims);
        let mut v = MlpParams::zeros(&dims);
        v.weights[0][[0, 0]] = 1.0;
        for k in 1..=5 {
            sgd_momentum_step(&mut p, &mut v, &zero, 0.1, 0.9, true);
            assert!((v.weights[0][[0, 0]] - 0.9f64.powi(k)).abs() < 1e-15);
        }
    }

    #[test]
    fn flop_counter_matches_cost_model() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let ens = random_ensemble(vec![12, 8, 5], &[4, 2], 3, &mut rng);
        let (x, _) = batch(9, 12, 5, &mut rng);
        let tape = ens.lifted_forward(&x.view(), Execution::Sequential).unwrap();
        let f = FlopCount::predicted(ens.arch(), 3, 9);
        assert_eq!(tape.flops, f);
        // M B d_in d_out + M^2 B d_out G per layer
        assert_eq!(f.block, 3 * 9 * (12 * 8 + 8 * 5));
        assert_eq!(f.mix, 9 * 9 * (8 * 4 + 5 * 2));
    }

    #[test]
    fn identity_kernel_trains_independent_networks() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let arch = MlpArchitecture::new(vec![6, 5, 3], &[3, 5]).unwrap();
        let (x, y) = batch(10, 6, 3, &mut rng);
        let mixers = MixerSet::identity(&arch, 2);
        let mut ens = MlpCoverEnsemble::shared_init(arch.clone(), mixers, 0.1, &mut rng).unwrap();
        let mut singles: Vec<MlpCoverEnsemble> = ens
            .covers
            .iter()
            .map(|c| MlpCoverEnsemble::new(arch.clone(), vec![c.clone()], MixerSet::identity(&arch, 1)).unwrap())
            .collect();
        let mut vel = vec![MlpParams::zeros(arch.dims()); 2];
        let mut vel1 = vec![MlpParams::zeros(arch.dims()); 2];
        for _ in 0..20 {
            let (_, g) = ens.loss_and_grad(&x.view(), &y, Execution::Sequential).unwrap();
            for a in 0..2 {
                sgd_momentum_step(&mut ens.covers[a], &mut vel[a], &g[a], 0.05, 0.9, true);
                let (_, gs) = singles[a].loss_and_grad(&x.view(), &y, Execution::Sequential).unwrap();
                sgd_momentum_step(&mut singles[a].covers[0], &mut vel1[a], &gs[0], 0.05, 0.9, true);
                assert!(ens.covers[a].max_abs_diff(&singles[a].covers[0]) < 1e-12);
            }
        }
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let ens = random_ensemble(vec![4, 3, 2], &[2, 1], 2, &mut rng);
        assert!(ens.lifted_forward(&Array2::zeros((2, 5)).view(), Execution::Sequential).is_err());
    }
}
