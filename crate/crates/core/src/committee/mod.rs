//! Committee machine with routed hidden fields, trained by SGD on an annealed
//! double-tanh surrogate; vanilla SGD and replicated SGD baselines.

mod model;

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use ndarray::{Array2, ArrayView2, Axis, Zip};
use rand::seq::SliceRandom;
use rand_distr::{Distribution, Normal};

pub use model::{example_loss, loss_and_field_grad, loss_and_grad, CommitteeParams};

use crate::data::BinaryTwoClassSet;
use crate::error::{Error, Result};
use crate::par::{map_indexed, Execution};
use crate::routing::{kernel_from_spec, DestinationBank, PermutationBank};
use crate::seed::{self, stream};

/// `M` committee copies plus the destination bank routing their synapses.
#[derive(Clone, Debug)]
pub struct CommitteeCoverEnsemble {
    covers: Vec<Array2<f64>>,
    dest: DestinationBank,
}

impl CommitteeCoverEnsemble {
    pub fn new(covers: Vec<Array2<f64>>, dest: DestinationBank) -> Result<Self> {
        let shape = covers.first().map(|c| c.dim()).ok_or_else(|| Error::InvalidInput("no covers".into()))?;
        if covers.iter().any(|c| c.dim() != shape) {
            return Err(Error::InvalidInput("covers differ in shape".into()));
        }
        if dest.m() != covers.len() || dest.sites() != shape.0 * shape.1 {
            return Err(Error::InvalidInput(format!(
                "destination bank is for M={} over {} synapses; ensemble has M={} and K*n={}",
                dest.m(),
                dest.sites(),
                covers.len(),
                shape.0 * shape.1
            )));
        }
        Ok(CommitteeCoverEnsemble { covers, dest })
    }

    pub fn m(&self) -> usize {
        self.covers.len()
    }

    pub fn covers(&self) -> &[Array2<f64>] {
        &self.covers
    }

    pub fn dest(&self) -> &DestinationBank {
        &self.dest
    }

    /// Weights seen by channel `s` evaluated for cover `alpha`: synapse `q`
    /// is read from cover `rho_{q -> p_s}(alpha)`.
    pub fn routed_weights(&self, s: usize, alpha: usize) -> Array2<f64> {
        let (k, n) = self.covers[0].dim();
        let mut w = Array2::zeros((k, n));
        for (q, slot) in w.iter_mut().enumerate() {
            let src = self.dest.route(q, s, alpha);
            *slot = self.covers[src].as_slice().expect("standard layout")[q];
        }
        w
    }

    /// `F_{mu k -> p_s}^(alpha)` as one `B x K` matrix per `(s, alpha)`,
    /// indexed `s * M + alpha`.
    pub fn routed_hidden_fields(&self, x: &ArrayView2<f64>) -> Vec<Array2<f64>> {
        let m = self.m();
        (0..self.dest.channels() * m)
            .map(|idx| x.dot(&self.routed_weights(idx / m, idx % m).t()))
            .collect()
    }

    /// Lifted loss `(1/S) sum_s sum_alpha L(s, alpha)` and its gradient with
    /// respect to every cover copy. The gradient of routed synapse `q` in
    /// `(s, alpha)` lands on the cover that supplied it.
    pub fn lifted_loss_and_grad(
        &self,
        x: &ArrayView2<f64>,
        y: &[f64],
        beta: f64,
        exec: Execution,
    ) -> (f64, Vec<Array2<f64>>) {
        let m = self.m();
        let channels = self.dest.channels();
        let parts = map_indexed(exec, channels * m, |idx| {
            loss_and_grad(&self.routed_weights(idx / m, idx % m), x, y, beta)
        });
        let inv_s = 1.0 / channels as f64;
        let mut grads = vec![Array2::zeros(self.covers[0].dim()); m];
        let mut loss = 0.0;
        for (idx, (l, g)) in parts.into_iter().enumerate() {
            let (s, alpha) = (idx / m, idx % m);
            loss += l * inv_s;
            for (q, &gq) in g.iter().enumerate() {
                let dst = self.dest.route(q, s, alpha);
                grads[dst].as_slice_mut().expect("standard layout")[q] += gq * inv_s;
            }
        }
        (loss, grads)
    }

    /// Cover average.
    pub fn collapse(&self) -> CommitteeParams {
        CommitteeParams { j: mean_of(&self.covers) }
    }
}

fn mean_of(ws: &[Array2<f64>]) -> Array2<f64> {
    let mut mean = Array2::zeros(ws[0].dim());
    for w in ws {
        mean += w;
    }
    mean / ws.len() as f64
}

fn check_finite(loss: f64, what: &str) -> Result<()> {
    if loss.is_finite() {
        Ok(())
    } else {
        Err(Error::Divergence(format!("{what}: non-finite loss {loss}")))
    }
}

/// One plain SGD step on a single committee; returns the batch loss.
pub fn sgd_step(w: &mut Array2<f64>, x: &ArrayView2<f64>, y: &[f64], beta: f64, lr: f64) -> Result<f64> {
    let (loss, g) = loss_and_grad(w, x, y, beta);
    check_finite(loss, "sgd")?;
    w.scaled_add(-lr, &g);
    Ok(loss)
}

/// One SGD step on every cover through the routed lifted loss. Returns the
/// lifted loss divided by `M` (a per-cover average comparable to [`sgd_step`]).
pub fn mcover_sgd_step(
    ens: &mut CommitteeCoverEnsemble,
    x: &ArrayView2<f64>,
    y: &[f64],
    beta: f64,
    lr: f64,
    exec: Execution,
) -> Result<f64> {
    let (loss, grads) = ens.lifted_loss_and_grad(x, y, beta, exec);
    check_finite(loss, "mcover sgd")?;
    for (w, g) in ens.covers.iter_mut().zip(&grads) {
        w.scaled_add(-lr, g);
    }
    Ok(loss / ens.m() as f64)
}

/// Replicated SGD: own gradient step plus `lr * coupling * (mean - w)`.
/// Returns the mean replica loss.
pub fn rsgd_step(
    replicas: &mut [Array2<f64>],
    x: &ArrayView2<f64>,
    y: &[f64],
    beta: f64,
    lr: f64,
    coupling: f64,
) -> Result<f64> {
    if replicas.len() < 2 {
        return Err(Error::InvalidParameter("rSGD needs M >= 2 replicas".into()));
    }
    let mean = mean_of(replicas);
    let mut total = 0.0;
    for w in replicas.iter_mut() {
        let (loss, g) = loss_and_grad(w, x, y, beta);
        check_finite(loss, "rsgd")?;
        total += loss;
        Zip::from(&mut *w).and(&g).and(&mean).for_each(|wi, &gi, &mi| {
            *wi += -lr * gi + lr * coupling * (mi - *wi);
        });
    }
    Ok(total / replicas.len() as f64)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CommitteeMethod {
    Sgd,
    Rsgd,
    Mcover,
}

impl fmt::Display for CommitteeMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CommitteeMethod::Sgd => "sgd",
            CommitteeMethod::Rsgd => "rsgd",
            CommitteeMethod::Mcover => "mcover",
        })
    }
}

impl FromStr for CommitteeMethod {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sgd" | "vanilla" => Ok(CommitteeMethod::Sgd),
            "rsgd" => Ok(CommitteeMethod::Rsgd),
            "mcover" => Ok(CommitteeMethod::Mcover),
            other => Err(Error::Config(format!("unknown committee method {other:?}"))),
        }
    }
}

/// Sharpness and learning-rate annealing, both multiplicative per epoch.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SurrogateSchedule {
    pub beta_0: f64,
    pub beta_growth: f64,
    pub lr_0: f64,
    pub lr_decay: f64,
    pub max_epochs: usize,
    pub loss_stop: f64,
    pub batch: usize,
}

impl Default for SurrogateSchedule {
    fn default() -> Self {
        SurrogateSchedule {
            beta_0: 1.0,
            beta_growth: 1.005,
            lr_0: 0.2,
            lr_decay: 1.0,
            max_epochs: 500,
            loss_stop: 1e-7,
            batch: 100,
        }
    }
}

impl SurrogateSchedule {
    pub fn validate(&self) -> Result<()> {
        if !(self.beta_0 > 0.0 && self.beta_growth >= 1.0 && self.lr_0 > 0.0 && self.lr_decay > 0.0 && self.batch > 0) {
            return Err(Error::InvalidParameter(format!("bad surrogate schedule {self:?}")));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CommitteeConfig {
    pub k: usize,
    pub m: usize,
    pub method: CommitteeMethod,
    pub kernel: String,
    pub mu: f64,
    pub sigma: f64,
    pub s_perm: usize,
    pub dest_s: usize,
    pub schedule: SurrogateSchedule,
    /// initial weights are `N(0, init_scale^2 / n)`
    pub init_scale: f64,
    pub coupling_0: f64,
    /// per-step multiplicative growth of the rSGD coupling
    pub coupling_growth: f64,
    pub coupling_max: f64,
    /// read out `sign` of the collapsed weights instead of the weights
    pub sign_collapse: bool,
}

impl Default for CommitteeConfig {
    fn default() -> Self {
        CommitteeConfig {
            k: 9,
            m: 4,
            method: CommitteeMethod::Mcover,
            kernel: "uniform".into(),
            mu: 0.0,
            sigma: f64::INFINITY,
            s_perm: 10,
            dest_s: 10,
            schedule: SurrogateSchedule::default(),
            init_scale: 0.1,
            coupling_0: 0.01,
            coupling_growth: 1.001,
            coupling_max: 1.0,
            sign_collapse: false,
        }
    }
}

impl CommitteeConfig {
    pub fn effective_m(&self) -> usize {
        match self.method {
            CommitteeMethod::Sgd => 1,
            _ => self.m,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.schedule.validate()?;
        if self.k % 2 == 0 {
            return Err(Error::InvalidParameter(format!("K must be odd, got {}", self.k)));
        }
        if self.effective_m() == 0 || (self.method == CommitteeMethod::Rsgd && self.m < 2) {
            return Err(Error::InvalidParameter(format!("bad M = {} for {}", self.m, self.method)));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EpochTrace {
    pub epoch: usize,
    pub beta: f64,
    pub loss: f64,
    pub train_error: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CommitteeOutcome {
    pub test_error: f64,
    pub train_error: f64,
    pub final_loss: f64,
    pub epochs: usize,
    pub diverged: bool,
    pub trace: Vec<EpochTrace>,
    pub wall_ms: u128,
}

fn labels_f64(set: &BinaryTwoClassSet) -> Vec<f64> {
    set.labels.iter().map(|&y| y as f64).collect()
}

enum Learner {
    Single(Array2<f64>),
    Replicas(Vec<Array2<f64>>),
    Lifted(CommitteeCoverEnsemble),
}

impl Learner {
    fn collapse(&self) -> Array2<f64> {
        match self {
            Learner::Single(w) => w.clone(),
            Learner::Replicas(ws) => mean_of(ws),
            Learner::Lifted(e) => mean_of(e.covers()),
        }
    }
}

/// Train with the configured method until the epoch loss drops below
/// `loss_stop`, the collapsed machine makes no training errors, or
/// `max_epochs` passes; report the collapsed machine's hard test error.
/// Divergence is reported in the outcome rather than as an error.
pub fn train_and_evaluate(
    cfg: &CommitteeConfig,
    train: &BinaryTwoClassSet,
    test: &BinaryTwoClassSet,
    seed: u64,
    exec: Execution,
) -> Result<CommitteeOutcome> {
    cfg.validate()?;
    if train.n != test.n || train.is_empty() {
        return Err(Error::InvalidInput("train/test sets must be nonempty with equal n".into()));
    }
    let start = Instant::now();
    let (k, n, m) = (cfg.k, train.n, cfg.effective_m());
    let normal = Normal::new(0.0, cfg.init_scale / (n as f64).sqrt())
        .map_err(|e| Error::InvalidParameter(format!("init scale: {e}")))?;
    let mut init_rng = stream(seed, seed::INIT);
    let covers: Vec<Array2<f64>> = (0..m)
        .map(|_| Array2::from_shape_simple_fn((k, n), || normal.sample(&mut init_rng)))
        .collect();
    let mut learner = match cfg.method {
        CommitteeMethod::Sgd => Learner::Single(covers.into_iter().next().expect("M >= 1")),
        CommitteeMethod::Rsgd => Learner::Replicas(covers),
        CommitteeMethod::Mcover => {
            let mut rng = stream(seed, seed::ROUTING);
            let kernel = kernel_from_spec(&cfg.kernel, m, cfg.mu, cfg.sigma)?;
            let bank = PermutationBank::sample(&kernel, cfg.s_perm, seed, &mut rng)?;
            let dest = DestinationBank::sample(&bank, k * n, cfg.dest_s, &mut rng)?;
            Learner::Lifted(CommitteeCoverEnsemble::new(covers, dest)?)
        }
    };

    let x_train = train.input_matrix();
    let y_train = labels_f64(train);
    let x_test = test.input_matrix();
    let sched = &cfg.schedule;
    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut order_rng = stream(seed, seed::ORDER);
    let (mut beta, mut lr, mut coupling) = (sched.beta_0, sched.lr_0, cfg.coupling_0);
    let mut trace = Vec::new();
    let mut diverged = false;
    let mut final_loss = f64::NAN;
    let mut train_error = 1.0;

    'epochs: for epoch in 0..sched.max_epochs {
        order.shuffle(&mut order_rng);
        let mut epoch_loss = 0.0;
        for chunk in order.chunks(sched.batch) {
            let xb = x_train.select(Axis(0), chunk);
            let yb: Vec<f64> = chunk.iter().map(|&i| y_train[i]).collect();
            let step = match &mut learner {
                Learner::Single(w) => sgd_step(w, &xb.view(), &yb, beta, lr),
                Learner::Replicas(ws) => {
                    let r = rsgd_step(ws, &xb.view(), &yb, beta, lr, coupling);
                    coupling = (coupling * cfg.coupling_growth).min(cfg.coupling_max);
                    r
                }
                Learner::Lifted(e) => mcover_sgd_step(e, &xb.view(), &yb, beta, lr, exec),
            };
            match step {
                Ok(l) => epoch_loss += l * chunk.len() as f64,
                Err(Error::Divergence(_)) => {
                    diverged = true;
                    break 'epochs;
                }
                Err(e) => return Err(e),
            }
        }
        epoch_loss /= train.len() as f64;
        final_loss = epoch_loss;
        let collapsed = CommitteeParams { j: learner.collapse() };
        train_error = collapsed.hard_error(&x_train.view(), &train.labels);
        trace.push(EpochTrace {
            epoch,
            beta,
            loss: epoch_loss,
            train_error,
        });
        if epoch_loss < sched.loss_stop || train_error == 0.0 {
            break;
        }
        beta *= sched.beta_growth;
        lr *= sched.lr_decay;
    }

    let mut readout = learner.collapse();
    if cfg.sign_collapse {
        readout.mapv_inplace(|v| if v >= 0.0 { 1.0 } else { -1.0 });
    }
    let readout = CommitteeParams { j: readout };
    let test_error = if diverged {
        f64::NAN
    } else {
        readout.hard_error(&x_test.view(), &test.labels)
    };
    Ok(CommitteeOutcome {
        test_error,
        train_error,
        final_loss,
        epochs: trace.len(),
        diverged,
        trace,
        wall_ms: start.elapsed().as_millis(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::synthetic_committee_teacher;
    use crate::routing::MixKernel;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_covers(m: usize, k: usize, n: usize, rng: &mut ChaCha8Rng) -> Vec<Array2<f64>> {
        (0..m)
            .map(|_| Array2::from_shape_simple_fn((k, n), || rng.random_range(-1.0..1.0)))
            .collect()
    }

    fn pm1(b: usize, n: usize, rng: &mut ChaCha8Rng) -> Array2<f64> {
        Array2::from_shape_simple_fn((b, n), || if rng.random::<bool>() { 1.0 } else { -1.0 })
    }

    fn uniform_dest(m: usize, sites: usize, s: usize, rng: &mut ChaCha8Rng) -> DestinationBank {
        let bank = PermutationBank::sample(&MixKernel::uniform(m).unwrap(), 6, 0, rng).unwrap();
        DestinationBank::sample(&bank, sites, s, rng).unwrap()
    }

    #[test]
    fn identity_routing_gives_base_fields() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let w = random_covers(1, 3, 5, &mut rng).remove(0);
        let ens = CommitteeCoverEnsemble::new(vec![w.clone(); 3], DestinationBank::identity(3, 15, vec![0, 4, 11])).unwrap();
        let x = pm1(6, 5, &mut rng);
        let base = x.dot(&w.t());
        for f in ens.routed_hidden_fields(&x.view()) {
            assert!(f.iter().zip(&base).all(|(a, b)| (a - b).abs() < 1e-12));
        }
    }

    #[test]
    fn routed_fields_match_table_formula() {
        // K=2, n=3, M=2, S=2
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let covers = random_covers(2, 2, 3, &mut rng);
        let dest = uniform_dest(2, 6, 2, &mut rng);
        let ens = CommitteeCoverEnsemble::new(covers.clone(), dest.clone()).unwrap();
        let x = pm1(4, 3, &mut rng);
        let fields = ens.routed_hidden_fields(&x.view());
        for s in 0..2 {
            for a in 0..2 {
                for mu in 0..4 {
                    for k in 0..2 {
                        let f: f64 = (0..3)
                            .map(|i| {
                                let q = k * 3 + i;
                                x[[mu, i]] * covers[dest.route(q, s, a)][[k, i]]
                            })
                            .sum();
                        assert!((fields[s * 2 + a][[mu, k]] - f).abs() < 1e-12);
                    }
                }
            }
        }
        // destination synapse is always read from the evaluated cover
        for (s, &p) in dest.dest_sites().iter().enumerate() {
            for a in 0..2 {
                assert_eq!(dest.route(p, s, a), a);
            }
        }
    }

    #[test]
    fn lifted_gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for trial in 0..5 {
            let (k, n, m, s) = (3, 4 + trial % 3, 2 + trial % 2, 1 + trial % 3);
            let covers = random_covers(m, k, n, &mut rng);
            let dest = uniform_dest(m, k * n, s, &mut rng);
            let ens = CommitteeCoverEnsemble::new(covers, dest).unwrap();
            let x = pm1(5, n, &mut rng);
            let y: Vec<f64> = (0..5).map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 }).collect();
            let beta = 1.1;
            let (_, g) = ens.lifted_loss_and_grad(&x.view(), &y, beta, Execution::Sequential);
            let h = 1e-6;
            for c in 0..m {
                for q in 0..k * n {
                    let mut plus = ens.clone();
                    plus.covers[c].as_slice_mut().unwrap()[q] += h;
                    let mut minus = ens.clone();
                    minus.covers[c].as_slice_mut().unwrap()[q] -= h;
                    let lp = plus.lifted_loss_and_grad(&x.view(), &y, beta, Execution::Sequential).0;
                    let lm = minus.lifted_loss_and_grad(&x.view(), &y, beta, Execution::Sequential).0;
                    let fd = (lp - lm) / (2.0 * h);
                    let an = g[c].as_slice().unwrap()[q];
                    assert!((fd - an).abs() <= 1e-5 * fd.abs().max(1e-3), "{fd} vs {an}");
                }
            }
        }
    }

    #[test]
    fn identity_bank_gives_independent_gradients() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let covers = random_covers(3, 3, 4, &mut rng);
        let ens = CommitteeCoverEnsemble::new(covers.clone(), DestinationBank::identity(3, 12, vec![1, 5])).unwrap();
        let x = pm1(7, 4, &mut rng);
        let y = vec![1.0, -1.0, 1.0, 1.0, -1.0, -1.0, 1.0];
        let (_, g) = ens.lifted_loss_and_grad(&x.view(), &y, 0.8, Execution::Parallel);
        for (c, w) in covers.iter().enumerate() {
            let (_, single) = loss_and_grad(w, &x.view(), &y, 0.8);
            assert!(g[c].iter().zip(&single).all(|(a, b)| (a - b).abs() < 1e-12));
        }
    }

    #[test]
    fn rsgd_attraction() {
        let x = Array2::zeros((1, 2));
        let y = [1.0];
        // zero inputs: zero surrogate gradient, so only the attraction acts
        let w1 = Array2::from_shape_vec((1, 2), vec![1.0, 0.0]).unwrap();
        let w2 = Array2::from_shape_vec((1, 2), vec![3.0, -2.0]).unwrap();
        let mut reps = vec![w1.clone(), w2.clone()];
        let (lr, c) = (0.1, 0.5);
        rsgd_step(&mut reps, &x.view(), &y, 1.0, lr, c).unwrap();
        let expect = &w1 + &((&w2 - &w1) * (lr * c / 2.0));
        assert!(reps[0].iter().zip(&expect).all(|(a, b)| (a - b).abs() < 1e-15));
        let mut same = vec![w1.clone(), w1.clone()];
        rsgd_step(&mut same, &x.view(), &y, 1.0, lr, c).unwrap();
        assert_eq!(same[0], w1);
    }

    #[test]
    fn uncoupled_rsgd_is_independent_sgd() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut reps = random_covers(2, 3, 4, &mut rng);
        let mut solo = reps.clone();
        let x = pm1(5, 4, &mut rng);
        let y = [1.0, 1.0, -1.0, 1.0, -1.0];
        rsgd_step(&mut reps, &x.view(), &y, 1.2, 0.3, 0.0).unwrap();
        for w in solo.iter_mut() {
            sgd_step(w, &x.view(), &y, 1.2, 0.3).unwrap();
        }
        assert_eq!(reps, solo);
    }

    #[test]
    fn collapse_of_identical_covers_is_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let w = random_covers(1, 3, 3, &mut rng).remove(0);
        let ens = CommitteeCoverEnsemble::new(vec![w.clone(); 4], DestinationBank::identity(4, 9, vec![0])).unwrap();
        assert_eq!(ens.collapse().j, w);
    }

    #[test]
    fn single_cover_mcover_tracks_sgd() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let data = synthetic_committee_teacher(15, 3, 80, 40, &mut rng).unwrap();
        let sched = SurrogateSchedule {
            max_epochs: 20,
            ..Default::default()
        };
        let base = CommitteeConfig {
            k: 3,
            m: 1,
            schedule: sched,
            dest_s: 4,
            ..Default::default()
        };
        let sgd = train_and_evaluate(&CommitteeConfig { method: CommitteeMethod::Sgd, ..base.clone() }, &data.train, &data.test, 3, Execution::Sequential).unwrap();
        let mc = train_and_evaluate(&base, &data.train, &data.test, 3, Execution::Sequential).unwrap();
        assert_eq!(sgd.epochs, mc.epochs);
        for (a, b) in sgd.trace.iter().zip(&mc.trace) {
            assert!((a.loss - b.loss).abs() < 1e-12);
            assert_eq!(a.train_error, b.train_error);
        }
        assert_eq!(sgd.test_error, mc.test_error);
    }

    #[test]
    fn realizable_teacher_is_learned() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let data = synthetic_committee_teacher(21, 3, 2000, 500, &mut rng).unwrap();
        let cfg = CommitteeConfig {
            k: 3,
            method: CommitteeMethod::Sgd,
            schedule: SurrogateSchedule { max_epochs: 200, ..Default::default() },
            ..Default::default()
        };
        let out = train_and_evaluate(&cfg, &data.train, &data.test, 1, Execution::Sequential).unwrap();
        assert!(!out.diverged);
        assert!(out.test_error < 0.1, "{}", out.test_error);
    }

    #[test]
    fn divergence_is_recorded() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let data = synthetic_committee_teacher(9, 3, 20, 10, &mut rng).unwrap();
        let cfg = CommitteeConfig {
            k: 3,
            method: CommitteeMethod::Sgd,
            schedule: SurrogateSchedule { lr_0: f64::INFINITY, batch: 5, ..Default::default() },
            ..Default::default()
        };
        let out = train_and_evaluate(&cfg, &data.train, &data.test, 1, Execution::Sequential).unwrap();
        assert!(out.diverged);
        assert!(out.test_error.is_nan());
        let mut w = Array2::from_elem((1, 2), f64::NAN);
        assert!(matches!(
            sgd_step(&mut w, &Array2::ones((1, 2)).view(), &[1.0], 1.0, 0.1),
            Err(Error::Divergence(_))
        ));
    }
}
