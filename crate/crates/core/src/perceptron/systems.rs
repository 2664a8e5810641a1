//! Energy models for the three perceptron training methods.

use rand::Rng;

use super::instance::{spin, TeacherStudentInstance};
use super::SpinSystem;
use crate::error::{Error, Result};
use crate::routing::DestinationBank;

/// `M x N` binary weights, one row per cover.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BinaryCoverEnsemble {
    m: usize,
    n: usize,
    weights: Vec<i8>,
}

impl BinaryCoverEnsemble {
    /// Covers drawn i.i.d. uniform, cover-major.
    pub fn random<R: Rng + ?Sized>(m: usize, n: usize, rng: &mut R) -> Self {
        BinaryCoverEnsemble {
            m,
            n,
            weights: (0..m * n).map(|_| spin(rng)).collect(),
        }
    }

    pub fn from_covers(covers: &[Vec<i8>]) -> Result<Self> {
        let n = covers.first().map_or(0, Vec::len);
        if n == 0 || covers.iter().any(|c| c.len() != n) {
            return Err(Error::InvalidInput("covers must be nonempty and equally long".into()));
        }
        if covers.iter().flatten().any(|&w| w != 1 && w != -1) {
            return Err(Error::InvalidInput("binary weights must be +-1".into()));
        }
        Ok(BinaryCoverEnsemble {
            m: covers.len(),
            n,
            weights: covers.concat(),
        })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn cover(&self, alpha: usize) -> &[i8] {
        &self.weights[alpha * self.n..(alpha + 1) * self.n]
    }

    #[inline]
    pub fn get(&self, alpha: usize, q: usize) -> i8 {
        self.weights[alpha * self.n + q]
    }

    #[inline]
    pub(crate) fn flip(&mut self, alpha: usize, q: usize) {
        let w = &mut self.weights[alpha * self.n + q];
        *w = -*w;
    }

    /// Cover average `(1/M) sum_alpha w^(alpha)`.
    pub fn collapse(&self) -> Vec<f64> {
        let mut mean = vec![0.0; self.n];
        for a in 0..self.m {
            for (acc, &w) in mean.iter_mut().zip(self.cover(a)) {
                *acc += w as f64;
            }
        }
        mean.iter_mut().for_each(|x| *x /= self.m as f64);
        mean
    }
}

/// Pattern-error count; a zero margin counts as an error.
pub fn energy(margins: &[f64]) -> usize {
    margins.iter().filter(|&&d| d <= 0.0).count()
}

/// Per-pattern loss on the integer margin `h = sqrt(N) Delta`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum PatternLoss {
    /// `1[h <= 0]`: the pattern-error count
    #[default]
    Errors,
    /// `max(0, 1 - h) / sqrt(N)`: hinge on the margin, positive at ties
    Hinge,
}

impl PatternLoss {
    #[inline]
    fn integer(self, h: i32) -> i64 {
        match self {
            PatternLoss::Errors => (h <= 0) as i64,
            PatternLoss::Hinge => (1 - h).max(0) as i64,
        }
    }

    /// Factor turning summed integer losses into energy units.
    pub fn scale(self, n: usize) -> f64 {
        match self {
            PatternLoss::Errors => 1.0,
            PatternLoss::Hinge => 1.0 / (n as f64).sqrt(),
        }
    }

    fn total(self, h: &[i32]) -> i64 {
        h.iter().map(|&x| self.integer(x)).sum()
    }

    /// Change in the summed integer loss of one margin slice when the weight
    /// at a site with gauged column `col` and current value `w` flips.
    #[inline]
    fn flip_delta(self, h: &[i32], col: &[i8], w: i8) -> i64 {
        let step = -2 * w as i32;
        match self {
            PatternLoss::Errors => {
                let mut delta = 0i64;
                for (&hv, &g) in h.iter().zip(col) {
                    let new = hv + step * g as i32;
                    delta += (new <= 0) as i64 - (hv <= 0) as i64;
                }
                delta
            }
            PatternLoss::Hinge => {
                let mut delta = 0i64;
                for (&hv, &g) in h.iter().zip(col) {
                    let new = hv + step * g as i32;
                    delta += ((1 - new).max(0) - (1 - hv).max(0)) as i64;
                }
                delta
            }
        }
    }
}

#[inline]
fn apply_flip(h: &mut [i32], col: &[i8], w: i8) {
    let step = -2 * w as i32;
    for (hv, &g) in h.iter_mut().zip(col) {
        *hv += step * g as i32;
    }
}

/// Single-copy (or independent-copy) Glauber SA on the pattern-error count.
#[derive(Clone, Debug)]
pub struct VanillaSystem<'a> {
    instance: &'a TeacherStudentInstance,
    ensemble: BinaryCoverEnsemble,
    margins: Vec<Vec<i32>>,
    /// integer loss per cover
    errors: Vec<i64>,
    loss: PatternLoss,
}

impl<'a> VanillaSystem<'a> {
    pub fn new(instance: &'a TeacherStudentInstance, ensemble: BinaryCoverEnsemble) -> Self {
        Self::with_loss(instance, ensemble, PatternLoss::Errors)
    }

    pub fn with_loss(
        instance: &'a TeacherStudentInstance,
        ensemble: BinaryCoverEnsemble,
        loss: PatternLoss,
    ) -> Self {
        let margins: Vec<Vec<i32>> = (0..ensemble.m())
            .map(|a| instance.integer_margins(ensemble.cover(a)))
            .collect();
        let errors = margins.iter().map(|h| loss.total(h)).collect();
        VanillaSystem {
            instance,
            ensemble,
            margins,
            errors,
            loss,
        }
    }

    pub fn ensemble(&self) -> &BinaryCoverEnsemble {
        &self.ensemble
    }

    pub fn into_ensemble(self) -> BinaryCoverEnsemble {
        self.ensemble
    }

    pub fn cover_errors(&self, alpha: usize) -> i64 {
        self.errors[alpha]
    }
}

impl SpinSystem for VanillaSystem<'_> {
    fn covers(&self) -> usize {
        self.ensemble.m()
    }

    fn sites(&self) -> usize {
        self.ensemble.n()
    }

    fn flip_delta(&self, cover: usize, site: usize) -> f64 {
        self.loss.flip_delta(
            &self.margins[cover],
            self.instance.site_column(site),
            self.ensemble.get(cover, site),
        ) as f64
            * self.loss.scale(self.instance.n())
    }

    fn flip(&mut self, cover: usize, site: usize) {
        let w = self.ensemble.get(cover, site);
        let col = self.instance.site_column(site);
        self.errors[cover] += self.loss.flip_delta(&self.margins[cover], col, w);
        apply_flip(&mut self.margins[cover], col, w);
        self.ensemble.flip(cover, site);
    }

    fn energy(&self) -> f64 {
        self.errors.iter().sum::<i64>() as f64 * self.loss.scale(self.instance.n())
    }
}

/// Replicated SA: per-replica pattern errors plus the all-to-all coupling
/// `-(gamma / N) sum_{a<b} sum_q w_q^a w_q^b`.
#[derive(Clone, Debug)]
pub struct RsaSystem<'a> {
    base: VanillaSystem<'a>,
    gamma: f64,
    /// `sum_alpha w_q^(alpha)` per site
    column_sums: Vec<i32>,
}

impl<'a> RsaSystem<'a> {
    pub fn new(
        instance: &'a TeacherStudentInstance,
        ensemble: BinaryCoverEnsemble,
        gamma: f64,
    ) -> Result<Self> {
        Self::with_loss(instance, ensemble, gamma, PatternLoss::Errors)
    }

    pub fn with_loss(
        instance: &'a TeacherStudentInstance,
        ensemble: BinaryCoverEnsemble,
        gamma: f64,
        loss: PatternLoss,
    ) -> Result<Self> {
        if ensemble.m() < 2 {
            return Err(Error::InvalidParameter("RSA needs M >= 2 replicas".into()));
        }
        let column_sums = (0..ensemble.n())
            .map(|q| (0..ensemble.m()).map(|a| ensemble.get(a, q) as i32).sum())
            .collect();
        Ok(RsaSystem {
            base: VanillaSystem::with_loss(instance, ensemble, loss),
            gamma,
            column_sums,
        })
    }

    pub fn ensemble(&self) -> &BinaryCoverEnsemble {
        &self.base.ensemble
    }

    pub fn into_ensemble(self) -> BinaryCoverEnsemble {
        self.base.ensemble
    }

    /// Coupling energy alone.
    pub fn coupling_energy(&self) -> f64 {
        let e = &self.base.ensemble;
        let mut pair_sum = 0i64;
        for a in 0..e.m() {
            for b in a + 1..e.m() {
                pair_sum += e
                    .cover(a)
                    .iter()
                    .zip(e.cover(b))
                    .map(|(&x, &y)| x as i64 * y as i64)
                    .sum::<i64>();
            }
        }
        -self.gamma / e.n() as f64 * pair_sum as f64
    }

    /// Coupling part of the flip difference: `(2 gamma / N) w_old sum_{b != a} w_q^b`.
    pub fn coupling_flip_delta(&self, cover: usize, site: usize) -> f64 {
        let w = self.base.ensemble.get(cover, site) as i32;
        let others = self.column_sums[site] - w;
        2.0 * self.gamma / self.base.ensemble.n() as f64 * (w * others) as f64
    }
}

impl SpinSystem for RsaSystem<'_> {
    fn covers(&self) -> usize {
        self.base.covers()
    }

    fn sites(&self) -> usize {
        self.base.sites()
    }

    fn flip_delta(&self, cover: usize, site: usize) -> f64 {
        self.base.flip_delta(cover, site) + self.coupling_flip_delta(cover, site)
    }

    fn flip(&mut self, cover: usize, site: usize) {
        let w = self.base.ensemble.get(cover, site) as i32;
        self.column_sums[site] -= 2 * w;
        self.base.flip(cover, site);
    }

    fn energy(&self) -> f64 {
        self.base.energy() + self.coupling_energy()
    }
}

/// Routed cavity margins `Delta_{mu -> p_s}^(alpha)` for every channel `s`
/// and destination cover `alpha`, stored as integers
/// `h = sum_q G[mu][q] w_q^(route(q, s, alpha))` (real margin is `h / sqrt N`).
#[derive(Clone, Debug, PartialEq)]
pub struct RoutedMarginCache {
    channels: usize,
    m: usize,
    p: usize,
    /// `[(s * M + alpha) * P + mu]`
    margins: Vec<i32>,
    /// integer loss per `(s, alpha)` slice
    errors: Vec<i64>,
    scale: f64,
}

impl RoutedMarginCache {
    pub fn build(
        instance: &TeacherStudentInstance,
        ensemble: &BinaryCoverEnsemble,
        dest: &DestinationBank,
        loss: PatternLoss,
    ) -> Self {
        let (channels, m, p, n) = (dest.channels(), ensemble.m(), instance.p(), instance.n());
        let mut margins = vec![0i32; channels * m * p];
        let mut routed = vec![0i8; n];
        for s in 0..channels {
            for a in 0..m {
                for (q, w) in routed.iter_mut().enumerate() {
                    *w = ensemble.get(dest.route(q, s, a), q);
                }
                let slice = &mut margins[(s * m + a) * p..(s * m + a + 1) * p];
                for (mu, h) in slice.iter_mut().enumerate() {
                    *h = super::instance::dot(instance.pattern(mu), &routed);
                }
            }
        }
        let errors = margins.chunks_exact(p.max(1)).map(|h| loss.total(h)).collect();
        RoutedMarginCache {
            channels,
            m,
            p,
            margins,
            errors,
            scale: loss.scale(n),
        }
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    /// Integer routed margins of slice `(s, alpha)`.
    pub fn slice(&self, s: usize, alpha: usize) -> &[i32] {
        let k = s * self.m + alpha;
        &self.margins[k * self.p..(k + 1) * self.p]
    }

    /// Real routed margin `Delta_{mu -> p_s}^(alpha)`.
    pub fn margin(&self, s: usize, alpha: usize, mu: usize, n: usize) -> f64 {
        self.slice(s, alpha)[mu] as f64 / (n as f64).sqrt()
    }

    pub fn slice_errors(&self, s: usize, alpha: usize) -> i64 {
        self.errors[s * self.m + alpha]
    }

    /// Channel-averaged lifted energy `(1/S) sum_s sum_alpha E_{s, alpha}`.
    pub fn lifted_energy(&self) -> f64 {
        self.errors.iter().sum::<i64>() as f64 * self.scale / self.channels as f64
    }

    fn slice_mut(&mut self, k: usize) -> &mut [i32] {
        &mut self.margins[k * self.p..(k + 1) * self.p]
    }
}

/// M-cover SA on the channel-averaged routed pattern-error count.
#[derive(Clone, Debug)]
pub struct McoverSystem<'a> {
    instance: &'a TeacherStudentInstance,
    dest: &'a DestinationBank,
    ensemble: BinaryCoverEnsemble,
    cache: RoutedMarginCache,
    loss: PatternLoss,
    check_every: usize,
}

impl<'a> McoverSystem<'a> {
    pub fn new(
        instance: &'a TeacherStudentInstance,
        ensemble: BinaryCoverEnsemble,
        dest: &'a DestinationBank,
    ) -> Result<Self> {
        Self::with_loss(instance, ensemble, dest, PatternLoss::Errors)
    }

    pub fn with_loss(
        instance: &'a TeacherStudentInstance,
        ensemble: BinaryCoverEnsemble,
        dest: &'a DestinationBank,
        loss: PatternLoss,
    ) -> Result<Self> {
        if dest.m() != ensemble.m() || dest.sites() != ensemble.n() || instance.n() != ensemble.n() {
            return Err(Error::InvalidInput(
                "destination bank, ensemble and instance sizes disagree".into(),
            ));
        }
        let cache = RoutedMarginCache::build(instance, &ensemble, dest, loss);
        Ok(McoverSystem {
            instance,
            dest,
            ensemble,
            cache,
            loss,
            check_every: 100,
        })
    }

    /// How often (in sweeps) debug builds compare the cache against a full
    /// rebuild; zero disables the check.
    pub fn set_check_every(&mut self, sweeps: usize) {
        self.check_every = sweeps;
    }

    pub fn cache(&self) -> &RoutedMarginCache {
        &self.cache
    }

    pub fn ensemble(&self) -> &BinaryCoverEnsemble {
        &self.ensemble
    }

    pub fn into_ensemble(self) -> BinaryCoverEnsemble {
        self.ensemble
    }

    /// Rebuild from scratch and compare.
    pub fn cache_is_consistent(&self) -> bool {
        RoutedMarginCache::build(self.instance, &self.ensemble, self.dest, self.loss) == self.cache
    }
}

impl SpinSystem for McoverSystem<'_> {
    fn covers(&self) -> usize {
        self.ensemble.m()
    }

    fn sites(&self) -> usize {
        self.ensemble.n()
    }

    fn flip_delta(&self, cover: usize, site: usize) -> f64 {
        let col = self.instance.site_column(site);
        let w = self.ensemble.get(cover, site);
        let total: i64 = self
            .dest
            .affected_slices(site, cover)
            .map(|(s, a)| self.loss.flip_delta(self.cache.slice(s, a), col, w))
            .sum();
        total as f64 * self.cache.scale / self.cache.channels as f64
    }

    fn flip(&mut self, cover: usize, site: usize) {
        let col = self.instance.site_column(site);
        let w = self.ensemble.get(cover, site);
        let m = self.ensemble.m();
        for s in 0..self.dest.channels() {
            let a = self.dest.route_inverse(site, s, cover);
            let k = s * m + a;
            let delta = self.loss.flip_delta(self.cache.slice(s, a), col, w);
            self.cache.errors[k] += delta;
            apply_flip(self.cache.slice_mut(k), col, w);
        }
        self.ensemble.flip(cover, site);
    }

    fn energy(&self) -> f64 {
        self.cache.lifted_energy()
    }

    fn end_sweep(&mut self, sweep: usize) {
        if cfg!(debug_assertions) && self.check_every > 0 && (sweep + 1) % self.check_every == 0 {
            debug_assert!(
                self.cache_is_consistent(),
                "routed margin cache diverged from recomputation at sweep {sweep}"
            );
        }
    }
}
