//! Sampling routing permutations from the permanent-weighted law
//! `P(rho) ∝ prod_alpha Q[alpha][rho(alpha)]`.

use rand::Rng;

use super::permutation::next_lexicographic;
use super::{MixKernel, Permutation};
use crate::error::{Error, Result};

/// Kernels up to this size are sampled by exhaustive enumeration.
pub const EXACT_SAMPLING_MAX_M: usize = 8;

/// Reusable sampler for one kernel. Enumeration tables are built once so
/// drawing many permutations from the same kernel stays cheap.
#[derive(Clone, Debug)]
pub enum PermutationSampler {
    Exact(ExactSampler),
    Metropolis(MetropolisSampler),
}

impl PermutationSampler {
    /// Exact enumeration for `M <= 8`, Metropolis above.
    pub fn new(q: &MixKernel) -> Result<Self> {
        if q.m() <= EXACT_SAMPLING_MAX_M {
            Ok(PermutationSampler::Exact(ExactSampler::new(q)?))
        } else {
            Ok(PermutationSampler::Metropolis(MetropolisSampler::new(q)?))
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Permutation {
        match self {
            PermutationSampler::Exact(s) => s.sample(rng),
            PermutationSampler::Metropolis(s) => s.sample(rng),
        }
    }
}

/// Draw one permutation from the law induced by `q`.
pub fn sample_permutation<R: Rng + ?Sized>(q: &MixKernel, rng: &mut R) -> Result<Permutation> {
    Ok(PermutationSampler::new(q)?.sample(rng))
}

/// Weight `prod_alpha Q[alpha][rho(alpha)]` of a single matching.
pub fn matching_weight(q: &MixKernel, rho: &[usize]) -> f64 {
    rho.iter().enumerate().map(|(a, &b)| q.get(a, b)).product()
}

#[derive(Clone, Debug)]
pub struct ExactSampler {
    m: usize,
    perms: Vec<usize>,
    cumulative: Vec<f64>,
}

impl ExactSampler {
    pub fn new(q: &MixKernel) -> Result<Self> {
        let m = q.m();
        if m > EXACT_SAMPLING_MAX_M {
            return Err(Error::UnsupportedSize {
                size: m,
                max: EXACT_SAMPLING_MAX_M,
            });
        }
        let mut perms = Vec::new();
        let mut cumulative = Vec::new();
        let mut total = 0.0;
        let mut p: Vec<usize> = (0..m).collect();
        loop {
            let w = matching_weight(q, &p);
            if w > 0.0 {
                total += w;
                perms.extend_from_slice(&p);
                cumulative.push(total);
            }
            if !next_lexicographic(&mut p) {
                break;
            }
        }
        if cumulative.is_empty() || !total.is_finite() {
            return Err(Error::DegenerateKernel);
        }
        Ok(ExactSampler {
            m,
            perms,
            cumulative,
        })
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Permutation {
        let total = *self.cumulative.last().unwrap();
        let u = rng.random::<f64>() * total;
        let idx = self
            .cumulative
            .partition_point(|&c| c <= u)
            .min(self.cumulative.len() - 1);
        Permutation::from_vec_unchecked(self.perms[idx * self.m..(idx + 1) * self.m].to_vec())
    }

    /// Number of permutations with positive weight.
    pub fn support_size(&self) -> usize {
        self.cumulative.len()
    }
}

/// Transposition-proposal Metropolis chain started from a greedy matching;
/// each draw runs a fresh chain for `50 M^2` steps and returns its state.
#[derive(Clone, Debug)]
pub struct MetropolisSampler {
    kernel: MixKernel,
    start: Vec<usize>,
    burn_in: usize,
}

impl MetropolisSampler {
    pub fn new(q: &MixKernel) -> Result<Self> {
        let start = greedy_matching(q);
        if matching_weight(q, &start) <= 0.0 {
            return Err(Error::DegenerateKernel);
        }
        let m = q.m();
        Ok(MetropolisSampler {
            kernel: q.clone(),
            start,
            burn_in: 50 * m * m,
        })
    }

    pub fn burn_in(&self) -> usize {
        self.burn_in
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Permutation {
        let q = &self.kernel;
        let m = q.m();
        let mut rho = self.start.clone();
        if m < 2 {
            return Permutation::from_vec_unchecked(rho);
        }
        for _ in 0..self.burn_in {
            let a = rng.random_range(0..m);
            let mut b = rng.random_range(0..m - 1);
            if b >= a {
                b += 1;
            }
            let old = q.get(a, rho[a]) * q.get(b, rho[b]);
            let new = q.get(a, rho[b]) * q.get(b, rho[a]);
            let accept = if old <= 0.0 {
                true
            } else {
                let ratio = new / old;
                ratio >= 1.0 || rng.random::<f64>() < ratio
            };
            if accept {
                rho.swap(a, b);
            }
        }
        Permutation::from_vec_unchecked(rho)
    }
}

/// Repeatedly take the largest entry among unmatched rows and columns.
fn greedy_matching(q: &MixKernel) -> Vec<usize> {
    let m = q.m();
    let mut rho = vec![usize::MAX; m];
    let mut col_used = vec![false; m];
    for _ in 0..m {
        let mut best = (usize::MAX, usize::MAX, f64::NEG_INFINITY);
        for (a, _) in rho.iter().enumerate().filter(|(_, &r)| r == usize::MAX) {
            for b in (0..m).filter(|&b| !col_used[b]) {
                if q.get(a, b) > best.2 {
                    best = (a, b, q.get(a, b));
                }
            }
        }
        rho[best.0] = best.1;
        col_used[best.1] = true;
    }
    rho
}
