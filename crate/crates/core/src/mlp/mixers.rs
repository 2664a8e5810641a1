use std::fmt;
use std::str::FromStr;

use ndarray::{Array4, ArrayView1};
use rand::Rng;

use super::MlpArchitecture;
use crate::error::{Error, Result};
use crate::routing::{EmpiricalMixer, MixKernel, PermutationSampler};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum MixerMode {
    /// collapse a fresh bank of `S_perm` permutations per block
    #[default]
    Empirical,
    /// every mixer is the balanced kernel
    Exact,
}

impl fmt::Display for MixerMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MixerMode::Empirical => "empirical",
            MixerMode::Exact => "exact",
        })
    }
}

impl FromStr for MixerMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "empirical" => Ok(MixerMode::Empirical),
            "exact" => Ok(MixerMode::Exact),
            other => Err(Error::Config(format!("unknown mixer mode {other:?}"))),
        }
    }
}

/// One `M x M` mixer per `(layer, output neuron r, block g)`. Per layer the
/// entries are stored as `[g, beta, alpha, r]` so a `(g, beta, alpha)`
/// coefficient row over neurons is contiguous.
#[derive(Clone, Debug, PartialEq)]
pub struct MixerSet {
    m: usize,
    layers: Vec<Array4<f64>>,
}

impl MixerSet {
    pub fn from_layers(m: usize, layers: Vec<Array4<f64>>) -> Result<Self> {
        for q in &layers {
            let (_, b, a, _) = q.dim();
            if b != m || a != m {
                return Err(Error::InvalidInput("mixer blocks must be M x M".into()));
            }
        }
        Ok(MixerSet { m, layers })
    }

    /// The same mixer everywhere.
    pub fn constant(arch: &MlpArchitecture, q: &[f64], m: usize) -> Self {
        let layers = (0..arch.layers())
            .map(|l| {
                Array4::from_shape_fn((arch.blocks(l).len(), m, m, arch.d_out(l)), |(_, b, a, _)| q[b * m + a])
            })
            .collect();
        MixerSet { m, layers }
    }

    pub fn identity(arch: &MlpArchitecture, m: usize) -> Self {
        let eye: Vec<f64> = (0..m * m).map(|i| (i / m == i % m) as u8 as f64).collect();
        Self::constant(arch, &eye, m)
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn layer(&self, l: usize) -> &Array4<f64> {
        &self.layers[l]
    }

    /// `Q_hat_{l r g, beta alpha}`.
    pub fn get(&self, l: usize, r: usize, g: usize, beta: usize, alpha: usize) -> f64 {
        self.layers[l][[g, beta, alpha, r]]
    }

    /// Coefficients of source `alpha` into destination `beta` for block `g`,
    /// one per output neuron.
    pub fn coefficients(&self, l: usize, g: usize, beta: usize, alpha: usize) -> ArrayView1<'_, f64> {
        self.layers[l].slice(ndarray::s![g, beta, alpha, ..])
    }

    pub fn max_row_sum_error(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for q in &self.layers {
            let (gs, m, _, d) = q.dim();
            for g in 0..gs {
                for b in 0..m {
                    for r in 0..d {
                        let s: f64 = (0..m).map(|a| q[[g, b, a, r]]).sum();
                        worst = worst.max((s - 1.0).abs());
                    }
                }
            }
        }
        worst
    }
}

/// Build the cached mixers. `kernel` is balanced here before use. With
/// `shared_per_layer`, one mixer per layer replaces the per-(r, g) draws.
pub fn build_mixers<R: Rng + ?Sized>(
    arch: &MlpArchitecture,
    kernel: &MixKernel,
    s_perm: usize,
    mode: MixerMode,
    shared_per_layer: bool,
    rng: &mut R,
) -> Result<MixerSet> {
    let m = kernel.m();
    let balanced = kernel.balanced()?;
    if mode == MixerMode::Exact {
        return Ok(MixerSet::constant(arch, balanced.entries(), m));
    }
    if s_perm == 0 {
        return Err(Error::InvalidParameter("S_perm must be >= 1".into()));
    }
    let sampler = PermutationSampler::new(&balanced)?;
    let draw = |rng: &mut R| -> Result<EmpiricalMixer> {
        let perms: Vec<_> = (0..s_perm).map(|_| sampler.sample(rng)).collect();
        EmpiricalMixer::from_perms(&perms)
    };
    let mut layers = Vec::with_capacity(arch.layers());
    for l in 0..arch.layers() {
        let (gs, d) = (arch.blocks(l).len(), arch.d_out(l));
        let mut q = Array4::zeros((gs, m, m, d));
        if shared_per_layer {
            let mix = draw(rng)?;
            q.indexed_iter_mut().for_each(|((_, b, a, _), v)| *v = mix.get(b, a));
        } else {
            for r in 0..d {
                for g in 0..gs {
                    let mix = draw(rng)?;
                    for b in 0..m {
                        for a in 0..m {
                            q[[g, b, a, r]] = mix.get(b, a);
                        }
                    }
                }
            }
        }
        layers.push(q);
    }
    Ok(MixerSet { m, layers })
}
