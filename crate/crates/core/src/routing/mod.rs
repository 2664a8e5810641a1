//! Mixing kernels, permanents and routing-permutation sampling.
//!
//! A kernel `Q` defines the law over cover permutations
//! `P(rho) = prod_alpha Q[alpha][rho(alpha)] / perm(Q)`. Banks are drawn once
//! before training and never resampled; every type here is immutable after
//! construction and can be shared read-only across trials.

mod bank;
mod destination;
mod kernel;
mod permanent;
mod permutation;
mod sampler;
mod sinkhorn;

pub use bank::{empirical_mixer, EmpiricalMixer, PermutationBank};
pub use destination::DestinationBank;
pub use kernel::{KernelFamily, MixKernel, SINKHORN_MAX_ITERS, SINKHORN_TOL};
pub use permanent::{permanent, MAX_PERMANENT_SIZE};
pub use permutation::Permutation;
pub use sampler::{
    matching_weight, sample_permutation, ExactSampler, MetropolisSampler, PermutationSampler,
    EXACT_SAMPLING_MAX_M,
};
pub use sinkhorn::sinkhorn_balance;

/// Build a kernel from a family name as used in configs and on the CLI.
pub fn kernel_from_spec(family: &str, m: usize, mu: f64, sigma: f64) -> crate::Result<MixKernel> {
    match family {
        "ring" | "gaussian_ring" => MixKernel::gaussian_ring(m, mu, sigma),
        "uniform" => MixKernel::uniform(m),
        "identity" => MixKernel::identity(m),
        other => Err(crate::Error::Config(format!("unknown kernel family {other:?}"))),
    }
}
