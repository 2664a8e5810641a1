//! Binary teacher-student perceptron trained by Glauber simulated annealing:
//! vanilla single copy, replicated SA, and the M-cover lift with a sampled
//! destination bank.

mod anneal;
mod instance;
mod systems;

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rand_chacha::ChaCha8Rng;

pub use anneal::{anneal, glauber_flip_probability, AnnealSchedule, AnnealStats, SpinSystem};
pub use instance::{generate_instance, pattern_count, TeacherStudentInstance};
pub use systems::{
    energy, BinaryCoverEnsemble, PatternLoss, McoverSystem, RoutedMarginCache, RsaSystem, VanillaSystem,
};

use crate::error::{Error, Result};
use crate::routing::{kernel_from_spec, DestinationBank, PermutationBank};
use crate::seed::{self as streams, stream};

/// Overlap `R = w̄·w* / (|w̄| |w*|)` of the cover average with the teacher and
/// `eps_g = arccos(R) / pi`.
pub fn collapse_and_score(ensemble: &BinaryCoverEnsemble, teacher: &[i8]) -> Result<(f64, f64)> {
    let mean = ensemble.collapse();
    score_weights(&mean, teacher)
}

pub fn score_weights(w: &[f64], teacher: &[i8]) -> Result<(f64, f64)> {
    let norm_sq: f64 = w.iter().map(|x| x * x).sum();
    if norm_sq == 0.0 {
        return Err(Error::DegenerateCollapse);
    }
    let teacher_sq: f64 = teacher.iter().map(|&t| (t as f64) * (t as f64)).sum();
    let dot: f64 = w.iter().zip(teacher).map(|(x, &t)| x * t as f64).sum();
    let r = (dot / (norm_sq * teacher_sq).sqrt()).clamp(-1.0, 1.0);
    Ok((r, r.acos() / std::f64::consts::PI))
}

/// Anneal `ensemble` on the lifted routed objective.
pub fn mcover_anneal(
    instance: &TeacherStudentInstance,
    ensemble: BinaryCoverEnsemble,
    dest: &DestinationBank,
    schedule: &AnnealSchedule,
    loss: PatternLoss,
    streams: &mut [ChaCha8Rng],
) -> Result<(BinaryCoverEnsemble, AnnealStats)> {
    let mut sys = McoverSystem::with_loss(instance, ensemble, dest, loss)?;
    let stats = anneal(&mut sys, schedule, streams, 0)?;
    Ok((sys.into_ensemble(), stats))
}

/// Replicated SA baseline with pairwise coupling `gamma`.
pub fn rsa_anneal(
    instance: &TeacherStudentInstance,
    ensemble: BinaryCoverEnsemble,
    gamma: f64,
    schedule: &AnnealSchedule,
    loss: PatternLoss,
    streams: &mut [ChaCha8Rng],
) -> Result<(BinaryCoverEnsemble, AnnealStats)> {
    let mut sys = RsaSystem::with_loss(instance, ensemble, gamma, loss)?;
    let stats = anneal(&mut sys, schedule, streams, 0)?;
    Ok((sys.into_ensemble(), stats))
}

/// Independent single-copy SA on every cover.
pub fn vanilla_anneal(
    instance: &TeacherStudentInstance,
    ensemble: BinaryCoverEnsemble,
    schedule: &AnnealSchedule,
    loss: PatternLoss,
    streams: &mut [ChaCha8Rng],
) -> Result<(BinaryCoverEnsemble, AnnealStats)> {
    let mut sys = VanillaSystem::with_loss(instance, ensemble, loss);
    let stats = anneal(&mut sys, schedule, streams, 0)?;
    Ok((sys.into_ensemble(), stats))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PerceptronMethod {
    Vanilla,
    Rsa,
    Mcover,
}

impl fmt::Display for PerceptronMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PerceptronMethod::Vanilla => "vanilla",
            PerceptronMethod::Rsa => "rsa",
            PerceptronMethod::Mcover => "mcover",
        })
    }
}

impl FromStr for PerceptronMethod {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "vanilla" => Ok(PerceptronMethod::Vanilla),
            "rsa" => Ok(PerceptronMethod::Rsa),
            "mcover" => Ok(PerceptronMethod::Mcover),
            other => Err(Error::Config(format!("unknown perceptron method {other:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PerceptronConfig {
    pub n: usize,
    pub alpha: f64,
    pub m: usize,
    pub method: PerceptronMethod,
    pub kernel: String,
    pub mu: f64,
    pub sigma: f64,
    pub s_perm: usize,
    pub dest_s: usize,
    pub gamma: f64,
    pub schedule: AnnealSchedule,
    pub loss: PatternLoss,
}

impl Default for PerceptronConfig {
    fn default() -> Self {
        PerceptronConfig {
            n: 1000,
            alpha: 1.58,
            m: 3,
            method: PerceptronMethod::Mcover,
            kernel: "ring".into(),
            mu: 2.0,
            sigma: 1.5,
            s_perm: 10,
            dest_s: 10,
            gamma: 1.0,
            schedule: AnnealSchedule::STANDARD,
            loss: PatternLoss::Errors,
        }
    }
}

impl PerceptronConfig {
    /// Covers actually simulated: vanilla always runs a single copy.
    pub fn effective_m(&self) -> usize {
        match self.method {
            PerceptronMethod::Vanilla => 1,
            _ => self.m,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PerceptronOutcome {
    pub r: f64,
    pub eps_g: f64,
    pub final_energy: f64,
    pub sweeps: usize,
    pub wall_ms: u128,
    /// set when the collapsed vector was zero (scored as `eps_g = 0.5`)
    pub degenerate: bool,
}

/// Generate an instance, train with the configured method and score the
/// collapsed weights.
pub fn run_trial(cfg: &PerceptronConfig, seed: u64) -> Result<PerceptronOutcome> {
    cfg.schedule.validate()?;
    let start = Instant::now();
    let instance = generate_instance(cfg.n, cfg.alpha, &mut stream(seed, streams::INSTANCE))?;
    let m = cfg.effective_m();
    if m == 0 {
        return Err(Error::InvalidParameter("M must be >= 1".into()));
    }
    let init = BinaryCoverEnsemble::random(m, cfg.n, &mut stream(seed, streams::INIT));
    let mut dyn_streams: Vec<ChaCha8Rng> = (0..m as u64)
        .map(|a| stream(seed, streams::DYNAMICS + a))
        .collect();
    let (ensemble, stats) = match cfg.method {
        PerceptronMethod::Vanilla => vanilla_anneal(&instance, init, &cfg.schedule, cfg.loss, &mut dyn_streams)?,
        PerceptronMethod::Rsa => rsa_anneal(&instance, init, cfg.gamma, &cfg.schedule, cfg.loss, &mut dyn_streams)?,
        PerceptronMethod::Mcover => {
            let mut routing_rng = stream(seed, streams::ROUTING);
            let kernel = kernel_from_spec(&cfg.kernel, m, cfg.mu, cfg.sigma)?;
            let bank = PermutationBank::sample(&kernel, cfg.s_perm, seed, &mut routing_rng)?;
            let dest = DestinationBank::sample(&bank, cfg.n, cfg.dest_s, &mut routing_rng)?;
            mcover_anneal(&instance, init, &dest, &cfg.schedule, cfg.loss, &mut dyn_streams)?
        }
    };
    let (r, eps_g, degenerate) = match collapse_and_score(&ensemble, instance.teacher()) {
        Ok((r, e)) => (r, e, false),
        Err(Error::DegenerateCollapse) => (0.0, 0.5, true),
        Err(e) => return Err(e),
    };
    Ok(PerceptronOutcome {
        r,
        eps_g,
        final_energy: stats.final_energy,
        sweeps: stats.sweeps,
        wall_ms: start.elapsed().as_millis(),
        degenerate,
    })
}
