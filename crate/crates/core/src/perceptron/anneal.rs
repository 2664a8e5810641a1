//! Glauber single-spin-flip simulated annealing shared by every perceptron method.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{Error, Result};

/// `1 / (1 + exp(dE / T))`, saturating cleanly for huge `|dE / T|`.
#[inline]
pub fn glauber_flip_probability(delta_e: f64, temperature: f64) -> f64 {
    let x = delta_e / temperature;
    if x > 700.0 {
        0.0
    } else if x < -700.0 {
        1.0
    } else {
        1.0 / (1.0 + x.exp())
    }
}

/// Linear cooling from `t_max` to `t_min` in steps of `dt`, one sweep per
/// temperature.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AnnealSchedule {
    pub t_max: f64,
    pub t_min: f64,
    pub dt: f64,
}

impl AnnealSchedule {
    pub const STANDARD: AnnealSchedule = AnnealSchedule {
        t_max: 0.4,
        t_min: 1e-2,
        dt: 1e-4,
    };

    pub fn new(t_max: f64, t_min: f64, dt: f64) -> Result<Self> {
        let s = AnnealSchedule { t_max, t_min, dt };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t_min > 0.0 && self.t_max > self.t_min && self.dt > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "need T_max > T_min > 0 and dT > 0, got {self:?}"
            )));
        }
        Ok(())
    }

    /// `ceil((T_max - T_min) / dT)`, with ratios within rounding noise of an
    /// integer taken as that integer.
    pub fn sweeps(&self) -> usize {
        let x = (self.t_max - self.t_min) / self.dt;
        let r = x.round();
        if (x - r).abs() <= 1e-9 * r.max(1.0) {
            r as usize
        } else {
            x.ceil() as usize
        }
    }

    /// Sweep temperatures: strictly decreasing, first `T_max`, last `T_min`.
    pub fn temperatures(&self) -> impl Iterator<Item = f64> + '_ {
        let n = self.sweeps();
        (0..n).map(move |k| {
            if k + 1 == n {
                self.t_min
            } else {
                self.t_max + (self.t_min - self.t_max) * k as f64 / (n - 1) as f64
            }
        })
    }
}

/// A system of `covers x sites` Ising spins with cheap single-flip energy
/// differences.
pub trait SpinSystem {
    fn covers(&self) -> usize;
    fn sites(&self) -> usize;
    /// Energy change if `w_site^(cover)` were flipped.
    fn flip_delta(&self, cover: usize, site: usize) -> f64;
    fn flip(&mut self, cover: usize, site: usize);
    fn energy(&self) -> f64;
    /// Hook run after every sweep (consistency checks in debug builds).
    fn end_sweep(&mut self, _sweep: usize) {}
}

#[derive(Clone, Debug, Default)]
pub struct AnnealStats {
    pub sweeps: usize,
    pub accepted: u64,
    pub final_energy: f64,
    /// `(sweep, temperature, energy)` samples, every `trace_every` sweeps
    pub trace: Vec<(usize, f64, f64)>,
}

/// Run the schedule. Within each sweep covers are visited in order; cover
/// `gamma` visits its sites in a fresh random order drawn from `streams[gamma]`
/// and draws its acceptance uniforms from the same stream, so a cover's
/// trajectory depends only on its own stream and the energy landscape.
pub fn anneal<S: SpinSystem, R: Rng>(
    system: &mut S,
    schedule: &AnnealSchedule,
    streams: &mut [R],
    trace_every: usize,
) -> Result<AnnealStats> {
    schedule.validate()?;
    if streams.len() != system.covers() {
        return Err(Error::InvalidInput(format!(
            "{} RNG streams for {} covers",
            streams.len(),
            system.covers()
        )));
    }
    let n = system.sites();
    let mut order: Vec<usize> = (0..n).collect();
    let mut stats = AnnealStats::default();
    for (sweep, t) in schedule.temperatures().enumerate() {
        for (cover, rng) in streams.iter_mut().enumerate() {
            // restart from the identity so the order depends on this stream only
            order.iter_mut().enumerate().for_each(|(i, o)| *o = i);
            order.shuffle(rng);
            for &site in &order {
                let de = system.flip_delta(cover, site);
                let u = rng.random::<f64>();
                if u < glauber_flip_probability(de, t) {
                    system.flip(cover, site);
                    stats.accepted += 1;
                }
            }
        }
        system.end_sweep(sweep);
        stats.sweeps += 1;
        if trace_every > 0 && sweep % trace_every == 0 {
            stats.trace.push((sweep, t, system.energy()));
        }
    }
    stats.final_energy = system.energy();
    Ok(stats)
}
