use rand::Rng;

use super::{MixKernel, Permutation, PermutationSampler};
use crate::error::{Error, Result};

/// Quenched set of routing permutations drawn once from a balanced kernel.
#[derive(Clone, Debug, PartialEq)]
pub struct PermutationBank {
    perms: Vec<Permutation>,
    inverses: Vec<Permutation>,
    source_kernel: MixKernel,
    seed: u64,
}

impl PermutationBank {
    /// Balance `kernel`, then draw `s_perm` independent permutations using
    /// the caller's stream. `seed` is recorded for provenance only.
    pub fn sample<R: Rng + ?Sized>(
        kernel: &MixKernel,
        s_perm: usize,
        seed: u64,
        rng: &mut R,
    ) -> Result<Self> {
        if s_perm == 0 {
            return Err(Error::InvalidParameter("S_perm must be >= 1".into()));
        }
        let balanced = kernel.balanced()?;
        let sampler = PermutationSampler::new(&balanced)?;
        let perms = (0..s_perm).map(|_| sampler.sample(rng)).collect();
        Ok(Self::from_parts(perms, balanced, seed))
    }

    pub fn from_parts(perms: Vec<Permutation>, source_kernel: MixKernel, seed: u64) -> Self {
        debug_assert!(perms.iter().all(|p| p.len() == source_kernel.m()));
        let inverses = perms.iter().map(Permutation::inverse).collect();
        PermutationBank {
            perms,
            inverses,
            source_kernel,
            seed,
        }
    }

    pub fn perms(&self) -> &[Permutation] {
        &self.perms
    }

    pub fn inverse(&self, idx: usize) -> &Permutation {
        &self.inverses[idx]
    }

    pub fn len(&self) -> usize {
        self.perms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.perms.is_empty()
    }

    pub fn m(&self) -> usize {
        self.source_kernel.m()
    }

    pub fn source_kernel(&self) -> &MixKernel {
        &self.source_kernel
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// One permutation per line, space-separated 1-based images.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for p in &self.perms {
            out.push_str(&p.to_string());
            out.push('\n');
        }
        out
    }

    /// Parse the text format; blank lines are skipped.
    pub fn parse_text(text: &str) -> Result<Vec<Permutation>> {
        let perms: Vec<Permutation> = text
            .lines()
            .filter(|l| !l.trim().is_empty())
            .map(Permutation::parse_line)
            .collect::<Result<_>>()?;
        if let Some(first) = perms.first() {
            if perms.iter().any(|p| p.len() != first.len()) {
                return Err(Error::InvalidInput("bank permutations differ in length".into()));
            }
        }
        Ok(perms)
    }
}

/// Row-stochastic collapse of a bank: row = destination cover `beta`,
/// column = source cover `alpha`, entry = fraction of bank permutations with
/// `rho(beta) = alpha`.
#[derive(Clone, Debug, PartialEq)]
pub struct EmpiricalMixer {
    m: usize,
    entries: Vec<f64>,
}

impl EmpiricalMixer {
    pub fn from_bank(bank: &PermutationBank) -> Result<Self> {
        Self::from_perms(bank.perms())
    }

    pub fn from_perms(perms: &[Permutation]) -> Result<Self> {
        let first = perms
            .first()
            .ok_or_else(|| Error::InvalidInput("empty permutation bank".into()))?;
        let m = first.len();
        let mut counts = vec![0usize; m * m];
        for p in perms {
            for beta in 0..m {
                counts[beta * m + p.apply(beta)] += 1;
            }
        }
        let s = perms.len() as f64;
        Ok(EmpiricalMixer {
            m,
            entries: counts.into_iter().map(|c| c as f64 / s).collect(),
        })
    }

    /// Use a (balanced) kernel directly as the mixer.
    pub fn from_kernel(q: &MixKernel) -> Self {
        EmpiricalMixer {
            m: q.m(),
            entries: q.entries().to_vec(),
        }
    }

    pub fn m(&self) -> usize {
        self.m
    }

    /// `Q̂[beta][alpha]`.
    #[inline]
    pub fn get(&self, beta: usize, alpha: usize) -> f64 {
        self.entries[beta * self.m + alpha]
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn row(&self, beta: usize) -> &[f64] {
        &self.entries[beta * self.m..(beta + 1) * self.m]
    }
}

/// Convenience wrapper matching the bank's collapse.
pub fn empirical_mixer(bank: &PermutationBank) -> Result<EmpiricalMixer> {
    EmpiricalMixer::from_bank(bank)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn identity_kernel_bank_is_all_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let bank = PermutationBank::sample(&MixKernel::identity(4).unwrap(), 5, 0, &mut rng).unwrap();
        assert_eq!(bank.len(), 5);
        assert!(bank.perms().iter().all(Permutation::is_identity));
        let mix = empirical_mixer(&bank).unwrap();
        for b in 0..4 {
            for a in 0..4 {
                assert_eq!(mix.get(b, a), if a == b { 1.0 } else { 0.0 });
            }
        }
    }

    #[test]
    fn bank_entries_are_bijections() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let q = MixKernel::gaussian_ring(5, 2.0, 1.5).unwrap();
        let bank = PermutationBank::sample(&q, 10, 7, &mut rng).unwrap();
        assert_eq!(bank.len(), 10);
        for (i, p) in bank.perms().iter().enumerate() {
            assert!(Permutation::new(p.as_slice().to_vec()).is_ok());
            assert_eq!(bank.inverse(i), &p.inverse());
        }
    }

    #[test]
    fn uniform_two_cover_bank_is_balanced() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let bank = PermutationBank::sample(&MixKernel::uniform(2).unwrap(), 10_000, 11, &mut rng)
            .unwrap();
        let ids = bank.perms().iter().filter(|p| p.is_identity()).count() as f64 / 10_000.0;
        // binomial sd is 0.005; 0.05 is ten sd
        assert!((ids - 0.5).abs() < 0.05, "{ids}");
    }

    #[test]
    fn identity_and_swap_mix_evenly() {
        let perms = vec![Permutation::identity(2), Permutation::new(vec![1, 0]).unwrap()];
        let mix = EmpiricalMixer::from_perms(&perms).unwrap();
        assert_eq!(mix.entries(), &[0.5, 0.5, 0.5, 0.5]);
    }

    #[test]
    fn mixer_rows_sum_to_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let bank = PermutationBank::sample(&MixKernel::gaussian_ring(6, 1.0, 1.0).unwrap(), 7, 5, &mut rng)
            .unwrap();
        let mix = empirical_mixer(&bank).unwrap();
        for b in 0..6 {
            let s: f64 = mix.row(b).iter().sum();
            assert!((s - 1.0).abs() < 1e-12);
            for &e in mix.row(b) {
                let scaled = e * 7.0;
                assert!((scaled - scaled.round()).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn empty_bank_is_rejected() {
        assert!(EmpiricalMixer::from_perms(&[]).is_err());
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(PermutationBank::sample(&MixKernel::uniform(3).unwrap(), 0, 0, &mut rng).is_err());
    }

    #[test]
    fn text_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let bank = PermutationBank::sample(&MixKernel::uniform(4).unwrap(), 6, 9, &mut rng).unwrap();
        let text = bank.to_text();
        assert_eq!(text.lines().count(), 6);
        assert_eq!(PermutationBank::parse_text(&text).unwrap(), bank.perms());
    }
}
