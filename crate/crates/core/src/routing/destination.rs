use rand::seq::index;
use rand::Rng;

use super::PermutationBank;
use crate::error::{Error, Result};

/// Sampled destination incidences with quenched per-(source, channel) routes.
///
/// Channel `s` keeps destination site `p_s`. Every source site `q` reads cover
/// `route(q, s)(alpha)` when evaluated for destination copy `alpha`. Routes are
/// drawn uniformly from a [`PermutationBank`]; the destination's own site is
/// always routed by the identity.
#[derive(Clone, Debug)]
pub struct DestinationBank {
    m: usize,
    sites: usize,
    dest_sites: Vec<usize>,
    /// bank index per `(q, s)`, or `None` for the identity self-route
    assignment: Vec<Option<u32>>,
    forward: Vec<u16>,
    inverse: Vec<u16>,
}

impl DestinationBank {
    /// Draw `channels` distinct destination sites out of `sites` and assign a
    /// bank permutation to every `(q, s)` pair.
    pub fn sample<R: Rng + ?Sized>(
        bank: &PermutationBank,
        sites: usize,
        channels: usize,
        rng: &mut R,
    ) -> Result<Self> {
        if channels == 0 || channels > sites {
            return Err(Error::InvalidParameter(format!(
                "destination bank size S = {channels} must lie in 1..={sites}"
            )));
        }
        let dest_sites = index::sample(rng, sites, channels).into_vec();
        let mut assignment = Vec::with_capacity(sites * channels);
        for q in 0..sites {
            for &p in &dest_sites {
                // always consume a draw so self-pairs do not shift the stream
                let pick = rng.random_range(0..bank.len()) as u32;
                assignment.push(if q == p { None } else { Some(pick) });
            }
        }
        Ok(Self::from_assignment(bank, sites, dest_sites, assignment))
    }

    /// Every route is the identity.
    pub fn identity(m: usize, sites: usize, dest_sites: Vec<usize>) -> Self {
        let channels = dest_sites.len();
        let ident: Vec<u16> = (0..m as u16).collect();
        DestinationBank {
            m,
            sites,
            assignment: vec![None; sites * channels],
            forward: ident.repeat(sites * channels),
            inverse: ident.repeat(sites * channels),
            dest_sites,
        }
    }

    pub fn from_assignment(
        bank: &PermutationBank,
        sites: usize,
        dest_sites: Vec<usize>,
        assignment: Vec<Option<u32>>,
    ) -> Self {
        let m = bank.m();
        let channels = dest_sites.len();
        assert_eq!(assignment.len(), sites * channels);
        let mut forward = Vec::with_capacity(sites * channels * m);
        let mut inverse = Vec::with_capacity(sites * channels * m);
        for (idx, a) in assignment.iter().enumerate() {
            let q = idx / channels;
            let s = idx % channels;
            match a {
                Some(b) if q != dest_sites[s] => {
                    let b = *b as usize;
                    forward.extend(bank.perms()[b].as_slice().iter().map(|&x| x as u16));
                    inverse.extend(bank.inverse(b).as_slice().iter().map(|&x| x as u16));
                }
                _ => {
                    forward.extend(0..m as u16);
                    inverse.extend(0..m as u16);
                }
            }
        }
        DestinationBank {
            m,
            sites,
            dest_sites,
            assignment,
            forward,
            inverse,
        }
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn sites(&self) -> usize {
        self.sites
    }

    pub fn channels(&self) -> usize {
        self.dest_sites.len()
    }

    pub fn dest_sites(&self) -> &[usize] {
        &self.dest_sites
    }

    /// Bank index used for `(q, s)`; `None` marks the identity self-route.
    pub fn assignment(&self, q: usize, s: usize) -> Option<u32> {
        self.assignment[q * self.channels() + s]
    }

    /// Cover read for source `q` when channel `s` evaluates destination copy `alpha`.
    #[inline]
    pub fn route(&self, q: usize, s: usize, alpha: usize) -> usize {
        self.forward[(q * self.channels() + s) * self.m + alpha] as usize
    }

    /// Destination copy whose channel-`s` context reads cover `gamma` of source `q`.
    #[inline]
    pub fn route_inverse(&self, q: usize, s: usize, gamma: usize) -> usize {
        self.inverse[(q * self.channels() + s) * self.m + gamma] as usize
    }

    /// All `(s, alpha)` slices that read `w_q^(gamma)`: one per channel.
    pub fn affected_slices(&self, q: usize, gamma: usize) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.channels()).map(move |s| (s, self.route_inverse(q, s, gamma)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::routing::MixKernel;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn self_routes_are_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let bank = PermutationBank::sample(&MixKernel::uniform(4).unwrap(), 10, 4, &mut rng).unwrap();
        let dest = DestinationBank::sample(&bank, 30, 5, &mut rng).unwrap();
        assert_eq!(dest.channels(), 5);
        let mut uniq = dest.dest_sites().to_vec();
        uniq.sort();
        uniq.dedup();
        assert_eq!(uniq.len(), 5);
        for (s, &p) in dest.dest_sites().iter().enumerate() {
            assert_eq!(dest.assignment(p, s), None);
            for a in 0..4 {
                assert_eq!(dest.route(p, s, a), a);
            }
        }
    }

    #[test]
    fn inverse_routes_invert_forward_routes() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let bank = PermutationBank::sample(&MixKernel::uniform(3).unwrap(), 6, 8, &mut rng).unwrap();
        let dest = DestinationBank::sample(&bank, 12, 4, &mut rng).unwrap();
        for q in 0..12 {
            for s in 0..4 {
                for a in 0..3 {
                    assert_eq!(dest.route_inverse(q, s, dest.route(q, s, a)), a);
                }
                if let Some(b) = dest.assignment(q, s) {
                    let p = &bank.perms()[b as usize];
                    for a in 0..3 {
                        assert_eq!(dest.route(q, s, a), p.apply(a));
                    }
                }
            }
            let slices: Vec<_> = dest.affected_slices(q, 1).collect();
            assert_eq!(slices.len(), 4);
        }
    }

    #[test]
    fn oversized_bank_is_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let bank = PermutationBank::sample(&MixKernel::uniform(2).unwrap(), 2, 0, &mut rng).unwrap();
        assert!(DestinationBank::sample(&bank, 3, 4, &mut rng).is_err());
        assert!(DestinationBank::sample(&bank, 3, 0, &mut rng).is_err());
    }
}
