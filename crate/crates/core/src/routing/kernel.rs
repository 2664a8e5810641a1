//! Cover-to-cover mixing kernels.

use std::fmt;

use crate::error::{Error, Result};

/// Default Sinkhorn tolerance on row and column sums.
pub const SINKHORN_TOL: f64 = 1e-8;
/// Default Sinkhorn iteration cap.
pub const SINKHORN_MAX_ITERS: usize = 10_000;

/// Generating family of a [`MixKernel`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum KernelFamily {
    GaussianRing { mu: f64, sigma: f64 },
    Uniform,
    Identity,
    Explicit,
}

impl fmt::Display for KernelFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            KernelFamily::GaussianRing { mu, sigma } => write!(f, "ring(mu={mu},sigma={sigma})"),
            KernelFamily::Uniform => f.write_str("uniform"),
            KernelFamily::Identity => f.write_str("identity"),
            KernelFamily::Explicit => f.write_str("explicit"),
        }
    }
}

/// Nonnegative `M x M` kernel `Q`. Row `alpha` weights the covers a source in
/// cover `alpha` may be routed to; `Q[alpha][beta]` enters the permutation law
/// through `prod_alpha Q[alpha][rho(alpha)]`.
#[derive(Clone, Debug, PartialEq)]
pub struct MixKernel {
    m: usize,
    entries: Vec<f64>,
    family: KernelFamily,
}

impl MixKernel {
    /// Build from explicit row-major entries.
    pub fn explicit(m: usize, entries: Vec<f64>) -> Result<Self> {
        if m == 0 {
            return Err(Error::InvalidParameter("kernel size M must be >= 1".into()));
        }
        if entries.len() != m * m {
            return Err(Error::InvalidInput(format!(
                "expected {} kernel entries, got {}",
                m * m,
                entries.len()
            )));
        }
        if entries.iter().any(|&q| !q.is_finite() || q < 0.0) {
            return Err(Error::InvalidInput("kernel entries must be finite and >= 0".into()));
        }
        let kernel = MixKernel {
            m,
            entries,
            family: KernelFamily::Explicit,
        };
        kernel.check_support()?;
        Ok(kernel)
    }

    pub fn from_rows(rows: &[&[f64]]) -> Result<Self> {
        let m = rows.len();
        if rows.iter().any(|r| r.len() != m) {
            return Err(Error::InvalidInput("kernel rows must form a square matrix".into()));
        }
        Self::explicit(m, rows.iter().flat_map(|r| r.iter().copied()).collect())
    }

    /// Doubly stochastic uniform kernel, every entry `1/M`.
    pub fn uniform(m: usize) -> Result<Self> {
        if m == 0 {
            return Err(Error::InvalidParameter("kernel size M must be >= 1".into()));
        }
        Ok(MixKernel {
            m,
            entries: vec![1.0 / m as f64; m * m],
            family: KernelFamily::Uniform,
        })
    }

    pub fn identity(m: usize) -> Result<Self> {
        if m == 0 {
            return Err(Error::InvalidParameter("kernel size M must be >= 1".into()));
        }
        let mut entries = vec![0.0; m * m];
        for a in 0..m {
            entries[a * m + a] = 1.0;
        }
        Ok(MixKernel {
            m,
            entries,
            family: KernelFamily::Identity,
        })
    }

    /// Directional Gaussian ring: `Q[a][b] = exp(-d(b, a + mu)^2 / (2 sigma^2))`
    /// where `d` is the signed wrap-around distance on `Z_M`, wrapped into
    /// `(-M/2, M/2]`. `sigma = +inf` gives the uniform kernel.
    ///
    /// The result is not balanced; see [`MixKernel::balanced`].
    pub fn gaussian_ring(m: usize, mu: f64, sigma: f64) -> Result<Self> {
        if m == 0 {
            return Err(Error::InvalidParameter("kernel size M must be >= 1".into()));
        }
        if sigma.is_nan() || sigma <= 0.0 {
            return Err(Error::InvalidParameter(format!("sigma must be > 0, got {sigma}")));
        }
        if !mu.is_finite() {
            return Err(Error::InvalidParameter(format!("mu must be finite, got {mu}")));
        }
        let family = KernelFamily::GaussianRing { mu, sigma };
        if sigma.is_infinite() {
            return Ok(MixKernel {
                m,
                entries: vec![1.0 / m as f64; m * m],
                family,
            });
        }
        let mut entries = Vec::with_capacity(m * m);
        for a in 0..m {
            let target = a as f64 + mu;
            for b in 0..m {
                let d = ring_distance(b as f64, target, m);
                entries.push((-d * d / (2.0 * sigma * sigma)).exp());
            }
        }
        let kernel = MixKernel { m, entries, family };
        kernel.check_support()?;
        Ok(kernel)
    }

    /// Sinkhorn-balanced copy with the default tolerance. Uniform and identity
    /// kernels are already doubly stochastic and are returned as-is.
    pub fn balanced(&self) -> Result<Self> {
        match self.family {
            KernelFamily::Uniform | KernelFamily::Identity => Ok(self.clone()),
            _ => super::sinkhorn_balance(self, SINKHORN_MAX_ITERS, SINKHORN_TOL),
        }
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn family(&self) -> KernelFamily {
        self.family
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.entries[row * self.m + col]
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn row(&self, row: usize) -> &[f64] {
        &self.entries[row * self.m..(row + 1) * self.m]
    }

    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.m).map(|r| self.row(r).iter().sum()).collect()
    }

    pub fn col_sums(&self) -> Vec<f64> {
        let mut sums = vec![0.0; self.m];
        for r in 0..self.m {
            for (s, q) in sums.iter_mut().zip(self.row(r)) {
                *s += q;
            }
        }
        sums
    }

    pub(crate) fn with_entries(&self, entries: Vec<f64>) -> Self {
        MixKernel {
            m: self.m,
            entries,
            family: self.family,
        }
    }

    fn check_support(&self) -> Result<()> {
        let rows = self.row_sums();
        let cols = self.col_sums();
        if let Some(r) = rows.iter().position(|&s| s <= 0.0) {
            return Err(Error::InvalidInput(format!("kernel row {r} has no positive entry")));
        }
        if let Some(c) = cols.iter().position(|&s| s <= 0.0) {
            return Err(Error::InvalidInput(format!("kernel column {c} has no positive entry")));
        }
        Ok(())
    }
}

/// Signed distance from `target` to `pos` on a ring of `m` sites, in `(-m/2, m/2]`.
pub(crate) fn ring_distance(pos: f64, target: f64, m: usize) -> f64 {
    let len = m as f64;
    let mut d = (pos - target).rem_euclid(len);
    if d > len / 2.0 {
        d -= len;
    }
    d
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row_argmax(k: &MixKernel, r: usize) -> usize {
        let row = k.row(r);
        (0..row.len())
            .max_by(|&a, &b| row[a].partial_cmp(&row[b]).unwrap())
            .unwrap()
    }

    #[test]
    fn infinite_sigma_is_uniform() {
        let k = MixKernel::gaussian_ring(4, 0.0, f64::INFINITY).unwrap();
        let first = k.get(0, 0);
        assert!(k.entries().iter().all(|&q| q == first));
        assert_eq!(k.entries().len(), 16);
    }

    #[test]
    fn vanishing_sigma_peaks_on_diagonal() {
        let k = MixKernel::gaussian_ring(4, 0.0, 1e-3).unwrap().balanced().unwrap();
        for a in 0..4 {
            assert_eq!(row_argmax(&k, a), a);
        }
    }

    #[test]
    fn shifted_ring_peaks_one_ahead() {
        // d(b, a+1)^2 is 0 at b = a+1, 1 at b = a, a+2, 4 at b = a+3 (wrapped to -2 -> 2).
        let k = MixKernel::gaussian_ring(4, 1.0, 0.5).unwrap();
        for a in 0..4 {
            assert_eq!(row_argmax(&k, a), (a + 1) % 4);
            let expect = [(-2.0f64).exp(), 1.0, (-2.0f64).exp(), (-8.0f64).exp()];
            for (j, e) in expect.iter().enumerate() {
                let b = (a + j) % 4;
                assert!((k.get(a, b) - e).abs() < 1e-15);
            }
        }
        let bal = k.balanced().unwrap();
        for a in 0..4 {
            assert_eq!(row_argmax(&bal, a), (a + 1) % 4);
        }
    }

    #[test]
    fn ring_distance_wraps_into_half_open_interval() {
        assert_eq!(ring_distance(0.0, 2.0, 4), 2.0);
        assert_eq!(ring_distance(3.0, 0.0, 4), -1.0);
        assert_eq!(ring_distance(1.0, 3.5, 4), 1.5);
        assert!((ring_distance(0.0, 2.5, 5) - 2.5).abs() < 1e-15);
    }

    #[test]
    fn invalid_parameters_are_rejected() {
        assert!(matches!(
            MixKernel::gaussian_ring(0, 0.0, 1.0),
            Err(Error::InvalidParameter(_))
        ));
        assert!(matches!(
            MixKernel::gaussian_ring(3, 0.0, 0.0),
            Err(Error::InvalidParameter(_))
        ));
        assert!(matches!(
            MixKernel::gaussian_ring(3, 0.0, -1.0),
            Err(Error::InvalidParameter(_))
        ));
        assert!(MixKernel::from_rows(&[&[1.0, 0.0], &[1.0, 0.0]]).is_err());
    }

    #[test]
    fn identity_family_has_no_off_diagonal_mass() {
        let k = MixKernel::identity(5).unwrap();
        for a in 0..5 {
            for b in 0..5 {
                if a != b {
                    assert!(k.get(a, b) < 1e-12 * k.get(a, a));
                }
            }
        }
    }
}
