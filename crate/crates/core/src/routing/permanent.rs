use super::MixKernel;
use crate::error::{Error, Result};

/// Largest kernel size accepted by [`permanent`].
pub const MAX_PERMANENT_SIZE: usize = 14;

/// Exact permanent by Ryser's inclusion-exclusion formula, walking column
/// subsets in Gray-code order so each step updates the row sums in `O(M)`.
pub fn permanent(q: &MixKernel) -> Result<f64> {
    let m = q.m();
    if m > MAX_PERMANENT_SIZE {
        return Err(Error::UnsupportedSize {
            size: m,
            max: MAX_PERMANENT_SIZE,
        });
    }
    Ok(ryser(q.entries(), m))
}

pub(crate) fn ryser(a: &[f64], n: usize) -> f64 {
    debug_assert_eq!(a.len(), n * n);
    let mut row_sums = vec![0.0f64; n];
    let mut in_set = vec![false; n];
    let mut total = 0.0;
    // subset k (k >= 1) toggles column trailing_zeros(k)
    for k in 1u64..(1u64 << n) {
        let col = k.trailing_zeros() as usize;
        let sign = if in_set[col] { -1.0 } else { 1.0 };
        in_set[col] = !in_set[col];
        for (r, s) in row_sums.iter_mut().enumerate() {
            *s += sign * a[r * n + col];
        }
        let size = (k ^ (k >> 1)).count_ones();
        let prod: f64 = row_sums.iter().product();
        if size % 2 == 0 {
            total += prod;
        } else {
            total -= prod;
        }
    }
    if n % 2 == 0 {
        total
    } else {
        -total
    }
}
