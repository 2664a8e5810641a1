use super::MixKernel;
use crate::error::{Error, Result};

/// Alternate row and column normalization until every row and column sum is
/// within `tol` of one. Returns `D1 Q D2` with the family tag of the input.
pub fn sinkhorn_balance(q: &MixKernel, max_iters: usize, tol: f64) -> Result<MixKernel> {
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter(format!("tolerance must be > 0, got {tol}")));
    }
    let m = q.m();
    let mut a = q.entries().to_vec();
    if let Some(r) = (0..m).find(|&r| a[r * m..(r + 1) * m].iter().sum::<f64>() <= 0.0) {
        return Err(Error::InvalidInput(format!("zero row {r} cannot be balanced")));
    }
    if let Some(c) = (0..m).find(|&c| (0..m).map(|r| a[r * m + c]).sum::<f64>() <= 0.0) {
        return Err(Error::InvalidInput(format!("zero column {c} cannot be balanced")));
    }

    let mut deviation = max_deviation(&a, m);
    for _ in 0..max_iters {
        if deviation < tol {
            return Ok(q.with_entries(a));
        }
        for row in a.chunks_exact_mut(m) {
            let s: f64 = row.iter().sum();
            row.iter_mut().for_each(|x| *x /= s);
        }
        for c in 0..m {
            let s: f64 = (0..m).map(|r| a[r * m + c]).sum();
            for r in 0..m {
                a[r * m + c] /= s;
            }
        }
        deviation = max_deviation(&a, m);
    }
    if deviation < tol {
        return Ok(q.with_entries(a));
    }
    Err(Error::Convergence {
        iterations: max_iters,
        deviation,
    })
}

fn max_deviation(a: &[f64], m: usize) -> f64 {
    let mut dev = 0.0f64;
    for r in 0..m {
        let s: f64 = a[r * m..(r + 1) * m].iter().sum();
        dev = dev.max((s - 1.0).abs());
    }
    for c in 0..m {
        let s: f64 = (0..m).map(|r| a[r * m + c]).sum();
        dev = dev.max((s - 1.0).abs());
    }
    dev
}
