//! Mean, standard error and 95% intervals over trial metrics.

use statrs::distribution::{ContinuousCDF, Normal, StudentsT};

/// Below this many finite rows the interval uses a t quantile.
pub const T_CORRECTION_BELOW: usize = 30;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Summary {
    /// rows in the group, diverged included
    pub n: usize,
    /// rows with a finite metric
    pub n_finite: usize,
    pub mean: f64,
    /// population standard deviation (divisor `n_finite`)
    pub sd: f64,
    /// `sd / sqrt(n_finite)`
    pub se: f64,
    /// 95% half-width; NaN below two finite rows
    pub ci95: f64,
}

impl Summary {
    /// `mean ± ci95` with four decimals.
    pub fn display(&self) -> String {
        if self.n_finite == 0 {
            return "empty".into();
        }
        format!("{:.4} ± {:.4}", self.mean, self.ci95)
    }

    pub fn is_empty(&self) -> bool {
        self.n_finite == 0
    }
}

/// Two-sided 95% quantile: Student t with `n - 1` degrees of freedom below
/// [`T_CORRECTION_BELOW`] rows, standard normal from there on.
pub fn quantile_95(n: usize) -> f64 {
    if n < 2 {
        return f64::NAN;
    }
    if n < T_CORRECTION_BELOW {
        StudentsT::new(0.0, 1.0, (n - 1) as f64)
            .expect("dof >= 1")
            .inverse_cdf(0.975)
    } else {
        Normal::new(0.0, 1.0).expect("unit normal").inverse_cdf(0.975)
    }
}

/// Summarize a group of metric values. Non-finite values count as
/// diverged rows and are left out of every statistic.
pub fn summarize(values: &[f64]) -> Summary {
    let finite: Vec<f64> = values.iter().copied().filter(|v| v.is_finite()).collect();
    let k = finite.len();
    let mean = if k == 0 { f64::NAN } else { finite.iter().sum::<f64>() / k as f64 };
    let (sd, se, ci95) = if k < 2 {
        (f64::NAN, f64::NAN, f64::NAN)
    } else {
        let var = finite.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / k as f64;
        let sd = var.sqrt();
        let se = sd / (k as f64).sqrt();
        (sd, se, quantile_95(k) * se)
    };
    Summary {
        n: values.len(),
        n_finite: k,
        mean,
        sd,
        se,
        ci95,
    }
}
