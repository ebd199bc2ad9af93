//! Goodness-of-fit helpers shared by the test suites: one-sample
//! Kolmogorov-Smirnov statistics and Pearson chi-square.

use statrs::distribution::{ChiSquared, ContinuousCDF};

/// One-sample KS statistic of `samples` against `cdf`. Sorts in place.
/// For laws with atoms the statistic is the usual sup over the sorted
/// points evaluated against the right-continuous cdf, which makes the
/// asymptotic critical value conservative.
pub fn ks_statistic<F: Fn(f64) -> f64>(samples: &mut [f64], cdf: F) -> f64 {
    samples.sort_by(|a, b| a.partial_cmp(b).expect("NaN sample"));
    let n = samples.len() as f64;
    let mut sup = 0.0f64;
    for (i, &x) in samples.iter().enumerate() {
        let f = cdf(x);
        sup = sup.max((i as f64 / n - f).abs()).max(((i + 1) as f64 / n - f).abs());
    }
    sup
}

/// Asymptotic two-sided KS critical value at level `alpha` for sample
/// size `n`: `sqrt(-ln(alpha/2)/2) / sqrt(n)`.
pub fn ks_critical(n: usize, alpha: f64) -> f64 {
    (-(alpha / 2.0).ln() / 2.0).sqrt() / (n as f64).sqrt()
}

/// Pearson chi-square statistic for observed counts against expected
/// counts (same length, expected all positive).
pub fn chi2_statistic(observed: &[u64], expected: &[f64]) -> f64 {
    assert_eq!(observed.len(), expected.len());
    observed
        .iter()
        .zip(expected)
        .map(|(&o, &e)| {
            let d = o as f64 - e;
            d * d / e
        })
        .sum()
}

/// Upper quantile of the chi-square law with `df` degrees of freedom.
pub fn chi2_critical(df: f64, alpha: f64) -> f64 {
    ChiSquared::new(df).expect("df > 0").inverse_cdf(1.0 - alpha)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ks_of_perfect_grid_is_small() {
        let n = 1000;
        let mut xs: Vec<f64> = (0..n).map(|i| (i as f64 + 0.5) / n as f64).collect();
        let d = ks_statistic(&mut xs, |x| x.clamp(0.0, 1.0));
        assert!(d <= 0.5 / n as f64 + 1e-12);
    }

    #[test]
    fn ks_critical_99_matches_table() {
        // classical asymptotic coefficient 1.6276 at alpha = 0.01
        let c = ks_critical(1, 0.01);
        assert!((c - 1.6276) .abs() < 1e-3);
    }

    #[test]
    fn chi2_critical_reference() {
        // chi2(0.99; 9 df) = 21.666 from standard tables
        assert!((chi2_critical(9.0, 0.01) - 21.666).abs() < 1e-2);
    }
}
