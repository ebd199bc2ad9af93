//! Exact finite-n laws of the extreme statistics and of the winner
//! statistic, and the error probabilities obtained from them by
//! quadrature — including mixtures over a random network size.
//!
//! All densities are evaluated in log space where powers of near-one
//! cdfs appear, so n up to 1e6 stays stable.

use crate::dists::{Hypothesis, ScalarLaw};
use crate::error::{Error, Result};
use crate::numeric::quadrature;
use crate::policy::Policy;

/// Exact law of the winner statistic `M_n` for a fixed network size.
pub struct WinnerLaw<'a> {
    policy: &'a Policy,
    n: u64,
    hypothesis: Hypothesis,
}

impl<'a> WinnerLaw<'a> {
    pub fn new(policy: &'a Policy, n: u64, hypothesis: Hypothesis) -> Result<Self> {
        require_continuous(policy)?;
        if n < 1 {
            return Err(Error::invalid_input("network size must be >= 1"));
        }
        Ok(WinnerLaw { policy, n, hypothesis })
    }

    pub fn density(&self, x: f64) -> f64 {
        winner_density(&**self.policy.z_law(self.hypothesis), self.n, x)
    }
}

fn require_continuous(policy: &Policy) -> Result<()> {
    if policy.is_continuous() {
        Ok(())
    } else {
        Err(Error::unsupported_law(
            "exact order-statistics integrals need a continuous Z-law \
             (censoring produces an atom at zero)",
        ))
    }
}

/// `h_j(x) = F_Z(|x|) - F_Z(-|x|)`: the chance that a single transformed
/// sample has modulus below `|x|`.
pub fn modulus_cdf(policy: &Policy, h: Hypothesis, x: f64) -> f64 {
    let z = policy.z_law(h);
    let ax = x.abs();
    (1.0 - z.sf(ax) - z.cdf(-ax)).max(0.0)
}

/// log of `h_j(x)`, via log1p of the two tail masses.
#[inline]
fn log_modulus_cdf(z: &dyn ScalarLaw, x: f64) -> f64 {
    let ax = x.abs();
    let tails = z.sf(ax) + z.cdf(-ax);
    if tails >= 1.0 {
        f64::NEG_INFINITY
    } else {
        (-tails).ln_1p()
    }
}

#[inline]
fn winner_density(z: &dyn ScalarLaw, n: u64, x: f64) -> f64 {
    let f = z.density(x);
    if n == 1 {
        return f;
    }
    if f == 0.0 {
        return 0.0;
    }
    let lh = log_modulus_cdf(z, x);
    if lh == f64::NEG_INFINITY {
        return 0.0;
    }
    n as f64 * ((n - 1) as f64 * lh).exp() * f
}

/// Density of `M+ = max Z` at `x`: `n F_Z^{n-1}(x) f_Z(x)`.
pub fn pdf_max(policy: &Policy, n: u64, h: Hypothesis, x: f64) -> Result<f64> {
    require_continuous(policy)?;
    if n < 1 {
        return Err(Error::invalid_input("network size must be >= 1"));
    }
    let z = policy.z_law(h);
    let f = z.density(x);
    if n == 1 || f == 0.0 {
        return Ok(f);
    }
    let lf = {
        let s = z.sf(x);
        if s >= 1.0 {
            f64::NEG_INFINITY
        } else {
            (-s).ln_1p()
        }
    };
    if lf == f64::NEG_INFINITY {
        return Ok(0.0);
    }
    Ok(n as f64 * ((n - 1) as f64 * lf).exp() * f)
}

/// Density of `M- = -min Z` at `x`: `n (1 - F_Z(-x))^{n-1} f_Z(-x)`.
pub fn pdf_negmin(policy: &Policy, n: u64, h: Hypothesis, x: f64) -> Result<f64> {
    require_continuous(policy)?;
    if n < 1 {
        return Err(Error::invalid_input("network size must be >= 1"));
    }
    let z = policy.z_law(h);
    let f = z.density(-x);
    if n == 1 || f == 0.0 {
        return Ok(f);
    }
    let s = z.sf(-x);
    if s <= 0.0 {
        return Ok(0.0);
    }
    Ok(n as f64 * ((n - 1) as f64 * s.ln()).exp() * f)
}

/// Density of the winner statistic `M_n` at `x`:
/// `n h_j^{n-1}(x) f_Z(x)`.
pub fn pdf_winner(policy: &Policy, n: u64, h: Hypothesis, x: f64) -> Result<f64> {
    require_continuous(policy)?;
    if n < 1 {
        return Err(Error::invalid_input("network size must be >= 1"));
    }
    Ok(winner_density(&**policy.z_law(h), n, x))
}

/// Integration grid for the winner density: quantile-anchored split
/// points so the adaptive panels land on both modulus-extreme bumps.
fn winner_anchors(z: &dyn ScalarLaw, n: u64) -> Result<(f64, Vec<f64>, f64)> {
    let nf = n as f64;
    // neglected winner mass beyond [lo, hi] is at most 2e-14
    let eps_tail = (1e-14 / nf).max(1e-300);
    let hi = z.isf(eps_tail)?;
    let lo = z.quantile_lower(eps_tail)?;
    let mut probs = vec![1e-6 / nf, 0.01 / nf, (1.0 / nf).min(0.5), (10.0 / nf).min(0.4), 0.45];
    probs.dedup();
    let mut anchors = vec![0.0];
    for p in probs {
        anchors.push(z.isf(p)?);
        anchors.push(z.quantile_lower(p)?);
    }
    anchors.retain(|a| a.is_finite() && *a > lo && *a < hi);
    anchors.sort_by(|a, b| a.partial_cmp(b).unwrap());
    anchors.dedup();
    Ok((lo, anchors, hi))
}

// Lower-tail counterpart of `isf`, going through the upper tail of the
// negated law so precision survives tiny probabilities.
trait LowerTail {
    fn quantile_lower(&self, p: f64) -> Result<f64>;
}

impl LowerTail for dyn ScalarLaw + '_ {
    fn quantile_lower(&self, p: f64) -> Result<f64> {
        if p >= 1e-10 {
            self.quantile(p)
        } else {
            // solve cdf(x) = p by expanding bracket in log space of cdf
            let seed = self.quantile(1e-10)?;
            crate::numeric::find_root_expanding(
                |x| {
                    let c = self.cdf(x);
                    if c <= 0.0 {
                        -800.0 - p.ln()
                    } else {
                        c.ln() - p.ln()
                    }
                },
                seed - 1.0,
                seed,
                1e-10,
            )
        }
    }
}

fn integrate_winner(
    policy: &Policy,
    n: u64,
    h: Hypothesis,
    from: f64,
    to: f64,
) -> Result<f64> {
    let z = policy.z_law(h);
    let (lo, anchors, hi) = winner_anchors(&**z, n)?;
    let a = from.max(lo);
    let b = to.min(hi);
    if !(a < b) {
        return Ok(0.0);
    }
    let mut cuts = vec![a];
    cuts.extend(anchors.iter().copied().filter(|&t| t > a && t < b));
    cuts.push(b);
    let mut total = 0.0;
    for w in cuts.windows(2) {
        total += quadrature(|x| winner_density(&**z, n, x), w[0], w[1], 5e-10)?;
    }
    Ok(total)
}

/// Exact `(alpha, beta)` for a deterministic network of size `n` at
/// threshold `gamma`, by quadrature of the winner density:
/// `alpha = Pr(M_n >= gamma; H0)`, `beta = Pr(M_n < gamma; H1)`.
pub fn error_probs_exact(policy: &Policy, n: u64, gamma: f64) -> Result<(f64, f64)> {
    require_continuous(policy)?;
    if n < 1 {
        return Err(Error::invalid_input("network size must be >= 1"));
    }
    let alpha = integrate_winner(policy, n, Hypothesis::H0, gamma, f64::INFINITY)?;
    let beta = integrate_winner(policy, n, Hypothesis::H1, f64::NEG_INFINITY, gamma)?;
    Ok((alpha.clamp(0.0, 1.0), beta.clamp(0.0, 1.0)))
}

/// `(alpha, beta)` for a random network size with pmf `size_pmf`
/// (pairs `(n, Pr(N=n))`, cumulative mass >= 1 - 1e-10). The `N = 0`
/// term enters through the all-censored convention `M = 0`.
pub fn error_probs_mixed(
    policy: &Policy,
    size_pmf: &[(u64, f64)],
    gamma: f64,
) -> Result<(f64, f64)> {
    require_continuous(policy)?;
    let mass: f64 = size_pmf.iter().map(|&(_, p)| p).sum();
    if !(mass > 1.0 - 1e-10 && mass <= 1.0 + 1e-9) {
        return Err(Error::invalid_input(format!(
            "size pmf mass {mass} not within 1e-10 of 1"
        )));
    }
    if size_pmf.iter().any(|&(_, p)| p < 0.0) {
        return Err(Error::invalid_input("size pmf has negative weights"));
    }
    let mut alpha = 0.0;
    let mut beta = 0.0;
    for &(n, p) in size_pmf {
        if p == 0.0 {
            continue;
        }
        if n == 0 {
            // empty network: M = 0, decide H1 iff 0 >= gamma
            if 0.0 >= gamma {
                alpha += p;
            } else {
                beta += p;
            }
        } else {
            let (a, b) = error_probs_exact(policy, n, gamma)?;
            alpha += p * a;
            beta += p * b;
        }
    }
    Ok((alpha.min(1.0), beta.min(1.0)))
}

/// Winner density of `M_N` for a data-independent random size:
/// `sum_n Pr(N=n) f_{M_n}(x)`, the `n = 0` atom excluded.
pub fn pdf_winner_mixed(
    policy: &Policy,
    size_pmf: &[(u64, f64)],
    h: Hypothesis,
    x: f64,
) -> Result<f64> {
    require_continuous(policy)?;
    let z = policy.z_law(h);
    let f = z.density(x);
    if f == 0.0 {
        return Ok(0.0);
    }
    let lh = log_modulus_cdf(&**z, x);
    let mut acc = 0.0;
    for &(n, p) in size_pmf {
        if n == 0 || p == 0.0 {
            continue;
        }
        let pow = if n == 1 { 1.0 } else { ((n - 1) as f64 * lh).exp() };
        acc += p * n as f64 * pow;
    }
    Ok(acc * f)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dists::{gauss_pareto_mixture, gaussian, negate};
    use crate::policy::{censoring_policy, gaussian_llr_policy, identity_policy};

    fn sym_gaussian_policy() -> Policy {
        identity_policy(gaussian(-1.0, 1.0).unwrap(), gaussian(1.0, 1.0).unwrap())
    }

    #[test]
    fn single_sensor_reduces_to_z_density() {
        let pol = sym_gaussian_policy();
        for i in 0..60 {
            let x = -5.0 + i as f64 * 0.17;
            let f = pol.z_law(Hypothesis::H0).density(x);
            assert!((pdf_max(&pol, 1, Hypothesis::H0, x).unwrap() - f).abs() < 1e-15);
            assert!((pdf_winner(&pol, 1, Hypothesis::H0, x).unwrap() - f).abs() < 1e-15);
            let fneg = pol.z_law(Hypothesis::H0).density(-x);
            assert!((pdf_negmin(&pol, 1, Hypothesis::H0, x).unwrap() - fneg).abs() < 1e-15);
        }
    }

    #[test]
    fn pdf_max_two_standard_normals_at_zero() {
        let pol = identity_policy(gaussian(0.0, 1.0).unwrap(), gaussian(0.0, 1.0).unwrap());
        let v = pdf_max(&pol, 2, Hypothesis::H0, 0.0).unwrap();
        assert!((v - 0.3989422804014327).abs() < 1e-12);
    }

    #[test]
    fn symmetric_law_negmin_equals_max() {
        let pol = identity_policy(gaussian(0.0, 1.0).unwrap(), gaussian(0.0, 1.0).unwrap());
        for i in 0..40 {
            let x = -4.0 + 0.2 * i as f64;
            let a = pdf_max(&pol, 7, Hypothesis::H0, x).unwrap();
            let b = pdf_negmin(&pol, 7, Hypothesis::H0, x).unwrap();
            assert!((a - b).abs() < 1e-13);
        }
    }

    #[test]
    fn winner_vanishes_at_zero_for_n_ge_2() {
        let pol = sym_gaussian_policy();
        assert_eq!(pdf_winner(&pol, 2, Hypothesis::H1, 0.0).unwrap(), 0.0);
        assert_eq!(pdf_winner(&pol, 9, Hypothesis::H1, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn densities_normalize_n10() {
        let pol = sym_gaussian_policy();
        let h = Hypothesis::H0;
        let max_mass = quadrature(
            |x| pdf_max(&pol, 10, h, x).unwrap(),
            -9.0,
            9.0,
            1e-10,
        )
        .unwrap();
        assert!((max_mass - 1.0).abs() < 1e-6, "max mass {max_mass}");
        let negmin_mass = quadrature(
            |x| pdf_negmin(&pol, 10, h, x).unwrap(),
            -9.0,
            9.0,
            1e-10,
        )
        .unwrap();
        assert!((negmin_mass - 1.0).abs() < 1e-6);
        let winner_mass = integrate_winner(&pol, 10, h, f64::NEG_INFINITY, f64::INFINITY).unwrap();
        assert!((winner_mass - 1.0).abs() < 1e-6, "winner mass {winner_mass}");
    }

    #[test]
    fn winner_mass_stays_normalized_for_large_n() {
        let pol = sym_gaussian_policy();
        for n in [100u64, 10_000, 1_000_000] {
            let m = integrate_winner(&pol, n, Hypothesis::H1, f64::NEG_INFINITY, f64::INFINITY)
                .unwrap();
            assert!((m - 1.0).abs() < 1e-6, "n={n}: mass {m}");
        }
    }

    #[test]
    fn single_sensor_error_anchor() {
        // theta0 = theta1 = sigma = 1, gamma = 0, n = 1: alpha = beta = Phi(-1)
        let pol = sym_gaussian_policy();
        let (a, b) = error_probs_exact(&pol, 1, 0.0).unwrap();
        assert!((a - 0.15865525393145707).abs() < 1e-8, "alpha {a}");
        assert!((b - 0.15865525393145707).abs() < 1e-8, "beta {b}");
    }

    #[test]
    fn symmetric_model_alpha_equals_beta() {
        let pol = sym_gaussian_policy();
        for n in [2u64, 10, 100] {
            let (a, b) = error_probs_exact(&pol, n, 0.0).unwrap();
            assert!((a - b).abs() < 1e-9, "n={n}: {a} vs {b}");
        }
    }

    #[test]
    fn errors_shrink_with_network_size() {
        let pol = sym_gaussian_policy();
        let (a10, b10) = error_probs_exact(&pol, 10, 0.0).unwrap();
        let (a100, b100) = error_probs_exact(&pol, 100, 0.0).unwrap();
        assert!(a100 + b100 < a10 + b10);
    }

    #[test]
    fn atomic_law_rejected() {
        let w = gauss_pareto_mixture(0.5, 1.0, 1.0, 1.0).unwrap();
        let pol = censoring_policy(negate(&w), w, 1.0).unwrap();
        assert!(matches!(
            error_probs_exact(&pol, 5, 0.0),
            Err(Error::UnsupportedLaw { .. })
        ));
        assert!(pdf_winner(&pol, 5, Hypothesis::H0, 1.0).is_err());
    }

    #[test]
    fn mixed_point_mass_equals_exact() {
        let pol = sym_gaussian_policy();
        let exact = error_probs_exact(&pol, 17, 0.1).unwrap();
        let mixed = error_probs_mixed(&pol, &[(17, 1.0)], 0.1).unwrap();
        assert!((exact.0 - mixed.0).abs() < 1e-12);
        assert!((exact.1 - mixed.1).abs() < 1e-12);
    }

    #[test]
    fn mixed_two_point_is_average() {
        let pol = sym_gaussian_policy();
        let (a10, b10) = error_probs_exact(&pol, 10, 0.0).unwrap();
        let (a100, b100) = error_probs_exact(&pol, 100, 0.0).unwrap();
        let (am, bm) = error_probs_mixed(&pol, &[(10, 0.5), (100, 0.5)], 0.0).unwrap();
        assert!((am - 0.5 * (a10 + a100)).abs() < 1e-10);
        assert!((bm - 0.5 * (b10 + b100)).abs() < 1e-10);
    }

    #[test]
    fn mixed_rejects_leaky_pmf() {
        let pol = sym_gaussian_policy();
        assert!(error_probs_mixed(&pol, &[(10, 0.7)], 0.0).is_err());
    }

    #[test]
    fn empty_network_term_follows_zero_convention() {
        let pol = sym_gaussian_policy();
        let (a, _) = error_probs_exact(&pol, 5, -1.0).unwrap();
        // gamma < 0: the N=0 slice decides H1, inflating alpha by its mass
        let (am, _) = error_probs_mixed(&pol, &[(0, 0.25), (5, 0.75)], -1.0).unwrap();
        assert!((am - (0.25 + 0.75 * a)).abs() < 1e-10);
        // gamma > 0: the N=0 slice decides H0, inflating beta
        let (_, b) = error_probs_exact(&pol, 5, 1.0).unwrap();
        let (_, bm) = error_probs_mixed(&pol, &[(0, 0.25), (5, 0.75)], 1.0).unwrap();
        assert!((bm - (0.25 + 0.75 * b)).abs() < 1e-10);
    }

    #[test]
    fn llr_mixed_log_likelihood_is_identity() {
        // log [f_{M_N}(x;H1) / f_{M_N}(x;H0)] = x when N is independent
        // of the data, for the shift-in-mean l-MO policy
        let pol = gaussian_llr_policy(1.0, 1.0, 1.0).unwrap();
        // crude Poisson(12) pmf, truncated wide
        let lam = 12.0f64;
        let mut pmf = Vec::new();
        let mut logp = -lam;
        for n in 0..80u64 {
            if n > 0 {
                logp += lam.ln() - (n as f64).ln();
            }
            pmf.push((n, logp.exp()));
        }
        for i in 0..50 {
            let x = -4.0 + 0.16 * i as f64;
            if x.abs() < 0.05 {
                continue; // density vanishes at 0 for n >= 2
            }
            let f1 = pdf_winner_mixed(&pol, &pmf, Hypothesis::H1, x).unwrap();
            let f0 = pdf_winner_mixed(&pol, &pmf, Hypothesis::H0, x).unwrap();
            let llr = (f1 / f0).ln();
            assert!((llr - x).abs() < 1e-6, "x={x}: llr={llr}");
        }
    }

    #[test]
    fn h_functions_agree_for_shift_in_mean() {
        // h1 = h0 for any shift-in-mean l-MO policy
        for (t0, t1, s) in [(1.0, 1.0, 1.0), (0.5, 2.0, 1.5), (1.5, 2.0, 0.8)] {
            let pol = gaussian_llr_policy(t0, t1, s).unwrap();
            for i in 0..=200 {
                let x = -10.0 + 0.1 * i as f64;
                let h0 = modulus_cdf(&pol, Hypothesis::H0, x);
                let h1 = modulus_cdf(&pol, Hypothesis::H1, x);
                assert!((h0 - h1).abs() < 1e-8, "({t0},{t1},{s}) at x={x}: {h0} vs {h1}");
            }
        }
    }
}
