//! Extreme-value machinery: attraction families and their normalizing
//! constants, random-index limits, tail-dominance classification, the
//! two threshold rules, and the exponential miss bound.

use rand::Rng;
use rand::RngCore;

use crate::dists::Law;
use crate::error::{Error, Result};
use crate::numeric::{find_root, quadrature};

/// Limit family for normalized maxima of unbounded-support laws.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EvtFamily {
    Gumbel,
    /// Frechet with shape `xi > 0`.
    Frechet { xi: f64 },
}

/// Limiting cdf `G(x)` of the family.
pub fn limiting_cdf(family: EvtFamily, x: f64) -> f64 {
    match family {
        EvtFamily::Gumbel => (-(-x).exp()).exp(),
        EvtFamily::Frechet { xi } => {
            if x <= 0.0 {
                0.0
            } else {
                (-x.powf(-xi)).exp()
            }
        }
    }
}

/// Normalizing constants `a_n > 0`, `b_n` of a law at index `n`.
///
/// Gumbel: `b_n = F^{-1}(1 - 1/n)`, `a_n = 1/(n f(b_n))`.
/// Frechet: `b_n = 0`, `a_n = F^{-1}(1 - 1/n)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormConstants {
    pub a_n: f64,
    pub b_n: f64,
}

pub fn norm_constants(law: &Law, n: u64, family: EvtFamily) -> Result<NormConstants> {
    if n < 2 {
        return Err(Error::invalid_input("normalizing constants need n >= 2"));
    }
    let q = law.isf(1.0 / n as f64)?;
    match family {
        EvtFamily::Gumbel => {
            let f = law.density(q);
            if !(f > f64::MIN_POSITIVE) {
                return Err(Error::numeric(
                    format!("density vanishes at the 1-1/n quantile {q}"),
                    None,
                ));
            }
            Ok(NormConstants { a_n: 1.0 / (n as f64 * f), b_n: q })
        }
        EvtFamily::Frechet { xi } => {
            if !(xi > 0.0) {
                return Err(Error::invalid_parameter("Frechet shape must be positive"));
            }
            Ok(NormConstants { a_n: q, b_n: 0.0 })
        }
    }
}

/// Law of the positive limit `R` of `N/nu`, with an exact, quadrature,
/// or sample-mean expectation operator depending on the variant.
#[derive(Debug, Clone)]
pub enum SizeLimitLaw {
    /// `R = r` almost surely (deterministic and plain-Poisson sizing).
    PointMass(f64),
    /// Finitely many atoms `(value, probability)`.
    Discrete(Vec<(f64, f64)>),
    /// Uniform density on `(lo, hi)` (uniform thinning).
    Uniform { lo: f64, hi: f64 },
    /// Stored draws; expectations become sample means.
    Empirical(Vec<f64>),
}

impl SizeLimitLaw {
    fn validate(&self) -> Result<()> {
        match self {
            SizeLimitLaw::PointMass(r) => {
                if !(*r > 0.0) {
                    return Err(Error::invalid_parameter("R must be positive"));
                }
            }
            SizeLimitLaw::Discrete(atoms) => {
                if atoms.is_empty() {
                    return Err(Error::invalid_input("empty discrete size-limit law"));
                }
                let mass: f64 = atoms.iter().map(|&(_, p)| p).sum();
                if (mass - 1.0).abs() > 1e-12 || atoms.iter().any(|&(r, p)| r <= 0.0 || p < 0.0) {
                    return Err(Error::invalid_parameter(
                        "discrete size-limit law needs positive atoms with unit mass",
                    ));
                }
            }
            SizeLimitLaw::Uniform { lo, hi } => {
                if !(0.0 < *lo && lo < hi) {
                    return Err(Error::invalid_parameter(format!(
                        "uniform size-limit law needs 0 < lo < hi, got ({lo}, {hi})"
                    )));
                }
            }
            SizeLimitLaw::Empirical(draws) => {
                if draws.is_empty() || draws.iter().any(|&r| r <= 0.0) {
                    return Err(Error::invalid_input(
                        "empirical size-limit law needs positive draws",
                    ));
                }
            }
        }
        Ok(())
    }

    /// `E[g(R)]`.
    pub fn expect<F: Fn(f64) -> f64>(&self, g: F) -> Result<f64> {
        self.validate()?;
        match self {
            SizeLimitLaw::PointMass(r) => Ok(g(*r)),
            SizeLimitLaw::Discrete(atoms) => {
                Ok(atoms.iter().map(|&(r, p)| p * g(r)).sum())
            }
            SizeLimitLaw::Uniform { lo, hi } => {
                let w = hi - lo;
                quadrature(|r| g(r) / w, *lo, *hi, 1e-12)
            }
            SizeLimitLaw::Empirical(draws) => {
                Ok(draws.iter().map(|&r| g(r)).sum::<f64>() / draws.len() as f64)
            }
        }
    }

    pub fn sample(&self, rng: &mut dyn RngCore) -> f64 {
        match self {
            SizeLimitLaw::PointMass(r) => *r,
            SizeLimitLaw::Discrete(atoms) => {
                let mut u: f64 = rng.gen();
                for &(r, p) in atoms {
                    if u < p {
                        return r;
                    }
                    u -= p;
                }
                atoms.last().expect("non-empty").0
            }
            SizeLimitLaw::Uniform { lo, hi } => rng.gen_range(*lo..*hi),
            SizeLimitLaw::Empirical(draws) => draws[rng.gen_range(0..draws.len())],
        }
    }
}

/// Random-index attraction limit `E[G(x)^R]`.
pub fn random_index_limit(family: EvtFamily, r: &SizeLimitLaw, x: f64) -> Result<f64> {
    let g = limiting_cdf(family, x);
    if g == 0.0 {
        return Ok(0.0);
    }
    let lg = g.ln();
    r.expect(|rho| (rho * lg).exp())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TailDominance {
    Right,
    Left,
    Undetermined,
}

/// Classify which tail of `law` dominates, by evaluating the ratio
/// `sf(x) / cdf(-x)` on the quantile grid `x_k = isf(10^-k)`, k = 2..12.
/// Ratios climbing past 1e3 classify as right-dominant, falling below
/// 1e-3 as left-dominant; anything else (including numeric trouble) is
/// undetermined.
pub fn tail_dominance(law: &Law) -> TailDominance {
    let mut ratios = Vec::with_capacity(11);
    for k in 2..=12 {
        let q = 10f64.powi(-k);
        let x = match law.isf(q) {
            Ok(x) => x,
            Err(_) => return TailDominance::Undetermined,
        };
        let num = law.sf(x);
        let den = law.cdf(-x);
        let ratio = if den == 0.0 {
            if num == 0.0 {
                return TailDominance::Undetermined;
            }
            f64::INFINITY
        } else {
            num / den
        };
        ratios.push(ratio);
    }
    let increasing = ratios.windows(2).all(|w| w[1] >= w[0] * (1.0 - 1e-9));
    let decreasing = ratios.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-9));
    let last = *ratios.last().expect("non-empty");
    if increasing && last > 1e3 {
        TailDominance::Right
    } else if decreasing && last < 1e-3 {
        TailDominance::Left
    } else {
        TailDominance::Undetermined
    }
}

/// Solve `G(-gamma) = alpha_tilde` for the unit-scale threshold:
/// `log log(1/at)` for Gumbel, `-(log(1/at))^{-1/xi}` for Frechet.
pub fn gamma_from_alpha_tilde(family: EvtFamily, alpha_tilde: f64) -> f64 {
    let l = (1.0 / alpha_tilde).ln();
    match family {
        EvtFamily::Gumbel => l.ln(),
        EvtFamily::Frechet { xi } => -l.powf(-1.0 / xi),
    }
}

/// Solve `E[at^{R0}] = alpha` for `at` on (0, 1); the map is strictly
/// increasing so the root is unique.
pub fn alpha_tilde_from_alpha(r0: &SizeLimitLaw, alpha: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::invalid_parameter(format!(
            "target false alarm must lie in (0,1), got {alpha}"
        )));
    }
    let map = |at: f64| -> Result<f64> { r0.expect(|r| (r * at.ln()).exp()) };
    // bracket: E[at^R] -> 0 as at -> 0 and -> 1 as at -> 1
    let f = |at: f64| map(at).unwrap_or(f64::NAN) - alpha;
    let root = find_root(f, 1e-300, 1.0 - 1e-16, 1e-14)?;
    if !root.is_finite() {
        return Err(Error::numeric("alpha-tilde inversion diverged", None));
    }
    Ok(root)
}

/// Asymptotic threshold `gamma_nu = a_nu * gamma - b_nu`, with the
/// constants taken from the H0-side law of `-min Z` at index `nu`.
pub fn threshold_asymptotic(constants: &NormConstants, gamma: f64) -> f64 {
    constants.a_n * gamma - constants.b_n
}

/// Refined quantile threshold `gamma_nu = F_Z^{-1}(1 - at^{1/nu}; H0)`.
/// Works for censored H0 laws too: the target probability falls in a
/// continuous stretch of the cdf.
pub fn threshold_refined(z_law_h0: &Law, nu: u64, alpha_tilde: f64) -> Result<f64> {
    if !(alpha_tilde > 0.0 && alpha_tilde < 1.0) || nu < 1 {
        return Err(Error::invalid_parameter(
            "refined threshold needs alpha_tilde in (0,1) and nu >= 1",
        ));
    }
    // 1 - at^{1/nu} without cancellation
    let p = -(alpha_tilde.ln() / nu as f64).exp_m1();
    z_law_h0.quantile(p)
}

/// Exponential miss bound `e^{gamma_nu}` (l-MO shift-in-mean with a
/// data-independent size).
pub fn miss_bound(gamma_nu: f64) -> f64 {
    gamma_nu.exp()
}
