//! One-dimensional probability laws: densities, cdfs, tail-accurate
//! quantiles, and samplers. Laws are immutable after construction and
//! shared via [`Law`] across concurrent workers; samplers draw from an
//! externally supplied rng stream and keep no internal state.

use std::sync::Arc;

use rand::Rng;
use rand::RngCore;
use statrs::function::erf;

use crate::error::{Error, Result};
use crate::numeric::{find_root, find_root_expanding};

/// The two states of nature of a binary test.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Hypothesis {
    H0,
    H1,
}

impl Hypothesis {
    pub fn index(self) -> usize {
        match self {
            Hypothesis::H0 => 0,
            Hypothesis::H1 => 1,
        }
    }

    pub fn other(self) -> Self {
        match self {
            Hypothesis::H0 => Hypothesis::H1,
            Hypothesis::H1 => Hypothesis::H0,
        }
    }
}

/// A scalar probability law: a continuous part described by `density`,
/// plus at most one atom, located at zero (produced by censoring).
///
/// `cdf` is right-continuous; `sf(x) = 1 - cdf(x)` but implementations
/// override it to stay accurate deep in the right tail, and `isf`
/// (inverse survival) mirrors `quantile` for upper-tail arguments far
/// beyond f64 resolution of `1 - p`.
pub trait ScalarLaw: Send + Sync {
    /// Density of the continuous part.
    fn density(&self, x: f64) -> f64;
    fn cdf(&self, x: f64) -> f64;
    fn sf(&self, x: f64) -> f64 {
        1.0 - self.cdf(x)
    }
    /// Generalized inverse of `cdf` on (0, 1).
    fn quantile(&self, p: f64) -> Result<f64>;
    /// `x` such that `sf(x) = q`; accurate for tiny `q`.
    fn isf(&self, q: f64) -> Result<f64> {
        self.quantile(1.0 - q)
    }
    fn sample(&self, rng: &mut dyn RngCore) -> f64;
    /// Probability mass sitting exactly at zero.
    fn atom_at_zero(&self) -> f64 {
        0.0
    }
    /// Hints for the support of the continuous part.
    fn support(&self) -> (f64, f64) {
        (f64::NEG_INFINITY, f64::INFINITY)
    }
}

/// Shared, immutable handle to a law.
pub type Law = Arc<dyn ScalarLaw>;

fn check_prob_arg(p: f64, name: &str) -> Result<()> {
    if p > 0.0 && p < 1.0 {
        Ok(())
    } else {
        Err(Error::invalid_input(format!("{name} must lie in (0,1), got {p}")))
    }
}

// ---------------------------------------------------------------------------
// Gaussian
// ---------------------------------------------------------------------------

const SQRT_2: f64 = std::f64::consts::SQRT_2;
const INV_SQRT_2PI: f64 = 0.39894228040143267794;

#[derive(Debug, Clone)]
pub struct Gaussian {
    mean: f64,
    sd: f64,
}

impl Gaussian {
    pub fn new(mean: f64, sd: f64) -> Result<Self> {
        if !mean.is_finite() || !sd.is_finite() || sd <= 0.0 {
            return Err(Error::invalid_parameter(format!(
                "gaussian needs finite mean and sd > 0, got mean={mean}, sd={sd}"
            )));
        }
        Ok(Gaussian { mean, sd })
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn sd(&self) -> f64 {
        self.sd
    }

    fn std(&self, x: f64) -> f64 {
        (x - self.mean) / self.sd
    }
}

/// Standard normal cdf via erfc: full relative accuracy in both tails.
pub(crate) fn std_normal_cdf(t: f64) -> f64 {
    0.5 * erf::erfc(-t / SQRT_2)
}

pub(crate) fn std_normal_sf(t: f64) -> f64 {
    0.5 * erf::erfc(t / SQRT_2)
}

pub(crate) fn std_normal_pdf(t: f64) -> f64 {
    INV_SQRT_2PI * (-0.5 * t * t).exp()
}

/// Lower-tail standard normal quantile, accurate for `p` down to ~1e-300.
/// Seeds from `erf_inv`/an asymptotic expansion and polishes with Newton
/// steps on log-cdf, which is well conditioned in the far tail.
pub(crate) fn std_normal_quantile_lower(p: f64) -> f64 {
    debug_assert!(p > 0.0 && p <= 0.5);
    let mut t = if p >= 1e-12 {
        -SQRT_2 * erf::erfc_inv(2.0 * p)
    } else {
        // asymptotic seed: p = Phi(t) ~ phi(t)/|t|
        let l = -p.ln();
        let mut u = (2.0 * l).sqrt();
        for _ in 0..4 {
            u = (2.0 * (l - (INV_SQRT_2PI / u).ln())).sqrt();
        }
        -u
    };
    // Newton on g(t) = ln Phi(t) - ln p; g'(t) = phi(t)/Phi(t)
    for _ in 0..3 {
        let c = std_normal_cdf(t);
        if c <= 0.0 {
            break;
        }
        let step = (c.ln() - p.ln()) * c / std_normal_pdf(t);
        if !step.is_finite() {
            break;
        }
        t -= step;
        if step.abs() < 1e-15 * t.abs().max(1.0) {
            break;
        }
    }
    t
}

impl ScalarLaw for Gaussian {
    fn density(&self, x: f64) -> f64 {
        std_normal_pdf(self.std(x)) / self.sd
    }

    fn cdf(&self, x: f64) -> f64 {
        std_normal_cdf(self.std(x))
    }

    fn sf(&self, x: f64) -> f64 {
        std_normal_sf(self.std(x))
    }

    fn quantile(&self, p: f64) -> Result<f64> {
        check_prob_arg(p, "quantile probability")?;
        let t = if p <= 0.5 {
            std_normal_quantile_lower(p)
        } else {
            -std_normal_quantile_lower(1.0 - p)
        };
        Ok(self.mean + self.sd * t)
    }

    fn isf(&self, q: f64) -> Result<f64> {
        check_prob_arg(q, "survival probability")?;
        let t = if q <= 0.5 {
            -std_normal_quantile_lower(q)
        } else {
            std_normal_quantile_lower(1.0 - q)
        };
        Ok(self.mean + self.sd * t)
    }

    fn sample(&self, rng: &mut dyn RngCore) -> f64 {
        let z: f64 = rng.sample(rand_distr::StandardNormal);
        self.mean + self.sd * z
    }
}

/// Gaussian law with the given mean and standard deviation.
pub fn gaussian(mean: f64, sd: f64) -> Result<Law> {
    Ok(Arc::new(Gaussian::new(mean, sd)?))
}

// ---------------------------------------------------------------------------
// Pareto
// ---------------------------------------------------------------------------

/// Pareto law on `x >= scale` with tail exponent `shape`.
#[derive(Debug, Clone)]
pub struct Pareto {
    scale: f64,
    shape: f64,
}

impl Pareto {
    pub fn new(scale: f64, shape: f64) -> Result<Self> {
        if !(scale > 0.0) || !(shape > 0.0) {
            return Err(Error::invalid_parameter(format!(
                "pareto needs scale > 0 and shape > 0, got scale={scale}, shape={shape}"
            )));
        }
        Ok(Pareto { scale, shape })
    }
}

impl ScalarLaw for Pareto {
    fn density(&self, x: f64) -> f64 {
        if x < self.scale {
            0.0
        } else {
            self.shape / self.scale * (x / self.scale).powf(-self.shape - 1.0)
        }
    }

    fn cdf(&self, x: f64) -> f64 {
        if x < self.scale {
            0.0
        } else {
            1.0 - (x / self.scale).powf(-self.shape)
        }
    }

    fn sf(&self, x: f64) -> f64 {
        if x < self.scale {
            1.0
        } else {
            (x / self.scale).powf(-self.shape)
        }
    }

    fn quantile(&self, p: f64) -> Result<f64> {
        check_prob_arg(p, "quantile probability")?;
        Ok(self.scale * (1.0 - p).powf(-1.0 / self.shape))
    }

    fn isf(&self, q: f64) -> Result<f64> {
        check_prob_arg(q, "survival probability")?;
        Ok(self.scale * q.powf(-1.0 / self.shape))
    }

    fn sample(&self, rng: &mut dyn RngCore) -> f64 {
        // 1 - U lies in (0, 1], avoiding powf(0)
        let u: f64 = 1.0 - rng.gen::<f64>();
        self.scale * u.powf(-1.0 / self.shape)
    }

    fn support(&self) -> (f64, f64) {
        (self.scale, f64::INFINITY)
    }
}

// ---------------------------------------------------------------------------
// Gaussian-Pareto mixture
// ---------------------------------------------------------------------------

/// Mixture `p * N(0, sigma) + (1 - p) * Pareto(theta, b)`.
#[derive(Debug, Clone)]
pub struct GaussParetoMixture {
    p: f64,
    gauss: Gaussian,
    pareto: Pareto,
}

impl GaussParetoMixture {
    pub fn new(p: f64, sigma: f64, theta: f64, b: f64) -> Result<Self> {
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::invalid_parameter(format!(
                "mixture weight must lie in (0,1), got {p}"
            )));
        }
        Ok(GaussParetoMixture {
            p,
            gauss: Gaussian::new(0.0, sigma)?,
            pareto: Pareto::new(theta, b)?,
        })
    }

    fn solve_quantile(&self, p: f64) -> Result<f64> {
        // bracket from the component quantiles, then Brent on the cdf
        let g = self.gauss.quantile(p)?;
        let lo = g.min(self.pareto.scale) - 1.0;
        let hi = if p > self.p {
            let pp = ((p - self.p) / (1.0 - self.p)).clamp(1e-300, 1.0 - 1e-16);
            g.max(self.pareto.quantile(pp)?) + 1.0
        } else {
            g.max(self.pareto.scale) + 1.0
        };
        let x = find_root(|x| self.cdf(x) - p, lo, hi, 1e-12)?;
        Ok(x)
    }
}

impl ScalarLaw for GaussParetoMixture {
    fn density(&self, x: f64) -> f64 {
        self.p * self.gauss.density(x) + (1.0 - self.p) * self.pareto.density(x)
    }

    fn cdf(&self, x: f64) -> f64 {
        self.p * self.gauss.cdf(x) + (1.0 - self.p) * (1.0 - self.pareto.sf(x))
    }

    fn sf(&self, x: f64) -> f64 {
        self.p * self.gauss.sf(x) + (1.0 - self.p) * self.pareto.sf(x)
    }

    fn quantile(&self, p: f64) -> Result<f64> {
        check_prob_arg(p, "quantile probability")?;
        self.solve_quantile(p)
    }

    fn isf(&self, q: f64) -> Result<f64> {
        check_prob_arg(q, "survival probability")?;
        if q >= 1e-10 {
            return self.solve_quantile(1.0 - q);
        }
        // Deep right tail: Pareto dominates. Solve ln sf(x) = ln q with a
        // Pareto-based seed, bisect in log-x space for robustness.
        let seed = self.pareto.isf((q / (1.0 - self.p)).min(0.5))?;
        let g = |t: f64| self.sf(t.exp()).ln() - q.ln();
        let t = find_root_expanding(g, (0.5 * seed).max(self.pareto.scale).ln(), (2.0 * seed).ln(), 1e-13)?;
        Ok(t.exp())
    }

    fn sample(&self, rng: &mut dyn RngCore) -> f64 {
        if rng.gen::<f64>() < self.p {
            self.gauss.sample(rng)
        } else {
            self.pareto.sample(rng)
        }
    }
}

/// Mixture of a centered Gaussian and a Pareto tail:
/// `p * N(0, sigma) + (1-p) * Pareto(theta, b)`.
pub fn gauss_pareto_mixture(p: f64, sigma: f64, theta: f64, b: f64) -> Result<Law> {
    Ok(Arc::new(GaussParetoMixture::new(p, sigma, theta, b)?))
}

// ---------------------------------------------------------------------------
// Negation
// ---------------------------------------------------------------------------

/// Law of `-X` for `X ~ inner`.
pub struct Negated {
    inner: Law,
}

impl ScalarLaw for Negated {
    fn density(&self, x: f64) -> f64 {
        self.inner.density(-x)
    }

    fn cdf(&self, x: f64) -> f64 {
        // Pr(-X <= x) = Pr(X >= -x); the only possible atom sits at zero.
        let mut c = self.inner.sf(-x);
        if x == 0.0 {
            c += self.inner.atom_at_zero();
        }
        c
    }

    fn sf(&self, x: f64) -> f64 {
        // Pr(-X > x) = Pr(X < -x)
        let mut s = self.inner.cdf(-x);
        if x == 0.0 {
            s -= self.inner.atom_at_zero();
        }
        s
    }

    fn quantile(&self, p: f64) -> Result<f64> {
        check_prob_arg(p, "quantile probability")?;
        if self.inner.atom_at_zero() == 0.0 {
            Ok(-self.inner.isf(p)?)
        } else {
            // fall back to the generalized inverse of the censored cdf
            let probe = -self.inner.isf(p.min(1.0 - p).max(1e-12))?;
            find_root_expanding(|x| self.cdf(x) - p, probe - 1.0, probe.abs() + 1.0, 1e-12)
        }
    }

    fn isf(&self, q: f64) -> Result<f64> {
        check_prob_arg(q, "survival probability")?;
        if self.inner.atom_at_zero() == 0.0 {
            Ok(-self.inner.quantile(q)?)
        } else {
            self.quantile(1.0 - q)
        }
    }

    fn sample(&self, rng: &mut dyn RngCore) -> f64 {
        -self.inner.sample(rng)
    }

    fn atom_at_zero(&self) -> f64 {
        self.inner.atom_at_zero()
    }

    fn support(&self) -> (f64, f64) {
        let (lo, hi) = self.inner.support();
        (-hi, -lo)
    }
}

/// Law of `-X`.
pub fn negate(law: &Law) -> Law {
    Arc::new(Negated { inner: Arc::clone(law) })
}

// ---------------------------------------------------------------------------
// Censoring: X mapped to 0 on |X| < theta_c
// ---------------------------------------------------------------------------

/// Law of `T(X)` under the censoring map `T(x) = x * 1{|x| >= theta_c}`:
/// the continuous part of `inner` truncated to `|x| >= theta_c`, plus an
/// atom at zero carrying the censored mass. The inner law must be
/// continuous.
pub struct Censored {
    inner: Law,
    theta_c: f64,
    atom: f64,
    cdf_left: f64, // inner cdf at -theta_c
    sf_right: f64, // inner sf at +theta_c
}

impl Censored {
    pub fn new(inner: &Law, theta_c: f64) -> Result<Self> {
        if !(theta_c > 0.0) || !theta_c.is_finite() {
            return Err(Error::invalid_parameter(format!(
                "censoring threshold must be positive and finite, got {theta_c}"
            )));
        }
        if inner.atom_at_zero() != 0.0 {
            return Err(Error::invalid_parameter(
                "censoring an already-censored law is not supported",
            ));
        }
        let cdf_left = inner.cdf(-theta_c);
        let sf_right = inner.sf(theta_c);
        let atom = (1.0 - cdf_left - sf_right).max(0.0);
        Ok(Censored { inner: Arc::clone(inner), theta_c, atom, cdf_left, sf_right })
    }
}

impl ScalarLaw for Censored {
    fn density(&self, x: f64) -> f64 {
        if x.abs() >= self.theta_c {
            self.inner.density(x)
        } else {
            0.0
        }
    }

    fn cdf(&self, x: f64) -> f64 {
        if x <= -self.theta_c {
            self.inner.cdf(x)
        } else if x < 0.0 {
            self.cdf_left
        } else if x < self.theta_c {
            self.cdf_left + self.atom
        } else {
            self.inner.cdf(x)
        }
    }

    fn sf(&self, x: f64) -> f64 {
        if x >= self.theta_c {
            self.inner.sf(x)
        } else if x >= 0.0 {
            self.sf_right
        } else if x > -self.theta_c {
            self.sf_right + self.atom
        } else {
            self.inner.sf(x)
        }
    }

    fn quantile(&self, p: f64) -> Result<f64> {
        check_prob_arg(p, "quantile probability")?;
        if p <= self.cdf_left {
            self.inner.quantile(p)
        } else if p <= self.cdf_left + self.atom {
            Ok(0.0)
        } else {
            self.inner.quantile(p)
        }
    }

    fn isf(&self, q: f64) -> Result<f64> {
        check_prob_arg(q, "survival probability")?;
        if q <= self.sf_right {
            self.inner.isf(q)
        } else if q <= self.sf_right + self.atom {
            Ok(0.0)
        } else {
            self.inner.isf(q)
        }
    }

    fn sample(&self, rng: &mut dyn RngCore) -> f64 {
        let x = self.inner.sample(rng);
        if x.abs() >= self.theta_c {
            x
        } else {
            0.0
        }
    }

    fn atom_at_zero(&self) -> f64 {
        self.atom
    }

    fn support(&self) -> (f64, f64) {
        self.inner.support()
    }
}

/// Censored version of `law` with threshold `theta_c`.
pub fn censored(law: &Law, theta_c: f64) -> Result<Law> {
    Ok(Arc::new(Censored::new(law, theta_c)?))
}
