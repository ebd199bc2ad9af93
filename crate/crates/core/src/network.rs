//! Network-size models (deterministic, mixed-Poisson thinning,
//! energy-stopped sampling) and per-trial sensor draws including clock
//! offsets.
//!
//! Draw functions are pure given an rng stream; the Monte Carlo engine
//! hands each trial its own stream. When offsets are active the draw
//! order per sensor is observation first, offset second, so that
//! streaming and materialized paths consume the stream identically.

use std::sync::Arc;

use rand::distributions::Distribution;
use rand::Rng;
use rand::RngCore;
use rand_distr::Poisson;
use statrs::function::gamma::gamma_lr;

use crate::dists::{Hypothesis, Law};
use crate::error::{Error, Result};
use crate::evt::SizeLimitLaw;
use crate::numeric::quadrature;
use crate::policy::Policy;

/// The stopping statistic of energy-stopped sampling. `SumOfSquares`
/// is evaluated incrementally; a custom statistic is recomputed on the
/// whole prefix at every step.
#[derive(Clone)]
pub enum EnergyStatistic {
    SumOfSquares,
    Custom(Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>),
}

impl std::fmt::Debug for EnergyStatistic {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            EnergyStatistic::SumOfSquares => write!(f, "SumOfSquares"),
            EnergyStatistic::Custom(_) => write!(f, "Custom(..)"),
        }
    }
}

/// How the number of active sensors is generated, and how it scales
/// with the design parameter `nu`.
#[derive(Clone)]
pub enum SizeModel {
    /// Exactly `n` sensors.
    Deterministic { n: u64 },
    /// `N ~ Poisson(nu Q / E(Q))` with `Q = eq + U(-delta/2, delta/2)`,
    /// redrawn independently each trial.
    MixedPoisson { nu: f64, eq: f64, delta: f64 },
    /// `N = inf{n : phi(S_1..S_n) > nu}`, observations `X_i = S_i + W_i`.
    EnergyStopped {
        nu: f64,
        s_laws: [Law; 2],
        w_law: Law,
        phi: EnergyStatistic,
    },
}

impl std::fmt::Debug for SizeModel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SizeModel::Deterministic { n } => write!(f, "Deterministic({n})"),
            SizeModel::MixedPoisson { nu, eq, delta } => {
                write!(f, "MixedPoisson(nu={nu}, eq={eq}, delta={delta})")
            }
            SizeModel::EnergyStopped { nu, phi, .. } => {
                write!(f, "EnergyStopped(nu={nu}, phi={phi:?})")
            }
        }
    }
}

impl SizeModel {
    pub fn deterministic(n: u64) -> SizeModel {
        SizeModel::Deterministic { n }
    }

    pub fn mixed_poisson(nu: f64, eq: f64, delta: f64) -> Result<SizeModel> {
        if !(nu > 0.0) || !nu.is_finite() {
            return Err(Error::invalid_parameter(format!("nu must be positive, got {nu}")));
        }
        if !(eq > 0.0 && eq <= 1.0) {
            return Err(Error::invalid_parameter(format!(
                "E(Q) must lie in (0, 1], got {eq}"
            )));
        }
        if !(delta >= 0.0 && delta < 2.0 * eq) || eq + delta / 2.0 > 1.0 {
            return Err(Error::invalid_parameter(format!(
                "Delta must keep Q = E(Q) + U(-Delta/2, Delta/2) inside (0, 1]; \
                 got E(Q)={eq}, Delta={delta}"
            )));
        }
        Ok(SizeModel::MixedPoisson { nu, eq, delta })
    }

    pub fn energy_stopped(nu: f64, s_law_h0: Law, s_law_h1: Law, w_law: Law) -> Result<SizeModel> {
        if !(nu > 0.0) || !nu.is_finite() {
            return Err(Error::invalid_parameter(format!("nu must be positive, got {nu}")));
        }
        Ok(SizeModel::EnergyStopped {
            nu,
            s_laws: [s_law_h0, s_law_h1],
            w_law,
            phi: EnergyStatistic::SumOfSquares,
        })
    }

    pub fn nu(&self) -> f64 {
        match self {
            SizeModel::Deterministic { n } => *n as f64,
            SizeModel::MixedPoisson { nu, .. } => *nu,
            SizeModel::EnergyStopped { nu, .. } => *nu,
        }
    }

    /// Same model at a different design parameter.
    pub fn with_nu(&self, nu: f64) -> Result<SizeModel> {
        match self {
            SizeModel::Deterministic { .. } => Ok(SizeModel::Deterministic { n: nu.round() as u64 }),
            SizeModel::MixedPoisson { eq, delta, .. } => {
                SizeModel::mixed_poisson(nu, *eq, *delta)
            }
            SizeModel::EnergyStopped { s_laws, w_law, phi, .. } => {
                if !(nu > 0.0) {
                    return Err(Error::invalid_parameter("nu must be positive"));
                }
                Ok(SizeModel::EnergyStopped {
                    nu,
                    s_laws: s_laws.clone(),
                    w_law: w_law.clone(),
                    phi: phi.clone(),
                })
            }
        }
    }

    /// True when `N` is generated independently of the observations.
    pub fn is_data_independent(&self) -> bool {
        !matches!(self, SizeModel::EnergyStopped { .. })
    }

    /// The limit law of `N/nu` under `h`. For energy-stopped sampling
    /// with the sum-of-squares statistic this is the renewal limit
    /// `1/E[S^2]`, computed by quadrature against the S-law.
    pub fn limit_law(&self, h: Hypothesis) -> Result<SizeLimitLaw> {
        match self {
            SizeModel::Deterministic { .. } => Ok(SizeLimitLaw::PointMass(1.0)),
            SizeModel::MixedPoisson { eq, delta, .. } => {
                if *delta == 0.0 {
                    Ok(SizeLimitLaw::PointMass(1.0))
                } else {
                    Ok(SizeLimitLaw::Uniform {
                        lo: 1.0 - delta / (2.0 * eq),
                        hi: 1.0 + delta / (2.0 * eq),
                    })
                }
            }
            SizeModel::EnergyStopped { s_laws, phi, .. } => {
                if !matches!(phi, EnergyStatistic::SumOfSquares) {
                    return Err(Error::unsupported_law(
                        "limit law is only known for the sum-of-squares statistic",
                    ));
                }
                let s = &s_laws[h.index()];
                let lo = s.quantile(1e-14)?;
                let hi = s.isf(1e-14)?;
                let second_moment = quadrature(|x| x * x * s.density(x), lo, hi, 1e-10)?;
                if !(second_moment > 0.0) {
                    return Err(Error::numeric("E[S^2] is not positive", None));
                }
                Ok(SizeLimitLaw::PointMass(1.0 / second_moment))
            }
        }
    }
}

/// One realized network: active size, observations, and (when present)
/// the latent phenomenon samples and per-sensor clock offsets.
#[derive(Debug, Clone, PartialEq)]
pub struct SensorDraw {
    pub n_active: usize,
    pub x_samples: Vec<f64>,
    pub s_samples: Option<Vec<f64>>,
    pub offsets: Option<Vec<f64>>,
}

/// Draw the active sensor count. Energy-stopped models couple `N` to
/// the samples, so they must go through [`draw_network`] instead.
pub fn draw_size(model: &SizeModel, _h: Hypothesis, rng: &mut dyn RngCore) -> Result<u64> {
    match model {
        SizeModel::Deterministic { n } => Ok(*n),
        SizeModel::MixedPoisson { nu, eq, delta } => {
            let q = if *delta > 0.0 {
                eq + rng.gen_range(-delta / 2.0..delta / 2.0)
            } else {
                *eq
            };
            let lambda = nu * q / eq;
            let poisson =
                Poisson::new(lambda).map_err(|e| Error::invalid_parameter(e.to_string()))?;
            Ok(poisson.sample(rng) as u64)
        }
        SizeModel::EnergyStopped { .. } => Err(Error::invalid_input(
            "energy-stopped size is coupled to the samples; use draw_network",
        )),
    }
}

/// Draw a full network realization under `h`: size, observations, and
/// offsets `U_i ~ U(-clock_delta/2, clock_delta/2)` when
/// `clock_delta > 0`.
pub fn draw_network(
    model: &SizeModel,
    policy: &Policy,
    h: Hypothesis,
    clock_delta: f64,
    rng: &mut dyn RngCore,
) -> Result<SensorDraw> {
    if !(clock_delta >= 0.0) {
        return Err(Error::invalid_parameter("clock_delta must be >= 0"));
    }
    let with_offsets = clock_delta > 0.0;
    match model {
        SizeModel::EnergyStopped { nu, s_laws, w_law, phi } => {
            let s_law = &s_laws[h.index()];
            let mut s_samples = Vec::new();
            let mut x_samples = Vec::new();
            let mut offsets = if with_offsets { Some(Vec::new()) } else { None };
            let mut acc = 0.0;
            loop {
                let s = s_law.sample(rng);
                s_samples.push(s);
                let w = w_law.sample(rng);
                x_samples.push(s + w);
                if let Some(u) = offsets.as_mut() {
                    u.push(rng.gen_range(-clock_delta / 2.0..clock_delta / 2.0));
                }
                let energy = match phi {
                    EnergyStatistic::SumOfSquares => {
                        acc += s * s;
                        acc
                    }
                    EnergyStatistic::Custom(f) => f(&s_samples),
                };
                if energy > *nu {
                    break;
                }
            }
            Ok(SensorDraw {
                n_active: x_samples.len(),
                x_samples,
                s_samples: Some(s_samples),
                offsets,
            })
        }
        _ => {
            let n = draw_size(model, h, rng)? as usize;
            let x_law = policy.x_law(h);
            let mut x_samples = Vec::with_capacity(n);
            let mut offsets = if with_offsets { Some(Vec::with_capacity(n)) } else { None };
            for _ in 0..n {
                x_samples.push(x_law.sample(rng));
                if let Some(u) = offsets.as_mut() {
                    u.push(rng.gen_range(-clock_delta / 2.0..clock_delta / 2.0));
                }
            }
            Ok(SensorDraw { n_active: n, x_samples, s_samples: None, offsets })
        }
    }
}

/// Marginal pmf of `N`, truncated once the cumulative mass reaches
/// `1 - 1e-10` (window: mean +/- 12 standard deviations). Only
/// data-independent models have a policy-free pmf.
pub fn size_pmf(model: &SizeModel) -> Result<Vec<(u64, f64)>> {
    match model {
        SizeModel::Deterministic { n } => Ok(vec![(*n, 1.0)]),
        SizeModel::MixedPoisson { nu, eq, delta } => {
            if *delta == 0.0 {
                poisson_pmf_window(*nu)
            } else {
                // Pr(N = n) = int Poisson(n; nu r) dr / (rhi - rlo)
                //           = [P(n+1, nu rhi) - P(n+1, nu rlo)] / (nu (rhi - rlo))
                // with P the regularized lower incomplete gamma.
                let rlo = 1.0 - delta / (2.0 * eq);
                let rhi = 1.0 + delta / (2.0 * eq);
                let sd = (nu * rhi).sqrt();
                let lo = ((nu * rlo - 12.0 * sd).floor()).max(0.0) as u64;
                let hi = (nu * rhi + 12.0 * sd).ceil() as u64;
                let norm = 1.0 / (nu * (rhi - rlo));
                let mut pmf = Vec::with_capacity((hi - lo + 1) as usize);
                let mut mass = 0.0;
                for n in lo..=hi {
                    let p =
                        (gamma_lr((n + 1) as f64, nu * rhi) - gamma_lr((n + 1) as f64, nu * rlo))
                            * norm;
                    let p = p.max(0.0);
                    mass += p;
                    pmf.push((n, p));
                }
                if mass < 1.0 - 1e-10 {
                    return Err(Error::numeric(
                        format!("mixed-Poisson pmf mass {mass} below truncation target"),
                        Some(mass),
                    ));
                }
                Ok(pmf)
            }
        }
        SizeModel::EnergyStopped { .. } => Err(Error::unsupported_law(
            "energy-stopped size has no observation-free pmf",
        )),
    }
}

fn poisson_pmf_window(lambda: f64) -> Result<Vec<(u64, f64)>> {
    let sd = lambda.sqrt();
    let lo = ((lambda - 12.0 * sd).floor()).max(0.0) as u64;
    let hi = (lambda + 12.0 * sd).ceil().max(8.0) as u64;
    let mut pmf = Vec::with_capacity((hi - lo + 1) as usize);
    let mut mass = 0.0;
    for n in lo..=hi {
        let logp = n as f64 * lambda.ln()
            - lambda
            - statrs::function::gamma::ln_gamma(n as f64 + 1.0);
        let p = logp.exp();
        mass += p;
        pmf.push((n, p));
    }
    if mass < 1.0 - 1e-10 {
        return Err(Error::numeric(
            format!("Poisson pmf mass {mass} below truncation target"),
            Some(mass),
        ));
    }
    Ok(pmf)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dists::{gaussian, ScalarLaw};
    use crate::policy::identity_policy;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::sync::Arc;

    fn dummy_policy() -> Policy {
        identity_policy(gaussian(-1.0, 1.0).unwrap(), gaussian(1.0, 1.0).unwrap())
    }

    #[test]
    fn deterministic_size() {
        let m = SizeModel::deterministic(7);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..20 {
            assert_eq!(draw_size(&m, Hypothesis::H0, &mut rng).unwrap(), 7);
        }
    }

    #[test]
    fn mixed_poisson_validation() {
        assert!(SizeModel::mixed_poisson(100.0, 0.5, 0.0).is_ok());
        assert!(SizeModel::mixed_poisson(100.0, 0.5, 0.5).is_ok());
        assert!(SizeModel::mixed_poisson(100.0, 0.0, 0.0).is_err());
        assert!(SizeModel::mixed_poisson(100.0, 0.5, 1.0).is_err()); // Q can hit 0
        assert!(SizeModel::mixed_poisson(100.0, 0.9, 0.4).is_err()); // Q can exceed 1
        assert!(SizeModel::mixed_poisson(-5.0, 0.5, 0.0).is_err());
    }

    #[test]
    fn plain_poisson_when_delta_zero() {
        let m = SizeModel::mixed_poisson(50.0, 0.5, 0.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let trials = 200_000;
        let mut sum = 0.0;
        let mut sumsq = 0.0;
        for _ in 0..trials {
            let n = draw_size(&m, Hypothesis::H0, &mut rng).unwrap() as f64;
            sum += n;
            sumsq += n * n;
        }
        let mean = sum / trials as f64;
        let var = sumsq / trials as f64 - mean * mean;
        // Poisson(50): mean = var = 50; 3-sigma bands
        assert!((mean - 50.0).abs() < 3.0 * (50.0f64 / trials as f64).sqrt());
        assert!((var - 50.0).abs() < 1.0);
    }

    #[test]
    fn thinned_mean_stays_nu() {
        let m = SizeModel::mixed_poisson(200.0, 0.5, 0.5).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let trials = 100_000;
        let mut sum = 0.0;
        for _ in 0..trials {
            sum += draw_size(&m, Hypothesis::H0, &mut rng).unwrap() as f64;
        }
        let mean = sum / trials as f64;
        // Var(N) = nu + nu^2 Var(R); Var(R) = (delta/eq)^2/12 = 1/12
        let sd = (200.0f64 + 200.0f64 * 200.0 / 12.0).sqrt();
        assert!((mean - 200.0).abs() < 3.0 * sd / (trials as f64).sqrt(), "mean {mean}");
    }

    struct ConstantLaw(f64);
    impl ScalarLaw for ConstantLaw {
        fn density(&self, _x: f64) -> f64 {
            0.0
        }
        fn cdf(&self, x: f64) -> f64 {
            if x >= self.0 {
                1.0
            } else {
                0.0
            }
        }
        fn quantile(&self, _p: f64) -> crate::error::Result<f64> {
            Ok(self.0)
        }
        fn sample(&self, _rng: &mut dyn RngCore) -> f64 {
            self.0
        }
    }

    #[test]
    fn energy_stop_counts_the_crossing_sample() {
        // forced S = (1, 1, 1, ...) with nu = 2.5: running energy
        // 1, 2, 3 first exceeds at the third sample
        let ones: Law = Arc::new(ConstantLaw(1.0));
        let w: Law = Arc::new(ConstantLaw(0.0));
        let m = SizeModel::energy_stopped(2.5, ones.clone(), ones, w).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let draw = draw_network(&m, &dummy_policy(), Hypothesis::H1, 0.0, &mut rng).unwrap();
        assert_eq!(draw.n_active, 3);
        assert_eq!(draw.s_samples.as_ref().unwrap().len(), 3);
        assert_eq!(draw.x_samples, vec![1.0, 1.0, 1.0]);
    }

    #[test]
    fn energy_stop_size_errors_through_draw_size() {
        let g = gaussian(1.0, 1.0).unwrap();
        let m = SizeModel::energy_stopped(10.0, g.clone(), g.clone(), g).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        assert!(draw_size(&m, Hypothesis::H0, &mut rng).is_err());
    }

    #[test]
    fn renewal_limit_of_network_size() {
        // S ~ N(theta, 1) with theta = 1: N/nu -> 1/(theta^2 + 1) = 0.5
        let s = gaussian(1.0, 1.0).unwrap();
        let w = gaussian(0.0, 1.0).unwrap();
        let m = SizeModel::energy_stopped(1000.0, s.clone(), s, w).unwrap();
        let lim = match m.limit_law(Hypothesis::H1).unwrap() {
            SizeLimitLaw::PointMass(r) => r,
            other => panic!("expected point mass, got {other:?}"),
        };
        assert!((lim - 0.5).abs() < 1e-9);
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let trials = 2000;
        let mut acc = 0.0;
        for _ in 0..trials {
            let d = draw_network(&m, &dummy_policy(), Hypothesis::H1, 0.0, &mut rng).unwrap();
            acc += d.n_active as f64 / 1000.0;
        }
        let mean = acc / trials as f64;
        // generous envelope: per-trial sd of N/nu is ~0.027 here
        assert!((mean - 0.5).abs() < 4.0 * 0.03 / (trials as f64).sqrt(), "mean {mean}");
    }

    #[test]
    fn offsets_only_when_requested() {
        let m = SizeModel::deterministic(5);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let d = draw_network(&m, &dummy_policy(), Hypothesis::H0, 0.0, &mut rng).unwrap();
        assert!(d.offsets.is_none());
        let d = draw_network(&m, &dummy_policy(), Hypothesis::H0, 0.3, &mut rng).unwrap();
        let u = d.offsets.unwrap();
        assert_eq!(u.len(), 5);
        assert!(u.iter().all(|v| v.abs() <= 0.15));
    }

    #[test]
    fn size_pmf_shapes() {
        let m = SizeModel::deterministic(5);
        assert_eq!(size_pmf(&m).unwrap(), vec![(5, 1.0)]);

        let m = SizeModel::mixed_poisson(50.0, 0.5, 0.0).unwrap();
        let pmf = size_pmf(&m).unwrap();
        let mass: f64 = pmf.iter().map(|&(_, p)| p).sum();
        assert!(mass >= 1.0 - 1e-10);
        // spot-check Poisson(50) at its mode against the closed form
        let p50 = pmf.iter().find(|&&(n, _)| n == 50).unwrap().1;
        let exact = (50f64.ln() * 50.0 - 50.0 - statrs::function::gamma::ln_gamma(51.0)).exp();
        assert!((p50 - exact).abs() < 1e-12);

        let m = SizeModel::mixed_poisson(50.0, 0.5, 0.5).unwrap();
        let pmf = size_pmf(&m).unwrap();
        let mass: f64 = pmf.iter().map(|&(_, p)| p).sum();
        assert!(mass >= 1.0 - 1e-10);
        let mean: f64 = pmf.iter().map(|&(n, p)| n as f64 * p).sum();
        assert!((mean - 50.0).abs() < 1e-6, "pmf mean {mean}");

        let g = gaussian(1.0, 1.0).unwrap();
        let m = SizeModel::energy_stopped(10.0, g.clone(), g.clone(), g).unwrap();
        assert!(size_pmf(&m).is_err());
    }

    #[test]
    fn thinning_ratio_approaches_limit_law() {
        // empirical law of N/nu tightens around R as nu grows
        let mut prev_ks = f64::INFINITY;
        for nu in [100.0, 1000.0, 10_000.0] {
            let m = SizeModel::mixed_poisson(nu, 0.5, 0.5).unwrap();
            let r = m.limit_law(Hypothesis::H0).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(8);
            let trials = 20_000;
            let mut ratios: Vec<f64> = (0..trials)
                .map(|_| draw_size(&m, Hypothesis::H0, &mut rng).unwrap() as f64 / nu)
                .collect();
            let ks = crate::gof::ks_statistic(&mut ratios, |x| match &r {
                SizeLimitLaw::Uniform { lo, hi } => ((x - lo) / (hi - lo)).clamp(0.0, 1.0),
                _ => unreachable!(),
            });
            assert!(ks < prev_ks, "KS to the limit law not shrinking at nu={nu}");
            prev_ks = ks;
        }
    }
}
