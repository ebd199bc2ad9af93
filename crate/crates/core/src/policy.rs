//! Transmission policies and the one-shot winner decision rule.
//!
//! A policy is the per-sensor transform `T` together with the induced
//! law of `Z = T(X)` under each hypothesis. Sensor `i` fires after a
//! delay proportional to `1/|Z_i|`; the first firing decision is final.

use rand::RngCore;

use crate::dists::{censored, gaussian, Hypothesis, Law};
use crate::error::{Error, Result};

/// Which transmission policy a [`Policy`] implements.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PolicyKind {
    /// `T(x) = x`.
    IdentityMo,
    /// `T(x)` is the log-likelihood ratio of the observation.
    LogLikRatioMo,
    /// `T(x) = x` outside the censoring band `|x| < theta_c`, else 0.
    Censoring,
}

#[derive(Clone, Copy, Debug)]
enum Transform {
    Identity,
    Affine { slope: f64, intercept: f64 },
    Censor { theta_c: f64 },
}

/// A transmission policy: the transform plus the laws of X and Z under
/// both hypotheses. Immutable and cheap to share.
pub struct Policy {
    kind: PolicyKind,
    transform: Transform,
    x_laws: [Law; 2],
    z_laws: [Law; 2],
}

impl Policy {
    pub fn kind(&self) -> PolicyKind {
        self.kind
    }

    /// The per-sensor transform `T`.
    pub fn transform(&self, x: f64) -> f64 {
        match self.transform {
            Transform::Identity => x,
            Transform::Affine { slope, intercept } => slope * x + intercept,
            Transform::Censor { theta_c } => {
                if x.abs() >= theta_c {
                    x
                } else {
                    0.0
                }
            }
        }
    }

    pub fn x_law(&self, h: Hypothesis) -> &Law {
        &self.x_laws[h.index()]
    }

    pub fn z_law(&self, h: Hypothesis) -> &Law {
        &self.z_laws[h.index()]
    }

    /// Draw one observation under `h` and push it through the transform.
    #[inline]
    pub fn sample_z(&self, h: Hypothesis, rng: &mut dyn RngCore) -> f64 {
        self.transform(self.x_laws[h.index()].sample(rng))
    }

    /// True when both Z-laws are continuous (no censoring atom), which
    /// is what the exact order-statistics integrals require.
    pub fn is_continuous(&self) -> bool {
        self.z_laws.iter().all(|l| l.atom_at_zero() == 0.0)
    }
}

/// MO policy with the identity transform: `Z = X`.
pub fn identity_policy(x_law_h0: Law, x_law_h1: Law) -> Policy {
    Policy {
        kind: PolicyKind::IdentityMo,
        transform: Transform::Identity,
        z_laws: [x_law_h0.clone(), x_law_h1.clone()],
        x_laws: [x_law_h0, x_law_h1],
    }
}

/// l-MO policy for the Gaussian shift-in-mean model
/// `X ~ N(-theta0, sigma)` under H0 and `X ~ N(theta1, sigma)` under H1.
///
/// The log-likelihood ratio is affine,
/// `T(x) = ((theta0+theta1)/sigma^2) x + (theta0^2-theta1^2)/(2 sigma^2)`,
/// so the Z-laws are the exact Gaussian pushforwards: with
/// `d = theta0 + theta1`, `Z ~ N(±d^2/(2 sigma^2), d/sigma)`.
pub fn gaussian_llr_policy(theta0: f64, theta1: f64, sigma: f64) -> Result<Policy> {
    if !(theta0 >= 0.0) || !(theta1 > 0.0) || !(sigma > 0.0) {
        return Err(Error::invalid_parameter(format!(
            "gaussian llr policy needs theta0 >= 0, theta1 > 0, sigma > 0; \
             got theta0={theta0}, theta1={theta1}, sigma={sigma}"
        )));
    }
    let d = theta0 + theta1;
    let slope = d / (sigma * sigma);
    let intercept = (theta0 * theta0 - theta1 * theta1) / (2.0 * sigma * sigma);
    let mu = d * d / (2.0 * sigma * sigma);
    let sd = d / sigma;
    Ok(Policy {
        kind: PolicyKind::LogLikRatioMo,
        transform: Transform::Affine { slope, intercept },
        x_laws: [gaussian(-theta0, sigma)?, gaussian(theta1, sigma)?],
        z_laws: [gaussian(-mu, sd)?, gaussian(mu, sd)?],
    })
}

/// Censoring policy: `T(x) = x` when `|x| >= theta_c`, else 0. The
/// Z-laws carry an atom at zero with the censored mass.
pub fn censoring_policy(x_law_h0: Law, x_law_h1: Law, theta_c: f64) -> Result<Policy> {
    let z0 = censored(&x_law_h0, theta_c)?;
    let z1 = censored(&x_law_h1, theta_c)?;
    Ok(Policy {
        kind: PolicyKind::Censoring,
        transform: Transform::Censor { theta_c },
        x_laws: [x_law_h0, x_law_h1],
        z_laws: [z0, z1],
    })
}

/// Outcome of one network-level decision.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectionOutcome {
    pub decision: Hypothesis,
    /// 1-based index of the firing sensor; `None` when nothing fires.
    pub winner_index: Option<usize>,
    /// The winner statistic `M` (0 when the network is all-censored).
    pub winner_statistic: f64,
    /// `1/|Z|` of the winner (plus its offset when offsets are active);
    /// infinite iff the network is all-censored.
    pub firing_time: f64,
    pub n_active: usize,
    pub all_censored: bool,
}

/// Apply the winner-takes-all rule to transformed samples.
///
/// Without offsets the winner is the sample of largest modulus (ties go
/// to the lowest index). With offsets, sensor `i` fires at
/// `1/|z_i| + u_i` and the earliest nonzero sensor wins; censored
/// sensors never transmit. The decision is H1 iff the winner statistic
/// is `>= threshold`; an empty or all-censored network is flagged and
/// decided by the same rule applied to `M = 0`.
pub fn decide(
    z_samples: &[f64],
    threshold: f64,
    clock_offsets: Option<&[f64]>,
) -> Result<DetectionOutcome> {
    if let Some(u) = clock_offsets {
        if u.len() != z_samples.len() {
            return Err(Error::invalid_input(format!(
                "{} offsets for {} samples",
                u.len(),
                z_samples.len()
            )));
        }
    }

    let mut winner: Option<usize> = None;
    match clock_offsets {
        None => {
            let mut best = 0.0f64;
            for (i, &z) in z_samples.iter().enumerate() {
                if z != 0.0 && z.abs() > best {
                    best = z.abs();
                    winner = Some(i);
                }
            }
        }
        Some(u) => {
            let mut best = f64::INFINITY;
            for (i, (&z, &ui)) in z_samples.iter().zip(u).enumerate() {
                if z != 0.0 {
                    let t = 1.0 / z.abs() + ui;
                    if t < best {
                        best = t;
                        winner = Some(i);
                    }
                }
            }
        }
    }

    let outcome = match winner {
        Some(i) => {
            let m = z_samples[i];
            let firing_time = match clock_offsets {
                Some(u) => 1.0 / m.abs() + u[i],
                None => 1.0 / m.abs(),
            };
            DetectionOutcome {
                decision: if m >= threshold { Hypothesis::H1 } else { Hypothesis::H0 },
                winner_index: Some(i + 1),
                winner_statistic: m,
                firing_time,
                n_active: z_samples.len(),
                all_censored: false,
            }
        }
        None => DetectionOutcome {
            decision: if 0.0 >= threshold { Hypothesis::H1 } else { Hypothesis::H0 },
            winner_index: None,
            winner_statistic: 0.0,
            firing_time: f64::INFINITY,
            n_active: z_samples.len(),
            all_censored: true,
        },
    };
    Ok(outcome)
}

/// 1-based firing order: decreasing `|z|`, ties by lowest index.
/// Censored sensors (z = 0) never fire and are listed last.
pub fn firing_order(z_samples: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..z_samples.len()).collect();
    idx.sort_by(|&a, &b| {
        let (za, zb) = (z_samples[a].abs(), z_samples[b].abs());
        zb.partial_cmp(&za).expect("NaN sample").then(a.cmp(&b))
    });
    idx.into_iter().map(|i| i + 1).collect()
}
