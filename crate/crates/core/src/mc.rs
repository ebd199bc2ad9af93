//! Monte Carlo estimation of the error probabilities for any
//! (policy, size model, threshold rule, offsets) combination.
//!
//! Trials are embarrassingly parallel. Each (hypothesis, trial) pair
//! owns a dedicated ChaCha stream derived from the master seed, so the
//! counts — and therefore the estimates — are bit-identical whether the
//! trials run serially or across any number of rayon workers.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
#[cfg(feature = "parallel")]
use rayon::prelude::*;

use crate::dists::Hypothesis;
use crate::error::{Error, Result};
use crate::evt::{
    alpha_tilde_from_alpha, gamma_from_alpha_tilde, miss_bound, norm_constants,
    threshold_asymptotic, threshold_refined, EvtFamily,
};
use crate::network::{EnergyStatistic, SizeModel};
use crate::policy::{DetectionOutcome, Policy, PolicyKind};

/// How the detection threshold is chosen at each design point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ThresholdRule {
    /// Nonparametric `gamma_nu = 0`.
    Zero,
    /// `gamma_nu = a_nu * gamma - b_nu` from the EVT constants of the
    /// H0-side law of `-min Z`.
    Asymptotic { family: EvtFamily, alpha: f64 },
    /// Refined quantile rule `gamma_nu = F_Z^{-1}(1 - at^{1/nu}; H0)`.
    Refined { alpha: f64 },
}

/// `(alpha_hat, beta_hat)` with 95% Wilson half-widths and bookkeeping.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorEstimate {
    pub alpha_hat: f64,
    pub beta_hat: f64,
    pub alpha_halfwidth: f64,
    pub beta_halfwidth: f64,
    pub trials: u64,
    /// Fraction of the 2 * trials networks that were all-censored.
    pub all_censored_fraction: f64,
    pub seed: u64,
}

/// One row of a threshold sweep.
#[derive(Debug, Clone)]
pub struct SweepRow {
    pub nu: f64,
    pub gamma_nu: f64,
    pub estimate: ErrorEstimate,
    /// `e^{gamma_nu}` where the exponential miss bound applies
    /// (log-likelihood policy with data-independent size).
    pub miss_bound: Option<f64>,
}

const WILSON_Z: f64 = 1.959963984540054;

/// Half-width of the 95% Wilson score interval for `k` successes in
/// `n` trials.
pub fn wilson_halfwidth(k: u64, n: u64) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let nf = n as f64;
    let p = k as f64 / nf;
    let z2 = WILSON_Z * WILSON_Z;
    WILSON_Z * (p * (1.0 - p) / nf + z2 / (4.0 * nf * nf)).sqrt() / (1.0 + z2 / nf)
}

/// Per-trial rng stream: the master seed keys the cipher, and the
/// (hypothesis, trial) pair selects one of ChaCha's 2^64 streams.
#[inline]
fn trial_rng(seed: u64, h: Hypothesis, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial << 1 | h.index() as u64);
    rng
}

/// Simulate one network end to end, streaming: the winner is tracked
/// without materializing the sample vector. Consumes the rng in exactly
/// the same order as `draw_network` followed by `decide`.
pub fn simulate_network(
    policy: &Policy,
    model: &SizeModel,
    h: Hypothesis,
    threshold: f64,
    clock_delta: f64,
    rng: &mut ChaCha8Rng,
) -> Result<DetectionOutcome> {
    if !(clock_delta >= 0.0) {
        return Err(Error::invalid_parameter("clock_delta must be >= 0"));
    }
    let with_offsets = clock_delta > 0.0;

    // winner accumulator over (z, optional offset) pairs
    let mut best_key = f64::INFINITY; // offset mode: min 1/|z| + u
    let mut best_abs = 0.0f64; //         plain mode: max |z|
    let mut winner: Option<(usize, f64)> = None;
    let mut consider = |i: usize, z: f64, u: Option<f64>| {
        if z == 0.0 {
            return;
        }
        match u {
            Some(u) => {
                let t = 1.0 / z.abs() + u;
                if t < best_key {
                    best_key = t;
                    winner = Some((i, z));
                }
            }
            None => {
                if z.abs() > best_abs {
                    best_abs = z.abs();
                    winner = Some((i, z));
                }
            }
        }
    };

    let n_active;
    match model {
        SizeModel::EnergyStopped { nu, s_laws, w_law, phi } => {
            let s_law = &s_laws[h.index()];
            let mut acc = 0.0;
            let mut i = 0usize;
            let mut prefix: Vec<f64> = Vec::new();
            let custom = matches!(phi, EnergyStatistic::Custom(_));
            loop {
                let s = s_law.sample(&mut *rng);
                if custom {
                    prefix.push(s);
                }
                let w = w_law.sample(&mut *rng);
                let z = policy.transform(s + w);
                let u = with_offsets
                    .then(|| rng.gen_range(-clock_delta / 2.0..clock_delta / 2.0));
                consider(i, z, u);
                i += 1;
                let energy = match phi {
                    EnergyStatistic::SumOfSquares => {
                        acc += s * s;
                        acc
                    }
                    EnergyStatistic::Custom(f) => f(&prefix),
                };
                if energy > *nu {
                    break;
                }
            }
            n_active = i;
        }
        _ => {
            let n = crate::network::draw_size(model, h, &mut *rng)? as usize;
            let x_law = policy.x_law(h);
            for i in 0..n {
                let z = policy.transform(x_law.sample(&mut *rng));
                let u = with_offsets
                    .then(|| rng.gen_range(-clock_delta / 2.0..clock_delta / 2.0));
                consider(i, z, u);
            }
            n_active = n;
        }
    }

    Ok(match winner {
        Some((i, z)) => DetectionOutcome {
            decision: if z >= threshold { Hypothesis::H1 } else { Hypothesis::H0 },
            winner_index: Some(i + 1),
            winner_statistic: z,
            firing_time: if with_offsets { best_key } else { 1.0 / z.abs() },
            n_active,
            all_censored: false,
        },
        None => DetectionOutcome {
            decision: if 0.0 >= threshold { Hypothesis::H1 } else { Hypothesis::H0 },
            winner_index: None,
            winner_statistic: 0.0,
            firing_time: f64::INFINITY,
            n_active,
            all_censored: true,
        },
    })
}

#[derive(Default, Clone, Copy)]
struct Counts {
    false_alarms: u64,
    misses: u64,
    censored: u64,
}

impl Counts {
    fn merge(self, other: Counts) -> Counts {
        Counts {
            false_alarms: self.false_alarms + other.false_alarms,
            misses: self.misses + other.misses,
            censored: self.censored + other.censored,
        }
    }
}

fn run_trial(
    policy: &Policy,
    model: &SizeModel,
    threshold: f64,
    clock_delta: f64,
    seed: u64,
    trial: u64,
) -> Result<Counts> {
    let mut counts = Counts::default();
    for h in [Hypothesis::H0, Hypothesis::H1] {
        let mut rng = trial_rng(seed, h, trial);
        let out = simulate_network(policy, model, h, threshold, clock_delta, &mut rng)?;
        if out.all_censored {
            counts.censored += 1;
        }
        match h {
            Hypothesis::H0 => {
                if out.decision == Hypothesis::H1 {
                    counts.false_alarms += 1;
                }
            }
            Hypothesis::H1 => {
                if out.decision == Hypothesis::H0 {
                    counts.misses += 1;
                }
            }
        }
    }
    Ok(counts)
}

fn assemble(counts: Counts, trials: u64, seed: u64) -> ErrorEstimate {
    ErrorEstimate {
        alpha_hat: counts.false_alarms as f64 / trials as f64,
        beta_hat: counts.misses as f64 / trials as f64,
        alpha_halfwidth: wilson_halfwidth(counts.false_alarms, trials),
        beta_halfwidth: wilson_halfwidth(counts.misses, trials),
        trials,
        all_censored_fraction: counts.censored as f64 / (2 * trials) as f64,
        seed,
    }
}

/// Serial reference engine: identical output to [`estimate_errors`].
pub fn estimate_errors_serial(
    policy: &Policy,
    model: &SizeModel,
    threshold: f64,
    clock_delta: f64,
    trials: u64,
    seed: u64,
) -> Result<ErrorEstimate> {
    if trials == 0 {
        return Err(Error::invalid_input("need at least one trial"));
    }
    let mut counts = Counts::default();
    for t in 0..trials {
        counts = counts.merge(run_trial(policy, model, threshold, clock_delta, seed, t)?);
    }
    Ok(assemble(counts, trials, seed))
}

/// Estimate `(alpha, beta)` from `trials` independent networks per
/// hypothesis. Deterministic in `(seed, trials)` regardless of worker
/// count; runs on the rayon pool when the `parallel` feature is active.
pub fn estimate_errors(
    policy: &Policy,
    model: &SizeModel,
    threshold: f64,
    clock_delta: f64,
    trials: u64,
    seed: u64,
) -> Result<ErrorEstimate> {
    if trials == 0 {
        return Err(Error::invalid_input("need at least one trial"));
    }
    #[cfg(feature = "parallel")]
    {
        let counts = (0..trials)
            .into_par_iter()
            .map(|t| run_trial(policy, model, threshold, clock_delta, seed, t))
            .try_reduce(Counts::default, |a, b| Ok(a.merge(b)))?;
        Ok(assemble(counts, trials, seed))
    }
    #[cfg(not(feature = "parallel"))]
    {
        estimate_errors_serial(policy, model, threshold, clock_delta, trials, seed)
    }
}

/// Resolve the detection threshold for `model` under `rule`.
pub fn resolve_threshold(policy: &Policy, model: &SizeModel, rule: &ThresholdRule) -> Result<f64> {
    match rule {
        ThresholdRule::Zero => Ok(0.0),
        ThresholdRule::Refined { alpha } => {
            let r0 = model.limit_law(Hypothesis::H0)?;
            let at = alpha_tilde_from_alpha(&r0, *alpha)?;
            threshold_refined(policy.z_law(Hypothesis::H0), model.nu().round() as u64, at)
        }
        ThresholdRule::Asymptotic { family, alpha } => {
            let r0 = model.limit_law(Hypothesis::H0)?;
            let at = alpha_tilde_from_alpha(&r0, *alpha)?;
            let gamma = gamma_from_alpha_tilde(*family, at);
            let neg_law = crate::dists::negate(policy.z_law(Hypothesis::H0));
            let constants = norm_constants(&neg_law, model.nu().round() as u64, *family)?;
            Ok(threshold_asymptotic(&constants, gamma))
        }
    }
}

/// Whether the exponential miss bound applies to this combination.
fn bound_applies(policy: &Policy, model: &SizeModel) -> bool {
    policy.kind() == PolicyKind::LogLikRatioMo && model.is_data_independent()
}

/// Run one Monte Carlo point per size model (the models are the same
/// family at increasing `nu`), resolving the threshold by `rule` and
/// attaching the miss bound where it applies.
pub fn sweep(
    policy: &Policy,
    models: &[SizeModel],
    rule: &ThresholdRule,
    clock_delta: f64,
    trials: u64,
    seed: u64,
) -> Result<Vec<SweepRow>> {
    if models.is_empty() {
        return Err(Error::invalid_input("empty size-model grid"));
    }
    if models.windows(2).any(|w| w[0].nu() >= w[1].nu()) {
        return Err(Error::invalid_input("nu grid must be strictly increasing"));
    }
    let mut rows = Vec::with_capacity(models.len());
    for model in models {
        let gamma_nu = resolve_threshold(policy, model, rule)?;
        let estimate = estimate_errors(policy, model, gamma_nu, clock_delta, trials, seed)?;
        let bound = bound_applies(policy, model).then(|| miss_bound(gamma_nu));
        rows.push(SweepRow { nu: model.nu(), gamma_nu, estimate, miss_bound: bound });
    }
    Ok(rows)
}

/// Size the global rayon pool (no-op without the `parallel` feature).
/// Call at most once, before any parallel work.
pub fn set_worker_threads(threads: usize) -> Result<()> {
    #[cfg(feature = "parallel")]
    {
        if threads == 0 {
            return Ok(()); // keep rayon's default
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| Error::invalid_input(format!("rayon pool: {e}")))
    }
    #[cfg(not(feature = "parallel"))]
    {
        let _ = threads;
        Ok(())
    }
}
