//! One-bit distributed detection with modulus-ordered transmissions.
//!
//! A sensor network observes a binary state of nature; each sensor
//! computes a local statistic `Z = T(X)` and schedules its one-bit
//! decision after a delay proportional to `1/|Z|`. The first message
//! wins and becomes the network decision. This crate provides:
//!
//! - [`dists`]: scalar probability laws (Gaussian, Gaussian-Pareto
//!   mixture, negation, censoring) with tail-accurate quantiles;
//! - [`policy`]: transmission policies (identity, Gaussian
//!   log-likelihood ratio, censoring) and the winner decision rule;
//! - [`orderstats`]: exact finite-n laws of the extreme and winner
//!   statistics, and error probabilities by quadrature;
//! - [`evt`]: Gumbel/Frechet attraction constants, random-index limits,
//!   tail dominance, threshold rules, and the exponential miss bound;
//! - [`network`]: deterministic, mixed-Poisson, and energy-stopped
//!   network-size models plus clock offsets;
//! - [`mc`]: a seeded, reproducible Monte Carlo engine (data-parallel
//!   via rayon with the default `parallel` feature, with a sequential
//!   fallback that produces bit-identical results).

pub mod dists;
pub mod error;
pub mod evt;
pub mod gof;
pub mod mc;
pub mod network;
pub mod numeric;
pub mod orderstats;
pub mod policy;

pub use dists::{gauss_pareto_mixture, gaussian, negate, Hypothesis, Law, ScalarLaw};
pub use error::{Error, Result};
pub use mc::{estimate_errors, sweep, ErrorEstimate, SweepRow, ThresholdRule};
pub use network::{SensorDraw, SizeModel};
pub use policy::{
    censoring_policy, decide, gaussian_llr_policy, identity_policy, DetectionOutcome, Policy,
    PolicyKind,
};
