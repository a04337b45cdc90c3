//! Numerics for the scalar two-controller decentralized LQG problem
//!
//! The plant is `x[n+1] = a x[n] + u1[n] + u2[n] + w[n]` with unit-variance
//! process noise and two controllers observing `y_i[n] = x[n] + v_i[n]`
//! through independent Gaussian noises of variance `sigma_vi^2`. Everything
//! in this crate is expressed in that normalization.
//!
//! The crate provides four layers:
//!
//! * [`params`] / [`kalman`] — problem parameters, eigenvalue-regime
//!   classification, and the scalar Riccati/Kalman machinery.
//! * [`centralized`] — the achievable side: the single-controller
//!   power-distortion tradeoff, regime-specific guaranteed envelopes, and
//!   weighted-cost minimization over the scalar feedback gain.
//! * [`bounds`] — the converse side: three slicing-based distortion
//!   lower-bound functionals, piecewise case bounds, and sup-min weighted
//!   cost lower bounds.
//! * [`sim`] — a seeded Monte Carlo engine for the closed loop, used to
//!   validate the closed forms empirically.
//!
//! All operations are pure functions of their inputs; values are immutable
//! and safe to share between threads. The crate is `no_std`-compatible
//! (with `alloc`) when built without the default `std` feature.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod bounds;
pub mod centralized;
pub mod kalman;
pub mod params;
pub mod sim;

pub use bounds::{BoundBreakdown, BoundSource, SlicedPowers, SlicingIndices};
pub use centralized::{EnvelopeSegment, SegmentKind, TradeoffPoint};
pub use kalman::{kalman_steady_state_error, kalman_update, KalmanBelief};
pub use params::{classify_regime, CostWeights, Regime, SystemParams};
pub use sim::{simulate, SimResult, StrategySpec};

use core::fmt;

/// Errors shared by the library operations.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A numeric argument violates its domain (negative variance, NaN, ...).
    InvalidArgument(&'static str),
    /// The feedback gain does not stabilize the closed loop (`|a - k| >= 1`).
    UnstableGain { a: f64, k: f64 },
    /// `|a|` is outside the supported range `[0, 2.5]`.
    UnsupportedRegime { a: f64 },
    /// The operation was invoked for an eigenvalue regime it does not cover.
    WrongRegime { expected: &'static str, a: f64 },
    /// A case-specific construction was requested where its hypothesis fails.
    NotApplicable(&'static str),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidArgument(what) => write!(f, "invalid argument: {what}"),
            Error::UnstableGain { a, k } => {
                write!(f, "gain k={k} does not stabilize a={a} (|a-k| >= 1)")
            }
            Error::UnsupportedRegime { a } => {
                write!(f, "|a|={} is outside the supported range [0, 2.5]", a.abs())
            }
            Error::WrongRegime { expected, a } => {
                write!(f, "operation requires {expected}, got a={a}")
            }
            Error::NotApplicable(why) => write!(f, "not applicable: {why}"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for Error {}

/// Crate-wide result alias.
pub type Result<T> = core::result::Result<T, Error>;
