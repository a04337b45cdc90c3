//! Problem parameters and eigenvalue-regime classification.

use crate::{Error, Result};

#[cfg(not(feature = "std"))]
#[allow(unused_imports)]
use num_traits::Float;

/// Parameters of the scalar two-controller plant.
///
/// The constructor normalizes the observation noises so that
/// `sigma_v1_sq <= sigma_v2_sq` (controller 1 is the one with the better
/// observation) and records whether the inputs were swapped. Functions that
/// pair these parameters with [`CostWeights`] or per-controller outputs
/// apply the same swap internally, so callers keep their original indexing.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SystemParams {
    /// Plant eigenvalue `a`.
    pub a: f64,
    /// Observation-noise variance of the better-observed controller.
    pub sigma_v1_sq: f64,
    /// Observation-noise variance of the worse-observed controller.
    pub sigma_v2_sq: f64,
    /// Initial-state variance. Defaults to 0; the lower bounds are stated
    /// for 0 and the long-run averages do not depend on it.
    pub sigma_0_sq: f64,
    /// True when the constructor swapped the two observation noises to
    /// restore the `sigma_v1_sq <= sigma_v2_sq` convention.
    pub swapped: bool,
}

impl SystemParams {
    /// Builds parameters with `sigma_0_sq = 0`.
    pub fn new(a: f64, sigma_v1_sq: f64, sigma_v2_sq: f64) -> Result<Self> {
        Self::with_initial_variance(a, sigma_v1_sq, sigma_v2_sq, 0.0)
    }

    /// Builds parameters with an explicit initial-state variance.
    pub fn with_initial_variance(
        a: f64,
        sigma_v1_sq: f64,
        sigma_v2_sq: f64,
        sigma_0_sq: f64,
    ) -> Result<Self> {
        if !a.is_finite() {
            return Err(Error::InvalidArgument("plant eigenvalue must be finite"));
        }
        for v in [sigma_v1_sq, sigma_v2_sq, sigma_0_sq] {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::InvalidArgument(
                    "variances must be finite and nonnegative",
                ));
            }
        }
        let swapped = sigma_v1_sq > sigma_v2_sq;
        let (lo, hi) = if swapped {
            (sigma_v2_sq, sigma_v1_sq)
        } else {
            (sigma_v1_sq, sigma_v2_sq)
        };
        Ok(SystemParams {
            a,
            sigma_v1_sq: lo,
            sigma_v2_sq: hi,
            sigma_0_sq,
            swapped,
        })
    }

    /// Regime of this plant's eigenvalue.
    pub fn regime(&self) -> Regime {
        classify_regime(self.a)
    }

    /// Maps a controller index in the caller's original numbering to the
    /// normalized (swap-applied) numbering, and back; the map is an
    /// involution.
    pub fn map_controller(&self, original: u8) -> u8 {
        if self.swapped {
            3 - original
        } else {
            original
        }
    }
}

/// Nonnegative weights of the long-run average cost
/// `q E[x^2] + r1 E[u1^2] + r2 E[u2^2]`.
///
/// Weights refer to the caller's original controller indexing. Infinite
/// weights are permitted and model hard constraints (a power that must be
/// exactly zero, for instance).
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CostWeights {
    pub q: f64,
    pub r1: f64,
    pub r2: f64,
}

impl CostWeights {
    pub fn new(q: f64, r1: f64, r2: f64) -> Result<Self> {
        for w in [q, r1, r2] {
            if w.is_nan() || w < 0.0 {
                return Err(Error::InvalidArgument("cost weights must be >= 0"));
            }
        }
        if q == 0.0 && r1 == 0.0 && r2 == 0.0 {
            return Err(Error::InvalidArgument("cost weights must not all be zero"));
        }
        Ok(CostWeights { q, r1, r2 })
    }

    /// Power weights in the normalized controller order of `params`.
    pub fn ordered_power_weights(&self, params: &SystemParams) -> (f64, f64) {
        if params.swapped {
            (self.r2, self.r1)
        } else {
            (self.r1, self.r2)
        }
    }
}

/// State-cost contribution `q * d`. An infinite distortion dominates the
/// cost even when `q == 0`: an unstable operating point is never a valid
/// comparison point.
pub(crate) fn cost_state(q: f64, d: f64) -> f64 {
    if d.is_infinite() {
        f64::INFINITY
    } else {
        q * d
    }
}

/// Power contribution `r * p`, with zero power free at any price.
pub(crate) fn cost_power(r: f64, p: f64) -> f64 {
    if p == 0.0 {
        0.0
    } else {
        r * p
    }
}

/// Eigenvalue regimes of the scalar plant.
///
/// Boundaries: 0.9 belongs to `SlowStable`, 1 to `Marginal`, 2.5 to
/// `SlowUnstable`; each tie goes to the regime whose bounds include the
/// endpoint.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Regime {
    /// `|a| < 0.9`
    VeryStable,
    /// `0.9 <= |a| < 1`
    SlowStable,
    /// `|a| = 1`
    Marginal,
    /// `1 < |a| <= 2.5`
    SlowUnstable,
    /// `|a| > 2.5`
    OutOfScope,
}

impl Regime {
    pub fn label(&self) -> &'static str {
        match self {
            Regime::VeryStable => "very-stable",
            Regime::SlowStable => "slow-stable",
            Regime::Marginal => "marginal",
            Regime::SlowUnstable => "slow-unstable",
            Regime::OutOfScope => "out-of-scope",
        }
    }
}

/// Total classification of a finite eigenvalue into its [`Regime`].
pub fn classify_regime(a: f64) -> Regime {
    let m = a.abs();
    if m < 0.9 {
        Regime::VeryStable
    } else if m < 1.0 {
        Regime::SlowStable
    } else if m == 1.0 {
        Regime::Marginal
    } else if m <= 2.5 {
        Regime::SlowUnstable
    } else {
        Regime::OutOfScope
    }
}
