//! Single-controller (centralized) achievable side.
//!
//! A controller that feeds back `u = -k * E[x | own history]` against one
//! observation stream of noise variance `sigma_v^2` reaches, for any
//! stabilizing gain `|a - k| < 1`, the long-run pair
//!
//! ```text
//! D(k) = ((2ak - k^2) Sigma_E + 1) / (1 - (a-k)^2)
//! P(k) = k^2 (D(k) - Sigma_E)
//! ```
//!
//! with `Sigma_E` the steady-state Kalman error. This module samples that
//! curve, emits the regime-specific guaranteed envelopes, and minimizes the
//! weighted cost `q D(k) + r P(k)` over the gain.

use crate::kalman::kalman_steady_state_error;
use crate::params::{classify_regime, cost_power, cost_state, CostWeights, Regime, SystemParams};
use crate::{Error, Result};
use alloc::vec::Vec;

#[cfg(not(feature = "std"))]
#[allow(unused_imports)]
use num_traits::Float;

/// A `(distortion, power, power)` triple on a two-controller tradeoff curve.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TradeoffPoint {
    /// Long-run `E[x^2]`.
    pub distortion: f64,
    /// Long-run `E[u1^2]`.
    pub p1: f64,
    /// Long-run `E[u2^2]`.
    pub p2: f64,
}

/// Shape of one guaranteed-envelope piece.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum SegmentKind {
    /// A single guaranteed `(distortion, power)` point.
    PointGuarantee,
    /// `D <= d_bound / t` for `t` in `[t_min, t_max]` (open at `t_min = 0`).
    InverseSegment,
    /// The zero-input point of a stable plant.
    ZeroPowerPoint,
}

/// One piece of a regime-specific guaranteed power-distortion envelope.
///
/// For `InverseSegment`, `d_bound` is the coefficient `c` in `D <= c / t`;
/// for the point kinds it is the guaranteed distortion at power
/// `t_min == t_max`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EnvelopeSegment {
    pub kind: SegmentKind,
    pub d_bound: f64,
    pub t_min: f64,
    pub t_max: f64,
    pub source: &'static str,
}

/// Closed-form `(D, P)` of the single-controller strategy with gain `k`.
pub fn tradeoff_point(a: f64, sigma_v_sq: f64, k: f64) -> Result<(f64, f64)> {
    if (a - k).abs() >= 1.0 {
        return Err(Error::UnstableGain { a, k });
    }
    let sigma_e = kalman_steady_state_error(a, sigma_v_sq)?;
    let closed = 1.0 - (a - k) * (a - k);
    let d = ((2.0 * a * k - k * k) * sigma_e + 1.0) / closed;
    let p = k * k * (d - sigma_e);
    Ok((d, p))
}

/// Evaluates [`tradeoff_point`] over a gain grid, in grid order.
pub fn sample_tradeoff_curve(a: f64, sigma_v_sq: f64, k_grid: &[f64]) -> Result<Vec<(f64, f64)>> {
    k_grid
        .iter()
        .map(|&k| tradeoff_point(a, sigma_v_sq, k))
        .collect()
}

/// Regime-specific guaranteed envelope of the achievable tradeoff.
///
/// * `|a| = 1`: `D <= 2/t` for `0 < t <= 1/max(1, Sigma_E)`, plus the two
///   refinements that bound the range endpoint by `1/(1.0005 sigma_v)`
///   (when `sigma_v >= 16`) and by `1/15.008` (when `sigma_v <= 16`).
/// * `1 < |a| <= 2.5`: the minimum-power point
///   `(7.25 Sigma_E + 6.25/(a^2-1), (a^2-1)^2 Sigma_E + (a^2-1))` and the
///   segment `D <= 49/t` on `[8(a^2-1), 8/max(1, 7.25 Sigma_E)]`; the
///   segment is omitted when its endpoints cross.
/// * `|a| < 1`: the zero-input point `(1/(1-a^2), 0)` and, when
///   `Sigma_E <= 1/(1-a^2)`, the segment `D <= 2/t` on
///   `[1-a^2, 1/max(1, Sigma_E)]`.
pub fn guaranteed_envelope(a: f64, sigma_v_sq: f64) -> Result<Vec<EnvelopeSegment>> {
    let m = a.abs();
    if m > 2.5 {
        return Err(Error::UnsupportedRegime { a });
    }
    let sigma_e = kalman_steady_state_error(a, sigma_v_sq)?;
    let mut out = Vec::new();
    match classify_regime(a) {
        Regime::Marginal => {
            out.push(EnvelopeSegment {
                kind: SegmentKind::InverseSegment,
                d_bound: 2.0,
                t_min: 0.0,
                t_max: 1.0 / sigma_e.max(1.0),
                source: "inverse-main",
            });
            let sigma_v = sigma_v_sq.sqrt();
            if sigma_v >= 16.0 {
                out.push(EnvelopeSegment {
                    kind: SegmentKind::InverseSegment,
                    d_bound: 2.0,
                    t_min: 0.0,
                    t_max: 1.0 / (1.0005 * sigma_v),
                    source: "inverse-large-noise",
                });
            }
            if sigma_v <= 16.0 {
                out.push(EnvelopeSegment {
                    kind: SegmentKind::InverseSegment,
                    d_bound: 2.0,
                    t_min: 0.0,
                    t_max: 1.0 / 15.008,
                    source: "inverse-small-noise",
                });
            }
        }
        Regime::SlowUnstable => {
            let gap = a * a - 1.0;
            let p_corner = gap * gap * sigma_e + gap;
            out.push(EnvelopeSegment {
                kind: SegmentKind::PointGuarantee,
                d_bound: 7.25 * sigma_e + 6.25 / gap,
                t_min: p_corner,
                t_max: p_corner,
                source: "min-power-point",
            });
            let t_min = 8.0 * gap;
            let t_max = 8.0 / (7.25 * sigma_e).max(1.0);
            // Empty range is legal: the corner point alone covers large noise.
            if t_min <= t_max {
                out.push(EnvelopeSegment {
                    kind: SegmentKind::InverseSegment,
                    d_bound: 49.0,
                    t_min,
                    t_max,
                    source: "inverse-unstable",
                });
            }
        }
        Regime::VeryStable | Regime::SlowStable => {
            let autonomous = 1.0 / (1.0 - a * a);
            out.push(EnvelopeSegment {
                kind: SegmentKind::ZeroPowerPoint,
                d_bound: autonomous,
                t_min: 0.0,
                t_max: 0.0,
                source: "zero-input",
            });
            if sigma_e <= autonomous {
                out.push(EnvelopeSegment {
                    kind: SegmentKind::InverseSegment,
                    d_bound: 2.0,
                    t_min: 1.0 - a * a,
                    t_max: 1.0 / sigma_e.max(1.0),
                    source: "inverse-stable",
                });
            }
        }
        Regime::OutOfScope => unreachable!(),
    }
    Ok(out)
}

/// Weighted cost `q D(k) + r P(k)` at a gain, with the infinite-distortion
/// convention of [`cost_state`].
fn gain_cost(a: f64, sigma_e: f64, q: f64, r: f64, k: f64) -> f64 {
    let closed = 1.0 - (a - k) * (a - k);
    if closed <= 0.0 {
        return f64::INFINITY;
    }
    let d = ((2.0 * a * k - k * k) * sigma_e + 1.0) / closed;
    let p = k * k * (d - sigma_e);
    cost_state(q, d) + cost_power(r, p)
}

/// Minimizes `q D(k) + r P(k)` over stabilizing gains.
///
/// Returns `(cost, argmin gain)`. The search seeds a 512-point grid over
/// the stability interval (plus the zero-gain and minimum-power candidates)
/// and refines the best cell by golden section; the cost need not be
/// unimodal near regime boundaries, hence grid-first. Negative `a` is
/// solved with `|a|` and the gain sign flipped.
pub fn min_centralized_cost(a: f64, sigma_v_sq: f64, q: f64, r: f64) -> Result<(f64, f64)> {
    if q.is_nan() || r.is_nan() || q < 0.0 || r < 0.0 {
        return Err(Error::InvalidArgument("cost weights must be >= 0"));
    }
    if q == 0.0 && r == 0.0 {
        return Err(Error::InvalidArgument("cost weights must not all be zero"));
    }
    let m = a.abs();
    if m > 2.5 {
        return Err(Error::UnsupportedRegime { a });
    }
    let sigma_e = kalman_steady_state_error(m, sigma_v_sq)?;
    let f = |k: f64| gain_cost(m, sigma_e, q, r, k);

    let lo = m - 1.0;
    let hi = m + 1.0;
    const GRID: usize = 512;
    let mut best_k = m; // k = a is always stabilizing
    let mut best = f(best_k);
    for i in 0..=GRID {
        let k = lo + (hi - lo) * (i as f64 + 0.5) / (GRID as f64 + 1.0);
        let c = f(k);
        if c < best {
            best = c;
            best_k = k;
        }
    }
    // Structural candidates: zero gain (stable plants), the minimum-power
    // gain a - 1/a (unstable plants).
    if m < 1.0 {
        let c = f(0.0);
        if c <= best {
            best = c;
            best_k = 0.0;
        }
    }
    if m > 1.0 {
        let c = f(m - 1.0 / m);
        if c < best {
            best = c;
            best_k = m - 1.0 / m;
        }
    }

    // Golden-section refinement in a bracket of one grid step around the
    // best candidate.
    let step = (hi - lo) / (GRID as f64 + 1.0);
    let (mut x1, mut x4) = ((best_k - step).max(lo), (best_k + step).min(hi));
    const INVPHI: f64 = 0.618_033_988_749_894_9;
    let mut x2 = x4 - INVPHI * (x4 - x1);
    let mut x3 = x1 + INVPHI * (x4 - x1);
    let (mut f2, mut f3) = (f(x2), f(x3));
    for _ in 0..80 {
        if f2 <= f3 {
            x4 = x3;
            x3 = x2;
            f3 = f2;
            x2 = x4 - INVPHI * (x4 - x1);
            f2 = f(x2);
        } else {
            x1 = x2;
            x2 = x3;
            f2 = f3;
            x3 = x1 + INVPHI * (x4 - x1);
            f3 = f(x3);
        }
    }
    let (xr, fr) = if f2 <= f3 { (x2, f2) } else { (x3, f3) };
    if fr < best {
        best = fr;
        best_k = xr;
    }

    let k_out = if a < 0.0 { -best_k } else { best_k };
    Ok((best, k_out))
}

/// Best single-controller cost: the minimum over the two controllers of
/// [`min_centralized_cost`] against that controller's observation noise and
/// power weight.
///
/// Returns `(cost, controller index in the caller's original numbering,
/// argmin gain)`. Ties go to controller 1.
pub fn decentralized_upper_cost(
    params: &SystemParams,
    weights: &CostWeights,
) -> Result<(f64, u8, f64)> {
    let (r_lo, r_hi) = weights.ordered_power_weights(params);
    let (c1, k1) = min_centralized_cost(params.a, params.sigma_v1_sq, weights.q, r_lo)?;
    let (c2, k2) = min_centralized_cost(params.a, params.sigma_v2_sq, weights.q, r_hi)?;
    // Normalized slots: slot 1 = better observation. Exact ties go to the
    // caller's controller 1, whichever slot it occupies.
    let tie_slot = params.map_controller(1);
    let (cost, slot, k) = if c2 < c1 || (c2 == c1 && tie_slot == 2) {
        (c2, 2u8, k2)
    } else {
        (c1, 1u8, k1)
    };
    Ok((cost, params.map_controller(slot), k))
}
