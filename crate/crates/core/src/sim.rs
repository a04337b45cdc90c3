//! Seeded Monte Carlo engine for the closed-loop scalar plant.
//!
//! Dynamics: `x[n+1] = a x[n] + u1[n] + u2[n] + w[n]` with standard-normal
//! process noise, `x[0] ~ N(0, sigma_0^2)`, and per-controller observations
//! `y_i[n] = x[n] + v_i[n]`. A strategy sees only its own observation
//! stream and its own past inputs.
//!
//! Randomness comes from a ChaCha12 stream cipher seeded from a single
//! `u64`, with the process noise, the two observation noises, and the
//! initial state drawn from four independent streams; Gaussians use the
//! ziggurat sampler. Identical seeds give bit-identical results within one
//! build, and the independent streams make the information pattern
//! testable: perturbing the unused observation stream cannot change the
//! active controller's inputs.

use crate::centralized::TradeoffPoint;
use crate::kalman::{kalman_correct, kalman_update, KalmanBelief};
use crate::params::SystemParams;
use crate::{Error, Result};
use alloc::vec::Vec;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;

#[cfg(not(feature = "std"))]
#[allow(unused_imports)]
use num_traits::Float;

/// Divergence guard: far above any stable steady state, well inside range.
const DIVERGENCE_LIMIT: f64 = 1e15;

/// Closed-loop control strategy.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum StrategySpec {
    /// Both inputs identically zero.
    Zero,
    /// One controller applies `u = -gain * E[x | own history]` through its
    /// own Kalman filter; the other applies zero. `controller` uses the
    /// caller's original indexing (1 or 2).
    ///
    /// Gains with `|a - gain| >= 1` are accepted (the steady state is then
    /// meaningless and the run will typically flag divergence).
    SingleKalman { controller: u8, gain: f64 },
}

/// Outcome of one simulation run.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SimResult {
    /// Time-averaged `x^2` over the steps after burn-in.
    pub avg_x_sq: f64,
    pub avg_u1_sq: f64,
    pub avg_u2_sq: f64,
    /// Set when `|x|` exceeded `1e15`; the averages then hold the running
    /// values at the moment of abort.
    pub diverged: bool,
    /// Steps actually contributing to the averages.
    pub horizon_used: u64,
    pub seed: u64,
}

impl SimResult {
    /// The empirical `(D, P1, P2)` triple of this run.
    pub fn tradeoff_point(&self) -> TradeoffPoint {
        TradeoffPoint {
            distortion: self.avg_x_sq,
            p1: self.avg_u1_sq,
            p2: self.avg_u2_sq,
        }
    }
}

/// One empirically estimated tradeoff point.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EmpiricalPoint {
    pub gain: f64,
    pub distortion_hat: f64,
    pub power_hat: f64,
    pub diverged: bool,
    /// The closed-loop pole is within 0.001 of the unit circle; the
    /// estimate mixes slowly and is expected to be noisy.
    pub long_mixing: bool,
}

/// Burn-in heuristic: the transient decays on the scale of
/// `1 / (1 - pole^2)` for closed-loop pole `a - k`.
pub fn default_burn_in(a: f64, gain: f64) -> u64 {
    let pole = (a - gain).abs();
    let base = 10_000.0f64;
    if pole < 1.0 {
        base.max(50.0 / (1.0 - pole * pole)) as u64
    } else {
        base as u64
    }
}

struct NoiseStreams {
    w: ChaCha12Rng,
    v1: ChaCha12Rng,
    v2: ChaCha12Rng,
}

fn streams(seed: u64) -> (NoiseStreams, f64) {
    let mk = |stream: u64| {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        rng
    };
    let mut init = mk(3);
    let z0: f64 = init.sample(StandardNormal);
    (
        NoiseStreams {
            w: mk(0),
            v1: mk(1),
            v2: mk(2),
        },
        z0,
    )
}

/// Runs the closed loop for `horizon` steps and averages the squares over
/// the steps after `burn_in`.
///
/// Identical `(params, strategy, horizon, burn_in, seed)` give bit-identical
/// results on one platform. The active Kalman controller is driven only by
/// its own observations and its own previous input; with `sigma_0_sq = 0`
/// its first input is exactly zero.
pub fn simulate(
    params: &SystemParams,
    strategy: StrategySpec,
    horizon: u64,
    burn_in: u64,
    seed: u64,
) -> Result<SimResult> {
    if horizon <= burn_in {
        return Err(Error::InvalidArgument("horizon must exceed burn-in"));
    }
    let a = params.a;
    let (mut noise, z0) = streams(seed);
    let mut x = params.sigma_0_sq.sqrt() * z0;

    // Noise streams are tied to the caller's controller indices; the swap
    // normalization only decides which variance each index carries.
    let active = match strategy {
        StrategySpec::Zero => None,
        StrategySpec::SingleKalman { controller, gain } => {
            if controller != 1 && controller != 2 {
                return Err(Error::InvalidArgument("controller index must be 1 or 2"));
            }
            let slot = params.map_controller(controller);
            let sigma_sq = if slot == 1 {
                params.sigma_v1_sq
            } else {
                params.sigma_v2_sq
            };
            Some((controller, sigma_sq, gain))
        }
    };

    let mut belief = KalmanBelief {
        estimate: 0.0,
        error_var: params.sigma_0_sq,
    };
    let mut u_prev = 0.0f64;
    let mut sum_x = 0.0f64;
    let mut sum_u1 = 0.0f64;
    let mut sum_u2 = 0.0f64;
    let mut used = 0u64;
    let mut diverged = false;

    for n in 0..horizon {
        // Both observation streams advance every step regardless of who
        // listens, so the draws are position-locked to the timeline.
        let zv1: f64 = noise.v1.sample(StandardNormal);
        let zv2: f64 = noise.v2.sample(StandardNormal);

        let (u1, u2) = match active {
            None => (0.0, 0.0),
            Some((controller, sigma_sq, gain)) => {
                let z = if controller == 1 { zv1 } else { zv2 };
                let y = x + sigma_sq.sqrt() * z;
                belief = if n == 0 {
                    kalman_correct(belief, sigma_sq, y)
                } else {
                    kalman_update(belief, a, sigma_sq, y, u_prev)?
                };
                let u = -gain * belief.estimate;
                u_prev = u;
                if controller == 1 {
                    (u, 0.0)
                } else {
                    (0.0, u)
                }
            }
        };

        if n >= burn_in {
            sum_x += x * x;
            sum_u1 += u1 * u1;
            sum_u2 += u2 * u2;
            used += 1;
        }

        if x.abs() > DIVERGENCE_LIMIT {
            diverged = true;
            break;
        }

        let w: f64 = noise.w.sample(StandardNormal);
        x = a * x + u1 + u2 + w;
    }

    let denom = used.max(1) as f64;
    Ok(SimResult {
        avg_x_sq: sum_x / denom,
        avg_u1_sq: sum_u1 / denom,
        avg_u2_sq: sum_u2 / denom,
        diverged,
        horizon_used: used,
        seed,
    })
}

/// Runs one simulation per gain and reports empirical `(D, P)` estimates
/// aligned with `k_grid`. Per-gain seeds are derived from `seed` by a
/// SplitMix-style mix so runs stay independent; burn-in follows
/// [`default_burn_in`]. Divergence is flagged per point, not fatal.
pub fn estimate_tradeoff_empirical(
    params: &SystemParams,
    controller: u8,
    k_grid: &[f64],
    horizon: u64,
    seed: u64,
) -> Result<Vec<EmpiricalPoint>> {
    let mut out = Vec::with_capacity(k_grid.len());
    for (i, &gain) in k_grid.iter().enumerate() {
        let run_seed = splitmix(seed, i as u64);
        let burn_in = default_burn_in(params.a, gain).min(horizon / 2);
        let res = simulate(
            params,
            StrategySpec::SingleKalman { controller, gain },
            horizon,
            burn_in,
            run_seed,
        )?;
        let power = if controller == 1 {
            res.avg_u1_sq
        } else {
            res.avg_u2_sq
        };
        out.push(EmpiricalPoint {
            gain,
            distortion_hat: res.avg_x_sq,
            power_hat: power,
            diverged: res.diverged,
            long_mixing: (params.a - gain).abs() >= 0.999,
        });
    }
    Ok(out)
}

fn splitmix(seed: u64, i: u64) -> u64 {
    let mut z = seed
        .wrapping_add(1)
        .wrapping_mul(0x9E37_79B9_7F4A_7C15)
        .wrapping_add(i.wrapping_mul(0xBF58_476D_1CE4_E5B9));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::centralized::tradeoff_point;

    fn params(a: f64, s1: f64, s2: f64) -> SystemParams {
        SystemParams::new(a, s1, s2).unwrap()
    }

    #[test]
    fn seed_determinism() {
        let p = params(1.0, 2.0, 5.0);
        let strat = StrategySpec::SingleKalman {
            controller: 1,
            gain: 1.0,
        };
        let a = simulate(&p, strat, 20_000, 1_000, 42).unwrap();
        let b = simulate(&p, strat, 20_000, 1_000, 42).unwrap();
        assert_eq!(a, b);
        let c = simulate(&p, strat, 20_000, 1_000, 43).unwrap();
        assert_ne!(a.avg_x_sq, c.avg_x_sq);
    }

    #[test]
    fn zero_strategy_matches_stationary_variance() {
        let p = params(0.5, 1.0, 1.0);
        let res = simulate(&p, StrategySpec::Zero, 400_000, 10_000, 7).unwrap();
        assert!(!res.diverged);
        assert!((res.avg_x_sq - 4.0 / 3.0).abs() < 0.02, "{}", res.avg_x_sq);
        assert_eq!(res.avg_u1_sq, 0.0);
        assert_eq!(res.avg_u2_sq, 0.0);
    }

    #[test]
    fn unstable_autonomous_plant_diverges() {
        let p = params(1.5, 1.0, 1.0);
        let res = simulate(&p, StrategySpec::Zero, 100_000, 10, 3).unwrap();
        assert!(res.diverged);
    }

    #[test]
    fn kalman_strategy_tracks_closed_form() {
        let p = params(1.0, 2.0, 1e6);
        let strat = StrategySpec::SingleKalman {
            controller: 1,
            gain: 1.0,
        };
        let res = simulate(&p, strat, 300_000, 10_000, 11).unwrap();
        let (d, pw) = tradeoff_point(1.0, 2.0, 1.0).unwrap();
        assert!(!res.diverged);
        assert!((res.avg_x_sq - d).abs() / d < 0.05, "{}", res.avg_x_sq);
        assert!((res.avg_u1_sq - pw).abs() / pw < 0.05, "{}", res.avg_u1_sq);
        assert_eq!(res.avg_u2_sq, 0.0);
    }

    #[test]
    fn information_pattern_purity() {
        // Controller 1's behavior must not depend on the unused stream's
        // noise scale.
        let strat = StrategySpec::SingleKalman {
            controller: 1,
            gain: 0.8,
        };
        let r1 = simulate(&params(1.0, 2.0, 1.0), strat, 50_000, 1_000, 5).unwrap();
        let r2 = simulate(&params(1.0, 2.0, 1e9), strat, 50_000, 1_000, 5).unwrap();
        assert_eq!(r1.avg_x_sq, r2.avg_x_sq);
        assert_eq!(r1.avg_u1_sq, r2.avg_u1_sq);
    }

    #[test]
    fn controller_indices_follow_the_callers_numbering() {
        // Caller's controller 2 holds the accurate stream after a swap.
        let p = params(1.0, 9.0, 1.0);
        assert!(p.swapped);
        let strat = StrategySpec::SingleKalman {
            controller: 2,
            gain: 1.0,
        };
        let res = simulate(&p, strat, 200_000, 10_000, 9).unwrap();
        // Distortion close to the accurate-stream closed form, not the
        // blurry one.
        let (d_accurate, _) = tradeoff_point(1.0, 1.0, 1.0).unwrap();
        assert!((res.avg_x_sq - d_accurate).abs() / d_accurate < 0.05);
        assert_eq!(res.avg_u1_sq, 0.0);
        assert!(res.avg_u2_sq > 0.0);
    }

    #[test]
    fn horizon_must_exceed_burn_in() {
        let p = params(1.0, 1.0, 1.0);
        assert!(simulate(&p, StrategySpec::Zero, 100, 100, 1).is_err());
    }

    #[test]
    fn empirical_sweep_alignment_and_flags() {
        let p = params(1.0, 1.0, 1.0);
        let grid = [0.2, 0.6, 1.0, 1.999];
        let pts = estimate_tradeoff_empirical(&p, 1, &grid, 60_000, 17).unwrap();
        assert_eq!(pts.len(), 4);
        for (pt, &g) in pts.iter().zip(grid.iter()) {
            assert_eq!(pt.gain, g);
        }
        assert!(pts[3].long_mixing);
        assert!(!pts[1].long_mixing);

        let empty = estimate_tradeoff_empirical(&p, 1, &[], 1_000, 17).unwrap();
        assert!(empty.is_empty());
    }

    #[test]
    fn empirical_sweep_matches_closed_form_loosely() {
        let p = params(1.0, 1.0, 1.0);
        let grid = [0.4, 0.8, 1.2];
        let pts = estimate_tradeoff_empirical(&p, 1, &grid, 400_000, 23).unwrap();
        for pt in &pts {
            let (d, pw) = tradeoff_point(1.0, 1.0, pt.gain).unwrap();
            assert!((pt.distortion_hat - d).abs() / d < 0.05);
            assert!((pt.power_hat - pw).abs() / pw.max(0.01) < 0.05);
        }
    }
}
