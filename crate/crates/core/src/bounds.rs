//! Converse side: distortion and cost lower bounds.
//!
//! Three families of bounds are provided.
//!
//! * **Slicing functionals.** For slicing indices `1 <= k1 <= k2 <= k`, the
//!   functions [`distortion_bound_unstable`] (`|a| > 1`),
//!   [`distortion_bound_marginal`] (`|a| = 1`) and
//!   [`distortion_bound_stable`] (`|a| < 1`) evaluate closed-form lower
//!   bounds on the terminal state distortion given weighted power budgets
//!   `(p1, p2)`. Each has the shape
//!   `(sqrt(first) - sqrt(c1 p1) - sqrt(c2 p2))_+^2 + 1`, where `first`
//!   collapses the remaining state uncertainty by information terms `I`
//!   (observations up to `k1`) and `I'(p1)` (the second controller's
//!   observations on `[k1, k2)`), both in base-2 logs.
//! * **Piecewise case bounds.** [`piecewise_lower`] dispatches to a
//!   regime-specific list of lettered cases with fixed constants; cases can
//!   return infinity where no finite power stabilizes the loop.
//! * **Weighted-cost bounds.** [`piecewise_cost_lower_bound`] and
//!   [`sliced_cost_lower_bound`] turn the distortion bounds into lower
//!   bounds on the optimal average cost
//!   `q E[x^2] + r1 E[u1^2] + r2 E[u2^2]` by minimizing over power budgets
//!   (and, for the sliced form, taking the best enumerated index triple;
//!   every evaluated triple yields a valid bound, so a truncated
//!   enumeration only weakens, never invalidates, the result).
//!
//! Negative eigenvalues are handled through `|a|`; all bounds depend on the
//! plant only through `|a|` and the noise variances.

use crate::kalman::kalman_steady_state_error;
use crate::params::{classify_regime, cost_power, cost_state, CostWeights, Regime, SystemParams};
use crate::{Error, Result};
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

#[cfg(not(feature = "std"))]
#[allow(unused_imports)]
use num_traits::Float;

/// Slicing indices `(k1, k2, k)` with `1 <= k1 <= k2 <= k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SlicingIndices {
    pub k1: u32,
    pub k2: u32,
    pub k: u32,
}

impl SlicingIndices {
    pub fn new(k1: u32, k2: u32, k: u32) -> Result<Self> {
        if k1 < 1 || k1 > k2 || k2 > k {
            return Err(Error::InvalidArgument(
                "slicing indices must satisfy 1 <= k1 <= k2 <= k",
            ));
        }
        Ok(SlicingIndices { k1, k2, k })
    }
}

/// Nonnegative weighted power budgets; infinity is allowed.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SlicedPowers {
    pub p1_tilde: f64,
    pub p2_tilde: f64,
}

impl SlicedPowers {
    pub fn new(p1_tilde: f64, p2_tilde: f64) -> Result<Self> {
        if p1_tilde.is_nan() || p2_tilde.is_nan() || p1_tilde < 0.0 || p2_tilde < 0.0 {
            return Err(Error::InvalidArgument("power budgets must be >= 0"));
        }
        Ok(SlicedPowers { p1_tilde, p2_tilde })
    }
}

/// Identifies a lettered piecewise case within its regime family.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum PiecewiseCase {
    /// `1 < |a| <= 2.5`, cases `(a)..(j)`.
    Unstable(char),
    /// `|a| = 1`, cases `(a)..(d)`.
    Marginal(char),
    /// `0.9 <= |a| < 1`, cases `(a)..(e)`.
    SlowStable(char),
}

impl PiecewiseCase {
    pub fn letter(&self) -> char {
        match self {
            PiecewiseCase::Unstable(c)
            | PiecewiseCase::Marginal(c)
            | PiecewiseCase::SlowStable(c) => *c,
        }
    }
}

/// Which construction produced a bound value.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum BoundSource {
    /// Universal process-noise floor `D >= 1`.
    Floor,
    /// Sup-min search over the slicing functionals.
    Sliced,
    /// A lettered piecewise case.
    Case(PiecewiseCase),
}

impl BoundSource {
    /// Short label used in tables: `floor`, `sliced`, or `(c)`.
    pub fn label(&self) -> String {
        match self {
            BoundSource::Floor => String::from("floor"),
            BoundSource::Sliced => String::from("sliced"),
            BoundSource::Case(c) => format!("({})", c.letter()),
        }
    }
}

/// Interior quantities of a slicing functional evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct InnerTerms {
    /// Residual variance of the information-limited interval.
    pub sigma: f64,
    /// Information collected by both observations before `k1` (bits).
    pub info: f64,
    /// Information collected by the blurrier observation on `[k1, k2)`.
    pub info_prime: f64,
}

/// A lower-bound value together with its provenance.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BoundBreakdown {
    /// Lower bound on distortion or on weighted cost (infinity allowed).
    pub value: f64,
    pub source: BoundSource,
    pub indices: Option<SlicingIndices>,
    pub inner_terms: Option<InnerTerms>,
}

/// `sum_{i=0}^{n-1} r^i`, i.e. `(1 - r^n) / (1 - r)`.
///
/// Falls back to an explicit partial sum, accumulated smallest term first,
/// when `1 - r` is small enough to cancel catastrophically.
fn geo_sum(r: f64, n: u32) -> f64 {
    if n == 0 {
        return 0.0;
    }
    if (1.0 - r).abs() < 1e-3 {
        let mut acc = 0.0;
        if r <= 1.0 {
            for i in (0..n).rev() {
                acc += r.powi(i as i32);
            }
        } else {
            for i in 0..n {
                acc += r.powi(i as i32);
            }
        }
        acc
    } else {
        (1.0 - r.powi(n as i32)) / (1.0 - r)
    }
}

/// Precomputed coefficients of one slicing-functional evaluation. For fixed
/// indices the bound is
/// `(sqrt((sigma + w2) / 2^(2 I'(p1)) + w3) - sqrt(sub1 * p1) - sqrt(sub2 * p2))_+^2 + 1`
/// with `I'(p1) = (ip_n / 2) log2(1 + ip_const + ip_pcoeff * p1)`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct SlicedCtx {
    sigma: f64,
    info: f64,
    w2: f64,
    w3: f64,
    ip_n: f64,
    ip_const: f64,
    ip_pcoeff: f64,
    sub1: f64,
    sub2: f64,
}

impl SlicedCtx {
    fn info_prime(&self, p1: f64) -> f64 {
        if self.ip_n == 0.0 {
            return 0.0;
        }
        let pterm = if p1 == 0.0 { 0.0 } else { self.ip_pcoeff * p1 };
        0.5 * self.ip_n * (1.0 + self.ip_const + pterm).log2()
    }

    pub(crate) fn eval(&self, p1: f64, p2: f64) -> f64 {
        let shrink = (2.0 * self.info_prime(p1)).exp2();
        let first = ((self.sigma + self.w2) / shrink + self.w3).sqrt();
        let s1 = if p1 == 0.0 { 0.0 } else { (self.sub1 * p1).sqrt() };
        let s2 = if p2 == 0.0 { 0.0 } else { (self.sub2 * p2).sqrt() };
        let pos = (first - s1 - s2).max(0.0);
        let v = pos * pos + 1.0;
        // Indeterminate arithmetic (inf - inf) collapses to the safe floor.
        if v.is_nan() {
            1.0
        } else {
            v
        }
    }

    pub(crate) fn terms(&self, p1: f64) -> InnerTerms {
        InnerTerms {
            sigma: self.sigma,
            info: self.info,
            info_prime: self.info_prime(p1),
        }
    }
}

fn check_powers(p1: f64, p2: f64) -> Result<()> {
    if p1.is_nan() || p2.is_nan() || p1 < 0.0 || p2 < 0.0 {
        return Err(Error::InvalidArgument("power budgets must be >= 0"));
    }
    Ok(())
}

/// Coefficients for `|a| > 1`.
fn ctx_unstable(params: &SystemParams, idx: SlicingIndices) -> SlicedCtx {
    let a = params.a.abs();
    let a2 = a * a;
    let (sv1, sv2) = (params.sigma_v1_sq, params.sigma_v2_sq);
    let k1 = idx.k1 as i32;
    let k2 = idx.k2 as i32;
    let k = idx.k as i32;
    let sneg2 = |n: i32| geo_sum(1.0 / a2, n as u32); // (1 - a^{-2n}) / (1 - a^{-2})
    let sneg1 = |n: i32| geo_sum(1.0 / a, n as u32); // (1 - a^{-n}) / (1 - a^{-1})

    let info = if k1 == 1 {
        0.0
    } else {
        let t = a2.powi(k1 - 2) * sneg2(k1 - 1) * sneg2(k1 - 1) / (k1 - 1) as f64;
        0.5 * (k1 - 1) as f64 * ((1.0 + t / sv1).log2() + (1.0 + t / sv2).log2())
    };
    let shrink_i = (2.0 * info).exp2();
    let sigma = a2.powi(k - 1) * sneg2(k1 - 1) / shrink_i;

    let n = (k2 - k1) as f64;
    let (ip_const, ip_pcoeff) = if k2 == k1 {
        (0.0, 0.0)
    } else {
        let g = sneg2(k2 - k1);
        // a^{2(k2-1-k)} * sigma expanded to keep every factor moderate.
        let t1 = 2.0 * a2.powi(k2 - 2) * sneg2(k1 - 1) * g / shrink_i;
        let t2 = 2.0 * a2.powi(k2 - 1 - k1) * g * g;
        let t3c = 2.0 * a2.powi(k2 - k1 - 2) * g * sneg1(k2 - 1 - k1) * sneg1(k - k1);
        let den = n * sv2;
        ((t1 + t2) / den, t3c / den)
    };

    SlicedCtx {
        sigma,
        info,
        w2: a2.powi(k - k1) * sneg2(k2 - k1),
        w3: a2.powi(k - k2) * sneg2(k - k2),
        ip_n: n,
        ip_const,
        ip_pcoeff,
        sub1: a2.powi(k - k1 - 1) * sneg1(k - k1) * sneg1(k - k1),
        sub2: a2.powi(k - k2 - 1) * sneg1(k - k2) * sneg1(k - k2),
    }
}

/// Coefficients for `|a| = 1` (arithmetic slicing).
fn ctx_marginal(params: &SystemParams, idx: SlicingIndices) -> SlicedCtx {
    let (sv1, sv2) = (params.sigma_v1_sq, params.sigma_v2_sq);
    let k1 = idx.k1 as f64;
    let k2 = idx.k2 as f64;
    let k = idx.k as f64;

    let info = if idx.k1 == 1 {
        0.0
    } else {
        0.5 * (k1 - 1.0) * ((1.0 + (k1 - 1.0) / sv1).log2() + (1.0 + (k1 - 1.0) / sv2).log2())
    };
    let sigma = (k1 - 1.0) / (2.0 * info).exp2();

    let n = k2 - k1;
    let (ip_const, ip_pcoeff) = if idx.k2 == idx.k1 {
        (0.0, 0.0)
    } else {
        (
            (2.0 * sigma + 2.0 * n) / sv2,
            2.0 * (n - 1.0) * (k - k1) / sv2,
        )
    };

    SlicedCtx {
        sigma,
        info,
        w2: n,
        w3: k - k2,
        ip_n: n,
        ip_const,
        ip_pcoeff,
        sub1: (k - k1) * (k - k1),
        sub2: (k - k2) * (k - k2),
    }
}

/// Coefficients for `|a| < 1`.
fn ctx_stable(params: &SystemParams, idx: SlicingIndices) -> SlicedCtx {
    let a = params.a.abs();
    let a2 = a * a;
    let (sv1, sv2) = (params.sigma_v1_sq, params.sigma_v2_sq);
    let k1 = idx.k1 as i32;
    let k2 = idx.k2 as i32;
    let k = idx.k as i32;
    let g2 = |n: i32| geo_sum(a2, n as u32); // (1 - a^{2n}) / (1 - a^2)
    let g1 = |n: i32| geo_sum(a, n as u32); // (1 - a^n) / (1 - a)

    let info = if k1 == 1 {
        0.0
    } else {
        let g = g2(k1 - 1);
        0.5 * (k1 - 1) as f64 * ((1.0 + g / sv1).log2() + (1.0 + g / sv2).log2())
    };
    let shrink_i = (2.0 * info).exp2();
    let sigma = a2.powi(k - k1 + 1) * g2(k1 - 1) / shrink_i;

    let n = (k2 - k1) as f64;
    let (ip_const, ip_pcoeff) = if k2 == k1 {
        (0.0, 0.0)
    } else {
        // a^{2(k1-k)} * sigma expanded: a^{2(k1-k)} a^{2(k-k1+1)} = a^2.
        let t1 = 2.0 * a2 * g2(k1 - 1) * g2(k2 - k1) / shrink_i;
        let t2 = 2.0 * n * g2(k2 - k1);
        let t3c = 2.0 * a.powi(k1 - k) * g1(k2 - k1) * g1(k2 - 1 - k1) * g1(k - k1);
        let den = n * sv2;
        ((t1 + t2) / den, t3c / den)
    };

    SlicedCtx {
        sigma,
        info,
        w2: a2.powi(k - k2 + 1) * g2(k2 - k1),
        w3: a2 * g2(k - k2),
        ip_n: n,
        ip_const,
        ip_pcoeff,
        sub1: g1(k - k1) * g1(k - k1),
        sub2: g1(k - k2) * g1(k - k2),
    }
}

pub(crate) fn sliced_ctx(params: &SystemParams, idx: SlicingIndices) -> Result<SlicedCtx> {
    match classify_regime(params.a) {
        Regime::SlowUnstable => Ok(ctx_unstable(params, idx)),
        Regime::Marginal => Ok(ctx_marginal(params, idx)),
        Regime::VeryStable | Regime::SlowStable => Ok(ctx_stable(params, idx)),
        Regime::OutOfScope => Err(Error::UnsupportedRegime { a: params.a }),
    }
}

/// Slicing distortion bound for `|a| > 1`.
pub fn distortion_bound_unstable(
    params: &SystemParams,
    p1_tilde: f64,
    p2_tilde: f64,
    idx: SlicingIndices,
) -> Result<f64> {
    if params.a.abs() <= 1.0 {
        return Err(Error::WrongRegime {
            expected: "|a| > 1",
            a: params.a,
        });
    }
    check_powers(p1_tilde, p2_tilde)?;
    Ok(ctx_unstable(params, idx).eval(p1_tilde, p2_tilde))
}

/// Slicing distortion bound for `|a| = 1`.
pub fn distortion_bound_marginal(
    params: &SystemParams,
    p1_tilde: f64,
    p2_tilde: f64,
    idx: SlicingIndices,
) -> Result<f64> {
    if params.a.abs() != 1.0 {
        return Err(Error::WrongRegime {
            expected: "|a| = 1",
            a: params.a,
        });
    }
    check_powers(p1_tilde, p2_tilde)?;
    Ok(ctx_marginal(params, idx).eval(p1_tilde, p2_tilde))
}

/// Slicing distortion bound for `0 <= |a| < 1`.
pub fn distortion_bound_stable(
    params: &SystemParams,
    p1_tilde: f64,
    p2_tilde: f64,
    idx: SlicingIndices,
) -> Result<f64> {
    if params.a.abs() >= 1.0 {
        return Err(Error::WrongRegime {
            expected: "|a| < 1",
            a: params.a,
        });
    }
    check_powers(p1_tilde, p2_tilde)?;
    Ok(ctx_stable(params, idx).eval(p1_tilde, p2_tilde))
}

/// Regime-dispatched slicing bound.
pub fn sliced_distortion_bound(
    params: &SystemParams,
    p1_tilde: f64,
    p2_tilde: f64,
    idx: SlicingIndices,
) -> Result<f64> {
    check_powers(p1_tilde, p2_tilde)?;
    Ok(sliced_ctx(params, idx)?.eval(p1_tilde, p2_tilde))
}

struct CaseEval {
    letter: char,
    value: f64,
}

/// Piecewise distortion lower bound for `1 < |a| <= 2.5`.
///
/// Evaluates every lettered case whose hypothesis holds at `(p1, p2)` and
/// returns the largest bound with its label. Cases `(a)`, `(c)`, `(g)`,
/// `(h)` yield infinity: below those power thresholds no strategy keeps the
/// state variance finite.
pub fn unstable_piecewise_lower(
    params: &SystemParams,
    p1: f64,
    p2: f64,
) -> Result<BoundBreakdown> {
    if !matches!(classify_regime(params.a), Regime::SlowUnstable) {
        return Err(Error::WrongRegime {
            expected: "1 < |a| <= 2.5",
            a: params.a,
        });
    }
    check_powers(p1, p2)?;
    let a2 = params.a * params.a;
    let gap = a2 - 1.0;
    let s1 = kalman_steady_state_error(params.a, params.sigma_v1_sq)?;
    let s2 = kalman_steady_state_error(params.a, params.sigma_v2_sq)?;
    let t1 = gap * gap * s1 / 40_000.0;
    let t2 = gap * gap * s2 / 40_000.0;
    let pmax = p1.max(p2);

    let mut cases: Vec<CaseEval> = Vec::new();
    if s1 >= 150.0 && s2 >= 150.0 && p1 <= t1 && p2 <= t2 {
        cases.push(CaseEval {
            letter: 'a',
            value: f64::INFINITY,
        });
    }
    if s1 >= 150.0 && s2 >= 150.0 && p1 <= t1 {
        cases.push(CaseEval {
            letter: 'b',
            value: 0.002774 * s2 + 1.0,
        });
    }
    if p1 <= gap / 20.0 && p2 <= gap / 20.0 {
        cases.push(CaseEval {
            letter: 'c',
            value: f64::INFINITY,
        });
    }
    if p1 <= 1.0 / 75.0 && p2 <= 1.0 / 75.0 {
        cases.push(CaseEval {
            letter: 'd',
            value: 0.00389 / pmax + 1.0,
        });
    }
    if s2 >= 150.0 && p1 <= 1.0 / s2 {
        cases.push(CaseEval {
            letter: 'e',
            value: 0.0006976 * s2 + 1.0,
        });
    }
    if s2 >= 150.0 && p1 >= 1.0 / s2 && p1 <= 1.0 / 150.0 {
        cases.push(CaseEval {
            letter: 'f',
            value: 0.0006976 / p1 + 1.0,
        });
    }
    if s2 >= 150.0 && p1 <= gap / 20.0 && p2 <= t2 {
        cases.push(CaseEval {
            letter: 'g',
            value: f64::INFINITY,
        });
    }
    if s1 >= 150.0 && p1 <= t1 && p2 <= gap / 20.0 {
        cases.push(CaseEval {
            letter: 'h',
            value: f64::INFINITY,
        });
    }
    if s2 >= 150.0 && p1 <= gap / 20.0 {
        cases.push(CaseEval {
            letter: 'i',
            value: 0.0002732 * s2 + 1.0,
        });
    }
    cases.push(CaseEval {
        letter: 'j',
        value: (0.1035 * s1).max(1.0),
    });

    Ok(pick_max(cases, PiecewiseCase::Unstable))
}

/// Piecewise distortion lower bound for `|a| = 1`. The noise scales enter
/// through the standard deviations, not the Kalman error.
pub fn marginal_piecewise_lower(
    params: &SystemParams,
    p1: f64,
    p2: f64,
) -> Result<BoundBreakdown> {
    if params.a.abs() != 1.0 {
        return Err(Error::WrongRegime {
            expected: "|a| = 1",
            a: params.a,
        });
    }
    check_powers(p1, p2)?;
    let sv1 = params.sigma_v1_sq.sqrt();
    let sv2 = params.sigma_v2_sq.sqrt();

    let mut cases: Vec<CaseEval> = Vec::new();
    if sv2 >= 16.0 && p1 <= 1.0 / (4.0 * sv2) {
        cases.push(CaseEval {
            letter: 'a',
            value: 0.09168 * sv2 + 1.0,
        });
    }
    if sv2 >= 16.0 && p1 >= 1.0 / (4.0 * sv2) && p1 <= 1.0 / 64.0 {
        cases.push(CaseEval {
            letter: 'b',
            value: 0.02417 / p1 + 1.0,
        });
    }
    if p1 <= 0.02 && p2 <= 0.02 {
        cases.push(CaseEval {
            letter: 'c',
            value: 0.003772 / p1.max(p2) + 1.0,
        });
    }
    cases.push(CaseEval {
        letter: 'd',
        value: (core::f64::consts::FRAC_1_SQRT_2 * sv1).max(1.0),
    });

    Ok(pick_max(cases, PiecewiseCase::Marginal))
}

/// Piecewise distortion lower bound for `0.9 <= |a| < 1`.
pub fn slow_stable_piecewise_lower(
    params: &SystemParams,
    p1: f64,
    p2: f64,
) -> Result<BoundBreakdown> {
    if !matches!(classify_regime(params.a), Regime::SlowStable) {
        return Err(Error::WrongRegime {
            expected: "0.9 <= |a| < 1",
            a: params.a,
        });
    }
    check_powers(p1, p2)?;
    let s1 = kalman_steady_state_error(params.a, params.sigma_v1_sq)?;
    let s2 = kalman_steady_state_error(params.a, params.sigma_v2_sq)?;
    let shrink = 1.0 - params.a * params.a;
    let pmax = p1.max(p2);

    let mut cases: Vec<CaseEval> = Vec::new();
    if s2 >= 40.0 && p1 <= 1.0 / s2 {
        cases.push(CaseEval {
            letter: 'a',
            value: 0.009131 * s2 + 1.0,
        });
    }
    if s2 >= 40.0 && p1 >= 1.0 / s2 && p1 <= 1.0 / 40.0 {
        cases.push(CaseEval {
            letter: 'b',
            value: 0.009131 / p1 + 1.0,
        });
    }
    if pmax >= shrink / 20.0 && pmax <= 1.0 / 40.0 {
        cases.push(CaseEval {
            letter: 'c',
            value: 0.001201 / pmax + 1.0,
        });
    }
    if pmax <= shrink / 20.0 {
        cases.push(CaseEval {
            letter: 'd',
            value: 0.0869 / shrink + 1.0,
        });
    }
    cases.push(CaseEval {
        letter: 'e',
        value: (0.2636 * s1).max(1.0),
    });

    Ok(pick_max(cases, PiecewiseCase::SlowStable))
}

fn pick_max(cases: Vec<CaseEval>, wrap: fn(char) -> PiecewiseCase) -> BoundBreakdown {
    let mut best = &cases[0];
    for c in &cases[1..] {
        if c.value > best.value {
            best = c;
        }
    }
    BoundBreakdown {
        value: best.value,
        source: BoundSource::Case(wrap(best.letter)),
        indices: None,
        inner_terms: None,
    }
}

/// Regime-dispatched piecewise bound; `|a| < 0.9` falls back to the
/// universal floor `D >= 1`.
pub fn piecewise_lower(params: &SystemParams, p1: f64, p2: f64) -> Result<BoundBreakdown> {
    match classify_regime(params.a) {
        Regime::SlowUnstable => unstable_piecewise_lower(params, p1, p2),
        Regime::Marginal => marginal_piecewise_lower(params, p1, p2),
        Regime::SlowStable => slow_stable_piecewise_lower(params, p1, p2),
        Regime::VeryStable => {
            check_powers(p1, p2)?;
            Ok(BoundBreakdown {
                value: 1.0,
                source: BoundSource::Floor,
                indices: None,
                inner_terms: None,
            })
        }
        Regime::OutOfScope => Err(Error::UnsupportedRegime { a: params.a }),
    }
}

/// Search budget for the sup-min cost bounds.
#[derive(Debug, Clone, Copy)]
pub struct SearchConfig {
    /// Largest terminal slicing index enumerated; all `k <= 16` are used,
    /// then powers of two up to this cap.
    pub k_max: u32,
    /// Log-spaced grid points per power axis for the inner minimization.
    pub grid_per_axis: usize,
    pub p_min: f64,
    pub p_max: f64,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            k_max: 64,
            grid_per_axis: 48,
            p_min: 1e-6,
            p_max: 1e6,
        }
    }
}

fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let (llo, lhi) = (lo.log10(), hi.log10());
    (0..n)
        .map(|i| 10f64.powf(llo + (lhi - llo) * i as f64 / (n - 1) as f64))
        .collect()
}

/// Largest multiplicative gap between consecutive positive candidates; the
/// local refinement must be able to bridge it.
fn axis_spacing(cands: &[f64]) -> f64 {
    let mut pos: Vec<f64> = cands.iter().copied().filter(|&x| x > 0.0).collect();
    pos.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut worst = 4.0f64;
    for w in pos.windows(2) {
        if w[0] > 0.0 {
            worst = worst.max(w[1] / w[0]);
        }
    }
    worst.min(1e4)
}

/// Minimizes `f` over the candidate cross product, then refines each axis by
/// a shrinking multiplicative scan around the incumbent. The initial scan
/// width covers one full grid gap so a coarse grid cannot trap the search in
/// the wrong basin; candidates may sit on discontinuities, so the search
/// stays derivative-free.
fn min2d<F: Fn(f64, f64) -> f64>(f: &F, cand1: &[f64], cand2: &[f64]) -> (f64, f64, f64) {
    let mut best = (f64::INFINITY, 0.0, 0.0);
    for &p1 in cand1 {
        for &p2 in cand2 {
            let v = f(p1, p2);
            if v < best.0 {
                best = (v, p1, p2);
            }
        }
    }
    let mut width = axis_spacing(cand1).max(axis_spacing(cand2));
    while width > 1.000_001 {
        for axis in 0..2 {
            let (_, bp1, bp2) = best;
            let center = if axis == 0 { bp1 } else { bp2 };
            let base = if center > 0.0 { center } else { 1e-9 };
            for i in 0..33 {
                let m = (-1.0 + 2.0 * i as f64 / 32.0) * width.ln();
                let p = base * m.exp();
                let v = if axis == 0 { f(p, bp2) } else { f(bp1, p) };
                if v < best.0 {
                    best = if axis == 0 { (v, p, bp2) } else { (v, bp1, p) };
                }
            }
            // Zero stays a candidate at every round.
            let v = if axis == 0 { f(0.0, bp2) } else { f(bp1, 0.0) };
            if v < best.0 {
                best = if axis == 0 { (v, 0.0, bp2) } else { (v, bp1, 0.0) };
            }
        }
        width = width.sqrt();
    }
    best
}

/// Sup-min weighted-cost lower bound via the slicing functionals:
/// the best over enumerated index triples of
/// `min_{p1, p2 >= 0} q D(p1, p2) + r1 p1 + r2 p2`.
///
/// Any truncation of the enumeration approximates the supremum from below,
/// so the returned value is a valid bound for every budget. The bound is
/// reported infinite when the per-`k` maxima keep growing geometrically past
/// `1e12` at the cap, which is how a divergent family is recognized.
pub fn sliced_cost_lower_bound(
    params: &SystemParams,
    weights: &CostWeights,
    search: &SearchConfig,
) -> Result<BoundBreakdown> {
    if classify_regime(params.a) == Regime::OutOfScope {
        return Err(Error::UnsupportedRegime { a: params.a });
    }
    let (r_lo, r_hi) = weights.ordered_power_weights(params);
    let q = weights.q;

    let mut ks: Vec<u32> = (1..=16.min(search.k_max)).collect();
    let mut k = 32;
    while k < search.k_max {
        ks.push(k);
        k *= 2;
    }
    if search.k_max > 16 {
        ks.push(search.k_max);
    }
    ks.dedup();

    let mut axis = vec![0.0f64];
    axis.extend(log_grid(search.p_min, search.p_max, search.grid_per_axis));

    let mut best = BoundBreakdown {
        value: f64::NEG_INFINITY,
        source: BoundSource::Sliced,
        indices: None,
        inner_terms: None,
    };
    let mut best_per_k: Vec<(u32, f64)> = Vec::new();
    for &kk in &ks {
        let mut k_best = f64::NEG_INFINITY;
        for k1 in 1..=kk {
            for k2 in k1..=kk {
                let idx = SlicingIndices::new(k1, k2, kk)?;
                let ctx = sliced_ctx(params, idx)?;
                let f = |p1: f64, p2: f64| {
                    cost_state(q, ctx.eval(p1, p2)) + cost_power(r_lo, p1) + cost_power(r_hi, p2)
                };
                let (v, p1, _p2) = min2d(&f, &axis, &axis);
                if v > k_best {
                    k_best = v;
                }
                if v > best.value {
                    best = BoundBreakdown {
                        value: v,
                        source: BoundSource::Sliced,
                        indices: Some(idx),
                        inner_terms: Some(ctx.terms(p1)),
                    };
                }
            }
        }
        best_per_k.push((kk, k_best));
    }

    // Divergence in the free terminal index: the bound is genuinely
    // infinite when it still grows geometrically at the enumeration cap.
    if best.value > 1e12 && best_per_k.len() >= 2 {
        let (_, prev) = best_per_k[best_per_k.len() - 2];
        let (_, last) = best_per_k[best_per_k.len() - 1];
        if last > 2.0 * prev {
            best.value = f64::INFINITY;
        }
    }
    Ok(best)
}

/// Weighted-cost lower bound from the piecewise case bounds:
/// `min_{p1, p2 >= 0} q D_case(p1, p2) + r1 p1 + r2 p2`.
///
/// The candidate set contains every case boundary (and a point just past
/// it on either side), the analytic balance points of the inverse-power
/// cases, a log-spaced grid, and large escape budgets; a local refinement
/// polishes the incumbent. Infinite-distortion regions contribute infinity,
/// so the result is infinite exactly when every escape is priced out.
pub fn piecewise_cost_lower_bound(
    params: &SystemParams,
    weights: &CostWeights,
) -> Result<BoundBreakdown> {
    let regime = classify_regime(params.a);
    if regime == Regime::OutOfScope {
        return Err(Error::UnsupportedRegime { a: params.a });
    }
    let (r_lo, r_hi) = weights.ordered_power_weights(params);
    let q = weights.q;
    if regime == Regime::VeryStable {
        return Ok(BoundBreakdown {
            value: cost_state(q, 1.0),
            source: BoundSource::Floor,
            indices: None,
            inner_terms: None,
        });
    }

    let a2 = params.a * params.a;
    let s1 = kalman_steady_state_error(params.a, params.sigma_v1_sq)?;
    let s2 = kalman_steady_state_error(params.a, params.sigma_v2_sq)?;
    let (boundaries, inverse_coeffs): (Vec<f64>, Vec<f64>) = match regime {
        Regime::SlowUnstable => {
            let gap = a2 - 1.0;
            (
                vec![
                    gap / 20.0,
                    1.0 / 75.0,
                    1.0 / 150.0,
                    1.0 / s2,
                    gap * gap * s1 / 40_000.0,
                    gap * gap * s2 / 40_000.0,
                ],
                vec![0.00389, 0.0006976],
            )
        }
        Regime::Marginal => (
            vec![1.0 / (4.0 * params.sigma_v2_sq.sqrt()), 1.0 / 64.0, 0.02],
            vec![0.02417, 0.003772],
        ),
        Regime::SlowStable => (
            vec![1.0 / s2, 1.0 / 40.0, (1.0 - a2) / 20.0],
            vec![0.009131, 0.001201],
        ),
        _ => unreachable!(),
    };

    let mut axis = vec![0.0f64, 1e12, 1e18];
    axis.extend(log_grid(1e-6, 1e6, 33));
    for &b in &boundaries {
        if b.is_finite() && b > 0.0 {
            axis.push(b * (1.0 - 1e-9));
            axis.push(b);
            axis.push(b * (1.0 + 1e-9));
        }
    }
    if q > 0.0 {
        for &c in &inverse_coeffs {
            for r in [r_lo, r_hi] {
                if r.is_finite() && r > 0.0 {
                    axis.push((q * c / r).sqrt());
                }
            }
        }
    }

    let f = |p1: f64, p2: f64| {
        let d = piecewise_lower(params, p1, p2).map(|b| b.value).unwrap_or(f64::INFINITY);
        cost_state(q, d) + cost_power(r_lo, p1) + cost_power(r_hi, p2)
    };
    let (value, p1, p2) = min2d(&f, &axis, &axis);
    let source = piecewise_lower(params, p1, p2)?.source;
    Ok(BoundBreakdown {
        value,
        source,
        indices: None,
        inner_terms: None,
    })
}

/// Proof-constructed slicing indices for a piecewise case.
///
/// Returns the smallest integers satisfying the case's bracketing
/// inequality. Cases proven by letting the terminal index grow without
/// bound return their minimal valid triple; the terminal index is free
/// beyond it. Cases argued through the centralized estimator carry no
/// indices and report [`Error::NotApplicable`], as does any call whose
/// hypothesis fails at `(params, powers)`.
///
/// Case `(h)` of the unstable family is the controller-swapped image of
/// `(g)`: the returned indices are meant to be evaluated against the
/// parameters with observation roles (and power budgets) exchanged.
pub fn select_slicing_indices(
    case: PiecewiseCase,
    params: &SystemParams,
    powers: SlicedPowers,
) -> Result<SlicingIndices> {
    let a = params.a.abs();
    let (p1, p2) = (powers.p1_tilde, powers.p2_tilde);
    let pmax = p1.max(p2);
    match case {
        PiecewiseCase::Unstable(letter) => {
            if classify_regime(params.a) != Regime::SlowUnstable {
                return Err(Error::WrongRegime {
                    expected: "1 < |a| <= 2.5",
                    a: params.a,
                });
            }
            let gap = a * a - 1.0;
            let s1 = kalman_steady_state_error(a, params.sigma_v1_sq)?;
            let s2 = kalman_steady_state_error(a, params.sigma_v2_sq)?;
            let t1 = gap * gap * s1 / 40_000.0;
            let t2 = gap * gap * s2 / 40_000.0;
            match letter {
                'a' => {
                    hyp(s1 >= 150.0 && s2 >= 150.0 && p1 <= t1 && p2 <= t2)?;
                    let k1 = bracket_geo_even(a, s1 / 24.0)?;
                    let k2 = bracket_geo_even(a, s2 / 24.0)?;
                    SlicingIndices::new(k1, k2, k2)
                }
                'b' => {
                    hyp(s1 >= 150.0 && s2 >= 150.0 && p1 <= t1)?;
                    let k1 = bracket_geo_even(a, s1 / 24.0)?;
                    let k2 = bracket_geo_even(a, s2 / 24.0)?;
                    SlicingIndices::new(k1, k2, k2)
                }
                'c' => {
                    hyp(p1 <= gap / 20.0 && p2 <= gap / 20.0)?;
                    SlicingIndices::new(1, 1, 1)
                }
                'd' => {
                    hyp(p1 <= 1.0 / 75.0 && p2 <= 1.0 / 75.0 && pmax > 0.0)?;
                    let k = bracket_geo_odd(a, 1.0 / (30.0 * pmax))?;
                    SlicingIndices::new(1, 1, k)
                }
                'e' => {
                    hyp(s2 >= 150.0 && p1 <= 1.0 / s2)?;
                    let k = bracket_geo_even(a, s2 / 24.0)?;
                    SlicingIndices::new(1, k, k)
                }
                'f' => {
                    hyp(s2 >= 150.0 && p1 >= 1.0 / s2 && p1 <= 1.0 / 150.0)?;
                    let k = bracket_geo_even(a, 1.0 / (24.0 * p1))?;
                    SlicingIndices::new(1, k, k)
                }
                'g' => {
                    hyp(s2 >= 150.0 && p1 <= gap / 20.0 && p2 <= t2)?;
                    let k2 = bracket_geo_even(a, s2 / 24.0)?;
                    SlicingIndices::new(1, k2, k2)
                }
                'h' => {
                    hyp(s1 >= 150.0 && p1 <= t1 && p2 <= gap / 20.0)?;
                    let k2 = bracket_geo_even(a, s1 / 24.0)?;
                    SlicingIndices::new(1, k2, k2)
                }
                'i' => {
                    hyp(s2 >= 150.0 && p1 <= gap / 20.0)?;
                    let k = bracket_geo_even(a, s2 / 24.0)?;
                    SlicingIndices::new(1, k, k)
                }
                'j' => Err(Error::NotApplicable(
                    "bound argued via the centralized estimator; no slicing indices",
                )),
                _ => Err(Error::InvalidArgument("unknown case letter")),
            }
        }
        PiecewiseCase::Marginal(letter) => {
            if params.a.abs() != 1.0 {
                return Err(Error::WrongRegime {
                    expected: "|a| = 1",
                    a: params.a,
                });
            }
            let sv2 = params.sigma_v2_sq.sqrt();
            match letter {
                'a' => {
                    hyp(sv2 >= 16.0 && p1 <= 1.0 / (4.0 * sv2))?;
                    let k2 = bracket_arith(sv2 / 4.0);
                    SlicingIndices::new(1, k2, k2)
                }
                'b' => {
                    hyp(sv2 >= 16.0 && p1 >= 1.0 / (4.0 * sv2) && p1 <= 1.0 / 64.0)?;
                    let k2 = bracket_arith(1.0 / (16.0 * p1));
                    SlicingIndices::new(1, k2, k2)
                }
                'c' => {
                    hyp(p1 <= 0.02 && p2 <= 0.02 && pmax > 0.0)?;
                    let k = bracket_arith(1.0 / (50.0 * pmax));
                    SlicingIndices::new(1, 1, k)
                }
                'd' => Err(Error::NotApplicable(
                    "bound argued via the centralized estimator; no slicing indices",
                )),
                _ => Err(Error::InvalidArgument("unknown case letter")),
            }
        }
        PiecewiseCase::SlowStable(letter) => {
            if classify_regime(params.a) != Regime::SlowStable {
                return Err(Error::WrongRegime {
                    expected: "0.9 <= |a| < 1",
                    a: params.a,
                });
            }
            let s2 = kalman_steady_state_error(a, params.sigma_v2_sq)?;
            let shrink = 1.0 - a * a;
            match letter {
                'a' => {
                    hyp(s2 >= 40.0 && p1 <= 1.0 / s2)?;
                    let k = bracket_stable(a, s2 / 40.0)?;
                    SlicingIndices::new(1, k, k)
                }
                'b' => {
                    hyp(s2 >= 40.0 && p1 >= 1.0 / s2 && p1 <= 1.0 / 40.0)?;
                    let k = bracket_stable(a, 1.0 / (40.0 * p1))?;
                    SlicingIndices::new(1, k, k)
                }
                'c' => {
                    hyp(pmax >= shrink / 20.0 && pmax <= 1.0 / 40.0)?;
                    let k = bracket_stable(a, 1.0 / (40.0 * pmax))?;
                    SlicingIndices::new(1, 1, k)
                }
                'd' => {
                    hyp(pmax <= shrink / 20.0)?;
                    let k = bracket_half(a)?;
                    SlicingIndices::new(1, 1, k)
                }
                'e' => Err(Error::NotApplicable(
                    "bound argued via the centralized estimator; no slicing indices",
                )),
                _ => Err(Error::InvalidArgument("unknown case letter")),
            }
        }
    }
}

fn hyp(ok: bool) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::NotApplicable("case hypothesis fails at these parameters"))
    }
}

/// Smallest `k >= 3` with
/// `(a^{2(k-2)} - 1)/(1 - a^{-2}) <= x < (a^{2(k-1)} - 1)/(1 - a^{-2})`,
/// for `|a| > 1`.
fn bracket_geo_even(a: f64, x: f64) -> Result<u32> {
    let a2 = a * a;
    let den = 1.0 - 1.0 / a2;
    let hi = |k: u32| (a2.powi(k as i32 - 1) - 1.0) / den;
    if x < (a2 - 1.0) / den {
        return Err(Error::NotApplicable("bracket target below the k = 3 cell"));
    }
    let mut k = 3u32;
    while hi(k) <= x {
        k += 1;
        if k > 8_000_000 {
            return Err(Error::NotApplicable("bracket scan exhausted"));
        }
    }
    Ok(k)
}

/// Smallest `k >= 2` with
/// `(a^{k-1} - 1)/(1 - a^{-1}) <= x < (a^k - 1)/(1 - a^{-1})`, for `|a| > 1`.
fn bracket_geo_odd(a: f64, x: f64) -> Result<u32> {
    let den = 1.0 - 1.0 / a;
    let hi = |k: u32| (a.powi(k as i32) - 1.0) / den;
    if x < (a - 1.0) / den {
        return Err(Error::NotApplicable("bracket target below the k = 2 cell"));
    }
    let mut k = 2u32;
    while hi(k) <= x {
        k += 1;
        if k > 8_000_000 {
            return Err(Error::NotApplicable("bracket scan exhausted"));
        }
    }
    Ok(k)
}

/// The integer `k` with `k - 2 <= x < k - 1`.
fn bracket_arith(x: f64) -> u32 {
    x.floor() as u32 + 2
}

/// Smallest `k >= 3` with
/// `(a^2 - a^{2(k-1)})/(1-a^2) <= x < (a^2 - a^{2k})/(1-a^2)`, for `|a| < 1`.
fn bracket_stable(a: f64, x: f64) -> Result<u32> {
    let a2 = a * a;
    let den = 1.0 - a2;
    if x < (a2 - a2 * a2) / den || x >= a2 / den {
        return Err(Error::NotApplicable("bracket target outside the geometric range"));
    }
    let mut k = 3u32;
    let hi = |k: u32| (a2 - a2.powi(k as i32)) / den;
    while hi(k) <= x {
        k += 1;
        if k > 8_000_000 {
            return Err(Error::NotApplicable("bracket scan exhausted"));
        }
    }
    Ok(k)
}

/// Smallest `k >= 3` with `a^{2k} <= 1/2 < a^{2(k-1)}`, for `0.9 <= |a| < 1`.
fn bracket_half(a: f64) -> Result<u32> {
    let a2 = a * a;
    let mut k = 3u32;
    while a2.powi(k as i32) > 0.5 {
        k += 1;
        if k > 8_000_000 {
            return Err(Error::NotApplicable("bracket scan exhausted"));
        }
    }
    Ok(k)
}

#[cfg(test)]
mod tests {
    use super::*;


    fn params(a: f64, s1: f64, s2: f64) -> SystemParams {
        SystemParams::new(a, s1, s2).unwrap()
    }

    fn idx(k1: u32, k2: u32, k: u32) -> SlicingIndices {
        SlicingIndices::new(k1, k2, k).unwrap()
    }

    #[test]
    fn indices_validate() {
        assert!(SlicingIndices::new(0, 1, 1).is_err());
        assert!(SlicingIndices::new(2, 1, 3).is_err());
        assert!(SlicingIndices::new(1, 3, 2).is_err());
        assert!(SlicingIndices::new(1, 1, 1).is_ok());
    }

    #[test]
    fn unstable_bound_hand_values() {
        let p = params(2.0, 1.0, 1.0);
        // Empty slicing: only the noise floor remains.
        assert_eq!(
            distortion_bound_unstable(&p, 5.0, 7.0, idx(1, 1, 1)).unwrap(),
            1.0
        );
        // k = 2 with zero powers: (sqrt(4))^2 + 1.
        let v = distortion_bound_unstable(&p, 0.0, 0.0, idx(1, 1, 2)).unwrap();
        assert!((v - 5.0).abs() < 1e-12);
        // Unit budget for the first controller subtracts exactly 1.
        let v = distortion_bound_unstable(&p, 1.0, 0.0, idx(1, 1, 2)).unwrap();
        assert!((v - 2.0).abs() < 1e-12);
    }

    #[test]
    fn marginal_bound_hand_values() {
        let p = params(1.0, 1.0, 1.0);
        assert_eq!(
            distortion_bound_marginal(&p, 0.0, 0.0, idx(1, 1, 1)).unwrap(),
            1.0
        );
        let v = distortion_bound_marginal(&p, 0.0, 0.0, idx(1, 1, 3)).unwrap();
        assert!((v - 3.0).abs() < 1e-12);
    }

    /// Independent spreadsheet-style evaluation of the marginal functional
    /// at (1, 6, 6): with k1 = 1 the residual term vanishes and
    /// `v = (k2-1) / (1 + (2(k2-1) + 2(k2-2)(k2-1) p1)/sv2^2)^(k2-1) + 1`
    /// at p1 = 0.
    #[test]
    fn marginal_bound_matches_independent_evaluation() {
        let p = params(1.0, 1.0, 256.0);
        let k2 = 6.0f64;
        let base: f64 = 1.0 + 2.0 * (k2 - 1.0) / 256.0;
        let expected = (k2 - 1.0) / base.powi(5) + 1.0;
        let v = distortion_bound_marginal(&p, 0.0, 0.0, idx(1, 6, 6)).unwrap();
        assert!((v - expected).abs() < 1e-12, "{v} vs {expected}");
    }

    #[test]
    fn stable_bound_hand_values() {
        let p = params(0.5, 1.0, 1.0);
        assert_eq!(
            distortion_bound_stable(&p, 0.0, 0.0, idx(1, 1, 1)).unwrap(),
            1.0
        );
        // W3 variance a^2 (1 - a^{2(k-k2)})/(1-a^2) = 0.25 at k = 2.
        let v = distortion_bound_stable(&p, 0.0, 0.0, idx(1, 1, 2)).unwrap();
        assert!((v - 1.25).abs() < 1e-12);
        // Huge budget clamps the positive part to zero.
        let v = distortion_bound_stable(&p, 1e9, 0.0, idx(1, 1, 2)).unwrap();
        assert_eq!(v, 1.0);
    }

    #[test]
    fn regime_dispatch_is_strict() {
        let p = params(1.0, 1.0, 1.0);
        assert!(distortion_bound_unstable(&p, 0.0, 0.0, idx(1, 1, 2)).is_err());
        assert!(distortion_bound_stable(&p, 0.0, 0.0, idx(1, 1, 2)).is_err());
        let p = params(1.5, 1.0, 1.0);
        assert!(distortion_bound_marginal(&p, 0.0, 0.0, idx(1, 1, 2)).is_err());
    }

    #[test]
    fn bounds_respect_floor_and_power_monotonicity() {
        let cases = [
            params(1.7, 0.5, 3.0),
            params(1.0, 2.0, 50.0),
            params(0.93, 1.0, 9.0),
        ];
        let budgets = [0.0, 1e-3, 0.1, 1.0, 30.0];
        for p in &cases {
            for &k1 in &[1u32, 2, 3] {
                for &k2 in &[3u32, 5] {
                    for &k in &[5u32, 9] {
                        let id = idx(k1, k2, k);
                        let mut prev = f64::INFINITY;
                        for &b in &budgets {
                            let v = sliced_distortion_bound(p, b, 0.3, id).unwrap();
                            assert!(v >= 1.0);
                            assert!(v <= prev + 1e-12, "nonincreasing in p1");
                            prev = v;
                        }
                        let mut prev = f64::INFINITY;
                        for &b in &budgets {
                            let v = sliced_distortion_bound(p, 0.3, b, id).unwrap();
                            assert!(v >= 1.0);
                            assert!(v <= prev + 1e-12, "nonincreasing in p2");
                            prev = v;
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn unstable_cases_fire_as_stated() {
        // Deep below the stabilization threshold: infinite via (c).
        let p = params(1.5, 1.0, 1.0);
        let gap: f64 = 1.25;
        let b = unstable_piecewise_lower(&p, gap / 20.0, gap / 20.0).unwrap();
        assert!(b.value.is_infinite());
        assert_eq!(b.source.label(), "(c)");

        // The (d) spot value at a = 1.1 where (c) cannot fire.
        let p = params(1.1, 1.0, 1.0);
        let b = unstable_piecewise_lower(&p, 1.0 / 75.0, 1.0 / 75.0).unwrap();
        assert!((b.value - 1.29175).abs() < 1e-12);
        assert_eq!(b.source.label(), "(d)");

        // (j) floor holds everywhere.
        let p = params(2.0, 1e5, 1e5);
        let s1 = kalman_steady_state_error(2.0, 1e5).unwrap();
        let b = unstable_piecewise_lower(&p, 1e9, 1e9).unwrap();
        assert!((b.value - (0.1035 * s1).max(1.0)).abs() < 1e-9);
        assert_eq!(b.source.label(), "(j)");
    }

    #[test]
    fn marginal_cases_fire_as_stated() {
        // (b) at its boundary: sv2 = 16, p1 = 1/64.
        let p = params(1.0, 1.0, 256.0);
        let b = marginal_piecewise_lower(&p, 1.0 / 64.0, 0.0).unwrap();
        assert!((b.value - (0.02417 * 64.0 + 1.0)).abs() < 1e-12);
        assert_eq!(b.source.label(), "(b)");

        // (c) at p1 = p2 = 1/50.
        let b = marginal_piecewise_lower(&params(1.0, 1.0, 1.0), 0.02, 0.02).unwrap();
        assert!((b.value - (0.003772 * 50.0 + 1.0)).abs() < 1e-12);
        assert_eq!(b.source.label(), "(c)");

        // (d) survives even a noiseless first observation.
        let b = marginal_piecewise_lower(&params(1.0, 0.0, 1.0), 5.0, 5.0).unwrap();
        assert_eq!(b.value, 1.0);
        assert_eq!(b.source.label(), "(d)");
    }

    #[test]
    fn slow_stable_cases_fire_as_stated() {
        // (d): both budgets below the autonomous threshold.
        let a = 0.95f64;
        let shrink = 1.0 - a * a;
        let p = params(a, 1.0, 1.0);
        let b = slow_stable_piecewise_lower(&p, shrink / 20.0, shrink / 21.0).unwrap();
        assert!((b.value - (0.0869 / shrink + 1.0)).abs() < 1e-12);
        assert_eq!(b.source.label(), "(d)");

        // (a): large shadow error, tiny first budget.
        let p = params(0.999, 1e4, 1e6);
        let s2 = kalman_steady_state_error(0.999, 1e6).unwrap();
        assert!(s2 >= 40.0);
        let b = slow_stable_piecewise_lower(&p, 0.5 / s2, 1e3).unwrap();
        assert!(b.value >= 0.009131 * s2 + 1.0 - 1e-12);

        // (e) floor with the sigma branch active.
        let p = params(0.95, 100.0, 100.0);
        let s1 = kalman_steady_state_error(0.95, 100.0).unwrap();
        let b = slow_stable_piecewise_lower(&p, 1.0, 1.0).unwrap();
        assert!((b.value - (0.2636 * s1).max(1.0)).abs() < 1e-12);
        assert_eq!(b.source.label(), "(e)");
    }

    #[test]
    fn piecewise_cost_floor_for_very_stable() {
        let p = params(0.5, 1.0, 2.0);
        let w = CostWeights::new(1.0, 1.0, 1.0).unwrap();
        let b = piecewise_cost_lower_bound(&p, &w).unwrap();
        assert_eq!(b.value, 1.0);
        assert_eq!(b.source.label(), "floor");
    }

    #[test]
    fn piecewise_cost_marginal_never_infinite() {
        let p = params(1.0, 1.0, 100.0);
        let w = CostWeights::new(1.0, 3.0, 3.0).unwrap();
        let b = piecewise_cost_lower_bound(&p, &w).unwrap();
        assert!(b.value.is_finite());
        assert!(b.value >= 1.0);
    }

    #[test]
    fn piecewise_cost_infinite_only_at_infinite_prices() {
        let p = params(1.5, 1e5, 1e5);
        let w = CostWeights::new(1.0, 1e6, 1e6).unwrap();
        let b = piecewise_cost_lower_bound(&p, &w).unwrap();
        assert!(b.value.is_finite(), "finite prices always buy an escape");

        let w = CostWeights::new(1.0, f64::INFINITY, f64::INFINITY).unwrap();
        let b = piecewise_cost_lower_bound(&p, &w).unwrap();
        assert!(b.value.is_infinite());
    }

    #[test]
    fn sliced_cost_floor_cases() {
        let p = params(1.3, 2.0, 4.0);
        let search = SearchConfig {
            k_max: 16,
            grid_per_axis: 24,
            ..SearchConfig::default()
        };
        // Unpriced power lets the budgets clamp every subtracted term, but
        // triples with k1 = k2 = k keep their power-independent residual, so
        // the bound sits between the floor and the best achievable
        // distortion of the better-observed controller.
        let w = CostWeights::new(1.0, 0.0, 0.0).unwrap();
        let b = sliced_cost_lower_bound(&p, &w, &search).unwrap();
        assert!(b.value >= 1.0);
        let s1 = kalman_steady_state_error(1.3, 2.0).unwrap();
        assert!(b.value <= 1.3 * 1.3 * s1 + 1.0 + 1e-9);

        // Unpriced state: zero at zero budgets.
        let w = CostWeights::new(0.0, 1.0, 1.0).unwrap();
        let b = sliced_cost_lower_bound(&p, &w, &search).unwrap();
        assert_eq!(b.value, 0.0);
    }

    #[test]
    fn sliced_cost_detects_divergence_at_infinite_prices() {
        let p = params(2.0, 1e6, 1e6);
        let w = CostWeights::new(1.0, f64::INFINITY, f64::INFINITY).unwrap();
        let search = SearchConfig {
            k_max: 128,
            grid_per_axis: 16,
            ..SearchConfig::default()
        };
        let b = sliced_cost_lower_bound(&p, &w, &search).unwrap();
        assert!(b.value.is_infinite());
        // The piecewise bound agrees on the same parameters.
        let c = piecewise_cost_lower_bound(&p, &w).unwrap();
        assert!(c.value.is_infinite());
    }

    #[test]
    fn sliced_cost_stays_below_piecewise_escape_scale() {
        // Finite prices: both bounds are finite and the sliced bound is a
        // valid lower bound wherever the piecewise one is.
        let p = params(2.0, 1e6, 1e6);
        let w = CostWeights::new(1.0, 1e6, 1e6).unwrap();
        let search = SearchConfig {
            k_max: 32,
            grid_per_axis: 24,
            ..SearchConfig::default()
        };
        let b = sliced_cost_lower_bound(&p, &w, &search).unwrap();
        assert!(b.value.is_finite());
        assert!(b.value >= 1.0);
    }

    #[test]
    fn select_indices_examples() {
        // sigma_v2 = 24: smallest k2 >= 6 with k2-2 <= 6 < k2-1 is 8.
        let p = params(1.0, 1.0, 576.0);
        let got = select_slicing_indices(
            PiecewiseCase::Marginal('a'),
            &p,
            SlicedPowers::new(1.0 / 96.0, 0.0).unwrap(),
        )
        .unwrap();
        assert_eq!(got, idx(1, 8, 8));

        // Unstable (a): geometric bracket at Sigma1 just above 150, a = 1.1.
        let mut s = 1.0e4;
        // find a noise variance giving Sigma1 slightly above 150 at a = 1.1
        while kalman_steady_state_error(1.1, s).unwrap() < 150.5 {
            s *= 1.02;
        }
        let p = SystemParams::new(1.1, s, s).unwrap();
        let s1 = kalman_steady_state_error(1.1, s).unwrap();
        let gap: f64 = 1.1f64 * 1.1 - 1.0;
        let t1 = gap * gap * s1 / 40_000.0;
        let got = select_slicing_indices(
            PiecewiseCase::Unstable('a'),
            &p,
            SlicedPowers::new(t1 / 2.0, t1 / 2.0).unwrap(),
        )
        .unwrap();
        // Verify the bracketing inequality directly.
        let a2 = 1.1f64 * 1.1;
        let den = 1.0 - 1.0 / a2;
        let k1 = got.k1 as i32;
        assert!(got.k1 >= 3);
        assert!((a2.powi(k1 - 2) - 1.0) / den <= s1 / 24.0);
        assert!(s1 / 24.0 < (a2.powi(k1 - 1) - 1.0) / den);

        // Hypothesis failure reports not-applicable.
        let p = params(1.1, 1.0, 1.0);
        assert!(matches!(
            select_slicing_indices(
                PiecewiseCase::Unstable('a'),
                &p,
                SlicedPowers::new(0.0, 0.0).unwrap()
            ),
            Err(Error::NotApplicable(_))
        ));
    }

    #[test]
    fn select_indices_centralized_cases_not_applicable() {
        let powers = SlicedPowers::new(1.0, 1.0).unwrap();
        for (case, p) in [
            (PiecewiseCase::Unstable('j'), params(1.5, 1.0, 1.0)),
            (PiecewiseCase::Marginal('d'), params(1.0, 1.0, 1.0)),
            (PiecewiseCase::SlowStable('e'), params(0.95, 1.0, 1.0)),
        ] {
            assert!(matches!(
                select_slicing_indices(case, &p, powers),
                Err(Error::NotApplicable(_))
            ));
        }
    }

    #[test]
    fn geo_sum_matches_partial_sums() {
        for &(r, n) in &[(0.5f64, 7u32), (1.0001, 12), (0.9995, 9), (2.25, 5), (0.0, 4)] {
            let direct: f64 = (0..n).map(|i| r.powi(i as i32)).sum();
            assert!((geo_sum(r, n) - direct).abs() <= 1e-12 * direct.max(1.0));
        }
        assert_eq!(geo_sum(0.77, 0), 0.0);
    }
}
