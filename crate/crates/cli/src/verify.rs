//! Constant-ratio verification: achievable cost over lower-bound cost
//! across parameter grids, compared against the per-regime constants.
//!
//! The claims being checked are one-sided: the best single-controller
//! Kalman strategy's cost is within a universal factor of any strategy's
//! cost. Per regime the factors are 6 (`|a| < 0.9`), 1700
//! (`0.9 <= |a| < 1`), 540 (`|a| = 1`), and 6e6 (`1 < |a| <= 2.5`); for the
//! unstable band the report additionally notes whether the tighter 2e6
//! figure held, since the two appear in different places of the source
//! analysis and are both of interest.

use dlqg_core::bounds::{
    piecewise_cost_lower_bound, piecewise_lower, select_slicing_indices, sliced_cost_lower_bound,
    sliced_distortion_bound, BoundBreakdown, PiecewiseCase, SearchConfig, SlicedPowers,
    SlicingIndices,
};
use dlqg_core::centralized::{guaranteed_envelope, tradeoff_point, SegmentKind};
use dlqg_core::kalman::kalman_steady_state_error;
use dlqg_core::params::{classify_regime, CostWeights, Regime, SystemParams};
use rayon::prelude::*;
use serde::Serialize;
use std::fmt;

/// Tunables of a verification run.
#[derive(Debug, Clone)]
pub struct VerifyConfig {
    /// Also evaluate the sup-min slicing bound and take the larger lower
    /// bound. Roughly three orders of magnitude slower per sample.
    pub use_lemma: bool,
    pub lemma_search: SearchConfig,
    /// Number of grid samples receiving the slicing-consistency checks in
    /// [`check_soundness`].
    pub lemma_check_samples: usize,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig {
            use_lemma: false,
            lemma_search: SearchConfig::default(),
            lemma_check_samples: 20,
        }
    }
}

/// Hard per-regime ratio threshold.
pub fn regime_threshold(regime: Regime) -> f64 {
    match regime {
        Regime::VeryStable => 6.0,
        Regime::SlowStable => 1700.0,
        Regime::Marginal => 540.0,
        Regime::SlowUnstable => 6.0e6,
        Regime::OutOfScope => f64::INFINITY,
    }
}

/// Reporting band for the unstable regime: values in `(2e6, 6e6]` pass but
/// are flagged.
pub const UNSTABLE_FLAG_THRESHOLD: f64 = 2.0e6;

/// Cartesian verification grid.
#[derive(Debug, Clone, Serialize)]
pub struct GridSpec {
    pub a_values: Vec<f64>,
    /// `(sigma_v1_sq, sigma_v2_sq)` pairs with the first entry no larger.
    pub sigma_pairs: Vec<(f64, f64)>,
    pub weights: Vec<CostWeights>,
}

impl GridSpec {
    /// The default grid: eigenvalues covering every regime and case
    /// boundary, noise variances spanning both orderings of the Kalman
    /// error against `1/|a^2 - 1|`, and power prices across six decades.
    pub fn default_grid() -> Self {
        let mut a_values = Vec::new();
        for m in [0.3, 0.7, 0.9, 0.95, 0.99, 1.0, 1.01, 1.1, 1.5, 2.0, 2.5] {
            a_values.push(m);
            a_values.push(-m);
        }
        let sigmas = [0.5, 1.0, 2.0, 10.0, 100.0, 1000.0, 100_000.0];
        let mut sigma_pairs = Vec::new();
        for (i, &s1) in sigmas.iter().enumerate() {
            for &s2 in &sigmas[i..] {
                sigma_pairs.push((s1, s2));
            }
        }
        let prices = [1e-3, 1.0, 1e3];
        let mut weights = Vec::new();
        for &r1 in &prices {
            for &r2 in &prices {
                weights.push(CostWeights::new(1.0, r1, r2).unwrap());
            }
        }
        GridSpec {
            a_values,
            sigma_pairs,
            weights,
        }
    }

    /// Keeps only eigenvalues of the given regime.
    pub fn restrict_to_regime(mut self, regime: Regime) -> Self {
        self.a_values.retain(|&a| classify_regime(a) == regime);
        self
    }

    pub fn is_empty(&self) -> bool {
        self.a_values.is_empty() || self.sigma_pairs.is_empty() || self.weights.is_empty()
    }
}

/// Classification of one grid sample's ratio.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SampleClass {
    /// Both sides finite and positive; the ratio is meaningful.
    Finite,
    /// Both sides infinite: the claim is vacuously satisfied.
    ConsistentInf,
    /// The state is unpriced (or both sides vanish); excluded from maxima.
    DegenerateZero,
}

/// One evaluated grid cell.
#[derive(Debug, Clone, Serialize)]
pub struct RatioSample {
    pub a: f64,
    pub sigma_v1_sq: f64,
    pub sigma_v2_sq: f64,
    pub q: f64,
    pub r1: f64,
    pub r2: f64,
    pub regime: Regime,
    pub upper: f64,
    pub upper_controller: u8,
    pub upper_gain: f64,
    pub lower: f64,
    pub lower_source: String,
    pub ratio: Option<f64>,
    pub class: SampleClass,
}

/// Per-regime verdict.
#[derive(Debug, Clone, Serialize)]
pub struct RegimeSummary {
    pub regime: Regime,
    pub samples: usize,
    pub finite_samples: usize,
    pub consistent_inf: usize,
    pub degenerate: usize,
    pub max_ratio: Option<f64>,
    /// Index into the report's sample list of the worst cell.
    pub argmax: Option<usize>,
    pub threshold: f64,
    pub pass: bool,
    /// Unstable regime only: whether the tighter 2e6 band also held.
    pub within_tight_band: Option<bool>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RatioReport {
    pub samples: Vec<RatioSample>,
    pub summaries: Vec<RegimeSummary>,
    pub all_pass: bool,
}

impl RatioReport {
    pub fn worst_sample(&self) -> Option<&RatioSample> {
        self.summaries
            .iter()
            .filter_map(|s| s.argmax)
            .map(|i| &self.samples[i])
            .max_by(|x, y| {
                let rx = x.ratio.unwrap_or(0.0) / regime_threshold(x.regime);
                let ry = y.ratio.unwrap_or(0.0) / regime_threshold(y.regime);
                rx.partial_cmp(&ry).unwrap()
            })
    }
}

/// A sample where the achievable side undercut the lower bound, or where an
/// impossible finite/infinite pairing appeared. Either means a bug in one
/// of the two sides, not a property of the parameters.
#[derive(Debug, Clone, Serialize)]
pub struct InvariantViolation {
    pub what: String,
    pub a: f64,
    pub sigma_v1_sq: f64,
    pub sigma_v2_sq: f64,
    pub q: f64,
    pub r1: f64,
    pub r2: f64,
}

impl fmt::Display for InvariantViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} at a={}, sv1^2={}, sv2^2={}, q={}, r1={}, r2={}",
            self.what, self.a, self.sigma_v1_sq, self.sigma_v2_sq, self.q, self.r1, self.r2
        )
    }
}

#[derive(Debug)]
pub enum VerifyError {
    Core(dlqg_core::Error),
    Invariant(Box<InvariantViolation>),
}

impl fmt::Display for VerifyError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            VerifyError::Core(e) => write!(f, "{e}"),
            VerifyError::Invariant(v) => write!(f, "invariant violation: {v}"),
        }
    }
}

impl std::error::Error for VerifyError {}

impl From<dlqg_core::Error> for VerifyError {
    fn from(e: dlqg_core::Error) -> Self {
        VerifyError::Core(e)
    }
}

/// Evaluates one cell: achievable cost, lower bound, and their ratio.
pub fn ratio_at(
    params: &SystemParams,
    weights: &CostWeights,
    cfg: &VerifyConfig,
) -> Result<RatioSample, VerifyError> {
    let (upper, controller, gain) =
        dlqg_core::centralized::decentralized_upper_cost(params, weights)?;
    let mut lower = piecewise_cost_lower_bound(params, weights)?;
    if cfg.use_lemma {
        let sliced = sliced_cost_lower_bound(params, weights, &cfg.lemma_search)?;
        if sliced.value > lower.value {
            lower = sliced;
        }
    }
    sample_from_parts(params, weights, upper, controller, gain, &lower)
}

fn sample_from_parts(
    params: &SystemParams,
    weights: &CostWeights,
    upper: f64,
    controller: u8,
    gain: f64,
    lower: &BoundBreakdown,
) -> Result<RatioSample, VerifyError> {
    let regime = params.regime();
    let (class, ratio) = if weights.q == 0.0 || (upper == 0.0 && lower.value == 0.0) {
        (SampleClass::DegenerateZero, None)
    } else if upper.is_infinite() && lower.value.is_infinite() {
        (SampleClass::ConsistentInf, None)
    } else if upper.is_finite() && lower.value.is_infinite() {
        return Err(VerifyError::Invariant(Box::new(InvariantViolation {
            what: format!(
                "finite achievable cost {upper} against an infinite lower bound"
            ),
            a: params.a,
            sigma_v1_sq: params.sigma_v1_sq,
            sigma_v2_sq: params.sigma_v2_sq,
            q: weights.q,
            r1: weights.r1,
            r2: weights.r2,
        })));
    } else {
        let r = upper / lower.value;
        if r < 1.0 - 1e-9 {
            return Err(VerifyError::Invariant(Box::new(InvariantViolation {
                what: format!("ratio {r} below 1: the lower bound exceeds the achievable cost"),
                a: params.a,
                sigma_v1_sq: params.sigma_v1_sq,
                sigma_v2_sq: params.sigma_v2_sq,
                q: weights.q,
                r1: weights.r1,
                r2: weights.r2,
            })));
        }
        (SampleClass::Finite, Some(r))
    };
    Ok(RatioSample {
        a: params.a,
        sigma_v1_sq: params.sigma_v1_sq,
        sigma_v2_sq: params.sigma_v2_sq,
        q: weights.q,
        r1: weights.r1,
        r2: weights.r2,
        regime,
        upper,
        upper_controller: controller,
        upper_gain: gain,
        lower: lower.value,
        lower_source: lower.source.label(),
        ratio,
        class,
    })
}

/// Evaluates [`ratio_at`] over the whole grid and summarizes per regime.
///
/// Cells are processed in parallel; the output ordering follows the grid
/// index regardless of scheduling.
pub fn sweep(grid: &GridSpec, cfg: &VerifyConfig) -> Result<RatioReport, VerifyError> {
    if grid.is_empty() {
        return Err(VerifyError::Core(dlqg_core::Error::InvalidArgument(
            "verification grid must be nonempty",
        )));
    }
    let mut cells = Vec::new();
    for &a in &grid.a_values {
        for &(s1, s2) in &grid.sigma_pairs {
            for w in &grid.weights {
                cells.push((a, s1, s2, *w));
            }
        }
    }
    let samples: Result<Vec<RatioSample>, VerifyError> = cells
        .par_iter()
        .map(|&(a, s1, s2, w)| {
            let params = SystemParams::new(a, s1, s2)?;
            ratio_at(&params, &w, cfg)
        })
        .collect();
    let samples = samples?;

    let mut summaries = Vec::new();
    for regime in [
        Regime::VeryStable,
        Regime::SlowStable,
        Regime::Marginal,
        Regime::SlowUnstable,
    ] {
        let idxs: Vec<usize> = samples
            .iter()
            .enumerate()
            .filter(|(_, s)| s.regime == regime)
            .map(|(i, _)| i)
            .collect();
        if idxs.is_empty() {
            continue;
        }
        let mut max_ratio: Option<f64> = None;
        let mut argmax = None;
        let mut finite = 0;
        let mut inf = 0;
        let mut degen = 0;
        for &i in &idxs {
            match samples[i].class {
                SampleClass::Finite => {
                    finite += 1;
                    let r = samples[i].ratio.unwrap();
                    if max_ratio.is_none_or(|m| r > m) {
                        max_ratio = Some(r);
                        argmax = Some(i);
                    }
                }
                SampleClass::ConsistentInf => inf += 1,
                SampleClass::DegenerateZero => degen += 1,
            }
        }
        let threshold = regime_threshold(regime);
        let pass = max_ratio.is_none_or(|m| m <= threshold);
        let within_tight_band = if regime == Regime::SlowUnstable {
            Some(max_ratio.is_none_or(|m| m <= UNSTABLE_FLAG_THRESHOLD))
        } else {
            None
        };
        summaries.push(RegimeSummary {
            regime,
            samples: idxs.len(),
            finite_samples: finite,
            consistent_inf: inf,
            degenerate: degen,
            max_ratio,
            argmax,
            threshold,
            pass,
            within_tight_band,
        });
    }
    let all_pass = summaries.iter().all(|s| s.pass);
    Ok(RatioReport {
        samples,
        summaries,
        all_pass,
    })
}

/// One soundness violation; an empty list is the expected outcome.
#[derive(Debug, Clone, Serialize)]
pub struct SoundnessViolation {
    pub kind: &'static str,
    pub detail: String,
    pub a: f64,
    pub sigma_v1_sq: f64,
    pub sigma_v2_sq: f64,
}

#[derive(Debug, Clone, Serialize, Default)]
pub struct SoundnessReport {
    pub violations: Vec<SoundnessViolation>,
    pub pairings_checked: usize,
    pub consistency_checked: usize,
    pub envelopes_checked: usize,
}

/// Achievable-side curve cache: distortion as a function of a power cap.
struct CurveCache {
    points: Vec<(f64, f64)>, // (power, prefix-min distortion), sorted by power
}

impl CurveCache {
    fn build(a: f64, sigma_v_sq: f64) -> Self {
        let lo = a.abs() - 1.0;
        let hi = a.abs() + 1.0;
        let mut pts = Vec::with_capacity(4100);
        for i in 0..4096 {
            let k = lo + (hi - lo) * (i as f64 + 0.5) / 4096.0;
            if let Ok((d, p)) = tradeoff_point(a.abs(), sigma_v_sq, k) {
                pts.push((p, d));
            }
        }
        for k in [0.0, a.abs(), a.abs() - 1.0 / a.abs()] {
            if let Ok((d, p)) = tradeoff_point(a.abs(), sigma_v_sq, k) {
                pts.push((p, d));
            }
        }
        pts.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap());
        let mut best = f64::INFINITY;
        for p in &mut pts {
            best = best.min(p.1);
            p.1 = best;
        }
        CurveCache { points: pts }
    }

    /// Minimum achievable distortion with power at most `cap`.
    fn distortion_at(&self, cap: f64) -> f64 {
        let mut lo = 0usize;
        let mut hi = self.points.len();
        while lo < hi {
            let mid = (lo + hi) / 2;
            if self.points[mid].0 <= cap {
                lo = mid + 1;
            } else {
                hi = mid;
            }
        }
        if lo == 0 {
            f64::INFINITY
        } else {
            self.points[lo - 1].1
        }
    }
}

fn power_probe_grid(params: &SystemParams) -> Vec<f64> {
    let mut probes: Vec<f64> = (0..12)
        .map(|i| 10f64.powf(-4.0 + 7.0 * i as f64 / 11.0))
        .collect();
    let a2 = params.a * params.a;
    let s2 = kalman_steady_state_error(params.a, params.sigma_v2_sq).unwrap_or(0.0);
    let s1 = kalman_steady_state_error(params.a, params.sigma_v1_sq).unwrap_or(0.0);
    let mut push = |x: f64| {
        if x.is_finite() && x > 0.0 {
            probes.push(x * 0.97);
            probes.push(x * 1.03);
        }
    };
    match classify_regime(params.a) {
        Regime::SlowUnstable => {
            let gap = a2 - 1.0;
            push(gap / 20.0);
            push(1.0 / 75.0);
            push(1.0 / 150.0);
            push(1.0 / s2);
            push(gap * gap * s1 / 40_000.0);
            push(gap * gap * s2 / 40_000.0);
        }
        Regime::Marginal => {
            push(1.0 / (4.0 * params.sigma_v2_sq.sqrt()));
            push(1.0 / 64.0);
            push(0.02);
        }
        Regime::SlowStable => {
            push(1.0 / s2);
            push(1.0 / 40.0);
            push((1.0 - a2) / 20.0);
        }
        _ => {}
    }
    probes
}

/// Cross-checks the three bound families against the achievable curve on
/// every grid cell:
///
/// 1. pairing: wherever the piecewise distortion bound is finite, the best
///    single controller achieves at most `c` times it using at most `c`
///    times the power, `c` the regime constant;
/// 2. slicing consistency: each lettered case is dominated by the slicing
///    functional at its proof-selected indices (finite cases), or the
///    functional passes the divergence target `1e6` for growing terminal
///    index (infinite cases) — run on a deterministic subset of cells;
/// 3. envelope dominance: every guaranteed envelope piece is met by an
///    explicit gain on the closed-form curve.
///
/// Violations are returned as data; an error here means malformed input,
/// not a failed check.
pub fn check_soundness(grid: &GridSpec, cfg: &VerifyConfig) -> Result<SoundnessReport, VerifyError> {
    check_soundness_with(grid, cfg, |params, p1, p2| {
        piecewise_lower(params, p1, p2).map_err(VerifyError::from)
    })
}

/// [`check_soundness`] with a caller-supplied piecewise bound evaluator;
/// exercised by the mutation harness in the test suite to confirm the
/// checks can actually fail.
pub fn check_soundness_with<F>(
    grid: &GridSpec,
    cfg: &VerifyConfig,
    lower_eval: F,
) -> Result<SoundnessReport, VerifyError>
where
    F: Fn(&SystemParams, f64, f64) -> Result<BoundBreakdown, VerifyError> + Sync,
{
    let mut cells = Vec::new();
    for &a in &grid.a_values {
        for &(s1, s2) in &grid.sigma_pairs {
            cells.push((a, s1, s2));
        }
    }
    let lemma_stride = cells
        .len()
        .checked_div(cfg.lemma_check_samples)
        .map_or(usize::MAX, |s| s.max(1));

    let partials: Result<Vec<SoundnessReport>, VerifyError> = cells
        .par_iter()
        .enumerate()
        .map(|(cell_idx, &(a, s1, s2))| {
            let params = SystemParams::new(a, s1, s2)?;
            let mut rep = SoundnessReport::default();
            let curve1 = CurveCache::build(a, params.sigma_v1_sq);
            let curve2 = CurveCache::build(a, params.sigma_v2_sq);
            let c = regime_threshold(params.regime());
            let probes = power_probe_grid(&params);

            for &p1 in &probes {
                for &p2 in &probes {
                    let bound = lower_eval(&params, p1, p2)?;
                    rep.pairings_checked += 1;
                    let at_matching = curve1.distortion_at(p1).min(curve2.distortion_at(p2));
                    if bound.value.is_finite() {
                        // Soundness: the bound never exceeds what a single
                        // controller achieves at the same powers.
                        if at_matching < bound.value * (1.0 - 1e-9) {
                            rep.violations.push(SoundnessViolation {
                                kind: "soundness",
                                detail: format!(
                                    "D_L={} > achievable D_U={at_matching} at p1={p1}, p2={p2} ({})",
                                    bound.value,
                                    bound.source.label()
                                ),
                                a,
                                sigma_v1_sq: params.sigma_v1_sq,
                                sigma_v2_sq: params.sigma_v2_sq,
                            });
                        }
                        // Tightness pairing: scaling both powers by the
                        // regime constant buys a distortion within the same
                        // constant of the bound.
                        let achievable =
                            curve1.distortion_at(c * p1).min(curve2.distortion_at(c * p2));
                        if achievable > c * bound.value * (1.0 + 1e-9) {
                            rep.violations.push(SoundnessViolation {
                                kind: "pairing",
                                detail: format!(
                                    "D_U(c*powers)={achievable} > c*D_L={} at p1={p1}, p2={p2} ({})",
                                    c * bound.value,
                                    bound.source.label()
                                ),
                                a,
                                sigma_v1_sq: params.sigma_v1_sq,
                                sigma_v2_sq: params.sigma_v2_sq,
                            });
                        }
                    } else if at_matching.is_finite() {
                        rep.violations.push(SoundnessViolation {
                            kind: "soundness",
                            detail: format!(
                                "infinite D_L against finite achievable {at_matching} at p1={p1}, p2={p2}"
                            ),
                            a,
                            sigma_v1_sq: params.sigma_v1_sq,
                            sigma_v2_sq: params.sigma_v2_sq,
                        });
                    }
                }
            }

            if cell_idx % lemma_stride == 0 {
                check_case_consistency(&params, &probes, &mut rep);
            }

            check_envelope_dominance(&params, &mut rep);
            Ok(rep)
        })
        .collect();

    let mut merged = SoundnessReport::default();
    for p in partials? {
        merged.violations.extend(p.violations);
        merged.pairings_checked += p.pairings_checked;
        merged.consistency_checked += p.consistency_checked;
        merged.envelopes_checked += p.envelopes_checked;
    }
    Ok(merged)
}

fn regime_cases(regime: Regime) -> Vec<PiecewiseCase> {
    match regime {
        Regime::SlowUnstable => "abcdefghi"
            .chars()
            .map(PiecewiseCase::Unstable)
            .collect(),
        Regime::Marginal => "abc".chars().map(PiecewiseCase::Marginal).collect(),
        Regime::SlowStable => "abcd".chars().map(PiecewiseCase::SlowStable).collect(),
        _ => Vec::new(),
    }
}

fn case_bound_value(
    case: PiecewiseCase,
    params: &SystemParams,
    p1: f64,
    p2: f64,
) -> Option<f64> {
    let s2 = kalman_steady_state_error(params.a, params.sigma_v2_sq).ok()?;
    let a2 = params.a * params.a;
    Some(match case {
        PiecewiseCase::Unstable(letter) => match letter {
            'a' | 'c' | 'g' | 'h' => f64::INFINITY,
            'b' => 0.002774 * s2 + 1.0,
            'd' => 0.00389 / p1.max(p2) + 1.0,
            'e' => 0.0006976 * s2 + 1.0,
            'f' => 0.0006976 / p1 + 1.0,
            'i' => 0.0002732 * s2 + 1.0,
            _ => return None,
        },
        PiecewiseCase::Marginal(letter) => {
            let sv2 = params.sigma_v2_sq.sqrt();
            match letter {
                'a' => 0.09168 * sv2 + 1.0,
                'b' => 0.02417 / p1 + 1.0,
                'c' => 0.003772 / p1.max(p2) + 1.0,
                _ => return None,
            }
        }
        PiecewiseCase::SlowStable(letter) => match letter {
            'a' => 0.009131 * s2 + 1.0,
            'b' => 0.009131 / p1 + 1.0,
            'c' => 0.001201 / p1.max(p2) + 1.0,
            'd' => 0.0869 / (1.0 - a2) + 1.0,
            _ => return None,
        },
    })
}

/// Divergence target for cases whose proof grows the terminal index
/// without bound.
const DIVERGENCE_TARGET: f64 = 1e6;

fn check_case_consistency(params: &SystemParams, probes: &[f64], rep: &mut SoundnessReport) {
    let cases = regime_cases(params.regime());
    for &p1 in probes {
        for &p2 in probes {
            for &case in &cases {
                // Case (h) is the controller-swapped image of (g). On a
                // noise-ordered grid its hypothesis implies (g)'s hypothesis
                // at swapped powers, which is the chain actually evaluated.
                let (sel_case, e1, e2) = if case == PiecewiseCase::Unstable('h') {
                    match select_slicing_indices(case, params, SlicedPowers::new(p1, p2).unwrap())
                    {
                        Ok(_) => {}
                        Err(_) => continue, // (h) hypothesis fails here
                    }
                    (PiecewiseCase::Unstable('g'), p2, p1)
                } else {
                    (case, p1, p2)
                };
                let powers = match SlicedPowers::new(e1, e2) {
                    Ok(p) => p,
                    Err(_) => continue,
                };
                let idx = match select_slicing_indices(sel_case, params, powers) {
                    Ok(idx) => idx,
                    Err(_) => continue, // hypothesis fails or no indices exist
                };
                rep.consistency_checked += 1;
                let target = case_bound_value(case, params, p1, p2).unwrap_or(1.0);
                if target.is_finite() {
                    match sliced_distortion_bound(params, e1, e2, idx) {
                        Ok(v) if v >= target - 1e-9 => {}
                        Ok(v) => rep.violations.push(SoundnessViolation {
                            kind: "case-consistency",
                            detail: format!(
                                "case {:?}: functional {v} below case bound {target} at p1={p1}, p2={p2}, idx={idx:?}"
                            , case),
                            a: params.a,
                            sigma_v1_sq: params.sigma_v1_sq,
                            sigma_v2_sq: params.sigma_v2_sq,
                        }),
                        Err(e) => rep.violations.push(SoundnessViolation {
                            kind: "case-consistency",
                            detail: format!("case {case:?}: evaluation failed: {e}"),
                            a: params.a,
                            sigma_v1_sq: params.sigma_v1_sq,
                            sigma_v2_sq: params.sigma_v2_sq,
                        }),
                    }
                } else {
                    // Scan the free terminal index until the divergence
                    // target is passed.
                    let mut k = (idx.k2.max(2)).next_power_of_two();
                    let mut reached = false;
                    while k <= (1 << 20) {
                        let probe = SlicingIndices::new(idx.k1, idx.k2, k).unwrap();
                        if let Ok(v) = sliced_distortion_bound(params, e1, e2, probe) {
                            if v >= DIVERGENCE_TARGET {
                                reached = true;
                                break;
                            }
                        }
                        k *= 2;
                    }
                    if !reached {
                        rep.violations.push(SoundnessViolation {
                            kind: "case-consistency",
                            detail: format!(
                                "case {case:?}: functional never reached {DIVERGENCE_TARGET} while growing k (p1={p1}, p2={p2})"
                            ),
                            a: params.a,
                            sigma_v1_sq: params.sigma_v1_sq,
                            sigma_v2_sq: params.sigma_v2_sq,
                        });
                    }
                }
            }
        }
    }
}

fn check_envelope_dominance(params: &SystemParams, rep: &mut SoundnessReport) {
    let segments = match guaranteed_envelope(params.a, params.sigma_v1_sq) {
        Ok(s) => s,
        Err(_) => return,
    };
    let a = params.a.abs();
    let sv = params.sigma_v1_sq;
    let curve = CurveCache::build(a, sv);
    for seg in &segments {
        rep.envelopes_checked += 1;
        match seg.kind {
            SegmentKind::ZeroPowerPoint => {
                if let Ok((d, p)) = tradeoff_point(a, sv, 0.0) {
                    if p != 0.0 || d > seg.d_bound * (1.0 + 1e-9) {
                        rep.violations.push(envelope_violation(params, seg.source, 0.0, d));
                    }
                }
            }
            SegmentKind::PointGuarantee => {
                let k = a - 1.0 / a;
                match tradeoff_point(a, sv, k) {
                    Ok((d, p)) if p <= seg.t_min * (1.0 + 1e-9) && d <= seg.d_bound * (1.0 + 1e-9) => {}
                    _ => rep.violations.push(envelope_violation(
                        params,
                        seg.source,
                        seg.t_min,
                        seg.d_bound,
                    )),
                }
            }
            SegmentKind::InverseSegment => {
                let t_lo = if seg.t_min > 0.0 { seg.t_min } else { seg.t_max * 1e-6 };
                for i in 0..=12 {
                    let t = t_lo * (seg.t_max / t_lo).powf(i as f64 / 12.0);
                    let bound = seg.d_bound / t;
                    let mut ok = curve.distortion_at(t) <= bound * (1.0 + 1e-9);
                    if !ok {
                        for k in analytic_gains(a, t) {
                            if let Ok((d, p)) = tradeoff_point(a, sv, k) {
                                if p <= t * (1.0 + 1e-9) && d <= bound * (1.0 + 1e-9) {
                                    ok = true;
                                    break;
                                }
                            }
                        }
                    }
                    if !ok {
                        rep.violations
                            .push(envelope_violation(params, seg.source, t, bound));
                    }
                }
            }
        }
    }
}

/// Gains that realize the guaranteed inverse segments at power `t`.
fn analytic_gains(a: f64, t: f64) -> Vec<f64> {
    let mut out = Vec::new();
    if a <= 1.0 {
        if t <= 1.0 {
            out.push(a - (1.0 - t).sqrt()); // closed-loop variance matches t
        }
        out.push(2.0 * t / (1.0 + t)); // exact power match on a marginal plant
    } else {
        let inner = 1.0 - t / (2.0 * (a + 1.0) * (a + 1.0));
        if inner >= 0.0 {
            let delta = 1.0 / a - inner.sqrt();
            out.push(a - 1.0 / a + delta);
        }
        out.push(a - 1.0 / a);
    }
    out
}

fn envelope_violation(
    params: &SystemParams,
    source: &'static str,
    t: f64,
    bound: f64,
) -> SoundnessViolation {
    SoundnessViolation {
        kind: "envelope",
        detail: format!("segment {source}: no gain meets D <= {bound} with P <= {t}"),
        a: params.a,
        sigma_v1_sq: params.sigma_v1_sq,
        sigma_v2_sq: params.sigma_v2_sq,
    }
}
