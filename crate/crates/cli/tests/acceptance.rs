//! Acceptance suite: one test per criterion, each printing a PASS line with
//! its measured numbers (run with `cargo test --test acceptance -- --nocapture`
//! to see them). Tolerances and thresholds are pinned in code.

use dlqg_cli::verify::{
    check_soundness, regime_threshold, sweep, GridSpec, VerifyConfig, UNSTABLE_FLAG_THRESHOLD,
};
use dlqg_core::bounds::{
    distortion_bound_marginal, distortion_bound_stable, distortion_bound_unstable,
    marginal_piecewise_lower, slow_stable_piecewise_lower, unstable_piecewise_lower,
    SlicingIndices,
};
use dlqg_core::centralized::tradeoff_point;
use dlqg_core::kalman::{kalman_steady_state_error, kalman_update, KalmanBelief};
use dlqg_core::params::{CostWeights, Regime, SystemParams};
use dlqg_core::sim::{simulate, StrategySpec};
use std::time::Instant;

/// Criterion 1 — Riccati correctness: the fixed-point residual
/// |Sigma - f(Sigma)| of the returned steady state stays below
/// 1e-8 (1 + sigma_v^2) over a in [-2.5, 2.5] (step 0.05, plus 0) and
/// sigma_v^2 in {0} and 1e-3..1e8 (log steps). Budget: 1 s.
#[test]
fn criterion_1_riccati_residual() {
    let start = Instant::now();
    let mut a_grid: Vec<f64> = (0..=100).map(|i| -2.5 + 0.05 * i as f64).collect();
    a_grid.push(0.0);
    let mut s_grid = vec![0.0];
    for e in -3..=8 {
        s_grid.push(10f64.powi(e));
    }
    let mut worst: f64 = 0.0;
    for &a in &a_grid {
        for &s in &s_grid {
            let sigma = kalman_steady_state_error(a, s).unwrap();
            let m = a * a * sigma + 1.0;
            let residual = (sigma - m * s / (m + s)).abs();
            let normalized = residual / (1.0 + s);
            worst = worst.max(normalized);
            assert!(
                residual <= 1e-8 * (1.0 + s),
                "residual {residual} at a={a}, s={s}"
            );
        }
    }
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 1.0, "budget exceeded: {elapsed:?}");
    println!(
        "criterion 1 (riccati residual): PASS (worst residual/(1+s) = {worst:.3e}, {:.3}s)",
        elapsed.as_secs_f64()
    );
}

/// Criterion 2 — closed form vs Monte Carlo: a=1, sigma_v^2=2, k=1,
/// horizon 1e6, burn-in 1e4, 10 seeds, mean |D_hat - 2| <= 0.05 and
/// mean |P_hat - 1| <= 0.05; plus the autonomous a=0.5 run with
/// |D_hat - 4/3| <= 0.02. Budget: 5 s.
#[test]
fn criterion_2_monte_carlo_agreement() {
    let start = Instant::now();
    let params = SystemParams::new(1.0, 2.0, 2.0).unwrap();
    let strat = StrategySpec::SingleKalman {
        controller: 1,
        gain: 1.0,
    };
    let mut dev_d = 0.0;
    let mut dev_p = 0.0;
    for seed in 0..10u64 {
        let res = simulate(&params, strat, 1_000_000, 10_000, seed).unwrap();
        assert!(!res.diverged);
        dev_d += (res.avg_x_sq - 2.0).abs();
        dev_p += (res.avg_u1_sq - 1.0).abs();
    }
    dev_d /= 10.0;
    dev_p /= 10.0;
    assert!(dev_d <= 0.05, "mean |D_hat - 2| = {dev_d}");
    assert!(dev_p <= 0.05, "mean |P_hat - 1| = {dev_p}");

    let stable = SystemParams::new(0.5, 1.0, 1.0).unwrap();
    let res = simulate(&stable, StrategySpec::Zero, 1_000_000, 10_000, 0).unwrap();
    let dev_zero = (res.avg_x_sq - 4.0 / 3.0).abs();
    assert!(dev_zero <= 0.02, "|D_hat - 4/3| = {dev_zero}");

    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 5.0, "budget exceeded: {elapsed:?}");
    println!(
        "criterion 2 (monte carlo): PASS (mean dev D={dev_d:.4}, P={dev_p:.4}, zero-input dev={dev_zero:.4}, {:.2}s)",
        elapsed.as_secs_f64()
    );
}

fn rel_err(x: f64, y: f64) -> f64 {
    (x - y).abs() / y.abs().max(1.0)
}

/// Criterion 3 — reduced-form oracles: at k1 = k2 = 1 each slicing
/// functional equals its explicit single-radical form to 1e-12 relative
/// error over the stated grids. Budget: 1 s.
#[test]
fn criterion_3_reduced_forms() {
    let start = Instant::now();
    let mut powers = vec![0.0];
    for e in -6..=2 {
        powers.push(10f64.powi(e));
    }
    let mut checks = 0usize;

    // Unstable family over a in {1.1, 1.5, 2, 2.5}, k in 2..=20.
    for &a in &[1.1, 1.5, 2.0, 2.5] {
        let params = SystemParams::new(a, 1.0, 2.0).unwrap();
        for k in 2u32..=20 {
            let idx = SlicingIndices::new(1, 1, k).unwrap();
            let ki = k as i32;
            for &p1 in &powers {
                for &p2 in &powers {
                    let lead =
                        a.powi(2 * (ki - 1)) * (1.0 - a.powi(-2 * (ki - 1))) / (1.0 - a.powi(-2));
                    let sub = a.powi(2 * (ki - 2)) * (1.0 - a.powi(-(ki - 1))).powi(2)
                        / (1.0 - a.powi(-1)).powi(2);
                    let expect =
                        (lead.sqrt() - (sub * p1).sqrt() - (sub * p2).sqrt()).max(0.0).powi(2) + 1.0;
                    let got = distortion_bound_unstable(&params, p1, p2, idx).unwrap();
                    assert!(rel_err(got, expect) <= 1e-12, "a={a} k={k}: {got} vs {expect}");
                    checks += 1;
                }
            }
        }
    }

    // Marginal family: (sqrt(k-1) - (k-1) sqrt(p1) - (k-1) sqrt(p2))_+^2 + 1.
    let pm = SystemParams::new(1.0, 1.0, 2.0).unwrap();
    for k in 2u32..=20 {
        let idx = SlicingIndices::new(1, 1, k).unwrap();
        let kf = (k - 1) as f64;
        for &p1 in &powers {
            for &p2 in &powers {
                let expect =
                    (kf.sqrt() - kf * p1.sqrt() - kf * p2.sqrt()).max(0.0).powi(2) + 1.0;
                let got = distortion_bound_marginal(&pm, p1, p2, idx).unwrap();
                assert!(rel_err(got, expect) <= 1e-12);
                checks += 1;
            }
        }
    }

    // Stable family over a in {0.3, 0.7, 0.95}.
    for &a in &[0.3f64, 0.7, 0.95] {
        let ps = SystemParams::new(a, 1.0, 2.0).unwrap();
        for k in 2u32..=20 {
            let idx = SlicingIndices::new(1, 1, k).unwrap();
            let ki = k as i32;
            for &p1 in &powers {
                for &p2 in &powers {
                    let lead = a * a * (1.0 - a.powi(2 * (ki - 1))) / (1.0 - a * a);
                    let g = (1.0 - a.powi(ki - 1)) / (1.0 - a);
                    let expect =
                        (lead.sqrt() - g * p1.sqrt() - g * p2.sqrt()).max(0.0).powi(2) + 1.0;
                    let got = distortion_bound_stable(&ps, p1, p2, idx).unwrap();
                    assert!(rel_err(got, expect) <= 1e-12);
                    checks += 1;
                }
            }
        }
    }

    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 1.0, "budget exceeded: {elapsed:?}");
    println!(
        "criterion 3 (reduced forms): PASS ({checks} evaluations, {:.3}s)",
        elapsed.as_secs_f64()
    );
}

/// Criterion 4 — piecewise spot values, exact to formatting precision.
#[test]
fn criterion_4_case_spot_values() {
    // Marginal case (b) at sigma_v2 = 16, p1 = 1/64.
    let p = SystemParams::new(1.0, 1.0, 256.0).unwrap();
    let b = marginal_piecewise_lower(&p, 1.0 / 64.0, 0.0).unwrap();
    let expect = 0.02417 / (1.0 / 64.0) + 1.0;
    assert!(b.value >= 2.54688 - 1e-12);
    assert!((b.value - expect).abs() < 1e-12);
    assert_eq!(b.source.label(), "(b)");

    // Unstable case (d) at p1 = p2 = 1/75 (a = 1.1 so the instability
    // cases cannot fire).
    let p = SystemParams::new(1.1, 1.0, 1.0).unwrap();
    let b = unstable_piecewise_lower(&p, 1.0 / 75.0, 1.0 / 75.0).unwrap();
    assert!((b.value - 1.29175).abs() < 1e-12, "{}", b.value);
    assert_eq!(b.source.label(), "(d)");

    // Slow-stable floor case (e) = max(0.2636 Sigma_1, 1) at large powers.
    let p = SystemParams::new(0.95, 100.0, 100.0).unwrap();
    let s1 = kalman_steady_state_error(0.95, 100.0).unwrap();
    let b = slow_stable_piecewise_lower(&p, 1.0, 1.0).unwrap();
    assert!((b.value - (0.2636 * s1).max(1.0)).abs() < 1e-12);
    assert_eq!(b.source.label(), "(e)");

    println!("criterion 4 (case spot values): PASS (2.54688 / 1.29175 / floor exact)");
}

/// Criterion 5 — marginal-plant noise caps: Sigma_E <= 1.0005 sigma_v on
/// sigma_v in [16, 1e6], and for sigma_v in (0, 16] the guaranteed segment
/// (D, P) <= (2/t, t) covers every t in (0, 1/15.008] (checked through the
/// closed form with the exact power-matching gain), together with the
/// corrected Kalman cap Sigma_E <= 15.508.
#[test]
fn criterion_5_marginal_noise_caps() {
    // Large noise: log grid on [16, 1e6].
    for i in 0..=80 {
        let sigma_v = 10f64.powf(16f64.log10() + (6.0 - 16f64.log10()) * i as f64 / 80.0);
        let sigma_e = kalman_steady_state_error(1.0, sigma_v * sigma_v).unwrap();
        assert!(sigma_e <= 1.0005 * sigma_v, "sigma_v={sigma_v}");
    }

    // Small noise: range inclusion of the inverse segment up to 1/15.008.
    let t_max = 1.0 / 15.008;
    for i in 1..=80 {
        let sigma_v = 16.0 * i as f64 / 80.0;
        let sigma_e = kalman_steady_state_error(1.0, sigma_v * sigma_v).unwrap();
        assert!(sigma_e <= 15.508, "sigma_v={sigma_v}: {sigma_e}");
        for j in 0..=40 {
            let t = t_max * 10f64.powf(-4.0 * (1.0 - j as f64 / 40.0));
            // Gain with closed-loop power exactly t.
            let k = 2.0 * t / (1.0 + t);
            let (d, pw) = tradeoff_point(1.0, sigma_v * sigma_v, k).unwrap();
            assert!(pw <= t * (1.0 + 1e-12));
            assert!(d <= 2.0 / t * (1.0 + 1e-12), "t={t}, sigma_v={sigma_v}");
        }
    }
    println!(
        "criterion 5 (marginal noise caps): PASS (1.0005 sigma_v cap; 2/t segment reaches t=1/15.008; Sigma_E <= 15.508)"
    );
}

/// Criterion 6 — soundness sweep over the default grid: no violations of
/// (matching-power soundness, regime-constant pairing, case-vs-functional
/// consistency on a 20-cell subset with divergence target 1e6, envelope
/// dominance). Budget: 5 min.
#[test]
fn criterion_6_soundness_sweep() {
    let start = Instant::now();
    let grid = GridSpec::default_grid();
    let cfg = VerifyConfig::default();
    let rep = check_soundness(&grid, &cfg).unwrap();
    assert!(
        rep.violations.is_empty(),
        "violations: {:?}",
        &rep.violations[..rep.violations.len().min(5)]
    );
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 300.0, "budget exceeded: {elapsed:?}");
    println!(
        "criterion 6 (soundness sweep): PASS ({} pairings, {} case consistencies, {} envelope pieces, {:.2}s)",
        rep.pairings_checked, rep.consistency_checked, rep.envelopes_checked,
        elapsed.as_secs_f64()
    );
}

/// Criterion 7 — constant-ratio verification over the default grid:
/// per-regime maxima within 6 / 1700 / 540 / 6e6, the unstable band
/// additionally reported against 2e6, and the inclusive |a| <= 0.9 claim
/// within 6. Budget: 10 min.
#[test]
fn criterion_7_constant_ratio_sweep() {
    let start = Instant::now();
    let grid = GridSpec::default_grid();
    let cfg = VerifyConfig::default();
    let report = sweep(&grid, &cfg).unwrap();

    let mut lines = Vec::new();
    for s in &report.summaries {
        let max = s.max_ratio.expect("every regime has finite samples");
        assert!(
            max <= regime_threshold(s.regime),
            "{:?}: max ratio {max} above {}",
            s.regime,
            regime_threshold(s.regime)
        );
        lines.push(format!("{}: max {:.4e} <= {:.1e}", s.regime.label(), max, s.threshold));
        if s.regime == Regime::SlowUnstable {
            let tight = s.within_tight_band.unwrap();
            lines.push(format!(
                "slow-unstable tight band 2e6: {}",
                if tight { "held" } else { "exceeded (allowed up to 6e6)" }
            ));
            let _ = UNSTABLE_FLAG_THRESHOLD;
        }
    }

    // Inclusive reading of the small-eigenvalue claim: every sample with
    // |a| <= 0.9 stays within the factor 6.
    let mut max_small = 0.0f64;
    for s in &report.samples {
        if s.a.abs() <= 0.9 {
            if let Some(r) = s.ratio {
                max_small = max_small.max(r);
            }
        }
    }
    assert!(max_small <= 6.0, "|a| <= 0.9 max ratio {max_small}");
    lines.push(format!("|a| <= 0.9 inclusive: max {max_small:.4}"));

    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 600.0, "budget exceeded: {elapsed:?}");
    println!(
        "criterion 7 (constant ratios): PASS ({}; {:.2}s)",
        lines.join("; "),
        elapsed.as_secs_f64()
    );
}

/// Minimum closed-form distortion achievable with power at most `cap`.
fn distortion_at_power(a: f64, sigma_v_sq: f64, cap: f64) -> f64 {
    let lo = a - 1.0;
    let hi = a + 1.0;
    let mut best = f64::INFINITY;
    for i in 0..20_000 {
        let k = lo + (hi - lo) * (i as f64 + 0.5) / 20_000.0;
        if let Ok((d, p)) = tradeoff_point(a, sigma_v_sq, k) {
            if p <= cap && d < best {
                best = d;
            }
        }
    }
    best
}

/// Criterion 8 — figure-shape properties: the unstable curve blows up
/// toward the stabilization power, and the marginal curve is inverse-
/// proportional in its low-power region.
#[test]
fn criterion_8_figure_shapes() {
    // Near-unity unstable plant: distortion at P = 1.05 (a^2 - 1) exceeds
    // ten times the distortion at P = 50 (a^2 - 1).
    let a = 1.01f64;
    let gap = a * a - 1.0;
    for &s in &[1.0, 10.0, 20.0] {
        let near = distortion_at_power(a, s, 1.05 * gap);
        let far = distortion_at_power(a, s, 50.0 * gap);
        assert!(far.is_finite());
        assert!(
            near >= 10.0 * far,
            "sigma^2={s}: D(1.05 gap)={near}, D(50 gap)={far}"
        );
    }

    // Marginal plant: at P = 1/(2 max(1, Sigma_E)) the curve sits within a
    // factor 4 of 2/P.
    for &s in &[1.0, 100.0, 200.0] {
        let sigma_e = kalman_steady_state_error(1.0, s).unwrap();
        let p = 0.5 / sigma_e.max(1.0);
        let d = distortion_at_power(1.0, s, p);
        let reference = 2.0 / p;
        assert!(
            d <= 4.0 * reference && d >= reference / 4.0,
            "sigma^2={s}: D={d}, 2/P={reference}"
        );
    }
    println!("criterion 8 (figure shapes): PASS (blow-up ratio >= 10; inverse region within factor 4)");
}

/// The update iteration used throughout the suite converges to the closed
/// form; exercised here at the acceptance parameters as a cross-check of
/// criteria 1 and 2's shared machinery.
#[test]
fn update_and_fixed_point_agree_at_acceptance_parameters() {
    let target = kalman_steady_state_error(1.0, 2.0).unwrap();
    let mut b = KalmanBelief::new(0.0, 0.0).unwrap();
    for _ in 0..500 {
        b = kalman_update(b, 1.0, 2.0, 0.0, 0.0).unwrap();
    }
    assert!((b.error_var - target).abs() < 1e-12);
    assert!((target - 1.0).abs() < 1e-12);
    let w = CostWeights::new(1.0, 0.0, 0.0).unwrap();
    let params = SystemParams::new(1.0, 2.0, 2.0).unwrap();
    let (cost, _, _) = dlqg_core::centralized::decentralized_upper_cost(&params, &w).unwrap();
    assert!((cost - 2.0).abs() < 1e-9);
}
