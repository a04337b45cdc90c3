//! Table and report rendering.
//!
//! CSV values use Rust's shortest round-trip decimal formatting and the
//! literal `inf` for infinite bounds; JSON uses the string sentinel
//! `"inf"` in place of a number (JSON has no infinity). Given identical
//! arguments and seed, output bytes are stable within one build.

use crate::verify::{RatioReport, SoundnessReport};
use dlqg_core::sim::{EmpiricalPoint, SimResult};
use serde_json::{json, Value};
use std::fmt::Write as _;

/// Shortest round-trip decimal, with `inf` / `-inf` for infinities.
pub fn fmt_f64(x: f64) -> String {
    if x.is_infinite() {
        if x > 0.0 {
            "inf".to_string()
        } else {
            "-inf".to_string()
        }
    } else {
        format!("{x}")
    }
}

/// JSON number, or the documented `"inf"` sentinel.
pub fn num_or_inf(x: f64) -> Value {
    if x.is_finite() {
        json!(x)
    } else if x > 0.0 {
        json!("inf")
    } else {
        json!("-inf")
    }
}

/// `k,P,D` rows of a closed-form tradeoff curve, optionally with empirical
/// columns appended.
pub fn tradeoff_csv(rows: &[(f64, f64, f64)], empirical: Option<&[EmpiricalPoint]>) -> String {
    let mut out = String::new();
    match empirical {
        None => {
            out.push_str("k,P,D\n");
            for &(k, p, d) in rows {
                let _ = writeln!(out, "{},{},{}", fmt_f64(k), fmt_f64(p), fmt_f64(d));
            }
        }
        Some(emp) => {
            out.push_str("k,P,D,P_hat,D_hat\n");
            for (&(k, p, d), e) in rows.iter().zip(emp) {
                let _ = writeln!(
                    out,
                    "{},{},{},{},{}",
                    fmt_f64(k),
                    fmt_f64(p),
                    fmt_f64(d),
                    fmt_f64(e.power_hat),
                    fmt_f64(e.distortion_hat)
                );
            }
        }
    }
    out
}

pub fn tradeoff_json(rows: &[(f64, f64, f64)], empirical: Option<&[EmpiricalPoint]>) -> Value {
    let points: Vec<Value> = rows
        .iter()
        .enumerate()
        .map(|(i, &(k, p, d))| {
            let mut obj = json!({
                "k": num_or_inf(k),
                "P": num_or_inf(p),
                "D": num_or_inf(d),
            });
            if let Some(emp) = empirical {
                obj["P_hat"] = num_or_inf(emp[i].power_hat);
                obj["D_hat"] = num_or_inf(emp[i].distortion_hat);
                obj["diverged"] = json!(emp[i].diverged);
                obj["long_mixing"] = json!(emp[i].long_mixing);
            }
            obj
        })
        .collect();
    json!({ "points": points })
}

/// One row of a bound table.
pub struct BoundRow {
    pub p1: f64,
    pub p2: f64,
    pub d_lower: f64,
    pub source_case: String,
    pub d_lemma: Option<f64>,
}

pub fn bounds_csv(rows: &[BoundRow], with_lemma: bool) -> String {
    let mut out = String::new();
    if with_lemma {
        out.push_str("P1,P2,D_lower,source_case,D_lemma\n");
    } else {
        out.push_str("P1,P2,D_lower,source_case\n");
    }
    for r in rows {
        let _ = write!(
            out,
            "{},{},{},{}",
            fmt_f64(r.p1),
            fmt_f64(r.p2),
            fmt_f64(r.d_lower),
            r.source_case
        );
        if with_lemma {
            let _ = write!(out, ",{}", fmt_f64(r.d_lemma.unwrap_or(f64::NAN)));
        }
        out.push('\n');
    }
    out
}

pub fn bounds_json(rows: &[BoundRow]) -> Value {
    let items: Vec<Value> = rows
        .iter()
        .map(|r| {
            let mut obj = json!({
                "P1": num_or_inf(r.p1),
                "P2": num_or_inf(r.p2),
                "D_lower": num_or_inf(r.d_lower),
                "source_case": r.source_case,
            });
            if let Some(l) = r.d_lemma {
                obj["D_lemma"] = num_or_inf(l);
            }
            obj
        })
        .collect();
    json!({ "bounds": items })
}

/// Full echo of one simulation run, for reproducibility.
#[allow(clippy::too_many_arguments)]
pub fn sim_json(
    a: f64,
    sigma_v1_sq: f64,
    sigma_v2_sq: f64,
    sigma_0_sq: f64,
    strategy: &str,
    gain: Option<f64>,
    horizon: u64,
    burn_in: u64,
    res: &SimResult,
) -> Value {
    json!({
        "a": a,
        "sigma_v1_sq": sigma_v1_sq,
        "sigma_v2_sq": sigma_v2_sq,
        "sigma_0_sq": sigma_0_sq,
        "strategy": strategy,
        "gain": gain,
        "horizon": horizon,
        "burn_in": burn_in,
        "seed": res.seed,
        "avg_x_sq": num_or_inf(res.avg_x_sq),
        "avg_u1_sq": num_or_inf(res.avg_u1_sq),
        "avg_u2_sq": num_or_inf(res.avg_u2_sq),
        "diverged": res.diverged,
        "horizon_used": res.horizon_used,
    })
}

pub fn verify_json(report: &RatioReport, soundness: Option<&SoundnessReport>) -> Value {
    let mut v = serde_json::to_value(report).expect("report serializes");
    if let Some(s) = soundness {
        v["soundness"] = serde_json::to_value(s).expect("soundness serializes");
    }
    v
}

/// Human-readable verification summary, one line per regime.
pub fn verify_summary(report: &RatioReport, soundness: Option<&SoundnessReport>) -> String {
    let mut out = String::new();
    for s in &report.summaries {
        let max = s
            .max_ratio
            .map(fmt_f64)
            .unwrap_or_else(|| "n/a (no finite samples)".into());
        let _ = write!(
            out,
            "{:<14} samples={:<5} max ratio = {:<12} threshold = {:<9} {}",
            s.regime.label(),
            s.samples,
            max,
            fmt_f64(s.threshold),
            if s.pass { "PASS" } else { "FAIL" }
        );
        if let Some(tight) = s.within_tight_band {
            let _ = write!(
                out,
                " (tight 2e6 band: {})",
                if tight { "held" } else { "exceeded" }
            );
        }
        out.push('\n');
    }
    if let Some(s) = soundness {
        let _ = writeln!(
            out,
            "soundness: {} violations ({} pairings, {} case consistencies, {} envelope pieces)",
            s.violations.len(),
            s.pairings_checked,
            s.consistency_checked,
            s.envelopes_checked
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn f64_formatting_is_shortest_roundtrip() {
        assert_eq!(fmt_f64(2.0), "2");
        assert_eq!(fmt_f64(4.0 / 3.0), "1.3333333333333333");
        assert_eq!(fmt_f64(f64::INFINITY), "inf");
        assert_eq!(fmt_f64(f64::NEG_INFINITY), "-inf");
        let x: f64 = fmt_f64(0.1 + 0.2).parse().unwrap();
        assert_eq!(x, 0.1 + 0.2);
    }

    #[test]
    fn json_inf_sentinel() {
        assert_eq!(num_or_inf(f64::INFINITY), json!("inf"));
        assert_eq!(num_or_inf(1.5), json!(1.5));
    }

    #[test]
    fn csv_headers_are_fixed() {
        let rows = [(0.5, 0.25, 3.0)];
        let csv = tradeoff_csv(&rows, None);
        assert!(csv.starts_with("k,P,D\n"));
        assert_eq!(csv.lines().count(), 2);

        let bounds = bounds_csv(
            &[BoundRow {
                p1: 0.01,
                p2: 0.02,
                d_lower: f64::INFINITY,
                source_case: "(c)".into(),
                d_lemma: None,
            }],
            false,
        );
        assert!(bounds.starts_with("P1,P2,D_lower,source_case\n"));
        assert!(bounds.contains("inf,(c)"));
    }
}
