//! `dlqg` — command-line front end for the scalar decentralized LQG
//! numerics: tradeoff curves, lower-bound tables, Monte Carlo runs, and
//! constant-ratio verification.
//!
//! Exit codes: 0 success/pass, 1 verification or internal invariant
//! failure, 2 usage error.

use clap::{Args, Parser, Subcommand, ValueEnum};
use dlqg_cli::formats::{self, BoundRow};
use dlqg_cli::verify::{check_soundness, sweep, GridSpec, VerifyConfig, VerifyError};
use dlqg_core::bounds::{piecewise_lower, sliced_distortion_bound, SearchConfig, SlicingIndices};
use dlqg_core::centralized::sample_tradeoff_curve;
use dlqg_core::params::{Regime, SystemParams};
use dlqg_core::sim::{default_burn_in, estimate_tradeoff_empirical, simulate, StrategySpec};
use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "dlqg",
    version,
    about = "Scalar two-controller decentralized LQG numerics"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Emit the closed-form power-distortion curve of one controller.
    Tradeoff(TradeoffArgs),
    /// Tabulate distortion lower bounds over a power grid.
    Bounds(BoundsArgs),
    /// Run one closed-loop Monte Carlo simulation.
    Simulate(SimArgs),
    /// Sweep the ratio of achievable to lower-bound cost and check the
    /// per-regime constants.
    Verify(VerifyArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum RegimeArg {
    VeryStable,
    SlowStable,
    Marginal,
    SlowUnstable,
}

impl From<RegimeArg> for Regime {
    fn from(r: RegimeArg) -> Regime {
        match r {
            RegimeArg::VeryStable => Regime::VeryStable,
            RegimeArg::SlowStable => Regime::SlowStable,
            RegimeArg::Marginal => Regime::Marginal,
            RegimeArg::SlowUnstable => Regime::SlowUnstable,
        }
    }
}

#[derive(Args)]
struct TradeoffArgs {
    /// Plant eigenvalue.
    #[arg(long)]
    a: f64,
    /// Observation-noise variance of the controller being swept.
    #[arg(long, default_value_t = 1.0)]
    sigma_v_sq: f64,
    /// Number of gains on the curve.
    #[arg(long, default_value_t = 200)]
    k_points: usize,
    /// Smallest gain (default: just above a - 1).
    #[arg(long)]
    gain_min: Option<f64>,
    /// Largest gain (default: a).
    #[arg(long)]
    gain_max: Option<f64>,
    /// Append empirical P_hat,D_hat columns from Monte Carlo runs.
    #[arg(long)]
    empirical: bool,
    #[arg(long, default_value_t = 200_000)]
    horizon: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BoundsArgs {
    #[arg(long)]
    a: f64,
    #[arg(long, default_value_t = 1.0)]
    sigma_v1_sq: f64,
    #[arg(long, default_value_t = 1.0)]
    sigma_v2_sq: f64,
    /// Fixed first power budget (single-cell mode together with --p2).
    #[arg(long)]
    p1: Option<f64>,
    /// Fixed second power budget.
    #[arg(long)]
    p2: Option<f64>,
    /// Points per axis of the log-spaced power grid.
    #[arg(long, default_value_t = 16)]
    p_points: usize,
    #[arg(long, default_value_t = 1e-4)]
    p_min: f64,
    #[arg(long, default_value_t = 1e2)]
    p_max: f64,
    /// Also evaluate the slicing functional at each cell (D_lemma column).
    #[arg(long)]
    lemma: bool,
    /// Terminal-index cap for the slicing evaluation.
    #[arg(long, default_value_t = 64)]
    k_max: u32,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum StrategyArg {
    Zero,
    Kalman1,
    Kalman2,
}

#[derive(Args)]
struct SimArgs {
    #[arg(long)]
    a: f64,
    #[arg(long, default_value_t = 1.0)]
    sigma_v1_sq: f64,
    #[arg(long, default_value_t = 1.0)]
    sigma_v2_sq: f64,
    #[arg(long, default_value_t = 0.0)]
    sigma_0_sq: f64,
    #[arg(long, value_enum, default_value_t = StrategyArg::Kalman1)]
    strategy: StrategyArg,
    /// Feedback gain for the Kalman strategies.
    #[arg(long, default_value_t = 1.0)]
    gain: f64,
    #[arg(long, default_value_t = 1_000_000)]
    horizon: u64,
    /// Steps discarded before averaging (default: mixing-time heuristic).
    #[arg(long)]
    burn_in: Option<u64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    /// Use the built-in verification grid.
    #[arg(long)]
    default_grid: bool,
    /// Restrict the grid to one eigenvalue regime.
    #[arg(long, value_enum)]
    regime: Option<RegimeArg>,
    /// Cross-check with the (much slower) sup-min slicing bound.
    #[arg(long)]
    lemma: bool,
    /// Terminal-index cap of the slicing search.
    #[arg(long, default_value_t = 64)]
    k_max: u32,
    /// Grid cells receiving the slicing-consistency checks.
    #[arg(long, default_value_t = 20)]
    lemma_samples: usize,
    /// Write the full JSON report here.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    if let Ok(threads) = std::env::var("DLQG_THREADS") {
        if let Ok(n) = threads.parse::<usize>() {
            let _ = rayon::ThreadPoolBuilder::new()
                .num_threads(n.max(1))
                .build_global();
        }
    }
    let cli = Cli::parse();
    let code = match cli.cmd {
        Cmd::Tradeoff(args) => cmd_tradeoff(args),
        Cmd::Bounds(args) => cmd_bounds(args),
        Cmd::Simulate(args) => cmd_simulate(args),
        Cmd::Verify(args) => cmd_verify(args),
    };
    match code {
        Ok(c) => c,
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn write_out(out: Option<&PathBuf>, content: &str) -> Result<(), String> {
    match out {
        Some(path) => fs::write(path, content).map_err(|e| format!("writing {path:?}: {e}")),
        None => {
            print!("{content}");
            Ok(())
        }
    }
}

fn require_in_scope(a: f64) -> Result<(), String> {
    if !a.is_finite() || a.abs() > 2.5 {
        return Err(format!(
            "|a| = {} is outside the supported range [0, 2.5]; no bounds are claimed there",
            a.abs()
        ));
    }
    Ok(())
}

fn cmd_tradeoff(args: TradeoffArgs) -> Result<ExitCode, String> {
    require_in_scope(args.a)?;
    if args.k_points == 0 {
        return Err("--k-points must be at least 1".into());
    }
    if args.sigma_v_sq < 0.0 {
        return Err("--sigma-v-sq must be nonnegative".into());
    }
    let n = args.k_points;
    let lo = args.gain_min.unwrap_or(args.a - 1.0);
    let hi = args.gain_max.unwrap_or(args.a);
    if hi <= lo {
        return Err("--gain-max must exceed --gain-min".into());
    }
    // Default grid spans (a-1, a]: open at the unstable endpoint.
    let gains: Vec<f64> = (1..=n)
        .map(|i| lo + (hi - lo) * i as f64 / n as f64)
        .collect();
    for &k in &gains {
        if (args.a - k).abs() >= 1.0 {
            return Err(format!(
                "gain {k} does not stabilize a={} (|a-k| >= 1); narrow the gain range",
                args.a
            ));
        }
    }
    let curve = sample_tradeoff_curve(args.a, args.sigma_v_sq, &gains)
        .map_err(|e| e.to_string())?;
    let rows: Vec<(f64, f64, f64)> = gains
        .iter()
        .zip(curve.iter())
        .map(|(&k, &(d, p))| (k, p, d))
        .collect();

    let empirical = if args.empirical {
        let params = SystemParams::new(args.a, args.sigma_v_sq, args.sigma_v_sq)
            .map_err(|e| e.to_string())?;
        Some(
            estimate_tradeoff_empirical(&params, 1, &gains, args.horizon, args.seed)
                .map_err(|e| e.to_string())?,
        )
    } else {
        None
    };

    let content = match args.format {
        Format::Csv => formats::tradeoff_csv(&rows, empirical.as_deref()),
        Format::Json => format!(
            "{}\n",
            formats::tradeoff_json(&rows, empirical.as_deref())
        ),
    };
    write_out(args.out.as_ref(), &content)?;
    Ok(ExitCode::SUCCESS)
}

/// Largest slicing-functional value over the thinned index enumeration.
fn lemma_distortion(params: &SystemParams, p1: f64, p2: f64, k_max: u32) -> f64 {
    let mut ks: Vec<u32> = (1..=16.min(k_max)).collect();
    let mut k = 32;
    while k < k_max {
        ks.push(k);
        k *= 2;
    }
    if k_max > 16 {
        ks.push(k_max);
    }
    ks.dedup();
    let mut best = 1.0f64;
    for &kk in &ks {
        for k1 in 1..=kk {
            for k2 in k1..=kk {
                let idx = SlicingIndices::new(k1, k2, kk).unwrap();
                if let Ok(v) = sliced_distortion_bound(params, p1, p2, idx) {
                    if v > best {
                        best = v;
                    }
                }
            }
        }
    }
    best
}

fn cmd_bounds(args: BoundsArgs) -> Result<ExitCode, String> {
    require_in_scope(args.a)?;
    if args.sigma_v1_sq < 0.0 || args.sigma_v2_sq < 0.0 {
        return Err("noise variances must be nonnegative".into());
    }
    let params =
        SystemParams::new(args.a, args.sigma_v1_sq, args.sigma_v2_sq).map_err(|e| e.to_string())?;
    if params.swapped {
        eprintln!(
            "note: observation noises were swapped to keep sigma_v1_sq <= sigma_v2_sq; \
             P1 refers to the better-observed controller"
        );
    }
    let axis: Vec<f64> = match (args.p1, args.p2) {
        (Some(_), Some(_)) => Vec::new(),
        (None, None) => {
            if args.p_points < 1 {
                return Err("--p-points must be at least 1".into());
            }
            if args.p_min <= 0.0 || args.p_max < args.p_min {
                return Err("need 0 < --p-min <= --p-max".into());
            }
            (0..args.p_points)
                .map(|i| {
                    args.p_min
                        * (args.p_max / args.p_min)
                            .powf(i as f64 / (args.p_points.max(2) - 1) as f64)
                })
                .collect()
        }
        _ => return Err("--p1 and --p2 must be given together".into()),
    };
    let cells: Vec<(f64, f64)> = if let (Some(p1), Some(p2)) = (args.p1, args.p2) {
        vec![(p1, p2)]
    } else {
        let mut v = Vec::new();
        for &p1 in &axis {
            for &p2 in &axis {
                v.push((p1, p2));
            }
        }
        v
    };

    let mut rows = Vec::with_capacity(cells.len());
    for (p1, p2) in cells {
        let b = piecewise_lower(&params, p1, p2).map_err(|e| e.to_string())?;
        let d_lemma = args
            .lemma
            .then(|| lemma_distortion(&params, p1, p2, args.k_max));
        rows.push(BoundRow {
            p1,
            p2,
            d_lower: b.value,
            source_case: b.source.label(),
            d_lemma,
        });
    }
    let content = match args.format {
        Format::Csv => formats::bounds_csv(&rows, args.lemma),
        Format::Json => format!("{}\n", formats::bounds_json(&rows)),
    };
    write_out(args.out.as_ref(), &content)?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_simulate(args: SimArgs) -> Result<ExitCode, String> {
    if !args.a.is_finite() {
        return Err("--a must be finite".into());
    }
    let params = SystemParams::with_initial_variance(
        args.a,
        args.sigma_v1_sq,
        args.sigma_v2_sq,
        args.sigma_0_sq,
    )
    .map_err(|e| e.to_string())?;
    let (strategy, label, gain) = match args.strategy {
        StrategyArg::Zero => (StrategySpec::Zero, "zero", None),
        StrategyArg::Kalman1 => (
            StrategySpec::SingleKalman {
                controller: 1,
                gain: args.gain,
            },
            "kalman1",
            Some(args.gain),
        ),
        StrategyArg::Kalman2 => (
            StrategySpec::SingleKalman {
                controller: 2,
                gain: args.gain,
            },
            "kalman2",
            Some(args.gain),
        ),
    };
    let burn_in = args
        .burn_in
        .unwrap_or_else(|| default_burn_in(args.a, gain.unwrap_or(0.0)).min(args.horizon / 2));
    let res = simulate(&params, strategy, args.horizon, burn_in, args.seed)
        .map_err(|e| e.to_string())?;
    let line = format!(
        "{}\n",
        formats::sim_json(
            args.a,
            args.sigma_v1_sq,
            args.sigma_v2_sq,
            args.sigma_0_sq,
            label,
            gain,
            args.horizon,
            burn_in,
            &res,
        )
    );
    write_out(args.out.as_ref(), &line)?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_verify(args: VerifyArgs) -> Result<ExitCode, String> {
    if !args.default_grid {
        return Err("specify --default-grid (custom grids are driven through the library)".into());
    }
    let mut grid = GridSpec::default_grid();
    if let Some(r) = args.regime {
        grid = grid.restrict_to_regime(r.into());
    }
    let cfg = VerifyConfig {
        use_lemma: args.lemma,
        lemma_search: SearchConfig {
            k_max: args.k_max,
            ..SearchConfig::default()
        },
        lemma_check_samples: args.lemma_samples,
    };
    let report = match sweep(&grid, &cfg) {
        Ok(r) => r,
        Err(VerifyError::Invariant(v)) => {
            eprintln!("invariant violation: {v}");
            return Ok(ExitCode::FAILURE);
        }
        Err(e) => return Err(e.to_string()),
    };
    let soundness = match check_soundness(&grid, &cfg) {
        Ok(s) => s,
        Err(e) => return Err(e.to_string()),
    };

    print!("{}", formats::verify_summary(&report, Some(&soundness)));
    if let Some(path) = &args.out {
        let json = formats::verify_json(&report, Some(&soundness));
        fs::write(path, format!("{json}\n")).map_err(|e| format!("writing {path:?}: {e}"))?;
    }

    let pass = report.all_pass && soundness.violations.is_empty();
    if !pass {
        if let Some(worst) = report.worst_sample() {
            eprintln!(
                "worst sample: a={}, sv1^2={}, sv2^2={}, r1={}, r2={}, ratio={}",
                worst.a,
                worst.sigma_v1_sq,
                worst.sigma_v2_sq,
                worst.r1,
                worst.r2,
                worst.ratio.map(formats::fmt_f64).unwrap_or_default()
            );
        }
        for v in soundness.violations.iter().take(10) {
            eprintln!("soundness violation [{}]: {}", v.kind, v.detail);
        }
        return Ok(ExitCode::FAILURE);
    }
    Ok(ExitCode::SUCCESS)
}
