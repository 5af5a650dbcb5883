//! Experiment drivers behind the CLI: curve tabulation, equal-load sweeps,
//! one-shot scenarios, multi-round load traces, and a seeded self-audit.
//! Every driver is deterministic for a given config, so reruns are
//! byte-identical.

use crate::config::{ConfigError, ExperimentConfig, TraceKind};
use crate::energy::{CostCurve, EnergyError};
use crate::market::clearing::{clearinghouse_round, MarketOutcome};
use crate::market::books::MnoState;
use crate::market::oracle::welfare_oracle;
use crate::market::probes::{audit_match, misreport_probe};
use crate::market::synthetic::{random_market, random_order_book};
use crate::market::MarketError;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use std::fmt::Write as _;
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Energy(#[from] EnergyError),
    #[error(transparent)]
    Market(#[from] MarketError),
}

/// Six significant digits, plain decimal, trailing zeros kept: stable CSV
/// output that still shows watt-level physics faithfully.
pub fn fmt_sig6(x: f64) -> String {
    if x == 0.0 {
        return "0.000000".into();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let decimals = (5 - x.abs().log10().floor() as i64).clamp(0, 12) as usize;
    format!("{x:.decimals$}")
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_sig6).unwrap_or_default()
}

pub fn cost_curve_csv(curve: &CostCurve) -> String {
    let mut out = String::from("load_normalized,energy_watts,marginal_watts\n");
    for (k, (&load, &e)) in curve.load_grid.iter().zip(&curve.energy_w).enumerate() {
        let marginal = if k == 0 {
            String::new()
        } else {
            fmt_sig6(curve.marginal(k))
        };
        let _ = writeln!(out, "{},{},{}", fmt_sig6(load), fmt_sig6(e), marginal);
    }
    out
}

#[derive(Debug, Clone)]
pub struct SweepRow {
    pub load: f64,
    pub baseline_w: f64,
    pub post_w: f64,
    pub savings_pct: f64,
    pub sleeping: usize,
    pub trade_units: usize,
    pub trade_price_w: Option<f64>,
}

impl SweepRow {
    fn from_outcome(load: f64, out: &MarketOutcome) -> Self {
        Self {
            load,
            baseline_w: out.baseline_w,
            post_w: out.post_trade_w,
            savings_pct: out.savings_pct,
            sleeping: out.sleeping.len(),
            trade_units: out.traded_units,
            trade_price_w: out.trade_price_mean_w,
        }
    }
}

/// All operators enter at the same load; the load walks the unit grid.
pub fn equal_load_sweep(
    cfg: &ExperimentConfig,
    curve: &Arc<CostCurve>,
) -> Result<Vec<SweepRow>, HarnessError> {
    let units = curve.units();
    (1..=units)
        .into_par_iter()
        .map(|k| {
            let load = k as f64 / units as f64;
            let mnos: Vec<MnoState> = (0..cfg.mnos)
                .map(|id| MnoState::new(id, load, true, curve.clone(), cfg.e_tr_w))
                .collect::<Result<_, _>>()?;
            let out = clearinghouse_round(&mnos)?;
            Ok(SweepRow::from_outcome(load, &out))
        })
        .collect()
}

const SWEEP_HEADER: &str =
    "load_normalized,baseline_watts,post_trade_watts,savings_pct,sleeping_count,trade_units,trade_price_watts";

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from(SWEEP_HEADER);
    out.push('\n');
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            fmt_sig6(r.load),
            fmt_sig6(r.baseline_w),
            fmt_sig6(r.post_w),
            fmt_sig6(r.savings_pct),
            r.sleeping,
            r.trade_units,
            fmt_opt(r.trade_price_w),
        );
    }
    out
}

/// One market round at the configured per-operator loads.
pub fn scenario(
    cfg: &ExperimentConfig,
    curve: &Arc<CostCurve>,
) -> Result<(Vec<MnoState>, MarketOutcome), HarnessError> {
    if cfg.loads.is_empty() {
        return Err(ConfigError::OutOfRange {
            key: "loads".into(),
            detail: "a scenario needs explicit per-operator loads".into(),
        }
        .into());
    }
    let mnos: Vec<MnoState> = cfg
        .loads
        .iter()
        .enumerate()
        .map(|(id, &load)| MnoState::new(id, load, true, curve.clone(), cfg.e_tr_w))
        .collect::<Result<_, _>>()?;
    let out = clearinghouse_round(&mnos)?;
    Ok((mnos, out))
}

pub fn scenario_csv(mnos: &[MnoState], out: &MarketOutcome) -> String {
    let mut text = String::from(
        "mno_id,entering_load,post_load,allocation_units,payment_watts,asleep,baseline_watts,post_trade_watts,savings_pct,welfare_watts,trade_units\n",
    );
    for m in mnos {
        let asleep = !m.awake || out.sleeping.binary_search(&m.id).is_ok();
        let post = out.post_loads.get(&m.id).copied().unwrap_or(m.load);
        let alloc = out.allocation.get(&m.id).copied().unwrap_or(0);
        let pay = out.payments_w.get(&m.id).copied().unwrap_or(0.0);
        let _ = writeln!(
            text,
            "{},{},{},{},{},{},{},{},{},{},{}",
            m.id,
            fmt_sig6(m.load),
            fmt_sig6(post),
            alloc,
            fmt_sig6(pay),
            u8::from(asleep),
            fmt_sig6(out.baseline_w),
            fmt_sig6(out.post_trade_w),
            fmt_sig6(out.savings_pct),
            fmt_sig6(out.welfare_w),
            out.traded_units,
        );
    }
    text
}

#[derive(Debug, Clone)]
pub struct RoundRow {
    pub round: usize,
    /// Per-operator loads entering this round, after carry-over and snapping.
    /// Not emitted to CSV; lets a checker re-clear the round independently.
    pub entering: Vec<f64>,
    pub mean_entering_load: f64,
    pub baseline_w: f64,
    pub post_w: f64,
    pub savings_pct: f64,
    pub sleeping: usize,
    pub trade_units: usize,
    pub trade_price_w: Option<f64>,
}

/// Per-operator target load for round `t` (1-based).
fn trace_target(cfg: &ExperimentConfig, base: f64, idx: usize, t: usize) -> f64 {
    match cfg.trace {
        TraceKind::Constant => base,
        TraceKind::Sinusoid => {
            let angle = std::f64::consts::TAU
                * ((t - 1) as f64 / cfg.rounds as f64 + idx as f64 / cfg.mnos as f64);
            (base + cfg.trace_amplitude * angle.sin()).clamp(0.0, 1.0)
        }
    }
}

fn snap_to_grid(load: f64, units: usize) -> f64 {
    let k = (load * units as f64).round().clamp(0.0, units as f64);
    k / units as f64
}

/// Multi-round driver. Loads carried for others persist: each round an
/// operator re-enters with last round's post load plus its trace increment,
/// clamped and snapped to the grid. Operators entering at zero sleep through
/// the round.
pub fn rounds(
    cfg: &ExperimentConfig,
    curve: &Arc<CostCurve>,
) -> Result<Vec<RoundRow>, HarnessError> {
    if cfg.loads.is_empty() {
        return Err(ConfigError::OutOfRange {
            key: "loads".into(),
            detail: "the rounds driver needs per-operator base loads".into(),
        }
        .into());
    }
    let units = curve.units();
    let n = cfg.mnos;
    let mut prev_post: Vec<f64> = vec![0.0; n];
    let mut prev_target: Vec<f64> = vec![0.0; n];
    let mut rows = Vec::with_capacity(cfg.rounds);
    for t in 1..=cfg.rounds {
        let mut entering = Vec::with_capacity(n);
        for i in 0..n {
            let target = trace_target(cfg, cfg.loads[i], i, t);
            let raw = if t == 1 {
                target
            } else {
                prev_post[i] + (target - prev_target[i])
            };
            entering.push(snap_to_grid(raw.clamp(0.0, 1.0), units));
            prev_target[i] = target;
        }
        let mnos: Vec<MnoState> = entering
            .iter()
            .enumerate()
            .map(|(id, &load)| MnoState::new(id, load, load > 0.0, curve.clone(), cfg.e_tr_w))
            .collect::<Result<_, _>>()?;
        let awake = mnos.iter().filter(|m| m.awake).count();
        let mean_entering = entering.iter().sum::<f64>() / n as f64;
        let row = if awake >= 2 {
            let out = clearinghouse_round(&mnos)?;
            for m in &mnos {
                prev_post[m.id] = out.post_loads.get(&m.id).copied().unwrap_or(m.load);
            }
            RoundRow {
                round: t,
                entering: entering.clone(),
                mean_entering_load: mean_entering,
                baseline_w: out.baseline_w,
                post_w: out.post_trade_w,
                savings_pct: out.savings_pct,
                sleeping: out.sleeping.len(),
                trade_units: out.traded_units,
                trade_price_w: out.trade_price_mean_w,
            }
        } else {
            // Nothing to clear: everyone keeps their load.
            let baseline: f64 = mnos.iter().map(|m| m.standalone_energy_w()).sum();
            for m in &mnos {
                prev_post[m.id] = m.load;
            }
            RoundRow {
                round: t,
                entering: entering.clone(),
                mean_entering_load: mean_entering,
                baseline_w: baseline,
                post_w: baseline,
                savings_pct: 0.0,
                sleeping: 0,
                trade_units: 0,
                trade_price_w: None,
            }
        };
        rows.push(row);
    }
    Ok(rows)
}

pub fn rounds_csv(rows: &[RoundRow]) -> String {
    let mut out = String::from("round,mean_entering_load,baseline_watts,post_trade_watts,savings_pct,sleeping_count,trade_units,trade_price_watts\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            r.round,
            fmt_sig6(r.mean_entering_load),
            fmt_sig6(r.baseline_w),
            fmt_sig6(r.post_w),
            fmt_sig6(r.savings_pct),
            r.sleeping,
            r.trade_units,
            fmt_opt(r.trade_price_w),
        );
    }
    out
}

#[derive(Debug)]
pub struct SelfTestReport {
    pub passed: bool,
    pub lines: Vec<String>,
}

/// Seeded audit of the market machinery, independent of the radio model:
/// auction invariants and misreport probes over random books, accounting
/// checks over random clearing rounds, and welfare against the brute-force
/// oracle on small instances.
pub fn selftest(seed: u64) -> SelfTestReport {
    let mut lines = Vec::new();
    let mut passed = true;
    let record = |ok: bool, line: String, lines: &mut Vec<String>| {
        lines.push(format!("{} {line}", if ok { "PASS" } else { "FAIL" }));
        ok
    };

    let mut audit_failures = Vec::new();
    let mut probe_trials = 0usize;
    let mut probe_gains = 0usize;
    for s in 0..200u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(s));
        let (bids, asks) = random_order_book(&mut rng);
        if let Err(e) = audit_match(&bids, &asks) {
            audit_failures.push(format!("book {s}: {e}"));
        }
        let p = misreport_probe(&bids, &asks, 1e-9);
        probe_trials += p.trials;
        probe_gains += p.strict_gains;
    }
    passed &= record(
        audit_failures.is_empty(),
        format!(
            "auction invariants over 200 random books{}",
            audit_failures.first().map(|e| format!(" ({e})")).unwrap_or_default()
        ),
        &mut lines,
    );
    passed &= record(
        probe_gains == 0,
        format!("misreport probes: {probe_gains} strict gains in {probe_trials} trials"),
        &mut lines,
    );

    let mut clearing_failures = Vec::new();
    for s in 0..50u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_0000_u64.wrapping_add(s));
        let mnos = random_market(&mut rng, 2 + (s % 3) as usize, 6);
        match clearinghouse_round(&mnos) {
            Err(e) => clearing_failures.push(format!("round {s}: {e}")),
            Ok(out) => {
                let pay_net: f64 = out.payments_w.values().sum();
                let alloc_net: i64 = out.allocation.values().sum();
                if out.welfare_w < -1e-9
                    || (pay_net - out.auctioneer_surplus_w).abs() > 1e-6
                    || alloc_net != 0
                    || (out.welfare_w - (out.baseline_w - out.post_trade_w)).abs() > 1e-6
                {
                    clearing_failures.push(format!("round {s}: accounting broke"));
                }
            }
        }
    }
    passed &= record(
        clearing_failures.is_empty(),
        format!(
            "clearing accounting over 50 random rounds{}",
            clearing_failures.first().map(|e| format!(" ({e})")).unwrap_or_default()
        ),
        &mut lines,
    );

    let mut oracle_failures = Vec::new();
    for s in 0..20u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x0bac_1e00_u64.wrapping_add(s));
        let mnos = random_market(&mut rng, 2 + (s % 2) as usize, 5);
        let ch = clearinghouse_round(&mnos);
        let orc = welfare_oracle(&mnos, 1_000_000);
        match (ch, orc) {
            (Ok(c), Ok(o)) => {
                if c.welfare_w > o.welfare_w + 1e-9 {
                    oracle_failures.push(format!(
                        "instance {s}: clearing {} beats oracle {}",
                        c.welfare_w, o.welfare_w
                    ));
                }
            }
            (c, o) => oracle_failures.push(format!(
                "instance {s}: unexpected error ({:?} / {:?})",
                c.err().map(|e| e.to_string()),
                o.err().map(|e| e.to_string())
            )),
        }
    }
    passed &= record(
        oracle_failures.is_empty(),
        format!(
            "clearing never beats the oracle on 20 small instances{}",
            oracle_failures.first().map(|e| format!(" ({e})")).unwrap_or_default()
        ),
        &mut lines,
    );

    SelfTestReport { passed, lines }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::energy::CostCurve;

    fn toy_curve(units: usize) -> Arc<CostCurve> {
        let e: Vec<f64> = (0..=units)
            .map(|k| 50.0 + k as f64 + (k * k) as f64 / units as f64)
            .collect();
        Arc::new(CostCurve::from_energies(e, 1.0 / units as f64, 0.0).unwrap())
    }

    #[test]
    fn sig6_formatting() {
        assert_eq!(fmt_sig6(0.0), "0.000000");
        assert_eq!(fmt_sig6(58.6), "58.6000");
        assert_eq!(fmt_sig6(1.0), "1.00000");
        assert_eq!(fmt_sig6(0.007), "0.00700000");
        assert_eq!(fmt_sig6(-123456.0), "-123456");
        assert_eq!(fmt_sig6(123456789.0), "123456789");
    }

    #[test]
    fn curve_csv_shape() {
        let csv = cost_curve_csv(&toy_curve(4));
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 6);
        assert_eq!(lines[0], "load_normalized,energy_watts,marginal_watts");
        assert!(lines[1].ends_with(','), "first data row has no marginal");
        assert!(lines[5].starts_with("1.00000,"));
    }

    #[test]
    fn sweep_is_deterministic_and_ordered() {
        let cfg = ExperimentConfig {
            mnos: 3,
            delta_l: 0.1,
            ..ExperimentConfig::default()
        };
        let curve = toy_curve(10);
        let rows = equal_load_sweep(&cfg, &curve).unwrap();
        assert_eq!(rows.len(), 10);
        for (k, r) in rows.iter().enumerate() {
            assert!((r.load - (k + 1) as f64 / 10.0).abs() < 1e-12);
            assert!(r.savings_pct >= 0.0);
        }
        assert_eq!(sweep_csv(&rows), sweep_csv(&equal_load_sweep(&cfg, &curve).unwrap()));
    }

    #[test]
    fn scenario_requires_loads() {
        let cfg = ExperimentConfig::default();
        assert!(matches!(
            scenario(&cfg, &toy_curve(10)),
            Err(HarnessError::Config(_))
        ));
        let cfg = ExperimentConfig {
            loads: vec![0.9, 0.5],
            ..ExperimentConfig::default()
        };
        let (mnos, out) = scenario(&cfg, &toy_curve(10)).unwrap();
        assert_eq!(mnos.len(), 2);
        let csv = scenario_csv(&mnos, &out);
        assert_eq!(csv.lines().count(), 3);
    }

    #[test]
    fn constant_trace_reaches_steady_state() {
        let cfg = ExperimentConfig {
            loads: vec![0.2, 0.2],
            rounds: 4,
            delta_l: 0.1,
            ..ExperimentConfig::default()
        };
        let rows = rounds(&cfg, &toy_curve(10)).unwrap();
        assert_eq!(rows.len(), 4);
        // Round 1 consolidates one operator onto the other. The constant
        // trace adds nothing afterwards, so the slept operator re-enters at
        // zero and the lone awake one has nobody to trade with.
        assert_eq!(rows[0].sleeping, 1);
        for r in &rows[1..] {
            assert_eq!(r.trade_units, 0, "round {}: lone awake operator", r.round);
        }
    }

    #[test]
    fn selftest_passes_on_default_seed() {
        let report = selftest(0);
        assert!(report.passed, "{:?}", report.lines);
        assert_eq!(report.lines.len(), 4);
    }
}
