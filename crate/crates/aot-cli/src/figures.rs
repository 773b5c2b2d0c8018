//! Named preset experiments.
//!
//! Each preset bundles the parameters of one published-style study into a
//! deterministic run that writes a single CSV (plus JSON mirror on request):
//! the parameters live here so the acceptance suite and users invoke them
//! byte-for-byte identically.

use std::time::Instant;

use serde::Serialize;
use serde_json::json;

use aot_core::aloha;
use aot_core::policy::{solve_mdp_oracle, OracleParams, QLearnParams};
use aot_core::{
    pareto_sweep, run, Observability, PolicyFamily, PolicyKind, RateDistribution, SingleLinkRun,
};

use crate::cli::ReproduceArgs;
use crate::config::{resolve_format, resolve_out_dir, CliError, ExperimentFile, Result};
use crate::dispatch::analytic_row;
use crate::output::{AlohaRow, Emitter, Manifest, ParetoRow, ScanRow, TraceRow};

/// Objective of one policy at one weight; the exact solver's gain is
/// reported as policy "oracle-gain".
#[derive(Debug, Serialize)]
struct ObjectiveRow {
    alpha: f64,
    policy: String,
    objective: f64,
}

pub const FIGURE_IDS: &[&str] = &["fig2", "fig5", "fig6", "fig7", "fig8", "fig9", "fig10", "fig11"];

const SEED: u64 = 20240901;

fn constant7() -> RateDistribution {
    RateDistribution::Constant { rate: 7.0 }
}

fn two_point() -> RateDistribution {
    RateDistribution::TwoPoint { low: 1.0, high: 10.0, p_high: 0.5 }
}

fn qlearn_params() -> QLearnParams {
    QLearnParams { training_slots: 1_000_000, ..QLearnParams::default() }
}

pub fn reproduce(args: ReproduceArgs) -> Result<()> {
    let started = Instant::now();
    let file = ExperimentFile::default();
    let mut emitter = Emitter::new(
        resolve_out_dir(args.common.out_dir, &file.output),
        resolve_format(args.common.format, &file.output),
    )?;
    let figure = args.figure.as_str();
    let config = match figure {
        "fig2" => fig2(&mut emitter)?,
        "fig5" => fig5(&mut emitter)?,
        "fig6" => fig6(&mut emitter)?,
        "fig7" => fig7(&mut emitter)?,
        "fig8" => fig8(&mut emitter)?,
        "fig9" => fig9(&mut emitter)?,
        "fig10" => fig10(&mut emitter)?,
        "fig11" => fig11(&mut emitter)?,
        other => {
            return Err(CliError::config(format!(
                "figure `{other}`: known presets are {}",
                FIGURE_IDS.join(", ")
            )))
        }
    };
    let mut manifest = Manifest::new(format!("reproduce {figure}"), config).seeded(SEED, false);
    manifest.wall_time_secs = started.elapsed().as_secs_f64();
    let path = emitter.manifest(&manifest)?;
    println!("reproduce {figure}: done ({})", path.parent().unwrap().display());
    Ok(())
}

/// Sawtooth trace of the optimal periodic schedule on the constant link.
fn fig2(emitter: &mut Emitter) -> Result<serde_json::Value> {
    let cfg = SingleLinkRun {
        process: constant7(),
        policy: PolicyKind::Periodic { lambda: 4 },
        alpha: 1.0,
        horizon: 24,
        seed: SEED,
        observability: Observability::Instantaneous,
    };
    let out = run(&cfg)?;
    let rows: Vec<TraceRow> = out
        .trace
        .records()
        .iter()
        .map(|r| TraceRow { t: r.slot, rate: r.rate, indicator: r.indicator.as_bit(), age: r.age })
        .collect();
    emitter.rows("fig2", &rows)?;
    Ok(serde_json::to_value(&cfg).unwrap())
}

/// Weighted frame objective versus trust-slot count at four age weights.
fn fig5(emitter: &mut Emitter) -> Result<serde_json::Value> {
    let alphas = [0.005, 0.01, 0.02, 0.04];
    let mut rows: Vec<AlohaRow> = Vec::new();
    for &alpha in &alphas {
        for trust_slots in 1..=15u64 {
            let cfg = aloha::AlohaConfig::new(30, 0.5, 15, trust_slots, 1.5)?;
            rows.push(analytic_row(&cfg, Some(alpha))?);
        }
    }
    emitter.rows("fig5", &rows)?;
    Ok(json!({ "sensors": 30, "activity": 0.5, "slots": 15, "beta": 1.5, "alphas": alphas }))
}

/// Objective versus age weight on the constant link: closed-form periodic,
/// learned greedy, and the exact gain.
fn fig6(emitter: &mut Emitter) -> Result<serde_json::Value> {
    let alphas = [0.25, 0.5, 1.0, 2.0, 4.0];
    let horizon = 200_000;
    let mut rows = Vec::new();
    for &alpha in &alphas {
        for family in [
            PolicyFamily::Periodic,
            PolicyFamily::QLearning { params: qlearn_params() },
        ] {
            let point = &pareto_sweep(&constant7(), &family, &[alpha], horizon, SEED)?[0];
            rows.push(ObjectiveRow {
                alpha,
                policy: point.policy_descriptor.clone(),
                objective: point.objective,
            });
        }
        let gain = solve_mdp_oracle(&constant7(), alpha, &OracleParams::default())?.gain;
        rows.push(ObjectiveRow { alpha, policy: "oracle-gain".into(), objective: gain });
    }
    emitter.rows("fig6", &rows)?;
    Ok(json!({ "process": constant7(), "alphas": alphas, "horizon": horizon }))
}

/// Age/throughput trade-off of the closed-form periodic family on the
/// constant link.
fn fig7(emitter: &mut Emitter) -> Result<serde_json::Value> {
    let alphas = [0.25, 0.5, 1.0, 2.0, 4.0];
    let horizon = 100_000;
    let points = pareto_sweep(&constant7(), &PolicyFamily::Periodic, &alphas, horizon, SEED)?;
    let rows: Vec<ParetoRow> = points
        .iter()
        .map(|p| ParetoRow {
            alpha: p.alpha,
            policy: p.policy_descriptor.clone(),
            average_aot: p.average_aot,
            throughput: p.throughput,
            objective: p.objective,
        })
        .collect();
    emitter.rows("fig7", &rows)?;
    Ok(json!({ "process": constant7(), "family": "periodic", "alphas": alphas, "horizon": horizon }))
}

/// Objectives of all schemes on the two-point link at unit weight.
fn fig8(emitter: &mut Emitter) -> Result<serde_json::Value> {
    let alpha = 1.0;
    let horizon = 1_000_000;
    let mut rows = Vec::new();
    for family in [
        PolicyFamily::Periodic,
        PolicyFamily::ImprovedPeriodic,
        PolicyFamily::QLearning { params: qlearn_params() },
    ] {
        let point = &pareto_sweep(&two_point(), &family, &[alpha], horizon, SEED)?[0];
        rows.push(ObjectiveRow { alpha, policy: point.policy_descriptor.clone(), objective: point.objective });
    }
    let gain = solve_mdp_oracle(&two_point(), alpha, &OracleParams::default())?.gain;
    rows.push(ObjectiveRow { alpha, policy: "oracle-gain".into(), objective: gain });
    emitter.rows("fig8", &rows)?;
    Ok(json!({ "process": two_point(), "alpha": alpha, "horizon": horizon }))
}

/// Trade-off frontiers of the three scheme families on the two-point link.
fn fig9(emitter: &mut Emitter) -> Result<serde_json::Value> {
    let alphas = [0.25, 0.5, 1.0, 2.0, 8.0];
    let horizon = 400_000;
    let mut rows = Vec::new();
    for family in [
        PolicyFamily::Periodic,
        PolicyFamily::ImprovedPeriodic,
        PolicyFamily::QLearning { params: qlearn_params() },
    ] {
        for p in pareto_sweep(&two_point(), &family, &alphas, horizon, SEED)? {
            rows.push(ParetoRow {
                alpha: p.alpha,
                policy: p.policy_descriptor.clone(),
                average_aot: p.average_aot,
                throughput: p.throughput,
                objective: p.objective,
            });
        }
    }
    emitter.rows("fig9", &rows)?;
    Ok(json!({ "process": two_point(), "alphas": alphas, "horizon": horizon }))
}

/// Optimised frame objective versus frame length across sensor counts and
/// slot-duration ratios.
fn fig10(emitter: &mut Emitter) -> Result<serde_json::Value> {
    let alpha = 0.01;
    let mut rows: Vec<ScanRow> = Vec::new();
    let mut scan = |sensors: u64, beta: f64| -> Result<()> {
        let base = aloha::AlohaBase { sensors, activity: 0.5, beta, slot_duration: 1.0 };
        for m in 1..=60u64 {
            let mt = match aloha::optimal_trust_slots(&base, m, alpha) {
                Ok(mt) => mt,
                Err(aot_core::Error::ClosedFormUndefined { .. }) => {
                    aloha::best_trust_slots_scan(&base, m, alpha)?.0
                }
                Err(e) => return Err(e.into()),
            };
            let h = aloha::weighted_objective(&base.with_frame(m, mt)?, alpha)?;
            rows.push(ScanRow { sensors, activity: 0.5, beta, alpha, slots: m, trust_slots: mt, h });
        }
        Ok(())
    };
    for sensors in [10, 20, 30, 40] {
        scan(sensors, 1.5)?;
    }
    for beta in [1.2, 2.0] {
        scan(30, beta)?;
    }
    emitter.rows("fig10", &rows)?;
    Ok(json!({ "activity": 0.5, "alpha": alpha, "sensor_grid": [10, 20, 30, 40], "beta_grid": [1.2, 1.5, 2.0] }))
}

/// Age/throughput frontier of the fully optimised frame across sensor
/// counts and slot-duration ratios.
fn fig11(emitter: &mut Emitter) -> Result<serde_json::Value> {
    let alphas = [0.002, 0.005, 0.01, 0.02, 0.05];
    let mut rows: Vec<AlohaRow> = Vec::new();
    let mut frontier = |sensors: u64, beta: f64| -> Result<()> {
        let base = aloha::AlohaBase { sensors, activity: 0.5, beta, slot_duration: 1.0 };
        for &alpha in &alphas {
            let best = aloha::optimal_frame(&base, alpha, 1..=100)?;
            let cfg = base.with_frame(best.slots, best.trust_slots)?;
            rows.push(analytic_row(&cfg, Some(alpha))?);
        }
        Ok(())
    };
    for sensors in [20, 30, 40] {
        frontier(sensors, 1.5)?;
    }
    for beta in [1.2, 2.0] {
        frontier(30, beta)?;
    }
    emitter.rows("fig11", &rows)?;
    Ok(json!({ "activity": 0.5, "alphas": alphas, "sensor_grid": [20, 30, 40], "beta_grid": [1.2, 1.5, 2.0] }))
}
