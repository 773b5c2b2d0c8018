//! Experiment execution: merge config sources, run, write artifacts.

use std::time::Instant;

use serde_json::json;

use aot_core::aloha;
use aot_core::policy::{train_qlearning, OracleParams, PolicyDocument, QLearnParams, QTable};
use aot_core::{
    pareto_sweep, rng, run, run_with_table, Observability, PolicyFamily, RunOutput,
    ServiceProcess, SingleLinkRun,
};

use crate::cli::{
    AlohaAnalyzeArgs, AlohaConfigArgs, AlohaOptimizeArgs, AlohaSimulateArgs, QtrainArgs,
    SingleLinkRunArgs, SingleLinkSweepArgs,
};
use crate::config::{
    check_alpha, check_horizon, parse_alpha_list, parse_observability, parse_policy, parse_process,
    require, resolve_format, resolve_out_dir, resolve_policy_spec, resolve_seed, CliError,
    ExperimentFile, ResolvedPolicy, Result,
};
use crate::output::{AlohaRow, Emitter, Manifest, ParetoRow, ScanRow, TraceRow};

fn trace_rows(out: &RunOutput) -> Vec<TraceRow> {
    out.trace
        .records()
        .iter()
        .map(|r| TraceRow { t: r.slot, rate: r.rate, indicator: r.indicator.as_bit(), age: r.age })
        .collect()
}

pub fn single_link_run(args: SingleLinkRunArgs) -> Result<()> {
    let started = Instant::now();
    let file = ExperimentFile::load_or_default(args.common.config.as_ref(), "single-link-run")?;
    let process = parse_process(&require(args.process.or(file.process.clone()), "process")?)?;
    let policy_spec = parse_policy(&require(args.policy.or(file.policy.clone()), "policy")?)?;
    let alpha = check_alpha(require(args.alpha.or(file.alpha), "alpha")?)?;
    let horizon = check_horizon(require(args.horizon.or(file.horizon), "horizon")?)?;
    let observability = match args.observability.or(file.observability.clone()) {
        Some(s) => parse_observability(&s)?,
        None => Observability::Instantaneous,
    };
    let (seed, entropy) = resolve_seed(args.seed.seed, file.seed, args.seed.entropy_seed)?;
    let qlearn = file.qlearn.clone().unwrap_or_default();
    let oracle = file.oracle.clone().unwrap_or_default();

    let resolved = resolve_policy_spec(&policy_spec, &process, alpha, &qlearn, &oracle)?;
    let cfg = SingleLinkRun {
        process,
        policy: match &resolved {
            ResolvedPolicy::Kind(kind) => kind.clone(),
            // placeholder; run_with_table ignores the policy field
            ResolvedPolicy::Table(_) => aot_core::PolicyKind::NeverVerify,
        },
        alpha,
        horizon,
        seed,
        observability,
    };
    let out = match &resolved {
        ResolvedPolicy::Kind(_) => run(&cfg)?,
        ResolvedPolicy::Table(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::io(format!("reading table {}", path.display()), e))?;
            let table = QTable::from_document(&PolicyDocument::from_json(&text)?)?;
            run_with_table(&cfg, table)?
        }
    };
    if out.diagnostics.fallback_hits > 0 {
        eprintln!(
            "warning: greedy table missed {} states (fell back to transmit)",
            out.diagnostics.fallback_hits
        );
    }

    let mut emitter = Emitter::new(
        resolve_out_dir(args.common.out_dir, &file.output),
        resolve_format(args.common.format, &file.output),
    )?;
    emitter.rows("trace", &trace_rows(&out))?;
    let mut manifest = Manifest::new("single-link run", serde_json::to_value(&cfg).unwrap()).seeded(seed, entropy);
    manifest.resolved_policy = Some(out.policy_descriptor.clone());
    manifest.metrics = Some(out.metrics);
    manifest.diagnostics = Some(out.diagnostics);
    manifest.wall_time_secs = started.elapsed().as_secs_f64();
    let path = emitter.manifest(&manifest)?;
    println!(
        "single-link run: objective {:.6}, average aot {:.6}, throughput {:.6} ({})",
        out.metrics.objective,
        out.metrics.average_aot,
        out.metrics.throughput,
        path.parent().unwrap_or_else(|| std::path::Path::new(".")).display()
    );
    Ok(())
}

fn parse_family(spec: &str, qlearn: &QLearnParams, oracle: &OracleParams) -> Result<PolicyFamily> {
    Ok(match spec {
        "periodic" => PolicyFamily::Periodic,
        "improved" => PolicyFamily::ImprovedPeriodic,
        "qlearning" => PolicyFamily::QLearning { params: qlearn.clone() },
        "oracle" => PolicyFamily::Oracle { params: oracle.clone() },
        other => {
            return Err(CliError::config(format!(
                "family `{other}`: expected periodic, improved, qlearning, or oracle"
            )))
        }
    })
}

pub fn single_link_sweep(args: SingleLinkSweepArgs) -> Result<()> {
    let started = Instant::now();
    let file = ExperimentFile::load_or_default(args.common.config.as_ref(), "single-link-sweep")?;
    let process = parse_process(&require(args.process.or(file.process.clone()), "process")?)?;
    let qlearn = file.qlearn.clone().unwrap_or_default();
    let oracle = file.oracle.clone().unwrap_or_default();
    let family = parse_family(&require(args.family.or(file.family.clone()), "family")?, &qlearn, &oracle)?;
    let alphas = match args.alphas {
        Some(s) => parse_alpha_list(&s)?,
        None => require(file.alphas.clone(), "alphas")?,
    };
    for a in &alphas {
        check_alpha(*a)?;
    }
    let horizon = check_horizon(require(args.horizon.or(file.horizon), "horizon")?)?;
    let (seed, entropy) = resolve_seed(args.seed.seed, file.seed, args.seed.entropy_seed)?;

    let points = pareto_sweep(&process, &family, &alphas, horizon, seed)?;
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

    let mut emitter = Emitter::new(
        resolve_out_dir(args.common.out_dir, &file.output),
        resolve_format(args.common.format, &file.output),
    )?;
    emitter.rows("pareto", &rows)?;
    let config = json!({
        "process": process,
        "family": family.descriptor(),
        "alphas": alphas,
        "horizon": horizon,
    });
    let mut manifest = Manifest::new("single-link sweep", config).seeded(seed, entropy);
    manifest.wall_time_secs = started.elapsed().as_secs_f64();
    let path = emitter.manifest(&manifest)?;
    println!("single-link sweep: {} points ({})", rows.len(), path.parent().unwrap().display());
    Ok(())
}

pub fn qtrain(args: QtrainArgs) -> Result<()> {
    let started = Instant::now();
    let file = ExperimentFile::load_or_default(args.common.config.as_ref(), "single-link-qtrain")?;
    let process = parse_process(&require(args.process.or(file.process.clone()), "process")?)?;
    let alpha = check_alpha(require(args.alpha.or(file.alpha), "alpha")?)?;
    let (seed, entropy) = resolve_seed(args.seed.seed, file.seed, args.seed.entropy_seed)?;
    let mut params = file.qlearn.clone().unwrap_or_default();
    if let Some(v) = args.training_slots {
        params.training_slots = v;
    }
    if let Some(v) = args.learning_rate {
        params.learning_rate = v;
    }
    if let Some(v) = args.gamma {
        params.gamma = v;
    }
    if let Some(v) = args.max_age {
        params.max_age = v;
    }

    let mut training = ServiceProcess::with_stream(process.clone(), seed, rng::STREAM_TRAINING_SERVICE)?;
    let table = train_qlearning(&mut training, alpha, &params, seed)?;
    let doc = table.to_document();

    let mut emitter = Emitter::new(
        resolve_out_dir(args.common.out_dir, &file.output),
        resolve_format(args.common.format, &file.output),
    )?;
    emitter.json_file("qtable.json", &doc.to_json())?;
    let config = json!({ "process": process, "alpha": alpha, "qlearn": params });
    let mut manifest = Manifest::new("single-link qtrain", config).seeded(seed, entropy);
    manifest.summary = Some(json!({
        "visited_states": table.visited_states(),
        "age_cap_hit": table.cap_hit(),
        "support": table.support(),
    }));
    manifest.wall_time_secs = started.elapsed().as_secs_f64();
    let path = emitter.manifest(&manifest)?;
    println!(
        "qtrain: {} states visited, cap hit: {} ({})",
        table.visited_states(),
        table.cap_hit(),
        path.parent().unwrap().display()
    );
    Ok(())
}

fn merge_aloha_config(args: &AlohaConfigArgs, file: &ExperimentFile) -> Result<aloha::AlohaConfig> {
    let cfg = aloha::AlohaConfig {
        sensors: require(args.sensors.or(file.sensors), "sensors")?,
        activity: require(args.activity.or(file.activity), "activity")?,
        slots: require(args.slots.or(file.slots), "slots")?,
        trust_slots: require(args.trust_slots.or(file.trust_slots), "trust-slots")?,
        beta: require(args.beta.or(file.beta), "beta")?,
        slot_duration: args.slot_duration.or(file.slot_duration).unwrap_or(1.0),
    };
    cfg.validate()?;
    Ok(cfg)
}

pub fn analytic_row(cfg: &aloha::AlohaConfig, alpha: Option<f64>) -> Result<AlohaRow> {
    let a = aloha::analytics(cfg, alpha.unwrap_or(0.0))?;
    Ok(AlohaRow {
        sensors: cfg.sensors,
        activity: cfg.activity,
        slots: cfg.slots,
        trust_slots: cfg.trust_slots,
        beta: cfg.beta,
        alpha,
        p_s: a.success_prob,
        p_t: a.verification_prob,
        aot_half_peak: a.avg_aot_half_peak,
        aot_renewal: a.avg_aot_renewal,
        eta: a.throughput,
        h: alpha.and(a.weighted_objective),
        source: "analytic",
        p_s_se: None,
        p_t_se: None,
        age_se: None,
        eta_se: None,
    })
}

pub fn sim_row(cfg: &aloha::AlohaConfig, alpha: Option<f64>, stats: &aloha::FrameStats) -> AlohaRow {
    AlohaRow {
        sensors: cfg.sensors,
        activity: cfg.activity,
        slots: cfg.slots,
        trust_slots: cfg.trust_slots,
        beta: cfg.beta,
        alpha,
        p_s: stats.success_prob.value,
        p_t: stats.verification_prob.value,
        aot_half_peak: None,
        aot_renewal: Some(stats.average_age.value),
        eta: stats.throughput.value,
        h: None,
        source: "sim",
        p_s_se: Some(stats.success_prob.std_err),
        p_t_se: Some(stats.verification_prob.std_err),
        age_se: Some(stats.average_age.std_err),
        eta_se: Some(stats.throughput.std_err),
    }
}

pub fn aloha_analyze(args: AlohaAnalyzeArgs) -> Result<()> {
    let started = Instant::now();
    let file = ExperimentFile::load_or_default(args.common.config.as_ref(), "aloha-analyze")?;
    let cfg = merge_aloha_config(&args.config, &file)?;
    let alpha = match args.alpha.or(file.alpha) {
        Some(a) => Some(check_alpha(a)?),
        None => None,
    };
    let rows = vec![analytic_row(&cfg, alpha)?];
    let mut emitter = Emitter::new(
        resolve_out_dir(args.common.out_dir, &file.output),
        resolve_format(args.common.format, &file.output),
    )?;
    emitter.rows("analytics", &rows)?;
    let mut manifest = Manifest::new("aloha analyze", json!({ "config": cfg, "alpha": alpha }));
    manifest.wall_time_secs = started.elapsed().as_secs_f64();
    let path = emitter.manifest(&manifest)?;
    println!(
        "aloha analyze: p_s {:.5}, p_t {:.5}, eta {:.5} ({})",
        rows[0].p_s,
        rows[0].p_t,
        rows[0].eta,
        path.parent().unwrap().display()
    );
    Ok(())
}

pub fn aloha_optimize(args: AlohaOptimizeArgs) -> Result<()> {
    let started = Instant::now();
    let file = ExperimentFile::load_or_default(args.common.config.as_ref(), "aloha-optimize")?;
    let base = aloha::AlohaBase {
        sensors: require(args.sensors.or(file.sensors), "sensors")?,
        activity: require(args.activity.or(file.activity), "activity")?,
        beta: require(args.beta.or(file.beta), "beta")?,
        slot_duration: args.slot_duration.or(file.slot_duration).unwrap_or(1.0),
    };
    let alpha = check_alpha(require(args.alpha.or(file.alpha), "alpha")?)?;
    let m_min = args.m_min.or(file.m_min).unwrap_or(1);
    let m_max = require(args.m_max.or(file.m_max), "m-max")?;
    if m_min < 1 || m_min > m_max {
        return Err(CliError::config(format!(
            "m-min: scan range [{m_min}, {m_max}] is empty or starts below 1"
        )));
    }

    let best = aloha::optimal_frame(&base, alpha, m_min..=m_max)?;
    let mut rows = Vec::new();
    for m in m_min..=m_max {
        let mt = match aloha::optimal_trust_slots(&base, m, alpha) {
            Ok(mt) => mt,
            Err(aot_core::Error::ClosedFormUndefined { .. }) => aloha::best_trust_slots_scan(&base, m, alpha)?.0,
            Err(e) => return Err(e.into()),
        };
        let h = aloha::weighted_objective(&base.with_frame(m, mt)?, alpha)?;
        rows.push(ScanRow {
            sensors: base.sensors,
            activity: base.activity,
            beta: base.beta,
            alpha,
            slots: m,
            trust_slots: mt,
            h,
        });
    }

    let mut emitter = Emitter::new(
        resolve_out_dir(args.common.out_dir, &file.output),
        resolve_format(args.common.format, &file.output),
    )?;
    emitter.rows("scan", &rows)?;
    let config = json!({ "base": base, "alpha": alpha, "m_min": m_min, "m_max": m_max });
    let mut manifest = Manifest::new("aloha optimize", config);
    manifest.summary = Some(json!({
        "optimal_slots": best.slots,
        "optimal_trust_slots": best.trust_slots,
        "objective": best.objective,
        "closed_form_fallbacks": best.fallback_count,
    }));
    manifest.wall_time_secs = started.elapsed().as_secs_f64();
    let path = emitter.manifest(&manifest)?;
    println!(
        "aloha optimize: m* = {}, m_t* = {}, h* = {:.6} ({})",
        best.slots,
        best.trust_slots,
        best.objective,
        path.parent().unwrap().display()
    );
    Ok(())
}

pub fn aloha_simulate(args: AlohaSimulateArgs) -> Result<()> {
    let started = Instant::now();
    let file = ExperimentFile::load_or_default(args.common.config.as_ref(), "aloha-simulate")?;
    let cfg = merge_aloha_config(&args.config, &file)?;
    let alpha = match args.alpha.or(file.alpha) {
        Some(a) => Some(check_alpha(a)?),
        None => None,
    };
    let frames = require(args.frames.or(file.frames), "frames")?;
    if frames == 0 {
        return Err(CliError::config("frames: must be >= 1".to_string()));
    }
    let (seed, entropy) = resolve_seed(args.seed.seed, file.seed, args.seed.entropy_seed)?;

    let stats = aloha::simulate_frames(&cfg, frames, seed)?;
    let rows = vec![analytic_row(&cfg, alpha)?, sim_row(&cfg, alpha, &stats)];

    let mut emitter = Emitter::new(
        resolve_out_dir(args.common.out_dir, &file.output),
        resolve_format(args.common.format, &file.output),
    )?;
    emitter.rows("sim", &rows)?;
    let config = json!({ "config": cfg, "alpha": alpha, "frames": frames });
    let mut manifest = Manifest::new("aloha simulate", config).seeded(seed, entropy);
    manifest.wall_time_secs = started.elapsed().as_secs_f64();
    let path = emitter.manifest(&manifest)?;
    println!(
        "aloha simulate: p_s {:.5}±{:.5}, p_t {:.5}±{:.5}, age {:.3}±{:.3} ({})",
        stats.success_prob.value,
        stats.success_prob.std_err,
        stats.verification_prob.value,
        stats.verification_prob.std_err,
        stats.average_age.value,
        stats.average_age.std_err,
        path.parent().unwrap().display()
    );
    Ok(())
}
