//! Single-link runs: a verification policy against a service process over a
//! finite horizon, plus the alpha sweeps that map out the trade-off between
//! throughput and average age of trust.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::age::{step_aot, AotState, AotTrace, SlotIndicator};
use crate::error::{Error, Result};
use crate::metrics::{accumulate_metrics, SimMetrics};
use crate::policy::{
    decide_improved_periodic, decide_periodic, optimal_period_mean, solve_mdp_oracle,
    train_qlearning, GreedyPolicy, OracleParams, OraclePolicy, PolicyKind, QLearnParams, QTable,
};
use crate::rng;
use crate::service::{RateDistribution, ServiceProcess};

/// What the policy is allowed to observe about the rate process.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Observability {
    /// The rate of the current slot is observed before deciding.
    #[default]
    Instantaneous,
    /// Only the analytic mean is known; rate-aware policies are rejected.
    MeanOnly,
}

/// Full configuration of one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SingleLinkRun {
    pub process: RateDistribution,
    pub policy: PolicyKind,
    pub alpha: f64,
    pub horizon: u64,
    pub seed: u64,
    #[serde(default)]
    pub observability: Observability,
}

/// Counters a run keeps about table lookups so callers can confirm the age
/// cap never mattered.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunDiagnostics {
    /// Greedy lookups that hit an unvisited state and fell back to transmit.
    pub fallback_hits: u64,
    /// Lookups whose age exceeded a table's cap.
    pub clamp_hits: u64,
    /// Largest age reached during the run.
    pub max_age_seen: u64,
}

/// A finished run: the realized trace, its metrics, and bookkeeping.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub trace: AotTrace,
    pub metrics: SimMetrics,
    pub policy_descriptor: String,
    pub diagnostics: RunDiagnostics,
}

/// A policy instantiated for execution, with whatever internal state it
/// carries between slots.
#[derive(Debug, Clone)]
pub enum RuntimePolicy {
    NeverVerify,
    Periodic { lambda: u64, counter: u64 },
    ImprovedPeriodic { lambda: u64, alpha: f64, counter: u64 },
    Threshold { max_age: u64 },
    Greedy(GreedyPolicy),
    Oracle(OraclePolicy),
}

impl RuntimePolicy {
    pub fn requires_rate(&self) -> bool {
        matches!(
            self,
            RuntimePolicy::ImprovedPeriodic { .. } | RuntimePolicy::Greedy(_) | RuntimePolicy::Oracle(_)
        )
    }

    fn descriptor(&self) -> String {
        match self {
            RuntimePolicy::NeverVerify => "never-verify".into(),
            RuntimePolicy::Periodic { lambda, .. } => format!("periodic(lambda={lambda})"),
            RuntimePolicy::ImprovedPeriodic { lambda, alpha, .. } => {
                format!("improved-periodic(lambda={lambda},alpha={alpha})")
            }
            RuntimePolicy::Threshold { max_age } => format!("threshold(age={max_age})"),
            RuntimePolicy::Greedy(g) => format!("q-greedy(N={})", g.table().max_age()),
            RuntimePolicy::Oracle(o) => format!("oracle(N={})", o.max_age()),
        }
    }

    fn decide(&mut self, rate: Option<f64>, prev_age: u64) -> SlotIndicator {
        let indicator = match self {
            RuntimePolicy::NeverVerify => SlotIndicator::Transmit,
            RuntimePolicy::Periodic { lambda, counter } => decide_periodic(*counter, *lambda),
            RuntimePolicy::ImprovedPeriodic { lambda, alpha, counter } => decide_improved_periodic(
                *counter,
                prev_age,
                rate.expect("checked at resolve time"),
                *lambda,
                *alpha,
            ),
            RuntimePolicy::Threshold { max_age } => {
                if prev_age >= *max_age {
                    SlotIndicator::Verify
                } else {
                    SlotIndicator::Transmit
                }
            }
            RuntimePolicy::Greedy(greedy) => greedy.decide(rate.expect("checked at resolve time"), prev_age),
            RuntimePolicy::Oracle(oracle) => oracle.decide(rate.expect("checked at resolve time"), prev_age),
        };
        // period counters restart on every verification, whatever triggered it
        match self {
            RuntimePolicy::Periodic { counter, .. } | RuntimePolicy::ImprovedPeriodic { counter, .. } => {
                if indicator.is_verify() {
                    *counter = 0;
                } else {
                    *counter += 1;
                }
            }
            _ => {}
        }
        indicator
    }
}

fn validate_run(cfg: &SingleLinkRun) -> Result<()> {
    cfg.process.validate()?;
    cfg.policy.validate()?;
    if cfg.horizon == 0 {
        return Err(Error::invalid("horizon", "must be >= 1"));
    }
    if !cfg.alpha.is_finite() || cfg.alpha < 0.0 {
        return Err(Error::invalid("alpha", format!("must be >= 0, got {}", cfg.alpha)));
    }
    if cfg.observability == Observability::MeanOnly && cfg.policy.requires_rate() {
        return Err(Error::IncompatibleObservability { policy: cfg.policy.descriptor() });
    }
    Ok(())
}

/// Turns a configured [`PolicyKind`] into an executable policy. Q-learning
/// trains here (on its own rate and exploration streams derived from the run
/// seed); the oracle solves here.
pub fn resolve_policy(cfg: &SingleLinkRun) -> Result<RuntimePolicy> {
    validate_run(cfg)?;
    Ok(match &cfg.policy {
        PolicyKind::NeverVerify => RuntimePolicy::NeverVerify,
        PolicyKind::Periodic { lambda } => RuntimePolicy::Periodic { lambda: *lambda, counter: 0 },
        PolicyKind::ImprovedPeriodic { lambda, alpha } => {
            RuntimePolicy::ImprovedPeriodic { lambda: *lambda, alpha: *alpha, counter: 0 }
        }
        PolicyKind::Threshold { max_age } => RuntimePolicy::Threshold { max_age: *max_age },
        PolicyKind::QLearning { params } => {
            let mut training = ServiceProcess::with_stream(
                cfg.process.clone(),
                cfg.seed,
                rng::STREAM_TRAINING_SERVICE,
            )?;
            let table = train_qlearning(&mut training, cfg.alpha, params, cfg.seed)?;
            RuntimePolicy::Greedy(GreedyPolicy::new(table))
        }
        PolicyKind::Oracle { params } => {
            let solution = solve_mdp_oracle(&cfg.process, cfg.alpha, params)?;
            RuntimePolicy::Oracle(solution.policy)
        }
    })
}

/// Runs a pre-resolved policy. Within each slot: observe the rate (when
/// observable), decide, update the age, record.
pub fn run_with_policy(cfg: &SingleLinkRun, mut policy: RuntimePolicy) -> Result<RunOutput> {
    validate_run(cfg)?;
    if cfg.observability == Observability::MeanOnly && policy.requires_rate() {
        return Err(Error::IncompatibleObservability { policy: policy.descriptor() });
    }
    let mut process = ServiceProcess::new(cfg.process.clone(), cfg.seed)?;
    let mut state = AotState::default();
    let mut max_age_seen = 0u64;
    let mut steps = Vec::with_capacity(cfg.horizon as usize);
    for t in 1..=cfg.horizon {
        let rate = process.sample_rate(t);
        let observed = match cfg.observability {
            Observability::Instantaneous => Some(rate),
            Observability::MeanOnly => None,
        };
        let indicator = policy.decide(observed, state.age());
        state = step_aot(state, indicator);
        max_age_seen = max_age_seen.max(state.age());
        steps.push((rate, indicator));
    }
    let trace = AotTrace::from_steps(steps);
    debug_assert!(trace.is_consistent());
    let metrics = accumulate_metrics(&trace, cfg.alpha)?;
    let diagnostics = match &policy {
        RuntimePolicy::Greedy(g) => RunDiagnostics {
            fallback_hits: g.fallback_hits(),
            clamp_hits: g.clamp_hits(),
            max_age_seen,
        },
        _ => RunDiagnostics { max_age_seen, ..RunDiagnostics::default() },
    };
    Ok(RunOutput {
        trace,
        metrics,
        policy_descriptor: policy.descriptor(),
        diagnostics,
    })
}

/// Resolves the configured policy and runs it.
pub fn run(cfg: &SingleLinkRun) -> Result<RunOutput> {
    let policy = resolve_policy(cfg)?;
    run_with_policy(cfg, policy)
}

/// Plays a pre-trained table greedily, e.g. one loaded from disk; the run's
/// own policy field is ignored.
pub fn run_with_table(cfg: &SingleLinkRun, table: QTable) -> Result<RunOutput> {
    run_with_policy(cfg, RuntimePolicy::Greedy(GreedyPolicy::new(table)))
}

/// One row of a trade-off sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParetoPoint {
    pub alpha: f64,
    pub average_aot: f64,
    pub throughput: f64,
    pub objective: f64,
    pub policy_descriptor: String,
}

/// A family of policies that re-instantiates itself for each swept alpha.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum PolicyFamily {
    /// Periodic with the closed-form optimal period for the mean rate.
    Periodic,
    /// Improved periodic around the same closed-form period.
    ImprovedPeriodic,
    /// Retrains a Q-table per alpha.
    QLearning { params: QLearnParams },
    /// Re-solves the exact problem per alpha.
    Oracle { params: OracleParams },
}

impl PolicyFamily {
    /// The family member for a given weight. A zero weight degenerates the
    /// periodic families to never-verify (the optimal period is unbounded).
    pub fn instantiate(&self, process: &RateDistribution, alpha: f64) -> Result<PolicyKind> {
        Ok(match self {
            PolicyFamily::Periodic => {
                if alpha == 0.0 {
                    PolicyKind::NeverVerify
                } else {
                    PolicyKind::Periodic { lambda: optimal_period_mean(process, alpha)? }
                }
            }
            PolicyFamily::ImprovedPeriodic => {
                if alpha == 0.0 {
                    PolicyKind::NeverVerify
                } else {
                    PolicyKind::ImprovedPeriodic { lambda: optimal_period_mean(process, alpha)?, alpha }
                }
            }
            PolicyFamily::QLearning { params } => PolicyKind::QLearning { params: params.clone() },
            PolicyFamily::Oracle { params } => PolicyKind::Oracle { params: params.clone() },
        })
    }

    pub fn descriptor(&self) -> &'static str {
        match self {
            PolicyFamily::Periodic => "periodic",
            PolicyFamily::ImprovedPeriodic => "improved-periodic",
            PolicyFamily::QLearning { .. } => "q-learning",
            PolicyFamily::Oracle { .. } => "oracle",
        }
    }
}

/// Sweeps the weight grid, re-instantiating the family per alpha, and
/// returns one point per alpha sorted by throughput. Every run reuses the
/// same seed so curves differ only by policy, not noise.
pub fn pareto_sweep(
    process: &RateDistribution,
    family: &PolicyFamily,
    alphas: &[f64],
    horizon: u64,
    seed: u64,
) -> Result<Vec<ParetoPoint>> {
    if alphas.is_empty() {
        return Err(Error::invalid("alphas", "must be nonempty"));
    }
    for a in alphas {
        if !a.is_finite() || *a < 0.0 {
            return Err(Error::invalid("alphas", format!("must be >= 0, got {a}")));
        }
    }
    let mut points: Vec<ParetoPoint> = alphas
        .par_iter()
        .map(|&alpha| -> Result<ParetoPoint> {
            let cfg = SingleLinkRun {
                process: process.clone(),
                policy: family.instantiate(process, alpha)?,
                alpha,
                horizon,
                seed,
                observability: Observability::Instantaneous,
            };
            let out = run(&cfg)?;
            Ok(ParetoPoint {
                alpha,
                average_aot: out.metrics.average_aot,
                throughput: out.metrics.throughput,
                objective: out.metrics.objective,
                policy_descriptor: out.policy_descriptor,
            })
        })
        .collect::<Result<_>>()?;
    points.sort_by(|a, b| a.throughput.partial_cmp(&b.throughput).unwrap());
    Ok(points)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn constant7(policy: PolicyKind, alpha: f64, horizon: u64) -> SingleLinkRun {
        SingleLinkRun {
            process: RateDistribution::Constant { rate: 7.0 },
            policy,
            alpha,
            horizon,
            seed: 42,
            observability: Observability::Instantaneous,
        }
    }

    #[test]
    fn periodic_on_constant_is_exact_over_full_cycles() {
        let out = run(&constant7(PolicyKind::Periodic { lambda: 4 }, 1.0, 10_000)).unwrap();
        assert_eq!(out.metrics.objective, 3.75);
        assert_eq!(out.metrics.average_aot, 1.5);
        assert_eq!(out.metrics.throughput, 5.25);
    }

    #[test]
    fn verify_every_slot_zeroes_everything() {
        let out = run(&constant7(PolicyKind::Periodic { lambda: 1 }, 1.0, 1000)).unwrap();
        assert_eq!(out.metrics.throughput, 0.0);
        assert_eq!(out.metrics.average_aot, 0.0);
    }

    #[test]
    fn periodic_on_two_point_tracks_the_mean_rate_objective() {
        let cfg = SingleLinkRun {
            process: RateDistribution::TwoPoint { low: 1.0, high: 10.0, p_high: 0.5 },
            policy: PolicyKind::Periodic { lambda: 3 },
            alpha: 1.0,
            horizon: 1_000_000,
            seed: 7,
            observability: Observability::Instantaneous,
        };
        let out = run(&cfg).unwrap();
        // f(3; 5.5) = 8/3; Monte Carlo tolerance
        assert_relative_eq!(out.metrics.objective, 8.0 / 3.0, epsilon = 0.02);
        // ages of a periodic schedule are deterministic
        assert_relative_eq!(out.metrics.average_aot, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn identical_configs_give_identical_outputs() {
        let cfg = SingleLinkRun {
            process: RateDistribution::TwoPoint { low: 1.0, high: 10.0, p_high: 0.5 },
            policy: PolicyKind::ImprovedPeriodic { lambda: 3, alpha: 1.0 },
            alpha: 1.0,
            horizon: 20_000,
            seed: 99,
            observability: Observability::Instantaneous,
        };
        let a = run(&cfg).unwrap();
        let b = run(&cfg).unwrap();
        assert_eq!(a.trace, b.trace);
        assert_eq!(a.metrics, b.metrics);
    }

    #[test]
    fn mean_only_rejects_rate_aware_policies() {
        let cfg = SingleLinkRun {
            observability: Observability::MeanOnly,
            ..constant7(PolicyKind::ImprovedPeriodic { lambda: 3, alpha: 1.0 }, 1.0, 100)
        };
        assert!(matches!(run(&cfg), Err(Error::IncompatibleObservability { .. })));
        let ok = SingleLinkRun {
            observability: Observability::MeanOnly,
            ..constant7(PolicyKind::Periodic { lambda: 4 }, 1.0, 100)
        };
        assert!(run(&ok).is_ok());
    }

    #[test]
    fn threshold_equals_periodic_with_shifted_length() {
        let a = run(&constant7(PolicyKind::Threshold { max_age: 3 }, 1.0, 4000)).unwrap();
        let b = run(&constant7(PolicyKind::Periodic { lambda: 4 }, 1.0, 4000)).unwrap();
        assert_eq!(a.metrics, b.metrics);
    }

    #[test]
    fn never_verify_grows_linearly() {
        let t = 1000u64;
        let out = run(&constant7(PolicyKind::NeverVerify, 0.0, t)).unwrap();
        // ages 1..=T average to (T+1)/2
        assert_eq!(out.metrics.average_aot, (t as f64 + 1.0) / 2.0);
        assert_eq!(out.metrics.throughput, 7.0);
        assert_eq!(out.diagnostics.max_age_seen, t);
    }

    #[test]
    fn sweep_of_theorem_family_is_monotone() {
        let alphas = [0.25, 0.5, 1.0, 2.0, 4.0];
        let points = pareto_sweep(
            &RateDistribution::Constant { rate: 7.0 },
            &PolicyFamily::Periodic,
            &alphas,
            10_000,
            1,
        )
        .unwrap();
        assert_eq!(points.len(), alphas.len());
        // sorted by throughput
        for w in points.windows(2) {
            assert!(w[0].throughput <= w[1].throughput);
        }
        // larger alpha gives smaller period, smaller age, smaller throughput
        let mut by_alpha = points.clone();
        by_alpha.sort_by(|a, b| a.alpha.partial_cmp(&b.alpha).unwrap());
        for w in by_alpha.windows(2) {
            assert!(w[0].average_aot > w[1].average_aot);
            assert!(w[0].throughput > w[1].throughput);
        }
        // periods follow the closed form: 7 (tie with 8 broken down), 5, 4, 3, 2
        let descriptors: Vec<&str> = by_alpha.iter().map(|p| p.policy_descriptor.as_str()).collect();
        assert_eq!(
            descriptors,
            vec![
                "periodic(lambda=7)",
                "periodic(lambda=5)",
                "periodic(lambda=4)",
                "periodic(lambda=3)",
                "periodic(lambda=2)"
            ]
        );
    }

    #[test]
    fn zero_alpha_sweep_point_never_verifies() {
        let points = pareto_sweep(
            &RateDistribution::Constant { rate: 7.0 },
            &PolicyFamily::Periodic,
            &[0.0],
            1000,
            1,
        )
        .unwrap();
        assert_eq!(points[0].policy_descriptor, "never-verify");
        assert_eq!(points[0].throughput, 7.0);
        assert_eq!(points[0].average_aot, (1000.0 + 1.0) / 2.0);
    }
}
