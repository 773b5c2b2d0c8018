//! Simulation and optimisation toolkit for age-of-trust verification
//! scheduling.
//!
//! A link that keeps re-verifying its peer's identity pays for trust with
//! throughput: every verification slot is a slot not spent on data. The
//! *age of trust* — slots elapsed since the last verification — quantifies
//! the other side of the bargain. This crate provides:
//!
//! - the discrete-time age process and its metrics ([`age`], [`metrics`]);
//! - service-rate models with seeded, slot-addressable randomness
//!   ([`service`], [`rng`]);
//! - verification policies: closed-form periodic schedules, a rate-aware
//!   improved variant, tabular Q-learning, an exact average-reward solver,
//!   and the Markov-chain threshold analysis ([`policy`]);
//! - a single-link simulator and alpha-sweep harness for throughput/age
//!   trade-off frontiers ([`link`]);
//! - a trust-enhanced frame-slotted ALOHA model: analytics, slot-allocation
//!   optimisers, and a Monte Carlo frame simulator ([`aloha`]).
//!
//! Everything stochastic is driven by one explicit seed per run, split into
//! fixed per-purpose streams, so equal seeds give bit-identical results.

pub mod age;
pub mod aloha;
pub mod error;
pub mod link;
pub mod metrics;
pub mod policy;
pub mod rng;
pub mod service;

pub use age::{step_aot, AotState, AotTrace, SlotIndicator, SlotRecord};
pub use error::{Error, Result};
pub use link::{
    pareto_sweep, run, run_with_policy, run_with_table, Observability, ParetoPoint, PolicyFamily,
    RunDiagnostics, RunOutput, SingleLinkRun,
};
pub use metrics::{accumulate_metrics, SimMetrics};
pub use policy::PolicyKind;
pub use service::{RateDistribution, ServiceProcess};
