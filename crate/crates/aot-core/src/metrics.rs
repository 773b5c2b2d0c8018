//! Finite-horizon estimators of the long-run performance of a run: the
//! average age of trust, the throughput, and their weighted combination.

use serde::{Deserialize, Serialize};

use crate::age::AotTrace;
use crate::error::{Error, Result};

/// Summary metrics of one run.
///
/// `objective = throughput - alpha * average_aot` always holds by
/// construction; it is the weighted-sum scalarization of the two competing
/// goals (high throughput, low average age).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimMetrics {
    pub average_aot: f64,
    pub throughput: f64,
    pub objective: f64,
    pub horizon: u64,
    pub alpha: f64,
}

/// Averages a trace into [`SimMetrics`]:
/// `average_aot = (1/T) sum age(t)` and
/// `throughput = (1/T) sum [1 - I(t)] rate(t)`.
pub fn accumulate_metrics(trace: &AotTrace, alpha: f64) -> Result<SimMetrics> {
    if trace.is_empty() {
        return Err(Error::EmptyTrace);
    }
    if !alpha.is_finite() || alpha < 0.0 {
        return Err(Error::invalid("alpha", format!("must be >= 0, got {alpha}")));
    }
    let horizon = trace.horizon();
    let t = horizon as f64;
    let mut age_sum = 0.0;
    let mut service_sum = 0.0;
    for rec in trace.records() {
        age_sum += rec.age as f64;
        if !rec.indicator.is_verify() {
            service_sum += rec.rate;
        }
    }
    let average_aot = age_sum / t;
    let throughput = service_sum / t;
    Ok(SimMetrics {
        average_aot,
        throughput,
        objective: throughput - alpha * average_aot,
        horizon,
        alpha,
    })
}
