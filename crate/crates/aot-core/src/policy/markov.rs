//! Markov-chain view of the age process.
//!
//! With the age capped at `N`, a randomized stationary policy is a vector of
//! per-age verification probabilities `p_0..p_N`. The age chain then has a
//! closed-form stationary distribution, and for deterministic threshold
//! policies (verify exactly at age `n`) the long-run objective reduces to a
//! one-line formula whose integer argmax matches the optimal verification
//! period shifted by one.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Stationary distribution of the capped age chain, indexed by age `0..=N`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StationaryDistribution {
    pi: Vec<f64>,
}

impl StationaryDistribution {
    pub fn probabilities(&self) -> &[f64] {
        &self.pi
    }

    pub fn max_age(&self) -> u64 {
        self.pi.len() as u64 - 1
    }
}

/// Solves the age chain for per-age verification probabilities `p_0..p_N`:
///
/// ```text
/// pi_0 = 1 / (1 + sum_{n=1..N} prod_{i=0..n-1} (1 - p_i))
/// pi_n = pi_0 * prod_{i=0..n-1} (1 - p_i)
/// ```
///
/// Requires `p_N = 1` so the chain stays on `0..=N`.
pub fn stationary_distribution(verify_probs: &[f64]) -> Result<StationaryDistribution> {
    if verify_probs.is_empty() {
        return Err(Error::invalid("verify_probs", "must be nonempty"));
    }
    for p in verify_probs {
        if !(0.0..=1.0).contains(p) {
            return Err(Error::invalid("verify_probs", format!("each entry must lie in [0, 1], got {p}")));
        }
    }
    let last = *verify_probs.last().unwrap();
    if last < 1.0 {
        return Err(Error::invalid(
            "verify_probs",
            format!("p_N must equal 1 so the chain is positive recurrent on 0..=N, got {last}"),
        ));
    }
    // survival[n] = prod_{i=0..n-1} (1 - p_i); survival[0] = 1 for pi_0.
    let n_states = verify_probs.len();
    let mut survival = Vec::with_capacity(n_states);
    let mut prod = 1.0;
    survival.push(prod);
    for p in &verify_probs[..n_states - 1] {
        prod *= 1.0 - p;
        survival.push(prod);
    }
    let norm: f64 = survival.iter().sum();
    let pi = survival.into_iter().map(|s| s / norm).collect();
    Ok(StationaryDistribution { pi })
}

/// Long-run objective of the deterministic threshold policy that verifies
/// exactly at age `n`: `(1 - 1/(1+n)) * mean_rate - alpha * n / 2`.
pub fn threshold_objective(n: u64, mean_rate: f64, alpha: f64) -> f64 {
    let nf = n as f64;
    (1.0 - 1.0 / (1.0 + nf)) * mean_rate - alpha * nf / 2.0
}
