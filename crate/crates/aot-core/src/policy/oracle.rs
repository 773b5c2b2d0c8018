//! Exact average-reward baseline.
//!
//! The weighted verification problem on a finite-support rate process is an
//! average-reward MDP on states (rate, age 0..=N) with actions
//! transmit/verify. Relative value iteration solves it to tolerance; the
//! resulting gain is the supremum any policy's simulated objective can
//! approach, which makes it the ground truth the heuristics are judged
//! against.
//!
//! Periodic optimal policies make the underlying chain periodic, where plain
//! relative value iteration can cycle instead of converging, so each sweep
//! is damped: `h <- (1 - tau) h + tau T(h)`. The damping leaves the optimal
//! policy untouched and rescales the gain estimate by `tau`, which is undone
//! before returning.

use serde::{Deserialize, Serialize};

use crate::age::SlotIndicator;
use crate::error::{Error, Result};
use crate::service::RateDistribution;

use super::table::{PolicyDocument, StateEntry, DOCUMENT_VERSION};

/// Solver configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields, rename_all = "kebab-case")]
pub struct OracleParams {
    /// Age cap `N`; must be large enough that the optimal policy never
    /// reaches it (checked after solving).
    pub max_age: u64,
    /// Gain accuracy: iteration stops when the span of successive value
    /// differences, rescaled to gain units, falls below this.
    pub tolerance: f64,
    pub max_iterations: u64,
    /// Damping weight on the Bellman image per sweep.
    pub damping: f64,
}

impl Default for OracleParams {
    fn default() -> Self {
        OracleParams {
            max_age: 50,
            tolerance: 1e-9,
            max_iterations: 500_000,
            damping: 0.5,
        }
    }
}

impl OracleParams {
    pub fn validate(&self) -> Result<()> {
        if self.max_age == 0 {
            return Err(Error::invalid("max_age", "must be positive"));
        }
        if !(self.tolerance.is_finite() && self.tolerance > 0.0) {
            return Err(Error::invalid("tolerance", format!("must be positive, got {}", self.tolerance)));
        }
        if !(0.0 < self.damping && self.damping <= 1.0) {
            return Err(Error::invalid("damping", format!("must lie in (0, 1], got {}", self.damping)));
        }
        Ok(())
    }
}

/// The optimal stationary deterministic policy on (rate, age) states.
#[derive(Debug, Clone, PartialEq)]
pub struct OraclePolicy {
    support: Vec<f64>,
    max_age: u64,
    // verify[rate_idx * (max_age + 1) + age]
    verify: Vec<bool>,
}

impl OraclePolicy {
    pub fn support(&self) -> &[f64] {
        &self.support
    }

    pub fn max_age(&self) -> u64 {
        self.max_age
    }

    pub fn rate_index(&self, rate: f64) -> Option<usize> {
        self.support.iter().position(|r| r.to_bits() == rate.to_bits())
    }

    /// Action at a state; ages beyond the cap are evaluated at the cap.
    pub fn decide(&self, rate: f64, prev_age: u64) -> SlotIndicator {
        let idx = self.rate_index(rate).unwrap_or(0);
        let age = prev_age.min(self.max_age) as usize;
        if self.verify[idx * (self.max_age as usize + 1) + age] {
            SlotIndicator::Verify
        } else {
            SlotIndicator::Transmit
        }
    }

    fn verifies(&self, rate_idx: usize, age: u64) -> bool {
        self.verify[rate_idx * (self.max_age as usize + 1) + age as usize]
    }

    /// Smallest age at which every rate verifies, i.e. the largest age the
    /// policy can reach from a fresh start; `None` if the cap is reachable.
    pub fn max_reachable_age(&self) -> Option<u64> {
        for age in 0..=self.max_age {
            let all_verify = (0..self.support.len()).all(|idx| self.verifies(idx, age));
            if all_verify {
                return Some(age);
            }
        }
        None
    }

    pub fn to_document(&self, gain: f64, bias: &[f64]) -> PolicyDocument {
        let n = self.max_age as usize + 1;
        let entries = (0..self.support.len())
            .flat_map(|idx| {
                (0..n).map(move |age| {
                    let s = idx * n + age;
                    StateEntry {
                        rate: self.support[idx],
                        age: age as u64,
                        // relative (bias) values; differences are meaningful
                        q_transmit: bias[s * 2],
                        q_verify: bias[s * 2 + 1],
                        action: u8::from(self.verify[s]),
                    }
                })
            })
            .collect();
        PolicyDocument {
            version: DOCUMENT_VERSION,
            kind: "oracle".to_string(),
            max_age: self.max_age,
            support: self.support.clone(),
            gain: Some(gain),
            entries,
        }
    }

    pub fn from_document(doc: &PolicyDocument) -> Result<Self> {
        doc.check_version("oracle")?;
        let n = doc.max_age as usize + 1;
        let mut verify = vec![false; doc.support.len() * n];
        for e in &doc.entries {
            let idx = doc
                .support
                .iter()
                .position(|r| r.to_bits() == e.rate.to_bits())
                .ok_or_else(|| Error::PolicyDocument(format!("entry rate {} not in support", e.rate)))?;
            verify[idx * n + e.age as usize] = e.action == 1;
        }
        Ok(OraclePolicy { support: doc.support.clone(), max_age: doc.max_age, verify })
    }
}

/// Output of the exact solver.
#[derive(Debug, Clone)]
pub struct OracleSolution {
    pub policy: OraclePolicy,
    /// Long-run objective of the optimal policy.
    pub gain: f64,
    pub iterations: u64,
    /// Residual gain uncertainty at the final sweep.
    pub residual: f64,
    /// Per-state-action relative values, laid out as in the policy document.
    pub bias: Vec<f64>,
    /// Whether the optimal policy can reach the age cap from a fresh start
    /// (it must not; enlarge `max_age` if it does).
    pub cap_reachable: bool,
}

/// Solves the weighted verification MDP by damped relative value iteration.
pub fn solve_mdp_oracle(dist: &RateDistribution, alpha: f64, params: &OracleParams) -> Result<OracleSolution> {
    dist.validate()?;
    params.validate()?;
    if !alpha.is_finite() || alpha < 0.0 {
        return Err(Error::invalid("alpha", format!("must be >= 0, got {alpha}")));
    }
    let support = dist.support_probs();
    if support.is_empty() {
        return Err(Error::invalid("process", "rate support is empty"));
    }
    let rates: Vec<f64> = support.iter().map(|(r, _)| *r).collect();
    let probs: Vec<f64> = support.iter().map(|(_, p)| *p).collect();
    let n_ages = params.max_age as usize + 1;
    let n_rates = rates.len();
    let tau = params.damping;

    // h[rate_idx * n_ages + age], relative values.
    let mut h = vec![0.0f64; n_rates * n_ages];
    // Expectation over the next rate, per next age.
    let mut hbar = vec![0.0f64; n_ages];
    let mut bellman = vec![0.0f64; n_rates * n_ages];

    let mut iterations = 0;
    let mut residual = f64::INFINITY;

    while iterations < params.max_iterations {
        iterations += 1;
        for (age, hb) in hbar.iter_mut().enumerate() {
            *hb = (0..n_rates).map(|i| probs[i] * h[i * n_ages + age]).sum();
        }
        let verify_value = hbar[0];
        for i in 0..n_rates {
            for age in 0..n_ages {
                let next_age = (age + 1).min(params.max_age as usize);
                let transmit = rates[i] - alpha * next_age as f64 + hbar[next_age];
                bellman[i * n_ages + age] = transmit.max(verify_value);
            }
        }
        let mut min_d = f64::INFINITY;
        let mut max_d = f64::NEG_INFINITY;
        for s in 0..h.len() {
            let w = (1.0 - tau) * h[s] + tau * bellman[s];
            let d = w - h[s];
            min_d = min_d.min(d);
            max_d = max_d.max(d);
            h[s] = w;
        }
        let anchor = h[0];
        for v in h.iter_mut() {
            *v -= anchor;
        }
        residual = (max_d - min_d) / tau;
        if residual < params.tolerance {
            let gain = (max_d + min_d) / (2.0 * tau);
            return Ok(finish(gain, h, hbar, rates, probs, alpha, params, iterations, residual));
        }
    }
    Err(Error::NoConvergence { iterations, residual, tolerance: params.tolerance })
}

#[allow(clippy::too_many_arguments)]
fn finish(
    gain: f64,
    h: Vec<f64>,
    mut hbar: Vec<f64>,
    rates: Vec<f64>,
    probs: Vec<f64>,
    alpha: f64,
    params: &OracleParams,
    iterations: u64,
    residual: f64,
) -> OracleSolution {
    let n_ages = params.max_age as usize + 1;
    let n_rates = rates.len();
    for (age, hb) in hbar.iter_mut().enumerate() {
        *hb = (0..n_rates).map(|i| probs[i] * h[i * n_ages + age]).sum();
    }
    let verify_value = hbar[0];
    let mut verify = vec![false; n_rates * n_ages];
    let mut bias = vec![0.0f64; n_rates * n_ages * 2];
    for i in 0..n_rates {
        for age in 0..n_ages {
            let next_age = (age + 1).min(params.max_age as usize);
            let transmit = rates[i] - alpha * next_age as f64 + hbar[next_age];
            let s = i * n_ages + age;
            bias[s * 2] = transmit;
            bias[s * 2 + 1] = verify_value;
            // ties go to transmit, mirroring the greedy table
            verify[s] = verify_value > transmit;
        }
    }
    let policy = OraclePolicy { support: rates, max_age: params.max_age, verify };
    let cap_reachable = policy.max_reachable_age().is_none();
    OracleSolution { policy, gain, iterations, residual, bias, cap_reachable }
}
