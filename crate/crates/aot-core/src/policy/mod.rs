//! Verification decision rules.
//!
//! Everything that decides when to spend a slot on identity verification
//! lives here: the closed-form periodic schedules, the rate-aware improved
//! variant, tabular Q-learning, the exact average-reward solver used as
//! ground truth, and the Markov-chain analysis of threshold policies.

mod markov;
mod oracle;
mod periodic;
mod qlearn;
mod table;

pub use markov::{stationary_distribution, threshold_objective, StationaryDistribution};
pub use oracle::{solve_mdp_oracle, OracleParams, OraclePolicy, OracleSolution};
pub use periodic::{
    decide_improved_periodic, decide_periodic, optimal_period_constant, optimal_period_mean,
    periodic_objective,
};
pub use qlearn::{train_qlearning, GreedyPolicy, QLearnParams, QTable};
pub use table::{PolicyDocument, StateEntry, DOCUMENT_VERSION};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A verification policy, as configured for a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum PolicyKind {
    /// Verify every `lambda`-th slot.
    Periodic { lambda: u64 },
    /// Periodic plus an immediate verification whenever transmitting would
    /// score a non-positive reward.
    ImprovedPeriodic { lambda: u64, alpha: f64 },
    /// Train a Q-table against the run's process, then play it greedily.
    QLearning { params: QLearnParams },
    /// Verify exactly when the age reaches `max_age` (equivalent to a
    /// period of `max_age + 1`).
    Threshold { max_age: u64 },
    /// Solve the exact average-reward problem, then play its policy.
    Oracle { params: OracleParams },
    /// Never verify; the age grows for the whole run. This is the limiting
    /// policy of every family as the age weight goes to zero.
    NeverVerify,
}

impl PolicyKind {
    /// Whether the policy needs the instantaneous service rate as an input.
    pub fn requires_rate(&self) -> bool {
        matches!(
            self,
            PolicyKind::ImprovedPeriodic { .. } | PolicyKind::QLearning { .. } | PolicyKind::Oracle { .. }
        )
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            PolicyKind::Periodic { lambda } => {
                if *lambda == 0 {
                    return Err(Error::invalid("lambda", "must be >= 1"));
                }
            }
            PolicyKind::ImprovedPeriodic { lambda, alpha } => {
                if *lambda == 0 {
                    return Err(Error::invalid("lambda", "must be >= 1"));
                }
                if !alpha.is_finite() || *alpha < 0.0 {
                    return Err(Error::invalid("alpha", format!("must be >= 0, got {alpha}")));
                }
            }
            PolicyKind::QLearning { params } => params.validate()?,
            PolicyKind::Oracle { params } => params.validate()?,
            PolicyKind::Threshold { .. } | PolicyKind::NeverVerify => {}
        }
        Ok(())
    }

    /// Short human-readable form used in output tables and manifests.
    pub fn descriptor(&self) -> String {
        match self {
            PolicyKind::Periodic { lambda } => format!("periodic(lambda={lambda})"),
            PolicyKind::ImprovedPeriodic { lambda, alpha } => {
                format!("improved-periodic(lambda={lambda},alpha={alpha})")
            }
            PolicyKind::QLearning { params } => format!(
                "q-greedy(gamma={},eta={},N={},slots={})",
                params.gamma, params.learning_rate, params.max_age, params.training_slots
            ),
            PolicyKind::Threshold { max_age } => format!("threshold(age={max_age})"),
            PolicyKind::Oracle { params } => format!("oracle(N={})", params.max_age),
            PolicyKind::NeverVerify => "never-verify".to_string(),
        }
    }
}
