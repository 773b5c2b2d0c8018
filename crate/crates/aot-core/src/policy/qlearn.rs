//! Tabular Q-learning over (rate, age) states.
//!
//! The agent observes the current slot's rate and the age after the previous
//! slot, picks verify/transmit epsilon-greedily, and updates
//!
//! ```text
//! Q(s, a) <- (1 - eta) * Q(s, a) + eta * (r + gamma * max_a' Q(s', a'))
//! ```
//!
//! The relaxation step `eta` is needed for stochastic rates; with `eta = 1`
//! and a constant rate the update is the plain one-step Bellman backup.
//! Ages are clamped to `max_age` in both the dynamics and the table keys;
//! runs report whether the clamp was ever hit so callers can verify the cap
//! was irrelevant.

use std::collections::HashMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::age::SlotIndicator;
use crate::error::{Error, Result};
use crate::rng;
use crate::service::ServiceProcess;

use super::table::{PolicyDocument, StateEntry, DOCUMENT_VERSION};

/// Hyper-parameters of the training loop.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields, rename_all = "kebab-case")]
pub struct QLearnParams {
    /// Initial exploration probability.
    pub epsilon0: f64,
    /// Slots between exploration-probability reductions.
    pub epsilon_decay_period: u64,
    /// Multiplicative reduction applied every decay period.
    pub epsilon_decay_factor: f64,
    /// Exploration never drops below this.
    pub epsilon_floor: f64,
    /// Discount factor of the learning target.
    pub gamma: f64,
    /// Relaxation step `eta`.
    pub learning_rate: f64,
    /// Age cap `N`; table states clamp the age to `0..=N`.
    pub max_age: u64,
    /// Hard cap on training slots (training may stop earlier on
    /// convergence).
    pub training_slots: u64,
}

impl Default for QLearnParams {
    fn default() -> Self {
        QLearnParams {
            epsilon0: 1.0,
            epsilon_decay_period: 1000,
            epsilon_decay_factor: 0.95,
            epsilon_floor: 0.01,
            gamma: 0.95,
            learning_rate: 0.1,
            max_age: 50,
            training_slots: 200_000,
        }
    }
}

impl QLearnParams {
    pub fn validate(&self) -> Result<()> {
        let in_unit = |field, v: f64, lo_open: bool| -> Result<()> {
            let ok = v.is_finite() && v <= 1.0 && if lo_open { v > 0.0 } else { v >= 0.0 };
            if ok {
                Ok(())
            } else {
                Err(Error::invalid(field, format!("must lie in {}0, 1], got {v}", if lo_open { "(" } else { "[" })))
            }
        };
        in_unit("epsilon0", self.epsilon0, false)?;
        in_unit("epsilon_decay_factor", self.epsilon_decay_factor, true)?;
        in_unit("epsilon_floor", self.epsilon_floor, false)?;
        in_unit("learning_rate", self.learning_rate, true)?;
        if !self.gamma.is_finite() || !(0.0..1.0).contains(&self.gamma) {
            return Err(Error::invalid("gamma", format!("must lie in [0, 1), got {}", self.gamma)));
        }
        if self.epsilon_decay_period == 0 {
            return Err(Error::invalid("epsilon_decay_period", "must be positive"));
        }
        if self.max_age == 0 {
            return Err(Error::invalid("max_age", "must be positive"));
        }
        if self.training_slots == 0 {
            return Err(Error::invalid("training_slots", "must be positive"));
        }
        Ok(())
    }

    /// Age cap comfortably beyond any optimal verification age:
    /// `10 * sqrt(2 * max_rate / alpha)`.
    pub fn default_max_age(max_rate: f64, alpha: f64) -> Result<u64> {
        if !(alpha.is_finite() && alpha > 0.0 && max_rate.is_finite() && max_rate > 0.0) {
            return Err(Error::invalid(
                "alpha",
                format!("default age cap needs positive max_rate and alpha, got {max_rate} and {alpha}"),
            ));
        }
        Ok((10.0 * (2.0 * max_rate / alpha).sqrt()).ceil() as u64)
    }
}

/// Training stops early once the largest absolute table update over a
/// sliding window of `10 * |S|` steps falls below this.
const CONVERGENCE_TOL: f64 = 1e-6;

/// Learned action values keyed by (exact rate, clamped age).
#[derive(Debug, Clone, PartialEq)]
pub struct QTable {
    support: Vec<f64>,
    max_age: u64,
    // values[(rate index, age)] = [Q(transmit), Q(verify)]
    values: HashMap<(usize, u64), [f64; 2]>,
    cap_hits: u64,
}

impl QTable {
    fn new(support: Vec<f64>, max_age: u64) -> Self {
        QTable { support, max_age, values: HashMap::new(), cap_hits: 0 }
    }

    pub fn max_age(&self) -> u64 {
        self.max_age
    }

    pub fn support(&self) -> &[f64] {
        &self.support
    }

    /// Whether training ever clamped an age at the cap.
    pub fn cap_hit(&self) -> bool {
        self.cap_hits > 0
    }

    pub fn rate_index(&self, rate: f64) -> Option<usize> {
        self.support.iter().position(|r| r.to_bits() == rate.to_bits())
    }

    /// Action values for a state, if it was ever visited.
    pub fn action_values(&self, rate: f64, age: u64) -> Option<[f64; 2]> {
        let idx = self.rate_index(rate)?;
        self.values.get(&(idx, age.min(self.max_age))).copied()
    }

    /// Greedy action for a state plus a coverage flag; unvisited states fall
    /// back to transmit (`covered = false`). Ties also go to transmit.
    pub fn greedy_action(&self, rate: f64, age: u64) -> (SlotIndicator, bool) {
        match self.action_values(rate, age) {
            Some([q_transmit, q_verify]) => {
                let action = if q_verify > q_transmit {
                    SlotIndicator::Verify
                } else {
                    SlotIndicator::Transmit
                };
                (action, true)
            }
            None => (SlotIndicator::Transmit, false),
        }
    }

    /// Number of distinct states visited during training.
    pub fn visited_states(&self) -> usize {
        self.values.len()
    }

    fn entry(&mut self, key: (usize, u64)) -> &mut [f64; 2] {
        self.values.entry(key).or_insert([0.0, 0.0])
    }

    fn max_value(&self, key: (usize, u64)) -> f64 {
        self.values
            .get(&key)
            .map(|q| q[0].max(q[1]))
            .unwrap_or(0.0)
    }

    pub fn to_document(&self) -> PolicyDocument {
        let mut entries: Vec<StateEntry> = self
            .values
            .iter()
            .map(|(&(idx, age), q)| StateEntry {
                rate: self.support[idx],
                age,
                q_transmit: q[0],
                q_verify: q[1],
                action: self.greedy_action(self.support[idx], age).0.as_bit(),
            })
            .collect();
        entries.sort_by(|a, b| a.rate.partial_cmp(&b.rate).unwrap().then(a.age.cmp(&b.age)));
        PolicyDocument {
            version: DOCUMENT_VERSION,
            kind: "q-table".to_string(),
            max_age: self.max_age,
            support: self.support.clone(),
            gain: None,
            entries,
        }
    }

    pub fn from_document(doc: &PolicyDocument) -> Result<Self> {
        doc.check_version("q-table")?;
        let mut table = QTable::new(doc.support.clone(), doc.max_age);
        for e in &doc.entries {
            let idx = table
                .rate_index(e.rate)
                .ok_or_else(|| Error::PolicyDocument(format!("entry rate {} not in support", e.rate)))?;
            table.values.insert((idx, e.age), [e.q_transmit, e.q_verify]);
        }
        Ok(table)
    }
}

/// Runs epsilon-greedy Q-learning against a service process.
///
/// The process supplies the rate sequence; `exploration_seed` drives the
/// action draws on its own stream. Only finite-support rate processes are
/// trainable (the table would otherwise be infinite).
pub fn train_qlearning(
    process: &mut ServiceProcess,
    alpha: f64,
    params: &QLearnParams,
    exploration_seed: u64,
) -> Result<QTable> {
    params.validate()?;
    if !alpha.is_finite() || alpha < 0.0 {
        return Err(Error::invalid("alpha", format!("must be >= 0, got {alpha}")));
    }
    let support = process.distribution().support();
    if support.is_empty() {
        return Err(Error::invalid("process", "rate support is empty; only finite-support processes are trainable"));
    }

    let mut table = QTable::new(support.clone(), params.max_age);
    let mut explore = rng::stream(exploration_seed, rng::STREAM_EXPLORATION);
    let n = params.max_age;
    let state_count = support.len() * (n as usize + 1);
    let window_len = 10 * state_count;
    let mut window: Vec<f64> = Vec::with_capacity(window_len);
    let mut window_pos = 0usize;

    let mut epsilon = params.epsilon0;
    let mut age: u64 = 0;
    let mut rate = process.sample_rate(1);

    for t in 1..=params.training_slots {
        let rate_idx = table.rate_index(rate).expect("rate drawn from support");
        let state = (rate_idx, age.min(n));

        let action = if explore.gen::<f64>() <= epsilon {
            if explore.gen::<bool>() {
                SlotIndicator::Verify
            } else {
                SlotIndicator::Transmit
            }
        } else {
            table.greedy_action(rate, state.1).0
        };

        let next_age = match action {
            SlotIndicator::Verify => 0,
            SlotIndicator::Transmit => {
                if age + 1 > n {
                    table.cap_hits += 1;
                    n
                } else {
                    age + 1
                }
            }
        };
        let reward = match action {
            SlotIndicator::Verify => 0.0,
            SlotIndicator::Transmit => rate - alpha * next_age as f64,
        };

        let next_rate = process.sample_rate(t + 1);
        let next_idx = table.rate_index(next_rate).expect("rate drawn from support");
        let target = reward + params.gamma * table.max_value((next_idx, next_age));

        let q = table.entry(state);
        let a = action.as_bit() as usize;
        let update = params.learning_rate * (target - q[a]);
        q[a] += update;

        if window.len() < window_len {
            window.push(update.abs());
        } else {
            window[window_pos] = update.abs();
            window_pos = (window_pos + 1) % window_len;
        }
        if window.len() == window_len && window.iter().all(|u| *u < CONVERGENCE_TOL) {
            break;
        }

        if t % params.epsilon_decay_period == 0 {
            epsilon = (epsilon * params.epsilon_decay_factor).max(params.epsilon_floor);
        }
        age = next_age;
        rate = next_rate;
    }
    Ok(table)
}

/// Stateful wrapper that plays a trained table greedily and counts how often
/// it had to fall back (unvisited state) or clamp an age.
#[derive(Debug, Clone)]
pub struct GreedyPolicy {
    table: QTable,
    fallback_hits: u64,
    clamp_hits: u64,
}

impl GreedyPolicy {
    pub fn new(table: QTable) -> Self {
        GreedyPolicy { table, fallback_hits: 0, clamp_hits: 0 }
    }

    pub fn decide(&mut self, rate: f64, prev_age: u64) -> SlotIndicator {
        if prev_age > self.table.max_age() {
            self.clamp_hits += 1;
        }
        let (action, covered) = self.table.greedy_action(rate, prev_age);
        if !covered {
            self.fallback_hits += 1;
        }
        action
    }

    pub fn table(&self) -> &QTable {
        &self.table
    }

    /// Times an unvisited state forced the transmit fallback.
    pub fn fallback_hits(&self) -> u64 {
        self.fallback_hits
    }

    /// Times an observed age exceeded the table's cap.
    pub fn clamp_hits(&self) -> u64 {
        self.clamp_hits
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::service::RateDistribution;

    fn constant7() -> ServiceProcess {
        ServiceProcess::with_stream(RateDistribution::Constant { rate: 7.0 }, 7, rng::STREAM_TRAINING_SERVICE).unwrap()
    }

    #[test]
    fn constant_training_learns_the_period_four_cycle() {
        let params = QLearnParams {
            learning_rate: 1.0, // exact backups on deterministic dynamics
            max_age: 50,
            training_slots: 200_000,
            ..QLearnParams::default()
        };
        let table = train_qlearning(&mut constant7(), 1.0, &params, 99).unwrap();
        // Greedy behaviour: transmit at ages 0..=2, verify at age 3, i.e.
        // verification every 4th slot, matching the closed-form period.
        for age in 0..3 {
            assert_eq!(table.greedy_action(7.0, age).0, SlotIndicator::Transmit, "age {age}");
        }
        assert_eq!(table.greedy_action(7.0, 3).0, SlotIndicator::Verify);
        assert!(!table.cap_hit());
    }

    #[test]
    fn zero_alpha_never_verifies() {
        // With no age penalty the transmit/verify margin is only the one
        // forfeited reward, regardless of gamma. A short horizon keeps the
        // value scale small so that margin clears the bootstrap noise.
        let params = QLearnParams {
            max_age: 10,
            training_slots: 400_000,
            gamma: 0.5,
            learning_rate: 0.02,
            epsilon_floor: 0.1,
            ..QLearnParams::default()
        };
        let mut proc = ServiceProcess::with_stream(
            RateDistribution::TwoPoint { low: 1.0, high: 10.0, p_high: 0.5 },
            3,
            rng::STREAM_TRAINING_SERVICE,
        )
        .unwrap();
        let table = train_qlearning(&mut proc, 0.0, &params, 17).unwrap();
        for &rate in table.support() {
            for age in 0..=10 {
                if let Some(q) = table.action_values(rate, age) {
                    assert_eq!(
                        table.greedy_action(rate, age).0,
                        SlotIndicator::Transmit,
                        "rate {rate} age {age} q {q:?}"
                    );
                }
            }
        }
    }

    #[test]
    fn greedy_ties_and_fallbacks_go_to_transmit() {
        let mut table = QTable::new(vec![7.0], 10);
        table.values.insert((0, 0), [5.0, 3.0]);
        table.values.insert((0, 1), [2.0, 2.0]);
        assert_eq!(table.greedy_action(7.0, 0), (SlotIndicator::Transmit, true));
        assert_eq!(table.greedy_action(7.0, 1), (SlotIndicator::Transmit, true));
        // unvisited
        assert_eq!(table.greedy_action(7.0, 5), (SlotIndicator::Transmit, false));
        let mut greedy = GreedyPolicy::new(table);
        greedy.decide(7.0, 5);
        assert_eq!(greedy.fallback_hits(), 1);
        // age above the cap evaluates at the clamped key
        greedy.decide(7.0, 25);
        assert_eq!(greedy.clamp_hits(), 1);
    }

    #[test]
    fn document_round_trip() {
        let params = QLearnParams { training_slots: 20_000, ..QLearnParams::default() };
        let table = train_qlearning(&mut constant7(), 1.0, &params, 5).unwrap();
        let doc = table.to_document();
        let json = serde_json::to_string(&doc).unwrap();
        let back = QTable::from_document(&serde_json::from_str(&json).unwrap()).unwrap();
        assert_eq!(table.support(), back.support());
        assert_eq!(table.max_age(), back.max_age());
        for (&k, v) in &table.values {
            assert_eq!(back.values.get(&k), Some(v));
        }
    }

    #[test]
    fn bad_params_are_rejected() {
        let mut p = QLearnParams::default();
        p.gamma = 1.0;
        assert!(p.validate().is_err());
        let mut p = QLearnParams::default();
        p.learning_rate = 0.0;
        assert!(p.validate().is_err());
        let mut p = QLearnParams::default();
        p.training_slots = 0;
        assert!(p.validate().is_err());
    }

    #[test]
    fn default_age_cap_scales_with_rate_and_alpha() {
        assert_eq!(QLearnParams::default_max_age(7.0, 1.0).unwrap(), 38);
        assert!(QLearnParams::default_max_age(7.0, 0.0).is_err());
    }
}
