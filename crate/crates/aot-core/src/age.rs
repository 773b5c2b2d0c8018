//! The discrete-time age-of-trust process.
//!
//! Time is slotted. In every slot the link either verifies the peer's
//! identity (which resets the age of trust to zero and suspends data
//! service for that slot) or transmits (which lets the age grow by one).
//! [`step_aot`] is that recursion; [`AotTrace`] is a realized sample path.

use serde::{Deserialize, Serialize};

/// What a slot was spent on: regular data service or identity verification.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SlotIndicator {
    /// Regular data transmission.
    Transmit,
    /// Identity verification; data service is suspended for the slot.
    Verify,
}

impl SlotIndicator {
    /// 1 for verification slots, 0 otherwise.
    pub fn as_bit(self) -> u8 {
        match self {
            SlotIndicator::Transmit => 0,
            SlotIndicator::Verify => 1,
        }
    }

    pub fn from_bit(bit: u8) -> Option<Self> {
        match bit {
            0 => Some(SlotIndicator::Transmit),
            1 => Some(SlotIndicator::Verify),
            _ => None,
        }
    }

    pub fn is_verify(self) -> bool {
        self == SlotIndicator::Verify
    }
}

/// Age of trust: whole slots elapsed since the last successful verification.
///
/// A fresh link starts fully trusted (age zero).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Default, Serialize, Deserialize)]
pub struct AotState {
    age: u64,
}

impl AotState {
    pub fn new(age: u64) -> Self {
        AotState { age }
    }

    pub fn age(self) -> u64 {
        self.age
    }
}

/// Advances the age of trust by one slot: verification resets it to zero,
/// anything else grows it by one.
pub fn step_aot(prev: AotState, indicator: SlotIndicator) -> AotState {
    match indicator {
        SlotIndicator::Verify => AotState::new(0),
        SlotIndicator::Transmit => AotState::new(prev.age + 1),
    }
}

/// One slot of a realized run: its index (1-based), the service rate that
/// was available, what the slot was spent on, and the age after the slot.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlotRecord {
    pub slot: u64,
    pub rate: f64,
    pub indicator: SlotIndicator,
    pub age: u64,
}

/// A realized age-of-trust sample path over a finite horizon.
///
/// Construction always replays the age recursion, so a trace is internally
/// consistent by construction; [`AotTrace::is_consistent`] re-checks it.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct AotTrace {
    records: Vec<SlotRecord>,
}

impl AotTrace {
    /// Builds a trace by replaying the age recursion over per-slot
    /// (rate, indicator) pairs, starting from age zero.
    pub fn from_steps<I>(steps: I) -> Self
    where
        I: IntoIterator<Item = (f64, SlotIndicator)>,
    {
        let mut state = AotState::default();
        let records = steps
            .into_iter()
            .enumerate()
            .map(|(i, (rate, indicator))| {
                state = step_aot(state, indicator);
                SlotRecord {
                    slot: i as u64 + 1,
                    rate,
                    indicator,
                    age: state.age(),
                }
            })
            .collect();
        AotTrace { records }
    }

    pub fn records(&self) -> &[SlotRecord] {
        &self.records
    }

    /// Number of slots in the trace.
    pub fn horizon(&self) -> u64 {
        self.records.len() as u64
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Replays the recursion over the stored indicators and checks that
    /// every stored age matches.
    pub fn is_consistent(&self) -> bool {
        let mut state = AotState::default();
        self.records.iter().enumerate().all(|(i, rec)| {
            state = step_aot(state, rec.indicator);
            rec.slot == i as u64 + 1 && rec.age == state.age()
        })
    }
}
