//! Per-slot service-rate generation.
//!
//! Three rate models cover the regimes the policies distinguish: a constant
//! rate, a two-point distribution, and a general finite categorical
//! distribution. Random rates are i.i.d. across slots, and a draw depends
//! only on `(seed, slot)` — the generator is addressed by slot index rather
//! than consumed sequentially, so two processes with equal seeds agree slot
//! by slot no matter who sampled what in between.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;

const PROB_SUM_TOL: f64 = 1e-12;

/// The distribution of the per-slot service rate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum RateDistribution {
    /// The same rate every slot.
    Constant { rate: f64 },
    /// `high` with probability `p_high`, otherwise `low`.
    TwoPoint { low: f64, high: f64, p_high: f64 },
    /// An arbitrary finite distribution over positive rates.
    Categorical { values: Vec<f64>, probs: Vec<f64> },
}

impl RateDistribution {
    pub fn validate(&self) -> Result<()> {
        let positive = |field, v: f64| -> Result<()> {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::invalid(field, format!("rates must be positive and finite, got {v}")))
            }
        };
        match self {
            RateDistribution::Constant { rate } => positive("rate", *rate),
            RateDistribution::TwoPoint { low, high, p_high } => {
                positive("low", *low)?;
                positive("high", *high)?;
                if *low > *high {
                    return Err(Error::invalid("low", format!("low ({low}) must not exceed high ({high})")));
                }
                if !(0.0..=1.0).contains(p_high) {
                    return Err(Error::invalid("p_high", format!("must lie in [0, 1], got {p_high}")));
                }
                Ok(())
            }
            RateDistribution::Categorical { values, probs } => {
                if values.is_empty() || values.len() != probs.len() {
                    return Err(Error::invalid(
                        "values",
                        format!("values ({}) and probs ({}) must be equal-length and nonempty", values.len(), probs.len()),
                    ));
                }
                for v in values {
                    positive("values", *v)?;
                }
                let mut sum = 0.0;
                for p in probs {
                    if !(0.0..=1.0).contains(p) {
                        return Err(Error::invalid("probs", format!("each probability must lie in [0, 1], got {p}")));
                    }
                    sum += p;
                }
                if (sum - 1.0).abs() > PROB_SUM_TOL {
                    return Err(Error::invalid("probs", format!("must sum to 1 within {PROB_SUM_TOL:e}, got {sum}")));
                }
                Ok(())
            }
        }
    }

    /// The analytic expectation of the per-slot rate.
    pub fn mean(&self) -> f64 {
        match self {
            RateDistribution::Constant { rate } => *rate,
            RateDistribution::TwoPoint { low, high, p_high } => p_high * high + (1.0 - p_high) * low,
            RateDistribution::Categorical { values, probs } => {
                values.iter().zip(probs).map(|(v, p)| v * p).sum()
            }
        }
    }

    /// Largest rate the distribution can produce.
    pub fn max_rate(&self) -> f64 {
        match self {
            RateDistribution::Constant { rate } => *rate,
            RateDistribution::TwoPoint { high, .. } => *high,
            RateDistribution::Categorical { values, .. } => {
                values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
            }
        }
    }

    /// Distinct support values, sorted ascending, zero-probability atoms
    /// removed. These are the exact keys learning tables are indexed by.
    pub fn support(&self) -> Vec<f64> {
        let mut vals: Vec<f64> = match self {
            RateDistribution::Constant { rate } => vec![*rate],
            RateDistribution::TwoPoint { low, high, p_high } => {
                let mut v = Vec::new();
                if *p_high < 1.0 {
                    v.push(*low);
                }
                if *p_high > 0.0 {
                    v.push(*high);
                }
                v
            }
            RateDistribution::Categorical { values, probs } => values
                .iter()
                .zip(probs)
                .filter(|(_, p)| **p > 0.0)
                .map(|(v, _)| *v)
                .collect(),
        };
        vals.sort_by(|a, b| a.partial_cmp(b).unwrap());
        vals.dedup();
        vals
    }

    /// Support values paired with their probabilities (duplicates merged).
    pub fn support_probs(&self) -> Vec<(f64, f64)> {
        let support = self.support();
        support
            .iter()
            .map(|&v| {
                let p = match self {
                    RateDistribution::Constant { .. } => 1.0,
                    RateDistribution::TwoPoint { low, high, p_high } => {
                        let mut p = 0.0;
                        if v == *low {
                            p += 1.0 - p_high;
                        }
                        if v == *high {
                            p += p_high;
                        }
                        p
                    }
                    RateDistribution::Categorical { values, probs } => values
                        .iter()
                        .zip(probs)
                        .filter(|(x, _)| **x == v)
                        .map(|(_, p)| *p)
                        .sum(),
                };
                (v, p)
            })
            .collect()
    }

    /// Maps a uniform draw to a rate.
    fn quantile(&self, u: f64) -> f64 {
        match self {
            RateDistribution::Constant { rate } => *rate,
            RateDistribution::TwoPoint { low, high, p_high } => {
                if u < *p_high {
                    *high
                } else {
                    *low
                }
            }
            RateDistribution::Categorical { values, probs } => {
                let mut acc = 0.0;
                for (v, p) in values.iter().zip(probs) {
                    acc += p;
                    if u < acc {
                        return *v;
                    }
                }
                *values.last().expect("validated nonempty")
            }
        }
    }
}

/// A rate distribution bound to a seed, ready to be sampled slot by slot.
#[derive(Debug, Clone)]
pub struct ServiceProcess {
    dist: RateDistribution,
    seed: u64,
    rng: ChaCha8Rng,
}

// One f64 draw consumes two 32-bit generator words.
const WORDS_PER_SLOT: u128 = 2;

impl ServiceProcess {
    pub fn new(dist: RateDistribution, seed: u64) -> Result<Self> {
        Self::with_stream(dist, seed, rng::STREAM_SERVICE)
    }

    /// As [`ServiceProcess::new`] but draws from an explicit stream id, so
    /// e.g. training and evaluation see independent rate sequences from the
    /// same run seed.
    pub fn with_stream(dist: RateDistribution, seed: u64, stream_id: u64) -> Result<Self> {
        dist.validate()?;
        Ok(ServiceProcess {
            dist,
            seed,
            rng: rng::stream(seed, stream_id),
        })
    }

    /// The rate available in slot `t` (1-based). Deterministic in
    /// `(seed, t)`: resampling any slot in any order returns the same value.
    pub fn sample_rate(&mut self, t: u64) -> f64 {
        match &self.dist {
            RateDistribution::Constant { rate } => *rate,
            _ => {
                self.rng.set_word_pos(u128::from(t) * WORDS_PER_SLOT);
                let u: f64 = self.rng.gen();
                self.dist.quantile(u)
            }
        }
    }

    /// Analytic mean rate (never estimated by sampling).
    pub fn mean_rate(&self) -> f64 {
        self.dist.mean()
    }

    pub fn distribution(&self) -> &RateDistribution {
        &self.dist
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }
}
