//! Trust-enhanced frame-slotted ALOHA.
//!
//! `K` sensors share a channel in frames of `m` slots; an active sensor
//! picks one slot uniformly and succeeds iff it is the sole occupant. The
//! first `m_t` slots of each frame are trust-enhanced: a success there also
//! verifies the sensor's identity and resets its age of trust at the end of
//! the frame. Trust-enhanced slots are longer by a factor `beta > 1`, which
//! is where the throughput/age trade-off comes from.
//!
//! Two average-age formulas ship side by side. The optimiser maximises the
//! half-peak form `1/(2 P_t)` (half the mean peak age), because the
//! closed-form trust-slot optimum is derived from it. The renewal
//! time-average of the frame-indexed sawtooth is `(1 - P_t)/P_t` — for
//! geometric cycles of mean `1/P_t` the two differ, and the simulator is
//! validated against the renewal value. Both are reported wherever ages are
//! emitted.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;

/// Protocol parameters: `sensors` = K, `activity` = per-frame transmit
/// probability, `slots` = m slots per frame of which `trust_slots` = m_t are
/// trust-enhanced, `beta` = trust/standard slot duration ratio, and
/// `slot_duration` = standard slot duration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct AlohaConfig {
    pub sensors: u64,
    pub activity: f64,
    pub slots: u64,
    pub trust_slots: u64,
    pub beta: f64,
    #[serde(default = "default_slot_duration")]
    pub slot_duration: f64,
}

fn default_slot_duration() -> f64 {
    1.0
}

impl AlohaConfig {
    pub fn new(sensors: u64, activity: f64, slots: u64, trust_slots: u64, beta: f64) -> Result<Self> {
        let cfg = AlohaConfig { sensors, activity, slots, trust_slots, beta, slot_duration: 1.0 };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.sensors == 0 {
            return Err(Error::invalid("sensors", "must be >= 1"));
        }
        if !(self.activity > 0.0 && self.activity <= 1.0) {
            return Err(Error::invalid("activity", format!("must lie in (0, 1], got {}", self.activity)));
        }
        if self.slots == 0 {
            return Err(Error::invalid("slots", "must be >= 1"));
        }
        if self.trust_slots > self.slots {
            return Err(Error::invalid(
                "trust_slots",
                format!("must not exceed slots ({}), got {}", self.slots, self.trust_slots),
            ));
        }
        if !(self.beta.is_finite() && self.beta > 1.0) {
            return Err(Error::invalid("beta", format!("must be > 1, got {}", self.beta)));
        }
        if !(self.slot_duration.is_finite() && self.slot_duration > 0.0) {
            return Err(Error::invalid("slot_duration", format!("must be positive, got {}", self.slot_duration)));
        }
        Ok(())
    }
}

/// Probability that a given sensor transmits successfully in a given frame:
/// `activity * (1 - activity/slots)^(sensors - 1)`.
pub fn success_probability(cfg: &AlohaConfig) -> f64 {
    cfg.activity * (1.0 - cfg.activity / cfg.slots as f64).powi(cfg.sensors as i32 - 1)
}

/// Probability that a given sensor gets verified in a given frame: the
/// success probability times the fraction of trust-enhanced slots.
pub fn verification_probability(cfg: &AlohaConfig) -> f64 {
    cfg.trust_slots as f64 / cfg.slots as f64 * success_probability(cfg)
}

/// Wall-clock duration of one frame.
pub fn frame_duration(cfg: &AlohaConfig) -> f64 {
    let mt = cfg.trust_slots as f64;
    let m = cfg.slots as f64;
    (mt * cfg.beta + (m - mt)) * cfg.slot_duration
}

/// Half the mean peak age, `1/(2 P_t)`, in frames. This is the form the
/// trust-slot optimiser maximises against.
pub fn average_aot_half_peak(cfg: &AlohaConfig) -> Result<f64> {
    let p_t = verification_probability(cfg);
    if p_t <= 0.0 {
        return Err(Error::UnboundedAge);
    }
    Ok(1.0 / (2.0 * p_t))
}

/// Exact long-run time average of the per-frame age, `(1 - P_t)/P_t`:
/// a cycle of geometric length `N` spends ages `0, 1, .., N-1`, so the
/// average is `E[N(N-1)/2] / E[N]`. The simulator is validated against
/// this value.
pub fn average_aot_renewal(cfg: &AlohaConfig) -> Result<f64> {
    let p_t = verification_probability(cfg);
    if p_t <= 0.0 {
        return Err(Error::UnboundedAge);
    }
    Ok((1.0 - p_t) / p_t)
}

/// Successful packets per unit time: `sensors * P_s / frame_duration`.
pub fn throughput(cfg: &AlohaConfig) -> f64 {
    cfg.sensors as f64 * success_probability(cfg) / frame_duration(cfg)
}

/// The weighted frame objective `throughput - alpha * half_peak_age`,
/// written out so the two routes (this closed form versus assembling the
/// component quantities) can be checked against each other:
///
/// ```text
/// sensors * P_s / (T_s * (m + (beta-1) * m_t)) - alpha * m / (2 * m_t * P_s)
/// ```
pub fn weighted_objective(cfg: &AlohaConfig, alpha: f64) -> Result<f64> {
    if cfg.trust_slots == 0 {
        return Err(Error::UnboundedAge);
    }
    if !alpha.is_finite() || alpha < 0.0 {
        return Err(Error::invalid("alpha", format!("must be >= 0, got {alpha}")));
    }
    let p_s = success_probability(cfg);
    let m = cfg.slots as f64;
    let mt = cfg.trust_slots as f64;
    let k = cfg.sensors as f64;
    Ok(k * p_s / (cfg.slot_duration * (m + (cfg.beta - 1.0) * mt)) - alpha * m / (2.0 * mt * p_s))
}

/// Everything the analytics know about a configuration. Age and objective
/// fields are `None` when no trust-enhanced slots exist (ages diverge).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlohaAnalytics {
    pub success_prob: f64,
    pub verification_prob: f64,
    pub frame_duration: f64,
    pub avg_aot_half_peak: Option<f64>,
    pub avg_aot_renewal: Option<f64>,
    pub throughput: f64,
    pub weighted_objective: Option<f64>,
}

pub fn analytics(cfg: &AlohaConfig, alpha: f64) -> Result<AlohaAnalytics> {
    cfg.validate()?;
    let has_trust = cfg.trust_slots > 0;
    Ok(AlohaAnalytics {
        success_prob: success_probability(cfg),
        verification_prob: verification_probability(cfg),
        frame_duration: frame_duration(cfg),
        avg_aot_half_peak: has_trust.then(|| average_aot_half_peak(cfg)).transpose()?,
        avg_aot_renewal: has_trust.then(|| average_aot_renewal(cfg)).transpose()?,
        throughput: throughput(cfg),
        weighted_objective: has_trust.then(|| weighted_objective(cfg, alpha)).transpose()?,
    })
}

/// Frame-shape parameters that stay fixed while slot counts are optimised.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct AlohaBase {
    pub sensors: u64,
    pub activity: f64,
    pub beta: f64,
    #[serde(default = "default_slot_duration")]
    pub slot_duration: f64,
}

impl AlohaBase {
    pub fn with_frame(&self, slots: u64, trust_slots: u64) -> Result<AlohaConfig> {
        let cfg = AlohaConfig {
            sensors: self.sensors,
            activity: self.activity,
            slots,
            trust_slots,
            beta: self.beta,
            slot_duration: self.slot_duration,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Closed-form optimal number of trust-enhanced slots for a given frame
/// length:
///
/// ```text
/// m_t = m * sqrt(alpha * m) / (sqrt(2 K (beta-1)) * P_s - sqrt(alpha * m) * (beta-1))
/// ```
///
/// rounded to whichever of its floor/ceiling (clamped to `[1, m]`) scores
/// the higher objective; ties go to the smaller count. Errors when the
/// denominator is non-positive (alpha too large for the closed form) —
/// callers fall back to [`best_trust_slots_scan`].
pub fn optimal_trust_slots(base: &AlohaBase, slots: u64, alpha: f64) -> Result<u64> {
    let probe = base.with_frame(slots, 0)?;
    if !(alpha.is_finite() && alpha > 0.0) {
        return Err(Error::invalid("alpha", format!("must be positive, got {alpha}")));
    }
    let p_s = success_probability(&probe);
    let m = slots as f64;
    let k = base.sensors as f64;
    let root_alpha_m = (alpha * m).sqrt();
    let denominator = (2.0 * k * (base.beta - 1.0)).sqrt() * p_s - root_alpha_m * (base.beta - 1.0);
    if denominator <= 0.0 {
        return Err(Error::ClosedFormUndefined { denominator });
    }
    let continuous = m * root_alpha_m / denominator;
    let clamp = |v: f64| -> u64 { (v.max(1.0).min(m)) as u64 };
    let lo = clamp(continuous.floor());
    let hi = clamp(continuous.ceil());
    let mut best: Option<(f64, u64)> = None;
    for mt in [lo, hi] {
        let value = weighted_objective(&base.with_frame(slots, mt)?, alpha)?;
        let better = match best {
            None => true,
            Some((bv, bm)) => value > bv || (value == bv && mt < bm),
        };
        if better {
            best = Some((value, mt));
        }
    }
    Ok(best.expect("two candidates").1)
}

/// Exhaustive argmax of the weighted objective over `m_t in [1, m]`; ties to
/// the smaller count. Serves both as the fallback when the closed form is
/// undefined and as the independent check of the closed form.
pub fn best_trust_slots_scan(base: &AlohaBase, slots: u64, alpha: f64) -> Result<(u64, f64)> {
    let mut best: Option<(f64, u64)> = None;
    for mt in 1..=slots {
        let value = weighted_objective(&base.with_frame(slots, mt)?, alpha)?;
        let better = match best {
            None => true,
            Some((bv, _)) => value > bv,
        };
        if better {
            best = Some((value, mt));
        }
    }
    let (value, mt) = best.ok_or_else(|| Error::invalid("slots", "must be >= 1"))?;
    Ok((mt, value))
}

/// The jointly optimal frame: slot count, trust-slot count, and objective.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrameOptimum {
    pub slots: u64,
    pub trust_slots: u64,
    pub objective: f64,
    /// How many frame lengths needed the exhaustive fallback because the
    /// closed form was undefined there.
    pub fallback_count: u64,
}

/// Exhaustive search of the frame length over `m_range`, using the
/// closed-form trust-slot optimum per length (exhaustive scan where that is
/// undefined). Ties in the objective keep the smaller frame.
pub fn optimal_frame(
    base: &AlohaBase,
    alpha: f64,
    m_range: std::ops::RangeInclusive<u64>,
) -> Result<FrameOptimum> {
    if m_range.is_empty() {
        return Err(Error::invalid("m_range", "must be nonempty"));
    }
    if *m_range.start() < 1 {
        return Err(Error::invalid("m_range", "frame lengths must be >= 1"));
    }
    let mut best: Option<FrameOptimum> = None;
    let mut fallback_count = 0u64;
    for m in m_range {
        let mt = match optimal_trust_slots(base, m, alpha) {
            Ok(mt) => mt,
            Err(Error::ClosedFormUndefined { .. }) => {
                fallback_count += 1;
                best_trust_slots_scan(base, m, alpha)?.0
            }
            Err(e) => return Err(e),
        };
        let objective = weighted_objective(&base.with_frame(m, mt)?, alpha)?;
        if best.map_or(true, |b| objective > b.objective) {
            best = Some(FrameOptimum { slots: m, trust_slots: mt, objective, fallback_count });
        }
    }
    let mut out = best.expect("nonempty range");
    out.fallback_count = fallback_count;
    Ok(out)
}

/// A Monte Carlo estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub std_err: f64,
}

/// Empirical per-sensor statistics from a frame simulation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameStats {
    pub frames: u64,
    /// Per-sensor per-frame success probability.
    pub success_prob: Estimate,
    /// Per-sensor per-frame verified-success probability.
    pub verification_prob: Estimate,
    /// Per-sensor average age (frames), batch-means standard error.
    pub average_age: Estimate,
    /// Successful packets per unit time.
    pub throughput: Estimate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum TrustSlotLayout {
    /// Trust-enhanced slots are the first `m_t` of the frame.
    Prefix,
    /// A fresh uniformly random set of `m_t` slots each frame. Slot choice
    /// is uniform, so all statistics must match the prefix layout; a test
    /// asserts that.
    Shuffled,
}

/// Simulates the protocol frame by frame and returns empirical statistics.
pub fn simulate_frames(cfg: &AlohaConfig, n_frames: u64, seed: u64) -> Result<FrameStats> {
    simulate_frames_with_layout(cfg, n_frames, seed, TrustSlotLayout::Prefix)
}

pub(crate) fn simulate_frames_with_layout(
    cfg: &AlohaConfig,
    n_frames: u64,
    seed: u64,
    layout: TrustSlotLayout,
) -> Result<FrameStats> {
    cfg.validate()?;
    if n_frames == 0 {
        return Err(Error::invalid("n_frames", "must be >= 1"));
    }
    let k = cfg.sensors as usize;
    let m = cfg.slots as usize;
    let mt = cfg.trust_slots as usize;
    let mut gen = rng::stream(seed, rng::STREAM_ALOHA);

    let mut ages = vec![0u64; k];
    let mut chosen: Vec<Option<u32>> = vec![None; k];
    let mut occupancy = vec![0u32; m];
    let mut trust_slot = vec![false; m];
    let mut slot_ids: Vec<u32> = (0..m as u32).collect();
    for s in 0..m {
        trust_slot[s] = s < mt;
    }

    // per-frame tallies for i.i.d. standard errors
    let mut succ_sum = 0.0f64;
    let mut succ_sumsq = 0.0f64;
    let mut ver_sum = 0.0f64;
    let mut ver_sumsq = 0.0f64;

    // batch means for the autocorrelated age series
    let n_batches = (n_frames.min(100)) as usize;
    let batch_len = n_frames / n_batches as u64;
    let mut batch_means: Vec<f64> = Vec::with_capacity(n_batches + 1);
    let mut batch_acc = 0.0f64;
    let mut batch_count = 0u64;
    let mut age_total = 0.0f64;

    for _frame in 0..n_frames {
        occupancy.fill(0);
        for sensor in 0..k {
            chosen[sensor] = if gen.gen::<f64>() < cfg.activity {
                let slot = gen.gen_range(0..m as u32);
                occupancy[slot as usize] += 1;
                Some(slot)
            } else {
                None
            };
        }
        if layout == TrustSlotLayout::Shuffled {
            // partial Fisher-Yates: the first mt entries become the trust set
            trust_slot.fill(false);
            for i in 0..mt {
                let j = gen.gen_range(i as u32..m as u32) as usize;
                slot_ids.swap(i, j);
                trust_slot[slot_ids[i] as usize] = true;
            }
        }

        let mut frame_successes = 0u32;
        let mut frame_verified = 0u32;
        let mut frame_age_sum = 0u64;
        for sensor in 0..k {
            let verified = match chosen[sensor] {
                Some(slot) if occupancy[slot as usize] == 1 => {
                    frame_successes += 1;
                    if trust_slot[slot as usize] {
                        frame_verified += 1;
                        true
                    } else {
                        false
                    }
                }
                _ => false,
            };
            // reset takes effect at the end of the verifying frame
            if verified {
                ages[sensor] = 0;
            } else {
                ages[sensor] += 1;
            }
            frame_age_sum += ages[sensor];
        }

        let s = f64::from(frame_successes) / k as f64;
        let v = f64::from(frame_verified) / k as f64;
        succ_sum += s;
        succ_sumsq += s * s;
        ver_sum += v;
        ver_sumsq += v * v;

        let mean_age = frame_age_sum as f64 / k as f64;
        age_total += mean_age;
        batch_acc += mean_age;
        batch_count += 1;
        if batch_count == batch_len && batch_means.len() < n_batches {
            batch_means.push(batch_acc / batch_count as f64);
            batch_acc = 0.0;
            batch_count = 0;
        }
    }

    let n = n_frames as f64;
    let mean_se = |sum: f64, sumsq: f64| -> Estimate {
        let mean = sum / n;
        let var = (sumsq / n - mean * mean).max(0.0);
        Estimate { value: mean, std_err: (var / n).sqrt() }
    };
    let success = mean_se(succ_sum, succ_sumsq);
    let verification = mean_se(ver_sum, ver_sumsq);

    let age_mean = age_total / n;
    let age_se = if batch_means.len() >= 2 {
        let b = batch_means.len() as f64;
        let bm: f64 = batch_means.iter().sum::<f64>() / b;
        let bv: f64 = batch_means.iter().map(|x| (x - bm).powi(2)).sum::<f64>() / (b - 1.0);
        (bv / b).sqrt()
    } else {
        f64::NAN
    };

    let t_f = frame_duration(cfg);
    Ok(FrameStats {
        frames: n_frames,
        success_prob: success,
        verification_prob: verification,
        average_age: Estimate { value: age_mean, std_err: age_se },
        throughput: Estimate {
            value: success.value * cfg.sensors as f64 / t_f,
            std_err: success.std_err * cfg.sensors as f64 / t_f,
        },
    })
}
