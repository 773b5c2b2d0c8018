//! Periodic verification and its closed-form optimal period.
//!
//! For a schedule that verifies every `lambda` slots on a link with constant
//! (or mean) rate `mu`, the long-run weighted objective is
//!
//! ```text
//! f(lambda) = (2*mu - alpha*lambda) * (lambda - 1) / (2*lambda)
//! ```
//!
//! (the per-cycle reward is a trapezoid of area `f(lambda) * lambda`).
//! `f` is strictly concave with continuous maximiser `sqrt(2*mu/alpha)`, so
//! the optimal integer period is its floor or ceiling, whichever scores
//! higher.

use crate::age::SlotIndicator;
use crate::error::{Error, Result};
use crate::service::RateDistribution;

/// Long-run objective of a period-`lambda` schedule at constant rate `rate`.
pub fn periodic_objective(lambda: u64, rate: f64, alpha: f64) -> f64 {
    let l = lambda as f64;
    (2.0 * rate - alpha * l) * (l - 1.0) / (2.0 * l)
}

/// Optimal verification period for a constant service rate.
///
/// Evaluates the objective at the floor and ceiling of `sqrt(2*rate/alpha)`
/// (skipping candidates below 1) and returns the argmax; ties go to the
/// smaller period, which leaves less time unverified.
pub fn optimal_period_constant(rate: f64, alpha: f64) -> Result<u64> {
    if !rate.is_finite() || rate <= 0.0 {
        return Err(Error::invalid("rate", format!("must be positive, got {rate}")));
    }
    if !alpha.is_finite() || alpha < 0.0 {
        return Err(Error::invalid("alpha", format!("must be positive, got {alpha}")));
    }
    if alpha == 0.0 {
        return Err(Error::UnboundedPeriod);
    }
    let x = (2.0 * rate / alpha).sqrt();
    let lo = x.floor() as u64;
    let hi = x.ceil() as u64;
    let mut best: Option<(f64, u64)> = None;
    for lambda in [lo, hi] {
        if lambda < 1 {
            continue;
        }
        let value = periodic_objective(lambda, rate, alpha);
        let better = match best {
            None => true,
            Some((bv, bl)) => value > bv || (value == bv && lambda < bl),
        };
        if better {
            best = Some((value, lambda));
        }
    }
    Ok(best.expect("ceil of a positive root is >= 1").1)
}

/// Optimal period when only the mean rate is known: the constant-rate rule
/// applied to the analytic mean.
pub fn optimal_period_mean(dist: &RateDistribution, alpha: f64) -> Result<u64> {
    dist.validate()?;
    optimal_period_constant(dist.mean(), alpha)
}

/// Plain periodic rule: verify on every `lambda`-th slot since the last
/// verification. `slots_since_verify` counts completed slots since the last
/// verification (0 right after one).
pub fn decide_periodic(slots_since_verify: u64, lambda: u64) -> SlotIndicator {
    if slots_since_verify + 1 >= lambda {
        SlotIndicator::Verify
    } else {
        SlotIndicator::Transmit
    }
}

/// Rate-aware periodic rule: verify at the period boundary, and also
/// whenever transmitting would score a non-positive reward, i.e.
/// `rate - alpha * (prev_age + 1) <= 0`. Both triggers restart the cycle
/// count.
pub fn decide_improved_periodic(
    slots_since_verify: u64,
    prev_age: u64,
    rate: f64,
    lambda: u64,
    alpha: f64,
) -> SlotIndicator {
    if rate - alpha * (prev_age as f64 + 1.0) <= 0.0 {
        return SlotIndicator::Verify;
    }
    decide_periodic(slots_since_verify, lambda)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::age::SlotIndicator::*;

    /// Exhaustive argmax of the periodic objective; ties to the smaller
    /// period. Independent of the closed form above.
    pub(crate) fn brute_force_period(rate: f64, alpha: f64, max_lambda: u64) -> u64 {
        let mut best = (f64::NEG_INFINITY, 0u64);
        for lambda in 1..=max_lambda {
            let v = periodic_objective(lambda, rate, alpha);
            if v > best.0 {
                best = (v, lambda);
            }
        }
        best.1
    }

    #[test]
    fn optimal_period_for_rate_seven() {
        // sqrt(14) ~ 3.742; f(3) = 11/3 < f(4) = 3.75
        assert_eq!(optimal_period_constant(7.0, 1.0).unwrap(), 4);
        assert_eq!(periodic_objective(4, 7.0, 1.0), 3.75);
    }

    #[test]
    fn optimal_period_integer_root() {
        // sqrt(4) = 2 exactly
        assert_eq!(optimal_period_constant(2.0, 1.0).unwrap(), 2);
        assert_eq!(periodic_objective(2, 2.0, 1.0), 0.5);
    }

    #[test]
    fn closed_form_agrees_with_exhaustive_scan() {
        assert_eq!(brute_force_period(7.0, 1.0, 1000), 4);
        assert_eq!(
            optimal_period_constant(7.0, 1.0).unwrap(),
            brute_force_period(7.0, 1.0, 1000)
        );
    }

    #[test]
    fn mean_rate_period_for_two_point() {
        let dist = crate::service::RateDistribution::TwoPoint { low: 1.0, high: 10.0, p_high: 0.5 };
        // E = 5.5, sqrt(11) ~ 3.317; f(3) = 8/3 > f(4) = 21/8
        assert_eq!(optimal_period_mean(&dist, 1.0).unwrap(), 3);
        assert_eq!(brute_force_period(5.5, 1.0, 1000), 3);
        let constant = crate::service::RateDistribution::Constant { rate: 7.0 };
        assert_eq!(optimal_period_mean(&constant, 1.0).unwrap(), 4);
    }

    #[test]
    fn zero_alpha_is_rejected() {
        assert!(matches!(optimal_period_constant(7.0, 0.0), Err(Error::UnboundedPeriod)));
    }

    #[test]
    fn periodic_rule_fires_on_boundary() {
        assert_eq!(decide_periodic(3, 4), Verify);
        assert_eq!(decide_periodic(0, 4), Transmit);
        // lambda = 1 verifies every slot
        for c in 0..5 {
            assert_eq!(decide_periodic(c, 1), Verify);
        }
    }

    #[test]
    fn improved_rule_triggers_on_low_rate() {
        // 1 - 1*(1+1) = -1 <= 0
        assert_eq!(decide_improved_periodic(0, 1, 1.0, 3, 1.0), Verify);
        // 10 - 2 > 0 and not at the boundary
        assert_eq!(decide_improved_periodic(0, 1, 10.0, 3, 1.0), Transmit);
        // boundary dominates regardless of rate
        assert_eq!(decide_improved_periodic(2, 0, 10.0, 3, 1.0), Verify);
    }
}
