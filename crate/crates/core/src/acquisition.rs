//! Utilities computed directly from observations, and the annealed
//! improvement threshold.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::math::softplus;
use crate::types::Dataset;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum AcquisitionError {
    #[error("no observations to take a quantile of")]
    EmptyData,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum UtilityKind {
    /// Probability of improvement: `1[y >= thr]`.
    Pi,
    /// Expected improvement: `max(y - thr, 0)`.
    Ei,
    /// Soft-plus expected improvement: `softplus(s (y - thr)) / s`.
    SoftEi { sharpness: f64 },
    /// Simple regret: the raw observation.
    Sr,
}

impl UtilityKind {
    pub fn soft_ei() -> Self {
        UtilityKind::SoftEi { sharpness: 1.0 }
    }

    /// Short lowercase name used in labels and config files.
    pub fn name(&self) -> &'static str {
        match self {
            UtilityKind::Pi => "pi",
            UtilityKind::Ei => "ei",
            UtilityKind::SoftEi { .. } => "sei",
            UtilityKind::Sr => "sr",
        }
    }

    /// True for the kinds that are always nonnegative.
    pub fn is_nonnegative(&self) -> bool {
        !matches!(self, UtilityKind::Sr)
    }
}

pub fn utility(y: f64, thr: f64, kind: UtilityKind) -> f64 {
    match kind {
        UtilityKind::Pi => {
            if y >= thr {
                1.0
            } else {
                0.0
            }
        }
        UtilityKind::Ei => (y - thr).max(0.0),
        UtilityKind::SoftEi { sharpness } => softplus(sharpness * (y - thr)) / sharpness,
        UtilityKind::Sr => y,
    }
}

/// Percentile schedule for the improvement threshold, linear in the round.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdSchedule {
    pub p_start: f64,
    pub p_end: f64,
    pub rounds: u32,
}

impl ThresholdSchedule {
    pub fn new(rounds: u32) -> Self {
        Self {
            p_start: 0.5,
            p_end: 0.99,
            rounds,
        }
    }

    pub fn is_valid(&self) -> bool {
        0.0 < self.p_start && self.p_start <= self.p_end && self.p_end < 1.0 && self.rounds >= 1
    }
}

/// `p_start + (p_end - p_start) * t / T`, with `t` clamped to `[0, T]`.
pub fn anneal_percentile(t: u32, sched: &ThresholdSchedule) -> f64 {
    let t = t.min(sched.rounds);
    if t == sched.rounds {
        return sched.p_end;
    }
    sched.p_start + (sched.p_end - sched.p_start) * t as f64 / sched.rounds as f64
}

/// Nearest-rank quantile: the sorted element at `ceil(p n) - 1`, so the
/// result is always an observed value.
pub fn empirical_quantile(ys: &[f64], p: f64) -> Result<f64, AcquisitionError> {
    if ys.is_empty() {
        return Err(AcquisitionError::EmptyData);
    }
    let mut sorted: Vec<f64> = ys.to_vec();
    sorted.sort_by(f64::total_cmp);
    let rank = libm::ceil(p.clamp(0.0, 1.0) * sorted.len() as f64) as usize;
    Ok(sorted[rank.clamp(1, sorted.len()) - 1])
}

/// Threshold for round `t` over every observation in `dataset`.
pub fn compute_threshold(dataset: &Dataset, t: u32, sched: &ThresholdSchedule) -> Result<f64, AcquisitionError> {
    let ys: Vec<f64> = dataset.ys().collect();
    empirical_quantile(&ys, anneal_percentile(t, sched))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_stream;
    use crate::types::{Observation, Sequence};
    use alloc::vec;
    use rand::Rng;

    #[test]
    fn utility_examples() {
        assert_eq!(utility(2.0, 1.0, UtilityKind::Ei), 1.0);
        assert_eq!(utility(0.5, 1.0, UtilityKind::Ei), 0.0);
        assert_eq!(utility(-3.0, -3.0, UtilityKind::Pi), 1.0);
        assert_eq!(utility(-3.1, -3.0, UtilityKind::Pi), 0.0);
        let s = utility(0.7, 0.7, UtilityKind::soft_ei());
        assert!((s - core::f64::consts::LN_2).abs() < 1e-12);
        assert_eq!(utility(-4.0, 100.0, UtilityKind::Sr), -4.0);
    }

    #[test]
    fn soft_ei_bounds_ei() {
        let mut rng = rng_stream(3, "u", 0);
        for _ in 0..10_000 {
            let y: f64 = rng.random_range(-20.0..20.0);
            let thr: f64 = rng.random_range(-20.0..20.0);
            let s: f64 = rng.random_range(0.1..5.0);
            let kind = UtilityKind::SoftEi { sharpness: s };
            let (ei, sei) = (utility(y, thr, UtilityKind::Ei), utility(y, thr, kind));
            assert!(utility(y, thr, UtilityKind::Pi) >= 0.0);
            assert!(ei >= 0.0 && sei >= 0.0);
            assert!(sei >= ei - 1e-12 && sei - ei <= core::f64::consts::LN_2 / s + 1e-12);
            assert!(utility(y + 0.5, thr, kind) >= sei);
            assert!(utility(y + 0.5, thr, UtilityKind::Ei) >= ei);
        }
    }

    #[test]
    fn schedule_endpoints() {
        let s = ThresholdSchedule::new(10);
        assert_eq!(anneal_percentile(0, &s), 0.5);
        assert_eq!(anneal_percentile(10, &s), 0.99);
        assert!((anneal_percentile(5, &s) - 0.745).abs() < 1e-15);
        let mut last = 0.0;
        for t in 0..=10 {
            let p = anneal_percentile(t, &s);
            assert!(p >= last);
            last = p;
        }
    }

    #[test]
    fn quantile_examples() {
        assert_eq!(empirical_quantile(&[1.0, 2.0, 3.0, 4.0], 0.5).unwrap(), 2.0);
        assert_eq!(empirical_quantile(&[5.0], 0.01).unwrap(), 5.0);
        assert_eq!(empirical_quantile(&[5.0], 0.99).unwrap(), 5.0);
        assert_eq!(empirical_quantile(&[3.0, 1.0, 2.0], 0.5).unwrap(), 2.0);
        assert_eq!(empirical_quantile(&[0.0, -4.0, -5.0, -3.0, -4.0], 0.99).unwrap(), 0.0);
        assert_eq!(empirical_quantile(&[], 0.5), Err(AcquisitionError::EmptyData));
    }

    fn dataset(ys: &[f64]) -> Dataset {
        Dataset::from_initial(
            ys.iter()
                .map(|&y| Observation {
                    sequence: Sequence::from_tokens(vec![0]),
                    y,
                    round: 0,
                    proposal_logp: 0.0,
                })
                .collect(),
        )
    }

    #[test]
    fn threshold_follows_schedule() {
        let s = ThresholdSchedule::new(4);
        let d = dataset(&[-5.0, -4.0, -4.0, -3.0, 0.0]);
        assert_eq!(compute_threshold(&d, 0, &s).unwrap(), -4.0);
        assert_eq!(compute_threshold(&d, 2, &s).unwrap(), -3.0);
        assert_eq!(compute_threshold(&d, 4, &s).unwrap(), 0.0);
        let mut last = f64::NEG_INFINITY;
        for t in 0..=4 {
            let thr = compute_threshold(&d, t, &s).unwrap();
            assert!(thr >= last);
            last = thr;
        }
        let c = dataset(&[2.5; 7]);
        assert!((0..=4).all(|t| compute_threshold(&c, t, &s).unwrap() == 2.5));
        assert!(compute_threshold(&Dataset::default(), 0, &s).is_err());
    }
}
