//! The sweetness sensor: grain counts, readings with bounded indeterminacy,
//! and the intransitive "reported equivalent" relation.

use std::ops::RangeInclusive;

use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SensorMode {
    /// Any reading between the floors of `(n - δ)/g` and `(n + δ)/g`.
    Possibilistic,
    /// Exactly `⌊n/g⌋`.
    Midpoint,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SensorModel {
    pub granularity: i64,
    pub delta: i64,
    pub clamp: bool,
    pub mode: SensorMode,
    /// Readings at most this far apart are reported equivalent.
    pub tolerance: i64,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SensorError {
    #[error("granularity must be at least 1, got {0}")]
    Granularity(i64),
    #[error("indeterminacy must satisfy 0 <= delta < granularity, got {delta} with granularity {granularity}")]
    Delta { delta: i64, granularity: i64 },
    #[error("tolerance must be non-negative, got {0}")]
    Tolerance(i64),
}

impl Default for SensorModel {
    fn default() -> Self {
        SensorModel { granularity: 10, delta: 4, clamp: true, mode: SensorMode::Possibilistic, tolerance: 1 }
    }
}

impl SensorModel {
    pub fn new(granularity: i64, delta: i64, clamp: bool, mode: SensorMode) -> Result<Self, SensorError> {
        SensorModel { granularity, delta, clamp, mode, tolerance: 1 }.validated()
    }

    pub fn midpoint(granularity: i64) -> Result<Self, SensorError> {
        SensorModel::new(granularity, 0, true, SensorMode::Midpoint)
    }

    pub fn validated(self) -> Result<Self, SensorError> {
        if self.granularity < 1 {
            return Err(SensorError::Granularity(self.granularity));
        }
        if self.delta < 0 || self.delta >= self.granularity {
            return Err(SensorError::Delta { delta: self.delta, granularity: self.granularity });
        }
        if self.tolerance < 0 {
            return Err(SensorError::Tolerance(self.tolerance));
        }
        Ok(self)
    }

    /// Possible readings for `n` grains, as an inclusive interval.
    pub fn readings(&self, n: i64) -> RangeInclusive<i64> {
        assert!(n >= 0, "grain counts are non-negative");
        let g = self.granularity;
        match self.mode {
            SensorMode::Midpoint => n.div_euclid(g)..=n.div_euclid(g),
            SensorMode::Possibilistic => {
                let lo = (n - self.delta).div_euclid(g);
                let lo = if self.clamp { lo.max(0) } else { lo };
                lo..=(n + self.delta).div_euclid(g)
            }
        }
    }

    pub fn readings_equivalent(&self, r: i64, r2: i64) -> bool {
        (r - r2).abs() <= self.tolerance
    }

    /// Some pair of possible readings is reported equivalent.
    pub fn may_equivalent(&self, n: i64, m: i64) -> bool {
        let (a, b) = (self.readings(n), self.readings(m));
        // Closest readings of two intervals.
        let gap = (b.start() - a.end()).max(a.start() - b.end()).max(0);
        gap <= self.tolerance
    }

    /// Every pair of possible readings is reported equivalent.
    pub fn must_equivalent(&self, n: i64, m: i64) -> bool {
        let (a, b) = (self.readings(n), self.readings(m));
        let spread = (b.end() - a.start()).max(a.end() - b.start());
        spread <= self.tolerance
    }
}

/// `|r - r'| ≤ 1`.
pub fn report_equivalent(r: i64, r2: i64) -> bool {
    (r - r2).abs() <= 1
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Triple(pub i64, pub i64, pub i64);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct IntransitivityReport {
    /// `a ~ b` and `b ~ c` under every reading, `a` and `c` never equivalent.
    pub must: Option<Triple>,
    /// `a ~ b` and `b ~ c` under some reading, `a` and `c` not always.
    pub may: Option<Triple>,
}

fn smallest_triple(cap: i64, eq: impl Fn(i64, i64) -> bool, apart: impl Fn(i64, i64) -> bool) -> Option<Triple> {
    for a in 0..=cap {
        for b in 0..=cap {
            if !eq(a, b) {
                continue;
            }
            for c in 0..=cap {
                if eq(b, c) && apart(a, c) {
                    return Some(Triple(a, b, c));
                }
            }
        }
    }
    None
}

/// Lexicographically smallest intransitive triple of grain counts in
/// `0..=cap`. In midpoint mode both variants coincide.
pub fn intransitivity_witness(model: &SensorModel, cap: i64) -> IntransitivityReport {
    IntransitivityReport {
        must: smallest_triple(cap, |a, b| model.must_equivalent(a, b), |a, c| !model.may_equivalent(a, c)),
        may: smallest_triple(cap, |a, b| model.may_equivalent(a, b), |a, c| !model.must_equivalent(a, c)),
    }
}

/// Whether "some possible reading is shared" is transitive on `0..=cap`.
/// In midpoint mode this is reading equality and always holds.
pub fn reading_equality_transitive(model: &SensorModel, cap: i64) -> bool {
    let same = |n: i64, m: i64| {
        let (a, b) = (model.readings(n), model.readings(m));
        a.start().max(b.start()) <= a.end().min(b.end())
    };
    (0..=cap).all(|a| {
        (0..=cap).filter(|&b| same(a, b)).all(|b| (0..=cap).filter(|&c| same(b, c)).all(|c| same(a, c)))
    })
}

/// Smallest `k` such that grain counts in `0..=cap` differing by at least
/// `k` are never reported equivalent.
fn threshold_within(model: &SensorModel, cap: i64) -> i64 {
    let mut worst = -1;
    for n in 0..=cap {
        for m in n..=cap {
            if m - n > worst && model.may_equivalent(n, m) {
                worst = m - n;
            }
        }
    }
    worst + 1
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ThresholdReport {
    pub threshold: i64,
    pub cap: i64,
    /// The value is unchanged when the range grows by one sensor period.
    pub stable: bool,
}

pub fn inequivalence_threshold(model: &SensorModel, cap: i64) -> ThresholdReport {
    let threshold = threshold_within(model, cap);
    let stable = threshold_within(model, cap + model.granularity) == threshold;
    ThresholdReport { threshold, cap, stable }
}

/// First `n` in `1..=max` where a reading for `n` and one for `n - 1` are
/// not reported equivalent.
pub fn single_grain_instability(model: &SensorModel, max: i64) -> Option<i64> {
    (1..=max).find(|&n| !model.must_equivalent(n, n - 1))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn standard() -> SensorModel {
        SensorModel::default()
    }

    #[test]
    fn readings_examples() {
        assert_eq!(standard().readings(16), 1..=2);
        assert_eq!(standard().readings(0), 0..=0);
        assert_eq!(standard().readings(9), 0..=1);
        let raw = SensorModel { clamp: false, ..standard() };
        assert_eq!(raw.readings(0), -1..=0);
        assert_eq!(SensorModel::midpoint(10).unwrap().readings(29), 2..=2);
    }

    #[test]
    fn report_rule() {
        assert!(report_equivalent(0, 1));
        assert!(!report_equivalent(0, 2));
        assert!(report_equivalent(3, 3));
    }

    #[test]
    fn intransitivity_examples() {
        let mid = SensorModel::midpoint(10).unwrap();
        let r = intransitivity_witness(&mid, 60);
        assert_eq!(r.must, Some(Triple(0, 10, 20)));
        assert_eq!(r.may, Some(Triple(0, 10, 20)));
        assert!(reading_equality_transitive(&mid, 60));

        let perfect = SensorModel::new(1, 0, true, SensorMode::Possibilistic).unwrap();
        assert_eq!(intransitivity_witness(&perfect, 10).must, Some(Triple(0, 1, 2)));

        let strict = SensorModel { tolerance: 0, ..mid };
        assert_eq!(intransitivity_witness(&strict, 60), IntransitivityReport { must: None, may: None });
    }

    #[test]
    fn thresholds() {
        let t = inequivalence_threshold(&standard(), 200);
        assert_eq!(t.threshold, 28);
        assert!(t.stable);
        let sharp = SensorModel::new(10, 0, true, SensorMode::Possibilistic).unwrap();
        assert_eq!(inequivalence_threshold(&sharp, 200).threshold, 20);
        let perfect = SensorModel::new(1, 0, true, SensorMode::Possibilistic).unwrap();
        assert_eq!(inequivalence_threshold(&perfect, 50).threshold, 2);
    }

    #[test]
    fn brute_force_threshold_agrees_with_pairwise_definition() {
        let m = standard();
        let k = inequivalence_threshold(&m, 120).threshold;
        for n in 0..=120 {
            for d in k..=(120 - n) {
                for r in m.readings(n) {
                    for r2 in m.readings(n + d) {
                        assert!((r - r2).abs() >= 2);
                    }
                }
            }
        }
        assert!((0..=120 - (k - 1)).any(|n| m.may_equivalent(n, n + k - 1)));
    }

    #[test]
    fn single_grain_stability() {
        assert_eq!(single_grain_instability(&standard(), 500), None);
    }

    #[test]
    fn bad_models_are_rejected() {
        assert!(SensorModel::new(0, 0, true, SensorMode::Midpoint).is_err());
        assert!(SensorModel::new(10, 10, true, SensorMode::Possibilistic).is_err());
    }
}
