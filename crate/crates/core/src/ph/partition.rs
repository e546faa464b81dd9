use std::ops::Range;

use serde::{Deserialize, Serialize};

use super::PhError;
use crate::opf::{Case, OpfError, PeriodSlice};

/// Contiguous, non-overlapping hour blocks covering the horizon, each
/// treated as one scenario with its own probability.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioPartition {
    pub periods: Vec<Range<usize>>,
    pub probabilities: Vec<f64>,
}

impl ScenarioPartition {
    pub fn from_lengths(lengths: &[usize]) -> Result<Self, PhError> {
        if lengths.is_empty() || lengths.contains(&0) {
            return Err(PhError::Partition("period lengths must be positive".into()));
        }
        let mut start = 0;
        let periods = lengths
            .iter()
            .map(|&len| {
                let r = start..start + len;
                start += len;
                r
            })
            .collect::<Vec<_>>();
        let p = 1.0 / lengths.len() as f64;
        Ok(ScenarioPartition {
            probabilities: vec![p; periods.len()],
            periods,
        })
    }

    pub fn len(&self) -> usize {
        self.periods.len()
    }

    pub fn is_empty(&self) -> bool {
        self.periods.is_empty()
    }

    pub fn horizon(&self) -> usize {
        self.periods.last().map_or(0, |r| r.end)
    }

    pub fn lengths(&self) -> Vec<usize> {
        self.periods.iter().map(|r| r.len()).collect()
    }

    pub fn validate(&self) -> Result<(), PhError> {
        if self.periods.is_empty() || self.periods.len() != self.probabilities.len() {
            return Err(PhError::Partition("one probability per period is required".into()));
        }
        let mut next = 0;
        for r in &self.periods {
            if r.start != next || r.is_empty() {
                return Err(PhError::Partition(format!("period {r:?} is not contiguous with hour {next}")));
            }
            next = r.end;
        }
        if self.probabilities.iter().any(|p| !(*p > 0.0)) {
            return Err(PhError::Partition("probabilities must be positive".into()));
        }
        let total: f64 = self.probabilities.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(PhError::Partition(format!("probabilities sum to {total}")));
        }
        Ok(())
    }

    pub fn slices(&self, case: &Case) -> Result<Vec<PeriodSlice>, OpfError> {
        self.periods
            .iter()
            .enumerate()
            .map(|(s, r)| case.slice(r.clone(), s > 0))
            .collect()
    }
}

/// Blocks of `unit` hours, the last one possibly shorter.
fn units(horizon: usize, unit: usize) -> Vec<usize> {
    let mut v = vec![unit; horizon / unit];
    if !horizon.is_multiple_of(unit) {
        v.push(horizon % unit);
    }
    v
}

/// Appends leftover units one at a time to the final periods, walking
/// backwards from the last period.
fn spread(base: usize, count: usize, leftovers: &[usize]) -> Vec<usize> {
    let mut lengths = vec![base; count];
    for (k, extra) in leftovers.iter().enumerate() {
        lengths[count - 1 - (k % count)] += extra;
    }
    lengths
}

/// Periods of `target_hours`, with leftover hours appended to the final
/// periods one day (24 hours) at a time. When the target is not a whole
/// number of days the leftover is appended hour by hour instead.
///
/// 8760 hours with a 72-hour target gives 119 periods of 72 hours followed
/// by 2 of 96.
pub fn make_partition(horizon: usize, target_hours: usize) -> Result<ScenarioPartition, PhError> {
    if target_hours == 0 {
        return Err(PhError::Partition("target period length must be at least 1 hour".into()));
    }
    if horizon == 0 {
        return Err(PhError::Partition("horizon must be at least 1 hour".into()));
    }
    let count = (horizon / target_hours).max(1);
    if count * target_hours > horizon {
        return ScenarioPartition::from_lengths(&[horizon]);
    }
    let rest = horizon - count * target_hours;
    let unit = if target_hours.is_multiple_of(24) { 24 } else { 1 };
    let lengths = spread(target_hours, count, &units(rest, unit));
    ScenarioPartition::from_lengths(&lengths)
}

/// Exactly `count` periods of whole days where possible; leftover days go
/// to the final periods one at a time. 8760 hours into 120 periods gives
/// 115 of 72 hours followed by 5 of 96.
pub fn partition_by_count(horizon: usize, count: usize) -> Result<ScenarioPartition, PhError> {
    if count == 0 {
        return Err(PhError::Partition("period count must be at least 1".into()));
    }
    let unit = if horizon.is_multiple_of(24) && horizon / 24 >= count { 24 } else { 1 };
    let n_units = horizon / unit;
    if n_units < count {
        return Err(PhError::Partition(format!("cannot split {horizon} hours into {count} periods")));
    }
    let base = n_units / count;
    let lengths = spread(base * unit, count, &vec![unit; n_units % count]);
    ScenarioPartition::from_lengths(&lengths)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn four_days() {
        let p = make_partition(96, 24).unwrap();
        assert_eq!(p.lengths(), vec![24; 4]);
        assert_eq!(p.probabilities, vec![0.25; 4]);
        p.validate().unwrap();
    }

    #[test]
    fn year_of_three_day_periods() {
        let p = make_partition(8760, 72).unwrap();
        assert_eq!(p.len(), 121);
        assert_eq!(p.lengths().iter().filter(|&&l| l == 72).count(), 119);
        assert_eq!(&p.lengths()[119..], &[96, 96]);
        assert_eq!(p.horizon(), 8760);
    }

    #[test]
    fn year_into_120() {
        let p = partition_by_count(8760, 120).unwrap();
        assert_eq!(p.len(), 120);
        assert_eq!(p.lengths().iter().filter(|&&l| l == 72).count(), 115);
        assert_eq!(&p.lengths()[115..], &[96; 5]);
    }

    #[test]
    fn short_horizon_is_one_period() {
        assert_eq!(make_partition(24, 72).unwrap().lengths(), vec![24]);
        assert!(make_partition(24, 0).is_err());
        assert!(partition_by_count(3, 4).is_err());
    }

    #[test]
    fn odd_hours() {
        assert_eq!(make_partition(10, 3).unwrap().lengths(), vec![3, 3, 4]);
        assert_eq!(make_partition(100, 24).unwrap().lengths(), vec![24, 24, 24, 28]);
        assert_eq!(partition_by_count(10, 4).unwrap().lengths(), vec![2, 2, 3, 3]);
    }

    proptest! {
        #[test]
        fn partitions_cover_horizon(h in 1usize..3000, t in 1usize..200, c in 1usize..50) {
            let p = make_partition(h, t).unwrap();
            p.validate().unwrap();
            prop_assert_eq!(p.horizon(), h);
            if let Ok(q) = partition_by_count(h, c) {
                q.validate().unwrap();
                prop_assert_eq!(q.horizon(), h);
                prop_assert_eq!(q.len(), c);
            }
        }
    }
}
