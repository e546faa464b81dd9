use std::collections::{BTreeSet, HashSet};

use serde::{Deserialize, Serialize};

use super::{Network, NetworkError, RiskSeries};

/// Lines switched off, per day; every hour of a day shares its day's set.
/// Hours past the last scheduled day have every line energized.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeenergizationSchedule {
    pub hours_per_day: usize,
    pub days: Vec<BTreeSet<String>>,
}

static EMPTY: BTreeSet<String> = BTreeSet::new();

impl DeenergizationSchedule {
    pub fn empty(hours_per_day: usize) -> Self {
        DeenergizationSchedule {
            hours_per_day: hours_per_day.max(1),
            days: Vec::new(),
        }
    }

    pub fn off_set(&self, hour: usize) -> &BTreeSet<String> {
        self.days.get(hour / self.hours_per_day).unwrap_or(&EMPTY)
    }

    pub fn is_off(&self, hour: usize, line: &str) -> bool {
        self.off_set(hour).contains(line)
    }

    /// Per-line de-energized flags for `hour`, indexed like `net.lines`.
    pub fn line_mask(&self, net: &Network, hour: usize) -> Result<Vec<bool>, NetworkError> {
        let mut mask = vec![false; net.num_lines()];
        for id in self.off_set(hour) {
            let k = net.line_index(id).ok_or_else(|| NetworkError::UnknownLine(id.clone()))?;
            mask[k] = true;
        }
        Ok(mask)
    }

    pub fn validate(&self, net: &Network) -> Result<(), NetworkError> {
        for day in &self.days {
            for id in day {
                if net.line_index(id).is_none() {
                    return Err(NetworkError::UnknownLine(id.clone()));
                }
            }
        }
        Ok(())
    }
}

/// A line is off for all hours of day `d` iff its risk that day is
/// strictly above `threshold`.
pub fn compute_off_sets(risk: &RiskSeries, threshold: f64, hours_per_day: usize) -> DeenergizationSchedule {
    let days = (0..risk.days())
        .map(|d| {
            risk.line_ids()
                .iter()
                .filter(|id| risk.risk(id, d).is_some_and(|r| r > threshold))
                .cloned()
                .collect()
        })
        .collect();
    DeenergizationSchedule {
        hours_per_day: hours_per_day.max(1),
        days,
    }
}

/// Connected components of the grid with `off` lines removed, as bus
/// indices. Components are ordered by their smallest bus index.
pub fn energized_components(net: &Network, off: &HashSet<usize>) -> Vec<Vec<usize>> {
    let n = net.num_buses();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut i: usize) -> usize {
        while parent[i] != i {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        i
    }
    for k in 0..net.num_lines() {
        if off.contains(&k) {
            continue;
        }
        let (f, t) = net.line_ends(k);
        let (rf, rt) = (find(&mut parent, f), find(&mut parent, t));
        if rf != rt {
            parent[rf.max(rt)] = rf.min(rt);
        }
    }
    let mut comps: Vec<Vec<usize>> = Vec::new();
    let mut slot = vec![usize::MAX; n];
    for b in 0..n {
        let r = find(&mut parent, b);
        if slot[r] == usize::MAX {
            slot[r] = comps.len();
            comps.push(Vec::new());
        }
        comps[slot[r]].push(b);
    }
    comps
}
