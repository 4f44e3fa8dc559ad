//! Sliding-window prefix histograms and popularity tiers.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::trace::TraceEvent;

#[derive(Debug, Clone, PartialEq)]
pub struct WindowHistogram {
    /// Number of events up to and including the window's last one.
    pub window_end_index: usize,
    pub prefix_len: usize,
    pub window_size: usize,
    pub counts: BTreeMap<Vec<u32>, u64>,
}

impl WindowHistogram {
    pub fn max_count(&self) -> u64 {
        self.counts.values().copied().max().unwrap_or(0)
    }
}

/// Stable ids for every prefix of `prefix_len` in the trace, in
/// lexicographic order of the choices.
pub fn prefix_ids(events: &[TraceEvent], prefix_len: usize) -> BTreeMap<Vec<u32>, usize> {
    let mut ids: BTreeMap<Vec<u32>, usize> = events
        .iter()
        .map(|e| (e.sequence.prefix(prefix_len).to_vec(), 0))
        .collect();
    for (i, v) in ids.values_mut().enumerate() {
        *v = i;
    }
    ids
}

/// One histogram for every `stride`-th window of `window_size` trailing events.
pub fn window_histograms(
    events: &[TraceEvent],
    window_size: usize,
    prefix_len: usize,
    stride: usize,
) -> Result<Vec<WindowHistogram>> {
    if window_size == 0 || stride == 0 || prefix_len == 0 {
        return Err(Error::InvalidParams(
            "window size, stride and prefix length must be positive".into(),
        ));
    }
    if window_size > events.len() {
        return Err(Error::InvalidParams(format!(
            "window of {window_size} is larger than the trace ({} events)",
            events.len()
        )));
    }
    let prefix = |i: usize| events[i].sequence.prefix(prefix_len).to_vec();
    let mut counts: BTreeMap<Vec<u32>, u64> = BTreeMap::new();
    for i in 0..window_size {
        *counts.entry(prefix(i)).or_default() += 1;
    }
    let mut out = Vec::new();
    let mut end = window_size;
    loop {
        if (end - window_size).is_multiple_of(stride) {
            out.push(WindowHistogram {
                window_end_index: end,
                prefix_len,
                window_size,
                counts: counts.clone(),
            });
        }
        if end == events.len() {
            break;
        }
        let leaving = prefix(end - window_size);
        let c = counts
            .get_mut(&leaving)
            .expect("leaving prefix was counted");
        *c -= 1;
        if *c == 0 {
            counts.remove(&leaving);
        }
        *counts.entry(prefix(end)).or_default() += 1;
        end += 1;
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TierThresholds {
    /// Tier 1 at or above this share of the window.
    pub tier1_fraction: f64,
    /// Upper end of the intermediate tier as usually observed.
    pub tier2_max_count: u64,
    /// Tier 3 at or below this count.
    pub tier3_max_count: u64,
}

impl Default for TierThresholds {
    fn default() -> Self {
        TierThresholds {
            tier1_fraction: 0.30,
            tier2_max_count: 25,
            tier3_max_count: 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TierReport {
    pub window_end_index: usize,
    pub tiers: BTreeMap<Vec<u32>, u8>,
    pub thresholds: TierThresholds,
    /// Tier-2 prefixes whose count exceeds `tier2_max_count`.
    pub tier2_overflow: Vec<Vec<u32>>,
}

impl TierReport {
    pub fn in_tier(&self, tier: u8) -> impl Iterator<Item = &Vec<u32>> {
        self.tiers
            .iter()
            .filter(move |(_, &t)| t == tier)
            .map(|(p, _)| p)
    }
}

pub fn classify_tiers(h: &WindowHistogram, thresholds: TierThresholds) -> TierReport {
    let tier1_min = thresholds.tier1_fraction * h.window_size as f64;
    let mut tiers = BTreeMap::new();
    let mut tier2_overflow = Vec::new();
    for (prefix, &count) in &h.counts {
        let tier = if count as f64 >= tier1_min {
            1
        } else if count <= thresholds.tier3_max_count {
            3
        } else {
            if count > thresholds.tier2_max_count {
                tier2_overflow.push(prefix.clone());
            }
            2
        };
        tiers.insert(prefix.clone(), tier);
    }
    TierReport {
        window_end_index: h.window_end_index,
        tiers,
        thresholds,
        tier2_overflow,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytics::trie::tests::ev;

    fn histogram(counts: &[(u32, u64)]) -> WindowHistogram {
        WindowHistogram {
            window_end_index: 100,
            prefix_len: 1,
            window_size: 100,
            counts: counts.iter().map(|&(p, c)| (vec![p], c)).collect(),
        }
    }

    #[test]
    fn whole_trace_window() {
        let events: Vec<_> = (0..10).map(|i| ev(i, &[(i % 3) as u32, 0, 1])).collect();
        let hs = window_histograms(&events, 10, 2, 1).unwrap();
        assert_eq!(hs.len(), 1);
        assert_eq!(hs[0].counts.values().sum::<u64>(), 10);
        assert!(window_histograms(&events, 11, 2, 1).is_err());
    }

    #[test]
    fn identical_sequences() {
        let events: Vec<_> = (0..20).map(|i| ev(i, &[1, 2, 3, 4])).collect();
        let hs = window_histograms(&events, 5, 3, 1).unwrap();
        assert_eq!(hs.len(), 16);
        for h in hs {
            assert_eq!(h.counts.len(), 1);
            assert_eq!(h.counts[&vec![1, 2, 3]], 5);
        }
    }

    #[test]
    fn sliding_matches_recount() {
        let events: Vec<_> = (0..50)
            .map(|i| ev(i, &[(i * 7 % 5) as u32, (i * 3 % 4) as u32, 0]))
            .collect();
        let hs = window_histograms(&events, 12, 2, 3).unwrap();
        for h in &hs {
            assert_eq!((h.window_end_index - 12) % 3, 0);
            let mut expect: BTreeMap<Vec<u32>, u64> = BTreeMap::new();
            for e in &events[h.window_end_index - 12..h.window_end_index] {
                *expect.entry(e.sequence.prefix(2).to_vec()).or_default() += 1;
            }
            assert_eq!(h.counts, expect);
        }
    }

    #[test]
    fn ids_are_lexicographic() {
        let events = vec![
            ev(0, &[2, 0]),
            ev(1, &[0, 4]),
            ev(2, &[0, 1]),
            ev(3, &[2, 0]),
        ];
        let ids = prefix_ids(&events, 2);
        let order: Vec<&Vec<u32>> = ids.keys().collect();
        assert_eq!(order, vec![&vec![0, 1], &vec![0, 4], &vec![2, 0]]);
        assert_eq!(ids[&vec![2, 0]], 2);
    }

    #[test]
    fn tiers() {
        let report = classify_tiers(
            &histogram(&[(0, 30), (1, 3), (2, 10), (3, 27), (4, 30 - 1)]),
            TierThresholds::default(),
        );
        assert_eq!(report.tiers[&vec![0]], 1);
        assert_eq!(report.tiers[&vec![1]], 3);
        assert_eq!(report.tiers[&vec![2]], 2);
        assert_eq!(report.tiers[&vec![3]], 2);
        assert_eq!(report.tier2_overflow, vec![vec![3], vec![4]]);
        assert_eq!(report.in_tier(1).count(), 1);
    }
}
