//! How often each stored model serves as a transfer donor.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::trace::TraceEvent;

#[derive(Debug, Clone, PartialEq)]
pub struct DonorWindow {
    pub window_end_index: usize,
    pub window_size: usize,
    /// Donor id to the number of window events that used it.
    pub counts: BTreeMap<u64, u64>,
}

/// Donor counts over every trailing window of `window_size` events. A trace
/// without transfers yields windows with empty counts.
pub fn donor_frequency(events: &[TraceEvent], window_size: usize) -> Result<Vec<DonorWindow>> {
    if window_size == 0 || window_size > events.len() {
        return Err(Error::InvalidParams(format!(
            "window of {window_size} does not fit a trace of {} events",
            events.len()
        )));
    }
    let mut counts: BTreeMap<u64, u64> = BTreeMap::new();
    let mut out = Vec::with_capacity(events.len() - window_size + 1);
    for (i, ev) in events.iter().enumerate() {
        if let Some(d) = ev.donor_id {
            *counts.entry(d).or_default() += 1;
        }
        if i >= window_size {
            if let Some(d) = events[i - window_size].donor_id {
                let c = counts.get_mut(&d).expect("counted on entry");
                *c -= 1;
                if *c == 0 {
                    counts.remove(&d);
                }
            }
        }
        if i + 1 >= window_size {
            out.push(DonorWindow {
                window_end_index: i + 1,
                window_size,
                counts: counts.clone(),
            });
        }
    }
    Ok(out)
}

/// Whole-trace donor counts, most used first (ties by lower id).
pub fn donor_ranking(events: &[TraceEvent]) -> Vec<(u64, u64)> {
    let mut counts: BTreeMap<u64, u64> = BTreeMap::new();
    for d in events.iter().filter_map(|e| e.donor_id) {
        *counts.entry(d).or_default() += 1;
    }
    let mut ranked: Vec<(u64, u64)> = counts.into_iter().collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
    ranked
}
