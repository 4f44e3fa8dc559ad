//! Worker locality of donor use: repeated use on one worker and
//! simultaneous use across workers.

use std::collections::{BTreeMap, BTreeSet};

use crate::analytics::donors::donor_ranking;
use crate::error::{Error, Result};
use crate::trace::TraceEvent;

#[derive(Debug, Clone, PartialEq)]
pub struct WorkerRun {
    pub worker: u32,
    pub donor: u64,
    pub start_ts: f64,
    /// Consecutive evaluations on `worker` that used `donor`.
    pub length: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BucketUse {
    pub bucket: u64,
    pub donor: u64,
    /// Distinct workers that began an evaluation with `donor` in the bucket.
    pub workers: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LocalityReport {
    /// Donors analysed with their whole-trace counts, most used first.
    pub donors: Vec<(u64, u64)>,
    pub runs: Vec<WorkerRun>,
    pub buckets: Vec<BucketUse>,
}

impl LocalityReport {
    pub fn longest_run(&self) -> Option<&WorkerRun> {
        self.runs.iter().max_by_key(|r| r.length)
    }

    pub fn max_cooccurrence(&self) -> u64 {
        self.buckets.iter().map(|b| b.workers).max().unwrap_or(0)
    }
}

/// Analyses the `top_k` most used donors, optionally skipping the single
/// most used one. Runs are broken by any evaluation with a different donor
/// (or none). Buckets are `floor(begin_ts / bucket_seconds)`.
pub fn worker_locality(
    events: &[TraceEvent],
    top_k: usize,
    bucket_seconds: f64,
    skip_most_popular: bool,
) -> Result<LocalityReport> {
    if !(bucket_seconds > 0.0 && bucket_seconds.is_finite()) {
        return Err(Error::InvalidParams("time bucket must be positive".into()));
    }
    let skip = usize::from(skip_most_popular);
    let donors: Vec<(u64, u64)> = donor_ranking(events)
        .into_iter()
        .skip(skip)
        .take(top_k)
        .collect();
    let chosen: BTreeSet<u64> = donors.iter().map(|&(d, _)| d).collect();

    let mut per_worker: BTreeMap<u32, Vec<&TraceEvent>> = BTreeMap::new();
    for ev in events {
        per_worker.entry(ev.worker_id).or_default().push(ev);
    }
    let mut runs = Vec::new();
    for (&worker, evs) in per_worker.iter_mut() {
        evs.sort_by(|a, b| {
            a.begin_ts
                .total_cmp(&b.begin_ts)
                .then(a.candidate_id.cmp(&b.candidate_id))
        });
        let mut current: Option<WorkerRun> = None;
        for ev in evs.iter() {
            let donor = ev.donor_id.filter(|d| chosen.contains(d));
            match (&mut current, donor) {
                (Some(run), Some(d)) if run.donor == d => run.length += 1,
                _ => {
                    runs.extend(current.take());
                    current = donor.map(|d| WorkerRun {
                        worker,
                        donor: d,
                        start_ts: ev.begin_ts,
                        length: 1,
                    });
                }
            }
        }
        runs.extend(current);
    }

    let mut sets: BTreeMap<(u64, u64), BTreeSet<u32>> = BTreeMap::new();
    for ev in events {
        if let Some(d) = ev.donor_id.filter(|d| chosen.contains(d)) {
            let bucket = (ev.begin_ts / bucket_seconds).floor() as u64;
            sets.entry((bucket, d)).or_default().insert(ev.worker_id);
        }
    }
    let buckets = sets
        .into_iter()
        .map(|((bucket, donor), ws)| BucketUse {
            bucket,
            donor,
            workers: ws.len() as u64,
        })
        .collect();
    Ok(LocalityReport {
        donors,
        runs,
        buckets,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytics::trie::tests::ev;

    fn with_donor(id: u64, worker: u32, donor: Option<u64>) -> TraceEvent {
        let mut e = ev(id, &[0]);
        e.worker_id = worker;
        e.donor_id = donor;
        e
    }

    #[test]
    fn single_worker_single_donor() {
        let events: Vec<_> = (0..6).map(|i| with_donor(i, 0, Some(3))).collect();
        let r = worker_locality(&events, 5, 2.0, false).unwrap();
        assert_eq!(r.runs.len(), 1);
        assert_eq!(r.runs[0].length, 6);
        assert!(r.buckets.iter().all(|b| b.workers == 1));
    }

    #[test]
    fn alternating_workers_cooccur() {
        let events: Vec<_> = (0..4)
            .map(|i| with_donor(i, (i % 2) as u32, Some(3)))
            .collect();
        let r = worker_locality(&events, 5, 100.0, false).unwrap();
        assert_eq!(r.buckets.len(), 1);
        assert_eq!(r.buckets[0].workers, 2);
        assert_eq!(
            r.runs.iter().map(|r| r.length).collect::<Vec<_>>(),
            vec![2, 2]
        );
    }

    #[test]
    fn runs_break_and_top_donor_skips() {
        let donors = [Some(1), Some(1), None, Some(1), Some(2), Some(1)];
        let events: Vec<_> = donors
            .iter()
            .enumerate()
            .map(|(i, &d)| with_donor(i as u64, 0, d))
            .collect();
        let r = worker_locality(&events, 2, 10.0, false).unwrap();
        let lengths: Vec<u64> = r.runs.iter().map(|r| r.length).collect();
        assert_eq!(lengths, vec![2, 1, 1, 1]);
        let r = worker_locality(&events, 2, 10.0, true).unwrap();
        assert_eq!(r.donors, vec![(2, 1)]);
        assert_eq!(r.runs.len(), 1);
        assert!(worker_locality(&events, 2, 0.0, false).is_err());
    }
}
