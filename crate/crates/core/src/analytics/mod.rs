//! Trace analyses and their comma-separated exports.
//!
//! Table headers:
//!
//! * histograms: `window_end_index,prefix_id,prefix,count`
//! * tiers: `window_end_index,prefix_id,prefix,count,tier`
//! * quality: `index,candidate_id,quality,cumulative_max`
//! * steps: `index,candidate_id,old_max,new_max,magnitude`
//! * donors: `window_end_index,donor_id,count` (nonzero counts only)
//! * locality runs: `worker,donor,start_ts,length`
//! * locality buckets: `bucket,donor,workers`
//!
//! Prefixes are written as dash-joined choices (`0-3-1`); prefix ids follow
//! lexicographic order over the whole trace.

pub mod donors;
pub mod locality;
pub mod population;
pub mod quality;
pub mod trie;
pub mod window;

use std::collections::BTreeMap;

pub use donors::{donor_frequency, donor_ranking, DonorWindow};
pub use locality::{worker_locality, BucketUse, LocalityReport, WorkerRun};
pub use population::{bottom_for_life, parents_from_samples, replay_population, Residence};
pub use quality::{
    donor_delay, improvement_halves, quality_series, DonorDelayReport, DonorWait, ImprovementStep,
    QualitySeries,
};
pub use trie::{build_trie, PrefixTrie, TrieNode};
pub use window::{
    classify_tiers, prefix_ids, window_histograms, TierReport, TierThresholds, WindowHistogram,
};

use crate::error::Result;
use crate::trace::{format_float, TraceEvent};

fn join(prefix: &[u32]) -> String {
    prefix
        .iter()
        .map(u32::to_string)
        .collect::<Vec<_>>()
        .join("-")
}

fn table<I, R>(header: &[&str], rows: I) -> Result<String>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator<Item = String>,
{
    let mut w = csv::Writer::from_writer(Vec::new());
    let fail = |e: csv::Error| crate::error::Error::InvalidParams(format!("csv export: {e}"));
    w.write_record(header).map_err(fail)?;
    for row in rows {
        w.write_record(row.into_iter().collect::<Vec<_>>())
            .map_err(fail)?;
    }
    let bytes = w.into_inner().map_err(|e| fail(e.into_error().into()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

pub fn histograms_csv(
    hists: &[WindowHistogram],
    ids: &BTreeMap<Vec<u32>, usize>,
) -> Result<String> {
    table(
        &["window_end_index", "prefix_id", "prefix", "count"],
        hists.iter().flat_map(|h| {
            h.counts.iter().map(move |(p, c)| {
                vec![
                    h.window_end_index.to_string(),
                    ids.get(p).map_or(String::new(), usize::to_string),
                    join(p),
                    c.to_string(),
                ]
            })
        }),
    )
}

pub fn tiers_csv(
    hists: &[WindowHistogram],
    tiers: &[TierReport],
    ids: &BTreeMap<Vec<u32>, usize>,
) -> Result<String> {
    table(
        &["window_end_index", "prefix_id", "prefix", "count", "tier"],
        hists.iter().zip(tiers).flat_map(|(h, t)| {
            h.counts.iter().map(move |(p, c)| {
                vec![
                    h.window_end_index.to_string(),
                    ids.get(p).map_or(String::new(), usize::to_string),
                    join(p),
                    c.to_string(),
                    t.tiers[p].to_string(),
                ]
            })
        }),
    )
}

pub fn quality_csv(events: &[TraceEvent], series: &QualitySeries) -> Result<String> {
    table(
        &["index", "candidate_id", "quality", "cumulative_max"],
        events.iter().enumerate().map(|(i, e)| {
            vec![
                i.to_string(),
                e.candidate_id.to_string(),
                format_float(series.qualities[i]),
                format_float(series.cumulative_max[i]),
            ]
        }),
    )
}

pub fn steps_csv(events: &[TraceEvent], series: &QualitySeries) -> Result<String> {
    table(
        &["index", "candidate_id", "old_max", "new_max", "magnitude"],
        series.steps.iter().map(|s| {
            vec![
                s.index.to_string(),
                events[s.index].candidate_id.to_string(),
                s.old_max.map_or(String::new(), format_float),
                format_float(s.new_max),
                s.magnitude().map_or(String::new(), format_float),
            ]
        }),
    )
}

pub fn donors_csv(windows: &[DonorWindow]) -> Result<String> {
    table(
        &["window_end_index", "donor_id", "count"],
        windows.iter().flat_map(|w| {
            w.counts.iter().map(move |(d, c)| {
                vec![w.window_end_index.to_string(), d.to_string(), c.to_string()]
            })
        }),
    )
}

pub fn locality_runs_csv(report: &LocalityReport) -> Result<String> {
    table(
        &["worker", "donor", "start_ts", "length"],
        report.runs.iter().map(|r| {
            vec![
                r.worker.to_string(),
                r.donor.to_string(),
                format_float(r.start_ts),
                r.length.to_string(),
            ]
        }),
    )
}

pub fn locality_buckets_csv(report: &LocalityReport) -> Result<String> {
    table(
        &["bucket", "donor", "workers"],
        report.buckets.iter().map(|b| {
            vec![
                b.bucket.to_string(),
                b.donor.to_string(),
                b.workers.to_string(),
            ]
        }),
    )
}
