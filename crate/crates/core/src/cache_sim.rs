//! Trace replay against repository admission policies.
//!
//! Admissions happen at each event's `end_ts`, donor requests at the
//! requesting event's `begin_ts`; at equal times admissions go first. The
//! replay never changes the recorded search: a request for a skipped model
//! is counted as a miss and the trace continues as recorded.
//!
//! Policy semantics in replay:
//!
//! * `skip_bottom` skips every candidate that ranked below the sample size
//!   for its whole residence in a full population. Such a candidate is never
//!   the best of any sample, so it is never a parent and never a donor.
//! * `probability_threshold` uses the rank right after insertion.
//! * `tier_threshold` starts with nothing stored and stores a model once the
//!   requests for it among the last `window` candidates reach
//!   `min_donations`. The request that crosses the threshold is a miss.

use std::collections::{HashMap, HashSet, VecDeque};
use std::fmt::Write as _;

use crate::analytics::population::replay_population;
use crate::error::{Error, Result};
use crate::repo::{admit, AdmissionContext, CachePolicy, PolicyKind, RepoEntry};
use crate::trace::TraceEvent;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct CacheReport {
    pub stores_made: u64,
    pub stores_skipped: u64,
    pub donor_hits: u64,
    pub donor_misses: u64,
    /// Stored at some point and never requested while stored.
    pub wasted_stores: u64,
    /// Transferable slots lost to misses.
    pub miss_penalty_prefix_slots: u64,
    pub evictions: u64,
}

impl CacheReport {
    pub fn requests(&self) -> u64 {
        self.donor_hits + self.donor_misses
    }

    pub fn hit_rate(&self) -> Option<f64> {
        let r = self.requests();
        (r > 0).then(|| self.donor_hits as f64 / r as f64)
    }
}

/// Search parameters the trace itself does not record.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ReplayContext {
    pub population_size: usize,
    pub sample_size: usize,
}

impl Default for ReplayContext {
    fn default() -> Self {
        ReplayContext {
            population_size: 100,
            sample_size: 5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Step {
    Admit(usize),
    Request(usize),
}

struct Store {
    capacity: Option<usize>,
    stored: HashSet<u64>,
    /// Stored entries in insertion order, for eviction.
    order: VecDeque<u64>,
    ever_stored: HashSet<u64>,
    donated: HashSet<u64>,
    evictions: u64,
}

impl Store {
    fn new(capacity: Option<usize>) -> Self {
        Store {
            capacity,
            stored: HashSet::new(),
            order: VecDeque::new(),
            ever_stored: HashSet::new(),
            donated: HashSet::new(),
            evictions: 0,
        }
    }

    /// Stores `id`, evicting the oldest never-donated entry when full.
    /// Returns false when nothing can be evicted.
    fn store(&mut self, id: u64) -> bool {
        if let Some(cap) = self.capacity {
            if self.stored.len() >= cap {
                let Some(pos) = self.order.iter().position(|v| !self.donated.contains(v)) else {
                    return false;
                };
                let victim = self.order.remove(pos).expect("position is in range");
                self.stored.remove(&victim);
                self.evictions += 1;
            }
        }
        self.stored.insert(id);
        self.order.push_back(id);
        self.ever_stored.insert(id);
        true
    }
}

/// Replays `trace` under `policy`.
pub fn replay(
    trace: &[TraceEvent],
    policy: &CachePolicy,
    ctx: &ReplayContext,
) -> Result<CacheReport> {
    policy.validate()?;
    let position: HashMap<u64, usize> = trace
        .iter()
        .enumerate()
        .map(|(i, e)| (e.candidate_id, i))
        .collect();
    for ev in trace {
        if let Some(d) = ev.donor_id {
            if !position.contains_key(&d) {
                return Err(Error::MissingContext(format!(
                    "candidate {} names donor {d}, which is not in the trace",
                    ev.candidate_id
                )));
            }
        }
    }
    let needs_ranks = matches!(
        policy.kind,
        PolicyKind::SkipBottom | PolicyKind::ProbabilityThreshold { .. }
    );
    let residence = if needs_ranks {
        if ctx.sample_size == 0 || ctx.sample_size > ctx.population_size {
            return Err(Error::InvalidParams(format!(
                "sample size {} must lie in [1, population size {}]",
                ctx.sample_size, ctx.population_size
            )));
        }
        Some(replay_population(trace, ctx.population_size)?)
    } else {
        None
    };

    let mut steps: Vec<(f64, u8, u64, Step)> = Vec::with_capacity(trace.len() * 2);
    for (i, ev) in trace.iter().enumerate() {
        steps.push((ev.end_ts, 0, i as u64, Step::Admit(i)));
        if ev.donor_id.is_some() {
            steps.push((ev.begin_ts, 1, ev.candidate_id, Step::Request(i)));
        }
    }
    steps.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));

    let mut store = Store::new(policy.capacity);
    let mut report = CacheReport::default();
    // tier_threshold: (requesting candidate id, donor id) inside the window
    let mut recent: VecDeque<(u64, u64)> = VecDeque::new();
    let mut recent_counts: HashMap<u64, u64> = HashMap::new();

    for (_, _, _, step) in steps {
        match step {
            Step::Admit(i) => {
                let ev = &trace[i];
                let keep = match policy.kind {
                    PolicyKind::StoreAll => true,
                    PolicyKind::SkipBottom => {
                        let r = &residence.as_ref().expect("ranks computed")[i];
                        !r.bottom_for_life(ctx.sample_size as u64)
                    }
                    PolicyKind::ProbabilityThreshold { .. } => {
                        let r = &residence.as_ref().expect("ranks computed")[i];
                        let mut entry = RepoEntry {
                            candidate_id: ev.candidate_id,
                            sequence: ev.sequence.clone(),
                            quality: ev.quality,
                            stored: false,
                            donor_count: 0,
                        };
                        admit(
                            &mut entry,
                            policy,
                            &AdmissionContext {
                                rank: r.admission_rank,
                                population_len: r.admission_len as u64,
                                population_size: ctx.population_size as u64,
                                sample_size: ctx.sample_size as u64,
                                recent_donations: 0,
                            },
                        )
                    }
                    PolicyKind::TierThreshold { .. } => false,
                };
                if keep {
                    store.store(ev.candidate_id);
                }
            }
            Step::Request(i) => {
                let ev = &trace[i];
                let donor = ev.donor_id.expect("requests carry a donor");
                if store.stored.contains(&donor) {
                    report.donor_hits += 1;
                    store.donated.insert(donor);
                } else {
                    report.donor_misses += 1;
                    report.miss_penalty_prefix_slots += u64::from(ev.donor_prefix_len.unwrap_or(0));
                }
                if let PolicyKind::TierThreshold {
                    min_donations,
                    window,
                } = policy.kind
                {
                    while recent
                        .front()
                        .is_some_and(|&(c, _)| c + window <= ev.candidate_id)
                    {
                        let (_, d) = recent.pop_front().expect("checked");
                        *recent_counts.get_mut(&d).expect("counted") -= 1;
                    }
                    recent.push_back((ev.candidate_id, donor));
                    let count = recent_counts.entry(donor).or_default();
                    *count += 1;
                    if *count >= min_donations && !store.stored.contains(&donor) {
                        store.store(donor);
                    }
                }
            }
        }
    }

    report.stores_made = store.ever_stored.len() as u64;
    report.stores_skipped = trace.len() as u64 - report.stores_made;
    report.wasted_stores = store
        .ever_stored
        .iter()
        .filter(|id| !store.donated.contains(id))
        .count() as u64;
    report.evictions = store.evictions;
    Ok(report)
}

pub const REPORT_CSV_HEADER: &str = "policy,stores_made,stores_skipped,donor_hits,donor_misses,\
wasted_stores,miss_penalty_prefix_slots,evictions,hit_rate";

/// One CSV row per policy, with [`REPORT_CSV_HEADER`].
pub fn reports_csv(rows: &[(CachePolicy, CacheReport)]) -> String {
    let mut out = String::from(REPORT_CSV_HEADER);
    out.push('\n');
    for (policy, r) in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            policy.label(),
            r.stores_made,
            r.stores_skipped,
            r.donor_hits,
            r.donor_misses,
            r.wasted_stores,
            r.miss_penalty_prefix_slots,
            r.evictions,
            r.hit_rate().map_or(String::new(), |h| format!("{h:.6}"))
        );
    }
    out
}

pub fn summary(policy: &CachePolicy, r: &CacheReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "policy {}", policy.label());
    let _ = writeln!(out, "  stores made      {:>8}", r.stores_made);
    let _ = writeln!(out, "  stores skipped   {:>8}", r.stores_skipped);
    let _ = writeln!(out, "  donor hits       {:>8}", r.donor_hits);
    let _ = writeln!(out, "  donor misses     {:>8}", r.donor_misses);
    let _ = writeln!(out, "  wasted stores    {:>8}", r.wasted_stores);
    let _ = writeln!(out, "  slots lost       {:>8}", r.miss_penalty_prefix_slots);
    let _ = writeln!(out, "  evictions        {:>8}", r.evictions);
    match r.hit_rate() {
        Some(h) => {
            let _ = writeln!(out, "  hit rate         {:>8.4}", h);
        }
        None => out.push_str("  hit rate              n/a\n"),
    }
    out
}
