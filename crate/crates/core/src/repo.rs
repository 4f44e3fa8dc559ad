//! Model repository answering greedy longest-common-prefix donor queries.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::prob::transfer_prob_bound;
use crate::space::ArchSequence;

#[derive(Debug, Clone, PartialEq)]
pub struct RepoEntry {
    pub candidate_id: u64,
    pub sequence: ArchSequence,
    pub quality: f64,
    pub stored: bool,
    pub donor_count: u64,
}

/// Admission and eviction rule for the repository.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PolicyKind {
    StoreAll,
    /// Skip members that cannot be the best of any sample.
    SkipBottom,
    /// Skip members whose selection-probability bound is below `epsilon`.
    ProbabilityThreshold {
        epsilon: f64,
    },
    /// Store once a member was requested `min_donations` times within the
    /// trailing `window` requests.
    TierThreshold {
        min_donations: u64,
        window: u64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CachePolicy {
    #[serde(flatten)]
    pub kind: PolicyKind,
    /// Maximum stored entries; the oldest never-donated entry is evicted first.
    #[serde(default)]
    pub capacity: Option<usize>,
}

impl CachePolicy {
    pub const STORE_ALL: CachePolicy = CachePolicy {
        kind: PolicyKind::StoreAll,
        capacity: None,
    };

    pub fn new(kind: PolicyKind) -> Self {
        CachePolicy {
            kind,
            capacity: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self.kind {
            PolicyKind::ProbabilityThreshold { epsilon } if !(epsilon > 0.0 && epsilon < 1.0) => {
                Err(Error::InvalidParams(format!(
                    "epsilon {epsilon} must lie in (0, 1)"
                )))
            }
            PolicyKind::TierThreshold {
                min_donations,
                window,
            } if min_donations == 0 || window < min_donations => {
                Err(Error::InvalidParams(format!(
                "tier threshold needs 1 <= min_donations <= window (got {min_donations}, {window})"
            )))
            }
            _ if self.capacity == Some(0) => {
                Err(Error::InvalidParams("capacity must be positive".into()))
            }
            _ => Ok(()),
        }
    }

    /// Short label, also the CLI spelling: `store-all`, `skip-bottom`,
    /// `prob:<eps>`, `tier:<min>:<window>`, with an optional `@<capacity>`.
    pub fn label(&self) -> String {
        let base = match self.kind {
            PolicyKind::StoreAll => "store-all".to_string(),
            PolicyKind::SkipBottom => "skip-bottom".to_string(),
            PolicyKind::ProbabilityThreshold { epsilon } => format!("prob:{epsilon}"),
            PolicyKind::TierThreshold {
                min_donations,
                window,
            } => format!("tier:{min_donations}:{window}"),
        };
        match self.capacity {
            Some(c) => format!("{base}@{c}"),
            None => base,
        }
    }
}

impl std::str::FromStr for CachePolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidParams(format!("unrecognized cache policy `{s}`"));
        let (body, capacity) = match s.split_once('@') {
            Some((b, c)) => (b, Some(c.parse().map_err(|_| bad())?)),
            None => (s, None),
        };
        let parts: Vec<&str> = body.split(':').collect();
        let kind = match parts.as_slice() {
            ["store-all"] => PolicyKind::StoreAll,
            ["skip-bottom"] => PolicyKind::SkipBottom,
            ["prob", eps] => PolicyKind::ProbabilityThreshold {
                epsilon: eps.parse().map_err(|_| bad())?,
            },
            ["tier", m, w] => PolicyKind::TierThreshold {
                min_donations: m.parse().map_err(|_| bad())?,
                window: w.parse().map_err(|_| bad())?,
            },
            _ => return Err(bad()),
        };
        let policy = CachePolicy { kind, capacity };
        policy.validate()?;
        Ok(policy)
    }
}

/// What an online admission decision may look at.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdmissionContext {
    /// Rank in the current population, 1 = worst.
    pub rank: u64,
    pub population_len: u64,
    /// Configured population size; below it the population is still seeding.
    pub population_size: u64,
    pub sample_size: u64,
    /// Requests for this entry within the policy's trailing window so far.
    pub recent_donations: u64,
}

impl AdmissionContext {
    fn population_full(&self) -> bool {
        self.population_len >= self.population_size
    }
}

/// Online admission decision for a freshly evaluated entry.
///
/// While the population is still seeding, rank is not yet meaningful and
/// every rank-based policy admits.
pub fn admit(entry: &mut RepoEntry, policy: &CachePolicy, ctx: &AdmissionContext) -> bool {
    let decision = match policy.kind {
        PolicyKind::StoreAll => true,
        PolicyKind::SkipBottom => !ctx.population_full() || ctx.rank >= ctx.sample_size,
        PolicyKind::ProbabilityThreshold { epsilon } => {
            !ctx.population_full()
                || transfer_prob_bound(ctx.population_len, ctx.rank, ctx.sample_size)
                    .map(|b| b >= epsilon)
                    .unwrap_or(true)
        }
        PolicyKind::TierThreshold { min_donations, .. } => ctx.recent_donations >= min_donations,
    };
    entry.stored = decision;
    decision
}

/// Number of leading slots two sequences share.
pub fn transferable_prefix(child: &ArchSequence, parent: &ArchSequence) -> Result<usize> {
    if child.len() != parent.len() {
        return Err(Error::LengthMismatch {
            left: child.len(),
            right: parent.len(),
        });
    }
    Ok(common_prefix_len(child, parent))
}

fn common_prefix_len(a: &ArchSequence, b: &ArchSequence) -> usize {
    a.choices()
        .iter()
        .zip(b.choices())
        .take_while(|(x, y)| x == y)
        .count()
}

/// Best donor among `candidates`: longest common prefix, then higher quality,
/// then lower candidate id. `None` if nothing shares at least one slot.
pub fn best_donor<'a>(
    child: &ArchSequence,
    candidates: impl IntoIterator<Item = &'a RepoEntry>,
) -> Option<(&'a RepoEntry, usize)> {
    let mut best: Option<(&RepoEntry, usize)> = None;
    for e in candidates {
        let len = common_prefix_len(child, &e.sequence);
        if len == 0 {
            continue;
        }
        let better = match best {
            None => true,
            Some((b, blen)) => {
                len > blen
                    || (len == blen
                        && (e.quality > b.quality
                            || (e.quality == b.quality && e.candidate_id < b.candidate_id)))
            }
        };
        if better {
            best = Some((e, len));
        }
    }
    best
}

/// Evaluated candidates, indexed by candidate id.
#[derive(Debug, Clone, Default)]
pub struct TransferRepo {
    entries: Vec<Option<RepoEntry>>,
}

impl TransferRepo {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, entry: RepoEntry) {
        let id = entry.candidate_id as usize;
        if self.entries.len() <= id {
            self.entries.resize(id + 1, None);
        }
        self.entries[id] = Some(entry);
    }

    pub fn get(&self, id: u64) -> Option<&RepoEntry> {
        self.entries.get(id as usize).and_then(Option::as_ref)
    }

    pub fn entries(&self) -> impl Iterator<Item = &RepoEntry> {
        self.entries.iter().flatten()
    }

    pub fn stored(&self) -> impl Iterator<Item = &RepoEntry> {
        self.entries().filter(|e| e.stored)
    }

    /// Longest-common-prefix donor among all stored entries.
    pub fn find_donor(&self, child: &ArchSequence) -> Option<(&RepoEntry, usize)> {
        best_donor(child, self.stored())
    }

    /// Like [`find_donor`](Self::find_donor), restricted to the listed ids.
    pub fn find_donor_among(
        &self,
        child: &ArchSequence,
        ids: impl IntoIterator<Item = u64>,
    ) -> Option<(&RepoEntry, usize)> {
        best_donor(
            child,
            ids.into_iter()
                .filter_map(|id| self.get(id))
                .filter(|e| e.stored),
        )
    }

    pub fn record_donation(&mut self, id: u64) {
        if let Some(Some(e)) = self.entries.get_mut(id as usize) {
            e.donor_count += 1;
        }
    }

    pub fn total_donations(&self) -> u64 {
        self.entries().map(|e| e.donor_count).sum()
    }
}
