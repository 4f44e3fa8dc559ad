//! Reconstructs population membership and ranks from a trace.
//!
//! Trace order is completion order, which is exactly the order in which the
//! search appended to its population: stage-1 events append, stage-2 events
//! retire the oldest member and append.

use std::collections::{HashMap, VecDeque};

use crate::engine::beats;
use crate::error::{Error, Result};
use crate::trace::TraceEvent;

#[derive(Debug, Clone, PartialEq)]
pub struct Residence {
    pub candidate_id: u64,
    /// Position in the trace, also the insertion index.
    pub position: usize,
    /// Rank right after insertion (1 = worst) and the population size then.
    pub admission_rank: u64,
    pub admission_len: usize,
    /// Highest rank held in any full-population state, `None` if the
    /// population never filled while the entry was a member.
    pub max_full_rank: Option<u64>,
    /// Trace position at which the entry was retired.
    pub retired_at: Option<usize>,
}

impl Residence {
    /// True if the entry ranked below `sample_size` in every state in which
    /// a sampling could have happened.
    pub fn bottom_for_life(&self, sample_size: u64) -> bool {
        self.max_full_rank.is_some_and(|r| r < sample_size)
    }
}

/// Replays membership; one [`Residence`] per event, in trace order.
pub fn replay_population(events: &[TraceEvent], population_size: usize) -> Result<Vec<Residence>> {
    if population_size == 0 {
        return Err(Error::InvalidParams(
            "population size must be positive".into(),
        ));
    }
    let mut members: VecDeque<usize> = VecDeque::new();
    let mut out: Vec<Residence> = Vec::with_capacity(events.len());
    let mut by_rank: Vec<usize> = Vec::with_capacity(population_size);

    for (pos, ev) in events.iter().enumerate() {
        if ev.stage == 2 {
            let retired = members.pop_front().ok_or_else(|| {
                Error::MissingContext(format!(
                    "stage-2 candidate {} completes before any population exists",
                    ev.candidate_id
                ))
            })?;
            out[retired].retired_at = Some(pos);
        } else if members.len() >= population_size {
            return Err(Error::MissingContext(format!(
                "stage-1 candidate {} would overfill a population of {population_size}",
                ev.candidate_id
            )));
        }
        members.push_back(pos);

        // ranks: ascending selection order, rank = index + 1
        by_rank.clear();
        by_rank.extend(members.iter().copied());
        by_rank.sort_by(|&a, &b| {
            let (qa, qb) = (events[a].quality, events[b].quality);
            if beats(qa, a as u64, qb, b as u64) {
                std::cmp::Ordering::Greater
            } else if beats(qb, b as u64, qa, a as u64) {
                std::cmp::Ordering::Less
            } else {
                std::cmp::Ordering::Equal
            }
        });
        let full = members.len() >= population_size;
        out.push(Residence {
            candidate_id: ev.candidate_id,
            position: pos,
            admission_rank: 0,
            admission_len: members.len(),
            max_full_rank: None,
            retired_at: None,
        });
        for (i, &m) in by_rank.iter().enumerate() {
            let rank = i as u64 + 1;
            if m == pos {
                out[pos].admission_rank = rank;
            }
            if full {
                let r = &mut out[m].max_full_rank;
                *r = Some(r.map_or(rank, |x| x.max(rank)));
            }
        }
    }
    Ok(out)
}

/// Candidate ids ranked below `sample_size` for their whole residence.
pub fn bottom_for_life(
    events: &[TraceEvent],
    population_size: usize,
    sample_size: u64,
) -> Result<Vec<u64>> {
    Ok(replay_population(events, population_size)?
        .into_iter()
        .filter(|r| r.bottom_for_life(sample_size))
        .map(|r| r.candidate_id)
        .collect())
}

/// Parent of every stage-2 event with recorded samples: the best sampled
/// member in selection order. Keyed by candidate id.
pub fn parents_from_samples(events: &[TraceEvent]) -> Result<HashMap<u64, u64>> {
    let position: HashMap<u64, usize> = events
        .iter()
        .enumerate()
        .map(|(i, e)| (e.candidate_id, i))
        .collect();
    let mut parents = HashMap::new();
    for ev in events.iter().filter(|e| e.stage == 2) {
        let sampled = ev.sampled_ids.as_ref().ok_or_else(|| {
            Error::MissingContext(format!(
                "candidate {} has no sampled_ids; a debug trace is required",
                ev.candidate_id
            ))
        })?;
        let mut best: Option<usize> = None;
        for id in sampled {
            let &p = position.get(id).ok_or_else(|| {
                Error::MissingContext(format!("sampled id {id} is not in the trace"))
            })?;
            if best.is_none_or(|b| beats(events[p].quality, p as u64, events[b].quality, b as u64))
            {
                best = Some(p);
            }
        }
        if let Some(b) = best {
            parents.insert(ev.candidate_id, events[b].candidate_id);
        }
    }
    Ok(parents)
}
