//! Parallel regularized evolution under a discrete-event worker pool.
//!
//! Workers evaluate candidates for simulated durations. Every population
//! update (append, or retire-oldest plus append) happens inside one
//! completion handler, so each stage-2 sampling observes exactly
//! `population_size` members. Stage 2 starts generating children only after
//! all stage-1 evaluations have completed; workers freed earlier wait.
//!
//! All completions sharing one simulated instant are handled before any
//! worker freed at that instant receives new work.

use std::cmp::{Ordering, Reverse};
use std::collections::{BinaryHeap, VecDeque};

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::repo::{admit, AdmissionContext, CachePolicy, PolicyKind, RepoEntry, TransferRepo};
use crate::space::{self, ArchSequence, SpaceSpec};
use crate::trace::{canonical_float, TraceEvent};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DurationModel {
    /// Normal wall time, clamped below at `min`.
    Normal { mean: f64, stddev: f64, min: f64 },
    /// Log-normal wall time with the given mean and standard deviation.
    LogNormal { mean: f64, stddev: f64, min: f64 },
}

impl DurationModel {
    fn validate(&self) -> Result<()> {
        let (DurationModel::Normal { mean, stddev, min }
        | DurationModel::LogNormal { mean, stddev, min }) = *self;
        if !(mean > 0.0 && mean.is_finite() && stddev >= 0.0 && stddev.is_finite() && min > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "duration needs mean > 0, stddev >= 0, min > 0 (got {mean}, {stddev}, {min})"
            )));
        }
        Ok(())
    }

    pub fn mean(&self) -> f64 {
        match *self {
            DurationModel::Normal { mean, .. } | DurationModel::LogNormal { mean, .. } => mean,
        }
    }

    pub fn stddev(&self) -> f64 {
        match *self {
            DurationModel::Normal { stddev, .. } | DurationModel::LogNormal { stddev, .. } => {
                stddev
            }
        }
    }

    fn sampler(&self) -> DurationSampler {
        match *self {
            DurationModel::Normal { mean, stddev, min } => {
                DurationSampler::Normal(Normal::new(mean, stddev).expect("validated"), min)
            }
            DurationModel::LogNormal { mean, stddev, min } => {
                let s2 = (1.0 + (stddev / mean).powi(2)).ln();
                let mu = mean.ln() - s2 / 2.0;
                DurationSampler::LogNormal(LogNormal::new(mu, s2.sqrt()).expect("validated"), min)
            }
        }
    }
}

enum DurationSampler {
    Normal(Normal<f64>, f64),
    LogNormal(LogNormal<f64>, f64),
}

impl DurationSampler {
    fn sample<R: Rng>(&self, rng: &mut R) -> f64 {
        match self {
            DurationSampler::Normal(d, min) => d.sample(rng).max(*min),
            DurationSampler::LogNormal(d, min) => d.sample(rng).max(*min),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case", deny_unknown_fields)]
pub enum SchedulingMode {
    Continuous,
    /// Hold freed workers until `wait_for` of them are idle, then assign all.
    Quanta {
        wait_for: usize,
    },
}

impl SchedulingMode {
    fn wait_for(&self) -> usize {
        match *self {
            SchedulingMode::Continuous => 1,
            SchedulingMode::Quanta { wait_for } => wait_for,
        }
    }
}

/// Which stored models a child may take its prefix from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DonorScope {
    /// Current population members only.
    #[default]
    Population,
    /// Every stored model evaluated so far.
    History,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SearchConfig {
    pub total_candidates: usize,
    pub population_size: usize,
    pub sample_size: usize,
    pub num_workers: usize,
    pub duration: DurationModel,
    pub scheduling: SchedulingMode,
    pub transfer_enabled: bool,
    #[serde(default)]
    pub donor_scope: DonorScope,
    #[serde(default = "store_all")]
    pub admission: CachePolicy,
    /// Largest quality gain a full-length transfer can add; 0 disables it.
    #[serde(default)]
    pub transfer_bonus_max: f64,
    pub rng_seed: u64,
    pub epochs: u32,
    /// Record sampled ids and mutation index for every stage-2 event.
    #[serde(default)]
    pub debug_trace: bool,
}

fn store_all() -> CachePolicy {
    CachePolicy::STORE_ALL
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            total_candidates: 1000,
            population_size: 100,
            sample_size: 5,
            num_workers: 25,
            duration: DurationModel::Normal {
                mean: 60.0,
                stddev: 10.0,
                min: 1.0,
            },
            scheduling: SchedulingMode::Continuous,
            transfer_enabled: true,
            donor_scope: DonorScope::Population,
            admission: CachePolicy::STORE_ALL,
            transfer_bonus_max: 0.0,
            rng_seed: 0,
            epochs: 50,
            debug_trace: false,
        }
    }
}

impl SearchConfig {
    pub fn validate(&self) -> Result<()> {
        self.validate_with(true)
    }

    fn validate_with(&self, strict: bool) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        let (s, p, n) = (
            self.sample_size,
            self.population_size,
            self.total_candidates,
        );
        if s == 0 || p == 0 || n == 0 || self.num_workers == 0 {
            return bad("sizes and worker count must be positive".into());
        }
        if strict && !(s < p && p < n) {
            return bad(format!(
                "need sample_size < population_size < total_candidates (got {s}, {p}, {n})"
            ));
        }
        if !strict && !(s <= p && p <= n) {
            return bad(format!(
                "need sample_size <= population_size <= total_candidates (got {s}, {p}, {n})"
            ));
        }
        if let SchedulingMode::Quanta { wait_for } = self.scheduling {
            if wait_for == 0 || wait_for > self.num_workers {
                return bad(format!(
                    "quanta wait_for must lie in [1, num_workers={}] (got {wait_for})",
                    self.num_workers
                ));
            }
        }
        self.duration.validate()?;
        self.admission.validate()?;
        if matches!(self.admission.kind, PolicyKind::TierThreshold { .. }) {
            return bad(
                "tier_threshold admission depends on future requests; use it in replay".into(),
            );
        }
        if !(self.transfer_bonus_max >= 0.0 && self.transfer_bonus_max <= 1.0) {
            return bad("transfer_bonus_max must lie in [0, 1]".into());
        }
        if self.epochs == 0 {
            return bad("epochs must be positive".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PopulationEntry {
    pub candidate_id: u64,
    pub sequence: ArchSequence,
    pub quality: f64,
    pub insertion_index: u64,
}

impl PopulationEntry {
    /// Strict selection order: higher quality wins, older wins ties.
    pub fn beats(&self, other: &PopulationEntry) -> bool {
        beats(
            self.quality,
            self.insertion_index,
            other.quality,
            other.insertion_index,
        )
    }
}

pub(crate) fn beats(qa: f64, ia: u64, qb: f64, ib: u64) -> bool {
    qa > qb || (qa == qb && ia < ib)
}

/// FIFO population with monotone insertion indices.
#[derive(Debug, Clone, Default)]
pub struct Population {
    entries: VecDeque<PopulationEntry>,
    next_index: u64,
}

impl Population {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn append(&mut self, candidate_id: u64, sequence: ArchSequence, quality: f64) -> u64 {
        let insertion_index = self.next_index;
        self.next_index += 1;
        self.entries.push_back(PopulationEntry {
            candidate_id,
            sequence,
            quality,
            insertion_index,
        });
        insertion_index
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &PopulationEntry> {
        self.entries.iter()
    }

    pub fn get(&self, i: usize) -> Option<&PopulationEntry> {
        self.entries.get(i)
    }

    /// 1 + the number of members `entry` beats; 1 is the worst.
    pub fn rank_of(&self, entry: &PopulationEntry) -> u64 {
        1 + self.entries.iter().filter(|o| entry.beats(o)).count() as u64
    }
}

/// Removes the member with the smallest insertion index.
pub fn retire_oldest(population: &mut Population) -> Result<PopulationEntry> {
    population
        .entries
        .pop_front()
        .ok_or(Error::PopulationTooSmall { len: 0, need: 1 })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Selection {
    pub parent: PopulationEntry,
    /// Candidate ids of the sampled members, ascending.
    pub sampled_ids: Vec<u64>,
}

/// Best member of a uniform sample of `sample_size` drawn without replacement.
pub fn select_parent<R: Rng + ?Sized>(
    population: &Population,
    sample_size: usize,
    rng: &mut R,
) -> Result<Selection> {
    if sample_size == 0 || population.len() < sample_size {
        return Err(Error::PopulationTooSmall {
            len: population.len(),
            need: sample_size.max(1),
        });
    }
    let picks = index::sample(rng, population.len(), sample_size);
    let mut best: Option<&PopulationEntry> = None;
    let mut sampled_ids = Vec::with_capacity(sample_size);
    for i in picks.iter() {
        let e = &population.entries[i];
        sampled_ids.push(e.candidate_id);
        if best.is_none_or(|b| e.beats(b)) {
            best = Some(e);
        }
    }
    sampled_ids.sort_unstable();
    Ok(Selection {
        parent: best.expect("sample is nonempty").clone(),
        sampled_ids,
    })
}

/// Idle time between a worker becoming free and receiving its next candidate.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct DelayReport {
    /// Every wait after the initial dispatch, in dispatch order.
    pub waits: Vec<f64>,
    /// Summed idle wait per worker.
    pub per_worker: Vec<f64>,
    pub mean_wait: f64,
}

#[derive(Debug, Clone, Default)]
pub struct RunStats {
    /// Population size seen by every stage-2 sampling.
    pub sampling_population_sizes: Vec<usize>,
    /// Insertion indices in retirement order.
    pub retired_insertion_indices: Vec<u64>,
    /// Parent candidate id, indexed by candidate id (`None` in stage 1).
    pub parents: Vec<Option<u64>>,
    /// Sampled candidate ids, indexed by candidate id (empty in stage 1).
    pub samples: Vec<Vec<u64>>,
    /// Repository state at the end of the run.
    pub repo: TransferRepo,
}

#[derive(Debug, Clone)]
pub struct SearchOutcome {
    pub trace: Vec<TraceEvent>,
    pub delay: DelayReport,
    pub stats: RunStats,
}

/// Runs the search in whatever scheduling mode the config names.
pub fn run_search(config: &SearchConfig, spec: &SpaceSpec) -> Result<SearchOutcome> {
    config.validate()?;
    simulate(config, spec)
}

/// Runs a quanta-scheduled search; errors if the config is continuous.
pub fn simulate_quanta(config: &SearchConfig, spec: &SpaceSpec) -> Result<SearchOutcome> {
    if !matches!(config.scheduling, SchedulingMode::Quanta { .. }) {
        return Err(Error::InvalidConfig(
            "simulate_quanta needs quanta scheduling".into(),
        ));
    }
    run_search(config, spec)
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Instant(f64);

impl Eq for Instant {}

impl PartialOrd for Instant {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Instant {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0)
    }
}

struct Job {
    worker: usize,
    begin: f64,
    end: f64,
    sequence: ArchSequence,
    quality: f64,
    stage: u8,
    donor: Option<(u64, u32)>,
    mutation_index: Option<u32>,
    sampled_ids: Option<Vec<u64>>,
}

struct Simulator<'a> {
    config: &'a SearchConfig,
    spec: &'a SpaceSpec,
    search_rng: ChaCha8Rng,
    duration_rng: ChaCha8Rng,
    durations: DurationSampler,
    population: Population,
    repo: TransferRepo,
    /// Insertion index by candidate id, once evaluated.
    insertion_of: Vec<Option<u64>>,
    jobs: Vec<Option<Job>>,
    queue: BinaryHeap<Reverse<(Instant, u64)>>,
    idle: VecDeque<(usize, f64)>,
    dispatched: usize,
    completed: usize,
    trace: Vec<TraceEvent>,
    delay: DelayReport,
    stats: RunStats,
}

fn simulate(config: &SearchConfig, spec: &SpaceSpec) -> Result<SearchOutcome> {
    spec.validate()?;
    if !spec.epoch_levels.contains(&config.epochs) {
        return Err(Error::UnknownEpochs(config.epochs));
    }
    let mut search_rng = ChaCha8Rng::seed_from_u64(config.rng_seed);
    search_rng.set_stream(0);
    let mut duration_rng = ChaCha8Rng::seed_from_u64(config.rng_seed);
    duration_rng.set_stream(1);

    let n = config.total_candidates;
    let mut sim = Simulator {
        config,
        spec,
        search_rng,
        duration_rng,
        durations: config.duration.sampler(),
        population: Population::new(),
        repo: TransferRepo::new(),
        insertion_of: vec![None; n],
        jobs: (0..n).map(|_| None).collect(),
        queue: BinaryHeap::new(),
        idle: VecDeque::new(),
        dispatched: 0,
        completed: 0,
        trace: Vec::with_capacity(n),
        delay: DelayReport {
            per_worker: vec![0.0; config.num_workers],
            ..DelayReport::default()
        },
        stats: RunStats {
            parents: vec![None; n],
            samples: vec![Vec::new(); n],
            ..RunStats::default()
        },
    };
    sim.run()?;

    let Simulator {
        trace,
        mut delay,
        mut stats,
        repo,
        ..
    } = sim;
    delay.mean_wait = if delay.waits.is_empty() {
        0.0
    } else {
        delay.waits.iter().sum::<f64>() / delay.waits.len() as f64
    };
    stats.repo = repo;
    Ok(SearchOutcome {
        trace,
        delay,
        stats,
    })
}

impl Simulator<'_> {
    fn run(&mut self) -> Result<()> {
        for worker in 0..self.config.num_workers {
            if self.can_generate() {
                self.dispatch(worker, 0.0)?;
            } else {
                self.idle.push_back((worker, 0.0));
            }
        }
        while let Some(Reverse((Instant(now), _))) = self.queue.peek().copied() {
            while let Some(&Reverse((Instant(t), id))) = self.queue.peek() {
                if t != now {
                    break;
                }
                self.queue.pop();
                self.complete(id)?;
            }
            self.assign_idle(now)?;
        }
        Ok(())
    }

    fn can_generate(&self) -> bool {
        let (p, n) = (self.config.population_size, self.config.total_candidates);
        self.dispatched < p || (self.completed >= p && self.dispatched < n)
    }

    fn assign_idle(&mut self, now: f64) -> Result<()> {
        if self.idle.len() < self.config.scheduling.wait_for() {
            return Ok(());
        }
        while self.can_generate() {
            let Some((worker, since)) = self.idle.pop_front() else {
                break;
            };
            let wait = now - since;
            self.delay.waits.push(wait);
            self.delay.per_worker[worker] += wait;
            self.dispatch(worker, now)?;
        }
        Ok(())
    }

    fn dispatch(&mut self, worker: usize, now: f64) -> Result<()> {
        let candidate_id = self.dispatched as u64;
        self.dispatched += 1;
        let mut job = if (candidate_id as usize) < self.config.population_size {
            let sequence = space::sample_uniform(self.spec, &mut self.search_rng)?;
            Job {
                worker,
                begin: now,
                end: 0.0,
                sequence,
                quality: 0.0,
                stage: 1,
                donor: None,
                mutation_index: None,
                sampled_ids: None,
            }
        } else {
            self.generate_child(candidate_id, worker, now)?
        };

        let mut quality = space::quality(&job.sequence, self.config.epochs, self.spec)?;
        if let (Some((_, len)), true) = (job.donor, self.config.transfer_bonus_max > 0.0) {
            let frac = len as f64 / self.spec.num_slots as f64;
            quality =
                canonical_float((quality + self.config.transfer_bonus_max * frac.sqrt()).min(1.0));
        }
        job.quality = quality;
        job.end = now + self.durations.sample(&mut self.duration_rng);
        self.queue.push(Reverse((Instant(job.end), candidate_id)));
        self.jobs[candidate_id as usize] = Some(job);
        Ok(())
    }

    fn generate_child(&mut self, candidate_id: u64, worker: usize, now: f64) -> Result<Job> {
        let sel = select_parent(
            &self.population,
            self.config.sample_size,
            &mut self.search_rng,
        )?;
        self.stats
            .sampling_population_sizes
            .push(self.population.len());
        let (sequence, index) =
            space::mutate(&sel.parent.sequence, self.spec, &mut self.search_rng)?;

        let donor = if self.config.transfer_enabled {
            self.find_donor(&sequence, &sel.parent)
        } else {
            None
        };
        if let Some((id, _)) = donor {
            self.repo.record_donation(id);
        }

        let cid = candidate_id as usize;
        self.stats.parents[cid] = Some(sel.parent.candidate_id);
        self.stats.samples[cid] = sel.sampled_ids.clone();
        Ok(Job {
            worker,
            begin: now,
            end: 0.0,
            sequence,
            quality: 0.0,
            stage: 2,
            donor,
            mutation_index: self.config.debug_trace.then_some(index as u32),
            sampled_ids: self.config.debug_trace.then_some(sel.sampled_ids),
        })
    }

    /// Longest-prefix donor among stored models at least as good as the parent
    /// in selection order; the parent itself qualifies.
    fn find_donor(&self, child: &ArchSequence, parent: &PopulationEntry) -> Option<(u64, u32)> {
        let eligible = |id: u64| -> bool {
            let Some(e) = self.repo.get(id) else {
                return false;
            };
            let Some(ins) = self.insertion_of[id as usize] else {
                return false;
            };
            id == parent.candidate_id
                || beats(e.quality, ins, parent.quality, parent.insertion_index)
        };
        let found = match self.config.donor_scope {
            DonorScope::Population => self.repo.find_donor_among(
                child,
                self.population
                    .iter()
                    .map(|e| e.candidate_id)
                    .filter(|&id| eligible(id)),
            ),
            DonorScope::History => self.repo.find_donor_among(
                child,
                self.repo
                    .stored()
                    .map(|e| e.candidate_id)
                    .filter(|&id| eligible(id))
                    .collect::<Vec<_>>(),
            ),
        };
        found.map(|(e, len)| (e.candidate_id, len as u32))
    }

    fn complete(&mut self, candidate_id: u64) -> Result<()> {
        let job = self.jobs[candidate_id as usize]
            .take()
            .expect("job in flight");
        self.completed += 1;

        // atomic population update
        if job.stage == 2 {
            let retired = retire_oldest(&mut self.population)?;
            self.stats
                .retired_insertion_indices
                .push(retired.insertion_index);
        }
        let insertion = self
            .population
            .append(candidate_id, job.sequence.clone(), job.quality);
        self.insertion_of[candidate_id as usize] = Some(insertion);

        let newest = self
            .population
            .get(self.population.len() - 1)
            .expect("just appended");
        let ctx = AdmissionContext {
            rank: self.population.rank_of(newest),
            population_len: self.population.len() as u64,
            population_size: self.config.population_size as u64,
            sample_size: self.config.sample_size as u64,
            recent_donations: 0,
        };
        let mut entry = RepoEntry {
            candidate_id,
            sequence: job.sequence.clone(),
            quality: job.quality,
            stored: false,
            donor_count: 0,
        };
        admit(&mut entry, &self.config.admission, &ctx);
        self.repo.insert(entry);

        self.trace.push(TraceEvent {
            candidate_id,
            begin_ts: canonical_float(job.begin),
            end_ts: canonical_float(job.end),
            worker_id: job.worker as u32,
            sequence: job.sequence,
            quality: job.quality,
            stage: job.stage,
            donor_id: job.donor.map(|d| d.0),
            donor_prefix_len: job.donor.map(|d| d.1),
            mutation_index: job.mutation_index,
            sampled_ids: job.sampled_ids,
        });
        self.idle.push_back((job.worker, job.end));
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pop_from(qualities: &[f64]) -> Population {
        let mut pop = Population::new();
        for (i, &q) in qualities.iter().enumerate() {
            pop.append(i as u64, ArchSequence::new(vec![0]), q);
        }
        pop
    }

    #[test]
    fn tie_goes_to_oldest() {
        let pop = pop_from(&[0.5; 5]);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let sel = select_parent(&pop, 5, &mut rng).unwrap();
        assert_eq!(sel.parent.insertion_index, 0);
        assert_eq!(sel.sampled_ids, vec![0, 1, 2, 3, 4]);
    }

    #[test]
    fn global_best_wins_when_sampled() {
        let pop = pop_from(&[0.1, 0.9, 0.3, 0.2, 0.4, 0.5]);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..200 {
            let sel = select_parent(&pop, 3, &mut rng).unwrap();
            if sel.sampled_ids.contains(&1) {
                assert_eq!(sel.parent.candidate_id, 1);
            }
        }
        assert!(select_parent(&pop, 7, &mut rng).is_err());
    }

    #[test]
    fn fifo_retirement() {
        let mut pop = pop_from(&[0.1, 0.2, 0.3]);
        assert_eq!(retire_oldest(&mut pop).unwrap().candidate_id, 0);
        pop.append(3, ArchSequence::new(vec![0]), 0.0);
        assert_eq!(pop.len(), 3);
        assert_eq!(retire_oldest(&mut pop).unwrap().candidate_id, 1);
        assert!(retire_oldest(&mut Population::new()).is_err());
    }

    #[test]
    fn ranks() {
        let pop = pop_from(&[0.5, 0.1, 0.5, 0.9]);
        let ranks: Vec<u64> = pop.iter().map(|e| pop.rank_of(e)).collect();
        assert_eq!(ranks, vec![3, 1, 2, 4]);
    }

    #[test]
    fn degenerate_population_equals_total() {
        let config = SearchConfig {
            total_candidates: 100,
            ..SearchConfig::default()
        };
        assert!(config.validate().is_err());
        config.validate_with(false).unwrap();
        let out = simulate(&config, &SpaceSpec::default()).unwrap();
        assert_eq!(out.trace.len(), 100);
        assert!(out
            .trace
            .iter()
            .all(|e| e.stage == 1 && e.donor_id.is_none()));
        assert!(out.stats.retired_insertion_indices.is_empty());
    }

    #[test]
    fn lockstep_end_times() {
        let config = SearchConfig {
            duration: DurationModel::Normal {
                mean: 60.0,
                stddev: 0.0,
                min: 1.0,
            },
            ..SearchConfig::default()
        };
        let out = run_search(&config, &SpaceSpec::default()).unwrap();
        let mut ends: Vec<f64> = out.trace.iter().map(|e| e.end_ts).collect();
        ends.dedup();
        assert_eq!(ends.len(), 40);
    }

    #[test]
    fn config_validation() {
        let ok = SearchConfig::default();
        ok.validate().unwrap();
        for bad in [
            SearchConfig {
                sample_size: 100,
                ..ok.clone()
            },
            SearchConfig {
                population_size: 1000,
                ..ok.clone()
            },
            SearchConfig {
                num_workers: 0,
                ..ok.clone()
            },
            SearchConfig {
                scheduling: SchedulingMode::Quanta { wait_for: 26 },
                ..ok.clone()
            },
            SearchConfig {
                scheduling: SchedulingMode::Quanta { wait_for: 0 },
                ..ok.clone()
            },
            SearchConfig {
                admission: CachePolicy::new(PolicyKind::TierThreshold {
                    min_donations: 5,
                    window: 100,
                }),
                ..ok.clone()
            },
            SearchConfig {
                duration: DurationModel::Normal {
                    mean: 60.0,
                    stddev: 1.0,
                    min: 0.0,
                },
                ..ok.clone()
            },
        ] {
            assert!(bad.validate().is_err(), "{bad:?}");
        }
        let wrong_epochs = SearchConfig {
            epochs: 7,
            ..ok.clone()
        };
        assert!(run_search(&wrong_epochs, &SpaceSpec::default()).is_err());
        assert!(simulate_quanta(&ok, &SpaceSpec::default()).is_err());
    }

    #[test]
    fn lognormal_durations_have_requested_mean() {
        let model = DurationModel::LogNormal {
            mean: 60.0,
            stddev: 10.0,
            min: 1.0,
        };
        let sampler = model.sampler();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let n = 20_000;
        let mean = (0..n).map(|_| sampler.sample(&mut rng)).sum::<f64>() / n as f64;
        assert!((mean - 60.0).abs() < 0.5, "{mean}");
    }
}
