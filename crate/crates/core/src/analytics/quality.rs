//! Quality over time: cumulative maximum, improvement steps, and the delay
//! between a new best model appearing and its first use as a parent.

use crate::analytics::population::{parents_from_samples, replay_population};
use crate::error::Result;
use crate::trace::TraceEvent;

#[derive(Debug, Clone, PartialEq)]
pub struct ImprovementStep {
    pub index: usize,
    /// `None` for the first event.
    pub old_max: Option<f64>,
    pub new_max: f64,
}

impl ImprovementStep {
    pub fn magnitude(&self) -> Option<f64> {
        self.old_max.map(|old| self.new_max - old)
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct QualitySeries {
    pub qualities: Vec<f64>,
    pub cumulative_max: Vec<f64>,
    pub steps: Vec<ImprovementStep>,
}

pub fn quality_series(events: &[TraceEvent]) -> QualitySeries {
    let mut series = QualitySeries::default();
    let mut best: Option<f64> = None;
    for (i, ev) in events.iter().enumerate() {
        series.qualities.push(ev.quality);
        if best.is_none_or(|b| ev.quality > b) {
            series.steps.push(ImprovementStep {
                index: i,
                old_max: best,
                new_max: ev.quality,
            });
            best = Some(ev.quality);
        }
        series.cumulative_max.push(best.expect("set above"));
    }
    series
}

/// Mean step size over the first and the second half of the improvement
/// steps (the initial event excluded).
pub fn improvement_halves(series: &QualitySeries) -> Option<(f64, f64)> {
    let mags: Vec<f64> = series.steps.iter().filter_map(|s| s.magnitude()).collect();
    if mags.len() < 2 {
        return None;
    }
    let mid = mags.len() / 2;
    let mean = |xs: &[f64]| xs.iter().sum::<f64>() / xs.len() as f64;
    Some((mean(&mags[..mid]), mean(&mags[mid..])))
}

/// One cumulative-best model and the samplings it waited through.
#[derive(Debug, Clone, PartialEq)]
pub struct DonorWait {
    pub candidate_id: u64,
    /// Samplings after entry while the model remained the population's best,
    /// up to and including its selection.
    pub trials: u64,
    /// Selected as parent while still the population's best.
    pub selected: bool,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct DonorDelayReport {
    pub waits: Vec<DonorWait>,
}

impl DonorDelayReport {
    /// Mean trials until selection, over models that were selected.
    pub fn mean_wait(&self) -> Option<f64> {
        let sel: Vec<u64> = self
            .waits
            .iter()
            .filter(|w| w.selected)
            .map(|w| w.trials)
            .collect();
        (!sel.is_empty()).then(|| sel.iter().sum::<u64>() as f64 / sel.len() as f64)
    }

    /// Geometric-mean estimate that also counts trials of models dethroned
    /// or retired before selection: total trials over total selections.
    pub fn censored_estimate(&self) -> Option<f64> {
        let selected = self.waits.iter().filter(|w| w.selected).count();
        let trials: u64 = self.waits.iter().map(|w| w.trials).sum();
        (selected > 0).then(|| trials as f64 / selected as f64)
    }

    pub fn merge(&mut self, other: DonorDelayReport) {
        self.waits.extend(other.waits);
    }
}

/// Needs a debug trace (sampled ids) to recover parents.
pub fn donor_delay(events: &[TraceEvent], population_size: usize) -> Result<DonorDelayReport> {
    let parents = parents_from_samples(events)?;
    let residence = replay_population(events, population_size)?;

    // stage-2 samplings in dispatch order
    let mut samplings: Vec<&TraceEvent> = events.iter().filter(|e| e.stage == 2).collect();
    samplings.sort_by_key(|e| e.candidate_id);

    let steps = quality_series(events).steps;
    let mut report = DonorDelayReport::default();
    for (k, step) in steps.iter().enumerate() {
        let model = &events[step.index];
        let entered = model.end_ts;
        let dethroned = steps.get(k + 1).map(|s| events[s.index].end_ts);
        let retired = residence[step.index].retired_at.map(|p| events[p].end_ts);
        let mut wait = DonorWait {
            candidate_id: model.candidate_id,
            trials: 0,
            selected: false,
        };
        for s in samplings.iter().filter(|s| s.begin_ts >= entered) {
            if dethroned.is_some_and(|t| s.begin_ts >= t)
                || retired.is_some_and(|t| s.begin_ts >= t)
            {
                break;
            }
            wait.trials += 1;
            if parents.get(&s.candidate_id) == Some(&model.candidate_id) {
                wait.selected = true;
                break;
            }
        }
        report.waits.push(wait);
    }
    Ok(report)
}
