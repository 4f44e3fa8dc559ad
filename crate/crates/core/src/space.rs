//! Architecture search space, synthetic quality oracle and mutation operator.
//!
//! A candidate architecture is a fixed-length sequence of per-slot choices.
//! Validity is expressed as a list of forbidden prefixes: any sequence that
//! starts with one of them is not a legal model.
//!
//! The quality oracle replaces real training with a keyed-hash lookup. Each
//! call hashes `(quality_seed, epochs, prefix)` into deterministic normal
//! effects and combines them into a validation-accuracy-like value in
//! `[0, 1]`. A share of the variance (`prefix_share`) is attached to the
//! sequence's prefixes, so that models sharing a long prefix have correlated
//! quality; the remainder is an independent per-sequence draw. With
//! `prefix_share = 0` every sequence gets an independent normal value.

use std::fmt;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::prob::inverse_normal_cdf;
use crate::trace::canonical_float;

/// Consecutive rejections tolerated before a draw is declared degenerate.
pub const MAX_REJECTIONS: u64 = 1_000_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpaceSpec {
    pub num_slots: usize,
    pub choices_per_slot: Vec<u32>,
    #[serde(default)]
    pub forbidden_prefixes: Vec<Vec<u32>>,
    pub quality_seed: u64,
    pub quality_mean: f64,
    pub quality_stddev: f64,
    pub epoch_levels: Vec<u32>,
    /// Fraction of quality variance carried by shared prefixes, in `[0, 1]`.
    #[serde(default = "default_prefix_share")]
    pub prefix_share: f64,
    /// Ratio between the variance shares of consecutive prefix depths.
    #[serde(default = "default_prefix_decay")]
    pub prefix_decay: f64,
}

fn default_prefix_share() -> f64 {
    0.9
}

fn default_prefix_decay() -> f64 {
    0.5
}

impl Default for SpaceSpec {
    fn default() -> Self {
        SpaceSpec {
            num_slots: 6,
            choices_per_slot: vec![5; 6],
            forbidden_prefixes: Vec::new(),
            quality_seed: 0x5eed_a77e,
            quality_mean: 0.7,
            quality_stddev: 0.1,
            epoch_levels: vec![50, 150],
            prefix_share: default_prefix_share(),
            prefix_decay: default_prefix_decay(),
        }
    }
}

/// Number of valid sequences in a space.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SpaceSize {
    Exact(u64),
    /// The count exceeds 2^63; the value is a floating-point approximation.
    Approximate(f64),
}

impl SpaceSize {
    pub fn as_f64(&self) -> f64 {
        match *self {
            SpaceSize::Exact(n) => n as f64,
            SpaceSize::Approximate(x) => x,
        }
    }

    pub fn is_empty(&self) -> bool {
        matches!(self, SpaceSize::Exact(0))
    }
}

impl fmt::Display for SpaceSize {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SpaceSize::Exact(n) => write!(f, "{n}"),
            SpaceSize::Approximate(x) => write!(f, "~{x:e}"),
        }
    }
}

/// One candidate architecture: the choice taken at every variable slot.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ArchSequence(Vec<u32>);

impl ArchSequence {
    pub fn new(choices: Vec<u32>) -> Self {
        ArchSequence(choices)
    }

    pub fn choices(&self) -> &[u32] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn prefix(&self, len: usize) -> &[u32] {
        &self.0[..len.min(self.0.len())]
    }

    pub fn into_inner(self) -> Vec<u32> {
        self.0
    }
}

impl From<Vec<u32>> for ArchSequence {
    fn from(v: Vec<u32>) -> Self {
        ArchSequence(v)
    }
}

impl fmt::Display for ArchSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, c) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str("-")?;
            }
            write!(f, "{c}")?;
        }
        Ok(())
    }
}

impl SpaceSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidSpace(m));
        if self.num_slots == 0 {
            return bad("num_slots must be positive".into());
        }
        if self.choices_per_slot.len() != self.num_slots {
            return bad(format!(
                "choices_per_slot has {} entries, num_slots is {}",
                self.choices_per_slot.len(),
                self.num_slots
            ));
        }
        if let Some(i) = self.choices_per_slot.iter().position(|&c| c < 2) {
            return bad(format!("slot {i} has fewer than 2 choices"));
        }
        for rule in &self.forbidden_prefixes {
            if rule.is_empty() || rule.len() > self.num_slots {
                return bad(format!("forbidden prefix {rule:?} has invalid length"));
            }
            if rule
                .iter()
                .zip(&self.choices_per_slot)
                .any(|(&v, &k)| v >= k)
            {
                return bad(format!("forbidden prefix {rule:?} is out of range"));
            }
        }
        if !self.quality_mean.is_finite() {
            return bad("quality_mean must be finite".into());
        }
        if !(self.quality_stddev >= 0.0 && self.quality_stddev.is_finite()) {
            return bad("quality_stddev must be a nonnegative real".into());
        }
        if self.epoch_levels.is_empty() || self.epoch_levels.contains(&0) {
            return bad("epoch_levels must be a nonempty list of positive integers".into());
        }
        if !(0.0..=1.0).contains(&self.prefix_share) {
            return bad("prefix_share must lie in [0, 1]".into());
        }
        if !(self.prefix_decay > 0.0 && self.prefix_decay.is_finite()) {
            return bad("prefix_decay must be positive".into());
        }
        if space_size(self).is_empty() {
            return bad("the validity rules exclude every sequence".into());
        }
        Ok(())
    }

    pub fn is_valid(&self, seq: &ArchSequence) -> bool {
        seq.len() == self.num_slots
            && seq
                .choices()
                .iter()
                .zip(&self.choices_per_slot)
                .all(|(&v, &k)| v < k)
            && !self
                .forbidden_prefixes
                .iter()
                .any(|rule| seq.choices().starts_with(rule))
    }

    /// Number of distinct valid prefixes of length `len`.
    pub fn prefix_count(&self, len: usize) -> SpaceSize {
        let len = len.min(self.num_slots);
        let truncated = SpaceSpec {
            num_slots: len,
            choices_per_slot: self.choices_per_slot[..len].to_vec(),
            forbidden_prefixes: self
                .forbidden_prefixes
                .iter()
                .filter(|r| r.len() <= len)
                .cloned()
                .collect(),
            ..self.clone()
        };
        space_size(&truncated)
    }
}

/// Counts valid sequences: the product space minus everything a forbidden
/// prefix matches.
pub fn space_size(spec: &SpaceSpec) -> SpaceSize {
    // A rule extended by a shorter rule matches a subset of it; dropping those
    // leaves a prefix-free set whose match sets are disjoint.
    let mut rules: Vec<&Vec<u32>> = spec.forbidden_prefixes.iter().collect();
    rules.sort();
    rules.dedup();
    let minimal: Vec<&Vec<u32>> = rules
        .iter()
        .filter(|r| !rules.iter().any(|o| o.len() < r.len() && r.starts_with(o)))
        .copied()
        .collect();

    let tail_product = |from: usize| -> Option<u128> {
        spec.choices_per_slot[from..]
            .iter()
            .try_fold(1u128, |acc, &k| acc.checked_mul(k as u128))
    };

    let exact = tail_product(0).and_then(|total| {
        let mut forbidden = 0u128;
        for r in &minimal {
            forbidden = forbidden.checked_add(tail_product(r.len())?)?;
        }
        Some(total - forbidden)
    });

    match exact {
        Some(n) if n <= 1u128 << 63 => SpaceSize::Exact(n as u64),
        _ => {
            let tail = |from: usize| -> f64 {
                spec.choices_per_slot[from..]
                    .iter()
                    .map(|&k| k as f64)
                    .product()
            };
            let forbidden: f64 = minimal.iter().map(|r| tail(r.len())).sum();
            SpaceSize::Approximate(tail(0) - forbidden)
        }
    }
}

/// Draws a sequence uniformly from the valid set by rejection.
pub fn sample_uniform<R: Rng + ?Sized>(spec: &SpaceSpec, rng: &mut R) -> Result<ArchSequence> {
    for _ in 0..MAX_REJECTIONS {
        let seq = ArchSequence(
            spec.choices_per_slot
                .iter()
                .map(|&k| rng.random_range(0..k))
                .collect(),
        );
        if spec.is_valid(&seq) {
            return Ok(seq);
        }
    }
    Err(Error::DegenerateRules(MAX_REJECTIONS))
}

/// Changes one uniformly chosen slot to a uniformly chosen different value.
///
/// If the result violates a rule, both the slot and the value are drawn again.
pub fn mutate<R: Rng + ?Sized>(
    seq: &ArchSequence,
    spec: &SpaceSpec,
    rng: &mut R,
) -> Result<(ArchSequence, usize)> {
    if seq.len() != spec.num_slots {
        return Err(Error::LengthMismatch {
            left: seq.len(),
            right: spec.num_slots,
        });
    }
    for _ in 0..MAX_REJECTIONS {
        let index = rng.random_range(0..spec.num_slots);
        let current = seq.0[index];
        let mut value = rng.random_range(0..spec.choices_per_slot[index] - 1);
        if value >= current {
            value += 1;
        }
        let mut child = seq.clone();
        child.0[index] = value;
        if spec.is_valid(&child) {
            return Ok((child, index));
        }
    }
    Err(Error::DegenerateRules(MAX_REJECTIONS))
}

/// Deterministic synthetic validation accuracy of `seq` trained for `epochs`.
pub fn quality(seq: &ArchSequence, epochs: u32, spec: &SpaceSpec) -> Result<f64> {
    if !spec.epoch_levels.contains(&epochs) {
        return Err(Error::UnknownEpochs(epochs));
    }
    if seq.len() != spec.num_slots {
        return Err(Error::LengthMismatch {
            left: seq.len(),
            right: spec.num_slots,
        });
    }
    let z = standardized_score(seq, epochs, spec);
    let q = (spec.quality_mean + spec.quality_stddev * z).clamp(0.0, 1.0);
    Ok(canonical_float(q))
}

const LEAF_TAG: u64 = 0x6c65_6166;
const NODE_TAG: u64 = 0x6e6f_6465;

/// Zero-mean, unit-variance score under uniform sampling of the product space.
fn standardized_score(seq: &ArchSequence, epochs: u32, spec: &SpaceSpec) -> f64 {
    let depths = spec.num_slots - 1;
    let share = if depths == 0 { 0.0 } else { spec.prefix_share };

    let leaf_key = hash_words(
        [LEAF_TAG, spec.quality_seed, epochs as u64]
            .into_iter()
            .chain(seq.0.iter().map(|&c| c as u64)),
    );
    let leaf: f64 = ChaCha8Rng::seed_from_u64(leaf_key).sample(StandardNormal);
    let mut z = (1.0 - share).sqrt() * leaf;

    if share > 0.0 {
        let norm: f64 = (0..depths).map(|d| spec.prefix_decay.powi(d as i32)).sum();
        for depth in 0..depths {
            let weight = (share * spec.prefix_decay.powi(depth as i32) / norm).sqrt();
            z += weight * node_effect(seq, depth, epochs, spec);
        }
    }
    z
}

/// Effect of the choice at `depth` given the prefix before it.
///
/// Sibling choices receive the standardized normal quantile grid in a
/// hash-determined order, so each depth contributes exactly zero mean and unit
/// variance over the siblings.
fn node_effect(seq: &ArchSequence, depth: usize, epochs: u32, spec: &SpaceSpec) -> f64 {
    let k = spec.choices_per_slot[depth] as usize;
    let grid = quantile_grid(k);
    let key = hash_words(
        [NODE_TAG, spec.quality_seed, epochs as u64, depth as u64]
            .into_iter()
            .chain(seq.0[..depth].iter().map(|&c| c as u64)),
    );
    let mut order: Vec<usize> = (0..k).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(key));
    grid[order[seq.0[depth] as usize]]
}

fn quantile_grid(k: usize) -> Vec<f64> {
    let raw: Vec<f64> = (1..=k)
        .map(|i| inverse_normal_cdf((i as f64 - 0.375) / (k as f64 + 0.25)))
        .collect();
    let mean = raw.iter().sum::<f64>() / k as f64;
    let var = raw.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / k as f64;
    raw.iter().map(|x| (x - mean) / var.sqrt()).collect()
}

fn hash_words(words: impl IntoIterator<Item = u64>) -> u64 {
    let mut h = 0x243f_6a88_85a3_08d3u64;
    for w in words {
        h = splitmix(h ^ w);
    }
    h
}

fn splitmix(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(choices: Vec<u32>, rules: Vec<Vec<u32>>) -> SpaceSpec {
        SpaceSpec {
            num_slots: choices.len(),
            choices_per_slot: choices,
            forbidden_prefixes: rules,
            ..SpaceSpec::default()
        }
    }

    #[test]
    fn sizes() {
        assert_eq!(space_size(&SpaceSpec::default()), SpaceSize::Exact(15625));
        assert_eq!(space_size(&spec(vec![2], vec![])), SpaceSize::Exact(2));
        assert_eq!(
            space_size(&spec(vec![2, 2, 2], vec![vec![0, 0]])),
            SpaceSize::Exact(6)
        );
        // nested rule is redundant
        assert_eq!(
            space_size(&spec(
                vec![2, 2, 2],
                vec![vec![0, 0], vec![0, 0, 1], vec![0]]
            )),
            SpaceSize::Exact(4)
        );
        let huge = spec(vec![100; 20], vec![]);
        match space_size(&huge) {
            SpaceSize::Approximate(x) => assert!((x / 1e40 - 1.0).abs() < 1e-9),
            other => panic!("expected approximation, got {other:?}"),
        }
    }

    #[test]
    fn size_matches_enumeration() {
        let s = spec(vec![2, 3, 2], vec![vec![1], vec![0, 2], vec![0, 2, 1]]);
        let mut n = 0;
        for a in 0..2 {
            for b in 0..3 {
                for c in 0..2 {
                    if s.is_valid(&ArchSequence::new(vec![a, b, c])) {
                        n += 1;
                    }
                }
            }
        }
        assert_eq!(space_size(&s), SpaceSize::Exact(n));
    }

    #[test]
    fn validate_rejects_bad_specs() {
        assert!(spec(vec![1, 3], vec![]).validate().is_err());
        assert!(spec(vec![2], vec![vec![0], vec![1]]).validate().is_err());
        assert!(spec(vec![2, 2], vec![vec![2]]).validate().is_err());
        let mut s = SpaceSpec::default();
        s.epoch_levels.clear();
        assert!(s.validate().is_err());
        assert!(SpaceSpec::default().validate().is_ok());
    }

    #[test]
    fn forbidden_prefix_forces_sample() {
        let s = spec(vec![2], vec![vec![0]]);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..100 {
            assert_eq!(sample_uniform(&s, &mut rng).unwrap().choices(), &[1]);
        }
    }

    #[test]
    fn degenerate_rules_fail() {
        // validate() would reject this spec; the sampler must still terminate.
        let s = spec(vec![2], vec![vec![0], vec![1]]);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert!(matches!(
            sample_uniform(&s, &mut rng),
            Err(Error::DegenerateRules(_))
        ));
    }

    #[test]
    fn single_legal_mutation() {
        let s = spec(vec![2], vec![]);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let (child, idx) = mutate(&ArchSequence::new(vec![0]), &s, &mut rng).unwrap();
        assert_eq!((child.choices(), idx), (&[1u32][..], 0));
    }

    #[test]
    fn mutation_respects_rules() {
        let s = spec(vec![2, 2, 2], vec![vec![1, 1]]);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut seq = ArchSequence::new(vec![0, 1, 0]);
        for _ in 0..1000 {
            let (child, idx) = mutate(&seq, &s, &mut rng).unwrap();
            assert!(s.is_valid(&child));
            let diff: Vec<usize> = (0..3).filter(|&i| child.0[i] != seq.0[i]).collect();
            assert_eq!(diff, vec![idx]);
            seq = child;
        }
    }

    #[test]
    fn quality_is_deterministic_and_bounded() {
        let s = SpaceSpec::default();
        let seq = ArchSequence::new(vec![0, 1, 1, 2, 1, 2]);
        let a = quality(&seq, 50, &s).unwrap();
        assert_eq!(a, quality(&seq, 50, &s).unwrap());
        assert!((0.0..=1.0).contains(&a));
        assert_ne!(a, quality(&seq, 150, &s).unwrap());
        assert!(matches!(quality(&seq, 7, &s), Err(Error::UnknownEpochs(7))));
    }

    #[test]
    fn zero_stddev_is_constant() {
        let s = SpaceSpec {
            quality_stddev: 0.0,
            quality_mean: 1.4,
            ..SpaceSpec::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..50 {
            let seq = sample_uniform(&s, &mut rng).unwrap();
            assert_eq!(quality(&seq, 50, &s).unwrap(), 1.0);
        }
    }

    #[test]
    fn quantile_grid_is_standardized() {
        for k in 2..9 {
            let g = quantile_grid(k);
            let mean = g.iter().sum::<f64>() / k as f64;
            let var = g.iter().map(|x| x * x).sum::<f64>() / k as f64;
            assert!(mean.abs() < 1e-12 && (var - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn display_joins_with_dashes() {
        assert_eq!(ArchSequence::new(vec![0, 1, 1]).to_string(), "0-1-1");
    }
}
