use std::path::Path;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use regevo::analytics;
use regevo::cache_sim::{self, ReplayContext};
use regevo::prob::{self, HypergeomParams};
use regevo::space::{mutate, sample_uniform};
use regevo::trace::canonical_float;
use regevo::{
    decode_trace, encode_trace, run_search, ArchSequence, CachePolicy, PolicyKind, SchedulingMode,
    SearchConfig, SpaceSpec, TraceEvent,
};

fn space() -> impl Strategy<Value = SpaceSpec> {
    (1usize..6, prop::collection::vec(2u32..5, 6), 0usize..3).prop_map(|(slots, choices, rules)| {
        let choices: Vec<u32> = choices[..slots].to_vec();
        // forbid a few short prefixes that never cover the whole space
        let forbidden = (0..rules.min(choices[0] as usize - 1))
            .map(|i| vec![i as u32])
            .collect();
        SpaceSpec {
            num_slots: slots,
            choices_per_slot: choices,
            forbidden_prefixes: forbidden,
            ..SpaceSpec::default()
        }
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn samples_are_valid_and_mutations_change_one_slot(spec in space(), seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..20 {
            let s = sample_uniform(&spec, &mut rng).unwrap();
            prop_assert!(spec.is_valid(&s));
            if spec.num_slots > 1 || spec.forbidden_prefixes.len() + 1 < spec.choices_per_slot[0] as usize {
                let (child, idx) = mutate(&s, &spec, &mut rng).unwrap();
                prop_assert!(spec.is_valid(&child));
                let diffs: Vec<usize> = (0..spec.num_slots)
                    .filter(|&i| child.choices()[i] != s.choices()[i])
                    .collect();
                prop_assert_eq!(diffs, vec![idx]);
            }
        }
    }

    #[test]
    fn hypergeometric_normalizes_exactly(total in 0u64..40, a in 0u64..40, b in 0u64..40) {
        let (marked, draws) = (a.min(total), b.min(total));
        let params = HypergeomParams::new(total, marked, draws).unwrap();
        let mut sum = num_rational::Ratio::from_integer(0u128);
        for k in 0..=draws {
            sum += prob::hypergeom_pmf_exact(params, k).unwrap();
        }
        prop_assert_eq!(sum, num_rational::Ratio::from_integer(1));
    }

    #[test]
    fn transfer_bound_shape(p in 2u64..200, s_raw in 1u64..200) {
        let s = s_raw.min(p);
        let mut last = 0.0;
        for rank in 1..=p {
            let b = prob::transfer_prob_bound(p, rank, s).unwrap();
            prop_assert!(b >= last);
            prop_assert_eq!(b == 0.0, rank < s);
            last = b;
        }
        prop_assert!((last - 1.0).abs() < 1e-12);
    }

    #[test]
    fn order_stats_increase_and_mirror(w in 2u64..200) {
        let values: Vec<f64> = (1..=w).map(|r| prob::normal_order_stat(r, w).unwrap()).collect();
        prop_assert!(values.windows(2).all(|v| v[0] < v[1]));
        prop_assert!((values[0] + values[w as usize - 1]).abs() < 1e-9);
        if w % 2 == 1 && w >= 5 {
            prop_assert!(values[(w as usize - 1) / 2].abs() < 0.02);
        }
    }

    #[test]
    fn birthday_monotonicity(c in 2.0f64..1e6, k in 2u32..8, p in 0.01f64..0.98) {
        let t = prob::birthday_threshold(c, k, p).unwrap();
        prop_assert!(prob::birthday_threshold(c * 1.5, k, p).unwrap() > t);
        prop_assert!(prob::birthday_threshold(c, k, p + 0.01).unwrap() > t);
        if c > 1e3 {
            prop_assert!(prob::birthday_threshold(c, k + 1, p).unwrap() > t);
        }
    }

    #[test]
    fn trace_round_trip(events in prop::collection::vec(
        (0.0f64..1e5, 0.001f64..1e4, 0u32..64, prop::collection::vec(0u32..9, 1..8), 0.0f64..=1.0,
         prop::option::of((0u64..1000, 0u32..8)), prop::option::of(prop::collection::vec(0u64..1000, 0..6))),
        0..40)) {
        let mut trace: Vec<TraceEvent> = events
            .into_iter()
            .enumerate()
            .map(|(i, (begin, dur, worker, seq, q, donor, sampled))| TraceEvent {
                candidate_id: i as u64,
                begin_ts: canonical_float(begin),
                end_ts: canonical_float(begin + dur),
                worker_id: worker,
                sequence: ArchSequence::new(seq),
                quality: canonical_float(q),
                stage: if i % 2 == 0 { 1 } else { 2 },
                donor_id: donor.map(|d| d.0),
                donor_prefix_len: donor.map(|d| d.1),
                mutation_index: sampled.as_ref().map(|s| s.len() as u32),
                sampled_ids: sampled.map(|mut s| { s.sort_unstable(); s }),
            })
            .filter(|e| e.end_ts > e.begin_ts)
            .collect();
        trace.sort_by(|a, b| a.end_ts.total_cmp(&b.end_ts));
        let text = encode_trace(&trace).unwrap();
        let back = decode_trace(&text, Path::new("p")).unwrap();
        prop_assert_eq!(&back, &trace);
        prop_assert_eq!(encode_trace(&back).unwrap(), text);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn engine_invariants(
        seed in any::<u64>(),
        p in 6usize..40,
        extra in 1usize..120,
        s_raw in 1usize..6,
        workers in 1usize..12,
        wait in 1usize..12,
    ) {
        let s = s_raw.min(p - 1);
        let config = SearchConfig {
            total_candidates: p + extra,
            population_size: p,
            sample_size: s,
            num_workers: workers,
            scheduling: SchedulingMode::Quanta { wait_for: wait.min(workers) },
            rng_seed: seed,
            debug_trace: true,
            ..SearchConfig::default()
        };
        let spec = SpaceSpec::default();
        let out = run_search(&config, &spec).unwrap();
        prop_assert_eq!(out.trace.len(), p + extra);
        prop_assert!(out.stats.sampling_population_sizes.iter().all(|&n| n == p));
        prop_assert_eq!(&out.stats.retired_insertion_indices, &(0..extra as u64).collect::<Vec<_>>());
        prop_assert!(out.trace.windows(2).all(|w| w[0].end_ts <= w[1].end_ts));
        // a worker runs one evaluation at a time
        for w in 0..workers as u32 {
            let mut spans: Vec<(f64, f64)> = out.trace.iter()
                .filter(|e| e.worker_id == w)
                .map(|e| (e.begin_ts, e.end_ts))
                .collect();
            spans.sort_by(|a, b| a.0.total_cmp(&b.0));
            prop_assert!(spans.windows(2).all(|x| x[0].1 <= x[1].0));
        }
        let parents = analytics::parents_from_samples(&out.trace).unwrap();
        for e in out.trace.iter().filter(|e| e.stage == 2) {
            prop_assert_eq!(Some(parents[&e.candidate_id]), out.stats.parents[e.candidate_id as usize]);
        }
        let again = run_search(&config, &spec).unwrap();
        prop_assert_eq!(encode_trace(&again.trace).unwrap(), encode_trace(&out.trace).unwrap());

        // replay identities and the skip-bottom guarantee
        let ctx = ReplayContext { population_size: p, sample_size: s };
        let requests = out.trace.iter().filter(|e| e.donor_id.is_some()).count() as u64;
        let all = cache_sim::replay(&out.trace, &CachePolicy::STORE_ALL, &ctx).unwrap();
        let skip = cache_sim::replay(&out.trace, &CachePolicy::new(PolicyKind::SkipBottom), &ctx).unwrap();
        let bottom = analytics::bottom_for_life(&out.trace, p, s as u64).unwrap();
        prop_assert_eq!(all.donor_misses, 0);
        prop_assert_eq!(skip.donor_misses, 0);
        prop_assert_eq!(skip.stores_skipped, bottom.len() as u64);
        for policy in ["prob:0.05", "tier:2:20", "store-all@5", "skip-bottom@3"] {
            let policy: CachePolicy = policy.parse().unwrap();
            let r = cache_sim::replay(&out.trace, &policy, &ctx).unwrap();
            prop_assert_eq!(r.stores_made + r.stores_skipped, out.trace.len() as u64);
            prop_assert_eq!(r.donor_hits + r.donor_misses, requests);
            prop_assert!(r.wasted_stores <= r.stores_made);
        }
    }

    #[test]
    fn window_and_trie_invariants(seed in any::<u64>(), window in 1usize..200, len in 1usize..6, theta in 0.0f64..0.3) {
        let config = SearchConfig { rng_seed: seed, total_candidates: 300, population_size: 50, ..SearchConfig::default() };
        let trace = run_search(&config, &SpaceSpec::default()).unwrap().trace;
        let hists = analytics::window_histograms(&trace, window, len, 7).unwrap();
        for h in &hists {
            prop_assert_eq!(h.counts.values().sum::<u64>(), window as u64);
            let tiers = analytics::classify_tiers(h, analytics::TierThresholds::default());
            prop_assert_eq!(tiers.tiers.len(), h.counts.len());
        }
        let trie = analytics::build_trie(&trace, theta, None);
        for (_, node) in trie.prefixes() {
            prop_assert!(node.fraction >= theta);
            let children: u64 = node.children.values().map(|c| c.count).sum();
            prop_assert_eq!(node.count, children + node.pruned + node.terminal);
        }
        let series = analytics::quality_series(&trace);
        prop_assert!(series.cumulative_max.windows(2).all(|w| w[0] <= w[1]));
    }
}
