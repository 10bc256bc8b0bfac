//! Property tests: randomized invariants checked against small
//! independent oracles.

use proptest::prelude::*;

use csaf_core::*;

fn outcome_strategy() -> impl Strategy<Value = Outcome> {
    prop::bool::ANY.prop_map(Outcome::from_taken)
}

fn family_strategy() -> impl Strategy<Value = PredictorFamily> {
    prop::sample::select(PredictorFamily::ALL.to_vec())
}

proptest! {
    // Every counter stays inside [0, 2^width - 1] for any update stream,
    // on every family.
    #[test]
    fn counters_stay_in_bounds(
        family in family_strategy(),
        width in 1u8..=4,
        events in prop::collection::vec((0u64..64, outcome_strategy()), 1..400),
    ) {
        let mut cfg = PredictorConfig::new(family, 8);
        cfg.counter_width = width;
        cfg.init_value = cfg.init_value.min(SaturatingCounter::max_value(width));
        let mut p = Predictor::new(cfg).unwrap();
        for (pc, outcome) in events {
            p.update(pc, outcome);
        }
        let max = SaturatingCounter::max_value(width);
        for i in 0..p.tracked_entries() {
            prop_assert!(p.tracked_counter(i).unwrap().value() <= max);
        }
    }

    // A flip report is exactly the set of direction-map positions that
    // changed in that update.
    #[test]
    fn flip_reports_equal_map_deltas(
        family in family_strategy(),
        events in prop::collection::vec((0u64..4096, outcome_strategy()), 1..200),
    ) {
        let mut p = Predictor::new(PredictorConfig::new(family, 16)).unwrap();
        for (pc, outcome) in events {
            let before = p.direction_map();
            let report = p.update(pc, outcome);
            let after = p.direction_map();
            let mut flips: Vec<usize> = report.as_slice().to_vec();
            flips.sort_unstable();
            prop_assert_eq!(flips, before.diff_indices(&after).unwrap());
        }
    }

    // invert_all twice restores the exact tracked counters.
    #[test]
    fn invert_all_is_an_involution(
        family in family_strategy(),
        events in prop::collection::vec((0u64..4096, outcome_strategy()), 1..200),
    ) {
        let mut p = Predictor::new(PredictorConfig::new(family, 16)).unwrap();
        for (pc, outcome) in events {
            p.update(pc, outcome);
        }
        let snapshot = p.clone();
        p.invert_all();
        p.invert_all();
        prop_assert_eq!(p, snapshot);
    }

    // slice_change_count equals a per-bit loop.
    #[test]
    fn change_count_matches_bit_loop(
        pairs in prop::collection::vec((prop::bool::ANY, prop::bool::ANY), 1..300),
    ) {
        let mut a = DirectionMap::new(pairs.len());
        let mut b = DirectionMap::new(pairs.len());
        for (i, (x, y)) in pairs.iter().enumerate() {
            a.set(i, *x);
            b.set(i, *y);
        }
        let expected = pairs.iter().filter(|(x, y)| x != y).count();
        prop_assert_eq!(csaf::slice_change_count(&a, &b).unwrap(), expected);
        let indices: Vec<usize> = pairs
            .iter()
            .enumerate()
            .filter(|(_, (x, y))| x != y)
            .map(|(i, _)| i)
            .collect();
        prop_assert_eq!(a.diff_indices(&b).unwrap(), indices);
    }

    // The bounded LRU table agrees with an unbounded map plus an explicit
    // recency list.
    #[test]
    fn lru_matches_recency_list_oracle(
        capacity in 1usize..6,
        ops in prop::collection::vec((0u32..12, prop::bool::ANY), 1..300),
    ) {
        let mut table: lru::LruTable<u32, u32> = lru::LruTable::new(capacity);
        let mut oracle_map = std::collections::HashMap::new();
        let mut recency: Vec<u32> = Vec::new(); // MRU first

        for (i, (key, is_insert)) in ops.into_iter().enumerate() {
            if is_insert {
                let victim = table.insert(key, i as u32);
                // oracle
                let mut oracle_victim = None;
                recency.retain(|k| *k != key);
                recency.insert(0, key);
                oracle_map.insert(key, i as u32);
                if recency.len() > capacity {
                    let evicted = recency.pop().unwrap();
                    let value = oracle_map.remove(&evicted).unwrap();
                    oracle_victim = Some((evicted, value));
                }
                prop_assert_eq!(victim, oracle_victim);
            } else {
                let got = table.get_refresh(&key).map(|v| *v);
                let expected = oracle_map.get(&key).copied();
                prop_assert_eq!(got, expected);
                if expected.is_some() {
                    recency.retain(|k| *k != key);
                    recency.insert(0, key);
                }
            }
            prop_assert!(table.len() <= capacity);
            let table_keys: Vec<u32> = table.keys().copied().collect();
            prop_assert_eq!(&table_keys, &recency);
        }
    }

    // Interleaving conserves per-pid subsequences exactly; a splitter
    // driven by the switch markers inverts it.
    #[test]
    fn interleave_round_trips_through_deinterleave(
        lens in prop::collection::vec(0usize..40, 1..5),
        slice_len in 1usize..12,
    ) {
        prop_assume!(lens.iter().any(|&l| l > 0));
        let sequences: Vec<(Pid, Vec<BranchEvent>)> = lens
            .iter()
            .enumerate()
            .map(|(pid, &len)| {
                let events = (0..len)
                    .map(|i| BranchEvent {
                        pc: (pid * 1000 + i) as u64,
                        outcome: Outcome::from_taken((i + pid) % 3 == 0),
                    })
                    .collect();
                (Pid(pid as u32), events)
            })
            .collect();
        let trace = interleave(&sequences, slice_len).unwrap();

        let total: usize = lens.iter().sum();
        let branches = trace
            .iter()
            .filter(|e| matches!(e, TraceEvent::Branch(_)))
            .count();
        prop_assert_eq!(branches, total);

        let mut split: std::collections::BTreeMap<Pid, Vec<BranchEvent>> = Default::default();
        let mut cur = None;
        for event in &trace {
            match event {
                TraceEvent::Switch { next } => cur = Some(*next),
                TraceEvent::Branch(b) => split.entry(cur.unwrap()).or_default().push(*b),
            }
        }
        for (pid, events) in &sequences {
            let got = split.remove(pid).unwrap_or_default();
            prop_assert_eq!(&got, events);
        }
        prop_assert!(split.is_empty());
    }

    // Trace text round-trips: parse inverts write, and a second write is
    // byte-identical.
    #[test]
    fn trace_format_round_trips(
        events in prop::collection::vec(
            prop_oneof![
                (prop::num::u64::ANY, outcome_strategy())
                    .prop_map(|(pc, outcome)| TraceEvent::Branch(BranchEvent { pc, outcome })),
                (0u32..50).prop_map(|p| TraceEvent::Switch { next: Pid(p) }),
            ],
            0..200,
        ),
        first in 0u32..50,
    ) {
        let mut trace = vec![TraceEvent::Switch { next: Pid(first) }];
        trace.extend(events);
        let text = write_trace(&trace);
        let parsed = parse_trace(&text).unwrap();
        prop_assert_eq!(&parsed, &trace);
        prop_assert_eq!(write_trace(&parsed), text);
    }

    // Sliding window equals a quadratic recount.
    #[test]
    fn sliding_window_matches_recount(
        correct in prop::collection::vec(prop::bool::ANY, 0..300),
        window in 1usize..20,
    ) {
        let records: Vec<SimRecord> = correct
            .iter()
            .enumerate()
            .map(|(i, &ok)| SimRecord::new(
                i as u64,
                Pid(0),
                Outcome::Taken,
                Outcome::from_taken(ok),
            ))
            .collect();
        let series = sliding_window_series(&records, window).unwrap();
        let mut expected = Vec::new();
        if records.len() >= window {
            for i in (window - 1)..records.len() {
                let wrong = records[i + 1 - window..=i].iter().filter(|r| !r.correct).count();
                expected.push((i as u64, wrong as f64 / window as f64));
            }
        }
        prop_assert_eq!(series.points(), &expected[..]);
    }

    // Identical inputs produce identical simulations, and differential of
    // a series with itself is identically zero.
    #[test]
    fn simulation_determinism_and_zero_differential(
        pcs in prop::collection::vec((0u64..64, outcome_strategy()), 10..150),
        nswitch in 1usize..5,
    ) {
        let mut trace = Vec::new();
        for (i, (pc, outcome)) in pcs.iter().enumerate() {
            if i % (pcs.len() / nswitch + 1) == 0 {
                trace.push(TraceEvent::Switch { next: Pid((i % 3) as u32) });
            }
            trace.push(TraceEvent::Branch(BranchEvent { pc: *pc, outcome: *outcome }));
        }
        let config = SimConfig {
            predictor: PredictorConfig::new(PredictorFamily::Gshare, 16),
            csaf: CsafConfig::default(),
            window: 8,
        };
        let a = run_simulation(&trace, &config).unwrap();
        let b = run_simulation(&trace, &config).unwrap();
        prop_assert_eq!(&a, &b);
        let diff = differential_series(&a.series, &b.series).unwrap();
        prop_assert!(diff.points().iter().all(|(_, r)| *r == 0.0));
    }
}
