use std::collections::BTreeMap;

use proptest::prelude::*;

use crosstrend_core::engine::{
    pass_through, plan_partitions, run_map_reduce, EngineError, MapOutput, Mapped, PartitionMode,
};

/// Sequential reference: map in order, group by key, sort values, reduce.
fn oracle(rows: &[(u8, i32)], reducer: fn(&str, &[String]) -> Vec<String>) -> (Vec<String>, BTreeMap<String, u64>) {
    let mut groups: BTreeMap<String, Vec<String>> = BTreeMap::new();
    let mut dropped = BTreeMap::new();
    for r in rows {
        match mapper(r) {
            Mapped::Emit(o) => groups.entry(o.key).or_default().push(o.value),
            Mapped::Dropped(reason) => *dropped.entry(reason.to_string()).or_insert(0) += 1,
        }
    }
    let mut lines = Vec::new();
    for (k, mut vs) in groups {
        vs.sort();
        lines.extend(reducer(&k, &vs));
    }
    (lines, dropped)
}

fn mapper(&(k, v): &(u8, i32)) -> Mapped {
    if v % 7 == 0 {
        Mapped::Dropped("multiple_of_seven")
    } else if v < -900 {
        Mapped::Dropped("too_small")
    } else {
        Mapped::Emit(MapOutput::new(format!("k{:02}", k % 13), v.to_string()))
    }
}

fn summing(key: &str, values: &[String]) -> Vec<String> {
    let total: i64 = values.iter().map(|v| v.parse::<i64>().unwrap()).sum();
    vec![format!("{key},{},{total}", values.len())]
}

fn mode_strategy() -> impl Strategy<Value = PartitionMode> {
    prop_oneof![
        Just(PartitionMode::Chunked),
        (1usize..40).prop_map(|block_size| PartitionMode::Blocks { block_size }),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig { failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn parallel_run_matches_sequential_oracle(
        rows in prop::collection::vec((any::<u8>(), -1000i32..1000), 0..400),
        workers in 1usize..9,
        mode in mode_strategy(),
        summed in any::<bool>(),
    ) {
        let reducer: fn(&str, &[String]) -> Vec<String> = if summed { summing } else { pass_through };
        let parts = plan_partitions(&rows, workers, mode);
        let out = run_map_reduce(&parts, mapper, reducer, workers).unwrap();
        let (lines, dropped) = oracle(&rows, reducer);
        prop_assert_eq!(&out.lines, &lines);
        prop_assert_eq!(&out.stats.dropped, &dropped);
        prop_assert_eq!(out.stats.input_rows, rows.len() as u64);
        prop_assert_eq!(out.stats.output_rows, lines.len() as u64);
        if !summed {
            // pass-through writes one line per surviving row
            prop_assert_eq!(out.stats.input_rows, out.stats.output_rows + out.stats.dropped_total());
        }
    }

    #[test]
    fn partitions_concatenate_to_input(
        rows in prop::collection::vec(any::<u16>(), 0..300),
        workers in 1usize..12,
        mode in mode_strategy(),
    ) {
        let parts = plan_partitions(&rows, workers, mode);
        let joined: Vec<u16> = parts.iter().flat_map(|p| p.rows.iter().copied()).collect();
        prop_assert_eq!(joined, rows.clone());
        for (i, p) in parts.iter().enumerate() {
            prop_assert_eq!(p.id, i);
            prop_assert!(!p.rows.is_empty());
        }
        if mode == PartitionMode::Chunked && !rows.is_empty() {
            prop_assert_eq!(parts.len(), workers.min(rows.len()));
            let sizes: Vec<usize> = parts.iter().map(|p| p.rows.len()).collect();
            prop_assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
        }
    }
}

#[test]
fn mapper_panic_surfaces_as_worker_failure() {
    let rows: Vec<i32> = (0..100).collect();
    let parts = plan_partitions(&rows, 4, PartitionMode::Chunked);
    let err = run_map_reduce(
        &parts,
        |&v: &i32| {
            if v == 57 {
                panic!("bad row {v}");
            }
            Mapped::Emit(MapOutput::new("k", v.to_string()))
        },
        pass_through,
        4,
    )
    .unwrap_err();
    match err {
        EngineError::WorkerFailure { message, .. } => assert!(message.contains("bad row 57"), "{message}"),
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn reducer_panic_surfaces_as_reducer_failure() {
    let rows: Vec<i32> = (0..10).collect();
    let parts = plan_partitions(&rows, 2, PartitionMode::Chunked);
    let err = run_map_reduce(
        &parts,
        |&v: &i32| Mapped::Emit(MapOutput::new(format!("k{}", v % 3), v.to_string())),
        |key: &str, _: &[String]| -> Vec<String> {
            if key == "k1" {
                panic!("cannot reduce");
            }
            Vec::new()
        },
        2,
    )
    .unwrap_err();
    assert!(
        matches!(err, EngineError::ReducerFailure { ref key, .. } if key == "k1"),
        "{err:?}"
    );
}

#[test]
fn invalid_mapper_output_is_rejected() {
    let rows = vec![1, 2, 3];
    let parts = plan_partitions(&rows, 1, PartitionMode::Chunked);
    let err = run_map_reduce(&parts, |_: &i32| Mapped::Emit(MapOutput::new("", "x")), pass_through, 1).unwrap_err();
    assert!(matches!(err, EngineError::InvalidOutput(_)));
    let err = run_map_reduce(
        &parts,
        |_: &i32| Mapped::Emit(MapOutput::new("k", "a\nb")),
        pass_through,
        1,
    )
    .unwrap_err();
    assert!(matches!(err, EngineError::InvalidOutput(_)));
}
