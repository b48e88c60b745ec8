mod common;

use std::collections::{BTreeMap, BTreeSet};

use common::oracles::{brute_clip_label, check_split, random_table, random_track_labels};
use icnn_core::labeling::{
    build_taxonomy, clip_label, collapse_labels, moving_average, stratified_split, ActivationTable,
    SmoothedActivations, TaxonomyMap, DEFAULT_LABEL_THRESHOLD, DEFAULT_WINDOW_SECONDS, OTHER_CLASS,
};
use icnn_core::pipeline::{make_synthetic_corpus, SyntheticOptions};
use proptest::prelude::*;

fn table_of(seed: u64) -> ActivationTable {
    let t = random_table(seed);
    ActivationTable::new(&format!("rand{seed}"), t.times, t.columns, t.series).unwrap()
}

/// Whole-second clips that lie inside the annotated range.
fn clip_intervals(table: &ActivationTable) -> Vec<(f64, f64)> {
    let end = table.end_time();
    (0..)
        .map(|i| (i as f64, (i + 1) as f64))
        .take_while(|&(_, b)| b <= end + 1e-9)
        .filter(|&(a, _)| a >= table.times[0] - 1e-9)
        .collect()
}

#[test]
fn clip_labels_match_brute_force() {
    let mut compared = 0;
    for seed in 0..100 {
        let table = table_of(seed);
        for window in [DEFAULT_WINDOW_SECONDS, 0.25] {
            let smoothed = SmoothedActivations::new(&table, window).unwrap();
            for (a, b) in clip_intervals(&table) {
                for thr in [DEFAULT_LABEL_THRESHOLD, 0.3, 0.9] {
                    let labels = smoothed.clip_label(a, b, thr).unwrap();
                    for (c, series) in table.series.iter().enumerate() {
                        let expected = brute_clip_label(&table.times, series, window, a, b, thr);
                        assert_eq!(
                            labels[c], expected,
                            "seed {seed} window {window} clip [{a}, {b}) column {c}"
                        );
                        compared += 1;
                    }
                }
            }
        }
    }
    assert!(compared > 1000);
}

#[test]
fn moving_average_hand_values() {
    let s = [0.0, 0.0, 1.0, 1.0, 0.0];
    assert_eq!(moving_average(&s, 0.05, 0.1).unwrap(), vec![0.0, 0.0, 0.5, 1.0, 0.5]);
    let m = moving_average(&s, 0.05, 0.15).unwrap();
    let expected = [0.0, 1.0 / 3.0, 2.0 / 3.0, 2.0 / 3.0, 0.5];
    for (a, b) in m.iter().zip(expected) {
        assert!((a - b).abs() < 1e-15, "{m:?}");
    }
}

#[test]
fn clips_outside_the_table_are_rejected() {
    let table = table_of(3);
    let end = table.end_time();
    assert!(clip_label(&table, end, end + 1.0, 0.5, 0.1).is_err());
    assert!(clip_label(&table, 0.5, 0.5, 0.5, 0.1).is_err());
    assert!(clip_label(&table, table.times[0] - 1.0, table.times[0], 0.5, 0.1).is_err());
}

fn canonical_category(raw: &str) -> &'static str {
    match raw {
        "electric bass" => "electric bass",
        "acoustic guitar" => "acoustic guitar",
        "synthesizer" => "synthesizer",
        "drum set" => "drum set",
        "fx/processed sound" => "fx/processed sound",
        "male singer" => "voice",
        "violin" => "violin",
        "piano" => "piano",
        "distorted electric guitar" => "distorted electric guitar",
        "clean electric guitar" => "clean electric guitar",
        "banjo" => "banjo",
        "flute" => "flute",
        other => panic!("unexpected synthetic instrument {other}"),
    }
}

#[test]
fn taxonomy_counts_songs_per_category() {
    let dir = tempfile::tempdir().unwrap();
    let written = make_synthetic_corpus(
        dir.path(),
        &SyntheticOptions {
            tracks: 16,
            seed: 5,
            min_seconds: 1.0,
            max_seconds: 1.2,
            ..Default::default()
        },
    )
    .unwrap();
    let instruments: Vec<BTreeSet<String>> = written
        .iter()
        .map(|t| t.instruments.iter().cloned().collect())
        .collect();
    let map = TaxonomyMap::default_medleydb();
    for min_songs in [1, 2, 5, 9, 17] {
        let taxonomy = build_taxonomy(&map, &instruments, min_songs);
        let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
        for track in &instruments {
            let cats: BTreeSet<&str> = track.iter().map(|r| canonical_category(r)).collect();
            for c in cats {
                *counts.entry(c).or_default() += 1;
            }
        }
        let kept: BTreeSet<&str> = counts
            .iter()
            .filter(|(_, &n)| n >= min_songs)
            .map(|(c, _)| *c)
            .collect();
        let classes: BTreeSet<&str> = taxonomy.classes.iter().map(String::as_str).collect();
        let mut expected = kept.clone();
        expected.insert(OTHER_CLASS);
        assert_eq!(classes, expected, "min_songs {min_songs}");
        assert_eq!(taxonomy.classes.last().unwrap(), OTHER_CLASS);
        for track in &instruments {
            for raw in track {
                let class = taxonomy.class_of(raw);
                if kept.contains(canonical_category(raw)) {
                    assert_eq!(class, canonical_category(raw));
                } else {
                    assert_eq!(class, OTHER_CLASS);
                }
            }
        }
    }
}

#[test]
fn split_properties_hold_over_seeds() {
    let mut worst: f64 = 0.0;
    for seed in 0..50 {
        let labels = random_track_labels(122, seed);
        let split = stratified_split(&labels, 0.2, seed).unwrap();
        let dev = check_split(&labels, &split.train, &split.test, 0.2).unwrap_or_else(|e| panic!("seed {seed}: {e}"));
        worst = worst.max(dev);
    }
    assert!(worst <= 0.10, "worst per-label deviation {worst}");
}

#[test]
fn split_is_seed_deterministic() {
    let labels = random_track_labels(60, 1);
    assert_eq!(
        stratified_split(&labels, 0.2, 7).unwrap(),
        stratified_split(&labels, 0.2, 7).unwrap()
    );
}

const RAW_NAMES: [&str; 8] = [
    "male singer",
    "female singer",
    "piano",
    "tack piano",
    "banjo",
    "violin section",
    "theremin-x",
    "drum set",
];

fn small_taxonomy() -> icnn_core::labeling::Taxonomy {
    let tracks: Vec<BTreeSet<String>> = vec![
        ["male singer", "piano"].iter().map(|s| s.to_string()).collect(),
        ["female singer", "violin section"]
            .iter()
            .map(|s| s.to_string())
            .collect(),
    ];
    build_taxonomy(&TaxonomyMap::default_medleydb(), &tracks, 1)
}

proptest! {
    #[test]
    fn smoothing_stays_in_range(series in prop::collection::vec(0.0f64..=1.0, 2..100), w in 1usize..12) {
        let m = moving_average(&series, 0.01, w as f64 * 0.01).unwrap();
        let lo = series.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = series.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        prop_assert_eq!(m.len(), series.len());
        for v in m {
            prop_assert!(v >= lo - 1e-12 && v <= hi + 1e-12);
        }
    }

    #[test]
    fn raising_confidence_never_clears_a_label(
        base in prop::collection::vec(0.0f64..=1.0, 30..60),
        bump in prop::collection::vec(0.0f64..=0.5, 60),
        thr in 0.05f64..0.95,
    ) {
        let n = base.len();
        let times: Vec<f64> = (0..n).map(|i| i as f64 * 0.05).collect();
        let raised: Vec<f64> = base.iter().zip(&bump).map(|(a, b)| (a + b).min(1.0)).collect();
        let t1 = ActivationTable::new("a", times.clone(), vec!["x".into()], vec![base]).unwrap();
        let t2 = ActivationTable::new("b", times, vec!["x".into()], vec![raised]).unwrap();
        let l1 = clip_label(&t1, 0.0, 1.0, thr, 0.1).unwrap();
        let l2 = clip_label(&t2, 0.0, 1.0, thr, 0.1).unwrap();
        prop_assert!(l2[0] >= l1[0]);
    }

    #[test]
    fn collapse_is_an_or_homomorphism(
        picks in prop::collection::vec(0usize..RAW_NAMES.len(), 1..6),
        a in any::<u8>(),
        b in any::<u8>(),
    ) {
        let taxonomy = small_taxonomy();
        let columns: Vec<String> = picks.iter().map(|&i| RAW_NAMES[i].to_owned()).collect();
        let bits = |m: u8| -> Vec<u8> { (0..columns.len()).map(|i| (m >> i) & 1).collect() };
        let ca = collapse_labels(&bits(a), &columns, &taxonomy).unwrap();
        let cb = collapse_labels(&bits(b), &columns, &taxonomy).unwrap();
        let cab = collapse_labels(&bits(a | b), &columns, &taxonomy).unwrap();
        let or: Vec<u8> = ca.iter().zip(&cb).map(|(x, y)| x | y).collect();
        prop_assert_eq!(cab, or);
        prop_assert_eq!(collapse_labels(&bits(0), &columns, &taxonomy).unwrap(), vec![0; taxonomy.num_classes()]);
    }
}
