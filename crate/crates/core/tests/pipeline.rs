mod common;

use engine_deeponet::data::{
    add_awgn, load_dataset, save_dataset, trains_to_csv, DataError, NoiseSpec, NoiseTarget, N_STATES, WINDOW,
};
use engine_deeponet::train::noisy_label_set;
use engine_deeponet::util::sha256_hex;

#[test]
fn split_sizes_and_span() {
    let ds = common::small_dataset();
    assert_eq!(ds.trains.len(), 120);
    assert_eq!(ds.test.len(), 20);
    assert_eq!(ds.train.len(), 100);
    let (a, b) = ds.meta.test_span;
    assert_eq!(b - a, 100.0);
    assert!(ds.test.iter().all(|t| t.t0 >= a && t.t0 < b));
    assert!(ds.train.iter().all(|t| t.t0 < a || t.t0 >= b));
    assert!(ds.meta.norm.all_finite());
}

#[test]
fn trains_tile_the_trajectory() {
    let ds = common::small_dataset();
    for w in ds.trains.windows(2) {
        assert_eq!(w[1].t0 - w[0].t0, 5.0);
    }
    for t in &ds.trains {
        for k in 0..N_STATES {
            assert!(t.targets[k].iter().all(|v| v.is_finite()));
        }
        assert_eq!(t.targets[0].len(), WINDOW);
    }
}

#[test]
fn chain_seed_is_last_training_point() {
    let ds = common::small_dataset();
    let start = ds.meta.test_span.0;
    let prev = ds.train.iter().find(|t| t.t_end() == start).unwrap();
    assert_eq!(ds.chain_seed().unwrap(), prev.final_point_ic());
}

#[test]
fn saved_dataset_reloads_bitwise() {
    let ds = common::small_dataset();
    let dir = tempfile::tempdir().unwrap();
    save_dataset(&ds, dir.path()).unwrap();
    let back = load_dataset(dir.path()).unwrap();
    assert_eq!(back.trains, ds.trains);
    assert_eq!(back.meta, ds.meta);
    let bytes = std::fs::read(dir.path().join("trains.csv")).unwrap();
    save_dataset(&back, dir.path()).unwrap();
    assert_eq!(std::fs::read(dir.path().join("trains.csv")).unwrap(), bytes);
}

#[test]
fn edited_dataset_fails_checksum() {
    let ds = common::small_dataset();
    let dir = tempfile::tempdir().unwrap();
    save_dataset(&ds, dir.path()).unwrap();
    let path = dir.path().join("trains.csv");
    let text = std::fs::read_to_string(&path).unwrap();
    let edited = text.replacen(",1", ",2", 1);
    assert_ne!(edited, text);
    std::fs::write(&path, edited).unwrap();
    assert!(matches!(load_dataset(dir.path()), Err(DataError::Corrupt { .. })));
}

#[test]
fn missing_dataset_is_io_error() {
    let dir = tempfile::tempdir().unwrap();
    assert!(matches!(load_dataset(&dir.path().join("nope")), Err(DataError::Io { .. })));
}

#[test]
fn input_noise_leaves_ics_and_targets_alone() {
    let ds = common::small_dataset();
    let spec = NoiseSpec { level_pct: 3.0, target: NoiseTarget::Inputs, seed: 1 };
    let noisy = add_awgn(&ds.test, &spec, &ds.meta.norm).unwrap();
    for (a, b) in ds.test.iter().zip(&noisy) {
        assert_eq!(a.targets, b.targets);
        assert_eq!(a.ic(), b.ic());
        assert_ne!(a.window, b.window);
    }
}

#[test]
fn label_noise_never_touches_test_targets() {
    let ds = common::small_dataset();
    let before = sha256_hex(trains_to_csv(&ds.test).as_bytes());
    let (noisy, norm) = noisy_label_set(&ds.train, &ds.meta.norm, 3.0, 99).unwrap();
    assert_eq!(sha256_hex(trains_to_csv(&ds.test).as_bytes()), before);
    assert_eq!(noisy.len(), ds.train.len());
    assert_ne!(noisy[0].targets, ds.train[0].targets);
    assert_eq!(noisy[0].window, ds.train[0].window);
    assert_ne!(norm, ds.meta.norm);
}
