mod common;

use engine_deeponet::deeponet::{latest_checkpoint, ArchSpec, Checkpoint, LossKind};
use engine_deeponet::nn::LrSchedule;
use engine_deeponet::train::{train, MetricsLog, NoObserver, RunDir, TrainConfig, TrainState};

/// The Table-1 merge multiplies four ReLU embeddings, which leaves only a few
/// active coordinates per sample; 8 trains reach about 1e-3 after 2000
/// epochs rather than interpolating exactly.
#[test]
fn memorizes_eight_trains() {
    let ds = common::small_dataset();
    let few: Vec<_> = ds.train.iter().step_by(12).take(8).cloned().collect();
    let cfg = TrainConfig {
        epochs: 2000,
        eval_every: 1,
        checkpoint_every: 0,
        loss: LossKind::L2,
        schedule: LrSchedule { boundaries: vec![], rates: vec![1e-3], terminal_epoch: 2000 },
        ..Default::default()
    };
    let mut state = TrainState::fresh(ArchSpec::default().without_dropout(), ds.meta.norm.clone(), &cfg).unwrap();
    let log = train(&mut state, &few, &[], &cfg, &mut NoObserver).unwrap();
    let first = log.rows[0].loss;
    let last = log.rows.last().unwrap();
    assert_eq!(last.epoch, 2000);
    assert!(log.rows.iter().all(|r| r.loss.is_finite()));
    assert!(last.loss < 2.5e-3 && last.loss < first / 100.0, "loss {first} -> {}", last.loss);
}

fn short_config() -> TrainConfig {
    TrainConfig {
        epochs: 12,
        batch_size: 32,
        seed: 3,
        eval_every: 3,
        checkpoint_every: 3,
        keep_checkpoints: 10,
        schedule: LrSchedule::scaled_to(12),
        ..Default::default()
    }
}

fn run(dir: &std::path::Path, cfg: &TrainConfig, stop_at: Option<usize>) {
    let ds = common::small_dataset();
    let mut observer =
        RunDir { dir: dir.to_path_buf(), config_hash: "t".into(), seed: cfg.seed, keep: 10, verbose: false };
    let mut state = match latest_checkpoint(dir) {
        Some((epoch, path)) => {
            MetricsLog::truncate_file(&dir.join("metrics.csv"), epoch, "t").unwrap();
            TrainState::from_checkpoint(Checkpoint::load(&path).unwrap()).unwrap()
        }
        None => TrainState::fresh(ArchSpec::table1(16, 16), ds.meta.norm.clone(), cfg).unwrap(),
    };
    let cfg = TrainConfig { epochs: stop_at.unwrap_or(cfg.epochs), ..cfg.clone() };
    train(&mut state, &ds.train, &ds.test, &cfg, &mut observer).unwrap();
}

fn deterministic_metrics(dir: &std::path::Path) -> Vec<String> {
    MetricsLog::read(&dir.join("metrics.csv")).unwrap().rows.iter().map(|r| r.deterministic_part()).collect()
}

#[test]
fn resume_matches_uninterrupted_run_at_every_eval_boundary() {
    let cfg = short_config();
    let whole = tempfile::tempdir().unwrap();
    run(whole.path(), &cfg, None);
    let reference = deterministic_metrics(whole.path());
    let final_ckpt = std::fs::read(latest_checkpoint(whole.path()).unwrap().1).unwrap();
    assert_eq!(reference.len(), 4);

    for stop in [3, 6, 9] {
        let split = tempfile::tempdir().unwrap();
        run(split.path(), &cfg, Some(stop));
        run(split.path(), &cfg, None);
        assert_eq!(deterministic_metrics(split.path()), reference, "resumed at {stop}");
        assert_eq!(std::fs::read(latest_checkpoint(split.path()).unwrap().1).unwrap(), final_ckpt);
    }
}

#[test]
fn non_finite_data_aborts_and_keeps_last_checkpoint() {
    let ds = common::small_dataset();
    let mut bad = ds.train.clone();
    let cfg = short_config();
    let dir = tempfile::tempdir().unwrap();
    let mut observer =
        RunDir { dir: dir.path().to_path_buf(), config_hash: "t".into(), seed: 3, keep: 10, verbose: false };
    let mut state = TrainState::fresh(ArchSpec::table1(16, 16), ds.meta.norm.clone(), &cfg).unwrap();
    let short = TrainConfig { epochs: 3, ..cfg.clone() };
    train(&mut state, &bad, &ds.test, &short, &mut observer).unwrap();
    for t in bad.iter_mut() {
        t.targets[0][3] = f64::NAN;
    }
    assert!(train(&mut state, &bad, &ds.test, &cfg, &mut observer).is_err());
    assert_eq!(latest_checkpoint(dir.path()).unwrap().0, 3);
}
