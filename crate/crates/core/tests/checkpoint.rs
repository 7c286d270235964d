mod common;

use engine_deeponet::deeponet::{
    checkpoint_path, latest_checkpoint, prune_checkpoints, target_tensor, ArchSpec, BranchInputs, Checkpoint,
    CheckpointError,
};
use engine_deeponet::nn::Mode;
use engine_deeponet::train::{run_epoch, TrainConfig, TrainState};

fn trained_state(arch: ArchSpec) -> (TrainState, BranchInputs) {
    let ds = common::small_dataset();
    let cfg = TrainConfig { epochs: 2, batch_size: 32, ..Default::default() };
    let mut state = TrainState::fresh(arch, ds.meta.norm.clone(), &cfg).unwrap();
    let inputs = BranchInputs::from_trains(&ds.train, &state.model.norm);
    let targets = target_tensor(&ds.train, &state.model.norm);
    for _ in 0..2 {
        run_epoch(&mut state, &inputs, &targets, &cfg).unwrap();
    }
    let x = BranchInputs::from_trains(&ds.test, &state.model.norm);
    (state, x)
}

#[test]
fn full_model_round_trip_predicts_bitwise() {
    let (state, x) = trained_state(ArchSpec::default());
    let dir = tempfile::tempdir().unwrap();
    let path = checkpoint_path(dir.path(), state.epoch);
    state.to_checkpoint(0, "h").save(&path).unwrap();
    let back = Checkpoint::load(&path).unwrap();
    assert_eq!(back.meta.epoch, 2);
    let a = state.model.predict(&x, Mode::Eval, 0).unwrap();
    let b = back.model.predict(&x, Mode::Eval, 0).unwrap();
    assert!(a.iter().zip(b.iter()).all(|(p, q)| p.to_bits() == q.to_bits()));
    let c = state.model.predict(&x, Mode::Mc, 4).unwrap();
    let d = back.model.predict(&x, Mode::Mc, 4).unwrap();
    assert_eq!(c, d);
    let resumed = TrainState::from_checkpoint(back).unwrap();
    assert_eq!(resumed.to_checkpoint(0, "h").to_json(), state.to_checkpoint(0, "h").to_json());
}

#[test]
fn damaged_files_are_classified() {
    let (state, _) = trained_state(ArchSpec::table1(8, 8));
    let text = state.to_checkpoint(0, "h").to_json();
    assert!(matches!(Checkpoint::from_json(&text[..text.len() / 2]), Err(CheckpointError::Truncated)));

    // flip one digit inside the weights: still parses, checksum catches it
    let pos = text.find("\"w\":[").unwrap() + 8;
    let mut bytes = text.clone().into_bytes();
    let i = (pos..).find(|&i| bytes[i].is_ascii_digit() && bytes[i] != b'9').unwrap();
    bytes[i] += 1;
    let edited = String::from_utf8(bytes).unwrap();
    assert!(matches!(Checkpoint::from_json(&edited), Err(CheckpointError::Checksum)));

    let renamed = text.replacen("\"swish\"", "\"gelu\"", 1);
    assert!(matches!(Checkpoint::from_json(&renamed), Err(CheckpointError::UnknownActivation { .. })));

    let versioned = text.replacen("\"format_version\":1", "\"format_version\":7", 1);
    assert!(matches!(Checkpoint::from_json(&versioned), Err(CheckpointError::Version { found: 7, .. })));

    let dir = tempfile::tempdir().unwrap();
    assert!(matches!(Checkpoint::load(&dir.path().join("none.json")), Err(CheckpointError::Missing(_))));
}

#[test]
fn pruning_keeps_the_newest() {
    let (state, _) = trained_state(ArchSpec::table1(8, 8));
    let dir = tempfile::tempdir().unwrap();
    for e in [10, 20, 30] {
        state.to_checkpoint(0, "h").save(&checkpoint_path(dir.path(), e)).unwrap();
    }
    prune_checkpoints(dir.path(), 2).unwrap();
    assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 2);
    assert_eq!(latest_checkpoint(dir.path()).unwrap().0, 30);
    assert!(!checkpoint_path(dir.path(), 10).exists());
    assert!(!dir.path().join("ckpt-epoch-000030.json.tmp").exists());
}
