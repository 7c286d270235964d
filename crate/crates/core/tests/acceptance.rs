//! End-to-end acceptance suite on the synthetic two-hour benchmark.
//!
//! Trains two full models (clean and 3 % label noise, 3000 epochs each), so a
//! release-profile run takes roughly 40 minutes on one core. Each criterion
//! prints one PASS/FAIL line to stderr; the test fails if any criterion does.
//!
//! cargo test --release --test acceptance

use std::io::Write;
use std::path::Path;
use std::time::Instant;

use engine_deeponet::cli::{self, RunConfig};
use engine_deeponet::data::{self, Dataset};
use engine_deeponet::deeponet::{gradient_check, latest_checkpoint, target_tensor, ArchSpec, BranchInputs, DeepOnet};
use engine_deeponet::engine::{mass_flows, rk4, settle, simulate, EngineInputs, EngineState};
use engine_deeponet::infer::{evaluate_noisy, predict, seq2seq_report, uncertainty_report, IcSource};
use engine_deeponet::train::{noisy_label_set, test_errors, train, MetricsLog, NoObserver, TrainState};

const CONFIG: &str = include_str!("../configs/synth-2h.json");
const NAMES: [&str; 7] = ["P_im", "P_em", "x_r", "T_1", "omega_t", "u_egr", "u_vgt"];

type Verdict = Result<String, String>;

/// Writes straight to the process stderr so the line shows up without
/// `--nocapture`.
fn report(id: usize, title: &str, verdict: &Verdict, seconds: f64) {
    let (tag, detail) = match verdict {
        Ok(d) => ("PASS", d),
        Err(d) => ("FAIL", d),
    };
    let line = format!("[acceptance] {tag} {id:>2} {title} ({seconds:.1} s): {detail}\n");
    let _ = std::io::stderr().write_all(line.as_bytes());
}

fn check(ok: bool, detail: String) -> Verdict {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn fmt(v: &[f64]) -> String {
    let parts: Vec<String> = v.iter().map(|x| format!("{x:.3}")).collect();
    format!("[{}]", parts.join(" "))
}

fn config() -> RunConfig {
    let cfg = RunConfig::parse(CONFIG, &[]).unwrap();
    cfg.validate().unwrap();
    cfg
}

fn dataset(cfg: &RunConfig) -> Dataset {
    let traj = data::synthesize(&cfg.engine, &cfg.cycle).unwrap();
    data::prepare(&traj, &cfg.pipeline, &cfg.cycle.bounds).unwrap()
}

fn gradient_exactness(ds: &Dataset) -> Verdict {
    let started = Instant::now();
    let mut model = DeepOnet::new(ArchSpec::default(), ds.meta.norm.clone(), 3).map_err(|e| e.to_string())?;
    let batch = &ds.train[..16];
    let x = BranchInputs::from_trains(batch, &model.norm);
    let y = target_tensor(batch, &model.norm);
    let checks = gradient_check(&mut model, &x, &y, 11, 200, 17, 1e-5).map_err(|e| e.to_string())?;
    let worst = checks.iter().map(|c| c.rel_error()).fold(0.0, f64::max);
    let secs = started.elapsed().as_secs_f64();
    check(
        checks.len() == 200 && worst < 1e-4 && secs < 120.0,
        format!("{} params, worst relative error {worst:.2e}, {secs:.1} s", checks.len()),
    )
}

fn integrator_order() -> Verdict {
    let started = Instant::now();
    let run = |dt: f64| {
        let mut y = [1.0, 0.0];
        for _ in 0..(2.0 / dt).round() as usize {
            // y1' = -y1, y2' = y1 - 2 y2
            y = rk4(|y: &[f64; 2]| Ok::<_, ()>([-y[0], y[0] - 2.0 * y[1]]), &y, dt).unwrap();
        }
        y
    };
    let t = 2.0f64;
    let exact = [(-t).exp(), (-t).exp() - (-2.0 * t).exp()];
    let err = |dt: f64| {
        let y = run(dt);
        ((y[0] - exact[0]).powi(2) + (y[1] - exact[1]).powi(2)).sqrt()
    };
    let orders: Vec<f64> = [0.1, 0.05].iter().map(|&dt| (err(dt) / err(dt / 2.0)).log2()).collect();
    let secs = started.elapsed().as_secs_f64();
    check(orders.iter().all(|o| (3.8..=4.2).contains(o)) && secs < 1.0, format!("observed orders {}", fmt(&orders)))
}

fn simulator_sanity(cfg: &RunConfig) -> Verdict {
    let started = Instant::now();
    let p = &cfg.engine;
    let dt = cfg.cycle.dt_int;
    let mut drift = 0.0f64;
    for u in [EngineInputs::new(800.0, 40.0, 0.0, 80.0), EngineInputs::new(1800.0, 200.0, 60.0, 30.0)] {
        let s = settle(&u, EngineState::ambient(p), p, 300.0, dt).map_err(|e| e.to_string())?;
        let traj = simulate(&vec![u; 201], s, p, dt).map_err(|e| e.to_string())?;
        let a = traj.samples[0].outputs.to_array();
        let b = traj.samples[200].outputs.to_array();
        drift = a.iter().zip(b).map(|(x, y)| ((y - x) / x.abs().max(1e-12)).abs()).fold(drift, f64::max);
    }
    let p_em: Vec<f64> = [40.0, 80.0, 120.0, 160.0, 200.0]
        .iter()
        .map(|&f| {
            settle(&EngineInputs::new(1500.0, f, 20.0, 60.0), EngineState::ambient(p), p, 300.0, dt).map(|s| s.p_em)
        })
        .collect::<Result<_, _>>()
        .map_err(|e| e.to_string())?;
    let monotone = p_em.windows(2).all(|w| w[1] > w[0]);
    let cycle = data::generate_drive_cycle(600.0, 1, &cfg.cycle.bounds).map_err(|e| e.to_string())?;
    let mut state = settle(&cycle[0], EngineState::ambient(p), p, 60.0, dt).map_err(|e| e.to_string())?;
    let mut balanced = true;
    for u in &cycle {
        let f = mass_flows(&state, u, p).map_err(|e| e.to_string())?;
        balanced &= (f.w_ei + f.w_f).to_bits() == f.w_eo.to_bits();
        state = settle(u, state, p, 0.5, dt).map_err(|e| e.to_string())?;
    }
    let secs = started.elapsed().as_secs_f64();
    check(
        drift < 1e-3 && monotone && balanced && secs < 30.0,
        format!(
            "drift {:.2e} %, steady P_em vs fuel {} kPa, mass balance bitwise {balanced}",
            drift * 100.0,
            fmt(&p_em.iter().map(|v| v / 1e3).collect::<Vec<_>>())
        ),
    )
}

fn train_model(ds: &Dataset, cfg: &RunConfig, label_noise: bool) -> (DeepOnet, f64) {
    let started = Instant::now();
    let (set, norm) = if label_noise {
        noisy_label_set(&ds.train, &ds.meta.norm, cfg.pipeline.noise.label_level_pct, cfg.pipeline.noise.seed).unwrap()
    } else {
        (ds.train.clone(), ds.meta.norm.clone())
    };
    let mut state = TrainState::fresh(cfg.model.clone(), norm, &cfg.training).unwrap();
    train(&mut state, &set, &ds.test, &cfg.training, &mut NoObserver).unwrap();
    (state.model, started.elapsed().as_secs_f64())
}

fn learning(model: &DeepOnet, ds: &Dataset, seconds: f64) -> (Verdict, [f64; 7]) {
    let e = test_errors(model, &ds.test).unwrap();
    let below10 = e.iter().filter(|&&v| v < 10.0).count();
    let ok = e.iter().all(|&v| v < 15.0) && below10 >= 4 && seconds <= 7200.0;
    (check(ok, format!("errors % {}, {below10} below 10 %, trained in {:.0} s", fmt(&e), seconds)), e)
}

fn noise_trend(model: &DeepOnet, ds: &Dataset) -> Verdict {
    let mut detail = vec![];
    let mut monotone = true;
    let mut actuator_wins = 0;
    for seed in [99, 100, 101] {
        let table = evaluate_noisy(model, &ds.test, &[0.0, 1.0, 2.0, 3.0], seed).map_err(|e| e.to_string())?;
        let means: Vec<f64> = table.rows.iter().map(|r| r.mean).collect();
        monotone &= means.windows(2).all(|w| w[1] >= w[0] - 0.3);
        let rise: Vec<f64> = (0..7).map(|k| table.rows[3].errors.0[k] - table.rows[0].errors.0[k]).collect();
        let top = (0..7).max_by(|&a, &b| rise[a].total_cmp(&rise[b])).unwrap();
        if top == 5 || top == 6 {
            actuator_wins += 1;
        }
        detail.push(format!("seed {seed}: means {} largest rise {}", fmt(&means), NAMES[top]));
    }
    check(monotone && actuator_wins >= 2, detail.join("; "))
}

fn label_noise_trend(clean: &[f64; 7], noisy: &DeepOnet, ds: &Dataset, seconds: f64) -> Verdict {
    let e = test_errors(noisy, &ds.test).map_err(|e| e.to_string())?;
    let per_state = (0..7).all(|k| e[k] >= clean[k] - 0.5);
    let degradation = (0..7).map(|k| e[k] - clean[k]).sum::<f64>() / 7.0;
    check(
        per_state && degradation <= 3.0,
        format!(
            "noisy-label errors % {}, mean degradation {degradation:.3} points, trained in {seconds:.0} s",
            fmt(&e)
        ),
    )
}

fn seq2seq_trend(model: &DeepOnet, ds: &Dataset) -> Verdict {
    let initial = ds.chain_seed().ok_or("test span starts at the first train")?;
    let r = seq2seq_report(model, &ds.test, initial).map_err(|e| e.to_string())?;
    let worse = (0..7).filter(|&k| r.chained.0[k] >= r.ground_truth.0[k]).count();
    let mut order: Vec<usize> = (0..7).collect();
    order.sort_by(|&a, &b| r.chained.0[b].total_cmp(&r.chained.0[a]));
    let worst3 = &order[..3];
    let accumulating = worst3.iter().all(|&k| r.cumulative_chained[k].windows(2).all(|w| w[1] >= w[0]));
    check(
        worse >= 6 && accumulating,
        format!(
            "recorded IC {} chained {} ({worse}/7 worse), worst three {:?} accumulate: {accumulating}",
            fmt(&r.ground_truth.0),
            fmt(&r.chained.0),
            worst3.iter().map(|&k| NAMES[k]).collect::<Vec<_>>()
        ),
    )
}

fn uncertainty_ordering(model: &DeepOnet, ds: &Dataset, cfg: &RunConfig) -> Verdict {
    let (r, ens) = uncertainty_report(model, &ds.test, 100, cfg.inference.mc_seed).map_err(|e| e.to_string())?;
    let close = (0..7).all(|k| (r.ensemble_mean.0[k] - r.deterministic.0[k]).abs() <= 1.0);
    let ordered = (0..7).all(|k| r.upper_band.0[k] >= r.ensemble_mean.0[k]);
    check(
        ens.samples.len() == 100 && close && ordered,
        format!(
            "deterministic {} mu {} mu+2sigma {}",
            fmt(&r.deterministic.0),
            fmt(&r.ensemble_mean.0),
            fmt(&r.upper_band.0)
        ),
    )
}

fn latency(model: &DeepOnet, ds: &Dataset) -> Verdict {
    let mut times = vec![];
    for _ in 0..5 {
        let started = Instant::now();
        let p = predict(model, &ds.test, IcSource::GroundTruth).map_err(|e| e.to_string())?;
        times.push(started.elapsed().as_secs_f64());
        assert_eq!(p.t.len(), 2000);
    }
    let slowest = times.iter().copied().fold(0.0, f64::max);
    check(
        slowest < 1.0 && ds.test.len() == 200,
        format!("{} trains, slowest of 5 runs {:.1} ms", ds.test.len(), slowest * 1e3),
    )
}

fn cli(config: &Path, args: &[&str]) -> Result<(), String> {
    let mut argv = vec!["engine-deeponet".to_string()];
    argv.extend(args.iter().map(|s| s.to_string()));
    argv.extend(["--config".to_string(), config.display().to_string()]);
    match cli::run(argv.clone()) {
        0 => Ok(()),
        code => Err(format!("{argv:?} exited with {code}")),
    }
}

fn read(path: &Path) -> Result<Vec<u8>, String> {
    std::fs::read(path).map_err(|e| format!("{}: {e}", path.display()))
}

fn metrics(path: &Path) -> Result<Vec<String>, String> {
    Ok(MetricsLog::read(path).map_err(|e| e.to_string())?.rows.iter().map(|r| r.deterministic_part()).collect())
}

fn reproducibility() -> Verdict {
    let root = tempfile::tempdir().map_err(|e| e.to_string())?;
    let short = CONFIG
        .replace("\"epochs\": 3000", "\"epochs\": 6")
        .replace("\"eval_every\": 100", "\"eval_every\": 2")
        .replace("\"checkpoint_every\": 500", "\"checkpoint_every\": 2")
        .replace("[750, 1500]", "[2, 4]")
        .replace("\"terminal_epoch\": 3000", "\"terminal_epoch\": 6")
        .replace("\"n_mc\": 100", "\"n_mc\": 4");
    let mut dirs = vec![];
    for name in ["a", "b", "c"] {
        let dir = root.path().join(name);
        std::fs::create_dir_all(&dir).map_err(|e| e.to_string())?;
        let text = short.replace("\"workspace\": \"../work/synth-2h\"", "\"workspace\": \"work\"");
        std::fs::write(dir.join("config.json"), text).map_err(|e| e.to_string())?;
        dirs.push(dir);
    }
    for dir in &dirs[..2] {
        let c = dir.join("config.json");
        for cmd in [&["prepare"][..], &["train"], &["predict"], &["predict", "--chained"], &["uncertainty"]] {
            cli(&c, cmd)?;
        }
    }
    let files = [
        "dataset/trains.csv",
        "dataset/meta.json",
        "run/ckpt-epoch-000004.json",
        "run/ckpt-epoch-000006.json",
        "predictions/predict.csv",
        "predictions/predict-chained.csv",
        "predictions/uncertainty.csv",
    ];
    let ws = |d: &Path| d.join("work");
    for f in files {
        if read(&ws(&dirs[0]).join(f))? != read(&ws(&dirs[1]).join(f))? {
            return Err(format!("{f} differs between identical runs"));
        }
    }
    let reference = metrics(&ws(&dirs[0]).join("run/metrics.csv"))?;
    if reference != metrics(&ws(&dirs[1]).join("run/metrics.csv"))? {
        return Err("metrics differ between identical runs".into());
    }

    // interrupted run: drop the final checkpoint and let `train` resume from epoch 4
    let c = dirs[2].join("config.json");
    cli(&c, &["prepare"])?;
    cli(&c, &["train"])?;
    let run = ws(&dirs[2]).join("run");
    std::fs::remove_file(run.join("ckpt-epoch-000006.json")).map_err(|e| e.to_string())?;
    if latest_checkpoint(&run).map(|(e, _)| e) != Some(4) {
        return Err("expected a checkpoint at epoch 4".into());
    }
    cli(&c, &["train"])?;
    let resumed_ckpt =
        read(&run.join("ckpt-epoch-000006.json"))? == read(&ws(&dirs[0]).join("run/ckpt-epoch-000006.json"))?;
    let resumed_metrics = metrics(&run.join("metrics.csv"))? == reference;
    check(
        resumed_ckpt && resumed_metrics,
        format!(
            "{} artifacts and {} metric rows bitwise identical; resume from epoch 4: checkpoint {resumed_ckpt}, metrics {resumed_metrics}",
            files.len(),
            reference.len()
        ),
    )
}

#[test]
fn acceptance_criteria() {
    let cfg = config();
    let ds = dataset(&cfg);
    assert_eq!((ds.train.len(), ds.test.len()), (1240, 200));
    let mut failed = vec![];
    let mut run = |id: usize, title: &str, f: &mut dyn FnMut() -> Verdict| {
        let started = Instant::now();
        let v = f();
        report(id, title, &v, started.elapsed().as_secs_f64());
        if v.is_err() {
            failed.push(id);
        }
    };

    run(1, "gradient exactness", &mut || gradient_exactness(&ds));
    run(2, "integrator order", &mut integrator_order);
    run(3, "simulator sanity", &mut || simulator_sanity(&cfg));
    run(10, "reproducibility", &mut reproducibility);

    let (model, train_secs) = train_model(&ds, &cfg, false);
    let mut clean = [0.0; 7];
    run(4, "learning capability", &mut || {
        let (v, e) = learning(&model, &ds, train_secs);
        clean = e;
        v
    });
    run(5, "input-noise trend", &mut || noise_trend(&model, &ds));
    run(7, "sequence-to-sequence trend", &mut || seq2seq_trend(&model, &ds));
    run(8, "uncertainty ordering", &mut || uncertainty_ordering(&model, &ds, &cfg));
    run(9, "latency", &mut || latency(&model, &ds));
    let (noisy, noisy_secs) = train_model(&ds, &cfg, true);
    run(6, "label-noise trend", &mut || label_noise_trend(&clean, &noisy, &ds, noisy_secs));

    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
