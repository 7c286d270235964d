use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::norm::NormStats;
use super::train::{split, SignalTrain, N_INPUTS, N_STATES, WINDOW};
use super::DataError;
use crate::util::sha256_hex;

pub const DATASET_VERSION: u32 = 1;
const META_FILE: &str = "meta.json";
const TRAINS_FILE: &str = "trains.csv";
const COLUMNS: usize = 1 + N_INPUTS * WINDOW + 5 + N_STATES * WINDOW;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetMeta {
    pub format_version: u32,
    pub tool_version: String,
    pub config_hash: String,
    pub cycle_seed: u64,
    pub test_span: (f64, f64),
    pub n_trains: usize,
    pub n_train: usize,
    pub n_test: usize,
    pub norm: NormStats,
    /// Channels whose std hit the floor during fitting.
    pub guarded_channels: Vec<String>,
    pub trains_sha256: String,
}

/// All trains in time order plus the train/test partition.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub meta: DatasetMeta,
    pub trains: Vec<SignalTrain>,
    pub train: Vec<SignalTrain>,
    pub test: Vec<SignalTrain>,
}

impl Dataset {
    pub fn from_trains(trains: Vec<SignalTrain>, test_span: (f64, f64)) -> Result<Self, DataError> {
        let (train, test) = split(&trains, test_span)?;
        let (norm, report) = NormStats::fit(&train)?;
        let meta = DatasetMeta {
            format_version: DATASET_VERSION,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            config_hash: String::new(),
            cycle_seed: 0,
            test_span,
            n_trains: trains.len(),
            n_train: train.len(),
            n_test: test.len(),
            norm,
            guarded_channels: report.guarded,
            trains_sha256: sha256_hex(trains_to_csv(&trains).as_bytes()),
        };
        Ok(Self { meta, trains, train, test })
    }

    /// Final-point outputs (IC layout) of the train that ends where the test
    /// span begins, if there is one.
    pub fn chain_seed(&self) -> Option<[f64; 5]> {
        let start = self.test.first()?.t0;
        self.train.iter().find(|t| (t.t_end() - start).abs() < 1e-9).map(SignalTrain::final_point_ic)
    }
}

/// One row per train: `t0`, 40 input values (channel-major), 5 IC values,
/// 70 target values (state-major).
pub fn trains_to_csv(trains: &[SignalTrain]) -> String {
    let mut out = String::new();
    out.push_str("t0");
    for name in ["n_e", "u_delta", "u_egr", "u_vgt"] {
        for j in 0..WINDOW {
            out.push_str(&format!(",{name}_{j}"));
        }
    }
    out.push_str(",ic_P_im,ic_P_em,ic_omega_t,ic_u_egr,ic_u_vgt");
    for name in crate::engine::EngineOutputs::NAMES {
        for j in 0..WINDOW {
            out.push_str(&format!(",{name}_{j}"));
        }
    }
    out.push('\n');
    for t in trains {
        let mut row = vec![t.t0];
        row.extend(t.window.iter().flatten());
        row.extend(t.ic());
        row.extend(t.targets.iter().flatten());
        let fields: Vec<String> = row.iter().map(|v| format!("{v:?}")).collect();
        out.push_str(&fields.join(","));
        out.push('\n');
    }
    out
}

pub fn trains_from_csv<R: BufRead>(r: R, path: &Path) -> Result<Vec<SignalTrain>, DataError> {
    let parse_err = |line: usize, msg: String| DataError::Parse { path: path.to_path_buf(), line, msg };
    let mut trains = vec![];
    for (i, line) in r.lines().enumerate() {
        let line = line.map_err(|source| DataError::Io { path: path.to_path_buf(), source })?;
        if i == 0 || line.trim().is_empty() {
            continue;
        }
        let values: Vec<f64> = line
            .split(',')
            .map(|f| f.trim().parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|e| parse_err(i + 1, e.to_string()))?;
        if values.len() != COLUMNS {
            return Err(parse_err(i + 1, format!("expected {COLUMNS} columns, found {}", values.len())));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(parse_err(i + 1, "non-finite value".into()));
        }
        let mut it = values.into_iter();
        let t0 = it.next().unwrap();
        let mut next = || it.next().unwrap();
        let window = std::array::from_fn(|_| std::array::from_fn(|_| next()));
        let ic: [f64; 5] = std::array::from_fn(|_| next());
        let targets = std::array::from_fn(|_| std::array::from_fn(|_| next()));
        let mut t = SignalTrain { t0, window, ic_state: [0.0; 3], ic_egr: 0.0, ic_vgt: 0.0, targets };
        t.set_ic(ic);
        trains.push(t);
    }
    Ok(trains)
}

fn io_err(path: &Path) -> impl Fn(std::io::Error) -> DataError + '_ {
    move |source| DataError::Io { path: path.to_path_buf(), source }
}

/// Writes `meta.json` and `trains.csv` into `dir`, creating it if needed.
pub fn save_dataset(ds: &Dataset, dir: &Path) -> Result<(), DataError> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let csv = trains_to_csv(&ds.trains);
    let mut meta = ds.meta.clone();
    meta.trains_sha256 = sha256_hex(csv.as_bytes());
    let trains_path = dir.join(TRAINS_FILE);
    let mut w = BufWriter::new(fs::File::create(&trains_path).map_err(io_err(&trains_path))?);
    w.write_all(csv.as_bytes()).and_then(|_| w.flush()).map_err(io_err(&trains_path))?;
    let meta_path = dir.join(META_FILE);
    let text = serde_json::to_string_pretty(&meta).expect("metadata serializes");
    fs::write(&meta_path, text + "\n").map_err(io_err(&meta_path))?;
    Ok(())
}

/// Reads a dataset directory and re-derives the partition from the recorded
/// test span. The stored normalization is reused as-is.
pub fn load_dataset(dir: &Path) -> Result<Dataset, DataError> {
    let meta_path = dir.join(META_FILE);
    let text = fs::read_to_string(&meta_path).map_err(io_err(&meta_path))?;
    let meta: DatasetMeta =
        serde_json::from_str(&text).map_err(|e| DataError::Corrupt { path: meta_path.clone(), msg: e.to_string() })?;
    if meta.format_version != DATASET_VERSION {
        return Err(DataError::Corrupt {
            path: meta_path,
            msg: format!("dataset format version {} (expected {DATASET_VERSION})", meta.format_version),
        });
    }
    let trains_path = dir.join(TRAINS_FILE);
    let bytes = fs::read(&trains_path).map_err(io_err(&trains_path))?;
    if sha256_hex(&bytes) != meta.trains_sha256 {
        return Err(DataError::Corrupt { path: trains_path, msg: "checksum mismatch".into() });
    }
    let trains = trains_from_csv(BufReader::new(bytes.as_slice()), &trains_path)?;
    let (train, test) = split(&trains, meta.test_span)?;
    if trains.len() != meta.n_trains || train.len() != meta.n_train || test.len() != meta.n_test {
        return Err(DataError::Corrupt { path: trains_path, msg: "train counts disagree with meta.json".into() });
    }
    Ok(Dataset { meta, trains, train, test })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn trains(n: usize) -> Vec<SignalTrain> {
        (0..n)
            .map(|i| {
                let mut t = SignalTrain {
                    t0: 5.0 * i as f64,
                    window: std::array::from_fn(|c| std::array::from_fn(|j| (c as f64 + 0.1) * (j + i) as f64 / 3.0)),
                    ic_state: [0.0; 3],
                    ic_egr: 0.0,
                    ic_vgt: 0.0,
                    targets: std::array::from_fn(|k| std::array::from_fn(|j| 1e5 / (1 + k + j * i) as f64)),
                };
                t.refresh_ic_from_targets();
                t
            })
            .collect()
    }

    #[test]
    fn directory_round_trip_is_exact() {
        let ds = Dataset::from_trains(trains(40), (50.0, 100.0)).unwrap();
        let dir = tempfile::tempdir().unwrap();
        save_dataset(&ds, dir.path()).unwrap();
        let back = load_dataset(dir.path()).unwrap();
        assert_eq!(back, ds);
        assert_eq!(back.test.len(), 10);
        assert_eq!(back.chain_seed(), Some(ds.trains[9].final_point_ic()));
    }

    #[test]
    fn tampered_rows_detected() {
        let ds = Dataset::from_trains(trains(12), (10.0, 20.0)).unwrap();
        let dir = tempfile::tempdir().unwrap();
        save_dataset(&ds, dir.path()).unwrap();
        let p = dir.path().join(TRAINS_FILE);
        let text = fs::read_to_string(&p).unwrap().replacen("0.1", "0.2", 1);
        fs::write(&p, text).unwrap();
        assert!(matches!(load_dataset(dir.path()), Err(DataError::Corrupt { .. })));
    }

    #[test]
    fn stats_ignore_test_trains() {
        let all = trains(40);
        let ds = Dataset::from_trains(all.clone(), (50.0, 100.0)).unwrap();
        let mut altered = all;
        for t in &mut altered[10..20] {
            t.targets[0] = [9e9; WINDOW];
        }
        let ds2 = Dataset::from_trains(altered, (50.0, 100.0)).unwrap();
        assert_eq!(ds.meta.norm, ds2.meta.norm);
    }
}
