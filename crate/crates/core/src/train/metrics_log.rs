use std::fs::OpenOptions;
use std::io::{BufRead, Write};
use std::path::Path;

use crate::data::N_STATES;

pub const METRICS_HEADER: &str =
    "epoch,loss,lr,err_P_im,err_P_em,err_x_r,err_T_1,err_omega_t,err_u_egr,err_u_vgt,seconds";

/// One evaluation point after `epoch` completed epochs. `lr` is the scheduled
/// rate at that epoch index, i.e. the rate the next epoch uses; `errors` are relative L2 test errors [%].
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsRow {
    pub epoch: usize,
    pub loss: f64,
    pub lr: f64,
    pub errors: [f64; N_STATES],
    pub seconds: f64,
}

impl MetricsRow {
    pub fn to_csv(&self) -> String {
        let mut f = vec![self.epoch.to_string(), format!("{:?}", self.loss), format!("{:?}", self.lr)];
        f.extend(self.errors.iter().map(|e| format!("{e:?}")));
        f.push(format!("{:.3}", self.seconds));
        f.join(",")
    }

    /// Same row without the wall-clock column.
    pub fn deterministic_part(&self) -> String {
        let s = self.to_csv();
        s[..s.rfind(',').unwrap()].to_string()
    }

    pub fn parse(line: &str) -> Option<Self> {
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 4 + N_STATES {
            return None;
        }
        let num = |i: usize| f[i].trim().parse::<f64>().ok();
        let mut errors = [0.0; N_STATES];
        for (s, e) in errors.iter_mut().enumerate() {
            *e = num(3 + s)?;
        }
        Some(Self { epoch: f[0].trim().parse().ok()?, loss: num(1)?, lr: num(2)?, errors, seconds: num(3 + N_STATES)? })
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct MetricsLog {
    pub rows: Vec<MetricsRow>,
}

impl MetricsLog {
    pub fn read(path: &Path) -> std::io::Result<Self> {
        let f = std::io::BufReader::new(std::fs::File::open(path)?);
        let mut rows = vec![];
        for line in f.lines() {
            let line = line?;
            if line.starts_with('#') || line.starts_with("epoch") || line.trim().is_empty() {
                continue;
            }
            rows.push(MetricsRow::parse(&line).ok_or_else(|| {
                std::io::Error::new(std::io::ErrorKind::InvalidData, format!("bad metrics row `{line}`"))
            })?);
        }
        Ok(Self { rows })
    }

    /// Rewrites `path` keeping only rows up to `epoch` (used when resuming).
    pub fn truncate_file(path: &Path, epoch: usize, config_hash: &str) -> std::io::Result<()> {
        if !path.exists() {
            return Ok(());
        }
        let log = Self::read(path)?;
        std::fs::remove_file(path)?;
        for r in log.rows.iter().filter(|r| r.epoch <= epoch) {
            append_row(path, r, config_hash)?;
        }
        Ok(())
    }
}

/// Appends a row, writing the comment line and header first for a new file.
pub(crate) fn append_row(path: &Path, row: &MetricsRow, config_hash: &str) -> std::io::Result<()> {
    let fresh = !path.exists();
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)?;
    }
    let mut f = OpenOptions::new().create(true).append(true).open(path)?;
    if fresh {
        writeln!(f, "# config_hash={config_hash} tool_version={}", env!("CARGO_PKG_VERSION"))?;
        writeln!(f, "{METRICS_HEADER}")?;
    }
    writeln!(f, "{}", row.to_csv())
}
