use std::io::{BufRead, Write};

use super::{rk4_step, EngineError, EngineInputs, EngineOutputs, EngineParams, EngineState};
use crate::util::fmt_sig9;

/// Sample period of the emitted trajectories [s].
pub const SAMPLE_PERIOD: f64 = 0.5;

pub const TRAJECTORY_HEADER: &str = "t,n_e,u_delta,u_egr,u_vgt,P_im,P_em,x_r,T_1,omega_t,u_egr_act,u_vgt_act";

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample {
    pub t: f64,
    pub inputs: EngineInputs,
    pub outputs: EngineOutputs,
}

/// Labeled 2 Hz data: inputs and the seven outputs at each sample instant.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Trajectory {
    pub samples: Vec<Sample>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Column `k` of the outputs (canonical order of [`EngineOutputs::NAMES`]).
    pub fn output_channel(&self, k: usize) -> Vec<f64> {
        self.samples.iter().map(|s| s.outputs.to_array()[k]).collect()
    }
}

fn substeps(dt_int: f64) -> Result<usize, EngineError> {
    if !(dt_int > 0.0) {
        return Err(EngineError::Step { dt: dt_int });
    }
    let ratio = SAMPLE_PERIOD / dt_int;
    let n = ratio.round();
    if n < 1.0 || (ratio - n).abs() > 1e-9 * ratio {
        return Err(EngineError::Step { dt: dt_int });
    }
    Ok(n as usize)
}

fn at(t: f64) -> impl Fn(EngineError) -> EngineError {
    move |e| EngineError::AtTime { t, source: Box::new(e) }
}

/// Integrates the engine over a 2 Hz input sequence (zero-order hold between
/// samples) and returns the outputs observed at every sample instant. Sample
/// `k` sits at `t = 0.5·k` and reports the state reached under inputs `0..k`.
pub fn simulate(
    inputs: &[EngineInputs],
    s0: EngineState,
    p: &EngineParams,
    dt_int: f64,
) -> Result<Trajectory, EngineError> {
    let n_sub = substeps(dt_int)?;
    p.validate()?;
    s0.validate(p)?;
    let mut state = s0;
    let mut samples = Vec::with_capacity(inputs.len());
    for (k, u) in inputs.iter().enumerate() {
        let t = k as f64 * SAMPLE_PERIOD;
        u.validate().map_err(at(t))?;
        if k > 0 {
            let held = inputs[k - 1];
            for _ in 0..n_sub {
                state = rk4_step(&state, &held, dt_int, p).map_err(at(t))?;
            }
        }
        let outputs = EngineOutputs::observe(&state, u, p).map_err(at(t))?;
        samples.push(Sample { t, inputs: *u, outputs });
    }
    Ok(Trajectory { samples })
}

/// Runs the engine under constant inputs for `seconds` and returns the final state.
pub fn settle(
    u: &EngineInputs,
    s0: EngineState,
    p: &EngineParams,
    seconds: f64,
    dt_int: f64,
) -> Result<EngineState, EngineError> {
    if !(dt_int > 0.0) {
        return Err(EngineError::Step { dt: dt_int });
    }
    u.validate()?;
    s0.validate(p)?;
    let steps = (seconds / dt_int).round() as usize;
    let mut state = s0;
    for i in 0..steps {
        state = rk4_step(&state, u, dt_int, p).map_err(at(i as f64 * dt_int))?;
    }
    Ok(state)
}

/// Writes a trajectory as CSV. `comments` become leading `# ` lines.
pub fn write_trajectory_csv<W: Write>(mut w: W, traj: &Trajectory, comments: &[String]) -> std::io::Result<()> {
    for c in comments {
        writeln!(w, "# {c}")?;
    }
    writeln!(w, "{TRAJECTORY_HEADER}")?;
    for s in &traj.samples {
        let mut row = vec![fmt_sig9(s.t)];
        row.extend(s.inputs.to_array().iter().map(|&v| fmt_sig9(v)));
        row.extend(s.outputs.to_array().iter().map(|&v| fmt_sig9(v)));
        writeln!(w, "{}", row.join(","))?;
    }
    Ok(())
}

/// Parses the CSV written by [`write_trajectory_csv`], skipping `#` lines.
pub fn read_trajectory_csv<R: BufRead>(r: R) -> Result<Trajectory, String> {
    let mut samples = Vec::new();
    let mut header_seen = false;
    for (lineno, line) in r.lines().enumerate() {
        let line = line.map_err(|e| e.to_string())?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if !header_seen {
            if line != TRAJECTORY_HEADER {
                return Err(format!("line {}: unexpected header `{line}`", lineno + 1));
            }
            header_seen = true;
            continue;
        }
        let vals: Vec<f64> = line
            .split(',')
            .map(|f| f.parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|e| format!("line {}: {e}", lineno + 1))?;
        if vals.len() != 12 {
            return Err(format!("line {}: expected 12 fields, found {}", lineno + 1, vals.len()));
        }
        samples.push(Sample {
            t: vals[0],
            inputs: EngineInputs::from_array([vals[1], vals[2], vals[3], vals[4]]),
            outputs: EngineOutputs::from_array([vals[5], vals[6], vals[7], vals[8], vals[9], vals[10], vals[11]]),
        });
    }
    if !header_seen {
        return Err("missing header".to_string());
    }
    Ok(Trajectory { samples })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn step_must_divide_sample_period() {
        assert_eq!(substeps(0.01).unwrap(), 50);
        assert_eq!(substeps(0.5).unwrap(), 1);
        assert!(substeps(0.03).is_err());
        assert!(substeps(0.0).is_err());
        assert!(substeps(0.7).is_err());
    }

    #[test]
    fn empty_input_gives_empty_output() {
        let p = EngineParams::default();
        let traj = simulate(&[], EngineState::ambient(&p), &p, 0.01).unwrap();
        assert!(traj.is_empty());
    }

    #[test]
    fn input_errors_carry_time() {
        let p = EngineParams::default();
        let ok = EngineInputs::new(1000.0, 50.0, 10.0, 50.0);
        let bad = EngineInputs::new(5000.0, 50.0, 10.0, 50.0);
        let err = simulate(&[ok, ok, bad], EngineState::ambient(&p), &p, 0.01).unwrap_err();
        match err {
            EngineError::AtTime { t, source } => {
                assert_eq!(t, 1.0);
                assert!(matches!(*source, EngineError::Input { field: "n_e", .. }));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn csv_round_trip_to_nine_digits() {
        let p = EngineParams::default();
        let u = vec![EngineInputs::new(1200.0, 90.0, 20.0, 55.0); 6];
        let traj = simulate(&u, EngineState::ambient(&p), &p, 0.01).unwrap();
        let mut buf = Vec::new();
        write_trajectory_csv(&mut buf, &traj, &["config_hash=abc".to_string()]).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("# config_hash=abc\n"));
        let back = read_trajectory_csv(buf.as_slice()).unwrap();
        assert_eq!(back.len(), traj.len());
        for (a, b) in traj.samples.iter().zip(&back.samples) {
            for (x, y) in a.outputs.to_array().iter().zip(b.outputs.to_array()) {
                assert!(((x - y) / x.abs().max(1e-12)).abs() < 1e-8);
            }
        }
    }
}
