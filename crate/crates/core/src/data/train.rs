use serde::{Deserialize, Serialize};

use super::DataError;
use crate::engine::Trajectory;

/// Points per signal train (5 s at 2 Hz).
pub const WINDOW: usize = 10;
pub const N_INPUTS: usize = 4;
pub const N_STATES: usize = 7;
pub const N_IC: usize = 5;
pub const SAMPLE_PERIOD: f64 = 0.5;

/// Output-state indices that have an initial-condition input, in IC order:
/// `[P_im, P_em, omega_t, u_egr, u_vgt]`.
pub const IC_STATES: [usize; N_IC] = [0, 1, 4, 5, 6];

/// One 10-point unit of training or inference.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignalTrain {
    /// Absolute start time [s].
    pub t0: f64,
    /// `[n_e, u_delta, u_egr, u_vgt] × 10`.
    pub window: [[f64; WINDOW]; N_INPUTS],
    /// `[P_im, P_em, omega_t]` at the first point.
    pub ic_state: [f64; 3],
    pub ic_egr: f64,
    pub ic_vgt: f64,
    /// Seven output states × 10 points.
    pub targets: [[f64; WINDOW]; N_STATES],
}

impl SignalTrain {
    /// IC vector in canonical order `[P_im, P_em, omega_t, u_egr, u_vgt]`.
    pub fn ic(&self) -> [f64; N_IC] {
        [self.ic_state[0], self.ic_state[1], self.ic_state[2], self.ic_egr, self.ic_vgt]
    }

    pub fn set_ic(&mut self, ic: [f64; N_IC]) {
        self.ic_state = [ic[0], ic[1], ic[2]];
        self.ic_egr = ic[3];
        self.ic_vgt = ic[4];
    }

    /// Recomputes the IC fields from the targets at the first point.
    pub fn refresh_ic_from_targets(&mut self) {
        self.set_ic(IC_STATES.map(|s| self.targets[s][0]));
    }

    /// Outputs at the last point, reduced to the IC layout.
    pub fn final_point_ic(&self) -> [f64; N_IC] {
        IC_STATES.map(|s| self.targets[s][WINDOW - 1])
    }

    pub fn t_end(&self) -> f64 {
        self.t0 + WINDOW as f64 * SAMPLE_PERIOD
    }
}

/// Cuts a 2 Hz trajectory into signal trains of 10 points, advancing `stride`
/// samples between trains. A trailing remainder shorter than a window is
/// dropped. Initial conditions are copied from the targets at each train's
/// first point.
pub fn windowize(traj: &Trajectory, stride: usize) -> Result<Vec<SignalTrain>, DataError> {
    if stride == 0 {
        return Err(DataError::Config("stride must be positive".into()));
    }
    if traj.len() < WINDOW {
        return Err(DataError::EmptyDataset { samples: traj.len() });
    }
    let mut trains = Vec::with_capacity((traj.len() - WINDOW) / stride + 1);
    let mut start = 0;
    while start + WINDOW <= traj.len() {
        let chunk = &traj.samples[start..start + WINDOW];
        let mut window = [[0.0; WINDOW]; N_INPUTS];
        let mut targets = [[0.0; WINDOW]; N_STATES];
        for (j, s) in chunk.iter().enumerate() {
            for (c, v) in s.inputs.to_array().into_iter().enumerate() {
                window[c][j] = v;
            }
            for (k, v) in s.outputs.to_array().into_iter().enumerate() {
                targets[k][j] = v;
            }
        }
        let mut train = SignalTrain { t0: chunk[0].t, window, ic_state: [0.0; 3], ic_egr: 0.0, ic_vgt: 0.0, targets };
        train.refresh_ic_from_targets();
        trains.push(train);
        start += stride;
    }
    Ok(trains)
}

/// Splits trains by start time: `t0 ∈ [start, end)` goes to the test set.
/// An empty span (`start == end`) keeps everything for training. Span ends
/// must sit on train boundaries relative to the first train.
pub fn split(trains: &[SignalTrain], test_span: (f64, f64)) -> Result<(Vec<SignalTrain>, Vec<SignalTrain>), DataError> {
    let (start, end) = test_span;
    if !(end >= start) {
        return Err(DataError::Span(format!("test span ({start}, {end}) is reversed")));
    }
    if let (Some(first), Some(second)) = (trains.first(), trains.get(1)) {
        let period = second.t0 - first.t0;
        for edge in [start, end] {
            let k = (edge - first.t0) / period;
            if (k - k.round()).abs() > 1e-9 {
                return Err(DataError::Span(format!("span edge {edge} s is not on a train boundary")));
            }
        }
    }
    let (test, train): (Vec<_>, Vec<_>) = trains.iter().cloned().partition(|t| t.t0 >= start && t.t0 < end);
    if train.is_empty() {
        return Err(DataError::EmptyTraining);
    }
    Ok((train, test))
}

/// Picks a contiguous `length`-second test span, starting as close to the
/// middle of the data as possible, whose mean engine speed is at least
/// `1.1 × idle_speed`.
pub fn choose_test_span(trains: &[SignalTrain], length: f64, idle_speed: f64) -> Result<(f64, f64), DataError> {
    let period = WINDOW as f64 * SAMPLE_PERIOD;
    let per_span = (length / period).round() as usize;
    if per_span == 0 || per_span >= trains.len() {
        return Err(DataError::Span(format!("cannot place a {length} s test span in {} trains", trains.len())));
    }
    let last_start = trains.len() - per_span;
    let centre = last_start / 2;
    let mut order = vec![centre];
    for d in 1..=last_start {
        if centre + d <= last_start {
            order.push(centre + d);
        }
        if d <= centre {
            order.push(centre - d);
        }
    }
    for s in order {
        let span = &trains[s..s + per_span];
        let mean_speed = span.iter().flat_map(|t| t.window[0].iter()).sum::<f64>() / (per_span * WINDOW) as f64;
        if mean_speed >= 1.1 * idle_speed {
            return Ok((span[0].t0, span[0].t0 + per_span as f64 * period));
        }
    }
    Err(DataError::Span("no test span satisfies the idle-speed rule".into()))
}
