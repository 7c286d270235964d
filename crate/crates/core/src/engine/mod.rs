//! Simplified mean-value model of a turbocharged diesel engine with EGR and VGT.
//!
//! The model tracks six states (intake and exhaust manifold pressure, turbo
//! shaft speed and three actuator lags) driven by four inputs (engine speed,
//! fueling, EGR and VGT commands). Two further outputs, the residual gas
//! fraction and the charge temperature at inlet-valve closing, come from an
//! algebraic fixed point evaluated at each sample instant.

mod cylinder;
mod flow;
mod ode;
mod params;
mod sim;

pub use cylinder::{cylinder_fixed_point, CylinderState};
pub use flow::{egr_actuator_output, psi_flow, psi_flow_regularized};
pub use ode::{derivatives, mass_flows, rk4, rk4_step, MassFlows};
pub use params::{EngineParams, PARAMS_VERSION};
pub use sim::{read_trajectory_csv, settle, simulate, write_trajectory_csv, Sample, Trajectory, TRAJECTORY_HEADER};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EngineError {
    #[error("pressure ratio {pi} outside (0, 1]")]
    Domain { pi: f64 },
    #[error("state field `{field}` violates its invariant (value {value})")]
    State { field: &'static str, value: f64 },
    #[error("input field `{field}` out of range (value {value})")]
    Input { field: &'static str, value: f64 },
    #[error("parameter `{name}` {reason}")]
    Param { name: &'static str, reason: &'static str },
    #[error("cylinder fixed point did not converge: x_r = {x_r}, T_1 = {t1}, residual = {residual:e}")]
    Convergence { x_r: f64, t1: f64, residual: f64 },
    #[error("non-finite derivative in `{field}`")]
    Numeric { field: &'static str },
    #[error("integration step {dt} s does not divide the 0.5 s sample period")]
    Step { dt: f64 },
    #[error("at t = {t} s: {source}")]
    AtTime {
        t: f64,
        #[source]
        source: Box<EngineError>,
    },
}

/// The four engine input signals.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EngineInputs {
    /// Engine speed [rpm].
    pub n_e: f64,
    /// Injected fuel [mg/cycle].
    pub u_delta: f64,
    /// EGR valve command [%].
    pub u_egr: f64,
    /// VGT vane command [%].
    pub u_vgt: f64,
}

impl EngineInputs {
    pub const N_E_RANGE: (f64, f64) = (400.0, 2500.0);
    pub const U_DELTA_RANGE: (f64, f64) = (0.0, 300.0);
    pub const VALVE_RANGE: (f64, f64) = (0.0, 100.0);

    pub fn new(n_e: f64, u_delta: f64, u_egr: f64, u_vgt: f64) -> Self {
        Self { n_e, u_delta, u_egr, u_vgt }
    }

    pub fn validate(&self) -> Result<(), EngineError> {
        let checks = [
            ("n_e", self.n_e, Self::N_E_RANGE),
            ("u_delta", self.u_delta, Self::U_DELTA_RANGE),
            ("u_egr", self.u_egr, Self::VALVE_RANGE),
            ("u_vgt", self.u_vgt, Self::VALVE_RANGE),
        ];
        for (field, value, (lo, hi)) in checks {
            if !(value >= lo && value <= hi) {
                return Err(EngineError::Input { field, value });
            }
        }
        Ok(())
    }

    pub fn to_array(self) -> [f64; 4] {
        [self.n_e, self.u_delta, self.u_egr, self.u_vgt]
    }

    pub fn from_array(a: [f64; 4]) -> Self {
        Self::new(a[0], a[1], a[2], a[3])
    }
}

/// ODE state of the engine.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EngineState {
    pub p_im: f64,
    pub p_em: f64,
    pub omega_t: f64,
    pub u_egr1_act: f64,
    pub u_egr2_act: f64,
    pub u_vgt_act: f64,
}

pub const ACTUATOR_RANGE: (f64, f64) = (-20.0, 120.0);
/// Lower clamp for the intake manifold pressure, as a fraction of ambient.
const P_IM_FLOOR: f64 = 0.2;
/// Lower bound for the exhaust manifold pressure, as a fraction of ambient.
const P_EM_FLOOR: f64 = 0.5;

impl EngineState {
    pub const FIELDS: [&'static str; 6] = ["P_im", "P_em", "omega_t", "u_egr1_act", "u_egr2_act", "u_vgt_act"];

    /// Engine at rest: manifolds at ambient, turbo idling, actuators closed.
    pub fn ambient(p: &EngineParams) -> Self {
        Self {
            p_im: p.p_amb,
            p_em: 1.05 * p.p_amb,
            omega_t: 2.0 * p.omega_min,
            u_egr1_act: 0.0,
            u_egr2_act: 0.0,
            u_vgt_act: 0.0,
        }
    }

    pub fn to_array(self) -> [f64; 6] {
        [self.p_im, self.p_em, self.omega_t, self.u_egr1_act, self.u_egr2_act, self.u_vgt_act]
    }

    pub fn from_array(a: [f64; 6]) -> Self {
        Self { p_im: a[0], p_em: a[1], omega_t: a[2], u_egr1_act: a[3], u_egr2_act: a[4], u_vgt_act: a[5] }
    }

    pub fn validate(&self, p: &EngineParams) -> Result<(), EngineError> {
        let s = self;
        for (i, v) in s.to_array().iter().enumerate() {
            if !v.is_finite() {
                return Err(EngineError::State { field: Self::FIELDS[i], value: *v });
            }
        }
        if !(s.p_im > 0.0) {
            return Err(EngineError::State { field: "P_im", value: s.p_im });
        }
        if !(s.p_em > 0.0 && s.p_em >= P_EM_FLOOR * p.p_amb) {
            return Err(EngineError::State { field: "P_em", value: s.p_em });
        }
        if !(s.omega_t >= p.omega_min) {
            return Err(EngineError::State { field: "omega_t", value: s.omega_t });
        }
        for (field, value) in [("u_egr1_act", s.u_egr1_act), ("u_egr2_act", s.u_egr2_act), ("u_vgt_act", s.u_vgt_act)] {
            if !(ACTUATOR_RANGE.0..=ACTUATOR_RANGE.1).contains(&value) {
                return Err(EngineError::State { field, value });
            }
        }
        Ok(())
    }

    /// Projects the state onto its invariant set.
    pub fn clamped(&self, p: &EngineParams) -> Self {
        let (lo, hi) = ACTUATOR_RANGE;
        Self {
            p_im: self.p_im.max(P_IM_FLOOR * p.p_amb),
            p_em: self.p_em.max(P_EM_FLOOR * p.p_amb),
            omega_t: self.omega_t.max(p.omega_min),
            u_egr1_act: self.u_egr1_act.clamp(lo, hi),
            u_egr2_act: self.u_egr2_act.clamp(lo, hi),
            u_vgt_act: self.u_vgt_act.clamp(lo, hi),
        }
    }
}

/// The seven emitted output states, in canonical order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EngineOutputs {
    pub p_im: f64,
    pub p_em: f64,
    pub x_r: f64,
    pub t_1: f64,
    pub omega_t: f64,
    pub u_egr_act: f64,
    pub u_vgt_act: f64,
}

impl EngineOutputs {
    pub const NAMES: [&'static str; 7] = ["P_im", "P_em", "x_r", "T_1", "omega_t", "u_egr", "u_vgt"];

    pub fn to_array(self) -> [f64; 7] {
        [self.p_im, self.p_em, self.x_r, self.t_1, self.omega_t, self.u_egr_act, self.u_vgt_act]
    }

    pub fn from_array(a: [f64; 7]) -> Self {
        Self { p_im: a[0], p_em: a[1], x_r: a[2], t_1: a[3], omega_t: a[4], u_egr_act: a[5], u_vgt_act: a[6] }
    }

    /// Evaluates the algebraic outputs for a state under the given inputs.
    pub fn observe(s: &EngineState, u: &EngineInputs, p: &EngineParams) -> Result<Self, EngineError> {
        let cyl = cylinder_fixed_point(s.p_im, s.p_em, u.n_e, u.u_delta, p)?;
        Ok(Self {
            p_im: s.p_im,
            p_em: s.p_em,
            x_r: cyl.x_r,
            t_1: cyl.t_1,
            omega_t: s.omega_t,
            u_egr_act: egr_actuator_output(s.u_egr1_act, s.u_egr2_act, p.k_egr),
            u_vgt_act: s.u_vgt_act,
        })
    }
}
