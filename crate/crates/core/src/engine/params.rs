use serde::{Deserialize, Serialize};

use super::EngineError;

/// Version tag of the built-in parameter set. Bumped whenever a default changes.
pub const PARAMS_VERSION: &str = "hd6-v1";

/// Constants of the simplified mean-value engine.
///
/// The defaults describe a plausible 12.7 l, six-cylinder heavy-duty diesel
/// with an intercooled VGT turbocharger and a high-pressure EGR loop. They are
/// not fitted against any real engine.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EngineParams {
    pub version: String,
    /// Intake manifold volume [m³].
    pub v_im: f64,
    /// Exhaust manifold volume [m³].
    pub v_em: f64,
    /// Intake manifold gas temperature [K].
    pub t_im: f64,
    /// Exhaust temperature at zero fueling [K].
    pub t_em_base: f64,
    /// Exhaust temperature rise per mg/cycle of fuel [K].
    pub k_fuel: f64,
    pub r_a: f64,
    pub r_e: f64,
    pub gamma_a: f64,
    pub gamma_e: f64,
    /// Total displaced volume [m³].
    pub v_d: f64,
    pub n_cyl: f64,
    pub eta_vol: f64,
    /// Turbo shaft inertia [kg·m²].
    pub j_t: f64,
    pub eta_m: f64,
    pub eta_c: f64,
    pub eta_t: f64,
    pub a_egr_max: f64,
    pub a_t_max: f64,
    /// Overshoot gain of the two-lag EGR actuator.
    pub k_egr: f64,
    pub tau_egr1: f64,
    pub tau_egr2: f64,
    pub tau_vgt: f64,
    pub r_c: f64,
    pub p_amb: f64,
    pub t_amb: f64,
    /// Specific heat at constant volume of the cylinder charge [J/(kg·K)].
    pub c_v: f64,
    /// Heat released per unit charge mass per mg/cycle of fuel [J/kg].
    pub k_q: f64,
    /// Compressor map: `W_c = c1·s + c2·s² − c3·(Π_c − 1)`, `s = ω_t/omega_ref`.
    pub comp_c1: f64,
    pub comp_c2: f64,
    pub comp_c3: f64,
    pub omega_ref: f64,
    /// EGR effective area `a(x) = e1·x + e2·x²`, `x = u/100`.
    pub egr_area_c1: f64,
    pub egr_area_c2: f64,
    /// VGT effective area `a(x) = v0 + v1·x + v2·x²`, `x = u/100`.
    pub vgt_area_c0: f64,
    pub vgt_area_c1: f64,
    pub vgt_area_c2: f64,
    pub omega_min: f64,
    /// Pressure ratio above which the orifice-flow factor is linearized.
    pub pi_lin: f64,
}

impl Default for EngineParams {
    fn default() -> Self {
        Self {
            version: PARAMS_VERSION.to_string(),
            v_im: 0.022,
            v_em: 0.02,
            t_im: 310.0,
            t_em_base: 600.0,
            k_fuel: 2.0,
            r_a: 287.0,
            r_e: 286.0,
            gamma_a: 1.4,
            gamma_e: 1.3,
            v_d: 0.0127,
            n_cyl: 6.0,
            eta_vol: 0.87,
            j_t: 2e-4,
            eta_m: 0.85,
            eta_c: 0.65,
            eta_t: 0.55,
            a_egr_max: 5e-4,
            a_t_max: 3e-3,
            k_egr: 1.8,
            tau_egr1: 0.05,
            tau_egr2: 0.13,
            tau_vgt: 0.025,
            r_c: 17.0,
            p_amb: 101_300.0,
            t_amb: 298.0,
            c_v: 718.0,
            k_q: 1.5e4,
            comp_c1: 0.2,
            comp_c2: 0.3,
            comp_c3: 0.16,
            omega_ref: 1e4,
            egr_area_c1: 2.0,
            egr_area_c2: -1.0,
            vgt_area_c0: 0.15,
            vgt_area_c1: 0.85,
            vgt_area_c2: 0.0,
            omega_min: 500.0,
            pi_lin: 0.7,
        }
    }
}

impl EngineParams {
    pub fn validate(&self) -> Result<(), EngineError> {
        let positive = [
            ("v_im", self.v_im),
            ("v_em", self.v_em),
            ("t_im", self.t_im),
            ("t_em_base", self.t_em_base),
            ("r_a", self.r_a),
            ("r_e", self.r_e),
            ("v_d", self.v_d),
            ("n_cyl", self.n_cyl),
            ("j_t", self.j_t),
            ("eta_c", self.eta_c),
            ("eta_t", self.eta_t),
            ("a_egr_max", self.a_egr_max),
            ("a_t_max", self.a_t_max),
            ("tau_egr1", self.tau_egr1),
            ("tau_egr2", self.tau_egr2),
            ("tau_vgt", self.tau_vgt),
            ("r_c", self.r_c),
            ("p_amb", self.p_amb),
            ("t_amb", self.t_amb),
            ("c_v", self.c_v),
            ("omega_ref", self.omega_ref),
            ("omega_min", self.omega_min),
        ];
        for (name, value) in positive {
            if !(value.is_finite() && value > 0.0) {
                return Err(EngineError::Param { name, reason: "must be finite and > 0" });
            }
        }
        for (name, value) in [("eta_vol", self.eta_vol), ("eta_m", self.eta_m)] {
            if !(value > 0.0 && value <= 1.0) {
                return Err(EngineError::Param { name, reason: "must lie in (0, 1]" });
            }
        }
        if !(self.pi_lin > 0.0 && self.pi_lin < 1.0) {
            return Err(EngineError::Param { name: "pi_lin", reason: "must lie in (0, 1)" });
        }
        if !(self.k_egr >= 1.0) {
            return Err(EngineError::Param { name: "k_egr", reason: "must be >= 1" });
        }
        if !(self.gamma_a > 1.0 && self.gamma_e > 1.0) {
            return Err(EngineError::Param { name: "gamma", reason: "heat-capacity ratios must exceed 1" });
        }
        Ok(())
    }

    /// Exhaust manifold temperature, affine in fueling.
    pub fn t_em(&self, u_delta: f64) -> f64 {
        self.t_em_base + self.k_fuel * u_delta
    }

    /// Normalized EGR valve area in [0, 1].
    pub fn egr_area(&self, u_egr_eff: f64) -> f64 {
        let x = (u_egr_eff / 100.0).clamp(0.0, 1.0);
        (self.egr_area_c1 * x + self.egr_area_c2 * x * x).clamp(0.0, 1.0)
    }

    /// Normalized VGT effective area in [0, 1].
    pub fn vgt_area(&self, u_vgt_act: f64) -> f64 {
        let x = (u_vgt_act / 100.0).clamp(0.0, 1.0);
        (self.vgt_area_c0 + self.vgt_area_c1 * x + self.vgt_area_c2 * x * x).clamp(0.0, 1.0)
    }

    pub fn cp_a(&self) -> f64 {
        self.gamma_a * self.r_a / (self.gamma_a - 1.0)
    }

    pub fn cp_e(&self) -> f64 {
        self.gamma_e * self.r_e / (self.gamma_e - 1.0)
    }
}
