use super::flow::psi_flow_regularized;
use super::{egr_actuator_output, EngineError, EngineInputs, EngineParams, EngineState};

/// Mass flows [kg/s] and turbo powers [W] at one operating point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MassFlows {
    /// Into the cylinders.
    pub w_ei: f64,
    /// Fuel.
    pub w_f: f64,
    /// Out of the cylinders into the exhaust manifold.
    pub w_eo: f64,
    pub w_egr: f64,
    pub w_t: f64,
    pub w_c: f64,
    pub pow_t: f64,
    pub pow_c: f64,
    pub t_em: f64,
}

/// Evaluates every flow of the gas path. `s` is used as given; callers are
/// responsible for it satisfying the state invariants.
pub fn mass_flows(s: &EngineState, u: &EngineInputs, p: &EngineParams) -> Result<MassFlows, EngineError> {
    let w_ei = p.eta_vol * s.p_im * u.n_e * p.v_d / (120.0 * p.r_a * p.t_im);
    let w_f = 1e-6 * u.u_delta * u.n_e * p.n_cyl / 120.0;
    let w_eo = w_ei + w_f;

    let t_em = p.t_em(u.u_delta);
    let exhaust_density = (p.r_e * t_em).sqrt();

    // Flow only in the positive direction; a reversed pressure ratio closes the path.
    let pi_egr = (s.p_im / s.p_em).min(1.0);
    let u_egr_eff = egr_actuator_output(s.u_egr1_act, s.u_egr2_act, p.k_egr);
    let w_egr = p.a_egr_max * p.egr_area(u_egr_eff) * s.p_em * psi_flow_regularized(pi_egr, p.gamma_e, p.pi_lin)?
        / exhaust_density;

    let pi_t = (p.p_amb / s.p_em).min(1.0);
    let w_t = p.a_t_max * p.vgt_area(s.u_vgt_act) * s.p_em * psi_flow_regularized(pi_t, p.gamma_e, p.pi_lin)?
        / exhaust_density;

    let pi_c = s.p_im / p.p_amb;
    let speed = s.omega_t / p.omega_ref;
    let w_c = (p.comp_c1 * speed + p.comp_c2 * speed * speed - p.comp_c3 * (pi_c - 1.0)).max(0.0);

    let exp_a = (p.gamma_a - 1.0) / p.gamma_a;
    let exp_e = (p.gamma_e - 1.0) / p.gamma_e;
    let pow_c = w_c * p.cp_a() * p.t_amb * (pi_c.max(1.0).powf(exp_a) - 1.0) / p.eta_c;
    let pow_t = w_t * p.cp_e() * t_em * p.eta_t * (1.0 - pi_t.powf(exp_e));

    Ok(MassFlows { w_ei, w_f, w_eo, w_egr, w_t, w_c, pow_t, pow_c, t_em })
}

fn rhs(s: &EngineState, u: &EngineInputs, p: &EngineParams) -> Result<[f64; 6], EngineError> {
    let f = mass_flows(s, u, p)?;
    Ok([
        p.r_a * p.t_im / p.v_im * (f.w_c + f.w_egr - f.w_ei),
        p.r_e * f.t_em / p.v_em * (f.w_eo - f.w_t - f.w_egr),
        (f.pow_t * p.eta_m - f.pow_c) / (p.j_t * s.omega_t),
        (u.u_egr - s.u_egr1_act) / p.tau_egr1,
        (u.u_egr - s.u_egr2_act) / p.tau_egr2,
        (u.u_vgt - s.u_vgt_act) / p.tau_vgt,
    ])
}

/// Time derivative of the engine state under held inputs.
pub fn derivatives(s: &EngineState, u: &EngineInputs, p: &EngineParams) -> Result<EngineState, EngineError> {
    s.validate(p)?;
    rhs(s, u, p).map(EngineState::from_array)
}

/// One classical fourth-order Runge–Kutta step of an autonomous system.
pub fn rk4<const N: usize, E, F>(mut f: F, y: &[f64; N], dt: f64) -> Result<[f64; N], E>
where
    F: FnMut(&[f64; N]) -> Result<[f64; N], E>,
{
    let axpy = |a: f64, k: &[f64; N]| -> [f64; N] { std::array::from_fn(|i| y[i] + a * k[i]) };
    let k1 = f(y)?;
    let k2 = f(&axpy(0.5 * dt, &k1))?;
    let k3 = f(&axpy(0.5 * dt, &k2))?;
    let k4 = f(&axpy(dt, &k3))?;
    Ok(std::array::from_fn(|i| y[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])))
}

/// Advances the engine state by `dt` seconds with inputs held, then clamps
/// the result back onto the state invariants.
pub fn rk4_step(s: &EngineState, u: &EngineInputs, dt: f64, p: &EngineParams) -> Result<EngineState, EngineError> {
    if !(dt > 0.0) {
        return Err(EngineError::Step { dt });
    }
    let next = rk4(
        |y: &[f64; 6]| {
            // Intermediate stages may leave the invariant set; evaluate on its projection.
            let stage = EngineState::from_array(*y).clamped(p);
            let d = rhs(&stage, u, p)?;
            match d.iter().position(|v| !v.is_finite()) {
                Some(i) => Err(EngineError::Numeric { field: EngineState::FIELDS[i] }),
                None => Ok(d),
            }
        },
        &s.to_array(),
        dt,
    )?;
    Ok(EngineState::from_array(next).clamped(p))
}
