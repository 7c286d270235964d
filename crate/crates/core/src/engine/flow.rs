use super::EngineError;

/// Normalized compressible orifice-flow factor Ψ(Π) for downstream/upstream
/// pressure ratio `pi`. Below the critical ratio the flow is choked and the
/// factor is held at its critical value.
pub fn psi_flow(pi: f64, gamma: f64) -> Result<f64, EngineError> {
    if !(pi > 0.0 && pi <= 1.0) {
        return Err(EngineError::Domain { pi });
    }
    let pi_crit = (2.0 / (gamma + 1.0)).powf(gamma / (gamma - 1.0));
    let pi = pi.max(pi_crit);
    let inner = (2.0 * gamma / (gamma - 1.0)) * (pi.powf(2.0 / gamma) - pi.powf((gamma + 1.0) / gamma));
    // Tiny negative values appear at pi = 1 from rounding.
    Ok(inner.max(0.0).sqrt())
}

/// Orifice-flow factor with the branch near `pi = 1` replaced by the secant
/// through `(pi_lin, Ψ(pi_lin))` and `(1, 0)`. The exact factor has an
/// unbounded slope at `pi = 1`, which makes the manifold equations stiff for
/// a fixed-step explicit integrator.
pub fn psi_flow_regularized(pi: f64, gamma: f64, pi_lin: f64) -> Result<f64, EngineError> {
    if pi > pi_lin && pi <= 1.0 {
        Ok(psi_flow(pi_lin, gamma)? * (1.0 - pi) / (1.0 - pi_lin))
    } else {
        psi_flow(pi, gamma)
    }
}

/// Combined output of the two-lag EGR actuator, with overshoot gain `k_egr`.
pub fn egr_actuator_output(u1: f64, u2: f64, k_egr: f64) -> f64 {
    (k_egr * u1 - (k_egr - 1.0) * u2).clamp(0.0, 100.0)
}
