use super::{EngineError, EngineParams};

const MAX_ITERS: usize = 200;
const TOL: f64 = 1e-6;
const X_R_BOUNDS: (f64, f64) = (1e-4, 0.5);

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CylinderState {
    /// Residual gas fraction.
    pub x_r: f64,
    /// Charge temperature at inlet-valve closing [K].
    pub t_1: f64,
    pub iterations: usize,
}

/// Solves the coupled residual-gas / charge-temperature pair by fixed-point
/// iteration starting from `(0.05, T_im)`.
///
/// `n_e` does not enter the closure of the cycle model used here; it is only
/// range-checked.
pub fn cylinder_fixed_point(
    p_im: f64,
    p_em: f64,
    n_e: f64,
    u_delta: f64,
    p: &EngineParams,
) -> Result<CylinderState, EngineError> {
    if !(p_im > 0.0 && p_im.is_finite()) {
        return Err(EngineError::State { field: "P_im", value: p_im });
    }
    if !(p_em > 0.0 && p_em.is_finite()) {
        return Err(EngineError::State { field: "P_em", value: p_em });
    }
    if !(n_e > 0.0) {
        return Err(EngineError::Input { field: "n_e", value: n_e });
    }
    solve(p_im, p_em, u_delta, p, MAX_ITERS)
}

fn solve(p_im: f64, p_em: f64, u_delta: f64, p: &EngineParams, max_iters: usize) -> Result<CylinderState, EngineError> {
    let pressure_factor = (p_em / p_im).powf(1.0 / p.gamma_a);
    let t_e = p.t_em(u_delta);
    let q_in = p.k_q * u_delta;
    let compression = p.r_c.powf(p.gamma_a - 1.0);

    let mut x_r = 0.05;
    let mut t_1 = p.t_im;
    let mut residual = f64::INFINITY;
    for it in 1..=max_iters {
        let x_v = 1.0 + q_in / (p.c_v * t_1 * compression);
        let x_next = (pressure_factor / (p.r_c * x_v)).clamp(X_R_BOUNDS.0, X_R_BOUNDS.1);
        let t_next = x_next * t_e + (1.0 - x_next) * p.t_im;
        residual = (x_next - x_r).abs().max((t_next - t_1).abs() / t_next);
        x_r = x_next;
        t_1 = t_next;
        if residual < TOL {
            return Ok(CylinderState { x_r, t_1, iterations: it });
        }
    }
    Err(EngineError::Convergence { x_r, t1: t_1, residual })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn no_fuel_equal_pressures_gives_inverse_compression_ratio() {
        let p = EngineParams::default();
        let c = cylinder_fixed_point(1.5e5, 1.5e5, 1200.0, 0.0, &p).unwrap();
        assert_abs_diff_eq!(c.x_r, 1.0 / 17.0, epsilon = 1e-12);
        assert_abs_diff_eq!(c.x_r, 0.0588, epsilon = 1e-4);
    }

    #[test]
    fn bounds_hold_on_grid() {
        let p = EngineParams::default();
        for &p_im in &[0.5e5, 1.0e5, 2.0e5, 3.5e5] {
            for &ratio in &[0.6, 1.0, 1.5, 3.0] {
                for &u_delta in &[0.0, 50.0, 150.0, 300.0] {
                    let c = cylinder_fixed_point(p_im, p_im * ratio, 1500.0, u_delta, &p).unwrap();
                    assert!(c.x_r > 0.0 && c.x_r < 0.5 + 1e-15);
                    let t_e = p.t_em(u_delta);
                    assert!(c.t_1 >= p.t_im - 1e-9 && c.t_1 <= t_e + 1e-9);
                }
            }
        }
    }

    #[test]
    fn residual_fraction_increases_with_exhaust_pressure() {
        let p = EngineParams::default();
        for &u_delta in &[0.0, 80.0, 200.0] {
            let mut last = 0.0;
            for i in 0..60 {
                let p_em = 1.0e5 + 5e3 * i as f64;
                let c = cylinder_fixed_point(1.6e5, p_em, 1500.0, u_delta, &p).unwrap();
                assert!(c.x_r > last, "u_delta {u_delta}, p_em {p_em}");
                last = c.x_r;
            }
        }
    }

    #[test]
    fn deterministic() {
        let p = EngineParams::default();
        let a = cylinder_fixed_point(1.73e5, 2.11e5, 1400.0, 133.0, &p).unwrap();
        let b = cylinder_fixed_point(1.73e5, 2.11e5, 1400.0, 133.0, &p).unwrap();
        assert_eq!(a.x_r.to_bits(), b.x_r.to_bits());
        assert_eq!(a.t_1.to_bits(), b.t_1.to_bits());
    }

    #[test]
    fn rejects_bad_pressures() {
        let p = EngineParams::default();
        assert!(cylinder_fixed_point(0.0, 1e5, 1000.0, 10.0, &p).is_err());
        assert!(cylinder_fixed_point(1e5, -1.0, 1000.0, 10.0, &p).is_err());
    }

    #[test]
    fn non_convergence_reports_last_iterate() {
        let p = EngineParams::default();
        match solve(1.2e5, 2.0e5, 150.0, &p, 1) {
            Err(EngineError::Convergence { x_r, residual, .. }) => {
                assert!(x_r > 0.0);
                assert!(residual >= TOL);
            }
            Ok(c) => panic!("unexpected convergence after {} iterations", c.iterations),
            Err(e) => panic!("unexpected error {e}"),
        }
    }
}
