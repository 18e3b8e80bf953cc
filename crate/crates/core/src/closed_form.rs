//! Closed-form reflection coefficients obtained by eliminating the fields and
//! mirror amplitudes by hand. They carry extra assumptions and serve as
//! independent checks of the matrix route.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::params::{derived_coefficients, mechanical_susceptibility, PhysicalParams, Topology, HBAR};
use crate::steady::SteadyState;

const I: Complex64 = Complex64::new(0.0, 1.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Default bound on `|DeltaBar1 - DeltaBar2| / kappa` for the double-Fano form.
pub const DEFAULT_DETUNING_TOLERANCE: f64 = 1e-9;

fn nonzero(name: &'static str, z: Complex64, scale: f64) -> Result<Complex64> {
    if z.norm() <= f64::EPSILON * scale || !z.is_finite() {
        Err(Error::SingularCoefficient(name))
    } else {
        Ok(z)
    }
}

/// Single-Fano reflection with the end mirrors clamped and `G1 = G2`.
///
/// The `i`-terms of the two mechanical self-energy coefficients carry the
/// sign obtained from eliminating the conjugate field block: the anti-Stokes
/// block contributes `-iG(D3|a|^2 + D1|b|^2)`, the Stokes block
/// `+iG(conj(D4)|a|^2 + conj(D2)|b|^2)`.
pub fn closed_form_single_fano_tb(
    p: &PhysicalParams,
    topology: Topology,
    s: &SteadyState,
    omega: f64,
    eps_p: f64,
) -> Result<f64> {
    if topology != Topology::FixedEnds {
        return Err(Error::Assumption("single-Fano form needs fixed end mirrors".into()));
    }
    let coupling = p.coupling1;
    if (p.coupling1 - p.coupling2).abs() > 1e-12 * p.coupling1.abs().max(p.coupling2.abs()) {
        return Err(Error::Assumption(format!(
            "single-Fano form needs G1 = G2 (got {} and {})",
            p.coupling1, p.coupling2
        )));
    }
    if !(eps_p > 0.0) {
        return Err(Error::UndefinedNormalization);
    }
    let c = derived_coefficients(p, s.delta_bar1, s.delta_bar2, omega);
    let g = p.tunneling;
    if coupling == 0.0 {
        // No optomechanical coupling: the mechanical term drops out entirely.
        let det = nonzero("D1 D3 + g^2", c.d1 * c.d3 + g * g, c.d1.norm() * c.d3.norm() + g * g)?;
        return Ok((ONE + p.eta * p.kappa * c.d3 / det).norm_sqr());
    }
    let (a, b) = (s.a_bar, s.b_bar);
    let na = a.norm_sqr();
    let nb = b.norm_sqr();
    let cross = a.conj() * b + a * b.conj();
    let (d1, d3) = (c.d1, c.d3);
    let (d2c, d4c) = (c.d2.conj(), c.d4.conj());

    let det = nonzero("D1 D3 + g^2", d1 * d3 + g * g, d1.norm() * d3.norm() + g * g)?;
    let det_conj = nonzero("D2* D4* + g^2", d2c * d4c + g * g, d2c.norm() * d4c.norm() + g * g)?;

    let c1 = (-g * coupling * cross - I * coupling * (d3 * na + d1 * nb)) / det;
    let c2 = (-g * coupling * cross + I * coupling * (d4c * na + d2c * nb)) / det_conj;
    let chi1 = mechanical_susceptibility(p.mass1, p.omega1, p.gamma1, omega)?;
    let c3 = -ONE / (HBAR * coupling * chi1);
    let sum = c1 + c2 + c3;
    let sum = nonzero("C1' + C2' + C3'", sum, c1.norm() + c2.norm() + c3.norm())?;

    let numerator = I * g * g * coupling * nb - I * coupling * d3 * d3 * na - g * d3 * coupling * cross;
    let bracket = numerator / (det * det * sum) - d3 / det;
    let r = ONE - p.eta * p.kappa * bracket;
    Ok(r.norm_sqr())
}

/// Double-Fano reflection with both outer mirrors movable, valid when the two
/// effective detunings coincide (`D1 = D3`, `D2 = D4`).
///
/// `detuning_tolerance` bounds `|DeltaBar1 - DeltaBar2| / kappa`; the formula
/// is evaluated with `DeltaBar1` for both cavities.
pub fn closed_form_double_fano_tb(
    p: &PhysicalParams,
    topology: Topology,
    s: &SteadyState,
    omega: f64,
    eps_p: f64,
    detuning_tolerance: f64,
) -> Result<f64> {
    if topology != Topology::DoubleMovable {
        return Err(Error::Assumption("double-Fano form needs both outer mirrors movable".into()));
    }
    let mismatch = (s.delta_bar1 - s.delta_bar2).abs() / p.kappa;
    if mismatch > detuning_tolerance {
        return Err(Error::Assumption(format!(
            "double-Fano form needs equal effective detunings (|dDelta|/kappa = {mismatch:e} > {detuning_tolerance:e})"
        )));
    }
    if !(eps_p > 0.0) {
        return Err(Error::UndefinedNormalization);
    }
    let c = derived_coefficients(p, s.delta_bar1, s.delta_bar1, omega);
    let g = p.tunneling;
    let (g1, g2) = (p.coupling1, p.coupling2);
    let (a, b) = (s.a_bar, s.b_bar);
    let (ac, bc) = (a.conj(), b.conj());
    let na = a.norm_sqr();
    let nb = b.norm_sqr();
    let d1 = c.d1;
    let d2c = c.d2.conj();

    let e1 = nonzero("D1^2 + g^2", d1 * d1 + g * g, d1.norm_sqr() + g * g)?;
    let e2 = nonzero("conj(D2)^2 + g^2", d2c * d2c + g * g, d2c.norm_sqr() + g * g)?;
    let chi1 = mechanical_susceptibility(p.mass1, p.omega1, p.gamma1, omega)?;
    let chi2 = mechanical_susceptibility(p.mass2, p.omega2, p.gamma2, omega)?;
    if g1 == 0.0 || g2 == 0.0 {
        return Err(Error::SingularCoefficient("G1 G2"));
    }

    let big_a = -(g * g1 * a * bc + I * d1 * g2 * nb) / e1 - (g * g1 * ac * b - I * g2 * d2c * nb) / e2;
    let mech2 = ONE / (HBAR * g2 * chi2);
    let big_b = I * g2 * d2c * nb / e2 - I * d1 * g2 * nb / e1 - mech2;
    let big_b = nonzero("B", big_b, mech2.norm())?;
    let r = ONE - big_a / big_b;

    let c1 = (-g * g2 * (r * a * bc + ac * b) + I * g2 * g2 * r * nb * d2c / g1 + I * g1 * na * d2c) / e2;
    let c2 = (-g * g2 * (r * ac * b + a * bc) - I * g2 * g2 * r * nb * d1 / g1 - I * g1 * na * d1) / e1;
    let c3 = -ONE / (HBAR * g1 * chi1);
    let c11 = (g * g1 * ac * b + I * g2 * d1 * nb) / (big_b * e1);
    let c22 = (g * g1 * a * bc - I * g2 * d2c * nb) / (big_b * e2);
    let sum = c1 + c2 + c3;
    let sum = nonzero("C1 + C2 + C3", sum, c1.norm() + c2.norm() + c3.norm())?;

    let w = ONE + c11 + c22;
    let numerator = I * g * g * g2 * g2 * r * w / g1 * nb - I * g1 * d1 * d1 * na - d1 * g * g2 * (r * ac * b + w * a * bc);
    let bracket = numerator / (e1 * e1 * sum) + I * g * g * g2 * nb / (big_b * e1 * e1) - d1 / e1;
    let t = ONE - p.eta * p.kappa * bracket;
    Ok(t.norm_sqr())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sideband::{reflection_point, solve_sidebands};
    use crate::steady::{solve_steady_state, SolveOptions};

    fn matrix_tb(p: &PhysicalParams, t: Topology, s: &SteadyState, omega: f64) -> f64 {
        let sol = solve_sidebands(p, t, s, omega, 1.0).unwrap();
        reflection_point(p, &sol, 1.0).unwrap().t_b
    }

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * b.abs().max(1.0)
    }

    #[test]
    fn single_fano_bare_cavity_reduction() {
        let mut p = PhysicalParams::paper_preset();
        p.coupling1 = 0.0;
        p.coupling2 = 0.0;
        let s = solve_steady_state(&p, Topology::FixedEnds, &SolveOptions::default()).unwrap();
        for k in 0..9 {
            let omega = (0.98 + 0.005 * k as f64) * p.omega_m();
            let cf = closed_form_single_fano_tb(&p, Topology::FixedEnds, &s, omega, 1.0).unwrap();
            let d1 = derived_coefficients(&p, s.delta_bar1, s.delta_bar2, omega).d1;
            let bare = (ONE + p.eta * p.kappa / d1).norm_sqr();
            assert!(close(cf, bare, 1e-10), "{cf} vs {bare}");
            assert!(close(cf, matrix_tb(&p, Topology::FixedEnds, &s, omega), 1e-10));
        }
    }

    #[test]
    fn single_fano_matches_matrix_route() {
        let p = PhysicalParams::paper_preset();
        let p = p.with_tunneling(0.2 * p.omega_m());
        let s = solve_steady_state(&p, Topology::FixedEnds, &SolveOptions::default()).unwrap();
        let omega = p.omega_m();
        let cf = closed_form_single_fano_tb(&p, Topology::FixedEnds, &s, omega, 1.0).unwrap();
        let mx = matrix_tb(&p, Topology::FixedEnds, &s, omega);
        assert!(close(cf, mx, 1e-8), "{cf} vs {mx}");
    }

    #[test]
    fn single_fano_decoupled_limit() {
        let p = PhysicalParams::paper_preset();
        let mut s = solve_steady_state(&p, Topology::FixedEnds, &SolveOptions::default()).unwrap();
        s.b_bar = 0.0.into();
        for k in 0..5 {
            let omega = (0.995 + 0.0025 * k as f64) * p.omega_m();
            let cf = closed_form_single_fano_tb(&p, Topology::FixedEnds, &s, omega, 1.0).unwrap();
            assert!(close(cf, matrix_tb(&p, Topology::FixedEnds, &s, omega), 1e-8));
        }
    }

    #[test]
    fn single_fano_rejects_violated_assumptions() {
        let p = PhysicalParams::paper_preset();
        let s = solve_steady_state(&p, Topology::FixedEnds, &SolveOptions::default()).unwrap();
        let om = p.omega_m();
        assert!(matches!(
            closed_form_single_fano_tb(&p, Topology::DoubleMovable, &s, om, 1.0),
            Err(Error::Assumption(_))
        ));
        let q = PhysicalParams { coupling2: 2.0 * p.coupling1, ..p.clone() };
        assert!(matches!(
            closed_form_single_fano_tb(&q, Topology::FixedEnds, &s, om, 1.0),
            Err(Error::Assumption(_))
        ));
    }

    fn equal_detuning_state(g_over_om: f64) -> (PhysicalParams, SteadyState) {
        let p = PhysicalParams::paper_preset();
        let p = p.with_tunneling(g_over_om * p.omega_m());
        let mut s = solve_steady_state(&p, Topology::DoubleMovable, &SolveOptions::default()).unwrap();
        s.delta_bar2 = s.delta_bar1;
        (p, s)
    }

    #[test]
    fn double_fano_decoupled_limit() {
        let (p, mut s) = equal_detuning_state(0.0);
        s.b_bar = 0.0.into();
        for k in 0..5 {
            let omega = (0.99 + 0.005 * k as f64) * p.omega_m();
            let cf = closed_form_double_fano_tb(&p, Topology::DoubleMovable, &s, omega, 1.0, DEFAULT_DETUNING_TOLERANCE)
                .unwrap();
            assert!(close(cf, matrix_tb(&p, Topology::DoubleMovable, &s, omega), 1e-8));
        }
    }

    #[test]
    fn double_fano_matches_matrix_route_across_window() {
        let (p, s) = equal_detuning_state(0.4);
        for k in 0..=40 {
            let omega = (0.98 + 0.001 * k as f64) * p.omega_m();
            let cf = closed_form_double_fano_tb(&p, Topology::DoubleMovable, &s, omega, 1.0, DEFAULT_DETUNING_TOLERANCE)
                .unwrap();
            let mx = matrix_tb(&p, Topology::DoubleMovable, &s, omega);
            assert!(close(cf, mx, 1e-8), "Omega/Om = {}: {cf} vs {mx}", omega / p.omega_m());
        }
    }

    #[test]
    fn double_fano_equal_couplings_are_finite() {
        let (p, s) = equal_detuning_state(0.6);
        assert_eq!(p.coupling1, p.coupling2);
        let om = p.omega_m();
        let cf = closed_form_double_fano_tb(&p, Topology::DoubleMovable, &s, om, 1.0, DEFAULT_DETUNING_TOLERANCE).unwrap();
        assert!(cf.is_finite());
        assert!(close(cf, matrix_tb(&p, Topology::DoubleMovable, &s, om), 1e-8));
    }

    #[test]
    fn double_fano_rejects_unequal_detunings() {
        let p = PhysicalParams::paper_preset();
        let p = p.with_tunneling(0.4 * p.omega_m());
        let s = solve_steady_state(&p, Topology::DoubleMovable, &SolveOptions::default()).unwrap();
        assert!(matches!(
            closed_form_double_fano_tb(&p, Topology::DoubleMovable, &s, p.omega_m(), 1.0, DEFAULT_DETUNING_TOLERANCE),
            Err(Error::Assumption(_))
        ));
    }
}
