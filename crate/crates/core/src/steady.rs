//! Pump-only steady state of the two coupled cavities and the mirrors.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::params::{effective_detunings, Mirror, PhysicalParams, Topology, HBAR};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Mean intracavity amplitudes and mirror displacements.
///
/// Amplitudes are in field units where `|a_bar|^2` is the photon number.
#[derive(Debug, Clone, PartialEq)]
pub struct SteadyState {
    pub a_bar: Complex64,
    pub b_bar: Complex64,
    /// Mirror displacements, m.
    pub x1_bar: f64,
    pub x2_bar: f64,
    /// Effective detunings, rad/s.
    pub delta_bar1: f64,
    pub delta_bar2: f64,
    pub iterations: usize,
    /// Normalized Langevin residual, see [`steady_residual`].
    pub residual: f64,
}

impl SteadyState {
    pub fn photons_a(&self) -> f64 {
        self.a_bar.norm_sqr()
    }

    pub fn photons_b(&self) -> f64 {
        self.b_bar.norm_sqr()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveOptions {
    /// Relative tolerance on the displacement update and on the residual.
    pub tol: f64,
    pub max_iter: usize,
    /// Relaxation factor in (0, 1].
    pub damping: f64,
    /// Seed displacements; select the branch when the system is multistable.
    pub initial_x1: f64,
    pub initial_x2: f64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            tol: 1e-12,
            max_iter: 10_000,
            damping: 0.5,
            initial_x1: 0.0,
            initial_x2: 0.0,
        }
    }
}

impl SolveOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) {
            return Err(Error::InvalidParameter {
                field: "tol",
                reason: format!("must be > 0, got {}", self.tol),
            });
        }
        if self.max_iter < 1 {
            return Err(Error::InvalidParameter {
                field: "max_iter",
                reason: "must be at least 1".into(),
            });
        }
        if !(self.damping > 0.0 && self.damping <= 1.0) {
            return Err(Error::InvalidParameter {
                field: "damping",
                reason: format!("must lie in (0, 1], got {}", self.damping),
            });
        }
        Ok(())
    }
}

/// Stationary cavity fields for frozen mirror positions, real pump amplitude.
pub fn cavity_fields_given_positions(
    p: &PhysicalParams,
    topology: Topology,
    x1: f64,
    x2: f64,
) -> Result<(Complex64, Complex64)> {
    cavity_fields_with_drive(p, topology, x1, x2, Complex64::new(p.pump_amplitude(), 0.0))
}

/// As [`cavity_fields_given_positions`] with an arbitrary complex pump amplitude.
pub fn cavity_fields_with_drive(
    p: &PhysicalParams,
    topology: Topology,
    x1: f64,
    x2: f64,
    drive: Complex64,
) -> Result<(Complex64, Complex64)> {
    let (bar1, bar2) = effective_detunings(p, topology, x1, x2);
    let theta1 = Complex64::new(-p.kappa / 2.0, bar1);
    let theta2 = Complex64::new(-p.kappa / 2.0, bar2);
    let g = p.tunneling;
    let det = theta1 * theta2 + g * g;
    let scale = theta1.norm() * theta2.norm() + g * g;
    if det.norm() <= f64::EPSILON * scale {
        return Err(Error::DegenerateResonance {
            magnitude: det.norm(),
        });
    }
    let a = -p.input_coupling() * drive * theta2 / det;
    let b = I * g * a / theta2;
    Ok((a, b))
}

fn radiation_pressure_positions(
    p: &PhysicalParams,
    topology: Topology,
    a: Complex64,
    b: Complex64,
) -> (f64, f64) {
    let na = a.norm_sqr();
    let nb = b.norm_sqr();
    let x1 = HBAR * (p.coupling1 * na - p.coupling2 * nb) / (p.mass1 * p.omega1 * p.omega1);
    let x2 = match topology {
        Topology::DoubleMovable => HBAR * p.coupling2 * nb / (p.mass2 * p.omega2 * p.omega2),
        Topology::FixedEnds => 0.0,
    };
    (x1, x2)
}

fn build_state(
    p: &PhysicalParams,
    topology: Topology,
    drive: Complex64,
    x1: f64,
    x2: f64,
    iterations: usize,
) -> Result<SteadyState> {
    let (a_bar, b_bar) = cavity_fields_with_drive(p, topology, x1, x2, drive)?;
    let (delta_bar1, delta_bar2) = effective_detunings(p, topology, x1, x2);
    let mut s = SteadyState {
        a_bar,
        b_bar,
        x1_bar: x1,
        x2_bar: x2,
        delta_bar1,
        delta_bar2,
        iterations,
        residual: 0.0,
    };
    s.residual = residual_with_drive(p, topology, &s, drive);
    Ok(s)
}

/// Solves the coupled field/displacement steady state by damped fixed-point
/// iteration on the mirror displacements, seeded from `o.initial_x*`.
pub fn solve_steady_state(
    p: &PhysicalParams,
    topology: Topology,
    o: &SolveOptions,
) -> Result<SteadyState> {
    solve_steady_state_with_drive(p, topology, Complex64::new(p.pump_amplitude(), 0.0), o)
}

pub fn solve_steady_state_with_drive(
    p: &PhysicalParams,
    topology: Topology,
    drive: Complex64,
    o: &SolveOptions,
) -> Result<SteadyState> {
    p.validate()?;
    o.validate()?;
    let zp1 = p.zero_point(Mirror::M1);
    let zp2 = p.zero_point(Mirror::M2);
    let mut x1 = o.initial_x1;
    let mut x2 = match topology {
        Topology::DoubleMovable => o.initial_x2,
        Topology::FixedEnds => 0.0,
    };
    let mut change = f64::INFINITY;
    for it in 1..=o.max_iter {
        let (a, b) = cavity_fields_with_drive(p, topology, x1, x2, drive)?;
        let (t1, t2) = radiation_pressure_positions(p, topology, a, b);
        let n1 = (1.0 - o.damping) * x1 + o.damping * t1;
        let n2 = (1.0 - o.damping) * x2 + o.damping * t2;
        if !(n1.is_finite() && n2.is_finite()) {
            return Err(Error::Divergence { iterations: it });
        }
        change = ((n1 - x1).abs() / n1.abs().max(zp1)).max((n2 - x2).abs() / n2.abs().max(zp2));
        x1 = n1;
        x2 = n2;
        if change < o.tol {
            let s = build_state(p, topology, drive, x1, x2, it)?;
            if s.residual <= o.tol {
                return Ok(s);
            }
        }
    }
    let last = build_state(p, topology, drive, x1, x2, o.max_iter)?;
    Err(Error::IterationLimit {
        iterations: o.max_iter,
        last_change: change,
        last: Box::new(last),
    })
}

/// Largest normalized residual of the stationary Langevin equations.
///
/// Field equations are scaled by `sqrt(eta kappa) eps_c`, mechanical ones by
/// `m_j Omega_j^2 max(|x_j|, x_zp)`.
pub fn steady_residual(p: &PhysicalParams, topology: Topology, s: &SteadyState) -> f64 {
    residual_with_drive(p, topology, s, Complex64::new(p.pump_amplitude(), 0.0))
}

fn residual_with_drive(
    p: &PhysicalParams,
    topology: Topology,
    s: &SteadyState,
    drive: Complex64,
) -> f64 {
    let (bar1, bar2) = effective_detunings(p, topology, s.x1_bar, s.x2_bar);
    let theta1 = Complex64::new(-p.kappa / 2.0, bar1);
    let theta2 = Complex64::new(-p.kappa / 2.0, bar2);
    let g = p.tunneling;
    let forcing = p.input_coupling() * drive;
    let field_scale = if forcing.norm() > 0.0 { forcing.norm() } else { 1.0 };

    let eq_a = (theta1 * s.a_bar - I * g * s.b_bar + forcing).norm() / field_scale;
    let eq_b = (theta2 * s.b_bar - I * g * s.a_bar).norm() / field_scale;

    let k1 = p.mass1 * p.omega1 * p.omega1;
    let k2 = p.mass2 * p.omega2 * p.omega2;
    let zp1 = p.zero_point(Mirror::M1);
    let zp2 = p.zero_point(Mirror::M2);
    let (na, nb) = (s.a_bar.norm_sqr(), s.b_bar.norm_sqr());
    let eq_x1 = (k1 * s.x1_bar - HBAR * (p.coupling1 * na - p.coupling2 * nb)).abs()
        / (k1 * s.x1_bar.abs().max(zp1));
    let eq_x2 = match topology {
        Topology::DoubleMovable => {
            (k2 * s.x2_bar - HBAR * p.coupling2 * nb).abs() / (k2 * s.x2_bar.abs().max(zp2))
        }
        Topology::FixedEnds => s.x2_bar.abs() / zp2,
    };
    eq_a.max(eq_b).max(eq_x1).max(eq_x2)
}

/// `|b_bar|^2 / |a_bar|^2`.
pub fn intensity_ratio(_p: &PhysicalParams, s: &SteadyState) -> Result<f64> {
    let na = s.a_bar.norm_sqr();
    if na == 0.0 {
        return Err(Error::UndefinedRatio);
    }
    Ok(s.b_bar.norm_sqr() / na)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
    }

    fn undriven() -> PhysicalParams {
        // Zero pump power fails validation, so drive with zero amplitude instead.
        PhysicalParams::paper_preset().with_tunneling(0.3 * 2.0 * std::f64::consts::PI * 51.8e6)
    }

    #[test]
    fn fields_vanish_without_drive() {
        let p = undriven();
        let (a, b) = cavity_fields_with_drive(&p, Topology::DoubleMovable, 0.0, 0.0, 0.0.into()).unwrap();
        assert_eq!(a, Complex64::new(0.0, 0.0));
        assert_eq!(b, Complex64::new(0.0, 0.0));
    }

    #[test]
    fn decoupled_cavities() {
        let p = PhysicalParams::paper_preset();
        let (a, b) = cavity_fields_given_positions(&p, Topology::FixedEnds, 0.0, 0.0).unwrap();
        assert_eq!(b, Complex64::new(0.0, 0.0));
        let theta1 = Complex64::new(-p.kappa / 2.0, p.delta1);
        let expected = -p.input_coupling() * p.pump_amplitude() / theta1;
        assert!((a - expected).norm() < 1e-13 * expected.norm());
    }

    #[test]
    fn fields_back_substitute() {
        let p = PhysicalParams::paper_preset();
        let p = p.with_tunneling(0.5 * p.omega_m());
        let (a, b) = cavity_fields_given_positions(&p, Topology::DoubleMovable, 0.0, 0.0).unwrap();
        let theta1 = Complex64::new(-p.kappa / 2.0, p.delta1);
        let theta2 = Complex64::new(-p.kappa / 2.0, p.delta2);
        let f = p.input_coupling() * p.pump_amplitude();
        let r1 = theta1 * a - I * p.tunneling * b + f;
        let r2 = theta2 * b - I * p.tunneling * a;
        assert!(r1.norm() < 1e-12 * f);
        assert!(r2.norm() < 1e-12 * f);
    }

    #[test]
    fn undriven_solve_is_trivial() {
        let p = undriven();
        let s = solve_steady_state_with_drive(&p, Topology::DoubleMovable, 0.0.into(), &SolveOptions::default())
            .unwrap();
        assert_eq!(s.iterations, 1);
        assert_eq!((s.x1_bar, s.x2_bar), (0.0, 0.0));
        assert_eq!(s.a_bar, Complex64::new(0.0, 0.0));
        assert_eq!(s.residual, 0.0);
    }

    #[test]
    fn single_cavity_fixed_point() {
        let p = PhysicalParams::paper_preset();
        let o = SolveOptions::default();
        let s = solve_steady_state(&p, Topology::DoubleMovable, &o).unwrap();
        assert_eq!(s.x2_bar, 0.0);
        assert_eq!(s.b_bar, Complex64::new(0.0, 0.0));
        let x1 = HBAR * p.coupling1 * s.a_bar.norm_sqr() / (p.mass1 * p.omega1 * p.omega1);
        assert!(rel(s.x1_bar, x1) < 1e-11);
        assert!(s.residual <= o.tol);
        // Independent scalar check: a = -sqrt(eta kappa) eps / Theta1(x1).
        let theta1 = Complex64::new(-p.kappa / 2.0, p.delta1 + p.coupling1 * s.x1_bar);
        let a = -p.input_coupling() * p.pump_amplitude() / theta1;
        assert!((a - s.a_bar).norm() < 1e-12 * a.norm());
    }

    #[test]
    fn double_movable_converges_tightly() {
        let p = PhysicalParams::paper_preset();
        let p = p.with_tunneling(0.6 * p.omega_m());
        let s = solve_steady_state(&p, Topology::DoubleMovable, &SolveOptions::default()).unwrap();
        assert!(s.residual < 1e-10);
        assert!(s.x2_bar > 0.0);
        assert_eq!(steady_residual(&p, Topology::DoubleMovable, &s), s.residual);
    }

    #[test]
    fn fixed_ends_keeps_end_mirror_still() {
        let p = PhysicalParams::paper_preset();
        let p = p.with_tunneling(0.6 * p.omega_m());
        let o = SolveOptions {
            initial_x2: 1e-12,
            ..SolveOptions::default()
        };
        let s = solve_steady_state(&p, Topology::FixedEnds, &o).unwrap();
        assert_eq!(s.x2_bar, 0.0);
    }

    #[test]
    fn perturbation_raises_residual() {
        let p = PhysicalParams::paper_preset();
        let p = p.with_tunneling(0.4 * p.omega_m());
        let s = solve_steady_state(&p, Topology::DoubleMovable, &SolveOptions::default()).unwrap();
        let mut bumped = s.clone();
        bumped.x1_bar += 1e-13;
        assert!(steady_residual(&p, Topology::DoubleMovable, &bumped) > s.residual);
    }

    #[test]
    fn zero_state_has_zero_residual() {
        let p = undriven();
        let s = SteadyState {
            a_bar: 0.0.into(),
            b_bar: 0.0.into(),
            x1_bar: 0.0,
            x2_bar: 0.0,
            delta_bar1: p.delta1,
            delta_bar2: p.delta2,
            iterations: 0,
            residual: 0.0,
        };
        assert_eq!(residual_with_drive(&p, Topology::DoubleMovable, &s, 0.0.into()), 0.0);
    }

    #[test]
    fn iteration_limit_carries_last_iterate() {
        let p = PhysicalParams::paper_preset();
        let o = SolveOptions {
            max_iter: 2,
            ..SolveOptions::default()
        };
        match solve_steady_state(&p, Topology::FixedEnds, &o) {
            Err(Error::IterationLimit { iterations, last, .. }) => {
                assert_eq!(iterations, 2);
                assert!(last.x1_bar > 0.0);
            }
            other => panic!("expected iteration limit, got {other:?}"),
        }
    }

    #[test]
    fn invalid_options_rejected() {
        let p = PhysicalParams::paper_preset();
        for o in [
            SolveOptions { tol: 0.0, ..Default::default() },
            SolveOptions { max_iter: 0, ..Default::default() },
            SolveOptions { damping: 0.0, ..Default::default() },
            SolveOptions { damping: 1.5, ..Default::default() },
        ] {
            assert!(solve_steady_state(&p, Topology::FixedEnds, &o).is_err());
        }
    }

    #[test]
    fn intensity_ratio_examples() {
        let p = PhysicalParams::paper_preset();
        let s = solve_steady_state(&p, Topology::DoubleMovable, &SolveOptions::default()).unwrap();
        assert_eq!(intensity_ratio(&p, &s).unwrap(), 0.0);

        let om = p.omega_m();
        let p = p.with_tunneling(om);
        let s = solve_steady_state(&p, Topology::DoubleMovable, &SolveOptions::default()).unwrap();
        let identity = p.tunneling.powi(2) / (s.delta_bar2.powi(2) + p.kappa.powi(2) / 4.0);
        assert!(rel(intensity_ratio(&p, &s).unwrap(), identity) < 1e-12);

        let zero = SteadyState { a_bar: 0.0.into(), ..s };
        assert!(matches!(intensity_ratio(&p, &zero), Err(Error::UndefinedRatio)));
    }

    #[test]
    fn intensity_identity_arithmetic() {
        // DeltaBar2 = -Omega_m, kappa = 2 pi 15 MHz, g = Omega_m / 2.
        let p = PhysicalParams::paper_preset();
        let om = p.omega_m();
        let s = SteadyState {
            a_bar: Complex64::new(3.0, -1.0),
            b_bar: Complex64::new(0.0, 0.0),
            x1_bar: 0.0,
            x2_bar: 0.0,
            delta_bar1: -om,
            delta_bar2: -om,
            iterations: 0,
            residual: 0.0,
        };
        let g = 0.5 * om;
        let theta2 = Complex64::new(-p.kappa / 2.0, -om);
        let s = SteadyState { b_bar: I * g * s.a_bar / theta2, ..s };
        let r = intensity_ratio(&p, &s).unwrap();
        assert!(rel(r, 0.244_866_745_270_105_02) < 1e-13);
    }
}
