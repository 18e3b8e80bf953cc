//! Linearized probe response.
//!
//! Fluctuations around the steady state are expanded as
//! `delta a = A- e^{-i Omega t} + A+ e^{+i Omega t}` (same for `b`) and
//! `delta x_j = q_j e^{-i Omega t} + c.c.`. Collecting the `e^{-i Omega t}`
//! terms of the field equations and the conjugate of the `e^{+i Omega t}`
//! terms gives a closed 6x6 system in
//! `u = (A-, conj(A+), B-, conj(B+), q1, q2)`.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linear::{solve_refined, Matrix6, SolveReport, Vector6};
use crate::params::{derived_coefficients, mechanical_susceptibility, Mirror, PhysicalParams, Topology, HBAR};
use crate::steady::SteadyState;

const I: Complex64 = Complex64::new(0.0, 1.0);
const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// First-order Fourier amplitudes at one probe detuning.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SidebandSolution {
    /// Anti-Stokes amplitude in cavity A.
    pub a_minus: Complex64,
    /// Conjugated Stokes amplitude in cavity A (solved, not an observable).
    pub a_plus_conj: Complex64,
    pub b_minus: Complex64,
    pub b_plus_conj: Complex64,
    /// Displacement amplitudes, m.
    pub q1: Complex64,
    pub q2: Complex64,
    /// Probe detuning, rad/s.
    pub omega: f64,
}

impl SidebandSolution {
    fn from_vector(u: &Vector6, omega: f64) -> Self {
        Self {
            a_minus: u[0],
            a_plus_conj: u[1],
            b_minus: u[2],
            b_plus_conj: u[3],
            q1: u[4],
            q2: u[5],
            omega,
        }
    }

    pub fn as_array(&self) -> [Complex64; 6] {
        [
            self.a_minus,
            self.a_plus_conj,
            self.b_minus,
            self.b_plus_conj,
            self.q1,
            self.q2,
        ]
    }
}

/// Normalized backward reflection of the probe.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReflectionPoint {
    pub omega_over_om: f64,
    /// `|C_pb / eps_p|^2`.
    pub t_b: f64,
    pub c_pb_over_eps_p: Complex64,
}

/// Which sideband the probe drives.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ProbeChannel {
    /// Probe at `omega_c + Omega`, the physical configuration.
    #[default]
    Lower,
    /// Probe in the `e^{+i Omega t}` channel, i.e. at `omega_c - Omega`.
    Upper,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SidebandSystem {
    pub matrix: Matrix6,
    pub rhs: Vector6,
}

/// Builds the linear system in raw SI units.
pub fn assemble_sideband_system(
    p: &PhysicalParams,
    topology: Topology,
    s: &SteadyState,
    omega: f64,
    eps_p: f64,
) -> Result<SidebandSystem> {
    assemble_in_channel(p, topology, s, omega, eps_p, ProbeChannel::Lower)
}

pub fn assemble_in_channel(
    p: &PhysicalParams,
    topology: Topology,
    s: &SteadyState,
    omega: f64,
    eps_p: f64,
    channel: ProbeChannel,
) -> Result<SidebandSystem> {
    let c = derived_coefficients(p, s.delta_bar1, s.delta_bar2, omega);
    let (a, b) = (s.a_bar, s.b_bar);
    let (ac, bc) = (a.conj(), b.conj());
    let g = p.tunneling;
    let (g1, g2) = (p.coupling1, p.coupling2);
    let mut m = Matrix6::zeros();
    let mut rhs = Vector6::zeros();

    // (1) anti-Stokes field in A
    m[(0, 0)] = c.d1;
    m[(0, 2)] = -I * g;
    m[(0, 4)] = I * g1 * a;
    // (2) conjugated Stokes field in A
    m[(1, 1)] = c.d2.conj();
    m[(1, 3)] = I * g;
    m[(1, 4)] = -I * g1 * ac;
    // (3) anti-Stokes field in B, driven by x2 - x1 (or -x1 with M2 clamped)
    m[(2, 2)] = c.d3;
    m[(2, 0)] = -I * g;
    m[(2, 4)] = -I * g2 * b;
    // (4) conjugated Stokes field in B
    m[(3, 3)] = c.d4.conj();
    m[(3, 1)] = I * g;
    m[(3, 4)] = I * g2 * bc;
    // (5) mirror M1
    m[(4, 4)] = mechanical_susceptibility(p.mass1, p.omega1, p.gamma1, omega)?.inv();
    m[(4, 0)] = -HBAR * g1 * ac;
    m[(4, 1)] = -HBAR * g1 * a;
    m[(4, 2)] = HBAR * g2 * bc;
    m[(4, 3)] = HBAR * g2 * b;
    // (6) mirror M2
    match topology {
        Topology::DoubleMovable => {
            m[(2, 5)] = I * g2 * b;
            m[(3, 5)] = -I * g2 * bc;
            m[(5, 5)] = mechanical_susceptibility(p.mass2, p.omega2, p.gamma2, omega)?.inv();
            m[(5, 2)] = -HBAR * g2 * bc;
            m[(5, 3)] = -HBAR * g2 * b;
        }
        Topology::FixedEnds => {
            m[(5, 5)] = ONE;
        }
    }

    let forcing = -p.input_coupling() * eps_p;
    match channel {
        ProbeChannel::Lower => rhs[0] = forcing.into(),
        ProbeChannel::Upper => rhs[1] = forcing.into(),
    }
    Ok(SidebandSystem { matrix: m, rhs })
}

/// Column and row scales that bring the raw system to O(1) entries.
fn equilibration(p: &PhysicalParams, topology: Topology, s: &SteadyState, m: &Matrix6) -> ([f64; 6], [f64; 6]) {
    let mut cols = [1.0; 6];
    cols[4] = p.zero_point(Mirror::M1);
    cols[5] = p.zero_point(Mirror::M2);

    let mut rows = [1.0; 6];
    let force_scale = HBAR * p.coupling1 * s.a_bar.norm().max(1.0);
    let row_max = |r: usize| -> f64 {
        (0..6)
            .map(|j| (m[(r, j)] * cols[j]).norm())
            .fold(0.0, f64::max)
    };
    rows[4] = if force_scale > 0.0 { 1.0 / force_scale } else { 1.0 / row_max(4) };
    rows[5] = match topology {
        Topology::DoubleMovable if force_scale > 0.0 => 1.0 / force_scale,
        Topology::DoubleMovable => 1.0 / row_max(5),
        Topology::FixedEnds => 1.0 / cols[5],
    };
    (rows, cols)
}

/// Solves the probe response at one detuning.
pub fn solve_sidebands(
    p: &PhysicalParams,
    topology: Topology,
    s: &SteadyState,
    omega: f64,
    eps_p: f64,
) -> Result<SidebandSolution> {
    solve_in_channel(p, topology, s, omega, eps_p, ProbeChannel::Lower).map(|(sol, _)| sol)
}

pub fn solve_in_channel(
    p: &PhysicalParams,
    topology: Topology,
    s: &SteadyState,
    omega: f64,
    eps_p: f64,
    channel: ProbeChannel,
) -> Result<(SidebandSolution, SolveReport)> {
    let sys = assemble_in_channel(p, topology, s, omega, eps_p, channel)?;
    let (rows, cols) = equilibration(p, topology, s, &sys.matrix);
    let scaled = Matrix6::from_fn(|i, j| sys.matrix[(i, j)] * (rows[i] * cols[j]));
    let scaled_rhs = Vector6::from_fn(|i, _| sys.rhs[i] * rows[i]);
    let (y, report) = solve_refined(&scaled, &scaled_rhs)?;
    let u = Vector6::from_fn(|j, _| y[j] * cols[j]);
    let mut sol = SidebandSolution::from_vector(&u, omega);
    if topology == Topology::FixedEnds {
        sol.q2 = ZERO;
    }
    Ok((sol, report))
}

/// Backward reflection `C_pb / eps_p = 1 - sqrt(eta kappa) A- / eps_p`.
pub fn reflection_point(
    p: &PhysicalParams,
    solution: &SidebandSolution,
    eps_p: f64,
) -> Result<ReflectionPoint> {
    if !(eps_p > 0.0) {
        return Err(Error::UndefinedNormalization);
    }
    let c = ONE - p.input_coupling() * solution.a_minus / eps_p;
    Ok(ReflectionPoint {
        omega_over_om: solution.omega / p.omega_m(),
        t_b: c.norm_sqr(),
        c_pb_over_eps_p: c,
    })
}

/// Reflected pump amplitude `eps_c - sqrt(eta kappa) a_bar`.
pub fn steady_reflection(p: &PhysicalParams, s: &SteadyState) -> Complex64 {
    Complex64::new(p.pump_amplitude(), 0.0) - p.input_coupling() * s.a_bar
}

/// Matrix-route reflection at one detuning, with the probe amplitude taken
/// from the configured probe power.
pub fn matrix_reflection(
    p: &PhysicalParams,
    topology: Topology,
    s: &SteadyState,
    omega: f64,
) -> Result<ReflectionPoint> {
    let eps_p = p.probe_amplitude(omega)?;
    let sol = solve_sidebands(p, topology, s, omega, eps_p)?;
    reflection_point(p, &sol, eps_p)
}
