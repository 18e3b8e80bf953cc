use std::f64::consts::PI;

use fano_core::spectrum::{spectrum_from_state, SpectrumOptions};
use fano_core::steady::solve_steady_state;
use fano_core::{GridSpec, Method, PhysicalParams, SolveOptions, Topology};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn draw(rng: &mut ChaCha8Rng) -> PhysicalParams {
    let mut p = PhysicalParams::paper_preset();
    let om = p.omega_m();
    p.kappa = 2.0 * PI * rng.random_range(8e6..25e6);
    p.eta = rng.random_range(0.2..1.0);
    p.pump_power = rng.random_range(0.2e-3..1.5e-3);
    p.probe_power = p.pump_power / 100.0;
    let g_pull = 2.0 * PI * rng.random_range(0.6e19..1.6e19);
    p.coupling1 = g_pull;
    p.coupling2 = g_pull;
    let d = -om * rng.random_range(0.8..1.2);
    p.delta1 = d;
    p.delta2 = d;
    p.with_tunneling(om * rng.random_range(0.0..1.0))
}

fn max_relative_gap(p: &PhysicalParams, topology: Topology, equalize: bool, grid: &GridSpec) -> f64 {
    let mut s = solve_steady_state(p, topology, &SolveOptions::default()).unwrap();
    if equalize {
        s.delta_bar2 = s.delta_bar1;
    }
    let o = SpectrumOptions::default();
    let m = spectrum_from_state(p, topology, &s, grid, Method::MatrixSolve, &o).unwrap();
    let c = spectrum_from_state(p, topology, &s, grid, Method::ClosedForm, &o).unwrap();
    assert!(m.is_complete() && c.is_complete());
    m.points
        .iter()
        .zip(&c.points)
        .map(|(a, b)| (a.t_b - b.t_b).abs() / a.t_b.max(1.0))
        .fold(0.0, f64::max)
}

#[test]
fn single_fano_form_tracks_matrix_solve() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let grid = GridSpec::new(0.97, 1.03, 121).unwrap();
    for _ in 0..12 {
        let p = draw(&mut rng);
        let gap = max_relative_gap(&p, Topology::FixedEnds, false, &grid);
        assert!(gap <= 1e-8, "gap {gap:e} at {p:?}");
    }
}

#[test]
fn double_fano_form_tracks_matrix_solve() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let grid = GridSpec::new(0.97, 1.03, 121).unwrap();
    for _ in 0..12 {
        let p = draw(&mut rng);
        let gap = max_relative_gap(&p, Topology::DoubleMovable, true, &grid);
        assert!(gap <= 1e-8, "gap {gap:e} at {p:?}");
    }
}

#[test]
fn unequal_detunings_are_refused() {
    let p = PhysicalParams::paper_preset();
    let p = p.with_tunneling(0.4 * p.omega_m());
    let s = solve_steady_state(&p, Topology::DoubleMovable, &SolveOptions::default()).unwrap();
    let r = spectrum_from_state(
        &p,
        Topology::DoubleMovable,
        &s,
        &GridSpec::default(),
        Method::ClosedForm,
        &SpectrumOptions::default(),
    );
    assert!(matches!(r, Err(fano_core::Error::Assumption(_))));
}
