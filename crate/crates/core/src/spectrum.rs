//! Reflection spectra over probe-detuning grids and sweeps over the
//! tunneling rate.

use rayon::prelude::*;

use crate::closed_form::{closed_form_double_fano_tb, closed_form_single_fano_tb, DEFAULT_DETUNING_TOLERANCE};
use crate::error::{Error, Result};
use crate::params::{PhysicalParams, Topology};
use crate::sideband::{reflection_point, solve_sidebands, ReflectionPoint};
use crate::steady::{intensity_ratio, solve_steady_state, SolveOptions, SteadyState};

/// Uniform grid in `Omega / Omega_m`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub omega_min_over_om: f64,
    pub omega_max_over_om: f64,
    pub n_points: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            omega_min_over_om: 0.98,
            omega_max_over_om: 1.02,
            n_points: 4001,
        }
    }
}

impl GridSpec {
    pub fn new(min: f64, max: f64, n_points: usize) -> Result<Self> {
        let g = Self {
            omega_min_over_om: min,
            omega_max_over_om: max,
            n_points,
        };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.omega_min_over_om.is_finite() && self.omega_max_over_om.is_finite())
            || !(self.omega_min_over_om < self.omega_max_over_om)
        {
            return Err(Error::InvalidParameter {
                field: "grid",
                reason: format!(
                    "need finite min < max, got [{}, {}]",
                    self.omega_min_over_om, self.omega_max_over_om
                ),
            });
        }
        if self.n_points < 2 {
            return Err(Error::InvalidParameter {
                field: "grid_points",
                reason: format!("need at least 2 points, got {}", self.n_points),
            });
        }
        Ok(())
    }

    pub fn step(&self) -> f64 {
        (self.omega_max_over_om - self.omega_min_over_om) / (self.n_points - 1) as f64
    }

    /// Grid values; both endpoints are hit exactly.
    pub fn values(&self) -> Vec<f64> {
        let n = self.n_points - 1;
        let span = self.omega_max_over_om - self.omega_min_over_om;
        (0..=n)
            .map(|i| {
                if i == n {
                    self.omega_max_over_om
                } else {
                    self.omega_min_over_om + span * (i as f64 / n as f64)
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Method {
    #[default]
    MatrixSolve,
    ClosedForm,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::MatrixSolve => "matrix",
            Method::ClosedForm => "closed",
        }
    }
}

/// A grid point that could not be evaluated.
#[derive(Debug, Clone)]
pub struct PointFailure {
    pub omega_over_om: f64,
    pub error: Error,
}

#[derive(Debug, Clone)]
pub struct Spectrum {
    pub grid: GridSpec,
    /// Successfully evaluated points, strictly increasing in `omega_over_om`.
    pub points: Vec<ReflectionPoint>,
    /// Points skipped because of a local singularity.
    pub gaps: Vec<PointFailure>,
    pub g_over_om: f64,
    pub topology: Topology,
    pub method: Method,
    pub steady: SteadyState,
}

impl Spectrum {
    pub fn omegas(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.omega_over_om).collect()
    }

    pub fn t_b(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.t_b).collect()
    }

    pub fn is_complete(&self) -> bool {
        self.gaps.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumOptions {
    pub solve: SolveOptions,
    /// Allowed `|DeltaBar1 - DeltaBar2| / kappa` for the double-Fano closed form.
    pub closed_form_tolerance: f64,
    pub parallel: bool,
}

impl Default for SpectrumOptions {
    fn default() -> Self {
        Self {
            solve: SolveOptions::default(),
            closed_form_tolerance: DEFAULT_DETUNING_TOLERANCE,
            parallel: true,
        }
    }
}

fn evaluate_point(
    p: &PhysicalParams,
    topology: Topology,
    s: &SteadyState,
    x: f64,
    method: Method,
    closed_form_tolerance: f64,
) -> Result<ReflectionPoint> {
    let omega = x * p.omega_m();
    let eps_p = p.probe_amplitude(omega)?;
    let point = match method {
        Method::MatrixSolve => {
            let sol = solve_sidebands(p, topology, s, omega, eps_p)?;
            reflection_point(p, &sol, eps_p)?
        }
        Method::ClosedForm => {
            let t_b = match topology {
                Topology::FixedEnds => closed_form_single_fano_tb(p, topology, s, omega, eps_p)?,
                Topology::DoubleMovable => {
                    closed_form_double_fano_tb(p, topology, s, omega, eps_p, closed_form_tolerance)?
                }
            };
            ReflectionPoint {
                omega_over_om: x,
                t_b,
                c_pb_over_eps_p: num_complex::Complex64::new(t_b.sqrt(), 0.0),
            }
        }
    };
    if !(point.t_b.is_finite() && point.t_b >= 0.0) {
        return Err(Error::Domain(format!("non-finite reflection {}", point.t_b)));
    }
    Ok(ReflectionPoint {
        omega_over_om: x,
        ..point
    })
}

/// Evaluates a spectrum for an already solved steady state.
///
/// Closed-form assumption violations abort the whole spectrum; any other
/// per-point failure is recorded as a gap.
pub fn spectrum_from_state(
    p: &PhysicalParams,
    topology: Topology,
    s: &SteadyState,
    grid: &GridSpec,
    method: Method,
    opts: &SpectrumOptions,
) -> Result<Spectrum> {
    grid.validate()?;
    let xs = grid.values();
    if method == Method::ClosedForm {
        if let Err(e @ Error::Assumption(_)) =
            evaluate_point(p, topology, s, xs[0], method, opts.closed_form_tolerance)
        {
            return Err(e);
        }
    }
    let eval = |&x: &f64| (x, evaluate_point(p, topology, s, x, method, opts.closed_form_tolerance));
    let results: Vec<(f64, Result<ReflectionPoint>)> = if opts.parallel {
        xs.par_iter().map(eval).collect()
    } else {
        xs.iter().map(eval).collect()
    };
    let mut points = Vec::with_capacity(results.len());
    let mut gaps = Vec::new();
    for (x, r) in results {
        match r {
            Ok(pt) => points.push(pt),
            Err(error) => gaps.push(PointFailure {
                omega_over_om: x,
                error,
            }),
        }
    }
    Ok(Spectrum {
        grid: *grid,
        points,
        gaps,
        g_over_om: p.tunneling / p.omega_m(),
        topology,
        method,
        steady: s.clone(),
    })
}

/// One steady-state solve, then the reflection at every grid point.
pub fn compute_spectrum(p: &PhysicalParams, topology: Topology, grid: &GridSpec, method: Method) -> Result<Spectrum> {
    compute_spectrum_with(p, topology, grid, method, &SpectrumOptions::default())
}

pub fn compute_spectrum_with(
    p: &PhysicalParams,
    topology: Topology,
    grid: &GridSpec,
    method: Method,
    opts: &SpectrumOptions,
) -> Result<Spectrum> {
    grid.validate()?;
    let s = solve_steady_state(p, topology, &opts.solve)?;
    spectrum_from_state(p, topology, &s, grid, method, opts)
}

fn check_g_list(g_over_om: &[f64]) -> Result<()> {
    if g_over_om.is_empty() {
        return Err(Error::InvalidParameter {
            field: "g_over_Om",
            reason: "list is empty".into(),
        });
    }
    if let Some(bad) = g_over_om.iter().find(|g| !(**g >= 0.0 && g.is_finite())) {
        return Err(Error::InvalidParameter {
            field: "g_over_Om",
            reason: format!("entries must be finite and >= 0, got {bad}"),
        });
    }
    Ok(())
}

/// Independent spectra for each tunneling rate (in units of `Omega_m`), in order.
pub fn sweep_tunneling(
    p: &PhysicalParams,
    topology: Topology,
    grid: &GridSpec,
    g_over_om: &[f64],
    method: Method,
) -> Result<Vec<Result<Spectrum>>> {
    check_g_list(g_over_om)?;
    let opts = SpectrumOptions::default();
    Ok(g_over_om
        .par_iter()
        .map(|&g| compute_spectrum_with(&p.with_tunneling(g * p.omega_m()), topology, grid, method, &opts))
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntensityRow {
    pub g_over_om: f64,
    pub n_a: f64,
    pub n_b: f64,
    /// `n_b / n_a`.
    pub ratio: f64,
    /// Effective detuning of cavity B, rad/s.
    pub delta_bar2: f64,
}

/// Steady photon numbers in both cavities for each tunneling rate.
pub fn intensity_table(
    p: &PhysicalParams,
    topology: Topology,
    g_over_om: &[f64],
) -> Result<Vec<Result<IntensityRow>>> {
    check_g_list(g_over_om)?;
    let o = SolveOptions::default();
    Ok(g_over_om
        .iter()
        .map(|&g| {
            let q = p.with_tunneling(g * p.omega_m());
            let s = solve_steady_state(&q, topology, &o)?;
            Ok(IntensityRow {
                g_over_om: g,
                n_a: s.photons_a(),
                n_b: s.photons_b(),
                ratio: intensity_ratio(&q, &s)?,
                delta_bar2: s.delta_bar2,
            })
        })
        .collect())
}
