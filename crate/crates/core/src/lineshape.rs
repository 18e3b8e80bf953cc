//! Dip detection on reflection spectra and the separation between the two
//! Fano line shapes.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::params::{PhysicalParams, Topology};
use crate::spectrum::{compute_spectrum_with, GridSpec, Method, Spectrum, SpectrumOptions};

/// Minimum prominence (absolute, in `T_b`) for a local minimum to count.
pub const DEFAULT_PROMINENCE: f64 = 1e-4;

/// Scale applied to the mean displacements in the separation table.
pub const DEFAULT_DISPLACEMENT_SCALE: f64 = 1e11;

/// A local extremum refined by a parabola through its two neighbours.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DipFeature {
    pub position_over_om: f64,
    /// Refined extremal value of `T_b`.
    pub depth: f64,
    pub grid_index: usize,
    /// Height of the lower adjacent local maximum above the dip.
    pub prominence: f64,
}

/// Vertex of the parabola through `(x0,y0)`, `(x1,y1)`, `(x2,y2)`, in
/// coordinates centred on `x1`.
fn parabola_vertex(x: [f64; 3], y: [f64; 3]) -> (f64, f64) {
    let h0 = x[1] - x[0];
    let h2 = x[2] - x[1];
    let dl = y[0] - y[1];
    let dr = y[2] - y[1];
    let norm = h0 * h2 * (h0 + h2);
    let a = (dr * h0 + dl * h2) / norm;
    let b = (dr * h0 * h0 - dl * h2 * h2) / norm;
    if a == 0.0 {
        return (x[1], y[1]);
    }
    let u = (-b / (2.0 * a)).clamp(-h0, h2);
    (x[1] + u, y[1] + a * u * u + b * u)
}

/// Strict interior local minima of `ys` with prominence at least `prominence`.
pub fn find_local_minima(xs: &[f64], ys: &[f64], prominence: f64) -> Vec<DipFeature> {
    assert_eq!(xs.len(), ys.len(), "abscissa and ordinate lengths differ");
    let n = ys.len();
    if n < 3 {
        return Vec::new();
    }
    let mut out = Vec::new();
    for i in 1..n - 1 {
        if !(ys[i] < ys[i - 1] && ys[i] < ys[i + 1]) {
            continue;
        }
        let mut l = i;
        while l > 0 && ys[l - 1] >= ys[l] {
            l -= 1;
        }
        let mut r = i;
        while r < n - 1 && ys[r + 1] >= ys[r] {
            r += 1;
        }
        let prom = ys[l].min(ys[r]) - ys[i];
        if prom < prominence {
            continue;
        }
        let (pos, val) = parabola_vertex([xs[i - 1], xs[i], xs[i + 1]], [ys[i - 1], ys[i], ys[i + 1]]);
        out.push(DipFeature {
            position_over_om: pos,
            depth: val.min(ys[i]),
            grid_index: i,
            prominence: prom,
        });
    }
    out
}

/// Fano dips of a spectrum, sorted by position. `depth` is clamped at 0.
pub fn find_dips(spec: &Spectrum, prominence: f64) -> Vec<DipFeature> {
    let mut dips = find_local_minima(&spec.omegas(), &spec.t_b(), prominence);
    for d in &mut dips {
        d.depth = d.depth.max(0.0);
    }
    dips
}

/// Local maxima of a spectrum; `depth` holds the refined peak value.
pub fn find_peaks(spec: &Spectrum, prominence: f64) -> Vec<DipFeature> {
    let neg: Vec<f64> = spec.points.iter().map(|p| -p.t_b).collect();
    let mut peaks = find_local_minima(&spec.omegas(), &neg, prominence);
    for p in &mut peaks {
        p.depth = -p.depth;
    }
    peaks
}

/// Distance between the two most prominent dips, in units of `Omega_m`.
pub fn fano_separation(spec: &Spectrum, prominence: f64) -> Result<f64> {
    let mut dips = find_dips(spec, prominence);
    if dips.len() < 2 {
        return Err(Error::InsufficientFeatures { found: dips.len() });
    }
    dips.sort_by(|a, b| b.prominence.total_cmp(&a.prominence));
    Ok((dips[0].position_over_om - dips[1].position_over_om).abs())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeparationRow {
    pub g_over_om: f64,
    /// Absent when fewer than two dips were found.
    pub separation_over_om: Option<f64>,
    /// Scaled mean displacements; absent only if the steady state failed.
    pub x1_bar_scaled: Option<f64>,
    pub x2_bar_scaled: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeparationCurve {
    pub rows: Vec<SeparationRow>,
    pub scale: f64,
}

impl SeparationCurve {
    /// `(g, separation)` pairs where a separation exists.
    pub fn measured(&self) -> Vec<(f64, f64)> {
        self.rows
            .iter()
            .filter_map(|r| r.separation_over_om.map(|s| (r.g_over_om, s)))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeparationSweep {
    pub grid: GridSpec,
    pub g_min_over_om: f64,
    pub g_max_over_om: f64,
    pub n_g: usize,
    pub scale: f64,
    pub prominence: f64,
}

/// Dip separation of the double-movable spectrum and the scaled mean
/// displacements over an evenly spaced range of tunneling rates.
pub fn separation_vs_g(p: &PhysicalParams, sweep: &SeparationSweep) -> Result<SeparationCurve> {
    let SeparationSweep {
        grid,
        g_min_over_om: g_min,
        g_max_over_om: g_max,
        n_g,
        scale,
        prominence,
    } = *sweep;
    if !(g_min >= 0.0 && g_min < g_max && g_max.is_finite()) {
        return Err(Error::InvalidParameter {
            field: "g range",
            reason: format!("need 0 <= g_min < g_max, got [{g_min}, {g_max}]"),
        });
    }
    if n_g < 2 {
        return Err(Error::InvalidParameter {
            field: "n_g",
            reason: "need at least two tunneling rates".into(),
        });
    }
    grid.validate()?;
    let gs: Vec<f64> = (0..n_g)
        .map(|k| {
            if k == n_g - 1 {
                g_max
            } else {
                g_min + (g_max - g_min) * (k as f64 / (n_g - 1) as f64)
            }
        })
        .collect();
    let opts = SpectrumOptions::default();
    let rows = gs
        .par_iter()
        .map(|&g| {
            let q = p.with_tunneling(g * p.omega_m());
            match compute_spectrum_with(&q, Topology::DoubleMovable, &grid, Method::MatrixSolve, &opts) {
                Ok(spec) => SeparationRow {
                    g_over_om: g,
                    separation_over_om: fano_separation(&spec, prominence).ok(),
                    x1_bar_scaled: Some(spec.steady.x1_bar * scale),
                    x2_bar_scaled: Some(spec.steady.x2_bar * scale),
                },
                Err(_) => SeparationRow {
                    g_over_om: g,
                    separation_over_om: None,
                    x1_bar_scaled: None,
                    x2_bar_scaled: None,
                },
            }
        })
        .collect();
    Ok(SeparationCurve { rows, scale })
}

fn average_ranks(v: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut ranks = vec![0.0; v.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            ranks[k] = r;
        }
        i = j + 1;
    }
    ranks
}

/// Spearman rank correlation with average ranks for ties.
pub fn rank_correlation(x: &[f64], y: &[f64]) -> f64 {
    assert_eq!(x.len(), y.len());
    let rx = average_ranks(x);
    let ry = average_ranks(y);
    let n = x.len() as f64;
    let mx = rx.iter().sum::<f64>() / n;
    let my = ry.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in rx.iter().zip(&ry) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    sxy / (sxx * syy).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
        (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect()
    }

    #[test]
    fn parabola_vertex_recovered() {
        let xs = linspace(0.98, 1.02, 401);
        let c = 1.003_217;
        let ys: Vec<f64> = xs.iter().map(|x| (x - c) * (x - c)).collect();
        let dips = find_local_minima(&xs, &ys, 0.0);
        assert_eq!(dips.len(), 1);
        let h = xs[1] - xs[0];
        assert!((dips[0].position_over_om - c).abs() < h * h);
    }

    #[test]
    fn two_lorentzian_dips() {
        let xs = linspace(0.98, 1.02, 4001);
        let w = 0.001;
        let ys: Vec<f64> = xs
            .iter()
            .map(|x| {
                1.0 - 0.5 / (1.0 + ((x - 0.995) / w).powi(2)) - 0.4 / (1.0 + ((x - 1.005) / w).powi(2))
            })
            .collect();
        let dips = find_local_minima(&xs, &ys, DEFAULT_PROMINENCE);
        assert_eq!(dips.len(), 2);
        assert!((dips[0].position_over_om - 0.995).abs() < 1e-4);
        assert!((dips[1].position_over_om - 1.005).abs() < 1e-4);
        let sep = (dips[1].position_over_om - dips[0].position_over_om).abs();
        assert!((sep - 0.010).abs() < 2e-4);
    }

    #[test]
    fn monotone_ramp_has_no_dips() {
        let xs = linspace(0.0, 1.0, 101);
        assert!(find_local_minima(&xs, &xs, 0.0).is_empty());
    }

    #[test]
    fn shallow_ripple_is_filtered() {
        let xs = linspace(0.0, 1.0, 101);
        let ys: Vec<f64> = xs.iter().map(|x| 1e-6 * (40.0 * x).sin()).collect();
        assert!(find_local_minima(&xs, &ys, DEFAULT_PROMINENCE).is_empty());
        assert!(!find_local_minima(&xs, &ys, 0.0).is_empty());
    }

    #[test]
    fn affine_maps_preserve_positions() {
        let xs = linspace(0.98, 1.02, 801);
        let ys: Vec<f64> = xs
            .iter()
            .map(|x| 1.0 - 0.3 / (1.0 + ((x - 0.993) / 0.002).powi(2)) - 0.2 / (1.0 + ((x - 1.004) / 0.001).powi(2)))
            .collect();
        let base = find_local_minima(&xs, &ys, 1e-4);
        let mapped: Vec<f64> = ys.iter().map(|y| 3.5 * y - 0.7).collect();
        let other = find_local_minima(&xs, &mapped, 1e-4);
        assert_eq!(base.len(), other.len());
        for (a, b) in base.iter().zip(&other) {
            assert_eq!(a.grid_index, b.grid_index);
            assert!((a.position_over_om - b.position_over_om).abs() < 1e-12);
        }
    }

    #[test]
    fn rank_correlation_basics() {
        let x = [1.0, 2.0, 3.0, 4.0];
        assert!((rank_correlation(&x, &[10.0, 20.0, 30.0, 40.0]) - 1.0).abs() < 1e-15);
        assert!((rank_correlation(&x, &[4.0, 3.0, 2.0, 1.0]) + 1.0).abs() < 1e-15);
        assert_eq!(average_ranks(&[5.0, 1.0, 5.0]), vec![2.5, 1.0, 2.5]);
    }
}
