//! Levenberg-Marquardt fits of the separation curve with a generalized
//! logistic and a Moffat profile.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FitKind {
    GeneralizedLogistic,
    Moffat,
}

impl FitKind {
    pub fn name(self) -> &'static str {
        match self {
            FitKind::GeneralizedLogistic => "logistic",
            FitKind::Moffat => "moffat",
        }
    }

    pub fn n_params(self) -> usize {
        match self {
            FitKind::GeneralizedLogistic => 5,
            FitKind::Moffat => 4,
        }
    }

    pub fn param_names(self) -> &'static [&'static str] {
        match self {
            FitKind::GeneralizedLogistic => &["a", "c", "T", "B", "M"],
            FitKind::Moffat => &["A", "mu", "sigma", "beta"],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FitModel {
    /// `a + c / (1 + T exp(-B (x - M)))^(1/T)`
    GeneralizedLogistic { a: f64, c: f64, t: f64, b: f64, m: f64 },
    /// `A (1 + ((x - mu)/sigma)^2)^(-beta)`
    Moffat { a: f64, mu: f64, sigma: f64, beta: f64 },
}

impl FitModel {
    pub fn kind(&self) -> FitKind {
        match self {
            FitModel::GeneralizedLogistic { .. } => FitKind::GeneralizedLogistic,
            FitModel::Moffat { .. } => FitKind::Moffat,
        }
    }

    pub fn params(&self) -> Vec<f64> {
        match *self {
            FitModel::GeneralizedLogistic { a, c, t, b, m } => vec![a, c, t, b, m],
            FitModel::Moffat { a, mu, sigma, beta } => vec![a, mu, sigma, beta],
        }
    }

    pub fn from_params(kind: FitKind, p: &[f64]) -> Result<Self> {
        if p.len() != kind.n_params() {
            return Err(Error::FitInput(format!(
                "{} takes {} parameters, got {}",
                kind.name(),
                kind.n_params(),
                p.len()
            )));
        }
        let m = match kind {
            FitKind::GeneralizedLogistic => FitModel::GeneralizedLogistic {
                a: p[0],
                c: p[1],
                t: p[2],
                b: p[3],
                m: p[4],
            },
            FitKind::Moffat => FitModel::Moffat {
                a: p[0],
                mu: p[1],
                sigma: p[2],
                beta: p[3],
            },
        };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        if self.params().iter().any(|v| !v.is_finite()) {
            return Err(Error::FitInput("non-finite model parameter".into()));
        }
        match *self {
            FitModel::GeneralizedLogistic { t, .. } if t <= 0.0 => {
                Err(Error::FitInput(format!("logistic T must be positive, got {t}")))
            }
            FitModel::Moffat { sigma: 0.0, .. } => {
                Err(Error::FitInput("Moffat sigma must be nonzero".into()))
            }
            _ => Ok(()),
        }
    }
}

/// `ln(1 + T e^z)` without overflow.
fn log1p_scaled_exp(t: f64, z: f64) -> f64 {
    let lt = t.ln();
    let s = lt + z;
    if s > 0.0 {
        s + (-s).exp().ln_1p()
    } else {
        s.exp().ln_1p()
    }
}

pub fn eval_model(m: &FitModel, x: f64) -> f64 {
    match *m {
        FitModel::GeneralizedLogistic { a, c, t, b, m } => {
            let l = log1p_scaled_exp(t, -b * (x - m));
            a + c * (-l / t).exp()
        }
        FitModel::Moffat { a, mu, sigma, beta } => {
            let u = (x - mu) / sigma;
            a * (1.0 + u * u).powf(-beta)
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub model: FitModel,
    pub chi2_per_dof: f64,
    pub n_iterations: usize,
    pub converged: bool,
    pub residuals: Vec<f64>,
    pub warnings: Vec<String>,
}

pub const MAX_ITERATIONS: usize = 500;
const INITIAL_LAMBDA: f64 = 1e-3;
const CHI2_RTOL: f64 = 1e-10;
const STEP_TOL: f64 = 1e-12;
const MAX_LAMBDA: f64 = 1e16;
/// Fraction of the linearised decrease a step must realise to be accepted.
const MIN_GAIN: f64 = 0.5;

fn eval_params(kind: FitKind, p: &[f64], x: f64) -> f64 {
    // Callers only pass validated parameter vectors.
    let m = FitModel::from_params(kind, p).expect("validated parameters");
    eval_model(&m, x)
}

fn fd_step(v: f64) -> f64 {
    f64::EPSILON.sqrt() * v.abs().max(1e-8)
}

/// Forward-difference Jacobian of the model values, one row per datum.
pub fn jacobian(kind: FitKind, p: &[f64], xs: &[f64]) -> DMatrix<f64> {
    let base: Vec<f64> = xs.iter().map(|&x| eval_params(kind, p, x)).collect();
    let mut j = DMatrix::zeros(xs.len(), p.len());
    for k in 0..p.len() {
        let h = fd_step(p[k]);
        let mut q = p.to_vec();
        q[k] += h;
        if FitModel::from_params(kind, &q).is_err() {
            q[k] = p[k] - h;
            for (i, &x) in xs.iter().enumerate() {
                j[(i, k)] = (base[i] - eval_params(kind, &q, x)) / h;
            }
            continue;
        }
        for (i, &x) in xs.iter().enumerate() {
            j[(i, k)] = (eval_params(kind, &q, x) - base[i]) / h;
        }
    }
    j
}

/// Central-difference Jacobian with step `h_k = scale * fd_step(p_k)`.
pub fn central_jacobian(kind: FitKind, p: &[f64], xs: &[f64], scale: f64) -> DMatrix<f64> {
    let mut j = DMatrix::zeros(xs.len(), p.len());
    for k in 0..p.len() {
        let h = scale * fd_step(p[k]);
        let mut hi = p.to_vec();
        let mut lo = p.to_vec();
        hi[k] += h;
        lo[k] -= h;
        for (i, &x) in xs.iter().enumerate() {
            j[(i, k)] = (eval_params(kind, &hi, x) - eval_params(kind, &lo, x)) / (2.0 * h);
        }
    }
    j
}

fn residuals(kind: FitKind, p: &[f64], data: &[(f64, f64)]) -> Vec<f64> {
    data.iter().map(|&(x, y)| eval_params(kind, p, x) - y).collect()
}

fn chi2(r: &[f64]) -> f64 {
    r.iter().map(|v| v * v).sum()
}

fn degeneracy_warnings(kind: FitKind, j: &DMatrix<f64>) -> Vec<String> {
    let norms: Vec<f64> = j.column_iter().map(|c| c.norm()).collect();
    let largest = norms.iter().cloned().fold(0.0, f64::max);
    let names = kind.param_names();
    norms
        .iter()
        .enumerate()
        .filter(|(_, &n)| !(n > 1e-8 * largest))
        .map(|(k, _)| format!("parameter {} is degenerate (no influence on the model)", names[k]))
        .collect()
}

pub fn fit_least_squares(kind: FitKind, data: &[(f64, f64)], init: &[f64]) -> Result<FitResult> {
    let np = kind.n_params();
    if data.len() <= np {
        return Err(Error::FitInput(format!(
            "{} data points cannot constrain {np} parameters",
            data.len()
        )));
    }
    if data.iter().any(|(x, y)| !x.is_finite() || !y.is_finite()) {
        return Err(Error::FitInput("non-finite data".into()));
    }
    FitModel::from_params(kind, init)?;
    let xs: Vec<f64> = data.iter().map(|d| d.0).collect();
    let mut p = init.to_vec();
    let mut r = residuals(kind, &p, data);
    let mut cost = chi2(&r);
    let mut lambda = INITIAL_LAMBDA;
    let mut converged = false;
    let mut iterations = 0;

    while iterations < MAX_ITERATIONS && !converged {
        iterations += 1;
        let j = jacobian(kind, &p, &xs);
        let jtj = j.transpose() * &j;
        let grad = j.transpose() * DVector::from_column_slice(&r);
        if grad.norm() == 0.0 {
            converged = true;
            break;
        }
        let dmax = jtj.diagonal().max();
        let scale = if dmax > 0.0 { dmax } else { 1.0 };
        let mut accepted = false;
        while !accepted {
            let mut a = jtj.clone();
            for k in 0..np {
                a[(k, k)] += lambda * scale;
            }
            let Some(chol) = a.cholesky() else {
                lambda *= 10.0;
                if lambda > MAX_LAMBDA {
                    return Err(Error::SingularNormalEquations);
                }
                continue;
            };
            let step = chol.solve(&(-&grad));
            let small_step = step.norm() <= STEP_TOL * DVector::from_column_slice(&p).norm().max(1.0);
            let trial: Vec<f64> = p.iter().zip(step.iter()).map(|(a, b)| a + b).collect();
            if FitModel::from_params(kind, &trial).is_ok() {
                let tr = residuals(kind, &trial, data);
                let c = chi2(&tr);
                let predicted = -(2.0 * step.dot(&grad) + step.dot(&(&jtj * &step)));
                let gain = if predicted > 0.0 { (cost - c) / predicted } else { 0.0 };
                if c.is_finite() && c <= cost && (gain >= MIN_GAIN || cost - c <= CHI2_RTOL * cost) {
                    let prev = cost;
                    p = trial;
                    r = tr;
                    cost = c;
                    lambda = (lambda / 10.0).max(1e-300);
                    accepted = true;
                    if prev == 0.0 || prev - c <= CHI2_RTOL * prev || small_step {
                        converged = true;
                    }
                    continue;
                }
            }
            lambda *= 10.0;
            if lambda > MAX_LAMBDA {
                // No descent direction left at working precision.
                converged = true;
                break;
            }
        }
    }

    let j = jacobian(kind, &p, &xs);
    let warnings = degeneracy_warnings(kind, &j);
    let model = FitModel::from_params(kind, &p)?;
    Ok(FitResult {
        model,
        chi2_per_dof: cost / (data.len() - np) as f64,
        n_iterations: iterations,
        converged,
        residuals: r,
        warnings,
    })
}

/// Data-driven starting point for [`fit_least_squares`].
pub fn default_inits(kind: FitKind, data: &[(f64, f64)]) -> Vec<f64> {
    assert!(!data.is_empty(), "default_inits needs data");
    let (mut xmin, mut xmax) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut ymin, mut ymax) = (f64::INFINITY, f64::NEG_INFINITY);
    let mut apex = data[0].0;
    for &(x, y) in data {
        xmin = xmin.min(x);
        xmax = xmax.max(x);
        ymin = ymin.min(y);
        if y > ymax {
            ymax = y;
            apex = x;
        }
    }
    let span = xmax - xmin;
    match kind {
        FitKind::Moffat => {
            let sigma = if span > 0.0 { span / 2.0 } else { 1.0 };
            vec![ymax, apex, sigma, 2.0]
        }
        FitKind::GeneralizedLogistic => {
            let mut sorted: Vec<f64> = data.iter().map(|d| d.0).collect();
            sorted.sort_by(f64::total_cmp);
            let n = sorted.len();
            let median = if n % 2 == 1 {
                sorted[n / 2]
            } else {
                0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
            };
            let b = if span > 0.0 { 4.0 / span } else { 1.0 };
            vec![ymin, ymax - ymin, 1.0, b, median]
        }
    }
}
