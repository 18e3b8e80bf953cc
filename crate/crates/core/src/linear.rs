//! Dense complex solve with a condition estimate and iterative refinement.

use nalgebra::{SMatrix, SVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type Matrix6 = SMatrix<Complex64, 6, 6>;
pub type Vector6 = SVector<Complex64, 6>;

/// Condition numbers above this are treated as numerically singular.
pub const MAX_CONDITION: f64 = 1e14;

/// Relative residual the refined solution must reach.
pub const RESIDUAL_TOLERANCE: f64 = 1e-10;

const MAX_REFINEMENTS: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveReport {
    /// One-norm condition number `||M||_1 ||M^-1||_1`.
    pub condition: f64,
    /// `||M u - rhs|| / ||rhs||` after refinement (0 for a zero rhs).
    pub relative_residual: f64,
    pub refinements: usize,
}

fn one_norm(m: &Matrix6) -> f64 {
    m.column_iter()
        .map(|c| c.iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

fn residual(m: &Matrix6, u: &Vector6, rhs: &Vector6) -> Vector6 {
    rhs - m * u
}

/// LU with partial pivoting, followed by at least one refinement step.
pub fn solve_refined(m: &Matrix6, rhs: &Vector6) -> Result<(Vector6, SolveReport)> {
    let lu = m.lu();
    let inverse = lu.try_inverse().ok_or(Error::Conditioning {
        condition: f64::INFINITY,
    })?;
    let condition = one_norm(m) * one_norm(&inverse);
    if !condition.is_finite() || condition > MAX_CONDITION {
        return Err(Error::Conditioning { condition });
    }
    let mut u = lu.solve(rhs).ok_or(Error::Conditioning {
        condition: f64::INFINITY,
    })?;
    let rhs_norm = rhs.norm();
    let mut refinements = 0;
    let mut rel = f64::INFINITY;
    while refinements < MAX_REFINEMENTS {
        let r = residual(m, &u, rhs);
        if let Some(du) = lu.solve(&r) {
            u += du;
        }
        refinements += 1;
        let r = residual(m, &u, rhs);
        rel = if rhs_norm > 0.0 {
            r.norm() / rhs_norm
        } else {
            r.norm()
        };
        if rel <= RESIDUAL_TOLERANCE {
            break;
        }
    }
    if !(rel <= RESIDUAL_TOLERANCE) {
        return Err(Error::Conditioning { condition });
    }
    Ok((
        u,
        SolveReport {
            condition,
            relative_residual: rel,
            refinements,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn solves_diagonal_system() {
        let m = Matrix6::from_diagonal(&Vector6::from_fn(|i, _| c(i as f64 + 1.0, 1.0)));
        let rhs = Vector6::from_fn(|i, _| c(1.0, -(i as f64)));
        let (u, report) = solve_refined(&m, &rhs).unwrap();
        for i in 0..6 {
            let expected = rhs[i] / m[(i, i)];
            assert!((u[i] - expected).norm() < 1e-15);
        }
        assert!(report.condition >= 1.0);
        assert_eq!(report.refinements, 1);
    }

    #[test]
    fn zero_rhs_gives_zero() {
        let m = Matrix6::from_fn(|i, j| c(if i == j { 4.0 } else { 0.5 }, (i as f64) - (j as f64)));
        let (u, report) = solve_refined(&m, &Vector6::zeros()).unwrap();
        assert_eq!(u, Vector6::zeros());
        assert_eq!(report.relative_residual, 0.0);
    }

    #[test]
    fn singular_matrix_is_reported() {
        let mut m = Matrix6::identity();
        m[(3, 3)] = c(0.0, 0.0);
        assert!(matches!(
            solve_refined(&m, &Vector6::zeros()),
            Err(Error::Conditioning { .. })
        ));
        let mut m = Matrix6::identity();
        m[(2, 2)] = c(1e-17, 0.0);
        match solve_refined(&m, &Vector6::zeros()) {
            Err(Error::Conditioning { condition }) => assert!(condition > MAX_CONDITION),
            other => panic!("expected conditioning error, got {other:?}"),
        }
    }
}
