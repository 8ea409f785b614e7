//! Exact minimizer of the quadratic objective, used as ground truth for the
//! swarm.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::objective::ResponseBasis;

/// `J(c) = ½ cᵀHc + bᵀc + k`.
#[derive(Clone, Debug)]
pub struct QuadraticForm {
    pub h: DMatrix<f64>,
    pub b: DVector<f64>,
    pub k: f64,
}

impl QuadraticForm {
    pub fn dim(&self) -> usize {
        self.b.len()
    }

    pub fn eval(&self, c: &[f64]) -> f64 {
        let c = DVector::from_column_slice(c);
        0.5 * c.dot(&(&self.h * &c)) + self.b.dot(&c) + self.k
    }

    pub fn gradient(&self, c: &[f64]) -> DVector<f64> {
        &self.h * DVector::from_column_slice(c) + &self.b
    }

    pub fn eigenvalues(&self) -> DVector<f64> {
        self.h.clone().symmetric_eigenvalues()
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues().iter().copied().fold(f64::INFINITY, f64::min)
    }
}

pub fn extract_quadratic(rb: &ResponseBasis) -> QuadraticForm {
    QuadraticForm {
        h: rb.hessian().clone(),
        b: rb.linear().clone(),
        k: rb.constant(),
    }
}

#[derive(Clone, Debug)]
pub struct OracleSolution {
    pub coeffs: Vec<f64>,
    pub value: f64,
    /// Whether every coefficient lies in `[lb, ub]`.
    pub inside_bounds: bool,
}

/// Unconstrained minimizer `c* = −H⁻¹b` by a dense Cholesky solve; reports
/// whether `c*` falls inside the box `[lb, ub]`.
pub fn solve_normal_equations(q: &QuadraticForm, lb: f64, ub: f64) -> Result<OracleSolution> {
    let chol = q.h.clone().cholesky().ok_or_else(|| {
        Error::OracleUnavailable(format!(
            "Hessian is not positive definite (min eigenvalue {:.3e})",
            q.min_eigenvalue()
        ))
    })?;
    let coeffs: Vec<f64> = chol.solve(&(-&q.b)).iter().copied().collect();
    if coeffs.iter().any(|c| !c.is_finite()) {
        return Err(Error::OracleUnavailable("normal equations produced non-finite coefficients".into()));
    }
    let value = q.eval(&coeffs);
    let inside_bounds = coeffs.iter().all(|&c| (lb..=ub).contains(&c));
    Ok(OracleSolution {
        coeffs,
        value,
        inside_bounds,
    })
}
