//! Polynomial parameterization of boundary functions on `Γi`.
//!
//! A particle is a coefficient vector `c ∈ R^{d+1}`; the boundary function is
//! `Σ c_j B_j(t)` evaluated at the segment nodes, with `t ∈ [-1, 1]` the
//! normalized arclength.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::fem::{segment_mass_apply, BoundaryField};
use crate::mesh::BoundarySegment;

/// Gram matrices with a larger condition number are rejected by [`PolyBasis::project`].
pub const MAX_GRAM_CONDITION: f64 = 1e12;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BasisKind {
    Monomial,
    Chebyshev,
}

impl FromStr for BasisKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "monomial" => Ok(BasisKind::Monomial),
            "chebyshev" => Ok(BasisKind::Chebyshev),
            other => Err(Error::InvalidArgument(format!("unknown basis `{other}`"))),
        }
    }
}

impl fmt::Display for BasisKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BasisKind::Monomial => "monomial",
            BasisKind::Chebyshev => "chebyshev",
        })
    }
}

/// Values `B_0(t) .. B_degree(t)`.
pub fn eval_basis(kind: BasisKind, degree: usize, t: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(degree + 1);
    out.push(1.0);
    if degree >= 1 {
        out.push(t);
    }
    for j in 2..=degree {
        let next = match kind {
            BasisKind::Monomial => out[j - 1] * t,
            BasisKind::Chebyshev => 2.0 * t * out[j - 1] - out[j - 2],
        };
        out.push(next);
    }
    out
}

#[derive(Clone, Debug)]
pub struct PolyBasis {
    kind: BasisKind,
    degree: usize,
    segment: BoundarySegment,
    /// `columns[j][k] = B_j(t_k)`
    columns: Vec<Vec<f64>>,
}

impl PolyBasis {
    pub fn new(kind: BasisKind, degree: usize, segment: &BoundarySegment) -> Self {
        let mut columns = vec![Vec::with_capacity(segment.len()); degree + 1];
        for &t in &segment.t {
            for (j, v) in eval_basis(kind, degree, t).into_iter().enumerate() {
                columns[j].push(v);
            }
        }
        Self {
            kind,
            degree,
            segment: segment.clone(),
            columns,
        }
    }

    pub fn kind(&self) -> BasisKind {
        self.kind
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn dim(&self) -> usize {
        self.degree + 1
    }

    pub fn segment(&self) -> &BoundarySegment {
        &self.segment
    }

    /// Nodal values of basis function `j` as a field on the segment.
    pub fn basis_field(&self, j: usize) -> BoundaryField {
        BoundaryField {
            tag: self.segment.tag,
            values: self.columns[j].clone(),
        }
    }

    pub fn coeffs_to_field(&self, coeffs: &[f64]) -> Result<BoundaryField> {
        if coeffs.len() != self.dim() {
            return Err(Error::InvalidArgument(format!(
                "expected {} coefficients, got {}",
                self.dim(),
                coeffs.len()
            )));
        }
        let mut values = vec![0.0; self.segment.len()];
        for (c, col) in coeffs.iter().zip(&self.columns) {
            for (v, b) in values.iter_mut().zip(col) {
                *v += c * b;
            }
        }
        Ok(BoundaryField {
            tag: self.segment.tag,
            values,
        })
    }

    /// `G_ij = ⟨B_i, B_j⟩_{L²(segment)}`.
    pub fn gram(&self) -> DMatrix<f64> {
        let n = self.dim();
        let mb: Vec<Vec<f64>> = self.columns.iter().map(|c| segment_mass_apply(&self.segment, c)).collect();
        DMatrix::from_fn(n, n, |i, j| dot(&mb[i], &self.columns[j]))
    }

    /// 2-norm condition number of the Gram matrix.
    pub fn gram_condition(&self) -> f64 {
        condition(&self.gram())
    }

    /// `L²(segment)` projection of `field` onto the span of the basis.
    pub fn project(&self, field: &BoundaryField) -> Result<Vec<f64>> {
        field.check_on(&self.segment, "projection")?;
        let g = self.gram();
        let cond = condition(&g);
        if !(cond <= MAX_GRAM_CONDITION) {
            return Err(Error::IllConditionedBasis(cond));
        }
        let mf = segment_mass_apply(&self.segment, &field.values);
        let rhs = DVector::from_iterator(self.dim(), self.columns.iter().map(|c| dot(c, &mf)));
        let chol = g
            .cholesky()
            .ok_or(Error::IllConditionedBasis(f64::INFINITY))?;
        Ok(chol.solve(&rhs).iter().copied().collect())
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn condition(sym: &DMatrix<f64>) -> f64 {
    let ev = sym.clone().symmetric_eigenvalues();
    let max = ev.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let min = ev.iter().fold(f64::INFINITY, |m, v| m.min(v.abs()));
    if min == 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cases::{make_case, synthesize_data, CaseName};
    use crate::mesh::{boundary_segment, build_unit_disc_mesh, build_unit_square_mesh, BoundaryTag};

    fn square_gi(n: usize) -> BoundarySegment {
        boundary_segment(&build_unit_square_mesh(n).unwrap(), BoundaryTag::GammaI).unwrap()
    }

    #[test]
    fn chebyshev_low_order_fields() {
        let seg = square_gi(8);
        let b = PolyBasis::new(BasisKind::Chebyshev, 5, &seg);
        let one = b.coeffs_to_field(&[1.0, 0.0, 0.0, 0.0, 0.0, 0.0]).unwrap();
        assert!(one.values.iter().all(|&v| v == 1.0));
        let t = b.coeffs_to_field(&[0.0, 1.0, 0.0, 0.0, 0.0, 0.0]).unwrap();
        assert_eq!(t.values[0], -1.0);
        assert_eq!(*t.values.last().unwrap(), 1.0);
        assert_eq!(t.values, seg.t);
        let z = b.coeffs_to_field(&[0.0; 6]).unwrap();
        assert!(z.values.iter().all(|&v| v == 0.0));
        assert!(b.coeffs_to_field(&[1.0; 5]).is_err());
    }

    #[test]
    fn chebyshev_recurrence_matches_cosine_form() {
        for &t in &[-1.0, -0.3, 0.0, 0.45, 1.0f64] {
            let v = eval_basis(BasisKind::Chebyshev, 8, t);
            for (j, x) in v.iter().enumerate() {
                assert!((x - (j as f64 * t.acos()).cos()).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn exp_target_is_well_approximated() {
        let mesh = build_unit_square_mesh(32).unwrap();
        let (_, target) = synthesize_data(&make_case(CaseName::Square), &mesh).unwrap();
        let seg = boundary_segment(&mesh, BoundaryTag::GammaI).unwrap();
        let b = PolyBasis::new(BasisKind::Chebyshev, 5, &seg);
        let c = b.project(&target.phi_d).unwrap();
        let back = b.coeffs_to_field(&c).unwrap();
        let worst = back
            .values
            .iter()
            .zip(&target.phi_d.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert!(worst <= 1e-4, "max residual {worst}");
        assert!(c.iter().all(|x| x.abs() < 7.0));
    }

    #[test]
    fn disc_target_is_well_approximated() {
        let mesh = build_unit_disc_mesh(64).unwrap();
        let (_, target) = synthesize_data(&make_case(CaseName::Disc), &mesh).unwrap();
        let seg = boundary_segment(&mesh, BoundaryTag::GammaI).unwrap();
        let b = PolyBasis::new(BasisKind::Chebyshev, 5, &seg);
        // the flux target oscillates more; its degree-5 residual is ~1.3e-3
        for (field, tol) in [(&target.phi_d, 1e-3), (&target.phi_n, 2e-3)] {
            let back = b.coeffs_to_field(&b.project(field).unwrap()).unwrap();
            let worst = back.values.iter().zip(&field.values).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            assert!(worst <= tol, "max residual {worst}");
        }
    }

    #[test]
    fn chebyshev_gram_is_well_conditioned() {
        for seg in [
            square_gi(32),
            boundary_segment(&build_unit_disc_mesh(64).unwrap(), BoundaryTag::GammaI).unwrap(),
        ] {
            for d in 0..=10 {
                let c = PolyBasis::new(BasisKind::Chebyshev, d, &seg).gram_condition();
                assert!(c <= 1e3, "d={d}: {c}");
            }
            // monomials degrade quickly
            let m = PolyBasis::new(BasisKind::Monomial, 10, &seg).gram_condition();
            assert!(m > 1e5, "monomial d=10: {m}");
        }
    }

    #[test]
    fn ill_conditioned_projection_is_rejected() {
        let seg = square_gi(64);
        let b = PolyBasis::new(BasisKind::Monomial, 24, &seg);
        let f = b.basis_field(0);
        assert!(matches!(b.project(&f), Err(Error::IllConditionedBasis(_))));
    }
}
