//! Regularized misfit functionals.
//!
//! Dirichlet recovery: solve with `u = φ_D` on `Γi` and `∂_n u = g` on `Γc`,
//! then `J_DR = ½‖u − f‖²_{L²(Γc)} + (α/2)·reg(φ_D)`.
//!
//! Neumann recovery: solve with `∂_n u = φ_N` on `Γi` and `u = f` on `Γc`,
//! then `J_NR = ½‖∂_n u − g‖²_{L²(Γc)} + (α/2)·reg(φ_N)` with the flux
//! recovered variationally.
//!
//! The forward map is affine in the coefficients, so after `d + 2` solves the
//! functional is an explicit quadratic ([`ResponseBasis`]).

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};

use crate::cases::CauchyData;
use crate::error::{Error, Result};
use crate::fem::{
    assemble_and_factorize, recover_flux, segment_inner, segment_mass_apply,
    segment_stiffness_apply, solve, trace, BoundaryField, FactorizedOperator, FemSolution,
};
use crate::mesh::{boundary_segment, BoundarySegment, BoundaryTag, Mesh};
use crate::param::{dot, PolyBasis};
use crate::pso::Objective;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Formulation {
    DirichletRecovery,
    NeumannRecovery,
}

impl Formulation {
    /// Segment carrying Dirichlet data in the forward problem.
    pub fn dirichlet_tag(self) -> BoundaryTag {
        match self {
            Formulation::DirichletRecovery => BoundaryTag::GammaI,
            Formulation::NeumannRecovery => BoundaryTag::GammaC,
        }
    }
}

impl FromStr for Formulation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "dirichlet" => Ok(Formulation::DirichletRecovery),
            "neumann" => Ok(Formulation::NeumannRecovery),
            other => Err(Error::InvalidArgument(format!("unknown formulation `{other}`"))),
        }
    }
}

impl fmt::Display for Formulation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Formulation::DirichletRecovery => "dirichlet",
            Formulation::NeumannRecovery => "neumann",
        })
    }
}

/// Norm used for the Tikhonov term on `Γi`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Regularizer {
    L2,
    /// `‖φ‖²_{L²} + |φ|²_{H¹}`, a computable upper surrogate of the `H^{1/2}` norm.
    L2PlusH1,
}

impl FromStr for Regularizer {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "l2" => Ok(Regularizer::L2),
            "l2+h1" | "l2plush1" | "h1" => Ok(Regularizer::L2PlusH1),
            other => Err(Error::InvalidArgument(format!("unknown regularizer `{other}`"))),
        }
    }
}

impl fmt::Display for Regularizer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Regularizer::L2 => "l2",
            Regularizer::L2PlusH1 => "l2+h1",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ObjectiveConfig {
    pub formulation: Formulation,
    pub alpha: f64,
    pub regularizer: Regularizer,
}

impl ObjectiveConfig {
    pub fn new(formulation: Formulation, alpha: f64) -> Result<Self> {
        if !(alpha >= 0.0) || !alpha.is_finite() {
            return Err(Error::InvalidArgument(format!("alpha must be >= 0, got {alpha}")));
        }
        Ok(Self {
            formulation,
            alpha,
            regularizer: Regularizer::L2PlusH1,
        })
    }

    pub fn with_regularizer(mut self, regularizer: Regularizer) -> Self {
        self.regularizer = regularizer;
        self
    }
}

/// `reg(φ)` on `segment` for the chosen norm.
pub fn regularizer_value(reg: Regularizer, segment: &BoundarySegment, phi: &[f64]) -> f64 {
    let l2 = segment_inner(segment, phi, phi);
    match reg {
        Regularizer::L2 => l2,
        Regularizer::L2PlusH1 => l2 + dot(&segment_stiffness_apply(segment, phi), phi),
    }
}

/// Everything needed to evaluate the functional for a coefficient vector.
#[derive(Clone, Debug)]
pub struct InverseProblem {
    config: ObjectiveConfig,
    op: FactorizedOperator,
    basis: PolyBasis,
    gamma_c: BoundarySegment,
    data: CauchyData,
}

impl InverseProblem {
    /// Factorizes the forward operator matching `config.formulation`.
    pub fn new(
        mesh: &Mesh,
        mu: f64,
        data: CauchyData,
        basis: PolyBasis,
        config: ObjectiveConfig,
    ) -> Result<Self> {
        let op = assemble_and_factorize(mesh, mu, config.formulation.dirichlet_tag())?;
        let gamma_c = boundary_segment(mesh, BoundaryTag::GammaC)?;
        data.f.check_on(&gamma_c, "measured trace f")?;
        data.g.check_on(&gamma_c, "measured flux g")?;
        if basis.segment().tag != BoundaryTag::GammaI || basis.segment().nodes != boundary_segment(mesh, BoundaryTag::GammaI)?.nodes {
            return Err(Error::InvalidArgument("basis is not defined on GammaI of this mesh".into()));
        }
        Ok(Self {
            config,
            op,
            basis,
            gamma_c,
            data,
        })
    }

    pub fn config(&self) -> &ObjectiveConfig {
        &self.config
    }

    pub fn basis(&self) -> &PolyBasis {
        &self.basis
    }

    pub fn operator(&self) -> &FactorizedOperator {
        &self.op
    }

    pub fn data(&self) -> &CauchyData {
        &self.data
    }

    pub fn gamma_c(&self) -> &BoundarySegment {
        &self.gamma_c
    }

    pub fn dim(&self) -> usize {
        self.basis.dim()
    }

    /// Forward solve for the unknown boundary function `phi` on `Γi`, with
    /// the given `Γc` data (`g` for Dirichlet recovery, `f` for Neumann).
    fn forward(&self, phi: &BoundaryField, known: &BoundaryField) -> Result<FemSolution> {
        match self.config.formulation {
            Formulation::DirichletRecovery => solve(&self.op, phi, known),
            Formulation::NeumannRecovery => solve(&self.op, known, phi),
        }
    }

    fn known_data(&self) -> &BoundaryField {
        match self.config.formulation {
            Formulation::DirichletRecovery => &self.data.g,
            Formulation::NeumannRecovery => &self.data.f,
        }
    }

    /// Quantity compared against the measurement on `Γc`: the trace of `u`
    /// (Dirichlet recovery) or its recovered normal flux (Neumann recovery).
    fn observed(&self, u: &FemSolution, phi: &BoundaryField) -> Result<Vec<f64>> {
        Ok(match self.config.formulation {
            Formulation::DirichletRecovery => trace(u, &self.gamma_c).values,
            Formulation::NeumannRecovery => recover_flux(&self.op, u, &self.gamma_c, phi)?.values,
        })
    }

    fn measured(&self) -> &BoundaryField {
        match self.config.formulation {
            Formulation::DirichletRecovery => &self.data.f,
            Formulation::NeumannRecovery => &self.data.g,
        }
    }

    /// Full forward solve for the candidate `coeffs`.
    pub fn solve_for(&self, coeffs: &[f64]) -> Result<FemSolution> {
        let phi = self.basis.coeffs_to_field(coeffs)?;
        self.forward(&phi, self.known_data())
    }

    /// Evaluates the functional with one forward solve.
    pub fn eval_naive(&self, coeffs: &[f64]) -> Result<f64> {
        let phi = self.basis.coeffs_to_field(coeffs)?;
        let u = self.forward(&phi, self.known_data())?;
        let obs = self.observed(&u, &phi)?;
        let r: Vec<f64> = obs.iter().zip(&self.measured().values).map(|(a, b)| a - b).collect();
        let misfit = 0.5 * segment_inner(&self.gamma_c, &r, &r);
        let reg = if self.config.alpha == 0.0 {
            0.0
        } else {
            regularizer_value(self.config.regularizer, self.basis.segment(), &phi.values)
        };
        Ok(misfit + 0.5 * self.config.alpha * reg)
    }

    /// Precomputes `u_0` (zero unknown, measured data) and `u_j` (basis
    /// function `j`, zero data): `d + 2` solves against one factorization.
    pub fn build_response_basis(&self) -> Result<ResponseBasis> {
        let n = self.dim();
        let gi = self.basis.segment();
        let zero_known = BoundaryField::zeros(&self.gamma_c);
        let zero_phi = BoundaryField::zeros(gi);

        let u0 = self.forward(&zero_phi, self.known_data())?;
        let residual0: Vec<f64> = self
            .observed(&u0, &zero_phi)?
            .iter()
            .zip(&self.measured().values)
            .map(|(a, b)| a - b)
            .collect();
        let mut solutions = vec![u0];
        let mut columns = Vec::with_capacity(n);
        for j in 0..n {
            let bj = self.basis.basis_field(j);
            let uj = self.forward(&bj, &zero_known)?;
            columns.push(self.observed(&uj, &bj)?);
            solutions.push(uj);
        }

        let reg_gram = {
            let cols: Vec<Vec<f64>> = (0..n).map(|j| self.basis.basis_field(j).values).collect();
            let applied: Vec<Vec<f64>> = cols
                .iter()
                .map(|c| {
                    let mut m = segment_mass_apply(gi, c);
                    if self.config.regularizer == Regularizer::L2PlusH1 {
                        for (a, b) in m.iter_mut().zip(segment_stiffness_apply(gi, c)) {
                            *a += b;
                        }
                    }
                    m
                })
                .collect();
            DMatrix::from_fn(n, n, |i, j| 0.5 * (dot(&applied[i], &cols[j]) + dot(&applied[j], &cols[i])))
        };
        let m_cols: Vec<Vec<f64>> = columns.iter().map(|c| segment_mass_apply(&self.gamma_c, c)).collect();
        let m_r0 = segment_mass_apply(&self.gamma_c, &residual0);
        let hessian = DMatrix::from_fn(n, n, |i, j| {
            0.5 * (dot(&m_cols[i], &columns[j]) + dot(&m_cols[j], &columns[i])) + self.config.alpha * reg_gram[(i, j)]
        });
        let linear = DVector::from_iterator(n, m_cols.iter().map(|mc| dot(mc, &residual0)));
        let constant = 0.5 * dot(&m_r0, &residual0);
        Ok(ResponseBasis {
            config: self.config,
            solutions,
            residual0,
            columns,
            reg_gram,
            hessian,
            linear,
            constant,
        })
    }
}

/// Cached responses and the resulting quadratic `J(c) = ½cᵀHc + bᵀc + k`.
#[derive(Clone, Debug)]
pub struct ResponseBasis {
    config: ObjectiveConfig,
    solutions: Vec<FemSolution>,
    residual0: Vec<f64>,
    columns: Vec<Vec<f64>>,
    reg_gram: DMatrix<f64>,
    hessian: DMatrix<f64>,
    linear: DVector<f64>,
    constant: f64,
}

impl ResponseBasis {
    pub fn dim(&self) -> usize {
        self.columns.len()
    }

    pub fn config(&self) -> &ObjectiveConfig {
        &self.config
    }

    /// Stored forward solutions: `u_0` followed by one per basis function.
    pub fn solutions(&self) -> &[FemSolution] {
        &self.solutions
    }

    /// Misfit residual on `Γc` at `c = 0`.
    pub fn residual0(&self) -> &[f64] {
        &self.residual0
    }

    pub fn regularizer_gram(&self) -> &DMatrix<f64> {
        &self.reg_gram
    }

    pub fn hessian(&self) -> &DMatrix<f64> {
        &self.hessian
    }

    pub fn linear(&self) -> &DVector<f64> {
        &self.linear
    }

    pub fn constant(&self) -> f64 {
        self.constant
    }

    fn check_dim(&self, coeffs: &[f64]) -> Result<()> {
        if coeffs.len() != self.dim() {
            return Err(Error::InvalidArgument(format!(
                "response basis has dimension {}, got {} coefficients",
                self.dim(),
                coeffs.len()
            )));
        }
        Ok(())
    }

    pub fn eval_fast(&self, coeffs: &[f64]) -> Result<f64> {
        self.check_dim(coeffs)?;
        let n = self.dim();
        let mut quad = 0.0;
        for i in 0..n {
            let mut row = 0.0;
            for j in 0..n {
                row += self.hessian[(i, j)] * coeffs[j];
            }
            quad += coeffs[i] * row;
        }
        let lin: f64 = (0..n).map(|i| self.linear[i] * coeffs[i]).sum();
        Ok(0.5 * quad + lin + self.constant)
    }

    /// `u_0 + Σ c_j u_j`.
    pub fn affine_solution(&self, coeffs: &[f64]) -> Result<FemSolution> {
        self.check_dim(coeffs)?;
        let mut values = self.solutions[0].values.clone();
        for (c, u) in coeffs.iter().zip(&self.solutions[1..]) {
            for (v, x) in values.iter_mut().zip(&u.values) {
                *v += c * x;
            }
        }
        Ok(FemSolution { values })
    }
}

impl Objective for ResponseBasis {
    fn evaluate(&self, x: &[f64]) -> Result<f64> {
        self.eval_fast(x)
    }
}

impl Objective for InverseProblem {
    fn evaluate(&self, x: &[f64]) -> Result<f64> {
        self.eval_naive(x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cases::{make_case, synthesize_data, CaseName};
    use crate::mesh::{build_unit_disc_mesh, build_unit_square_mesh};
    use crate::param::BasisKind;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn problem(case: CaseName, n: usize, formulation: Formulation, alpha: f64) -> (InverseProblem, crate::cases::TargetData) {
        let mesh = match case {
            CaseName::Square => build_unit_square_mesh(n).unwrap(),
            CaseName::Disc => build_unit_disc_mesh(n).unwrap(),
        };
        let bc = make_case(case);
        let (data, target) = synthesize_data(&bc, &mesh).unwrap();
        let gi = boundary_segment(&mesh, BoundaryTag::GammaI).unwrap();
        let basis = PolyBasis::new(BasisKind::Chebyshev, 5, &gi);
        let cfg = ObjectiveConfig::new(formulation, alpha).unwrap();
        (InverseProblem::new(&mesh, bc.mu, data, basis, cfg).unwrap(), target)
    }

    #[test]
    fn projected_exact_data_sits_at_discretization_floor() {
        // the floor scales like h⁴: ~7.5e-6 at n = 32, below 1e-6 at n = 64
        let (p, target) = problem(CaseName::Square, 64, Formulation::DirichletRecovery, 0.0);
        let c = p.basis().project(&target.phi_d).unwrap();
        let j = p.eval_naive(&c).unwrap();
        assert!(j <= 1e-6, "J = {j}");
    }

    #[test]
    fn zero_coefficients_have_no_regularization() {
        let (p, _) = problem(CaseName::Square, 8, Formulation::DirichletRecovery, 0.3);
        let (q, _) = problem(CaseName::Square, 8, Formulation::DirichletRecovery, 0.0);
        let c = vec![0.0; 6];
        assert_eq!(p.eval_naive(&c).unwrap(), q.eval_naive(&c).unwrap());
    }

    #[test]
    fn response_basis_stores_d_plus_two_solutions() {
        let (p, _) = problem(CaseName::Square, 8, Formulation::DirichletRecovery, 1e-8);
        let rb = p.build_response_basis().unwrap();
        assert_eq!(rb.solutions().len(), 7);
        let fast0 = rb.eval_fast(&[0.0; 6]).unwrap();
        let r0 = rb.residual0();
        assert!((fast0 - 0.5 * segment_inner(p.gamma_c(), r0, r0)).abs() < 1e-15);
        assert!(rb.eval_fast(&[0.0; 5]).is_err());
    }

    #[test]
    fn affine_reconstruction_matches_direct_solve() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for f in [Formulation::DirichletRecovery, Formulation::NeumannRecovery] {
            for case in [CaseName::Square, CaseName::Disc] {
                let n = if case == CaseName::Square { 12 } else { 32 };
                let (p, _) = problem(case, n, f, 1e-8);
                let rb = p.build_response_basis().unwrap();
                for _ in 0..5 {
                    let c: Vec<f64> = (0..6).map(|_| rng.gen_range(-7.0..7.0)).collect();
                    let a = rb.affine_solution(&c).unwrap();
                    let d = p.solve_for(&c).unwrap();
                    let num: f64 = a.values.iter().zip(&d.values).map(|(x, y)| (x - y).powi(2)).sum();
                    let den: f64 = d.values.iter().map(|y| y * y).sum();
                    assert!(num.sqrt() <= 1e-10 * den.sqrt(), "{case} {f}");
                }
            }
        }
    }

    #[test]
    fn fast_and_naive_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for f in [Formulation::DirichletRecovery, Formulation::NeumannRecovery] {
            for case in [CaseName::Square, CaseName::Disc] {
                let n = if case == CaseName::Square { 10 } else { 24 };
                let (p, _) = problem(case, n, f, 1e-4);
                let rb = p.build_response_basis().unwrap();
                for _ in 0..10 {
                    let c: Vec<f64> = (0..6).map(|_| rng.gen_range(-7.0..7.0)).collect();
                    let a = rb.eval_fast(&c).unwrap();
                    let b = p.eval_naive(&c).unwrap();
                    assert!((a - b).abs() <= 1e-10 * (1.0 + b.abs()), "{case} {f}: {a} vs {b}");
                }
            }
        }
    }

    #[test]
    fn hessian_is_positive_definite_with_regularization() {
        let (p, _) = problem(CaseName::Disc, 32, Formulation::NeumannRecovery, 1e-6);
        let rb = p.build_response_basis().unwrap();
        let h = rb.hessian();
        assert_eq!(h.clone(), h.transpose());
        let ev = h.clone().symmetric_eigenvalues();
        assert!(ev.iter().all(|&v| v > 0.0), "{ev}");
    }

    #[test]
    fn quadratic_second_differences_are_constant() {
        let (p, _) = problem(CaseName::Square, 8, Formulation::NeumannRecovery, 1e-3);
        let rb = p.build_response_basis().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let h = 0.5;
        for axis in 0..6 {
            let mut seconds = vec![];
            for _ in 0..4 {
                let c: Vec<f64> = (0..6).map(|_| rng.gen_range(-3.0..3.0)).collect();
                let at = |d: f64| {
                    let mut x = c.clone();
                    x[axis] += d;
                    rb.eval_fast(&x).unwrap()
                };
                seconds.push(at(h) - 2.0 * at(0.0) + at(-h));
            }
            for s in &seconds {
                assert!((s - seconds[0]).abs() <= 1e-8 * (1.0 + seconds[0].abs()));
            }
        }
    }

    #[test]
    fn alpha_is_monotone() {
        let c = [0.3, -1.0, 0.5, 2.0, -0.1, 0.7];
        let mut last = -1.0;
        for alpha in [0.0, 1e-8, 1e-4, 1e-2, 1.0] {
            let (p, _) = problem(CaseName::Square, 8, Formulation::DirichletRecovery, alpha);
            let j = p.eval_naive(&c).unwrap();
            assert!(j >= last);
            assert!(j >= 0.0);
            last = j;
        }
    }

    #[test]
    fn negative_alpha_is_rejected() {
        assert!(ObjectiveConfig::new(Formulation::DirichletRecovery, -1.0).is_err());
    }
}
