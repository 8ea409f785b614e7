//! Experiment pipelines shared by the subcommands and the acceptance suite.

use std::time::{Duration, Instant};

use helmpso::cases::{add_noise, make_case, synthesize_data, CaseName};
use helmpso::fem::{assemble_and_factorize, boundary_l2_norm, l2_error, solve, BoundaryField};
use helmpso::mesh::{boundary_segment, build_unit_disc_mesh, build_unit_square_mesh, BoundarySegment, BoundaryTag, Mesh};
use helmpso::objective::{Formulation, InverseProblem, ObjectiveConfig, ResponseBasis};
use helmpso::oracle::{extract_quadratic, solve_normal_equations, OracleSolution};
use helmpso::param::PolyBasis;
use helmpso::pso::{self, PsoTrace};
use helmpso::{Error, Result};
use rayon::prelude::*;

use crate::config::{check_mesh_n, Settings};

pub fn build_mesh(case: CaseName, n: usize) -> Result<Mesh> {
    match case {
        CaseName::Square => build_unit_square_mesh(n),
        CaseName::Disc => build_unit_disc_mesh(n),
    }
}

/// `‖a − b‖ / ‖b‖` in `L²(segment)`.
pub fn relative_error(a: &BoundaryField, b: &BoundaryField, segment: &BoundarySegment) -> f64 {
    let diff = BoundaryField {
        tag: b.tag,
        values: a.values.iter().zip(&b.values).map(|(x, y)| x - y).collect(),
    };
    boundary_l2_norm(&diff, segment) / boundary_l2_norm(b, segment)
}

#[derive(Clone, Debug, PartialEq)]
pub struct FemLevel {
    pub n: usize,
    pub h: f64,
    /// Relative `L²(Ω)` error of the forward solve with exact data.
    pub l2_error: f64,
    /// Error of the previous (coarser) level over this one; NaN on the first.
    pub ratio: f64,
}

pub const FEM_RATIO_BAND: (f64, f64) = (3.2, 4.8);

/// Manufactured-solution study at `n/4, n/2, n`: exact trace on `Γi`, exact
/// flux on `Γc`.
pub fn fem_convergence(case: CaseName, n: usize) -> Result<Vec<FemLevel>> {
    let bench = make_case(case);
    let mut levels: Vec<FemLevel> = Vec::new();
    for k in [n / 4, n / 2, n] {
        check_mesh_n(case, k).map_err(Error::InvalidArgument)?;
        let mesh = build_mesh(case, k)?;
        let (data, target) = synthesize_data(&bench, &mesh)?;
        let op = assemble_and_factorize(&mesh, bench.mu, BoundaryTag::GammaI)?;
        let u = solve(&op, &target.phi_d, &data.g)?;
        let (err, norm) = l2_error(&mesh, &u, |p| bench.u(p));
        let rel = err / norm;
        let ratio = levels.last().map_or(f64::NAN, |prev| prev.l2_error / rel);
        levels.push(FemLevel {
            n: k,
            h: mesh.h,
            l2_error: rel,
            ratio,
        });
    }
    Ok(levels)
}

pub fn ratios_in_band(levels: &[FemLevel]) -> bool {
    levels
        .iter()
        .skip(1)
        .all(|l| (FEM_RATIO_BAND.0..=FEM_RATIO_BAND.1).contains(&l.ratio))
}

/// Mesh, data and objective for one run.
pub struct Setup {
    pub mesh: Mesh,
    pub gamma_i: BoundarySegment,
    /// Exact unknown on `Γi` (trace or flux depending on the formulation).
    pub exact: BoundaryField,
    pub problem: InverseProblem,
    pub response: ResponseBasis,
    pub build_time: Duration,
}

pub fn setup(settings: &Settings, noise_level: f64, noise_seed: u64) -> Result<Setup> {
    let bench = make_case(settings.case);
    let mesh = build_mesh(settings.case, settings.mesh_n)?;
    let (clean, target) = synthesize_data(&bench, &mesh)?;
    let data = if noise_level > 0.0 {
        add_noise(&clean, noise_level, noise_seed)?
    } else {
        clean
    };
    let gamma_i = boundary_segment(&mesh, BoundaryTag::GammaI)?;
    let basis = PolyBasis::new(settings.basis, settings.degree, &gamma_i);
    let cfg = ObjectiveConfig::new(settings.formulation, settings.alpha)?.with_regularizer(settings.regularizer);
    let started = Instant::now();
    let problem = InverseProblem::new(&mesh, bench.mu, data, basis, cfg)?;
    let response = problem.build_response_basis()?;
    let build_time = started.elapsed();
    let exact = match settings.formulation {
        Formulation::DirichletRecovery => target.phi_d,
        Formulation::NeumannRecovery => target.phi_n,
    };
    Ok(Setup {
        mesh,
        gamma_i,
        exact,
        problem,
        response,
        build_time,
    })
}

pub struct Reconstruction {
    pub noise_level: f64,
    pub seed: u64,
    pub final_j: f64,
    pub coeffs: Vec<f64>,
    pub reconstructed: BoundaryField,
    pub exact: BoundaryField,
    pub gamma_i: BoundarySegment,
    /// `None` when the Hessian is not positive definite.
    pub oracle: Option<OracleSolution>,
    pub oracle_field: Option<BoundaryField>,
    /// Relative `L²(Γi)` error against the exact unknown.
    pub trace_error: f64,
    pub oracle_error: f64,
    /// Relative `L²(Γi)` distance between the swarm and oracle reconstructions.
    pub gap_to_oracle: f64,
    pub trace: PsoTrace,
    pub build_time: Duration,
}

/// Builds the objective, runs the swarm (noise seed = swarm seed = `seed`) and
/// compares against the exact data and the oracle.
pub fn reconstruct(settings: &Settings, noise_level: f64, seed: u64) -> Result<Reconstruction> {
    let s = setup(settings, noise_level, seed)?;
    let cfg = pso::PsoConfig {
        seed,
        ..settings.pso.clone()
    };
    let dim = s.problem.dim();
    let result = if settings.fast_path {
        pso::run(&cfg, dim, &s.response)?
    } else {
        pso::run(&cfg, dim, &s.problem)?
    };
    let basis = s.problem.basis();
    let reconstructed = basis.coeffs_to_field(&result.best_position)?;
    let oracle = solve_normal_equations(&extract_quadratic(&s.response), cfg.lb, cfg.ub).ok();
    let oracle_field = match &oracle {
        Some(o) => Some(basis.coeffs_to_field(&o.coeffs)?),
        None => None,
    };
    let trace_error = relative_error(&reconstructed, &s.exact, &s.gamma_i);
    let (oracle_error, gap_to_oracle) = match &oracle_field {
        Some(f) => (
            relative_error(f, &s.exact, &s.gamma_i),
            relative_error(&reconstructed, f, &s.gamma_i),
        ),
        None => (f64::NAN, f64::NAN),
    };
    Ok(Reconstruction {
        noise_level,
        seed,
        final_j: result.best_value,
        coeffs: result.best_position,
        reconstructed,
        exact: s.exact,
        gamma_i: s.gamma_i,
        oracle,
        oracle_field,
        trace_error,
        oracle_error,
        gap_to_oracle,
        trace: result.trace,
        build_time: s.build_time,
    })
}

/// Mean seconds per evaluation on the fast and naive paths.
pub fn time_paths(s: &Setup, naive_evals: usize) -> Result<(f64, f64)> {
    let c = vec![0.5; s.problem.dim()];
    let fast_evals = 1000 * naive_evals.max(1);
    let t = Instant::now();
    for _ in 0..fast_evals {
        s.response.eval_fast(&c)?;
    }
    let fast = t.elapsed().as_secs_f64() / fast_evals as f64;
    let t = Instant::now();
    for _ in 0..naive_evals.max(1) {
        s.problem.eval_naive(&c)?;
    }
    let naive = t.elapsed().as_secs_f64() / naive_evals.max(1) as f64;
    Ok((fast, naive))
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub eta: f64,
    pub j_final: f64,
    pub trace_error: f64,
}

/// One reconstruction per regularization weight, fixed seed, in parallel.
pub fn reg_sweep(settings: &Settings) -> Result<Vec<SweepRow>> {
    settings
        .etas
        .par_iter()
        .map(|&eta| {
            let s = Settings {
                alpha: eta,
                ..settings.clone()
            };
            let r = reconstruct(&s, settings.noise_level, settings.pso.seed)?;
            Ok(SweepRow {
                eta,
                j_final: r.final_j,
                trace_error: r.trace_error,
            })
        })
        .collect()
}

/// All `(level, seed)` reconstructions, level-major.
pub fn noise_study(settings: &Settings) -> Result<Vec<Reconstruction>> {
    let points: Vec<(f64, u64)> = settings
        .noise_levels
        .iter()
        .flat_map(|&nu| settings.noise_seeds.iter().map(move |&s| (nu, s)))
        .collect();
    points
        .par_iter()
        .map(|&(nu, seed)| reconstruct(settings, nu, seed))
        .collect()
}

pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n == 0 {
        f64::NAN
    } else if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Median final cost and median trace error per noise level, in level order.
pub fn noise_medians(settings: &Settings, runs: &[Reconstruction]) -> Vec<(f64, f64, f64)> {
    settings
        .noise_levels
        .iter()
        .map(|&nu| {
            let at: Vec<&Reconstruction> = runs.iter().filter(|r| r.noise_level == nu).collect();
            let js: Vec<f64> = at.iter().map(|r| r.final_j).collect();
            let es: Vec<f64> = at.iter().map(|r| r.trace_error).collect();
            (nu, median(&js), median(&es))
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct CompareRow {
    pub case: CaseName,
    pub formulation: Formulation,
    pub j_final: f64,
    pub oracle_j: f64,
    pub relative_error: f64,
}

/// Both formulations on both cases with the configured seed.
pub fn compare_dn(settings: &Settings) -> Result<Vec<CompareRow>> {
    let combos = [
        (CaseName::Square, Formulation::DirichletRecovery),
        (CaseName::Square, Formulation::NeumannRecovery),
        (CaseName::Disc, Formulation::DirichletRecovery),
        (CaseName::Disc, Formulation::NeumannRecovery),
    ];
    combos
        .par_iter()
        .map(|&(case, formulation)| {
            let s = Settings {
                formulation,
                ..settings.for_case(case)
            };
            let r = reconstruct(&s, settings.noise_level, settings.pso.seed)?;
            Ok(CompareRow {
                case,
                formulation,
                j_final: r.final_j,
                oracle_j: r.oracle.as_ref().map_or(f64::NAN, |o| o.value),
                relative_error: r.trace_error,
            })
        })
        .collect()
}
