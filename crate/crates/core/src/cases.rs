//! Benchmark problems with closed-form solutions and the synthetic
//! measurement noise model.
//!
//! * `Square`: `Ω = (0,1)²`, `u = exp(2x − y)`, `μ = 5`; `Γi` is the left side.
//! * `Disc`: unit disc, `u = sin x sin y`, `μ = −2`; `Γi` is the first quadrant arc.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::fem::BoundaryField;
use crate::mesh::{boundary_segment, BoundarySegment, BoundaryTag, Mesh, Point2};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum CaseName {
    Square,
    Disc,
}

impl FromStr for CaseName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "square" => Ok(CaseName::Square),
            "disc" | "disk" => Ok(CaseName::Disc),
            other => Err(Error::InvalidArgument(format!("unknown case `{other}`"))),
        }
    }
}

impl fmt::Display for CaseName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CaseName::Square => "square",
            CaseName::Disc => "disc",
        })
    }
}

#[derive(Clone, Copy, Debug)]
pub struct BenchmarkCase {
    pub name: CaseName,
    /// Reaction coefficient in `-Δu + μu = 0`.
    pub mu: f64,
    exact_u: fn(f64, f64) -> f64,
    exact_grad: fn(f64, f64) -> (f64, f64),
}

impl BenchmarkCase {
    pub fn u(&self, p: Point2) -> f64 {
        (self.exact_u)(p.x, p.y)
    }

    pub fn grad(&self, p: Point2) -> (f64, f64) {
        (self.exact_grad)(p.x, p.y)
    }
}

pub fn make_case(name: CaseName) -> BenchmarkCase {
    match name {
        CaseName::Square => BenchmarkCase {
            name,
            mu: 5.0,
            exact_u: |x, y| (2.0 * x - y).exp(),
            exact_grad: |x, y| {
                let e = (2.0 * x - y).exp();
                (2.0 * e, -e)
            },
        },
        CaseName::Disc => BenchmarkCase {
            name,
            mu: -2.0,
            exact_u: |x, y| x.sin() * y.sin(),
            exact_grad: |x, y| (x.cos() * y.sin(), x.sin() * y.cos()),
        },
    }
}

/// Measured data on `Γc`: trace `f` and outward flux `g`.
#[derive(Clone, Debug, PartialEq)]
pub struct CauchyData {
    pub f: BoundaryField,
    pub g: BoundaryField,
    pub noise_level: f64,
    pub seed: Option<u64>,
}

/// Exact boundary data on `Γi`, the reconstruction targets.
#[derive(Clone, Debug, PartialEq)]
pub struct TargetData {
    pub phi_d: BoundaryField,
    pub phi_n: BoundaryField,
}

fn check_geometry(case: &BenchmarkCase, mesh: &Mesh) -> Result<()> {
    const TOL: f64 = 1e-9;
    for e in &mesh.boundary_edges {
        for k in [e.a, e.b] {
            let p = mesh.nodes[k];
            let ok = match case.name {
                CaseName::Square => {
                    let on_side = p.x.abs().min((1.0 - p.x).abs()).min(p.y.abs()).min((1.0 - p.y).abs()) < TOL;
                    on_side && (e.tag != BoundaryTag::GammaI || p.x.abs() < TOL)
                }
                CaseName::Disc => {
                    (p.norm() - 1.0).abs() < TOL
                        && (e.tag != BoundaryTag::GammaI || (p.x > -TOL && p.y > -TOL))
                }
            };
            if !ok {
                return Err(Error::GeometryMismatch(format!(
                    "boundary node {k} at ({}, {}) tagged {} does not fit the {} case",
                    p.x, p.y, e.tag, case.name
                )));
            }
        }
    }
    Ok(())
}

/// Outward flux `∇u·n` at each node of `segment`.
///
/// On the square the normal of each side is used and, at corners joining two
/// sides of the same segment, the two one-sided fluxes are averaged. On the
/// disc the exact radial normal is used.
fn nodal_flux(case: &BenchmarkCase, mesh: &Mesh, segment: &BoundarySegment) -> BoundaryField {
    let grad_dot = |p: Point2, n: (f64, f64)| {
        let g = case.grad(p);
        g.0 * n.0 + g.1 * n.1
    };
    let side_normal = |a: Point2, b: Point2| {
        let m = Point2::new((a.x + b.x) / 2.0, (a.y + b.y) / 2.0);
        let cands = [
            (m.x, (-1.0, 0.0)),
            (1.0 - m.x, (1.0, 0.0)),
            (m.y, (0.0, -1.0)),
            (1.0 - m.y, (0.0, 1.0)),
        ];
        cands
            .iter()
            .min_by(|x, y| x.0.abs().total_cmp(&y.0.abs()))
            .unwrap()
            .1
    };
    let values = (0..segment.len())
        .map(|k| {
            let p = mesh.nodes[segment.nodes[k]];
            match case.name {
                CaseName::Disc => {
                    let r = p.norm();
                    grad_dot(p, (p.x / r, p.y / r))
                }
                CaseName::Square => {
                    let mut acc = 0.0;
                    let mut cnt = 0.0;
                    if k > 0 {
                        acc += grad_dot(p, side_normal(mesh.nodes[segment.nodes[k - 1]], p));
                        cnt += 1.0;
                    }
                    if k + 1 < segment.len() {
                        acc += grad_dot(p, side_normal(p, mesh.nodes[segment.nodes[k + 1]]));
                        cnt += 1.0;
                    }
                    acc / cnt
                }
            }
        })
        .collect();
    BoundaryField {
        tag: segment.tag,
        values,
    }
}

/// Noise-free Cauchy data on `Γc` and exact targets on `Γi`, by nodal
/// evaluation of the closed-form solution.
pub fn synthesize_data(case: &BenchmarkCase, mesh: &Mesh) -> Result<(CauchyData, TargetData)> {
    check_geometry(case, mesh)?;
    let gc = boundary_segment(mesh, BoundaryTag::GammaC)?;
    let gi = boundary_segment(mesh, BoundaryTag::GammaI)?;
    let data = CauchyData {
        f: BoundaryField::from_fn(&gc, mesh, |p| case.u(p)),
        g: nodal_flux(case, mesh, &gc),
        noise_level: 0.0,
        seed: None,
    };
    let target = TargetData {
        phi_d: BoundaryField::from_fn(&gi, mesh, |p| case.u(p)),
        phi_n: nodal_flux(case, mesh, &gi),
    };
    Ok((data, target))
}

/// `T(1 + θν)` applied to every nodal value of `f` and then of `g`, with
/// independent `θ ~ U[-1, 1]` drawn from ChaCha8 seeded with `seed`.
pub fn add_noise(data: &CauchyData, nu: f64, seed: u64) -> Result<CauchyData> {
    if !(nu >= 0.0) || !nu.is_finite() {
        return Err(Error::InvalidArgument(format!("noise level must be >= 0, got {nu}")));
    }
    let mut out = data.clone();
    out.noise_level = nu;
    out.seed = Some(seed);
    if nu == 0.0 {
        return Ok(out);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for v in out.f.values.iter_mut().chain(out.g.values.iter_mut()) {
        let theta: f64 = rng.gen_range(-1.0..=1.0);
        *v = perturb(*v, theta, nu);
    }
    Ok(out)
}

fn perturb(value: f64, theta: f64, nu: f64) -> f64 {
    value * (1.0 + theta * nu)
}
