//! TOML experiment configuration.
//!
//! Every key is optional; missing keys take the defaults listed in the README.
//! Unknown keys and out-of-range values are rejected with a message naming the
//! offending key.

use std::path::{Path, PathBuf};

use helmpso::cases::CaseName;
use helmpso::objective::{Formulation, Regularizer};
use helmpso::param::BasisKind;
use helmpso::pso::{PsoConfig, UpdateMode};
use serde::Deserialize;

use crate::CliError;

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    #[serde(default)]
    experiment: RawExperiment,
    #[serde(default)]
    pso: RawPso,
    #[serde(default)]
    noise: RawNoise,
    #[serde(default)]
    sweep: RawSweep,
    #[serde(default)]
    output: RawOutput,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawExperiment {
    case: Option<String>,
    formulation: Option<String>,
    mesh_n: Option<usize>,
    degree: Option<usize>,
    basis: Option<String>,
    alpha: Option<f64>,
    regularizer: Option<String>,
    fast_path: Option<bool>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPso {
    swarm_size: Option<usize>,
    c1: Option<f64>,
    c2: Option<f64>,
    omega: Option<f64>,
    max_iter: Option<usize>,
    lb: Option<f64>,
    ub: Option<f64>,
    tolerance: Option<f64>,
    seed: Option<u64>,
    per_component_random: Option<bool>,
    update: Option<String>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawNoise {
    level: Option<f64>,
    levels: Option<Vec<f64>>,
    seeds: Option<Vec<u64>>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSweep {
    etas: Option<Vec<f64>>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOutput {
    dir: Option<PathBuf>,
}

/// Fully resolved configuration.
#[derive(Clone, Debug, PartialEq)]
pub struct Settings {
    pub case: CaseName,
    pub formulation: Formulation,
    pub mesh_n: usize,
    pub degree: usize,
    pub basis: BasisKind,
    pub alpha: f64,
    pub regularizer: Regularizer,
    pub fast_path: bool,
    pub pso: PsoConfig,
    /// Noise level for `reconstruct`; its noise seed is the PSO seed.
    pub noise_level: f64,
    pub noise_levels: Vec<f64>,
    pub noise_seeds: Vec<u64>,
    pub etas: Vec<f64>,
    pub out_dir: PathBuf,
}

pub const MAX_DEGREE: usize = 20;

pub fn default_mesh_n(case: CaseName) -> usize {
    match case {
        CaseName::Square => 32,
        CaseName::Disc => 64,
    }
}

pub fn check_mesh_n(case: CaseName, n: usize) -> Result<(), String> {
    match case {
        CaseName::Square if n < 2 => Err(format!("square mesh needs n >= 2, got {n}")),
        CaseName::Disc if n < 16 || !n.is_multiple_of(4) => {
            Err(format!("disc mesh needs n >= 16 and divisible by 4, got {n}"))
        }
        _ => Ok(()),
    }
}

impl Default for Settings {
    fn default() -> Self {
        Self::from_toml("").expect("empty config is valid")
    }
}

fn bad(key: &str, msg: impl std::fmt::Display) -> CliError {
    CliError::Config(format!("{key}: {msg}"))
}

fn parsed<T: std::str::FromStr>(key: &str, v: Option<String>, default: T) -> Result<T, CliError>
where
    T::Err: std::fmt::Display,
{
    match v {
        None => Ok(default),
        Some(s) => s.parse().map_err(|e| bad(key, e)),
    }
}

fn finite(key: &str, v: f64) -> Result<f64, CliError> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(bad(key, "must be finite"))
    }
}

impl Settings {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        let e = raw.experiment;
        let case: CaseName = parsed("experiment.case", e.case, CaseName::Square)?;
        let mesh_n = e.mesh_n.unwrap_or_else(|| default_mesh_n(case));
        check_mesh_n(case, mesh_n).map_err(|m| bad("experiment.mesh_n", m))?;
        let degree = e.degree.unwrap_or(5);
        if degree > MAX_DEGREE {
            return Err(bad("experiment.degree", format!("must be <= {MAX_DEGREE}, got {degree}")));
        }
        let alpha = finite("experiment.alpha", e.alpha.unwrap_or(1e-8))?;
        if alpha < 0.0 {
            return Err(bad("experiment.alpha", "must be >= 0"));
        }

        let p = raw.pso;
        let d = PsoConfig::default();
        let pso = PsoConfig {
            swarm_size: p.swarm_size.unwrap_or(d.swarm_size),
            c1: finite("pso.c1", p.c1.unwrap_or(d.c1))?,
            c2: finite("pso.c2", p.c2.unwrap_or(d.c2))?,
            omega: finite("pso.omega", p.omega.unwrap_or(d.omega))?,
            max_iter: p.max_iter.unwrap_or(d.max_iter),
            lb: finite("pso.lb", p.lb.unwrap_or(d.lb))?,
            ub: finite("pso.ub", p.ub.unwrap_or(d.ub))?,
            tolerance: p.tolerance.unwrap_or(d.tolerance),
            seed: p.seed.unwrap_or(d.seed),
            per_component_random: p.per_component_random.unwrap_or(d.per_component_random),
            update: parsed("pso.update", p.update, UpdateMode::default())?,
        };
        if pso.swarm_size < 1 {
            return Err(bad("pso.swarm_size", "must be >= 1"));
        }
        if pso.lb >= pso.ub {
            return Err(bad("pso.lb", format!("must be below pso.ub ({} >= {})", pso.lb, pso.ub)));
        }
        if !(pso.tolerance >= 0.0) {
            return Err(bad("pso.tolerance", "must be >= 0"));
        }

        let n = raw.noise;
        let noise_level = n.level.unwrap_or(0.0);
        if !(noise_level >= 0.0) || !noise_level.is_finite() {
            return Err(bad("noise.level", "must be finite and >= 0"));
        }
        let noise_levels = n.levels.unwrap_or_else(|| vec![0.0, 0.01, 0.02, 0.03]);
        if noise_levels.is_empty() || noise_levels.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
            return Err(bad("noise.levels", "must be a non-empty list of finite values >= 0"));
        }
        let noise_seeds = n.seeds.unwrap_or_else(|| vec![1, 2, 3, 4, 5]);
        if noise_seeds.is_empty() {
            return Err(bad("noise.seeds", "must not be empty"));
        }
        let etas = raw.sweep.etas.unwrap_or_else(|| vec![1e-3, 1e-4, 1e-5, 1e-6, 1e-7, 1e-8]);
        if etas.is_empty() || etas.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
            return Err(bad("sweep.etas", "must be a non-empty list of finite values >= 0"));
        }

        Ok(Settings {
            case,
            formulation: parsed("experiment.formulation", e.formulation, Formulation::DirichletRecovery)?,
            mesh_n,
            degree,
            basis: parsed("experiment.basis", e.basis, BasisKind::Chebyshev)?,
            alpha,
            regularizer: parsed("experiment.regularizer", e.regularizer, Regularizer::L2PlusH1)?,
            fast_path: e.fast_path.unwrap_or(true),
            pso,
            noise_level,
            noise_levels,
            noise_seeds,
            etas,
            out_dir: raw.output.dir.unwrap_or_else(|| PathBuf::from("out")),
        })
    }

    /// Same settings for another case; the mesh falls back to that case's
    /// default unless `n` is valid for it.
    pub fn for_case(&self, case: CaseName) -> Self {
        let mesh_n = if case == self.case {
            self.mesh_n
        } else {
            default_mesh_n(case)
        };
        Settings {
            case,
            mesh_n,
            ..self.clone()
        }
    }

    /// `key,value` rows describing the effective configuration.
    pub fn echo(&self) -> Vec<(String, String)> {
        let list = |v: &[f64]| v.iter().map(|x| format!("{x:e}")).collect::<Vec<_>>().join(";");
        let p = &self.pso;
        vec![
            ("experiment.case".into(), self.case.to_string()),
            ("experiment.formulation".into(), self.formulation.to_string()),
            ("experiment.mesh_n".into(), self.mesh_n.to_string()),
            ("experiment.degree".into(), self.degree.to_string()),
            ("experiment.basis".into(), self.basis.to_string()),
            ("experiment.alpha".into(), format!("{:e}", self.alpha)),
            ("experiment.regularizer".into(), self.regularizer.to_string()),
            ("experiment.fast_path".into(), self.fast_path.to_string()),
            ("pso.swarm_size".into(), p.swarm_size.to_string()),
            ("pso.c1".into(), format!("{:e}", p.c1)),
            ("pso.c2".into(), format!("{:e}", p.c2)),
            ("pso.omega".into(), format!("{:e}", p.omega)),
            ("pso.max_iter".into(), p.max_iter.to_string()),
            ("pso.lb".into(), format!("{:e}", p.lb)),
            ("pso.ub".into(), format!("{:e}", p.ub)),
            ("pso.tolerance".into(), format!("{:e}", p.tolerance)),
            ("pso.seed".into(), p.seed.to_string()),
            ("pso.per_component_random".into(), p.per_component_random.to_string()),
            ("pso.update".into(), p.update.to_string()),
            ("noise.level".into(), format!("{:e}", self.noise_level)),
            ("noise.levels".into(), list(&self.noise_levels)),
            (
                "noise.seeds".into(),
                self.noise_seeds.iter().map(|s| s.to_string()).collect::<Vec<_>>().join(";"),
            ),
            ("sweep.etas".into(), list(&self.etas)),
        ]
    }
}
