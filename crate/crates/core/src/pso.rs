//! Global-best particle swarm optimization over a box.
//!
//! Velocities follow `V ← ωV + c₁r₁(p_i − X) + c₂r₂(p_g − X)` and positions
//! `X ← X + V`, clamped into `[lb, ub]` (the clamped velocity component is
//! zeroed). Random numbers come from one ChaCha8 stream consumed in a fixed
//! sequential order.
//!
//! In [`UpdateMode::Asynchronous`] (the default) particles are moved and
//! evaluated one after another and `p_g` is refreshed immediately, so later
//! particles of the same iteration already follow it. In
//! [`UpdateMode::Synchronous`] every particle moves against the `p_g` from the
//! start of the iteration, the evaluations run in parallel, and the
//! bookkeeping is reduced in particle order. Both are bit-reproducible
//! regardless of the thread count.

use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};

/// Function to minimize. Implementations must be pure: the swarm evaluates
/// particles concurrently.
pub trait Objective: Sync {
    fn evaluate(&self, x: &[f64]) -> Result<f64>;
}

/// Adapter for plain closures.
pub struct FnObjective<F>(pub F);

impl<F> Objective for FnObjective<F>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    fn evaluate(&self, x: &[f64]) -> Result<f64> {
        Ok((self.0)(x))
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum UpdateMode {
    #[default]
    Asynchronous,
    Synchronous,
}

impl FromStr for UpdateMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "asynchronous" | "async" => Ok(UpdateMode::Asynchronous),
            "synchronous" | "sync" => Ok(UpdateMode::Synchronous),
            other => Err(Error::InvalidArgument(format!("unknown update mode `{other}`"))),
        }
    }
}

impl fmt::Display for UpdateMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            UpdateMode::Asynchronous => "asynchronous",
            UpdateMode::Synchronous => "synchronous",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PsoConfig {
    pub swarm_size: usize,
    pub c1: f64,
    pub c2: f64,
    pub omega: f64,
    pub max_iter: usize,
    pub lb: f64,
    pub ub: f64,
    /// Stop when the global best improves by less than this; `0` disables.
    pub tolerance: f64,
    pub seed: u64,
    /// Draw `r₁, r₂` per coordinate instead of per particle.
    pub per_component_random: bool,
    pub update: UpdateMode,
}

impl Default for PsoConfig {
    fn default() -> Self {
        Self {
            swarm_size: 60,
            c1: 1.5,
            c2: 1.5,
            omega: 0.5,
            max_iter: 200,
            lb: -7.0,
            ub: 7.0,
            tolerance: 0.0,
            seed: 1,
            per_component_random: false,
            update: UpdateMode::Asynchronous,
        }
    }
}

impl PsoConfig {
    pub fn validate(&self) -> Result<()> {
        if self.swarm_size < 1 {
            return Err(Error::InvalidArgument("swarm size must be >= 1".into()));
        }
        if !(self.lb < self.ub) || !self.lb.is_finite() || !self.ub.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "search bounds must satisfy lb < ub, got [{}, {}]",
                self.lb, self.ub
            )));
        }
        for (name, v) in [("c1", self.c1), ("c2", self.c2), ("omega", self.omega)] {
            if !v.is_finite() {
                return Err(Error::InvalidArgument(format!("{name} must be finite")));
            }
        }
        if !(self.tolerance >= 0.0) {
            return Err(Error::InvalidArgument("tolerance must be >= 0".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct SwarmState {
    pub positions: Vec<Vec<f64>>,
    pub velocities: Vec<Vec<f64>>,
    /// Objective values at the current positions.
    pub values: Vec<f64>,
    pub personal_best: Vec<Vec<f64>>,
    pub personal_best_value: Vec<f64>,
    pub global_best: Vec<f64>,
    pub global_best_value: f64,
    pub iteration: usize,
    pub evaluations: usize,
    rng: ChaCha8Rng,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TraceRow {
    pub iteration: usize,
    pub best_cost: f64,
    pub best_position: Vec<f64>,
    /// Mean objective over the current (not personal-best) positions.
    pub mean_cost: f64,
}

#[derive(Clone, Debug, Default)]
pub struct PsoTrace {
    /// Row 0 is the initial swarm, row `t` the state after iteration `t`.
    pub rows: Vec<TraceRow>,
    pub evaluations: usize,
    pub wall_time: Duration,
}

impl PsoTrace {
    /// CSV with header `iter,best_cost,mean_cost`.
    pub fn write_csv<W: std::io::Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "iter,best_cost,mean_cost")?;
        for r in &self.rows {
            writeln!(w, "{},{:.16e},{:.16e}", r.iteration, r.best_cost, r.mean_cost)?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct PsoResult {
    pub best_position: Vec<f64>,
    pub best_value: f64,
    pub trace: PsoTrace,
}

fn evaluate_all<O: Objective + ?Sized>(objective: &O, xs: &[Vec<f64>], iteration: usize) -> Result<Vec<f64>> {
    xs.par_iter()
        .enumerate()
        .map(|(i, x)| {
            objective.evaluate(x).map_err(|e| Error::Objective {
                iteration,
                particle: i,
                source: Box::new(e),
            })
        })
        .collect()
}

fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

pub fn initialize<O: Objective + ?Sized>(config: &PsoConfig, dim: usize, objective: &O) -> Result<SwarmState> {
    config.validate()?;
    if dim < 1 {
        return Err(Error::InvalidArgument("dimension must be >= 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let positions: Vec<Vec<f64>> = (0..config.swarm_size)
        .map(|_| (0..dim).map(|_| rng.gen_range(config.lb..=config.ub)).collect())
        .collect();
    let values = evaluate_all(objective, &positions, 0)?;
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v < values[best] {
            best = i;
        }
    }
    Ok(SwarmState {
        velocities: vec![vec![0.0; dim]; config.swarm_size],
        personal_best: positions.clone(),
        personal_best_value: values.clone(),
        global_best: positions[best].clone(),
        global_best_value: values[best],
        positions,
        values,
        iteration: 0,
        evaluations: config.swarm_size,
        rng,
    })
}

/// Velocity and position update for one particle with given random factors.
fn move_particle(
    config: &PsoConfig,
    x: &mut [f64],
    v: &mut [f64],
    p_best: &[f64],
    g_best: &[f64],
    r1: &[f64],
    r2: &[f64],
) {
    for d in 0..x.len() {
        let (a, b) = if r1.len() == 1 { (r1[0], r2[0]) } else { (r1[d], r2[d]) };
        v[d] = config.omega * v[d] + config.c1 * a * (p_best[d] - x[d]) + config.c2 * b * (g_best[d] - x[d]);
        x[d] += v[d];
        if x[d] < config.lb {
            x[d] = config.lb;
            v[d] = 0.0;
        } else if x[d] > config.ub {
            x[d] = config.ub;
            v[d] = 0.0;
        }
    }
}

/// One iteration: move every particle once and update the bests.
pub fn step<O: Objective + ?Sized>(mut state: SwarmState, config: &PsoConfig, objective: &O) -> Result<SwarmState> {
    let dim = state.global_best.len();
    let draws = if config.per_component_random { dim } else { 1 };
    let iteration = state.iteration + 1;
    match config.update {
        UpdateMode::Asynchronous => {
            for i in 0..state.positions.len() {
                let r1: Vec<f64> = (0..draws).map(|_| state.rng.gen::<f64>()).collect();
                let r2: Vec<f64> = (0..draws).map(|_| state.rng.gen::<f64>()).collect();
                let (x, v) = (&mut state.positions[i], &mut state.velocities[i]);
                move_particle(config, x, v, &state.personal_best[i], &state.global_best, &r1, &r2);
                let value = objective.evaluate(&state.positions[i]).map_err(|e| Error::Objective {
                    iteration,
                    particle: i,
                    source: Box::new(e),
                })?;
                state.values[i] = value;
                record(&mut state, i, value);
            }
        }
        UpdateMode::Synchronous => {
            for i in 0..state.positions.len() {
                let r1: Vec<f64> = (0..draws).map(|_| state.rng.gen::<f64>()).collect();
                let r2: Vec<f64> = (0..draws).map(|_| state.rng.gen::<f64>()).collect();
                let (x, v) = (&mut state.positions[i], &mut state.velocities[i]);
                move_particle(config, x, v, &state.personal_best[i], &state.global_best, &r1, &r2);
            }
            state.values = evaluate_all(objective, &state.positions, iteration)?;
            for i in 0..state.positions.len() {
                let value = state.values[i];
                record(&mut state, i, value);
            }
        }
    }
    state.iteration = iteration;
    state.evaluations += state.positions.len();
    Ok(state)
}

fn record(state: &mut SwarmState, i: usize, value: f64) {
    if value < state.personal_best_value[i] {
        state.personal_best[i].copy_from_slice(&state.positions[i]);
        state.personal_best_value[i] = value;
        if value < state.global_best_value {
            state.global_best.copy_from_slice(&state.positions[i]);
            state.global_best_value = value;
        }
    }
}

fn trace_row(state: &SwarmState) -> TraceRow {
    TraceRow {
        iteration: state.iteration,
        best_cost: state.global_best_value,
        best_position: state.global_best.clone(),
        mean_cost: mean(&state.values),
    }
}

/// Runs up to `max_iter` iterations, stopping early once the global best
/// improves by less than `tolerance` in one iteration.
pub fn run<O: Objective + ?Sized>(config: &PsoConfig, dim: usize, objective: &O) -> Result<PsoResult> {
    let started = Instant::now();
    let mut state = initialize(config, dim, objective)?;
    let mut rows = vec![trace_row(&state)];
    for _ in 0..config.max_iter {
        let old = state.global_best_value;
        state = step(state, config, objective)?;
        rows.push(trace_row(&state));
        if (state.global_best_value - old).abs() < config.tolerance {
            break;
        }
    }
    Ok(PsoResult {
        best_value: state.global_best_value,
        best_position: state.global_best,
        trace: PsoTrace {
            rows,
            evaluations: state.evaluations,
            wall_time: started.elapsed(),
        },
    })
}

/// Standard test functions.
pub mod testfns {
    pub fn sphere(x: &[f64]) -> f64 {
        x.iter().map(|v| v * v).sum()
    }

    pub fn rosenbrock(x: &[f64]) -> f64 {
        x.windows(2)
            .map(|w| 100.0 * (w[1] - w[0] * w[0]).powi(2) + (1.0 - w[0]).powi(2))
            .sum()
    }
}
