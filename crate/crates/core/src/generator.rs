//! Mixed-level covering-array generation.
//!
//! Both generators build the suite one row at a time against the set of
//! still-uncovered `t`-tuples and stop once that set is empty. They differ in
//! how a row is chosen:
//!
//! * [`generate_greedy`] scores a fixed number of random candidates and keeps
//!   the one covering the most new tuples.
//! * [`generate_pso`] runs a particle swarm over complete assignments, with
//!   the number of newly covered tuples as fitness.
//!
//! When `t == k` every full-coverage suite must contain all assignments, so
//! both short-circuit to the exhaustive suite in lexicographic order.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{Assignment, Model, ModelError};
use crate::suite::{SuiteError, TestSuite};
use crate::tuples::{TupleSet, TupleSpace};

pub const DEFAULT_CANDIDATE_ATTEMPTS: usize = 50;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeneratorError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Suite(#[from] SuiteError),
    #[error("invalid PSO configuration: {0}")]
    InvalidConfig(String),
}

/// Particle swarm parameters.
///
/// Inertia decays linearly from `inertia_start` to `inertia_end` across the
/// iterations spent on each row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PsoConfig {
    pub swarm_size: usize,
    pub iterations: usize,
    pub inertia_start: f64,
    pub inertia_end: f64,
    pub cognitive: f64,
    pub social: f64,
    pub seed: u64,
    /// Random assignments scored to warm-start the global best of each row.
    pub candidate_attempts: usize,
}

impl Default for PsoConfig {
    fn default() -> Self {
        PsoConfig {
            swarm_size: 40,
            iterations: 75,
            inertia_start: 0.9,
            inertia_end: 0.4,
            cognitive: 1.375,
            social: 1.375,
            seed: 0,
            candidate_attempts: DEFAULT_CANDIDATE_ATTEMPTS,
        }
    }
}

impl PsoConfig {
    pub fn with_seed(seed: u64) -> Self {
        PsoConfig {
            seed,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), GeneratorError> {
        if self.swarm_size == 0 {
            return Err(GeneratorError::InvalidConfig("swarm_size must be at least 1".into()));
        }
        if self.iterations == 0 {
            return Err(GeneratorError::InvalidConfig("iterations must be at least 1".into()));
        }
        let coefficients = [
            ("inertia_start", self.inertia_start),
            ("inertia_end", self.inertia_end),
            ("cognitive", self.cognitive),
            ("social", self.social),
        ];
        if let Some((name, _)) = coefficients.iter().find(|(_, v)| !v.is_finite()) {
            return Err(GeneratorError::InvalidConfig(format!("{name} must be finite")));
        }
        Ok(())
    }

    fn inertia(&self, iteration: usize) -> f64 {
        let span = self.iterations.saturating_sub(1).max(1) as f64;
        self.inertia_start + (self.inertia_end - self.inertia_start) * iteration as f64 / span
    }
}

/// Result of checking a suite against a strength.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CoverageCheck {
    pub complete: bool,
    pub missing: usize,
}

pub fn verify_coverage(
    suite: &TestSuite,
    model: &Model,
    t: usize,
) -> Result<CoverageCheck, GeneratorError> {
    suite.check_shape(model)?;
    let mut set = TupleSet::new(TupleSpace::new(model, t)?);
    set.cover_all(suite.rows());
    Ok(CoverageCheck {
        complete: set.is_complete(),
        missing: set.uncovered(),
    })
}

/// Greedy one-row-at-a-time generation with the default number of candidates.
pub fn generate_greedy(model: &Model, t: usize, seed: u64) -> Result<TestSuite, GeneratorError> {
    generate_greedy_with(model, t, seed, DEFAULT_CANDIDATE_ATTEMPTS)
}

pub fn generate_greedy_with(
    model: &Model,
    t: usize,
    seed: u64,
    candidate_attempts: usize,
) -> Result<TestSuite, GeneratorError> {
    model.check_strength(t)?;
    if candidate_attempts == 0 {
        return Err(GeneratorError::InvalidConfig(
            "candidate attempts must be at least 1".into(),
        ));
    }
    if t == model.k() {
        return Ok(TestSuite::exhaustive(model));
    }
    let shape = model.shape();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut uncovered = TupleSet::new(TupleSpace::new(model, t)?);
    let mut rows = Vec::new();
    let mut candidate = vec![0; shape.len()];
    while !uncovered.is_complete() {
        let mut best = (0, vec![0; shape.len()]);
        for attempt in 0..candidate_attempts {
            random_row(&mut rng, &shape, &mut candidate);
            let score = uncovered.count_new(&candidate);
            if attempt == 0 || score > best.0 || (score == best.0 && candidate < best.1) {
                best = (score, candidate.clone());
            }
        }
        let (score, mut row) = best;
        if score == 0 {
            // No candidate helps: force the first uncovered tuple into the best one.
            let rank = uncovered.next_uncovered(0).expect("set is incomplete");
            let tuple = uncovered.space().unrank(rank);
            for (&f, &l) in tuple.factors().iter().zip(tuple.levels()) {
                row[f] = l;
            }
        }
        uncovered.cover_row(&row);
        rows.push(Assignment::new(row));
    }
    finish(model, t, rows)
}

struct Particle {
    position: Vec<f64>,
    velocity: Vec<f64>,
    best: Vec<usize>,
    best_score: usize,
}

/// Particle-swarm generation.
pub fn generate_pso(model: &Model, t: usize, config: &PsoConfig) -> Result<TestSuite, GeneratorError> {
    model.check_strength(t)?;
    config.validate()?;
    if t == model.k() {
        return Ok(TestSuite::exhaustive(model));
    }
    let shape = model.shape();
    let top: Vec<f64> = shape.iter().map(|&n| (n - 1) as f64).collect();
    let vmax: Vec<f64> = shape.iter().map(|&n| n as f64).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut uncovered = TupleSet::new(TupleSpace::new(model, t)?);
    let mut rows = Vec::new();
    let mut scratch = vec![0; shape.len()];

    while !uncovered.is_complete() {
        // No row can cover more than one new tuple per still-open factor subset.
        let ceiling = uncovered.open_subsets();

        let mut global = vec![0; shape.len()];
        let mut global_score = 0;
        for attempt in 0..config.candidate_attempts {
            random_row(&mut rng, &shape, &mut scratch);
            let score = uncovered.count_new(&scratch);
            if attempt == 0 || score > global_score || (score == global_score && scratch < global) {
                global.clone_from(&scratch);
                global_score = score;
            }
        }

        let mut swarm = Vec::with_capacity(config.swarm_size);
        for _ in 0..config.swarm_size {
            random_row(&mut rng, &shape, &mut scratch);
            // Seeding each particle with an uncovered tuple guarantees progress.
            let start = rng.random_range(0..uncovered.total());
            let rank = uncovered.next_uncovered(start).expect("set is incomplete");
            let tuple = uncovered.space().unrank(rank);
            for (&f, &l) in tuple.factors().iter().zip(tuple.levels()) {
                scratch[f] = l;
            }
            let score = uncovered.count_new(&scratch);
            if score > global_score {
                global.clone_from(&scratch);
                global_score = score;
            }
            let velocity = vmax
                .iter()
                .map(|&v| if v > 1.0 { rng.random_range(-v / 2.0..v / 2.0) } else { 0.0 })
                .collect();
            swarm.push(Particle {
                position: scratch.iter().map(|&l| l as f64).collect(),
                velocity,
                best: scratch.clone(),
                best_score: score,
            });
        }

        let mut iteration = 0;
        while iteration < config.iterations && global_score < ceiling {
            let inertia = config.inertia(iteration);
            for particle in &mut swarm {
                for d in 0..shape.len() {
                    let x = particle.position[d];
                    let r1: f64 = rng.random();
                    let r2: f64 = rng.random();
                    let v = inertia * particle.velocity[d]
                        + config.cognitive * r1 * (particle.best[d] as f64 - x)
                        + config.social * r2 * (global[d] as f64 - x);
                    let v = v.clamp(-vmax[d], vmax[d]);
                    let x = (x + v).clamp(0.0, top[d]);
                    particle.velocity[d] = v;
                    particle.position[d] = x;
                    scratch[d] = ((x + 0.5).floor() as usize).min(shape[d] - 1);
                }
                let score = uncovered.count_new(&scratch);
                if score > particle.best_score {
                    particle.best.clone_from(&scratch);
                    particle.best_score = score;
                }
                if score > global_score {
                    global.clone_from(&scratch);
                    global_score = score;
                }
            }
            iteration += 1;
        }

        debug_assert!(global_score > 0);
        uncovered.cover_row(&global);
        rows.push(Assignment::new(global));
    }
    finish(model, t, rows)
}

fn random_row(rng: &mut ChaCha8Rng, shape: &[usize], out: &mut [usize]) {
    for (slot, &n) in out.iter_mut().zip(shape) {
        *slot = rng.random_range(0..n);
    }
}

fn finish(model: &Model, t: usize, rows: Vec<Assignment>) -> Result<TestSuite, GeneratorError> {
    let mut suite = TestSuite::new(model, rows, Some(t))?;
    suite.dedup();
    let check = verify_coverage(&suite, model, t)?;
    assert!(check.complete, "generator left {} tuples uncovered", check.missing);
    Ok(suite)
}
