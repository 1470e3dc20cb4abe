//! Global-best particle swarm over a product of circles `[0, 2π)^D`.

use std::f64::consts::{PI, TAU};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::channel::wrap_phase;
use crate::error::{Error, Result};
use crate::par;

/// Stream id for the swarm's own random draws, distinct from the per-surface
/// streams used by [`super::random_phases`].
const SWARM_STREAM: u64 = 0x5053_4f00;

#[derive(Debug, Clone, PartialEq)]
pub struct PsoConfig {
    pub swarm_size: usize,
    pub iterations: usize,
    pub inertia: f64,
    pub cognitive: f64,
    pub social: f64,
    /// Per-dimension velocity clamp, radians.
    pub v_max: f64,
    pub seed: u64,
    /// Seed particle 0 with the beam-aligned profile and particle 1 with a random one.
    pub seed_baselines: bool,
}

impl Default for PsoConfig {
    fn default() -> Self {
        PsoConfig {
            swarm_size: 64,
            iterations: 300,
            inertia: 0.729,
            cognitive: 1.494_45,
            social: 1.494_45,
            v_max: PI / 2.0,
            seed: 0,
            seed_baselines: true,
        }
    }
}

impl PsoConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::Config(format!("PSO: {msg}")));
        if self.swarm_size < 2 {
            return bad("swarm_size must be at least 2");
        }
        if self.iterations < 1 {
            return bad("iterations must be at least 1");
        }
        if !(0.0..1.0).contains(&self.inertia) {
            return bad("inertia must lie in [0, 1)");
        }
        if !(self.cognitive > 0.0 && self.social > 0.0) {
            return bad("cognitive and social weights must be positive");
        }
        if !(self.v_max > 0.0 && self.v_max.is_finite()) {
            return bad("v_max must be positive");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SwarmOutcome {
    pub best_position: Vec<f64>,
    pub best_value: f64,
    /// Global best after initialization, then after each iteration.
    pub history: Vec<f64>,
    pub evaluations: usize,
}

/// Signed shortest angular difference `to − from`, in `[-π, π)`.
fn circular_diff(to: f64, from: f64) -> f64 {
    (to - from + PI).rem_euclid(TAU) - PI
}

/// Lowest value, ties broken by lowest index. NaN counts as +∞.
fn argmin(values: &[f64]) -> (usize, f64) {
    values
        .iter()
        .enumerate()
        .fold((0, f64::INFINITY), |(bi, bv), (i, &v)| {
            let v = if v.is_nan() { f64::INFINITY } else { v };
            if v < bv {
                (i, v)
            } else {
                (bi, bv)
            }
        })
}

/// Minimizes `f` over `[0, 2π)^dim`.
///
/// `initial` supplies the first particles verbatim (after wrapping); the rest start
/// uniformly at random. All random draws come from one sequential generator, so only
/// the fitness evaluations run in parallel and the outcome is independent of the
/// thread count. Positions wrap modulo 2π; attraction toward personal and global
/// bests uses the shortest way around the circle.
pub fn minimize<F>(dim: usize, initial: &[Vec<f64>], config: &PsoConfig, f: F) -> Result<SwarmOutcome>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    config.validate()?;
    if initial.len() > config.swarm_size {
        return Err(Error::Config("more seed particles than swarm members".into()));
    }
    if initial.iter().any(|p| p.len() != dim) {
        return Err(Error::Config("seed particle has wrong dimension".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(SWARM_STREAM);

    let n = config.swarm_size;
    let mut positions: Vec<Vec<f64>> = (0..n)
        .map(|i| match initial.get(i) {
            Some(p) => p.iter().copied().map(wrap_phase).collect(),
            None => (0..dim).map(|_| wrap_phase(rng.random::<f64>() * TAU)).collect(),
        })
        .collect();
    let mut velocities: Vec<Vec<f64>> = (0..n)
        .map(|_| {
            (0..dim)
                .map(|_| config.v_max * (2.0 * rng.random::<f64>() - 1.0))
                .collect()
        })
        .collect();

    let evaluate = |ps: &[Vec<f64>]| -> Vec<f64> {
        par::map_slice(ps, |p| {
            let v = f(p);
            if v.is_nan() {
                f64::INFINITY
            } else {
                v
            }
        })
    };

    let mut fitness = evaluate(&positions);
    let mut evaluations = n;
    let mut personal = positions.clone();
    let mut personal_value = fitness.clone();
    let (gi, gv) = argmin(&fitness);
    let mut global = positions[gi].clone();
    let mut global_value = gv;
    let mut history = Vec::with_capacity(config.iterations + 1);
    history.push(global_value);

    for _ in 0..config.iterations {
        for i in 0..n {
            let (x, v) = (&mut positions[i], &mut velocities[i]);
            for d in 0..dim {
                let r1: f64 = rng.random();
                let r2: f64 = rng.random();
                let pull = config.cognitive * r1 * circular_diff(personal[i][d], x[d])
                    + config.social * r2 * circular_diff(global[d], x[d]);
                v[d] = (config.inertia * v[d] + pull).clamp(-config.v_max, config.v_max);
                x[d] = wrap_phase(x[d] + v[d]);
            }
        }
        fitness = evaluate(&positions);
        evaluations += n;
        for i in 0..n {
            if fitness[i] < personal_value[i] {
                personal_value[i] = fitness[i];
                personal[i].clone_from(&positions[i]);
            }
        }
        let (gi, gv) = argmin(&fitness);
        if gv < global_value {
            global_value = gv;
            global.clone_from(&positions[gi]);
        }
        history.push(global_value);
    }

    if !global_value.is_finite() {
        return Err(Error::AllSingular);
    }
    Ok(SwarmOutcome {
        best_position: global,
        best_value: global_value,
        history,
        evaluations,
    })
}
