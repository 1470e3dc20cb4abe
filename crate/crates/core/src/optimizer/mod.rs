//! RIS phase profiles: random and beam-aligned baselines, and PSO minimization of
//! the error bounds.

mod swarm;

pub use swarm::{minimize, PsoConfig, SwarmOutcome};

use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::channel::{steer_upa, wrap_phase, PhaseProfile};
use crate::error::Result;
use crate::fim::{BoundsEvaluator, FimMode, PositionBounds};
use crate::geometry::GeometryOut;
use crate::scenario::Scenario;

/// Independent uniform phases on `[0, 2π)`. Surface `k` draws from stream `k` of a
/// ChaCha generator keyed by `seed`, element `i` from position `i` of that stream,
/// so a surface's phases do not depend on how many other surfaces are present.
pub fn random_phases(scenario: &Scenario, seed: u64) -> PhaseProfile {
    let theta = scenario
        .ris
        .iter()
        .enumerate()
        .map(|(k, panel)| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(k as u64);
            (0..panel.elements())
                .map(|_| wrap_phase(rng.random::<f64>() * TAU))
                .collect()
        })
        .collect();
    PhaseProfile { delta: 1.0, theta }
}

/// Phases matching each surface's incident response to its outgoing one,
/// `θ_i = arg[α_OUT]_i − arg[α_IN]_i`, so the cascade `α_OUT^H Θ α_IN` has
/// magnitude `δ L²`.
pub fn beam_aligned_phases(scenario: &Scenario, geometry: &GeometryOut) -> PhaseProfile {
    let (d, lambda) = (scenario.radio.spacing(), scenario.radio.wavelength());
    let theta = scenario
        .ris
        .iter()
        .enumerate()
        .map(|(k, panel)| {
            let a_in = steer_upa(geometry.phi_in_a[k], geometry.phi_in_e[k], panel.side, d, lambda);
            let a_out =
                steer_upa(geometry.phi_out_a[k], geometry.phi_out_e[k], panel.side, d, lambda);
            a_in.iter()
                .zip(a_out.iter())
                .map(|(i, o)| wrap_phase(o.arg() - i.arg()))
                .collect()
        })
        .collect();
    PhaseProfile { delta: 1.0, theta }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Objective {
    /// `w_p · PEB + w_r · REB`; the plain sum is `(1, 1)`.
    PebPlusReb { peb_weight: f64, reb_weight: f64 },
    Peb,
    Reb,
}

impl Default for Objective {
    fn default() -> Self {
        Objective::PebPlusReb {
            peb_weight: 1.0,
            reb_weight: 1.0,
        }
    }
}

impl Objective {
    pub fn value(&self, b: &PositionBounds) -> f64 {
        match *self {
            Objective::PebPlusReb {
                peb_weight,
                reb_weight,
            } => peb_weight * b.peb + reb_weight * b.reb,
            Objective::Peb => b.peb,
            Objective::Reb => b.reb,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PsoRun {
    pub best_phases: PhaseProfile,
    pub best_objective: f64,
    pub history: Vec<f64>,
    pub evaluations: usize,
}

/// Objective value of one profile; a singular FIM scores +∞.
pub fn score(evaluator: &BoundsEvaluator, objective: Objective, phases: &PhaseProfile) -> f64 {
    evaluator
        .bounds(phases)
        .map(|b| objective.value(&b))
        .unwrap_or(f64::INFINITY)
}

/// Jointly optimizes all `Σ L_k²` phases with a global-best PSO.
pub fn pso_optimize(
    scenario: &Scenario,
    objective: Objective,
    mode: FimMode,
    config: &PsoConfig,
) -> Result<PsoRun> {
    let evaluator = BoundsEvaluator::new(scenario, mode)?;
    pso_with_evaluator(scenario, &evaluator, objective, config)
}

pub fn pso_with_evaluator(
    scenario: &Scenario,
    evaluator: &BoundsEvaluator,
    objective: Objective,
    config: &PsoConfig,
) -> Result<PsoRun> {
    let dim = scenario.num_phases();
    let initial = if config.seed_baselines {
        vec![
            beam_aligned_phases(scenario, &evaluator.geometry).flatten(),
            random_phases(scenario, config.seed).flatten(),
        ]
    } else {
        Vec::new()
    };
    let outcome = minimize(dim, &initial, config, |flat| {
        match PhaseProfile::from_flat(scenario, 1.0, flat) {
            Ok(p) => score(evaluator, objective, &p),
            Err(_) => f64::INFINITY,
        }
    })?;
    Ok(PsoRun {
        best_phases: PhaseProfile::from_flat(scenario, 1.0, &outcome.best_position)?,
        best_objective: outcome.best_value,
        history: outcome.history,
        evaluations: outcome.evaluations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::compute_geometry;

    #[test]
    fn random_phases_are_reproducible_and_in_range() {
        let s = Scenario::reference();
        let a = random_phases(&s, 1);
        assert_eq!(a, random_phases(&s, 1));
        assert!(a.flatten().iter().all(|&t| (0.0..TAU).contains(&t)));
        assert_ne!(a, random_phases(&s, 2));
    }

    #[test]
    fn random_phases_ignore_later_surfaces() {
        let s = Scenario::reference();
        let full = random_phases(&s, 5);
        let two = random_phases(&s.with_active_ris(2), 5);
        assert_eq!(full.theta[..2], two.theta[..]);
    }

    #[test]
    fn aligned_with_equal_angles_is_identity() {
        let mut s = Scenario::reference().with_active_ris(1);
        let mut g = compute_geometry(&s).unwrap();
        g.phi_in_a[0] = 0.3;
        g.phi_in_e[0] = 1.1;
        g.phi_out_a[0] = 0.3;
        g.phi_out_e[0] = 1.1;
        s.ris[0].side = 5;
        let p = beam_aligned_phases(&s, &g);
        assert!(p.flatten().iter().all(|&t| t.min(TAU - t) < 1e-12));
    }

    #[test]
    fn objective_variants() {
        let b = PositionBounds {
            j: nalgebra::Matrix3::identity(),
            peb: 2.0,
            reb: 3.0,
        };
        assert_eq!(Objective::default().value(&b), 5.0);
        assert_eq!(Objective::Peb.value(&b), 2.0);
        assert_eq!(Objective::Reb.value(&b), 3.0);
        let w = Objective::PebPlusReb {
            peb_weight: 2.0,
            reb_weight: 0.5,
        };
        assert_eq!(w.value(&b), 5.5);
    }
}
