//! POMDP model of the interaction task, belief tracking and a point-based
//! solver.

mod belief;
mod model;
mod solver;

use alloc::string::String;
use alloc::vec::Vec;

use thiserror::Error;

pub use belief::{belief_update, check_belief, lift_prior, BELIEF_TOLERANCE};
pub use model::{
    build_intention_pomdp, IntentionAction, IntentionPomdpConfig, Observation, PomdpModel, INTENTION_STATES,
    ROW_TOLERANCE, TERM,
};
pub use solver::{blind_vectors, reachable_beliefs, solve, solve_horizon, AlphaVector, Policy, Solution, SolverConfig};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PlannerError {
    #[error("invalid model: {0}")]
    Invalid(String),
    #[error("table or belief has the wrong shape")]
    Shape,
    #[error("belief is not a distribution (sums to {0})")]
    NotNormalized(f64),
    #[error("observation `{observation}` is impossible after `{action}`")]
    ImpossibleObservation { action: String, observation: String },
    #[error("policy has no alpha-vectors")]
    EmptyPolicy,
}

/// Lifted priors `[p, 1-p, 0, 0, 0]` for `p` on an even grid of `points`
/// values in [0, 1].
pub fn intention_priors(points: usize) -> Vec<Vec<f64>> {
    let points = points.max(2);
    (0..points)
        .map(|i| {
            let p = i as f64 / (points - 1) as f64;
            alloc::vec![p, 1.0 - p, 0.0, 0.0, 0.0]
        })
        .collect()
}

/// Solver settings used for the intention model.
pub fn intention_solver_config() -> SolverConfig {
    SolverConfig {
        priors: intention_priors(21),
        ..SolverConfig::default()
    }
}
