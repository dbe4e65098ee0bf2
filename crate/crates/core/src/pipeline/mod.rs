//! Ties the learner, reasoner and planner together: single decision
//! episodes, baseline strategies and the self-supervised training loop.

mod episode;
mod loop_;
mod strategy;

pub use episode::{
    action_cost, dt_control, reasoner_prior, run_episode, EpisodeTrace, Feedback, Scripted, Step,
};
pub use loop_::{
    lcorpp_loop, BatchRecord, EpisodeRecord, LoopOutcome, PipelineConfig, PipelineError, SourcedTrial, StopReason,
    TrialSource,
};
pub use strategy::{run_strategy, run_trial, Scenario, Strategy, StrategyError, TrialOutcome};

use crate::classifier::ConfusionMatrix;

/// Sum of absolute element-wise differences.
pub fn ssub(a: &ConfusionMatrix, b: &ConfusionMatrix) -> f64 {
    let (a, b) = (a.rows(), b.rows());
    a.iter()
        .flatten()
        .zip(b.iter().flatten())
        .map(|(x, y)| (x - y).abs())
        .sum()
}

/// Largest possible [`ssub`] between two row-normalized 2×2 matrices.
pub const MAX_SSUB: f64 = 4.0;
