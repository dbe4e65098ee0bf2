use core::fmt;
use core::str::FromStr;

use thiserror::Error;

use super::episode::{dt_control, reasoner_prior, run_episode, EpisodeTrace};
use crate::classifier::{Classifier, ConfusionMatrix, Predictor};
use crate::dataset::Intention;
use crate::metrics::Metrics;
use crate::planner::{PlannerError, Policy, PomdpModel};
use crate::reasoner::{self, KbError, KnowledgeBase};
use crate::simworld::{SimError, TrialFactory};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StrategyError {
    #[error("unknown strategy `{0}`")]
    Unknown(alloc::string::String),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Kb(#[from] KbError),
    #[error(transparent)]
    Planner(#[from] PlannerError),
}

/// Decision strategies compared in the experiments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Strategy {
    /// Classifier only.
    L,
    /// Reasoner with context facts only.
    R,
    /// Planner from a uniform prior.
    P,
    /// Reasoner with context facts and the classifier's output.
    LR,
    /// Planner from the context-only reasoner prior.
    RP,
    /// Classifier, reasoner and planner.
    Lcorpp,
}

impl Strategy {
    pub const ALL: [Strategy; 6] = [Strategy::L, Strategy::R, Strategy::P, Strategy::LR, Strategy::RP, Strategy::Lcorpp];

    pub fn name(self) -> &'static str {
        match self {
            Strategy::L => "L",
            Strategy::R => "R",
            Strategy::P => "P",
            Strategy::LR => "L+R",
            Strategy::RP => "R+P",
            Strategy::Lcorpp => "LCORPP",
        }
    }

    pub fn plans(self) -> bool {
        matches!(self, Strategy::P | Strategy::RP | Strategy::Lcorpp)
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Strategy {
    type Err = StrategyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Strategy::ALL
            .iter()
            .copied()
            .find(|x| x.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| StrategyError::Unknown(s.into()))
    }
}

/// Everything a strategy may consult during a run.
#[derive(Debug, Clone)]
pub struct Scenario {
    /// Simulated world (ground truth, generator, noise, truncation).
    pub trials: TrialFactory,
    /// The robot's contextual knowledge, without classifier evidence.
    pub kb: KnowledgeBase,
    pub classifier: Classifier,
    pub confusion: ConfusionMatrix,
    pub model: PomdpModel,
    pub policy: Policy,
    pub step_cap: usize,
}

/// Result of one trial under one strategy.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialOutcome {
    pub truth: Intention,
    pub reported: Intention,
    pub trace: EpisodeTrace,
}

fn argmax(p: [f64; 2]) -> Intention {
    Intention::from_interested(p[0] >= p[1])
}

/// Runs trial `index` of the scenario under `strategy`. `kb_evidence` is
/// `scenario.kb` with the confusion matrix attached.
pub fn run_trial(
    strategy: Strategy,
    scenario: &Scenario,
    kb_evidence: &KnowledgeBase,
    index: u64,
) -> Result<TrialOutcome, StrategyError> {
    let staged = scenario.trials.stage(index)?;
    let truth = staged.trial.world.intention;
    let facts = staged.trial.facts(&scenario.kb)?;
    let mut human = staged.human;
    let s = scenario;
    let (reported, trace) = match strategy {
        Strategy::L => {
            let label = s.classifier.predict_label(&staged.instance);
            let trace = EpisodeTrace {
                classifier_label: Some(label),
                ..EpisodeTrace::default()
            };
            (label, trace)
        }
        Strategy::R => {
            let (prior, fallback) = reasoner_prior(&s.kb, &facts);
            let trace = EpisodeTrace {
                prior,
                reasoner_fallback: fallback,
                ..EpisodeTrace::default()
            };
            (argmax(prior), trace)
        }
        Strategy::LR => {
            let label = s.classifier.predict_label(&staged.instance);
            let mut all = facts.clone();
            all.push(reasoner::classifier_fact(kb_evidence, label)?);
            let (prior, fallback) = reasoner_prior(kb_evidence, &all);
            let trace = EpisodeTrace {
                prior,
                classifier_label: Some(label),
                reasoner_fallback: fallback,
                ..EpisodeTrace::default()
            };
            (argmax(prior), trace)
        }
        Strategy::P => run_episode(&s.model, &s.policy, [0.5, 0.5], &mut human, s.step_cap)?,
        Strategy::RP => {
            let (prior, fallback) = reasoner_prior(&s.kb, &facts);
            let (label, mut trace) = run_episode(&s.model, &s.policy, prior, &mut human, s.step_cap)?;
            trace.reasoner_fallback = fallback;
            (label, trace)
        }
        Strategy::Lcorpp => dt_control(
            &s.classifier,
            &staged.instance,
            &s.model,
            &s.policy,
            kb_evidence,
            &facts,
            &mut human,
            s.step_cap,
        )?,
    };
    Ok(TrialOutcome { truth, reported, trace })
}

/// Runs trials `0..n_trials` under `strategy`. The scenario's trial seed
/// fixes the people met, so every strategy faces the same trials and the
/// same feedback noise.
pub fn run_strategy(strategy: Strategy, scenario: &Scenario, n_trials: u64) -> Result<Metrics, StrategyError> {
    let kb_evidence = reasoner::attach_classifier_evidence(&scenario.kb, &scenario.confusion)?;
    let mut metrics = Metrics::default();
    for i in 0..n_trials {
        let out = run_trial(strategy, scenario, &kb_evidence, i)?;
        metrics.record(out.truth, out.reported, out.trace.cost());
    }
    Ok(metrics)
}
