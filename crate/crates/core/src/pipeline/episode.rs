use alloc::vec::Vec;

use crate::classifier::Predictor;
use crate::dataset::{Instance, Intention};
use crate::planner::{belief_update, lift_prior, IntentionAction, Observation, PlannerError, Policy, PomdpModel};
use crate::reasoner::{self, Fact, KnowledgeBase};

/// Source of human reactions to the robot's actions.
pub trait Feedback {
    fn observe(&mut self, action: IntentionAction) -> Observation;
}

impl<F: Feedback + ?Sized> Feedback for &mut F {
    fn observe(&mut self, action: IntentionAction) -> Observation {
        (**self).observe(action)
    }
}

/// Feedback replayed from a fixed list, then `fallback` forever.
#[derive(Debug, Clone)]
pub struct Scripted {
    pub observations: Vec<Observation>,
    pub fallback: Observation,
    next: usize,
}

impl Scripted {
    pub fn new(observations: Vec<Observation>, fallback: Observation) -> Self {
        Self {
            observations,
            fallback,
            next: 0,
        }
    }
}

impl Feedback for Scripted {
    fn observe(&mut self, action: IntentionAction) -> Observation {
        if action.is_report() {
            return Observation::None;
        }
        let z = self.observations.get(self.next).copied().unwrap_or(self.fallback);
        self.next += 1;
        z
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Step {
    pub action: IntentionAction,
    pub observation: Observation,
    /// Cost of the action (0 for reports).
    pub cost: f64,
}

/// What happened during one decision episode.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct EpisodeTrace {
    pub steps: Vec<Step>,
    /// `[P(interested), P(not)]` handed to the planner.
    pub prior: [f64; 2],
    /// Classifier output, when one was consulted.
    pub classifier_label: Option<Intention>,
    /// The step cap forced a report.
    pub truncated: bool,
    /// The reasoner found the facts inconsistent and a uniform prior was used.
    pub reasoner_fallback: bool,
}

impl EpisodeTrace {
    pub fn cost(&self) -> f64 {
        self.steps.iter().map(|s| s.cost).sum()
    }

    pub fn interactions(&self) -> usize {
        self.steps.iter().filter(|s| !s.action.is_report()).count()
    }
}

/// Cost of an interaction action under `model` (negated reward in a
/// non-terminal state); reports cost nothing.
pub fn action_cost(model: &PomdpModel, action: IntentionAction) -> f64 {
    if action.is_report() {
        0.0
    } else {
        -model.r(0, action.index())
    }
}

/// Runs the policy from `prior` until it reports. If the policy still wants
/// to interact when only one of `step_cap` actions is left, the belief
/// argmax is reported instead and the trace marked truncated.
pub fn run_episode<F: Feedback + ?Sized>(
    model: &PomdpModel,
    policy: &Policy,
    prior: [f64; 2],
    feedback: &mut F,
    step_cap: usize,
) -> Result<(Intention, EpisodeTrace), PlannerError> {
    let mut belief: Vec<f64> = lift_prior(&prior)?.to_vec();
    let mut trace = EpisodeTrace {
        prior,
        ..EpisodeTrace::default()
    };
    let cap = step_cap.max(1);
    loop {
        let action = IntentionAction::from_index(policy.action(&belief)?).ok_or(PlannerError::Shape)?;
        if !action.is_report() && trace.steps.len() + 1 >= cap {
            break;
        }
        let observation = feedback.observe(action);
        trace.steps.push(Step {
            action,
            observation,
            cost: action_cost(model, action),
        });
        if let Some(label) = action.reported_label() {
            return Ok((label, trace));
        }
        belief = belief_update(model, &belief, action.index(), observation.index())?.0;
    }
    // forced report of the more likely intention
    let p_int = belief[0] + belief[2];
    let p_not = belief[1] + belief[3];
    let label = Intention::from_interested(p_int >= p_not);
    trace.truncated = true;
    trace.steps.push(Step {
        action: IntentionAction::report(label),
        observation: Observation::None,
        cost: 0.0,
    });
    Ok((label, trace))
}

/// Intention marginal from the reasoner, or uniform with a flag if the
/// facts are inconsistent with the knowledge.
pub fn reasoner_prior(kb: &KnowledgeBase, facts: &[Fact]) -> ([f64; 2], bool) {
    match reasoner::intention_marginal(kb, facts) {
        Ok(p) => (p, false),
        Err(err) => {
            log::warn!("reasoner fell back to a uniform prior: {err}");
            ([0.5, 0.5], true)
        }
    }
}

/// One decision episode: classify, reason with the classifier's output as
/// an extra fact, then interact under the planner until a report.
///
/// `kb` must already carry the classifier's confusion probabilities.
#[allow(clippy::too_many_arguments)]
pub fn dt_control<P: Predictor + ?Sized, F: Feedback + ?Sized>(
    classifier: &P,
    instance: &Instance,
    model: &PomdpModel,
    policy: &Policy,
    kb: &KnowledgeBase,
    facts: &[Fact],
    feedback: &mut F,
    step_cap: usize,
) -> Result<(Intention, EpisodeTrace), PlannerError> {
    let s_lrn = classifier.predict_label(instance);
    let mut all = facts.to_vec();
    let (prior, fallback) = match reasoner::classifier_fact(kb, s_lrn) {
        Ok(fact) => {
            all.push(fact);
            reasoner_prior(kb, &all)
        }
        Err(_) => ([0.5, 0.5], true),
    };
    let (label, mut trace) = run_episode(model, policy, prior, feedback, step_cap)?;
    trace.classifier_label = Some(s_lrn);
    trace.reasoner_fallback = fallback;
    Ok((label, trace))
}
