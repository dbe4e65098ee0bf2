//! Simulated people: contexts, trajectories and noisy feedback.

use alloc::vec::Vec;

use rand::Rng;
use thiserror::Error;

use crate::dataset::{
    featurize, sample_world, synthesize_trajectory, truncate, DatasetError, GenConfig, GroundTruth, Identity, Instance,
    Intention, Trajectory, WorldState,
};
use crate::pipeline::{Feedback, SourcedTrial, TrialSource};
use crate::planner::{IntentionAction, Observation};
use crate::reasoner::{self, Fact, KbError, KnowledgeBase, PrAtom};
use crate::{derive_seed, rng_from_seed, SimRng};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("noise {0} outside [0, 1]")]
    Noise(f64),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error(transparent)]
    Kb(#[from] KbError),
}

/// Draws feedback that agrees with the true intention with probability
/// `1 - noise`, whatever interaction action was taken. Reports get `none`.
pub fn observe<R: Rng + ?Sized>(noise: f64, intention: Intention, action: IntentionAction, rng: &mut R) -> Observation {
    if action.is_report() {
        return Observation::None;
    }
    let comply = rng.random::<f64>() >= noise;
    match (intention.is_interested(), comply) {
        (true, true) | (false, false) => Observation::Pos,
        _ => Observation::Neg,
    }
}

/// One simulated encounter.
#[derive(Debug, Clone, PartialEq)]
pub struct Trial {
    pub world: WorldState,
    pub trajectory: Trajectory,
}

impl Trial {
    /// Observable context: time and location. Identity and intention stay
    /// hidden.
    pub fn facts(&self, kb: &KnowledgeBase) -> Result<Vec<Fact>, KbError> {
        Ok(alloc::vec![
            kb.literal(reasoner::TIME, self.world.time.name())?,
            kb.literal(reasoner::LOCATION, self.world.location.name())?,
        ])
    }
}

/// Ground truth, feedback noise and trajectory generator, with a private
/// random source.
#[derive(Debug, Clone)]
pub struct Environment {
    truth: GroundTruth,
    noise: f64,
    gen: GenConfig,
    rng: SimRng,
}

impl Environment {
    pub fn new(truth: GroundTruth, noise: f64, gen: GenConfig, seed: u64) -> Result<Self, SimError> {
        if !(0.0..=1.0).contains(&noise) {
            return Err(SimError::Noise(noise));
        }
        gen.validate()?;
        Ok(Self {
            truth,
            noise,
            gen,
            rng: rng_from_seed(seed),
        })
    }

    pub fn truth(&self) -> &GroundTruth {
        &self.truth
    }

    pub fn noise(&self) -> f64 {
        self.noise
    }

    pub fn gen_config(&self) -> &GenConfig {
        &self.gen
    }

    /// Samples a person and their trajectory.
    pub fn new_trial(&mut self) -> Result<Trial, SimError> {
        let world = sample_world(&self.truth, &mut self.rng);
        let trajectory = synthesize_trajectory(world.intention, &mut self.rng, &self.gen)?;
        Ok(Trial { world, trajectory })
    }

    pub fn observe(&mut self, intention: Intention, action: IntentionAction) -> Observation {
        observe(self.noise, intention, action, &mut self.rng)
    }
}

/// Feedback from one simulated person.
#[derive(Debug, Clone)]
pub struct SimulatedHuman {
    pub intention: Intention,
    pub noise: f64,
    rng: SimRng,
}

impl SimulatedHuman {
    pub fn new(intention: Intention, noise: f64, seed: u64) -> Self {
        Self {
            intention,
            noise,
            rng: rng_from_seed(seed),
        }
    }
}

impl Feedback for SimulatedHuman {
    fn observe(&mut self, action: IntentionAction) -> Observation {
        observe(self.noise, self.intention, action, &mut self.rng)
    }
}

/// Everything needed to stage trial `index` of a seeded run. Trials with
/// the same `(seed, index)` are identical whatever strategy consumes them.
#[derive(Debug, Clone)]
pub struct StagedTrial {
    pub trial: Trial,
    /// Trajectory as seen by the classifier (possibly truncated).
    pub instance: Instance,
    pub human: SimulatedHuman,
}

/// Deterministic per-index trial generator.
#[derive(Debug, Clone)]
pub struct TrialFactory {
    pub truth: GroundTruth,
    pub gen: GenConfig,
    pub noise: f64,
    /// Fraction of each trajectory shown to the classifier.
    pub fraction: f64,
    pub seed: u64,
}

impl TrialFactory {
    pub fn stage(&self, index: u64) -> Result<StagedTrial, SimError> {
        let trial_seed = derive_seed(self.seed, index);
        let mut env = Environment::new(self.truth.clone(), self.noise, self.gen.clone(), trial_seed)?;
        let trial = env.new_trial()?;
        let shown = truncate(&trial.trajectory, self.fraction)?;
        let instance = featurize(&shown, &self.gen.arena)?;
        let human = SimulatedHuman::new(trial.world.intention, self.noise, derive_seed(trial_seed, 1));
        Ok(StagedTrial { trial, instance, human })
    }
}

/// Endless [`TrialSource`] over a [`TrialFactory`].
#[derive(Debug, Clone)]
pub struct FactorySource {
    pub factory: TrialFactory,
    pub next_index: u64,
}

impl FactorySource {
    pub fn new(factory: TrialFactory) -> Self {
        Self { factory, next_index: 0 }
    }
}

impl TrialSource for FactorySource {
    type Feedback = SimulatedHuman;

    fn next_trial(&mut self, kb: &KnowledgeBase) -> Option<SourcedTrial<SimulatedHuman>> {
        let staged = self.factory.stage(self.next_index).ok()?;
        self.next_index += 1;
        let facts = staged.trial.facts(kb).ok()?;
        Some(SourcedTrial {
            instance: staged.instance,
            facts,
            truth: staged.trial.world.intention,
            feedback: staged.human,
        })
    }
}

/// How faithful a knowledge base is to the ground truth.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum KbAccuracy {
    High,
    Medium,
    Low,
}

impl KbAccuracy {
    pub const ALL: [KbAccuracy; 3] = [KbAccuracy::High, KbAccuracy::Medium, KbAccuracy::Low];

    pub fn name(self) -> &'static str {
        match self {
            KbAccuracy::High => "high",
            KbAccuracy::Medium => "medium",
            KbAccuracy::Low => "low",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        Self::ALL.iter().copied().find(|k| k.name().eq_ignore_ascii_case(s))
    }
}

/// Derives a knowledge base of the given accuracy from the ground-truth KB.
///
/// Medium drops every identity-conditioned row for time, location and
/// intention (those variables become uniform). Low swaps the intention
/// rows of visitors and professors.
pub fn kb_variant(truth: &KnowledgeBase, level: KbAccuracy) -> Result<KnowledgeBase, SimError> {
    let identity = truth
        .var_index(reasoner::IDENTITY)
        .ok_or_else(|| KbError::new(reasoner::KbErrorKind::UnknownVariable(reasoner::IDENTITY.into())))?;
    let heads: Vec<usize> = [reasoner::TIME, reasoner::LOCATION, reasoner::INTENTION]
        .iter()
        .filter_map(|v| truth.var_index(v))
        .collect();
    let intention = truth.var_index(reasoner::INTENTION);
    match level {
        KbAccuracy::High => Ok(truth.clone()),
        KbAccuracy::Medium => Ok(truth.map_atoms(|a| {
            let drop = heads.contains(&a.head.var) && a.condition.iter().any(|l| l.var == identity);
            (!drop).then(|| a.clone())
        })?),
        KbAccuracy::Low => {
            let visitor = truth.literal(reasoner::IDENTITY, Identity::Visitor.name())?;
            let professor = truth.literal(reasoner::IDENTITY, Identity::Professor.name())?;
            Ok(truth.map_atoms(|a| {
                if Some(a.head.var) != intention {
                    return Some(a.clone());
                }
                let condition = a
                    .condition
                    .iter()
                    .map(|l| match *l {
                        l if l == visitor => professor,
                        l if l == professor => visitor,
                        l => l,
                    })
                    .collect();
                Some(PrAtom::new(a.head, condition, a.probability))
            })?)
        }
    }
}
