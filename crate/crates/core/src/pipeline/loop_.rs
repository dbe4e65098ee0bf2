use alloc::vec::Vec;

use thiserror::Error;

use super::episode::{dt_control, EpisodeTrace, Feedback};
use super::{ssub, MAX_SSUB};
use crate::classifier::{self, Classifier, ClassifierError, ConfusionMatrix, TrainConfig};
use crate::dataset::{Dataset, Instance, Intention};
use crate::metrics::Metrics;
use crate::planner::{PlannerError, Policy, PomdpModel};
use crate::reasoner::{self, Fact, KbError, KnowledgeBase};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PipelineError {
    #[error("invalid pipeline configuration: {0}")]
    Config(&'static str),
    #[error(transparent)]
    Classifier(#[from] ClassifierError),
    #[error(transparent)]
    Kb(#[from] KbError),
    #[error(transparent)]
    Planner(#[from] PlannerError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    /// Stop once consecutive confusion matrices differ by at most this.
    pub epsilon: f64,
    /// Episodes between retraining rounds.
    pub batch_size: usize,
    pub max_trials: usize,
    pub step_cap: usize,
    pub folds: usize,
    pub train: TrainConfig,
    /// Store the environment's true label instead of the reported one.
    pub ground_truth_labels: bool,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            epsilon: 0.05,
            batch_size: 500,
            max_trials: 5000,
            step_cap: 20,
            folds: 5,
            train: TrainConfig::default(),
            ground_truth_labels: false,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<(), PipelineError> {
        if !(self.epsilon > 0.0) {
            return Err(PipelineError::Config("epsilon must be positive"));
        }
        if self.batch_size == 0 || self.max_trials == 0 || self.step_cap == 0 {
            return Err(PipelineError::Config("batch size and caps must be at least 1"));
        }
        if self.folds < 2 {
            return Err(PipelineError::Config("need at least two folds"));
        }
        self.train.validate()?;
        Ok(())
    }
}

/// A person met by the robot, as handed to the loop.
#[derive(Debug, Clone)]
pub struct SourcedTrial<F> {
    pub instance: Instance,
    pub facts: Vec<Fact>,
    /// True intention, used only for bookkeeping (and optional labels).
    pub truth: Intention,
    pub feedback: F,
}

/// Supplies people to interact with. `None` means the supply is exhausted.
pub trait TrialSource {
    type Feedback: Feedback;

    fn next_trial(&mut self, kb: &KnowledgeBase) -> Option<SourcedTrial<Self::Feedback>>;
}

/// Summary of one episode inside the loop.
#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeRecord {
    pub trial: usize,
    pub truth: Intention,
    pub reported: Intention,
    /// Label stored in the dataset.
    pub stored: Intention,
    pub trace: EpisodeTrace,
}

/// State after a retraining round (or the initial state, batch 0).
#[derive(Debug, Clone, PartialEq)]
pub struct BatchRecord {
    pub batch: usize,
    pub trials: usize,
    pub dataset_size: usize,
    pub confusion: ConfusionMatrix,
    /// SSUB between this and the previous confusion matrix.
    pub divergence: f64,
    /// Reported-vs-true metrics over the episodes of the batch just ended.
    pub metrics: Metrics,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    Converged,
    TrialCap,
    Exhausted,
}

impl StopReason {
    pub fn name(self) -> &'static str {
        match self {
            StopReason::Converged => "converged",
            StopReason::TrialCap => "trial_cap",
            StopReason::Exhausted => "exhausted",
        }
    }
}

#[derive(Debug, Clone)]
pub struct LoopOutcome {
    pub classifier: Classifier,
    pub confusion: ConfusionMatrix,
    pub kb: KnowledgeBase,
    pub dataset: Dataset,
    pub episodes: Vec<EpisodeRecord>,
    pub batches: Vec<BatchRecord>,
    pub stop: StopReason,
}

/// The self-supervised loop: label people through interaction, add their
/// trajectories to the dataset and retrain every `batch_size` episodes,
/// until the cross-validated confusion matrix stops moving.
///
/// With an empty starting dataset the classifier is random, the confusion
/// matrix uniform and the initial divergence is taken as [`MAX_SSUB`].
/// `observer` sees every batch record (including batch 0) together with the
/// classifier, confusion matrix and knowledge base then in force.
#[allow(clippy::too_many_arguments)]
pub fn lcorpp_loop<S, O>(
    omega0: Dataset,
    kb: &KnowledgeBase,
    cfg: &PipelineConfig,
    model: &PomdpModel,
    policy: &Policy,
    source: &mut S,
    mut observer: O,
) -> Result<LoopOutcome, PipelineError>
where
    S: TrialSource,
    O: FnMut(&BatchRecord, &Classifier, &ConfusionMatrix, &KnowledgeBase),
{
    cfg.validate()?;
    let mut dataset = omega0;
    let mut rho = classifier::train(&dataset, &cfg.train)?;
    let mut c = classifier::cross_validate(&dataset, &cfg.train, cfg.folds)?;
    let mut theta = reasoner::attach_classifier_evidence(kb, &c)?;
    let mut divergence = if dataset.is_empty() {
        MAX_SSUB
    } else {
        ssub(&ConfusionMatrix::uniform(), &c)
    };

    let mut batches = Vec::new();
    let first = BatchRecord {
        batch: 0,
        trials: 0,
        dataset_size: dataset.len(),
        confusion: c,
        divergence,
        metrics: Metrics::default(),
    };
    observer(&first, &rho, &c, &theta);
    batches.push(first);

    let mut episodes = Vec::new();
    let mut in_batch = 0;
    let mut batch_metrics = Metrics::default();
    let stop = loop {
        if divergence <= cfg.epsilon {
            break StopReason::Converged;
        }
        if episodes.len() >= cfg.max_trials {
            break StopReason::TrialCap;
        }
        let Some(mut trial) = source.next_trial(kb) else {
            break StopReason::Exhausted;
        };
        let (reported, trace) = dt_control(
            &rho,
            &trial.instance,
            model,
            policy,
            &theta,
            &trial.facts,
            &mut trial.feedback,
            cfg.step_cap,
        )?;
        let stored = if cfg.ground_truth_labels { trial.truth } else { reported };
        dataset.push(trial.instance, stored);
        batch_metrics.record(trial.truth, reported, trace.cost());
        episodes.push(EpisodeRecord {
            trial: episodes.len(),
            truth: trial.truth,
            reported,
            stored,
            trace,
        });
        in_batch += 1;

        if in_batch == cfg.batch_size {
            rho = classifier::train(&dataset, &cfg.train)?;
            let c_hat = classifier::cross_validate(&dataset, &cfg.train, cfg.folds)?;
            theta = reasoner::attach_classifier_evidence(kb, &c_hat)?;
            divergence = ssub(&c_hat, &c);
            c = c_hat;
            let record = BatchRecord {
                batch: batches.len(),
                trials: episodes.len(),
                dataset_size: dataset.len(),
                confusion: c,
                divergence,
                metrics: batch_metrics,
            };
            observer(&record, &rho, &c, &theta);
            batches.push(record);
            in_batch = 0;
            batch_metrics = Metrics::default();
        }
    };

    Ok(LoopOutcome {
        classifier: rho,
        confusion: c,
        kb: theta,
        dataset,
        episodes,
        batches,
        stop,
    })
}
