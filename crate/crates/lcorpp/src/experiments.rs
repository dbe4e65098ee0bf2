//! The four experiment suites: strategy baselines, knowledge accuracy,
//! partial trajectories and self-supervised data augmentation.

use std::fmt;

use lcorpp_core::classifier::{
    self, AdamConfig, Classifier, ClassifierError, ConfusionCounts, ConfusionMatrix, Predictor, TrainConfig,
};
use lcorpp_core::dataset::{generate_dataset, generate_dataset_with, Dataset, DatasetError, GenConfig, GroundTruth};
use lcorpp_core::metrics::{f1_score, Metrics};
use lcorpp_core::pipeline::{
    lcorpp_loop, run_strategy, LoopOutcome, PipelineConfig, PipelineError, Scenario, Strategy, StrategyError,
};
use lcorpp_core::planner::{solve, intention_solver_config, PlannerError, Policy, PomdpModel, INTENTION_STATES};
use lcorpp_core::reasoner::KnowledgeBase;
use lcorpp_core::simworld::{kb_variant, FactorySource, KbAccuracy, SimError, TrialFactory};
use lcorpp_core::{derive_seed, rng_from_seed};
use thiserror::Error;

pub const CSV_HEADER: &str = "strategy,condition,f1,mean_cost,n_trials,seed";

// Seed streams derived from the experiment seed.
const STREAM_TRAIN_DATA: u64 = 1;
const STREAM_TRAIN_INIT: u64 = 2;
const STREAM_TRIALS: u64 = 3;
const STREAM_PROBE: u64 = 4;
const STREAM_AUGMENT_INIT: u64 = 5;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExpError {
    #[error("invalid experiment configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error(transparent)]
    Classifier(#[from] ClassifierError),
    #[error(transparent)]
    Planner(#[from] PlannerError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Strategy(#[from] StrategyError),
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
}

impl ExpError {
    /// True when the failure stems from bad user input rather than a
    /// numerical or consistency problem.
    pub fn is_input(&self) -> bool {
        matches!(
            self,
            ExpError::Config(_)
                | ExpError::Dataset(DatasetError::Config(_) | DatasetError::NotGroundTruth(_) | DatasetError::Fraction(_))
                | ExpError::Classifier(ClassifierError::Config(_) | ClassifierError::Shape)
                | ExpError::Sim(SimError::Noise(_))
                | ExpError::Pipeline(PipelineError::Config(_))
                | ExpError::Strategy(StrategyError::Unknown(_))
        )
    }
}

/// Training settings used at desk scale: a smaller network and a higher
/// learning rate than the defaults, trained on a balanced set.
pub fn desk_train_config() -> TrainConfig {
    TrainConfig {
        epochs: 60,
        batch_size: 32,
        dropout: 0.2,
        hidden: 16,
        adam: AdamConfig {
            learning_rate: 0.005,
            ..AdamConfig::default()
        },
        seed: 0,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExpConfig {
    pub seed: u64,
    pub trials: u64,
    /// Probability that the simulated human's feedback is flipped.
    pub noise: f64,
    pub gen: GenConfig,
    /// Training settings; the seed field is replaced by one derived from
    /// `seed`.
    pub train: TrainConfig,
    pub train_count: usize,
    /// Fraction of interested instances in the training set.
    pub train_rate: f64,
    pub folds: usize,
    pub step_cap: usize,
}

impl Default for ExpConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            trials: 5000,
            noise: 0.3,
            gen: GenConfig::default(),
            train: desk_train_config(),
            train_count: 600,
            train_rate: 0.5,
            folds: 5,
            step_cap: 20,
        }
    }
}

impl ExpConfig {
    pub fn validate(&self) -> Result<(), ExpError> {
        if self.trials == 0 {
            return Err(ExpError::Config("need at least one trial".into()));
        }
        if !(0.0..=1.0).contains(&self.noise) {
            return Err(ExpError::Config(format!("noise {} outside [0, 1]", self.noise)));
        }
        if !(0.0..=1.0).contains(&self.train_rate) {
            return Err(ExpError::Config(format!("positive rate {} outside [0, 1]", self.train_rate)));
        }
        if self.step_cap == 0 || self.folds < 2 {
            return Err(ExpError::Config("step cap must be positive and folds at least 2".into()));
        }
        self.gen.validate()?;
        self.train.validate()?;
        Ok(())
    }

    fn trial_factory(&self, truth: &GroundTruth, fraction: f64) -> TrialFactory {
        TrialFactory {
            truth: truth.clone(),
            gen: self.gen.clone(),
            noise: self.noise,
            fraction,
            seed: derive_seed(self.seed, STREAM_TRIALS),
        }
    }
}

/// A trained classifier and its cross-validated confusion matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Learner {
    pub classifier: Classifier,
    pub confusion: ConfusionMatrix,
    /// Fraction of each trajectory the classifier was trained on.
    pub fraction: f64,
}

/// Trains a learner on synthetic trajectories cut to `fraction`.
pub fn train_learner(cfg: &ExpConfig, fraction: f64) -> Result<Learner, ExpError> {
    cfg.validate()?;
    let gen = GenConfig {
        positive_rate: cfg.train_rate,
        ..cfg.gen.clone()
    };
    let mut rng = rng_from_seed(derive_seed(cfg.seed, STREAM_TRAIN_DATA));
    let data = generate_dataset_with(cfg.train_count, &gen, fraction, &mut rng)?;
    let train = TrainConfig {
        seed: derive_seed(cfg.seed, STREAM_TRAIN_INIT),
        ..cfg.train.clone()
    };
    log::info!("training on {} instances (fraction {fraction})", data.len());
    let classifier = classifier::train(&data, &train)?;
    let confusion = classifier::cross_validate(&data, &train, cfg.folds)?;
    log::info!("cross-validated confusion {confusion}");
    Ok(Learner {
        classifier,
        confusion,
        fraction,
    })
}

/// The world and the robot's planning model.
#[derive(Debug, Clone)]
pub struct Bench {
    /// Knowledge base the world is drawn from.
    pub kb: KnowledgeBase,
    pub truth: GroundTruth,
    pub model: PomdpModel,
    pub policy: Policy,
}

impl Bench {
    pub fn new(kb: KnowledgeBase, model: PomdpModel) -> Result<Self, ExpError> {
        if model.n_states() != INTENTION_STATES.len() || model.n_actions() != 5 || model.n_observations() != 3 {
            return Err(ExpError::Config(
                "planner model must have 5 states, 5 actions and 3 observations".into(),
            ));
        }
        model.validate()?;
        let truth = GroundTruth::from_kb(&kb)?;
        let sol = solve(&model, &intention_solver_config())?;
        if !sol.converged {
            log::warn!("policy did not converge (residual {})", sol.residual);
        }
        Ok(Self {
            kb,
            truth,
            model,
            policy: sol.policy,
        })
    }

    fn scenario(&self, cfg: &ExpConfig, learner: &Learner, level: KbAccuracy) -> Result<Scenario, ExpError> {
        Ok(Scenario {
            trials: cfg.trial_factory(&self.truth, learner.fraction),
            kb: kb_variant(&self.kb, level)?,
            classifier: learner.classifier.clone(),
            confusion: learner.confusion,
            model: self.model.clone(),
            policy: self.policy.clone(),
            step_cap: cfg.step_cap,
        })
    }
}

/// One CSV row.
#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub strategy: String,
    pub condition: String,
    pub f1: f64,
    pub mean_cost: f64,
    pub n_trials: u64,
    pub seed: u64,
}

impl Row {
    fn from_metrics(strategy: Strategy, condition: &str, m: &Metrics, seed: u64) -> Self {
        Self {
            strategy: strategy.name().into(),
            condition: condition.into(),
            f1: m.f1(),
            mean_cost: m.mean_cost(),
            n_trials: m.trials(),
            seed,
        }
    }
}

impl fmt::Display for Row {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{},{},{:.6},{:.6},{},{}",
            self.strategy, self.condition, self.f1, self.mean_cost, self.n_trials, self.seed
        )
    }
}

pub fn to_csv(rows: &[Row]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&r.to_string());
        out.push('\n');
    }
    out
}

/// Finds the row for `strategy` under `condition`.
pub fn find<'a>(rows: &'a [Row], strategy: Strategy, condition: &str) -> Option<&'a Row> {
    rows.iter().find(|r| r.strategy == strategy.name() && r.condition == condition)
}

fn run(
    strategy: Strategy,
    scenario: &Scenario,
    condition: &str,
    cfg: &ExpConfig,
) -> Result<Row, ExpError> {
    let m = run_strategy(strategy, scenario, cfg.trials)?;
    log::info!("{strategy} [{condition}]: f1 {:.4}, cost {:.3}", m.f1(), m.mean_cost());
    Ok(Row::from_metrics(strategy, condition, &m, cfg.seed))
}

/// All six strategies on the accurate knowledge base.
pub fn baselines(cfg: &ExpConfig, bench: &Bench, learner: &Learner) -> Result<Vec<Row>, ExpError> {
    cfg.validate()?;
    let scenario = bench.scenario(cfg, learner, KbAccuracy::High)?;
    Strategy::ALL
        .iter()
        .map(|s| run(*s, &scenario, KbAccuracy::High.name(), cfg))
        .collect()
}

pub const KNOWLEDGE_STRATEGIES: [Strategy; 4] = [Strategy::R, Strategy::LR, Strategy::RP, Strategy::Lcorpp];

/// Reasoning strategies under knowledge bases of each accuracy level.
pub fn knowledge(cfg: &ExpConfig, bench: &Bench, learner: &Learner) -> Result<Vec<Row>, ExpError> {
    cfg.validate()?;
    let mut rows = Vec::new();
    for level in KbAccuracy::ALL {
        let scenario = bench.scenario(cfg, learner, level)?;
        for s in KNOWLEDGE_STRATEGIES {
            rows.push(run(s, &scenario, level.name(), cfg)?);
        }
    }
    Ok(rows)
}

pub const PARTIAL_STRATEGIES: [Strategy; 3] = [Strategy::L, Strategy::LR, Strategy::Lcorpp];

/// Condition label for a trajectory fraction.
pub fn fraction_label(fraction: f64) -> String {
    format!("{fraction:.2}")
}

/// Learning strategies with classifiers that see part of each trajectory.
/// Each learner is trained and evaluated at its own fraction.
pub fn partial(cfg: &ExpConfig, bench: &Bench, learners: &[Learner]) -> Result<Vec<Row>, ExpError> {
    cfg.validate()?;
    let mut rows = Vec::new();
    for learner in learners {
        let scenario = bench.scenario(cfg, learner, KbAccuracy::High)?;
        let label = fraction_label(learner.fraction);
        for s in PARTIAL_STRATEGIES {
            rows.push(run(s, &scenario, &label, cfg)?);
        }
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq)]
pub struct AugmentConfig {
    /// Episodes per batch.
    pub batch: usize,
    pub batches: usize,
    /// Convergence threshold on consecutive confusion matrices.
    pub epsilon: f64,
    /// Size of the balanced probe set.
    pub probe: usize,
    pub train: TrainConfig,
    pub folds: usize,
}

impl Default for AugmentConfig {
    fn default() -> Self {
        Self {
            batch: 500,
            batches: 4,
            epsilon: 0.05,
            probe: 400,
            train: TrainConfig {
                epochs: 30,
                ..desk_train_config()
            },
            folds: 3,
        }
    }
}

#[derive(Debug, Clone)]
pub struct AugmentOutcome {
    pub rows: Vec<Row>,
    /// Probe F1 of the classifier after each retraining round, starting with
    /// the untrained one.
    pub probe_f1: Vec<f64>,
    pub run: LoopOutcome,
}

/// F1 of `clf` on a labeled set.
pub fn probe_f1(clf: &impl Predictor, probe: &Dataset) -> Result<f64, ExpError> {
    f1_score(probe.items.iter().map(|(x, y)| (*y, clf.predict_label(x))))
        .map_err(|_| ExpError::Config("probe set is empty".into()))
}

/// Self-supervised augmentation from an empty dataset. Row `k` scores, on a
/// balanced probe set, the classifier the robot used during batch `k`; the
/// first batch therefore runs on an untrained network. If the loop converges
/// early, later batches keep the final classifier.
pub fn augment(cfg: &ExpConfig, aug: &AugmentConfig, bench: &Bench) -> Result<AugmentOutcome, ExpError> {
    cfg.validate()?;
    if aug.batch == 0 || aug.batches == 0 || aug.probe == 0 {
        return Err(ExpError::Config("batch size, batch count and probe size must be positive".into()));
    }
    let probe_gen = GenConfig {
        positive_rate: 0.5,
        ..cfg.gen.clone()
    };
    let probe = generate_dataset(aug.probe, &probe_gen, &mut rng_from_seed(derive_seed(cfg.seed, STREAM_PROBE)))?;
    let pcfg = PipelineConfig {
        epsilon: aug.epsilon,
        batch_size: aug.batch,
        max_trials: aug.batch * aug.batches,
        step_cap: cfg.step_cap,
        folds: aug.folds,
        train: TrainConfig {
            seed: derive_seed(cfg.seed, STREAM_AUGMENT_INIT),
            ..aug.train.clone()
        },
        ground_truth_labels: false,
    };
    let kb = kb_variant(&bench.kb, KbAccuracy::High)?;
    let mut source = FactorySource::new(cfg.trial_factory(&bench.truth, 1.0));
    let mut scores = Vec::new();
    let mut failure = None;
    let run = lcorpp_loop(
        Dataset::default(),
        &kb,
        &pcfg,
        &bench.model,
        &bench.policy,
        &mut source,
        |rec, clf, _, _| match probe_f1(clf, &probe) {
            Ok(f1) => {
                log::info!("batch {}: probe f1 {f1:.4}, divergence {:.4}", rec.batch, rec.divergence);
                scores.push(f1);
            }
            Err(e) => failure = Some(e),
        },
    )?;
    if let Some(e) = failure {
        return Err(e);
    }
    let rows = (0..aug.batches)
        .map(|k| Row {
            strategy: Strategy::L.name().into(),
            condition: format!("batch{}", k + 1),
            f1: scores[k.min(scores.len() - 1)],
            mean_cost: 0.0,
            n_trials: probe.len() as u64,
            seed: cfg.seed,
        })
        .collect();
    Ok(AugmentOutcome {
        rows,
        probe_f1: scores,
        run,
    })
}

/// Confusion matrix of `clf` on a labeled set, smoothed like the
/// cross-validated ones.
pub fn evaluate(clf: &impl Predictor, ds: &Dataset) -> (ConfusionMatrix, Metrics) {
    let mut counts = ConfusionCounts::default();
    let mut m = Metrics::default();
    for (x, y) in &ds.items {
        let p = clf.predict_label(x);
        counts.record(*y, p);
        m.record(*y, p, 0.0);
    }
    (counts.smoothed(), m)
}
