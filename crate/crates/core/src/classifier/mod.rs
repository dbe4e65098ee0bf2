//! LSTM trajectory classifier and its cross-validated confusion matrix.
//!
//! The network's sigmoid output is P(not interested): a BCE target of 1
//! encodes `not_interested`.

mod adam;
mod confusion;
pub mod lstm;

use alloc::vec;
use alloc::vec::Vec;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::Rng;
use thiserror::Error;

pub use adam::{AdamConfig, AdamState};
pub use confusion::{ConfusionCounts, ConfusionMatrix};
pub use lstm::{Gate, LstmParams, ParamKind};

use crate::dataset::{Dataset, Instance, Intention, POINT_DIM};
use crate::{derive_seed, rng_from_seed};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ClassifierError {
    #[error("non-finite value in network computation")]
    NonFinite,
    #[error("parameter or input shape mismatch")]
    Shape,
    #[error("invalid training configuration: {0}")]
    Config(&'static str),
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub dropout: f64,
    pub hidden: usize,
    pub adam: AdamConfig,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 300,
            batch_size: 32,
            dropout: 0.2,
            hidden: 50,
            adam: AdamConfig::default(),
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), ClassifierError> {
        if self.epochs == 0 || self.batch_size == 0 || self.hidden == 0 {
            return Err(ClassifierError::Config("epochs, batch size and hidden size must be positive"));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(ClassifierError::Config("dropout must lie in [0, 1)"));
        }
        let a = &self.adam;
        if !(a.learning_rate > 0.0 && a.epsilon > 0.0 && (0.0..1.0).contains(&a.beta1) && (0.0..1.0).contains(&a.beta2)) {
            return Err(ClassifierError::Config("invalid Adam hyperparameters"));
        }
        Ok(())
    }
}

/// BCE target for a label.
pub fn target_of(label: Intention) -> f64 {
    match label {
        Intention::Interested => 0.0,
        Intention::NotInterested => 1.0,
    }
}

/// Label for a network output `p`; exactly 0.5 reads as interested.
pub fn label_of(p: f64) -> Intention {
    if p > 0.5 {
        Intention::NotInterested
    } else {
        Intention::Interested
    }
}

/// Anything that labels instances.
pub trait Predictor {
    fn predict_label(&self, instance: &Instance) -> Intention;
}

/// A trained (or randomly initialized) LSTM classifier.
#[derive(Debug, Clone, PartialEq)]
pub struct Classifier {
    params: LstmParams,
}

impl Classifier {
    pub fn new(params: LstmParams) -> Result<Self, ClassifierError> {
        if params.input() != POINT_DIM {
            return Err(ClassifierError::Shape);
        }
        Ok(Self { params })
    }

    /// Untrained network with seeded random weights.
    pub fn random(hidden: usize, seed: u64) -> Self {
        let mut rng = rng_from_seed(seed);
        Self {
            params: LstmParams::random(POINT_DIM, hidden, &mut rng),
        }
    }

    pub fn params(&self) -> &LstmParams {
        &self.params
    }

    /// P(not interested) for `instance`.
    pub fn probability(&self, instance: &Instance) -> Result<f64, ClassifierError> {
        lstm::forward(&self.params, instance.features())
    }

    /// Label and raw output. Numerical failure falls back to the tie label.
    pub fn predict(&self, instance: &Instance) -> (Intention, f64) {
        let p = self.probability(instance).unwrap_or(0.5);
        (label_of(p), p)
    }
}

impl Predictor for Classifier {
    fn predict_label(&self, instance: &Instance) -> Intention {
        self.predict(instance).0
    }
}

/// Result of [`fit`].
#[derive(Debug, Clone)]
pub struct TrainReport {
    pub classifier: Classifier,
    /// Mean BCE over the dataset before training, without dropout.
    pub initial_loss: f64,
    /// Mean training loss of each epoch (with dropout).
    pub epoch_losses: Vec<f64>,
}

/// Mean BCE of `params` over `ds` without dropout.
pub fn dataset_loss(params: &LstmParams, ds: &Dataset) -> Result<f64, ClassifierError> {
    if ds.is_empty() {
        return Ok(0.0);
    }
    let mut tape = lstm::Tape::default();
    let mut total = 0.0;
    for (inst, label) in &ds.items {
        let logit = lstm::forward_logit(params, inst.features(), None, &mut tape)?;
        total += lstm::bce_from_logit(logit, target_of(*label));
    }
    Ok(total / ds.len() as f64)
}

/// Trains a classifier; see [`fit`].
pub fn train(ds: &Dataset, cfg: &TrainConfig) -> Result<Classifier, ClassifierError> {
    fit(ds, cfg).map(|r| r.classifier)
}

/// Mini-batch Adam on binary cross-entropy, with inverted dropout on the
/// final hidden state. An empty dataset yields the random initialization.
pub fn fit(ds: &Dataset, cfg: &TrainConfig) -> Result<TrainReport, ClassifierError> {
    cfg.validate()?;
    let mut rng = rng_from_seed(cfg.seed);
    let mut params = LstmParams::random(POINT_DIM, cfg.hidden, &mut rng);
    if ds.is_empty() {
        log::warn!("empty training set; returning a random classifier");
        return Ok(TrainReport {
            classifier: Classifier { params },
            initial_loss: 0.0,
            epoch_losses: Vec::new(),
        });
    }
    if ds.count(Intention::Interested) == 0 || ds.count(Intention::NotInterested) == 0 {
        log::warn!("training set has a single class; the classifier will be near-constant");
    }
    let initial_loss = dataset_loss(&params, ds)?;

    let h = cfg.hidden;
    let keep = 1.0 - cfg.dropout;
    let mut adam = AdamState::new(params.len());
    let mut grad = vec![0.0; params.len()];
    let mut mask = vec![1.0; h];
    let mut tape = lstm::Tape::default();
    let mut buf = lstm::GradBuffers::default();
    let mut order: Vec<usize> = (0..ds.len()).collect();
    let mut epoch_losses = Vec::with_capacity(cfg.epochs);

    for _ in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for batch in order.chunks(cfg.batch_size) {
            grad.iter_mut().for_each(|g| *g = 0.0);
            for &i in batch {
                let (inst, label) = &ds.items[i];
                let m = if cfg.dropout > 0.0 {
                    for v in mask.iter_mut() {
                        *v = if rng.random::<f64>() < keep { 1.0 / keep } else { 0.0 };
                    }
                    Some(mask.as_slice())
                } else {
                    None
                };
                epoch_loss += lstm::loss_and_grad(&params, inst.features(), target_of(*label), m, &mut grad, &mut tape, &mut buf)?;
            }
            let scale = 1.0 / batch.len() as f64;
            grad.iter_mut().for_each(|g| *g *= scale);
            adam.step(params.as_mut_slice(), &grad, &cfg.adam)?;
        }
        epoch_losses.push(epoch_loss / ds.len() as f64);
    }
    Ok(TrainReport {
        classifier: Classifier { params },
        initial_loss,
        epoch_losses,
    })
}

/// Stratified k-fold cross-validation of [`train`] with `cfg`.
pub fn cross_validate(ds: &Dataset, cfg: &TrainConfig, folds: usize) -> Result<ConfusionMatrix, ClassifierError> {
    let base = cfg.clone();
    cross_validate_with(ds, folds, cfg.seed, |train_set, fold| {
        let mut c = base.clone();
        c.seed = derive_seed(base.seed, 1 + fold as u64);
        train(train_set, &c)
    })
}

/// Fold assignment: per class, a seeded shuffle dealt round-robin.
fn stratified_folds(ds: &Dataset, folds: usize, seed: u64) -> Vec<usize> {
    let mut rng = rng_from_seed(seed);
    let mut fold_of = vec![0; ds.len()];
    for label in Intention::ALL {
        let mut idx: Vec<usize> = (0..ds.len()).filter(|&i| ds.items[i].1 == *label).collect();
        idx.shuffle(&mut rng);
        for (k, i) in idx.into_iter().enumerate() {
            fold_of[i] = k % folds;
        }
    }
    fold_of
}

/// Cross-validation with a caller-supplied training procedure. Out-of-fold
/// predictions are pooled and smoothed by one count per cell.
///
/// If some class has fewer than `folds` instances, a single stratified
/// 70/30 holdout is used instead.
pub fn cross_validate_with<P, F>(ds: &Dataset, folds: usize, seed: u64, mut fit: F) -> Result<ConfusionMatrix, ClassifierError>
where
    P: Predictor,
    F: FnMut(&Dataset, usize) -> Result<P, ClassifierError>,
{
    if folds < 2 {
        return Err(ClassifierError::Config("cross-validation needs at least two folds"));
    }
    if ds.is_empty() {
        return Ok(ConfusionMatrix::uniform());
    }
    let mut counts = ConfusionCounts::default();
    let smallest = Intention::ALL.iter().map(|l| ds.count(*l)).min().unwrap_or(0);
    if smallest < folds {
        log::warn!("a class has {smallest} instances (< {folds} folds); using a 70/30 holdout");
        let mut rng = rng_from_seed(seed);
        let (train_set, test_set) = crate::dataset::split(ds, 0.7, &mut rng).map_err(|_| ClassifierError::Shape)?;
        let model = fit(&train_set, 0)?;
        for (inst, label) in &test_set.items {
            counts.record(*label, model.predict_label(inst));
        }
        return Ok(counts.smoothed());
    }
    let fold_of = stratified_folds(ds, folds, seed);
    for fold in 0..folds {
        let mut train_set = Dataset::default();
        let mut test_idx = Vec::new();
        for (i, item) in ds.items.iter().enumerate() {
            if fold_of[i] == fold {
                test_idx.push(i);
            } else {
                train_set.items.push(item.clone());
            }
        }
        let model = fit(&train_set, fold)?;
        for i in test_idx {
            let (inst, label) = &ds.items[i];
            counts.record(*label, model.predict_label(inst));
        }
    }
    Ok(counts.smoothed())
}

/// Analytic BCE gradient of one sequence, dropout disabled.
pub fn analytic_gradient(params: &LstmParams, seq: &[f64], target: f64) -> Result<Vec<f64>, ClassifierError> {
    let mut grad = vec![0.0; params.len()];
    lstm::loss_and_grad(
        params,
        seq,
        target,
        None,
        &mut grad,
        &mut lstm::Tape::default(),
        &mut lstm::GradBuffers::default(),
    )?;
    Ok(grad)
}

/// Compares [`analytic_gradient`] with central differences; see
/// [`gradient_check_with`].
pub fn gradient_check<R: Rng + ?Sized>(
    params: &LstmParams,
    seq: &[f64],
    label: Intention,
    per_group: usize,
    rng: &mut R,
) -> Result<f64, ClassifierError> {
    gradient_check_with(params, seq, label, per_group, rng, analytic_gradient)
}

/// Step used for central finite differences.
pub const FD_STEP: f64 = 1e-5;

/// Max relative error `|a - n| / max(|a|, |n|, 1e-7)` between a supplied
/// gradient and central finite differences, over `per_group` random
/// parameters from each tensor block (every gate's `W`, `U` and `b`, plus
/// the dense layer).
pub fn gradient_check_with<R, G>(
    params: &LstmParams,
    seq: &[f64],
    label: Intention,
    per_group: usize,
    rng: &mut R,
    gradient: G,
) -> Result<f64, ClassifierError>
where
    R: Rng + ?Sized,
    G: Fn(&LstmParams, &[f64], f64) -> Result<Vec<f64>, ClassifierError>,
{
    let target = target_of(label);
    let analytic = gradient(params, seq, target)?;
    if analytic.len() != params.len() {
        return Err(ClassifierError::Shape);
    }

    let mut groups: Vec<(ParamKind, Vec<usize>)> = Vec::new();
    for i in 0..params.len() {
        let kind = params.kind(i);
        match groups.iter_mut().find(|(k, _)| *k == kind) {
            Some((_, v)) => v.push(i),
            None => groups.push((kind, vec![i])),
        }
    }

    let loss_at = |p: &LstmParams| -> Result<f64, ClassifierError> {
        let logit = lstm::forward_logit(p, seq, None, &mut lstm::Tape::default())?;
        Ok(lstm::bce_from_logit(logit, target))
    };
    let mut probe = params.clone();
    let mut worst: f64 = 0.0;
    for (_, members) in &groups {
        for &i in members.choose_multiple(rng, per_group) {
            let orig = probe.as_slice()[i];
            probe.as_mut_slice()[i] = orig + FD_STEP;
            let up = loss_at(&probe)?;
            probe.as_mut_slice()[i] = orig - FD_STEP;
            let down = loss_at(&probe)?;
            probe.as_mut_slice()[i] = orig;
            let numeric = (up - down) / (2.0 * FD_STEP);
            let a = analytic[i];
            let denom = a.abs().max(numeric.abs()).max(1e-7);
            worst = worst.max((a - numeric).abs() / denom);
        }
    }
    Ok(worst)
}
