//! Mini-batch training loop with early stopping and best-model retention.

use rand::seq::SliceRandom;

use super::adam::{adam_step, AdamConfig};
use super::network::{loss, Mode, ModelParams};
use super::ModelError;
use crate::util::derived_rng;

/// Encoded samples: flat `x1`/`x2` rows plus class labels.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Dataset {
    pub x1_dim: usize,
    pub x2_dim: usize,
    pub x1: Vec<f64>,
    pub x2: Vec<f64>,
    pub labels: Vec<usize>,
}

impl Dataset {
    pub fn new(x1_dim: usize, x2_dim: usize) -> Self {
        Self { x1_dim, x2_dim, ..Default::default() }
    }

    pub fn push(&mut self, x1: &[f64], x2: &[f64], label: usize) {
        assert_eq!(x1.len(), self.x1_dim, "x1 width");
        assert_eq!(x2.len(), self.x2_dim, "x2 width");
        self.x1.extend_from_slice(x1);
        self.x2.extend_from_slice(x2);
        self.labels.push(label);
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    fn gather(&self, idx: &[usize], x1: &mut Vec<f64>, x2: &mut Vec<f64>, labels: &mut Vec<usize>) {
        x1.clear();
        x2.clear();
        labels.clear();
        for &i in idx {
            x1.extend_from_slice(&self.x1[i * self.x1_dim..(i + 1) * self.x1_dim]);
            x2.extend_from_slice(&self.x2[i * self.x2_dim..(i + 1) * self.x2_dim]);
            labels.push(self.labels[i]);
        }
    }

    /// Unweighted mean loss and accuracy in evaluation mode.
    pub fn evaluate(&self, model: &ModelParams) -> Result<(f64, f64), ModelError> {
        const CHUNK: usize = 512;
        let unit = vec![1.0; model.class_count()];
        let l = model.class_count();
        let (mut total, mut correct) = (0.0, 0usize);
        let (mut x1, mut x2, mut labels) = (Vec::new(), Vec::new(), Vec::new());
        let all: Vec<usize> = (0..self.len()).collect();
        for idx in all.chunks(CHUNK) {
            self.gather(idx, &mut x1, &mut x2, &mut labels);
            let probs = model.predict_batch(&x1, &x2, idx.len())?;
            for (r, &y) in labels.iter().enumerate() {
                let p = &probs[r * l..(r + 1) * l];
                total += loss(p, y, &unit);
                if argmax(p) == y {
                    correct += 1;
                }
            }
        }
        let n = self.len().max(1) as f64;
        Ok((total / n, correct as f64 / n))
    }
}

/// Index of the largest value, lowest index on ties.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

/// Supplies the training set for each epoch.
pub trait TrainSource {
    fn epoch_data(&mut self, epoch: usize) -> Result<&Dataset, ModelError>;
}

impl TrainSource for Dataset {
    fn epoch_data(&mut self, _epoch: usize) -> Result<&Dataset, ModelError> {
        Ok(self)
    }
}

/// Scores the model after each epoch as (loss, accuracy).
pub trait Validator {
    fn is_empty(&self) -> bool;
    fn evaluate(&mut self, model: &ModelParams) -> Result<(f64, f64), ModelError>;
}

impl Validator for Dataset {
    fn is_empty(&self) -> bool {
        Dataset::is_empty(self)
    }

    fn evaluate(&mut self, model: &ModelParams) -> Result<(f64, f64), ModelError> {
        Dataset::evaluate(self, model)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EpochDecision {
    Continue,
    Stop,
}

/// Early stopping on validation loss and best-accuracy snapshot retention.
///
/// The two monitors are independent: the loss counter decides when to stop,
/// the accuracy record decides which state is kept.
#[derive(Debug, Clone)]
pub struct TrainState<S> {
    pub patience: usize,
    pub epoch: usize,
    pub best_val_loss: f64,
    pub epochs_without_improvement: usize,
    pub best_val_accuracy: f64,
    pub best_epoch: usize,
    pub snapshot: Option<S>,
}

impl<S> TrainState<S> {
    pub fn new(patience: usize) -> Self {
        Self {
            patience,
            epoch: 0,
            best_val_loss: f64::INFINITY,
            epochs_without_improvement: 0,
            best_val_accuracy: f64::NEG_INFINITY,
            best_epoch: 0,
            snapshot: None,
        }
    }

    /// Record one epoch's validation scores; `snapshot` is called only when
    /// accuracy strictly improves.
    pub fn observe(&mut self, val_loss: f64, val_accuracy: f64, snapshot: impl FnOnce() -> S) -> EpochDecision {
        self.epoch += 1;
        if val_accuracy > self.best_val_accuracy {
            self.best_val_accuracy = val_accuracy;
            self.best_epoch = self.epoch;
            self.snapshot = Some(snapshot());
        }
        if val_loss < self.best_val_loss {
            self.best_val_loss = val_loss;
            self.epochs_without_improvement = 0;
        } else {
            self.epochs_without_improvement += 1;
        }
        if self.epochs_without_improvement >= self.patience {
            EpochDecision::Stop
        } else {
            EpochDecision::Continue
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitConfig {
    pub batch_size: usize,
    pub max_epochs: usize,
    pub patience: usize,
    pub adam: AdamConfig,
    pub seed: u64,
    pub class_weights: Vec<f64>,
}

impl FitConfig {
    pub fn new(class_weights: Vec<f64>) -> Self {
        Self {
            batch_size: 64,
            max_epochs: 1000,
            patience: 50,
            adam: AdamConfig::default(),
            seed: 0,
            class_weights,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: Option<f64>,
    pub val_accuracy: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitOutcome {
    pub model: ModelParams,
    pub history: Vec<EpochRecord>,
    /// Epoch (1-based) whose parameters were returned.
    pub best_epoch: usize,
    pub stopped_early: bool,
}

/// Train `model` and return the best-validation-accuracy state.
///
/// Without validation data early stopping is disabled and the final state
/// is returned.
pub fn fit(
    mut model: ModelParams,
    train: &mut dyn TrainSource,
    validation: &mut dyn Validator,
    config: &FitConfig,
) -> Result<FitOutcome, ModelError> {
    if config.batch_size == 0 {
        return Err(ModelError::Config("batch size must be positive".into()));
    }
    if config.class_weights.len() != model.class_count() {
        return Err(ModelError::DimMismatch {
            what: "class weights",
            expected: model.class_count(),
            got: config.class_weights.len(),
        });
    }
    let validate = !validation.is_empty();
    if !validate {
        log::warn!("no validation samples; early stopping disabled");
    }
    let mut state: TrainState<ModelParams> = TrainState::new(config.patience);
    let mut history = Vec::new();
    let mut stopped_early = false;
    let (mut x1, mut x2, mut labels) = (Vec::new(), Vec::new(), Vec::new());

    for epoch in 1..=config.max_epochs {
        let data = train.epoch_data(epoch)?;
        if data.is_empty() {
            return Err(ModelError::EmptyTrainingSet);
        }
        if data.x1_dim != model.x1_dim || data.x2_dim != model.x2_dim {
            return Err(ModelError::DimMismatch { what: "dataset", expected: model.x1_dim + model.x2_dim, got: data.x1_dim + data.x2_dim });
        }
        let epoch_bytes = (epoch as u64).to_le_bytes();
        let mut order: Vec<usize> = (0..data.len()).collect();
        order.shuffle(&mut derived_rng(config.seed, &[b"shuffle", &epoch_bytes]));
        let mut dropout_rng = derived_rng(config.seed, &[b"dropout", &epoch_bytes]);
        let mut weighted = 0.0;
        for batch in order.chunks(config.batch_size) {
            data.gather(batch, &mut x1, &mut x2, &mut labels);
            let (l, grads) = model.loss_and_gradients(&x1, &x2, &labels, &config.class_weights, Mode::Train, &mut dropout_rng)?;
            weighted += l * batch.len() as f64;
            adam_step(&mut model, &grads, &config.adam);
        }
        let train_loss = weighted / data.len() as f64;
        if !validate {
            history.push(EpochRecord { epoch, train_loss, val_loss: None, val_accuracy: None });
            continue;
        }
        let (val_loss, val_accuracy) = validation.evaluate(&model)?;
        history.push(EpochRecord { epoch, train_loss, val_loss: Some(val_loss), val_accuracy: Some(val_accuracy) });
        log::debug!("epoch {epoch}: train {train_loss:.5} val {val_loss:.5} acc {val_accuracy:.4}");
        let decision = state.observe(val_loss, val_accuracy, || {
            let mut snap = model.clone();
            snap.meta.epoch = epoch as u32;
            snap.meta.val_accuracy = val_accuracy;
            snap
        });
        if decision == EpochDecision::Stop {
            stopped_early = true;
            break;
        }
    }

    let last = history.len();
    let (model, best_epoch) = match state.snapshot {
        Some(best) => (best, state.best_epoch),
        None => {
            model.meta.epoch = last as u32;
            (model, last)
        }
    };
    Ok(FitOutcome { model, history, best_epoch, stopped_early })
}
