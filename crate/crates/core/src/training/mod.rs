//! Sample generation and per-block training.

pub mod config;
pub mod samples;

use std::collections::{BTreeMap, HashMap};
use std::io::{self, Write};

use thiserror::Error;

pub use config::{ConfigError, TrainConfig};
pub use samples::{
    class_sample_counts, class_weights, generate_samples, reassign_third_coauthor, samples_for_pair, SampleError,
    TrainingSample,
};

use crate::blocking::{Block, SplitAssignment, SplitSet, TargetPair};
use crate::classifier::{fit, init_model, Dataset, EpochRecord, FitConfig, ModelError, ModelParams, TrainSource};
use crate::corpus::record::BibRecord;
use crate::embedding::{combine, embed_name, embed_text, EmbeddingError, Providers};
use crate::util::fnv1a64;

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("block {anv:?} has {classes} class(es); at least 2 are needed")]
    TooFewClasses { anv: String, classes: usize },
    #[error("block {0:?} has no training pairs")]
    NoTrainingData(String),
    #[error(transparent)]
    Sample(#[from] SampleError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

impl From<EmbeddingError> for TrainError {
    fn from(e: EmbeddingError) -> Self {
        TrainError::Model(ModelError::Embedding(e))
    }
}

/// Embeds samples, caching every name and text string it has seen.
pub struct SampleEncoder<'a> {
    providers: &'a Providers,
    names: HashMap<String, Vec<f64>>,
    texts: HashMap<String, Vec<f64>>,
}

impl<'a> SampleEncoder<'a> {
    pub fn new(providers: &'a Providers) -> Self {
        Self { providers, names: HashMap::new(), texts: HashMap::new() }
    }

    fn name(&mut self, s: &str) -> Result<(), EmbeddingError> {
        if !self.names.contains_key(s) {
            let v = embed_name(self.providers.names.as_ref(), s)?;
            self.names.insert(s.to_string(), v);
        }
        Ok(())
    }

    fn text(&mut self, s: &str) -> Result<(), EmbeddingError> {
        if !self.texts.contains_key(s) {
            let v = embed_text(self.providers.text.as_ref(), s)?;
            self.texts.insert(s.to_string(), v);
        }
        Ok(())
    }

    pub fn encode(
        &mut self,
        target_first: &str,
        p: &str,
        j: &str,
        title: &str,
        source: &str,
    ) -> Result<crate::embedding::InputPair, EmbeddingError> {
        for n in [target_first, p, j] {
            self.name(n)?;
        }
        self.text(title)?;
        self.text(source)?;
        Ok(combine(&self.names[target_first], &self.names[p], &self.names[j], &self.texts[title], &self.texts[source]))
    }

    pub fn encode_sample(&mut self, s: &TrainingSample) -> Result<crate::embedding::InputPair, EmbeddingError> {
        self.encode(&s.target_first, &s.coauthor_p, &s.coauthor_j, &s.title, &s.source)
    }

    pub fn dataset(&mut self, samples: &[TrainingSample]) -> Result<Dataset, EmbeddingError> {
        let mut d = Dataset::new(self.providers.x1_dim(), self.providers.text_dim());
        for s in samples {
            let x = self.encode_sample(s)?;
            d.push(&x.x1, &x.x2, s.target_class);
        }
        Ok(d)
    }
}

/// Samples for every pair, each from its own seeded stream.
pub fn block_samples(block: &Block, pairs: &[TargetPair], seed: u64) -> Result<Vec<TrainingSample>, SampleError> {
    let mut out = Vec::new();
    for p in pairs {
        let record = &block.records[p.record];
        out.extend(samples_for_pair(record, &p.author_key, block.class_of[&p.author_key], seed)?);
    }
    Ok(out)
}

/// Training set that redraws third co-authors every `period` epochs.
struct ReassigningSource<'a> {
    samples: Vec<TrainingSample>,
    records: BTreeMap<&'a str, &'a BibRecord>,
    encoder: SampleEncoder<'a>,
    period: usize,
    seed: u64,
    data: Option<Dataset>,
}

impl TrainSource for ReassigningSource<'_> {
    fn epoch_data(&mut self, epoch: usize) -> Result<&Dataset, ModelError> {
        let redrawn = reassign_third_coauthor(&mut self.samples, &self.records, epoch, self.period, self.seed)
            .map_err(|e| ModelError::Config(e.to_string()))?;
        if redrawn || self.data.is_none() {
            self.data = Some(self.encoder.dataset(&self.samples)?);
        }
        Ok(self.data.as_ref().expect("dataset encoded above"))
    }
}

#[derive(Debug, Clone)]
pub struct TrainedBlock {
    pub model: ModelParams,
    pub history: Vec<EpochRecord>,
    pub best_epoch: usize,
    pub class_weights: Vec<f64>,
    pub train_samples: usize,
    pub validation_samples: usize,
}

pub fn train_block(
    block: &Block,
    split: &SplitAssignment,
    providers: &Providers,
    config: &TrainConfig,
) -> Result<TrainedBlock, TrainError> {
    let anv = block.anv.to_string();
    if block.class_count() < 2 {
        return Err(TrainError::TooFewClasses { anv, classes: block.class_count() });
    }
    let train_pairs = split.pairs_in(block, SplitSet::Train);
    if train_pairs.is_empty() {
        return Err(TrainError::NoTrainingData(anv));
    }
    let val_pairs = split.pairs_in(block, SplitSet::Validation);
    let block_seed = config.seed ^ fnv1a64(anv.as_bytes());

    let train_samples = block_samples(block, &train_pairs, block_seed)?;
    let val_samples = block_samples(block, &val_pairs, block_seed ^ 0x5eed)?;
    let weights = class_weights(&class_sample_counts(&train_samples, block.class_count()));

    let mut validation = SampleEncoder::new(providers).dataset(&val_samples)?;
    let n_train = train_samples.len();
    let mut source = ReassigningSource {
        samples: train_samples,
        records: block.records.iter().map(|r| (r.record_id.as_str(), r)).collect(),
        encoder: SampleEncoder::new(providers),
        period: config.reassign_period,
        seed: block_seed,
        data: None,
    };

    let mut model = init_model(providers.x1_dim(), providers.text_dim(), block.authors.clone(), &config.hidden, block_seed)?;
    model.meta.anv = anv.clone();
    let fit_config = FitConfig {
        batch_size: config.batch_size,
        max_epochs: config.max_epochs,
        patience: config.patience,
        adam: config.adam,
        seed: block_seed,
        class_weights: weights.clone(),
    };
    let outcome = fit(model, &mut source, &mut validation, &fit_config)?;
    log::info!(
        "{anv}: {} epochs, best epoch {}, {} training samples",
        outcome.history.len(),
        outcome.best_epoch,
        n_train
    );
    Ok(TrainedBlock {
        model: outcome.model,
        history: outcome.history,
        best_epoch: outcome.best_epoch,
        class_weights: weights,
        train_samples: n_train,
        validation_samples: val_samples.len(),
    })
}

/// Per-epoch history as tab-separated text with a header line.
pub fn write_history(w: &mut dyn Write, history: &[EpochRecord]) -> io::Result<()> {
    writeln!(w, "epoch\ttrain_loss\tval_loss\tval_accuracy")?;
    let opt = |v: Option<f64>| v.map_or_else(|| "-".to_string(), |x| format!("{x:.6}"));
    for e in history {
        writeln!(w, "{}\t{:.6}\t{}\t{}", e.epoch, e.train_loss, opt(e.val_loss), opt(e.val_accuracy))?;
    }
    Ok(())
}
