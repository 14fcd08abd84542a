//! Line-based `key = value` training configuration.
//!
//! ```text
//! # comments and blank lines are ignored
//! seed = 7
//! batch = 64
//! lr = 0.001
//! patience = 50
//! max_epochs = 1000
//! reassign_period = 10
//! branch1 = 256,128
//! branch2 = 512,256
//! merge = 256,128
//! dropout = 0.5
//! ```

use std::io;
use std::path::Path;

use thiserror::Error;

use crate::classifier::{AdamConfig, HiddenSpec};
use crate::util::{self, number};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] io::Error),
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub seed: u64,
    pub batch_size: usize,
    pub adam: AdamConfig,
    pub patience: usize,
    pub max_epochs: usize,
    pub reassign_period: usize,
    pub hidden: HiddenSpec,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            batch_size: 64,
            adam: AdamConfig::default(),
            patience: 50,
            max_epochs: 1000,
            reassign_period: 10,
            hidden: HiddenSpec::default(),
        }
    }
}

fn widths(value: &str) -> Result<Vec<usize>, String> {
    if value.trim().is_empty() {
        return Ok(Vec::new());
    }
    value
        .split(',')
        .map(|w| match w.trim().parse::<usize>() {
            Ok(0) => Err("layer widths must be positive".to_string()),
            Ok(n) => Ok(n),
            Err(e) => Err(format!("bad width {w:?}: {e}")),
        })
        .collect()
}

impl TrainConfig {
    fn set(&mut self, key: &str, value: &str) -> Result<(), String> {
        match key {
            "seed" => self.seed = number(key, value)?,
            "batch" => self.batch_size = number(key, value)?,
            "lr" => self.adam.learning_rate = number(key, value)?,
            "beta1" => self.adam.beta1 = number(key, value)?,
            "beta2" => self.adam.beta2 = number(key, value)?,
            "adam_epsilon" => self.adam.epsilon = number(key, value)?,
            "patience" => self.patience = number(key, value)?,
            "max_epochs" => self.max_epochs = number(key, value)?,
            "reassign_period" => self.reassign_period = number(key, value)?,
            "branch1" => self.hidden.branch1 = widths(value)?,
            "branch2" => self.hidden.branch2 = widths(value)?,
            "merge" => self.hidden.merge = widths(value)?,
            "dropout" => self.hidden.final_dropout = number(key, value)?,
            other => return Err(format!("unknown key {other:?}")),
        }
        Ok(())
    }

    fn check(&self) -> Result<(), String> {
        if self.batch_size == 0 {
            return Err("batch must be positive".into());
        }
        if self.reassign_period == 0 {
            return Err("reassign_period must be at least 1".into());
        }
        if !self.adam.learning_rate.is_finite() || self.adam.learning_rate <= 0.0 {
            return Err("lr must be positive".into());
        }
        if !(0.0..1.0).contains(&self.hidden.final_dropout) {
            return Err("dropout must be in [0, 1)".into());
        }
        Ok(())
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut cfg = TrainConfig::default();
        let entries = util::key_values(text).map_err(|(line, message)| ConfigError::Parse { line, message })?;
        for &(line, key, value) in &entries {
            cfg.set(key, value).map_err(|message| ConfigError::Parse { line, message })?;
        }
        let last = entries.last().map_or(0, |e| e.0);
        cfg.check().map_err(|message| ConfigError::Parse { line: last, message })?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        Self::parse(&std::fs::read_to_string(path)?)
    }
}
