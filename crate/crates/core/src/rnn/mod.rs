//! P-MIMO LSTM trajectory localizer.
//!
//! A stack of LSTM layers consumes a window of `T` fingerprint vectors and a
//! linear head emits a 2-D location at every step. Gradients are computed
//! by hand-written backpropagation through time and checked against
//! central finite differences.

mod checkpoint;
mod localizer;
mod lstm;
mod train;

pub use checkpoint::{load_checkpoint, read_checkpoint, save_checkpoint, write_checkpoint};
pub use localizer::LstmLocalizer;
pub use lstm::{LayerParams, PmimoLstm, Window};
pub use train::{grad_check, grad_check_case, loss, loss_grad, train, GradCheckReport, TrainConfig, TrainReport};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fingerprint::{FingerprintVector, RSSI_FLOOR_DBM};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LstmConfig {
    /// Window length T.
    pub memory_length: usize,
    /// Fingerprint length N.
    pub input_size: usize,
    /// LSTM width per layer; empty means a single linear layer.
    pub hidden_sizes: Vec<usize>,
    pub dropout: f64,
    pub learning_rate: f64,
}

impl LstmConfig {
    /// T = 10, two layers of 100 units, dropout 0.2, Adam at 1e-3.
    pub fn full_size(input_size: usize) -> Self {
        Self {
            memory_length: 10,
            input_size,
            hidden_sizes: vec![100, 100],
            dropout: 0.2,
            learning_rate: 0.001,
        }
    }

    /// Same shape with 32-unit layers, small enough for CI.
    pub fn desk(input_size: usize) -> Self {
        Self {
            hidden_sizes: vec![32, 32],
            ..Self::full_size(input_size)
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.memory_length == 0 || self.input_size == 0 {
            return Err(Error::Config("memory length and input size must be >= 1".into()));
        }
        if self.hidden_sizes.contains(&0) {
            return Err(Error::Config("hidden layer sizes must be >= 1".into()));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(Error::Config(format!("dropout {} outside [0, 1)", self.dropout)));
        }
        if !(self.learning_rate > 0.0) {
            return Err(Error::Config("learning rate must be positive".into()));
        }
        Ok(())
    }

    /// Closed-form parameter count.
    pub fn parameter_count(&self) -> usize {
        let mut inputs = self.input_size;
        let mut total = 0;
        for &h in &self.hidden_sizes {
            total += 4 * h * (inputs + h + 1);
            inputs = h;
        }
        total + 2 * (inputs + 1)
    }
}

/// Map RSSI in [-100, 0] dBm onto [0, 1]; missing becomes 0.
pub fn normalize_rssi(fp: &FingerprintVector) -> Vec<f64> {
    fp.features
        .iter()
        .map(|f| match f {
            Some(v) => ((v - RSSI_FLOOR_DBM) / -RSSI_FLOOR_DBM).clamp(0.0, 1.0),
            None => 0.0,
        })
        .collect()
}

/// One training pair: `T × N` inputs and `T × 2` targets.
#[derive(Clone, Debug, PartialEq)]
pub struct Sequence {
    pub input: Window,
    pub target: Window,
}

#[derive(Clone, Debug, Default)]
pub struct TrainingSet {
    pub sequences: Vec<Sequence>,
}

impl TrainingSet {
    pub fn validate(&self, cfg: &LstmConfig) -> Result<()> {
        if self.sequences.is_empty() {
            return Err(Error::Config("training set is empty".into()));
        }
        for (i, s) in self.sequences.iter().enumerate() {
            let (ti, n) = s.input.dim();
            let (tt, two) = s.target.dim();
            if ti != tt || n != cfg.input_size || two != 2 {
                return Err(Error::Shape(format!(
                    "sequence {i}: input {ti}×{n}, target {tt}×{two}, expected T×{} and T×2",
                    cfg.input_size
                )));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.sequences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sequences.is_empty()
    }
}
