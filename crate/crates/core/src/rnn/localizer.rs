use ndarray::Array2;

use super::{normalize_rssi, PmimoLstm, Sequence, Window};
use crate::error::{Error, Result};
use crate::fingerprint::{Environment, FingerprintVector, Location};

/// Trained model plus the coordinate scaling used for its targets: outputs
/// live in `[0, 1]²` and map back onto `width × height`.
#[derive(Clone, Debug)]
pub struct LstmLocalizer {
    pub model: PmimoLstm,
    pub width: f64,
    pub height: f64,
}

impl LstmLocalizer {
    pub fn new(model: PmimoLstm, env: &Environment) -> Self {
        Self {
            model,
            width: env.width,
            height: env.height,
        }
    }

    /// Model input for the last `T` fingerprints of `history`. Shorter
    /// histories are front-padded by repeating the earliest fingerprint.
    pub fn input_window(&self, history: &[FingerprintVector]) -> Result<Window> {
        let t = self.model.config.memory_length;
        let n = self.model.config.input_size;
        let first = history.first().ok_or(Error::EmptyInput)?;
        let recent = &history[history.len().saturating_sub(t)..];
        let pad = t - recent.len();
        let mut w = Array2::zeros((t, n));
        for (i, fp) in std::iter::repeat_n(first, pad).chain(recent).enumerate() {
            if fp.len() != n {
                return Err(Error::DimensionMismatch { expected: n, got: fp.len() });
            }
            for (j, v) in normalize_rssi(fp).into_iter().enumerate() {
                w[[i, j]] = v;
            }
        }
        Ok(w)
    }

    /// Location for the most recent fingerprint of `history`.
    pub fn locate(&self, history: &[FingerprintVector]) -> Result<Location> {
        let out = self.model.forward(&self.input_window(history)?)?;
        let last = out.nrows() - 1;
        Ok(Location::new(out[[last, 0]] * self.width, out[[last, 1]] * self.height))
    }

    /// Training pair for consecutive fingerprints and their true positions.
    pub fn sequence(&self, fps: &[FingerprintVector], truth: &[Location]) -> Result<Sequence> {
        if fps.len() != truth.len() || fps.len() != self.model.config.memory_length {
            return Err(Error::Shape(format!(
                "{} fingerprints and {} positions for T = {}",
                fps.len(),
                truth.len(),
                self.model.config.memory_length
            )));
        }
        let input = self.input_window(fps)?;
        let mut target = Array2::zeros((truth.len(), 2));
        for (i, l) in truth.iter().enumerate() {
            target[[i, 0]] = l.x / self.width;
            target[[i, 1]] = l.y / self.height;
        }
        Ok(Sequence { input, target })
    }
}
