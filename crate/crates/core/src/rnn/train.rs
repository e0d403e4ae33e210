use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{LstmConfig, PmimoLstm, TrainingSet, Window};
use crate::error::{Error, Result};

/// Root-mean-square error over all `2T` coordinates.
pub fn loss(pred: &Window, target: &Window) -> Result<f64> {
    if pred.dim() != target.dim() {
        return Err(Error::Shape(format!(
            "prediction {:?} vs target {:?}",
            pred.dim(),
            target.dim()
        )));
    }
    let n = pred.len() as f64;
    let sq: f64 = pred.iter().zip(target).map(|(p, t)| (p - t) * (p - t)).sum();
    Ok((sq / n).sqrt())
}

/// Gradient of [`loss`] with respect to `pred` (zero at a perfect fit).
pub fn loss_grad(pred: &Window, target: &Window) -> Result<(f64, Window)> {
    let l = loss(pred, target)?;
    if l == 0.0 {
        return Ok((0.0, Window::zeros(pred.dim())));
    }
    let scale = 1.0 / (pred.len() as f64 * l);
    Ok((l, (pred - target) * scale))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 50,
            batch_size: 32,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug)]
pub struct TrainReport {
    /// Mean per-sequence training loss of each epoch (dropout active).
    pub epoch_loss: Vec<f64>,
}

struct Adam {
    m: PmimoLstm,
    v: PmimoLstm,
    step: i32,
    lr: f64,
}

impl Adam {
    const BETA1: f64 = 0.9;
    const BETA2: f64 = 0.999;
    const EPS: f64 = 1e-8;

    fn new(model: &PmimoLstm) -> Self {
        Self {
            m: model.zeros_like(),
            v: model.zeros_like(),
            step: 0,
            lr: model.config.learning_rate,
        }
    }

    fn update(&mut self, model: &mut PmimoLstm, grads: &PmimoLstm) {
        self.step += 1;
        let bc1 = 1.0 - Self::BETA1.powi(self.step);
        let bc2 = 1.0 - Self::BETA2.powi(self.step);
        let params = model.tensors_mut();
        let ms = self.m.tensors_mut();
        let vs = self.v.tensors_mut();
        let gs = grads.tensors();
        for (((p, m), v), (_, g)) in params.into_iter().zip(ms).zip(vs).zip(gs) {
            for k in 0..p.len() {
                m[k] = Self::BETA1 * m[k] + (1.0 - Self::BETA1) * g[k];
                v[k] = Self::BETA2 * v[k] + (1.0 - Self::BETA2) * g[k] * g[k];
                let m_hat = m[k] / bc1;
                let v_hat = v[k] / bc2;
                p[k] -= self.lr * m_hat / (v_hat.sqrt() + Self::EPS);
            }
        }
    }
}

/// Mini-batch Adam on mean per-sequence RMSE. Shuffling and dropout draw
/// from one seeded stream, so equal seeds give equal traces.
pub fn train(model: &mut PmimoLstm, data: &TrainingSet, cfg: &TrainConfig) -> Result<TrainReport> {
    data.validate(&model.config)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut adam = Adam::new(model);
    let mut order: Vec<usize> = (0..data.len()).collect();
    let batch = cfg.batch_size.max(1);
    let mut epoch_loss = Vec::with_capacity(cfg.epochs);

    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let mut total = 0.0;
        for chunk in order.chunks(batch) {
            let mut grads = model.zeros_like();
            for &idx in chunk {
                let seq = &data.sequences[idx];
                let (pred, trace) = model.forward_trace(&seq.input, Some(&mut rng))?;
                let (l, d_out) = loss_grad(&pred, &seq.target)?;
                if !l.is_finite() {
                    return Err(Error::NonFiniteLoss {
                        epoch,
                        learning_rate: model.config.learning_rate,
                    });
                }
                total += l;
                grads.add_scaled(&model.backward(&trace, &d_out), 1.0 / chunk.len() as f64);
            }
            adam.update(model, &grads);
        }
        let mean = total / data.len() as f64;
        if !mean.is_finite() {
            return Err(Error::NonFiniteLoss {
                epoch,
                learning_rate: model.config.learning_rate,
            });
        }
        epoch_loss.push(mean);
    }
    Ok(TrainReport { epoch_loss })
}

#[derive(Clone, Debug)]
pub struct GradCheckReport {
    pub max_rel_err: f64,
    /// `tensor[index]` of the worst parameter.
    pub worst: String,
    /// Largest `|analytic - fd|`; round-off puts a floor near 1e-11 under it.
    pub max_abs_err: f64,
    pub checked: usize,
}

impl GradCheckReport {
    pub fn ensure(&self, threshold: f64) -> Result<()> {
        if self.max_rel_err < threshold {
            Ok(())
        } else {
            Err(Error::GradCheckFailed {
                param: self.worst.clone(),
                rel_err: self.max_rel_err,
                threshold,
            })
        }
    }
}

/// Compare backprop gradients of the RMSE loss against central
/// differences for every parameter (inference mode, no dropout).
pub fn grad_check(model: &PmimoLstm, window: &Window, target: &Window, step: f64) -> Result<GradCheckReport> {
    let (pred, trace) = model.forward_trace(window, None::<&mut ChaCha8Rng>)?;
    let (_, d_out) = loss_grad(&pred, target)?;
    let analytic = model.backward(&trace, &d_out);

    let eval = |m: &PmimoLstm| -> Result<f64> { loss(&m.forward(window)?, target) };
    let names: Vec<String> = model.tensors().into_iter().map(|(n, _)| n).collect();
    let grads: Vec<Vec<f64>> = analytic.tensors().into_iter().map(|(_, g)| g.to_vec()).collect();

    let mut probe = model.clone();
    let mut worst = (0.0f64, String::new());
    let mut max_abs_err = 0.0f64;
    let mut checked = 0;
    for (ti, name) in names.iter().enumerate() {
        for k in 0..grads[ti].len() {
            let orig = probe.tensors_mut()[ti][k];
            probe.tensors_mut()[ti][k] = orig + step;
            let plus = eval(&probe)?;
            probe.tensors_mut()[ti][k] = orig - step;
            let minus = eval(&probe)?;
            probe.tensors_mut()[ti][k] = orig;
            let fd = (plus - minus) / (2.0 * step);
            let a = grads[ti][k];
            let rel = (a - fd).abs() / (a.abs() + fd.abs() + 1e-12);
            max_abs_err = max_abs_err.max((a - fd).abs());
            checked += 1;
            if rel > worst.0 || worst.1.is_empty() {
                worst = (rel, format!("{name}[{k}]"));
            }
        }
    }
    Ok(GradCheckReport {
        max_rel_err: worst.0,
        worst: worst.1,
        max_abs_err,
        checked,
    })
}

/// Seeded model, window and target for a gradient check: inputs and
/// targets uniform on [0, 1), the range the localizer feeds the model.
pub fn grad_check_case(config: LstmConfig, seed: u64) -> Result<(PmimoLstm, Window, Window)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let model = PmimoLstm::new(config, &mut rng)?;
    let (t, n) = (model.config.memory_length, model.config.input_size);
    let window = Window::from_shape_fn((t, n), |_| rng.random_range(0.0..1.0));
    let target = Window::from_shape_fn((t, 2), |_| rng.random_range(0.0..1.0));
    Ok((model, window, target))
}
