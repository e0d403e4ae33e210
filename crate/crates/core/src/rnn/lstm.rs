use ndarray::{s, Array1, Array2, ArrayView1, Axis};
use rand::Rng;
use rand_distr::{Distribution, Uniform};

use super::LstmConfig;
use crate::error::{Error, Result};

/// Row-per-step matrix (`T × N` inputs or `T × 2` locations).
pub type Window = Array2<f64>;

/// Weights of one LSTM layer. Gate blocks are stacked as input, forget,
/// cell candidate, output.
#[derive(Clone, Debug, PartialEq)]
pub struct LayerParams {
    pub w: Array2<f64>,
    pub u: Array2<f64>,
    pub b: Array1<f64>,
}

impl LayerParams {
    fn zeros(inputs: usize, hidden: usize) -> Self {
        Self {
            w: Array2::zeros((4 * hidden, inputs)),
            u: Array2::zeros((4 * hidden, hidden)),
            b: Array1::zeros(4 * hidden),
        }
    }

    pub fn hidden(&self) -> usize {
        self.u.ncols()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PmimoLstm {
    pub config: LstmConfig,
    pub layers: Vec<LayerParams>,
    pub w_out: Array2<f64>,
    pub b_out: Array1<f64>,
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

pub(crate) struct StepCache {
    x: Array1<f64>,
    h_prev: Array1<f64>,
    c_prev: Array1<f64>,
    i: Array1<f64>,
    f: Array1<f64>,
    g: Array1<f64>,
    o: Array1<f64>,
    tanh_c: Array1<f64>,
}

/// Intermediate values of one forward pass, kept for backpropagation.
pub(crate) struct Trace {
    /// `steps[t][layer]`
    steps: Vec<Vec<StepCache>>,
    /// `masks[t][l]` scales the output of layer `l` fed to layer `l + 1`.
    masks: Vec<Vec<Option<Array1<f64>>>>,
    /// Input to the output head at each step.
    head_in: Vec<Array1<f64>>,
}

impl PmimoLstm {
    /// All-zero parameters.
    pub fn zeros(config: LstmConfig) -> Result<Self> {
        config.validate()?;
        let mut inputs = config.input_size;
        let mut layers = Vec::with_capacity(config.hidden_sizes.len());
        for &h in &config.hidden_sizes {
            layers.push(LayerParams::zeros(inputs, h));
            inputs = h;
        }
        Ok(Self {
            w_out: Array2::zeros((2, inputs)),
            b_out: Array1::zeros(2),
            layers,
            config,
        })
    }

    /// Uniform(-1/√H, 1/√H) weights, forget-gate bias 1, zero output bias.
    pub fn new<R: Rng + ?Sized>(config: LstmConfig, rng: &mut R) -> Result<Self> {
        let mut model = Self::zeros(config)?;
        for layer in &mut model.layers {
            let h = layer.hidden();
            let bound = 1.0 / (h as f64).sqrt();
            let dist = Uniform::new_inclusive(-bound, bound).expect("bound is finite");
            layer.w.mapv_inplace(|_| dist.sample(rng));
            layer.u.mapv_inplace(|_| dist.sample(rng));
            layer.b.slice_mut(s![h..2 * h]).fill(1.0);
        }
        let fan_in = model.w_out.ncols();
        let bound = 1.0 / (fan_in as f64).sqrt();
        let dist = Uniform::new_inclusive(-bound, bound).expect("bound is finite");
        model.w_out.mapv_inplace(|_| dist.sample(rng));
        Ok(model)
    }

    pub fn zeros_like(&self) -> Self {
        Self::zeros(self.config.clone()).expect("config already validated")
    }

    pub fn parameter_count(&self) -> usize {
        self.tensors().iter().map(|(_, t)| t.len()).sum()
    }

    /// Named flat views of every parameter tensor, in a fixed order.
    pub fn tensors(&self) -> Vec<(String, &[f64])> {
        let mut out = Vec::new();
        for (l, layer) in self.layers.iter().enumerate() {
            out.push((format!("layer{l}.w"), layer.w.as_slice().expect("standard layout")));
            out.push((format!("layer{l}.u"), layer.u.as_slice().expect("standard layout")));
            out.push((format!("layer{l}.b"), layer.b.as_slice().expect("standard layout")));
        }
        out.push(("out.w".into(), self.w_out.as_slice().expect("standard layout")));
        out.push(("out.b".into(), self.b_out.as_slice().expect("standard layout")));
        out
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out: Vec<&mut [f64]> = Vec::new();
        for layer in &mut self.layers {
            out.push(layer.w.as_slice_mut().expect("standard layout"));
            out.push(layer.u.as_slice_mut().expect("standard layout"));
            out.push(layer.b.as_slice_mut().expect("standard layout"));
        }
        out.push(self.w_out.as_slice_mut().expect("standard layout"));
        out.push(self.b_out.as_slice_mut().expect("standard layout"));
        out
    }

    /// Shape of each tensor, matching the order of [`Self::tensors`].
    pub fn tensor_shapes(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for layer in &self.layers {
            out.push(layer.w.dim());
            out.push(layer.u.dim());
            out.push((1, layer.b.len()));
        }
        out.push(self.w_out.dim());
        out.push((1, self.b_out.len()));
        out
    }

    fn check_window(&self, window: &Window) -> Result<()> {
        let (t, n) = window.dim();
        if t == 0 || n != self.config.input_size {
            return Err(Error::Shape(format!(
                "window is {t}×{n}, model expects T×{}",
                self.config.input_size
            )));
        }
        Ok(())
    }

    /// Inference-mode forward pass: one location per input row.
    pub fn forward(&self, window: &Window) -> Result<Window> {
        self.check_window(window)?;
        let (out, _) = self.run(window, None::<&mut rand::rngs::ThreadRng>, false);
        Ok(out)
    }

    /// Forward pass keeping the trace. Dropout is applied when `rng` is
    /// given and the configured rate is non-zero.
    pub(crate) fn forward_trace<R: Rng + ?Sized>(
        &self,
        window: &Window,
        rng: Option<&mut R>,
    ) -> Result<(Window, Trace)> {
        self.check_window(window)?;
        let (out, trace) = self.run(window, rng, true);
        Ok((out, trace.expect("trace requested")))
    }

    fn run<R: Rng + ?Sized>(
        &self,
        window: &Window,
        mut rng: Option<&mut R>,
        keep: bool,
    ) -> (Window, Option<Trace>) {
        let steps_n = window.nrows();
        let mut h: Vec<Array1<f64>> = self.layers.iter().map(|l| Array1::zeros(l.hidden())).collect();
        let mut c = h.clone();
        let mut out = Array2::zeros((steps_n, 2));
        let mut trace = keep.then(|| Trace {
            steps: Vec::with_capacity(steps_n),
            masks: Vec::with_capacity(steps_n),
            head_in: Vec::with_capacity(steps_n),
        });
        let p = self.config.dropout;
        let n_layers = self.layers.len();

        for t in 0..steps_n {
            let mut x = window.row(t).to_owned();
            let mut step_caches = Vec::with_capacity(n_layers);
            let mut step_masks = Vec::with_capacity(n_layers);
            for (l, layer) in self.layers.iter().enumerate() {
                let hd = layer.hidden();
                let z = layer.w.dot(&x) + layer.u.dot(&h[l]) + &layer.b;
                let i = z.slice(s![0..hd]).mapv(sigmoid);
                let f = z.slice(s![hd..2 * hd]).mapv(sigmoid);
                let g = z.slice(s![2 * hd..3 * hd]).mapv(f64::tanh);
                let o = z.slice(s![3 * hd..4 * hd]).mapv(sigmoid);
                let c_new = &f * &c[l] + &i * &g;
                let tanh_c = c_new.mapv(f64::tanh);
                let h_new = &o * &tanh_c;
                if keep {
                    step_caches.push(StepCache {
                        x: x.clone(),
                        h_prev: h[l].clone(),
                        c_prev: c[l].clone(),
                        i,
                        f,
                        g,
                        o,
                        tanh_c,
                    });
                }
                c[l] = c_new;
                h[l] = h_new;
                x = h[l].clone();
                let mask = match rng.as_deref_mut() {
                    Some(r) if p > 0.0 && l + 1 < n_layers => {
                        let keep_scale = 1.0 / (1.0 - p);
                        let m = Array1::from_shape_fn(hd, |_| {
                            if r.random::<f64>() < p {
                                0.0
                            } else {
                                keep_scale
                            }
                        });
                        x = &x * &m;
                        Some(m)
                    }
                    _ => None,
                };
                step_masks.push(mask);
            }
            let y = self.w_out.dot(&x) + &self.b_out;
            out.row_mut(t).assign(&y);
            if let Some(tr) = trace.as_mut() {
                tr.steps.push(step_caches);
                tr.masks.push(step_masks);
                tr.head_in.push(x);
            }
        }
        (out, trace)
    }

    /// Gradients of a loss with respect to every parameter, given the loss
    /// gradient `d_out` with respect to the outputs.
    pub(crate) fn backward(&self, trace: &Trace, d_out: &Window) -> Self {
        let mut grads = self.zeros_like();
        let steps_n = d_out.nrows();
        let n_layers = self.layers.len();
        let mut dh_next: Vec<Array1<f64>> =
            self.layers.iter().map(|l| Array1::zeros(l.hidden())).collect();
        let mut dc_next = dh_next.clone();

        for t in (0..steps_n).rev() {
            let dy = d_out.row(t);
            outer_add(&mut grads.w_out, dy, trace.head_in[t].view());
            grads.b_out += &dy;
            // gradient flowing into the top of the stack at step t
            let mut d_above = self.w_out.t().dot(&dy);

            for l in (0..n_layers).rev() {
                let layer = &self.layers[l];
                let cache = &trace.steps[t][l];
                if let Some(m) = &trace.masks[t][l] {
                    d_above = &d_above * m;
                }
                let dh = &d_above + &dh_next[l];
                let d_o = &dh * &cache.tanh_c;
                let dc = &dh * &cache.o * &cache.tanh_c.mapv(|v| 1.0 - v * v) + &dc_next[l];
                let d_i = &dc * &cache.g;
                let d_g = &dc * &cache.i;
                let d_f = &dc * &cache.c_prev;
                dc_next[l] = &dc * &cache.f;

                let hd = layer.hidden();
                let mut dz = Array1::zeros(4 * hd);
                dz.slice_mut(s![0..hd])
                    .assign(&(&d_i * &cache.i.mapv(|v| v * (1.0 - v))));
                dz.slice_mut(s![hd..2 * hd])
                    .assign(&(&d_f * &cache.f.mapv(|v| v * (1.0 - v))));
                dz.slice_mut(s![2 * hd..3 * hd])
                    .assign(&(&d_g * &cache.g.mapv(|v| 1.0 - v * v)));
                dz.slice_mut(s![3 * hd..4 * hd])
                    .assign(&(&d_o * &cache.o.mapv(|v| v * (1.0 - v))));

                let g = &mut grads.layers[l];
                outer_add(&mut g.w, dz.view(), cache.x.view());
                outer_add(&mut g.u, dz.view(), cache.h_prev.view());
                g.b += &dz;
                dh_next[l] = layer.u.t().dot(&dz);
                d_above = layer.w.t().dot(&dz);
            }
        }
        grads
    }

    /// `self += scale * other`, tensor by tensor.
    pub(crate) fn add_scaled(&mut self, other: &Self, scale: f64) {
        for (dst, src) in self.tensors_mut().into_iter().zip(other.tensors()) {
            for (d, s) in dst.iter_mut().zip(src.1) {
                *d += scale * s;
            }
        }
    }
}

fn outer_add(acc: &mut Array2<f64>, col: ArrayView1<f64>, row: ArrayView1<f64>) {
    let col2 = col.insert_axis(Axis(1));
    let row2 = row.insert_axis(Axis(0));
    *acc += &col2.dot(&row2);
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn tiny_config() -> LstmConfig {
        LstmConfig {
            memory_length: 3,
            input_size: 2,
            hidden_sizes: vec![4],
            dropout: 0.0,
            learning_rate: 1e-3,
        }
    }

    #[test]
    fn zero_model_outputs_bias() {
        let mut m = PmimoLstm::zeros(tiny_config()).unwrap();
        m.b_out = array![1.5, -2.0];
        let out = m.forward(&array![[0.3, 0.1], [0.9, 0.4], [0.2, 0.2]]).unwrap();
        for row in out.rows() {
            assert_eq!(row.to_vec(), vec![1.5, -2.0]);
        }
    }

    #[test]
    fn shape_mismatch() {
        let m = PmimoLstm::zeros(tiny_config()).unwrap();
        assert!(m.forward(&Array2::zeros((3, 5))).is_err());
    }

    #[test]
    fn parameter_count_closed_form() {
        for hidden in [vec![], vec![4], vec![7, 3], vec![100, 100]] {
            let cfg = LstmConfig {
                hidden_sizes: hidden,
                input_size: 5,
                ..tiny_config()
            };
            let m = PmimoLstm::zeros(cfg.clone()).unwrap();
            assert_eq!(m.parameter_count(), cfg.parameter_count());
        }
        // 4·100·(5+100+1) + 4·100·(100+100+1) + 2·101
        assert_eq!(LstmConfig::full_size(5).parameter_count(), 42_400 + 80_400 + 202);
    }

    #[test]
    fn inference_is_deterministic() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let cfg = LstmConfig {
            dropout: 0.5,
            hidden_sizes: vec![6, 5],
            ..tiny_config()
        };
        let m = PmimoLstm::new(cfg, &mut rng).unwrap();
        let w = array![[0.5, 0.5], [0.5, 0.5], [0.5, 0.5]];
        let a = m.forward(&w).unwrap();
        let b = m.forward(&w).unwrap();
        assert_eq!(a, b);
    }
}
