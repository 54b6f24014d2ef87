use rand::Rng;

use super::adapter::{LowRankAdapter, Matrix};
use super::latent::{Latent, VelocityField, LATENT_CHANNELS};
use crate::error::{check_unit, Error, Result};

/// Per-position input: noisy latent, condition latent, `t`, `s`.
pub const INPUT_FEATURES: usize = 2 * LATENT_CHANNELS + 2;
pub const DEFAULT_HIDDEN: usize = 64;
pub const DEFAULT_RANK: usize = 4;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct NetDims {
    pub input: usize,
    pub hidden: usize,
    pub output: usize,
    pub rank: usize,
}

impl NetDims {
    pub fn new(hidden: usize, rank: usize) -> Self {
        Self {
            input: INPUT_FEATURES,
            hidden,
            output: LATENT_CHANNELS,
            rank,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DenseLayer {
    pub weight: LowRankAdapter,
    pub bias: Vec<f64>,
}

/// Velocity predictor applied independently at every latent position:
/// `tanh` hidden layer then linear output, both through strength-scaled
/// low-rank adapters.
#[derive(Clone, Debug, PartialEq)]
pub struct VelocityNet {
    pub hidden: DenseLayer,
    pub output: DenseLayer,
}

/// Parameter tensors in storage order.
pub const TENSOR_NAMES: [&str; 8] = [
    "hidden.weight",
    "hidden.bias",
    "hidden.lora_a",
    "hidden.lora_b",
    "output.weight",
    "output.bias",
    "output.lora_a",
    "output.lora_b",
];

/// Indices into [`TENSOR_NAMES`] of the frozen base tensors.
pub const BASE_TENSORS: [usize; 4] = [0, 1, 4, 5];
/// Indices into [`TENSOR_NAMES`] of the adapter factors.
pub const ADAPTER_TENSORS: [usize; 4] = [2, 3, 6, 7];

impl VelocityNet {
    pub fn zeros(dims: NetDims) -> Self {
        let layer = |n, m| DenseLayer {
            weight: LowRankAdapter::new(
                Matrix::zeros(n, m),
                Matrix::zeros(n, dims.rank),
                Matrix::zeros(dims.rank, m),
            )
            .expect("consistent shapes"),
            bias: vec![0.0; n],
        };
        Self {
            hidden: layer(dims.hidden, dims.input),
            output: layer(dims.output, dims.hidden),
        }
    }

    /// Scaled-Gaussian base weights, zero biases, zero-update adapters.
    pub fn init<R: Rng + ?Sized>(dims: NetDims, rng: &mut R) -> Self {
        let w1 = Matrix::random(dims.hidden, dims.input, 1.0 / (dims.input as f64).sqrt(), rng);
        let w2 = Matrix::random(dims.output, dims.hidden, 1.0 / (dims.hidden as f64).sqrt(), rng);
        Self {
            hidden: DenseLayer {
                weight: LowRankAdapter::with_zero_update(w1, dims.rank, rng),
                bias: vec![0.0; dims.hidden],
            },
            output: DenseLayer {
                weight: LowRankAdapter::with_zero_update(w2, dims.rank, rng),
                bias: vec![0.0; dims.output],
            },
        }
    }

    pub fn dims(&self) -> NetDims {
        NetDims {
            input: self.hidden.weight.base.cols,
            hidden: self.hidden.weight.base.rows,
            output: self.output.weight.base.rows,
            rank: self.hidden.weight.rank(),
        }
    }

    pub fn tensors(&self) -> [&[f64]; 8] {
        [
            &self.hidden.weight.base.data,
            &self.hidden.bias,
            &self.hidden.weight.a.data,
            &self.hidden.weight.b.data,
            &self.output.weight.base.data,
            &self.output.bias,
            &self.output.weight.a.data,
            &self.output.weight.b.data,
        ]
    }

    pub fn tensors_mut(&mut self) -> [&mut Vec<f64>; 8] {
        [
            &mut self.hidden.weight.base.data,
            &mut self.hidden.bias,
            &mut self.hidden.weight.a.data,
            &mut self.hidden.weight.b.data,
            &mut self.output.weight.base.data,
            &mut self.output.bias,
            &mut self.output.weight.a.data,
            &mut self.output.weight.b.data,
        ]
    }

    /// `v_θ(z_t, cond, t, s)` with adapters scaled by `s`.
    pub fn forward(&self, z_t: &Latent, cond: &Latent, t: f64, s: f64) -> Result<VelocityField> {
        check_unit("strength", s)?;
        self.run(z_t, cond, t, s, s, None)
    }

    /// Same inputs, adapters switched off (the frozen base network).
    pub fn forward_base(&self, z_t: &Latent, cond: &Latent, t: f64, s: f64) -> Result<VelocityField> {
        check_unit("strength", s)?;
        self.run(z_t, cond, t, s, 0.0, None)
    }

    /// Forward pass that also accumulates `∂L/∂θ` into `grads`, given a
    /// closure mapping the prediction to `(loss, ∂L/∂v)`.
    pub(crate) fn forward_backward(
        &self,
        z_t: &Latent,
        cond: &Latent,
        t: f64,
        s: f64,
        adapter_scale: f64,
        loss: impl FnOnce(&VelocityField) -> Result<(f64, Vec<f64>)>,
        grads: &mut VelocityNet,
    ) -> Result<f64> {
        let pred = self.run(z_t, cond, t, s, adapter_scale, None)?;
        let (value, dv) = loss(&pred)?;
        self.run(z_t, cond, t, s, adapter_scale, Some((&dv, grads)))?;
        Ok(value)
    }

    fn run(
        &self,
        z_t: &Latent,
        cond: &Latent,
        t: f64,
        s: f64,
        scale: f64,
        mut backward: Option<(&[f64], &mut VelocityNet)>,
    ) -> Result<VelocityField> {
        if !z_t.same_shape(cond) {
            return Err(Error::precondition("noisy latent and condition differ in shape"));
        }
        let dims = self.dims();
        let mut x = vec![0.0; dims.input];
        let mut pre = vec![0.0; dims.hidden];
        let mut h = vec![0.0; dims.hidden];
        let mut tmp1 = vec![0.0; dims.rank];
        let mut tmp2 = vec![0.0; dims.rank];
        let mut out = vec![0.0; dims.output];
        let mut g_h = vec![0.0; dims.hidden];
        let mut u = vec![0.0; dims.rank];
        let mut result = Vec::with_capacity(z_t.data.len());

        for p in 0..z_t.positions() {
            let off = p * LATENT_CHANNELS;
            x[..LATENT_CHANNELS].copy_from_slice(&z_t.data[off..off + LATENT_CHANNELS]);
            x[LATENT_CHANNELS..2 * LATENT_CHANNELS].copy_from_slice(&cond.data[off..off + LATENT_CHANNELS]);
            x[2 * LATENT_CHANNELS] = t;
            x[2 * LATENT_CHANNELS + 1] = s;

            self.hidden.weight.apply(scale, &x, &mut tmp1, &mut pre);
            for ((hv, pv), b) in h.iter_mut().zip(&pre).zip(&self.hidden.bias) {
                *hv = (pv + b).tanh();
            }
            self.output.weight.apply(scale, &h, &mut tmp2, &mut out);
            for (o, b) in out.iter_mut().zip(&self.output.bias) {
                *o += b;
            }
            result.extend_from_slice(&out);

            if let Some((dv, grads)) = backward.as_mut() {
                let g_out = &dv[off..off + LATENT_CHANNELS];
                let (w2, a2, b2) = (&self.output.weight.base, &self.output.weight.a, &self.output.weight.b);
                for (gb, g) in grads.output.bias.iter_mut().zip(g_out) {
                    *gb += g;
                }
                grads.output.weight.base.add_outer(1.0, g_out, &h);
                grads.output.weight.a.add_outer(scale, g_out, &tmp2);
                u.iter_mut().for_each(|v| *v = 0.0);
                a2.mul_t_vec_add(g_out, &mut u);
                grads.output.weight.b.add_outer(scale, &u, &h);

                g_h.iter_mut().for_each(|v| *v = 0.0);
                w2.mul_t_vec_add(g_out, &mut g_h);
                if scale != 0.0 {
                    let su: Vec<f64> = u.iter().map(|v| scale * v).collect();
                    b2.mul_t_vec_add(&su, &mut g_h);
                }
                // Reuse g_h as the pre-activation gradient.
                for (g, hv) in g_h.iter_mut().zip(&h) {
                    *g *= 1.0 - hv * hv;
                }
                let g_pre = &g_h;
                let a1 = &self.hidden.weight.a;
                for (gb, g) in grads.hidden.bias.iter_mut().zip(g_pre) {
                    *gb += g;
                }
                grads.hidden.weight.base.add_outer(1.0, g_pre, &x);
                grads.hidden.weight.a.add_outer(scale, g_pre, &tmp1);
                u.iter_mut().for_each(|v| *v = 0.0);
                a1.mul_t_vec_add(g_pre, &mut u);
                grads.hidden.weight.b.add_outer(scale, &u, &x);
            }
        }
        VelocityField::new(z_t.height, z_t.width, result)
    }
}
