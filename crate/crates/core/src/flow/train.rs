use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::latent::{encode, interpolate_latent, velocity_target, Latent};
use super::loss::{fm_loss_grad, wfm_loss_grad};
use super::net::{NetDims, VelocityNet, ADAPTER_TENSORS, BASE_TENSORS, DEFAULT_HIDDEN, DEFAULT_RANK};
use crate::error::{Error, Result};
use crate::image::ImageBuffer;
use crate::retinex::StrengthGroup;
use crate::weights::{to_latent, WeightMap};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LossKind {
    Fm,
    Wfm,
}

impl std::str::FromStr for LossKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fm" => Ok(Self::Fm),
            "wfm" => Ok(Self::Wfm),
            other => Err(Error::Config(format!("unknown loss {other:?}, expected fm or wfm"))),
        }
    }
}

/// Strengths paired with pseudo-targets during adapter training.
pub const TRAIN_STRENGTHS: [f64; 5] = [0.2, 0.4, 0.6, 0.8, 1.0];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    /// Adapter-phase SGD steps.
    pub steps: usize,
    /// Base-phase SGD steps; `None` means the same as `steps`.
    pub base_steps: Option<usize>,
    pub batch_size: usize,
    pub seed: u64,
    pub loss: LossKind,
    pub strengths: Vec<f64>,
    pub hidden: usize,
    pub rank: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.2,
            steps: 2000,
            base_steps: None,
            batch_size: 8,
            seed: 0,
            loss: LossKind::Wfm,
            strengths: TRAIN_STRENGTHS.to_vec(),
            hidden: DEFAULT_HIDDEN,
            rank: DEFAULT_RANK,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Config(format!(
                "learning rate must be positive, got {}",
                self.learning_rate
            )));
        }
        if self.batch_size == 0 || self.hidden == 0 || self.rank == 0 {
            return Err(Error::Config(
                "batch size, hidden width and rank must be positive".into(),
            ));
        }
        if self.strengths.is_empty() || self.strengths.iter().any(|s| !(*s > 0.0 && *s <= 1.0)) {
            return Err(Error::Config(
                "training strengths must be non-empty and in (0, 1]".into(),
            ));
        }
        Ok(())
    }

    pub fn dims(&self) -> NetDims {
        NetDims::new(self.hidden, self.rank)
    }

    fn base_steps(&self) -> usize {
        self.base_steps.unwrap_or(self.steps)
    }
}

/// One source pair with its strength group and image-resolution weight maps.
#[derive(Clone, Debug)]
pub struct TrainExample {
    pub input: ImageBuffer,
    pub group: StrengthGroup,
    pub weights: Vec<(f64, WeightMap)>,
}

/// One flow-matching draw: noise, clean target, condition, time, strength.
#[derive(Clone, Debug)]
pub struct FlowSample {
    pub z0: Latent,
    pub z1: Latent,
    pub cond: Latent,
    pub t: f64,
    pub s: f64,
}

/// Loss of one draw. `weights` (latent resolution) selects wFM over FM.
pub fn sample_loss(
    net: &VelocityNet,
    sample: &FlowSample,
    weights: Option<&WeightMap>,
    adapter_scale: f64,
) -> Result<f64> {
    Ok(sample_loss_grad(net, sample, weights, adapter_scale)?.0)
}

/// Loss of one draw and its gradient with respect to every network tensor.
pub fn sample_loss_grad(
    net: &VelocityNet,
    sample: &FlowSample,
    weights: Option<&WeightMap>,
    adapter_scale: f64,
) -> Result<(f64, VelocityNet)> {
    let mut grads = VelocityNet::zeros(net.dims());
    let loss = accumulate(net, sample, weights, adapter_scale, &mut grads)?;
    Ok((loss, grads))
}

fn accumulate(
    net: &VelocityNet,
    sample: &FlowSample,
    weights: Option<&WeightMap>,
    adapter_scale: f64,
    grads: &mut VelocityNet,
) -> Result<f64> {
    let z_t = interpolate_latent(&sample.z0, &sample.z1, sample.t)?;
    let target = velocity_target(&sample.z0, &sample.z1)?;
    net.forward_backward(
        &z_t,
        &sample.cond,
        sample.t,
        sample.s,
        adapter_scale,
        |pred| match weights {
            Some(w) => wfm_loss_grad(pred, &target, w),
            None => fm_loss_grad(pred, &target),
        },
        grads,
    )
}

struct Prepared {
    cond: Latent,
    /// Per configured strength: target latent and latent-resolution weights.
    targets: Vec<(Latent, Option<WeightMap>)>,
}

fn prepare(data: &[TrainExample], cfg: &TrainConfig) -> Result<Vec<Prepared>> {
    data.iter()
        .map(|ex| {
            let cond = encode(&ex.input)?;
            let targets = cfg
                .strengths
                .iter()
                .map(|&s| {
                    let entry = ex
                        .group
                        .entries
                        .iter()
                        .find(|e| (e.strength - s).abs() < 1e-9)
                        .ok_or_else(|| Error::Data(format!("pair {} has no target at s = {s}", ex.group.pair_id)))?;
                    let z1 = encode(&entry.image)?;
                    let w = match cfg.loss {
                        LossKind::Fm => None,
                        LossKind::Wfm => {
                            let (_, w) = ex.weights.iter().find(|(ws, _)| (ws - s).abs() < 1e-9).ok_or_else(|| {
                                Error::Data(format!("pair {} has no weight map at s = {s}", ex.group.pair_id))
                            })?;
                            Some(to_latent(w, z1.height, z1.width)?)
                        }
                    };
                    Ok((z1, w))
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(Prepared { cond, targets })
        })
        .collect()
}

#[derive(Clone, Debug, Default)]
pub struct TrainReport {
    /// Mean batch loss per base-phase step.
    pub base_losses: Vec<f64>,
    /// Mean batch loss per adapter-phase step.
    pub adapter_losses: Vec<f64>,
}

/// The network a run with `cfg` starts from.
pub fn initial_net(cfg: &TrainConfig) -> VelocityNet {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    VelocityNet::init(cfg.dims(), &mut rng)
}

pub fn train(data: &[TrainExample], cfg: &TrainConfig) -> Result<VelocityNet> {
    Ok(train_with_report(data, cfg)?.0)
}

/// Two-phase training.
///
/// 1. Base phase: adapters off, the full base learns the identity flow
///    `I₀ → I₀` with the standard loss; the base is then frozen.
/// 2. Adapter phase: only the low-rank factors train, at adapter scale `s`,
///    toward `encode(I_s)` with the configured loss.
///
/// Plain SGD, single-threaded, fully determined by `cfg.seed`.
pub fn train_with_report(data: &[TrainExample], cfg: &TrainConfig) -> Result<(VelocityNet, TrainReport)> {
    cfg.validate()?;
    if data.is_empty() {
        return Err(Error::Data("training dataset is empty".into()));
    }
    let prepared = prepare(data, cfg)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut net = VelocityNet::init(cfg.dims(), &mut rng);
    let mut report = TrainReport::default();

    for step in 0..cfg.base_steps() {
        let loss = sgd_step(&mut net, &prepared, cfg, &mut rng, Phase::Base)?;
        check_finite(loss, "base", step)?;
        report.base_losses.push(loss);
    }
    for step in 0..cfg.steps {
        let loss = sgd_step(&mut net, &prepared, cfg, &mut rng, Phase::Adapter)?;
        check_finite(loss, "adapter", step)?;
        report.adapter_losses.push(loss);
    }
    Ok((net, report))
}

fn check_finite(loss: f64, phase: &str, step: usize) -> Result<()> {
    if loss.is_finite() {
        Ok(())
    } else {
        Err(Error::Data(format!(
            "training diverged in the {phase} phase at step {step} (loss {loss}); lower the learning rate"
        )))
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Phase {
    Base,
    Adapter,
}

fn sgd_step(
    net: &mut VelocityNet,
    data: &[Prepared],
    cfg: &TrainConfig,
    rng: &mut ChaCha8Rng,
    phase: Phase,
) -> Result<f64> {
    let mut grads = VelocityNet::zeros(net.dims());
    let mut total = 0.0;
    for _ in 0..cfg.batch_size {
        let ex = &data[rng.random_range(0..data.len())];
        let k = rng.random_range(0..cfg.strengths.len());
        let s = cfg.strengths[k];
        let t: f64 = rng.random();
        let z0 = Latent::noise(ex.cond.height, ex.cond.width, rng);
        let (z1, weights, scale) = match phase {
            Phase::Base => (ex.cond.clone(), None, 0.0),
            Phase::Adapter => {
                let (z1, w) = &ex.targets[k];
                (z1.clone(), w.as_ref(), s)
            }
        };
        let sample = FlowSample {
            z0,
            z1,
            cond: ex.cond.clone(),
            t,
            s,
        };
        total += accumulate(net, &sample, weights, scale, &mut grads)?;
    }
    let step = cfg.learning_rate / cfg.batch_size as f64;
    let trainable = match phase {
        Phase::Base => BASE_TENSORS,
        Phase::Adapter => ADAPTER_TENSORS,
    };
    let g = grads.tensors();
    let p = net.tensors_mut();
    for i in trainable {
        for (param, grad) in p[i].iter_mut().zip(g[i]) {
            *param -= step * grad;
        }
    }
    Ok(total / cfg.batch_size as f64)
}
