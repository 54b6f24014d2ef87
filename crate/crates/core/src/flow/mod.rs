//! Desk-scale flow matching: block-mean latent codec, a per-position velocity
//! network with strength-scaled low-rank adapters, standard and
//! misalignment-weighted losses, SGD training, and an Euler sampler.

mod adapter;
mod latent;
mod loss;
mod model;
mod net;
mod sample;
mod train;

pub use adapter::{LowRankAdapter, Matrix};
pub use latent::{
    decode, encode, interpolate_latent, velocity_target, Latent, LatentOrigin, VelocityField, LATENT_CHANNELS,
    LATENT_FACTOR,
};
pub use loss::{fm_loss, fm_loss_grad, wfm_loss, wfm_loss_grad};
pub use model::{load_model, model_from_bytes, model_to_bytes, save_model, MODEL_MAGIC, MODEL_VERSION};
pub use net::{
    DenseLayer, NetDims, VelocityNet, ADAPTER_TENSORS, BASE_TENSORS, DEFAULT_HIDDEN, DEFAULT_RANK, INPUT_FEATURES,
    TENSOR_NAMES,
};
pub use sample::{sample, sample_latent};
pub use train::{
    initial_net, sample_loss, sample_loss_grad, train, train_with_report, FlowSample, LossKind, TrainConfig,
    TrainExample, TrainReport, TRAIN_STRENGTHS,
};
