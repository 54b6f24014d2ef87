//! Binary model files.
//!
//! Layout (little-endian):
//!
//! ```text
//! "CLFM"            4 bytes magic
//! version           u16
//! input hidden output rank latent_factor latent_channels   6 × u32
//! tensors           f32 values, in TENSOR_NAMES order
//! ```

use std::path::Path;

use super::latent::{LATENT_CHANNELS, LATENT_FACTOR};
use super::net::{NetDims, VelocityNet, INPUT_FEATURES};
use crate::error::{Error, Result};

pub const MODEL_MAGIC: &[u8; 4] = b"CLFM";
pub const MODEL_VERSION: u16 = 1;
const HEADER_LEN: usize = 4 + 2 + 6 * 4;

pub fn model_to_bytes(net: &VelocityNet) -> Vec<u8> {
    let dims = net.dims();
    let mut out = Vec::with_capacity(HEADER_LEN + 4 * net.tensors().iter().map(|t| t.len()).sum::<usize>());
    out.extend_from_slice(MODEL_MAGIC);
    out.extend_from_slice(&MODEL_VERSION.to_le_bytes());
    for v in [
        dims.input,
        dims.hidden,
        dims.output,
        dims.rank,
        LATENT_FACTOR,
        LATENT_CHANNELS,
    ] {
        out.extend_from_slice(&(v as u32).to_le_bytes());
    }
    for tensor in net.tensors() {
        for &v in tensor {
            out.extend_from_slice(&(v as f32).to_le_bytes());
        }
    }
    out
}

pub fn model_from_bytes(bytes: &[u8]) -> Result<VelocityNet> {
    if bytes.len() < HEADER_LEN || &bytes[..4] != MODEL_MAGIC {
        return Err(Error::Data("not a model file (bad magic)".into()));
    }
    let version = u16::from_le_bytes([bytes[4], bytes[5]]);
    if version != MODEL_VERSION {
        return Err(Error::Data(format!(
            "unsupported model version {version}, expected {MODEL_VERSION}"
        )));
    }
    let field = |i: usize| {
        let o = 6 + 4 * i;
        u32::from_le_bytes(bytes[o..o + 4].try_into().expect("4 bytes")) as usize
    };
    let (input, hidden, output, rank, factor, channels) = (field(0), field(1), field(2), field(3), field(4), field(5));
    if input != INPUT_FEATURES || output != LATENT_CHANNELS || factor != LATENT_FACTOR || channels != LATENT_CHANNELS {
        return Err(Error::Data(format!(
            "model dims (input {input}, output {output}, factor {factor}, channels {channels}) do not match this build"
        )));
    }
    if hidden == 0 || rank == 0 || hidden > 1 << 16 || rank > 1 << 12 {
        return Err(Error::Data(format!(
            "implausible model dims hidden {hidden}, rank {rank}"
        )));
    }
    let mut net = VelocityNet::zeros(NetDims {
        input,
        hidden,
        output,
        rank,
    });
    let expected: usize = net.tensors().iter().map(|t| t.len()).sum();
    let body = &bytes[HEADER_LEN..];
    if body.len() != expected * 4 {
        return Err(Error::Data(format!(
            "model body has {} bytes, expected {}",
            body.len(),
            expected * 4
        )));
    }
    let mut values = body
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes")) as f64);
    for tensor in net.tensors_mut() {
        for slot in tensor.iter_mut() {
            *slot = values.next().expect("length checked");
        }
    }
    Ok(net)
}

pub fn save_model(path: impl AsRef<Path>, net: &VelocityNet) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, model_to_bytes(net)).map_err(|e| Error::io(path, e))
}

pub fn load_model(path: impl AsRef<Path>) -> Result<VelocityNet> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    model_from_bytes(&bytes)
}
