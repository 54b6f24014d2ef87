use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{check_unit, Error, Result};
use crate::image::{ColorSpace, ImageBuffer};

/// Spatial downscale factor of the block codec.
pub const LATENT_FACTOR: usize = 8;
/// Latent channels (linear RGB block means).
pub const LATENT_CHANNELS: usize = 3;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LatentOrigin {
    Encoded,
    Noise,
    Interpolated,
}

/// `h × w × C` latent grid, channel-interleaved.
#[derive(Clone, Debug, PartialEq)]
pub struct Latent {
    pub height: usize,
    pub width: usize,
    pub origin: LatentOrigin,
    pub data: Vec<f64>,
}

impl Latent {
    pub fn new(height: usize, width: usize, origin: LatentOrigin, data: Vec<f64>) -> Result<Self> {
        if data.len() != height * width * LATENT_CHANNELS {
            return Err(Error::precondition(format!(
                "latent data length {} does not match {height}x{width}x{LATENT_CHANNELS}",
                data.len()
            )));
        }
        Ok(Self {
            height,
            width,
            origin,
            data,
        })
    }

    pub fn filled(height: usize, width: usize, origin: LatentOrigin, value: f64) -> Self {
        Self {
            height,
            width,
            origin,
            data: vec![value; height * width * LATENT_CHANNELS],
        }
    }

    /// Standard-normal noise latent.
    pub fn noise<R: Rng + ?Sized>(height: usize, width: usize, rng: &mut R) -> Self {
        let data = (0..height * width * LATENT_CHANNELS)
            .map(|_| rng.sample::<f64, _>(StandardNormal))
            .collect();
        Self {
            height,
            width,
            origin: LatentOrigin::Noise,
            data,
        }
    }

    pub fn positions(&self) -> usize {
        self.height * self.width
    }

    pub fn same_shape(&self, other: &Latent) -> bool {
        self.height == other.height && self.width == other.width
    }
}

/// Per-position velocity, same layout as [`Latent`].
#[derive(Clone, Debug, PartialEq)]
pub struct VelocityField {
    pub height: usize,
    pub width: usize,
    pub data: Vec<f64>,
}

impl VelocityField {
    pub fn new(height: usize, width: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != height * width * LATENT_CHANNELS {
            return Err(Error::precondition("velocity data length does not match its shape"));
        }
        Ok(Self { height, width, data })
    }

    pub fn same_shape(&self, other: &VelocityField) -> bool {
        self.height == other.height && self.width == other.width
    }
}

/// Per-channel 8×8 block mean in linear RGB.
pub fn encode(img: &ImageBuffer) -> Result<Latent> {
    if img.channels() != LATENT_CHANNELS {
        return Err(Error::precondition("encode expects an RGB image"));
    }
    let (h, w) = (img.height(), img.width());
    if h % LATENT_FACTOR != 0 || w % LATENT_FACTOR != 0 {
        return Err(Error::precondition(format!(
            "image {h}x{w} is not divisible by the latent factor {LATENT_FACTOR}"
        )));
    }
    let lin = img.to_linear();
    let (lh, lw) = (h / LATENT_FACTOR, w / LATENT_FACTOR);
    let norm = (LATENT_FACTOR * LATENT_FACTOR) as f64;
    let mut data = vec![0f64; lh * lw * LATENT_CHANNELS];
    for y in 0..h {
        for x in 0..w {
            let cell = ((y / LATENT_FACTOR) * lw + x / LATENT_FACTOR) * LATENT_CHANNELS;
            for c in 0..LATENT_CHANNELS {
                data[cell + c] += lin.get(y, x, c) as f64;
            }
        }
    }
    data.iter_mut().for_each(|v| *v /= norm);
    Latent::new(lh, lw, LatentOrigin::Encoded, data)
}

/// Nearest-neighbour 8× upsample, clipped to `[0, 1]`, in linear RGB.
pub fn decode(z: &Latent) -> ImageBuffer {
    let (h, w) = (z.height * LATENT_FACTOR, z.width * LATENT_FACTOR);
    ImageBuffer::from_fn(h, w, LATENT_CHANNELS, ColorSpace::Linear, |y, x, c| {
        let v = z.data[((y / LATENT_FACTOR) * z.width + x / LATENT_FACTOR) * LATENT_CHANNELS + c];
        if v.is_finite() {
            v.clamp(0.0, 1.0) as f32
        } else {
            0.0
        }
    })
}

/// `z_t = (1 - t) z₀ + t z₁`.
pub fn interpolate_latent(z0: &Latent, z1: &Latent, t: f64) -> Result<Latent> {
    check_unit("t", t)?;
    if !z0.same_shape(z1) {
        return Err(Error::precondition("latents differ in shape"));
    }
    let data = z0
        .data
        .iter()
        .zip(&z1.data)
        .map(|(&a, &b)| (1.0 - t) * a + t * b)
        .collect();
    Latent::new(z0.height, z0.width, LatentOrigin::Interpolated, data)
}

/// `v* = z₁ - z₀`.
pub fn velocity_target(z0: &Latent, z1: &Latent) -> Result<VelocityField> {
    if !z0.same_shape(z1) {
        return Err(Error::precondition("latents differ in shape"));
    }
    VelocityField::new(
        z0.height,
        z0.width,
        z0.data.iter().zip(&z1.data).map(|(&a, &b)| b - a).collect(),
    )
}
