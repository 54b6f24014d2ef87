//! Image and scalar-map containers, sRGB transfer, and luminance.
//!
//! Pixel data is stored as row-major `f32`, interleaved by channel. Values of
//! color images stay in `[0, 1]`; single-channel maps derived from gradients or
//! distances carry [`ColorSpace::Map`] (or are [`ScalarMap`]s) and document
//! their own range.

use std::borrow::Cow;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Lower clamp used for every log and division in the crate.
pub const EPSILON: f32 = 1e-4;

/// Smallest height/width accepted by the pipeline entry points.
pub const MIN_PIPELINE_DIM: usize = 8;

/// Rec. 709 / sRGB luminance weights.
pub const LUMA_WEIGHTS: [f64; 3] = [0.2126, 0.7152, 0.0722];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ColorSpace {
    Srgb,
    Linear,
    /// Single-channel physical quantity (illumination, edge response, weight, ...).
    Map,
}

/// H×W×C floating image.
#[derive(Clone, Debug, PartialEq)]
pub struct ImageBuffer {
    height: usize,
    width: usize,
    channels: usize,
    space: ColorSpace,
    data: Vec<f32>,
}

impl ImageBuffer {
    pub fn new(height: usize, width: usize, channels: usize, space: ColorSpace, data: Vec<f32>) -> Result<Self> {
        if channels != 1 && channels != 3 {
            return Err(Error::precondition(format!(
                "images have 1 or 3 channels, got {channels}"
            )));
        }
        if height == 0 || width == 0 {
            return Err(Error::precondition("image dimensions must be non-zero"));
        }
        if data.len() != height * width * channels {
            return Err(Error::precondition(format!(
                "data length {} does not match {height}x{width}x{channels}",
                data.len()
            )));
        }
        if space == ColorSpace::Map && channels != 1 {
            return Err(Error::precondition("map images are single-channel"));
        }
        if let Some(bad) = data.iter().find(|v| !v.is_finite()) {
            return Err(Error::precondition(format!("non-finite pixel value {bad}")));
        }
        Ok(Self {
            height,
            width,
            channels,
            space,
            data,
        })
    }

    /// Image with every value set to `value`.
    pub fn filled(height: usize, width: usize, channels: usize, space: ColorSpace, value: f32) -> Self {
        Self::new(height, width, channels, space, vec![value; height * width * channels])
            .expect("filled image has consistent shape")
    }

    /// Builds an image by evaluating `f(y, x, c)` for every sample.
    pub fn from_fn(
        height: usize,
        width: usize,
        channels: usize,
        space: ColorSpace,
        mut f: impl FnMut(usize, usize, usize) -> f32,
    ) -> Self {
        let mut data = Vec::with_capacity(height * width * channels);
        for y in 0..height {
            for x in 0..width {
                for c in 0..channels {
                    data.push(f(y, x, c));
                }
            }
        }
        Self::new(height, width, channels, space, data).expect("from_fn image has consistent shape")
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn space(&self) -> ColorSpace {
        self.space
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f32> {
        self.data
    }

    #[inline]
    pub fn get(&self, y: usize, x: usize, c: usize) -> f32 {
        self.data[(y * self.width + x) * self.channels + c]
    }

    pub fn same_shape(&self, other: &ImageBuffer) -> bool {
        self.height == other.height && self.width == other.width && self.channels == other.channels
    }

    /// Returns a copy with a different space tag. Values are not touched.
    pub fn retagged(&self, space: ColorSpace) -> Result<Self> {
        Self::new(self.height, self.width, self.channels, space, self.data.clone())
    }

    /// Applies `f` to every sample, keeping shape and tag.
    pub fn map_values(&self, f: impl Fn(f32) -> f32) -> Result<Self> {
        Self::new(
            self.height,
            self.width,
            self.channels,
            self.space,
            self.data.iter().map(|&v| f(v)).collect(),
        )
    }

    /// Rejects images smaller than [`MIN_PIPELINE_DIM`] in either direction.
    pub fn check_pipeline_size(&self) -> Result<()> {
        if self.height < MIN_PIPELINE_DIM || self.width < MIN_PIPELINE_DIM {
            return Err(Error::precondition(format!(
                "image is {}x{}, pipeline needs at least {MIN_PIPELINE_DIM}x{MIN_PIPELINE_DIM}",
                self.height, self.width
            )));
        }
        Ok(())
    }

    /// Copy in linear RGB; a no-op borrow when already linear or a map.
    pub fn to_linear(&self) -> Cow<'_, ImageBuffer> {
        match self.space {
            ColorSpace::Srgb => Cow::Owned(srgb_to_linear(self).expect("space checked")),
            _ => Cow::Borrowed(self),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MapRole {
    Luminance,
    LogLuminance,
    Illumination,
    Edge,
    Highpass,
    Weight,
    Distance,
    Generic,
}

/// Single-channel floating map (luminance, illumination, edge, weight, distance).
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarMap {
    height: usize,
    width: usize,
    role: MapRole,
    data: Vec<f32>,
}

impl ScalarMap {
    pub fn new(height: usize, width: usize, role: MapRole, data: Vec<f32>) -> Result<Self> {
        if height == 0 || width == 0 {
            return Err(Error::precondition("map dimensions must be non-zero"));
        }
        if data.len() != height * width {
            return Err(Error::precondition(format!(
                "map data length {} does not match {height}x{width}",
                data.len()
            )));
        }
        Ok(Self {
            height,
            width,
            role,
            data,
        })
    }

    pub fn filled(height: usize, width: usize, role: MapRole, value: f32) -> Self {
        Self::new(height, width, role, vec![value; height * width]).expect("consistent shape")
    }

    pub fn from_fn(height: usize, width: usize, role: MapRole, mut f: impl FnMut(usize, usize) -> f32) -> Self {
        let mut data = Vec::with_capacity(height * width);
        for y in 0..height {
            for x in 0..width {
                data.push(f(y, x));
            }
        }
        Self::new(height, width, role, data).expect("consistent shape")
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn role(&self) -> MapRole {
        self.role
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f32> {
        self.data
    }

    #[inline]
    pub fn get(&self, y: usize, x: usize) -> f32 {
        self.data[y * self.width + x]
    }

    pub fn same_shape(&self, other: &ScalarMap) -> bool {
        self.height == other.height && self.width == other.width
    }

    pub fn with_role(mut self, role: MapRole) -> Self {
        self.role = role;
        self
    }

    /// Mean accumulated in `f64`.
    pub fn mean(&self) -> f64 {
        self.data.iter().map(|&v| v as f64).sum::<f64>() / self.data.len() as f64
    }

    pub fn min(&self) -> f32 {
        self.data.iter().copied().fold(f32::INFINITY, f32::min)
    }

    pub fn max(&self) -> f32 {
        self.data.iter().copied().fold(f32::NEG_INFINITY, f32::max)
    }

    /// Wraps the map as a single-channel [`ColorSpace::Map`] image.
    pub fn to_image(&self) -> Result<ImageBuffer> {
        ImageBuffer::new(self.height, self.width, 1, ColorSpace::Map, self.data.clone())
    }
}

/// sRGB electro-optical transfer for a single value (IEC 61966-2-1).
#[inline]
pub fn srgb_decode(v: f32) -> f32 {
    let v = v as f64;
    let out = if v <= 0.04045 {
        v / 12.92
    } else {
        ((v + 0.055) / 1.055).powf(2.4)
    };
    out as f32
}

/// Inverse of [`srgb_decode`].
#[inline]
pub fn srgb_encode(v: f32) -> f32 {
    let v = v as f64;
    let out = if v <= 0.0031308 {
        v * 12.92
    } else {
        1.055 * v.powf(1.0 / 2.4) - 0.055
    };
    out.clamp(0.0, 1.0) as f32
}

pub fn srgb_to_linear(img: &ImageBuffer) -> Result<ImageBuffer> {
    if img.space != ColorSpace::Srgb {
        return Err(Error::precondition(format!(
            "srgb_to_linear expects an sRGB image, got {:?}",
            img.space
        )));
    }
    let data = img.data.iter().map(|&v| srgb_decode(v)).collect();
    ImageBuffer::new(img.height, img.width, img.channels, ColorSpace::Linear, data)
}

pub fn linear_to_srgb(img: &ImageBuffer) -> Result<ImageBuffer> {
    if img.space != ColorSpace::Linear {
        return Err(Error::precondition(format!(
            "linear_to_srgb expects a linear image, got {:?}",
            img.space
        )));
    }
    let data = img.data.iter().map(|&v| srgb_encode(v)).collect();
    ImageBuffer::new(img.height, img.width, img.channels, ColorSpace::Srgb, data)
}

/// Per-pixel `0.2126 R + 0.7152 G + 0.0722 B` of a linear RGB image.
pub fn luminance(img: &ImageBuffer) -> Result<ScalarMap> {
    if img.channels != 3 {
        return Err(Error::precondition("luminance needs a 3-channel image"));
    }
    if img.space != ColorSpace::Linear {
        return Err(Error::precondition(format!(
            "luminance expects linear RGB, got {:?}",
            img.space
        )));
    }
    let data = img
        .data
        .chunks_exact(3)
        .map(|px| luma_of(px[0], px[1], px[2]))
        .collect();
    ScalarMap::new(img.height, img.width, MapRole::Luminance, data)
}

#[inline]
pub(crate) fn luma_of(r: f32, g: f32, b: f32) -> f32 {
    let y = LUMA_WEIGHTS[0] * r as f64 + LUMA_WEIGHTS[1] * g as f64 + LUMA_WEIGHTS[2] * b as f64;
    y.clamp(0.0, 1.0) as f32
}

/// `log(clamp(Y, EPSILON, 1))` with `Y` computed in linear light.
///
/// Single-channel inputs are taken to already hold luminance (sRGB-tagged
/// ones are linearized first).
pub fn log_luminance(img: &ImageBuffer) -> Result<ScalarMap> {
    let lin = img.to_linear();
    let y = if lin.channels == 3 {
        luminance(&lin.retagged(ColorSpace::Linear)?)?
    } else {
        ScalarMap::new(lin.height, lin.width, MapRole::Luminance, lin.data.clone())?
    };
    let data = y
        .data
        .iter()
        .map(|&v| (v.clamp(EPSILON, 1.0) as f64).ln() as f32)
        .collect();
    ScalarMap::new(y.height, y.width, MapRole::LogLuminance, data)
}
