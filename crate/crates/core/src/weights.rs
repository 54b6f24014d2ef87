//! Structural edge analysis and misalignment-aware weight maps.
//!
//! Edges are compared on an illumination-normalized representation: the
//! log-luminance minus its bilateral-smoothed version. Target edge pixels
//! farther than `d` pixels from every input edge are marked unreliable, the
//! mask is dilated, and the supervision weight there is lowered to
//! `clip(1 - α, w_min, 1)`.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::{log_luminance, ColorSpace, ImageBuffer, MapRole, ScalarMap};
use crate::io::{read_png_as, write_png, BitDepth};
use crate::spatial::{
    bilateral_filter, dilate, distance_transform, resize_area, sobel_l1, threshold_percentile, BilateralParams,
    BinaryMask,
};

/// Everything that determines a weight map, recorded in manifests.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MaskParams {
    /// Distance threshold in pixels.
    pub d: f64,
    pub alpha: f64,
    pub w_min: f64,
    /// Square dilation radius applied to the unreliable mask.
    pub dilate_radius: usize,
    /// Percentile used to binarize edge responses.
    pub percentile: f64,
    /// Absolute floor for edge binarization, in edge-response units.
    pub edge_floor: f32,
    /// Smoothing that separates slow illumination from structure, in log-luminance units.
    pub structure: BilateralParams,
}

/// Smoothing used for the structural high-pass.
pub const STRUCTURE_BILATERAL: BilateralParams = BilateralParams {
    sigma_spatial: 2.0,
    sigma_range: 1.0,
    radius: 4,
};

impl Default for MaskParams {
    fn default() -> Self {
        Self {
            d: 3.0,
            alpha: 0.8,
            w_min: 0.2,
            dilate_radius: 2,
            percentile: 90.0,
            edge_floor: 1e-3,
            structure: STRUCTURE_BILATERAL,
        }
    }
}

impl MaskParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.d >= 0.0 && self.d.is_finite()) {
            return Err(Error::config(format!(
                "distance threshold d must be >= 0, got {}",
                self.d
            )));
        }
        if !(self.alpha >= 0.0 && self.alpha.is_finite()) {
            return Err(Error::config(format!("alpha must be >= 0, got {}", self.alpha)));
        }
        if !(0.0..=1.0).contains(&self.w_min) {
            return Err(Error::config(format!("w_min must be in [0, 1], got {}", self.w_min)));
        }
        if !(self.percentile > 0.0 && self.percentile < 100.0) {
            return Err(Error::config(format!(
                "percentile must be in (0, 100), got {}",
                self.percentile
            )));
        }
        self.structure.validate()
    }
}

/// Per-pixel supervision weight in `[w_min, 1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightMap {
    map: ScalarMap,
    w_min: f64,
}

impl WeightMap {
    /// Wraps `map`, checking every value lies in `[w_min, 1]`.
    pub fn new(map: ScalarMap, w_min: f64) -> Result<Self> {
        let lo = w_min as f32;
        if let Some(&bad) = map.data().iter().find(|&&v| !(v >= lo && v <= 1.0)) {
            return Err(Error::Data(format!("weight {bad} outside [{w_min}, 1]")));
        }
        Ok(Self {
            map: map.with_role(MapRole::Weight),
            w_min,
        })
    }

    pub fn uniform(height: usize, width: usize, w_min: f64) -> Self {
        Self {
            map: ScalarMap::filled(height, width, MapRole::Weight, 1.0),
            w_min,
        }
    }

    pub fn map(&self) -> &ScalarMap {
        &self.map
    }

    pub fn w_min(&self) -> f64 {
        self.w_min
    }

    pub fn height(&self) -> usize {
        self.map.height()
    }

    pub fn width(&self) -> usize {
        self.map.width()
    }

    pub fn data(&self) -> &[f32] {
        self.map.data()
    }
}

/// `|E(a) - E(b)|` per pixel.
#[derive(Clone, Debug, PartialEq)]
pub struct EdgeDiffMap(ScalarMap);

impl EdgeDiffMap {
    pub fn map(&self) -> &ScalarMap {
        &self.0
    }

    pub fn mean(&self) -> f64 {
        self.0.mean()
    }
}

/// `H = log Y - bilateral(log Y)`.
pub fn structural_highpass(img: &ImageBuffer, structure: &BilateralParams) -> Result<ScalarMap> {
    let logy = log_luminance(img)?;
    let smooth = bilateral_filter(&logy, structure)?;
    let data = logy.data().iter().zip(smooth.data()).map(|(&a, &b)| a - b).collect();
    ScalarMap::new(logy.height(), logy.width(), MapRole::Highpass, data)
}

/// `E = |∇H|₁` via the Sobel operator.
pub fn edge_response(img: &ImageBuffer, structure: &BilateralParams) -> Result<ScalarMap> {
    Ok(sobel_l1(&structural_highpass(img, structure)?))
}

pub fn edge_diff(a: &ImageBuffer, b: &ImageBuffer, structure: &BilateralParams) -> Result<EdgeDiffMap> {
    if a.height() != b.height() || a.width() != b.width() {
        return Err(Error::precondition("edge_diff inputs differ in size"));
    }
    let (ea, eb) = rayon::join(|| edge_response(a, structure), || edge_response(b, structure));
    let (ea, eb) = (ea?, eb?);
    Ok(EdgeDiffMap(edge_map_diff(&ea, &eb)))
}

pub(crate) fn edge_map_diff(ea: &ScalarMap, eb: &ScalarMap) -> ScalarMap {
    let data = ea.data().iter().zip(eb.data()).map(|(&x, &y)| (x - y).abs()).collect();
    ScalarMap::new(ea.height(), ea.width(), MapRole::Edge, data).expect("same shape")
}

/// Binary edge map of `img`.
pub fn edge_mask(img: &ImageBuffer, params: &MaskParams) -> Result<BinaryMask> {
    threshold_percentile(
        &edge_response(img, &params.structure)?,
        params.percentile,
        params.edge_floor,
    )
}

/// Target edges farther than `d` from every input edge, before dilation.
pub fn unreliable_core(b0: &BinaryMask, bs: &BinaryMask, d: f64) -> Result<BinaryMask> {
    if !b0.same_shape(bs) {
        return Err(Error::precondition("edge masks differ in size"));
    }
    // The transform's h + w sentinel is finite; with no input edges every
    // target edge is unreliable regardless of d.
    if b0.is_empty() {
        return Ok(bs.clone());
    }
    let dist = distance_transform(b0);
    let data = bs
        .data()
        .iter()
        .zip(dist.data())
        .map(|(&edge, &dd)| edge && dd as f64 > d)
        .collect();
    BinaryMask::new(b0.height(), b0.width(), data)
}

/// Unreliable-edge mask, dilated by `dilate_radius`.
pub fn unreliable_mask(b0: &BinaryMask, bs: &BinaryMask, d: f64, dilate_radius: usize) -> Result<BinaryMask> {
    Ok(dilate(&unreliable_core(b0, bs, d)?, dilate_radius))
}

/// `W = clip(1 - α M, w_min, 1)`.
pub fn soft_weight(mask: &BinaryMask, alpha: f64, w_min: f64) -> Result<WeightMap> {
    if !(alpha >= 0.0 && alpha.is_finite()) {
        return Err(Error::config(format!("alpha must be >= 0, got {alpha}")));
    }
    if !(0.0..=1.0).contains(&w_min) {
        return Err(Error::config(format!("w_min must be in [0, 1], got {w_min}")));
    }
    let low = (1.0 - alpha).clamp(w_min, 1.0) as f32;
    let data = mask.data().iter().map(|&m| if m { low } else { 1.0 }).collect();
    WeightMap::new(
        ScalarMap::new(mask.height(), mask.width(), MapRole::Weight, data)?,
        w_min,
    )
}

/// Weight map for supervising `is` (a pseudo-target) given the input `i0`.
pub fn weight_map_for_pair(i0: &ImageBuffer, is: &ImageBuffer, params: &MaskParams) -> Result<WeightMap> {
    params.validate()?;
    if i0.height() != is.height() || i0.width() != is.width() {
        return Err(Error::precondition("weight_map_for_pair inputs differ in size"));
    }
    let (b0, bs) = rayon::join(|| edge_mask(i0, params), || edge_mask(is, params));
    let mask = unreliable_mask(&b0?, &bs?, params.d, params.dilate_radius)?;
    soft_weight(&mask, params.alpha, params.w_min)
}

/// Area-resamples a weight map to latent resolution.
pub fn to_latent(w: &WeightMap, latent_h: usize, latent_w: usize) -> Result<WeightMap> {
    let resized = resize_area(&w.map, latent_h, latent_w)?;
    // Block means of values in [w_min, 1] stay in range up to rounding.
    let lo = w.w_min as f32;
    let data = resized.data().iter().map(|&v| v.clamp(lo, 1.0)).collect();
    WeightMap::new(ScalarMap::new(latent_h, latent_w, MapRole::Weight, data)?, w.w_min)
}

/// Cache file name: `<pair_id>_s<round(100 s), 3 digits>.w16.png`.
pub fn weight_file_name(pair_id: &str, strength: f64) -> String {
    format!("{pair_id}_s{:03}.w16.png", (strength * 100.0).round() as u32)
}

/// Stores `round(W · 65535)` as 16-bit grayscale.
pub fn write_weight_png(path: impl AsRef<Path>, w: &WeightMap) -> Result<()> {
    write_png(path, &w.map.to_image()?, BitDepth::Sixteen)
}

pub fn read_weight_png(path: impl AsRef<Path>, w_min: f64) -> Result<WeightMap> {
    let path = path.as_ref();
    let img = read_png_as(path, ColorSpace::Map)?;
    if img.channels() != 1 {
        return Err(Error::Data(format!("{} is not a grayscale weight map", path.display())));
    }
    let map = ScalarMap::new(img.height(), img.width(), MapRole::Weight, img.into_data())?;
    WeightMap::new(map, w_min)
}
