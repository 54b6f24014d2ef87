//! Retinex decomposition and continuous pseudo-target construction.
//!
//! An image is modelled as `I = R ⊙ L`, with the illumination `L` estimated by
//! bilateral smoothing of linear luminance. Intermediate targets between a
//! low-light image `I₀` and its enhanced reference `I₁` interpolate `L`
//! geometrically and blend `R` conservatively (`β = s / 2`), then reconstruct
//! and clip in linear light before returning to sRGB.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{check_unit, Error, Result};
use crate::image::{linear_to_srgb, luminance, ColorSpace, ImageBuffer, MapRole, ScalarMap, EPSILON};
use crate::spatial::{bilateral_filter, BilateralParams};

/// Per-channel reflectance `I / L`. Non-negative, may exceed 1.
#[derive(Clone, Debug, PartialEq)]
pub struct Reflectance {
    height: usize,
    width: usize,
    data: Vec<f32>,
}

impl Reflectance {
    pub fn new(height: usize, width: usize, data: Vec<f32>) -> Result<Self> {
        if data.len() != height * width * 3 {
            return Err(Error::precondition("reflectance data must be HxWx3"));
        }
        Ok(Self { height, width, data })
    }

    pub fn filled(height: usize, width: usize, value: f32) -> Self {
        Self {
            height,
            width,
            data: vec![value; height * width * 3],
        }
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }
}

#[derive(Clone, Debug)]
pub struct RetinexDecomposition {
    pub reflectance: Reflectance,
    pub illumination: ScalarMap,
}

/// Splits a linear RGB image into reflectance and illumination.
///
/// `L = clamp(bilateral(Y), ε, 1)` and `R = I / L` with `L` broadcast over channels.
pub fn decompose(img: &ImageBuffer, params: &BilateralParams) -> Result<RetinexDecomposition> {
    if img.space() != ColorSpace::Linear {
        return Err(Error::precondition("decompose expects a linear RGB image"));
    }
    let y = luminance(img)?;
    let smooth = bilateral_filter(&y, params)?;
    let illum: Vec<f32> = smooth.data().iter().map(|&v| v.clamp(EPSILON, 1.0)).collect();
    let refl = img
        .data()
        .chunks_exact(3)
        .zip(&illum)
        .flat_map(|(px, &l)| px.iter().map(move |&v| v / l))
        .collect();
    Ok(RetinexDecomposition {
        reflectance: Reflectance::new(img.height(), img.width(), refl)?,
        illumination: ScalarMap::new(img.height(), img.width(), MapRole::Illumination, illum)?,
    })
}

/// `L_s = exp((1-s) ln L₀ + s ln L₁)`, i.e. `L₀^(1-s) L₁^s`.
pub fn interpolate_illumination(l0: &ScalarMap, l1: &ScalarMap, s: f64) -> Result<ScalarMap> {
    check_unit("strength", s)?;
    if !l0.same_shape(l1) {
        return Err(Error::precondition("illumination maps differ in shape"));
    }
    let in_range = |m: &ScalarMap| m.data().iter().all(|&v| (EPSILON..=1.0).contains(&v));
    if !in_range(l0) || !in_range(l1) {
        return Err(Error::precondition("illumination must be clamped to [1e-4, 1]"));
    }
    let data = l0
        .data()
        .iter()
        .zip(l1.data())
        .map(|(&a, &b)| geometric_mix(a, b, s))
        .collect();
    ScalarMap::new(l0.height(), l0.width(), MapRole::Illumination, data)
}

#[inline]
fn geometric_mix(a: f32, b: f32, s: f64) -> f32 {
    let v = ((1.0 - s) * (a as f64).ln() + s * (b as f64).ln()).exp();
    (v as f32).clamp(EPSILON, 1.0)
}

/// Reflectance blend weight at strength `s`.
#[inline]
pub fn reflectance_beta(s: f64) -> f64 {
    0.5 * s
}

/// `R_s = (1 - β) R₀ + β R₁` with `β = s / 2`.
pub fn interpolate_reflectance(r0: &Reflectance, r1: &Reflectance, s: f64) -> Result<Reflectance> {
    check_unit("strength", s)?;
    if r0.height != r1.height || r0.width != r1.width {
        return Err(Error::precondition("reflectance maps differ in shape"));
    }
    let beta = reflectance_beta(s);
    let data = r0
        .data
        .iter()
        .zip(&r1.data)
        .map(|(&a, &b)| ((1.0 - beta) * a as f64 + beta * b as f64) as f32)
        .collect();
    Reflectance::new(r0.height, r0.width, data)
}

/// `clip(R ⊙ L, 0, 1)` as a linear RGB image.
pub fn reconstruct(refl: &Reflectance, illum: &ScalarMap) -> Result<ImageBuffer> {
    if refl.height != illum.height() || refl.width != illum.width() {
        return Err(Error::precondition("reflectance and illumination differ in shape"));
    }
    let data = refl
        .data
        .chunks_exact(3)
        .zip(illum.data())
        .flat_map(|(px, &l)| px.iter().map(move |&r| (r * l).clamp(0.0, 1.0)))
        .collect();
    ImageBuffer::new(refl.height, refl.width, 3, ColorSpace::Linear, data)
}

/// Both decompositions of a pair, reusable across many strengths.
#[derive(Clone, Debug)]
pub struct RetinexPair {
    pub low: RetinexDecomposition,
    pub normal: RetinexDecomposition,
}

impl RetinexPair {
    pub fn new(i0: &ImageBuffer, i1: &ImageBuffer, params: &BilateralParams) -> Result<Self> {
        check_pair(i0, i1)?;
        if i0.space() != ColorSpace::Srgb || i1.space() != ColorSpace::Srgb {
            return Err(Error::precondition("Retinex interpolation expects sRGB inputs"));
        }
        let (low, normal) = rayon::join(
            || decompose(&i0.to_linear(), params),
            || decompose(&i1.to_linear(), params),
        );
        Ok(Self {
            low: low?,
            normal: normal?,
        })
    }

    /// Linear-light pseudo-target at strength `s`.
    pub fn linear_at(&self, s: f64) -> Result<ImageBuffer> {
        let l = interpolate_illumination(&self.low.illumination, &self.normal.illumination, s)?;
        let r = interpolate_reflectance(&self.low.reflectance, &self.normal.reflectance, s)?;
        reconstruct(&r, &l)
    }

    /// sRGB pseudo-target at strength `s`.
    pub fn at(&self, s: f64) -> Result<ImageBuffer> {
        linear_to_srgb(&self.linear_at(s)?)
    }
}

fn check_pair(i0: &ImageBuffer, i1: &ImageBuffer) -> Result<()> {
    if !i0.same_shape(i1) {
        return Err(Error::precondition(format!(
            "pair dimensions differ: {}x{}x{} vs {}x{}x{}",
            i0.height(),
            i0.width(),
            i0.channels(),
            i1.height(),
            i1.width(),
            i1.channels()
        )));
    }
    if i0.channels() != 3 {
        return Err(Error::precondition("pair images must be RGB"));
    }
    i0.check_pipeline_size()
}

/// Retinex-interpolated sRGB image between `i0` (s = 0) and `i1` (s = 1).
pub fn retinex_interpolate(
    i0: &ImageBuffer,
    i1: &ImageBuffer,
    s: f64,
    params: &BilateralParams,
) -> Result<ImageBuffer> {
    check_unit("strength", s)?;
    RetinexPair::new(i0, i1, params)?.at(s)
}

/// `(1 - s) I₀ + s I₁` in the inputs' own space.
pub fn alpha_blend(i0: &ImageBuffer, i1: &ImageBuffer, s: f64) -> Result<ImageBuffer> {
    check_unit("strength", s)?;
    if !i0.same_shape(i1) {
        return Err(Error::precondition("alpha_blend inputs differ in shape"));
    }
    if i0.space() != i1.space() {
        return Err(Error::precondition("alpha_blend inputs differ in color space"));
    }
    let data = i0
        .data()
        .iter()
        .zip(i1.data())
        .map(|(&a, &b)| ((1.0 - s) * a as f64 + s * b as f64) as f32)
        .collect();
    ImageBuffer::new(i0.height(), i0.width(), i0.channels(), i0.space(), data)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InterpMethod {
    Retinex,
    Alpha,
}

impl std::str::FromStr for InterpMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "retinex" => Ok(Self::Retinex),
            "alpha" => Ok(Self::Alpha),
            other => Err(Error::config(format!("unknown interpolation method {other:?}"))),
        }
    }
}

impl std::fmt::Display for InterpMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Retinex => "retinex",
            Self::Alpha => "alpha",
        })
    }
}

/// Strengths used for intermediate pseudo-targets by default.
pub const DEFAULT_STRENGTHS: [f64; 4] = [0.2, 0.4, 0.6, 0.8];

#[derive(Clone, Debug)]
pub struct GroupEntry {
    pub strength: f64,
    pub image: ImageBuffer,
}

/// Ordered `(strength, image)` pairs for one source pair. The first and last
/// entries are the original `I₀` and `I₁`.
#[derive(Clone, Debug)]
pub struct StrengthGroup {
    pub pair_id: String,
    pub method: InterpMethod,
    pub entries: Vec<GroupEntry>,
}

impl StrengthGroup {
    pub fn strengths(&self) -> Vec<f64> {
        self.entries.iter().map(|e| e.strength).collect()
    }
}

/// Validates intermediate strengths: each in `(0, 1)`, strictly increasing.
pub fn validate_strengths(strengths: &[f64]) -> Result<()> {
    for &s in strengths {
        if !(s > 0.0 && s < 1.0) {
            return Err(Error::config(format!("intermediate strength {s} is not in (0, 1)")));
        }
    }
    if strengths.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::config("strengths must be sorted and distinct"));
    }
    Ok(())
}

pub fn build_group(
    pair_id: &str,
    i0: &ImageBuffer,
    i1: &ImageBuffer,
    strengths: &[f64],
    method: InterpMethod,
    params: &BilateralParams,
) -> Result<StrengthGroup> {
    validate_strengths(strengths)?;
    check_pair(i0, i1)?;
    let middle: Vec<ImageBuffer> = match method {
        InterpMethod::Retinex => {
            let pair = RetinexPair::new(i0, i1, params)?;
            strengths.par_iter().map(|&s| pair.at(s)).collect::<Result<_>>()?
        }
        InterpMethod::Alpha => strengths
            .par_iter()
            .map(|&s| alpha_blend(i0, i1, s))
            .collect::<Result<_>>()?,
    };
    let mut entries = Vec::with_capacity(strengths.len() + 2);
    entries.push(GroupEntry {
        strength: 0.0,
        image: i0.clone(),
    });
    entries.extend(
        strengths
            .iter()
            .zip(middle)
            .map(|(&strength, image)| GroupEntry { strength, image }),
    );
    entries.push(GroupEntry {
        strength: 1.0,
        image: i1.clone(),
    });
    Ok(StrengthGroup {
        pair_id: pair_id.to_string(),
        method,
        entries,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::image::srgb_encode;

    fn linear_gray(v: f32) -> ImageBuffer {
        ImageBuffer::filled(16, 16, 3, ColorSpace::Linear, v)
    }

    fn srgb_gray_from_linear(v: f32) -> ImageBuffer {
        ImageBuffer::filled(16, 16, 3, ColorSpace::Srgb, srgb_encode(v))
    }

    #[test]
    fn constant_gray_decomposes_trivially() {
        let d = decompose(&linear_gray(0.3), &BilateralParams::default()).unwrap();
        assert!(d.illumination.data().iter().all(|&l| (l - 0.3).abs() < 1e-6));
        assert!(d.reflectance.data().iter().all(|&r| (r - 1.0).abs() < 1e-5));
    }

    #[test]
    fn black_image_hits_the_clamp() {
        let d = decompose(&linear_gray(0.0), &BilateralParams::default()).unwrap();
        assert!(d.illumination.data().iter().all(|&l| l == EPSILON));
        assert!(d.reflectance.data().iter().all(|&r| r == 0.0));
    }

    #[test]
    fn geometric_illumination_midpoint() {
        let l0 = ScalarMap::filled(4, 4, MapRole::Illumination, 0.25);
        let l1 = ScalarMap::filled(4, 4, MapRole::Illumination, 0.64);
        let mid = interpolate_illumination(&l0, &l1, 0.5).unwrap();
        assert!(mid.data().iter().all(|&v| (v - 0.4).abs() < 1e-6));
        assert_eq!(interpolate_illumination(&l0, &l1, 0.0).unwrap(), l0);
        let same = interpolate_illumination(&l0, &l0, 0.37).unwrap();
        assert!(same.data().iter().all(|&v| (v - 0.25).abs() < 1e-7));
        assert!(matches!(
            interpolate_illumination(&l0, &l1, 1.2),
            Err(Error::Range { .. })
        ));
    }

    #[test]
    fn reflectance_blend_examples() {
        let r0 = Reflectance::filled(2, 2, 0.2);
        let r1 = Reflectance::filled(2, 2, 1.0);
        assert_eq!(interpolate_reflectance(&r0, &r1, 0.0).unwrap(), r0);
        let top = interpolate_reflectance(&r0, &r1, 1.0).unwrap();
        assert!(top.data().iter().all(|&v| (v - 0.6).abs() < 1e-7));
        let ones = Reflectance::filled(2, 2, 1.0);
        assert_eq!(interpolate_reflectance(&ones, &ones, 0.4).unwrap(), ones);
        assert!(interpolate_reflectance(&r0, &Reflectance::filled(3, 2, 1.0), 0.5).is_err());
    }

    #[test]
    fn reconstruct_clips() {
        let l = ScalarMap::filled(2, 2, MapRole::Illumination, 0.3);
        let out = reconstruct(&Reflectance::filled(2, 2, 1.0), &l).unwrap();
        assert!(out.data().iter().all(|&v| (v - 0.3).abs() < 1e-7));
        let l = ScalarMap::filled(2, 2, MapRole::Illumination, 0.8);
        let out = reconstruct(&Reflectance::filled(2, 2, 2.0), &l).unwrap();
        assert!(out.data().iter().all(|&v| v == 1.0));
        let out = reconstruct(&Reflectance::filled(2, 2, 0.0), &l).unwrap();
        assert!(out.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn flat_pair_hand_trace() {
        // L0 = 0.09, L1 = 0.64, R0 = R1 = 1  =>  L_0.5 = sqrt(0.0576) = 0.24.
        let i0 = srgb_gray_from_linear(0.09);
        let i1 = srgb_gray_from_linear(0.64);
        let out = retinex_interpolate(&i0, &i1, 0.5, &BilateralParams::default()).unwrap();
        let lin = out.to_linear();
        assert!(
            lin.data().iter().all(|&v| (v - 0.24).abs() < 1e-5),
            "{}",
            lin.get(0, 0, 0)
        );
    }

    #[test]
    fn retinex_requires_srgb_and_matching_shapes() {
        let a = srgb_gray_from_linear(0.1);
        let b = ImageBuffer::filled(16, 8, 3, ColorSpace::Srgb, 0.5);
        assert!(retinex_interpolate(&a, &b, 0.5, &BilateralParams::default()).is_err());
        assert!(retinex_interpolate(&linear_gray(0.1), &linear_gray(0.2), 0.5, &BilateralParams::default()).is_err());
        let tiny = ImageBuffer::filled(4, 4, 3, ColorSpace::Srgb, 0.5);
        assert!(retinex_interpolate(&tiny, &tiny, 0.5, &BilateralParams::default()).is_err());
    }

    #[test]
    fn alpha_blend_examples() {
        let a = ImageBuffer::filled(8, 8, 3, ColorSpace::Srgb, 0.2);
        let b = ImageBuffer::filled(8, 8, 3, ColorSpace::Srgb, 0.8);
        assert_eq!(alpha_blend(&a, &b, 0.0).unwrap(), a);
        assert_eq!(alpha_blend(&a, &b, 1.0).unwrap(), b);
        let mid = alpha_blend(&a, &b, 0.5).unwrap();
        assert!(mid.data().iter().all(|&v| (v - 0.5).abs() < 1e-7));
        let lin = b.retagged(ColorSpace::Linear).unwrap();
        assert!(alpha_blend(&a, &lin, 0.5).is_err());
    }

    #[test]
    fn group_shapes() {
        let i0 = srgb_gray_from_linear(0.05);
        let i1 = srgb_gray_from_linear(0.5);
        let p = BilateralParams::default();
        let g = build_group("x", &i0, &i1, &DEFAULT_STRENGTHS, InterpMethod::Retinex, &p).unwrap();
        assert_eq!(g.entries.len(), 6);
        assert_eq!(g.strengths(), vec![0.0, 0.2, 0.4, 0.6, 0.8, 1.0]);
        assert_eq!(g.entries[0].image, i0);
        assert_eq!(g.entries[5].image, i1);

        let g = build_group("x", &i0, &i1, &[], InterpMethod::Alpha, &p).unwrap();
        assert_eq!(g.entries.len(), 2);

        assert!(build_group("x", &i0, &i1, &[0.4, 0.2], InterpMethod::Retinex, &p).is_err());
        assert!(build_group("x", &i0, &i1, &[0.2, 0.2], InterpMethod::Retinex, &p).is_err());
        assert!(build_group("x", &i0, &i1, &[0.0, 0.5], InterpMethod::Retinex, &p).is_err());
    }
}
