use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::clamp_index;
use crate::error::{Error, Result};
use crate::image::ScalarMap;

/// Gaussian-spatial × Gaussian-range bilateral filter parameters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BilateralParams {
    /// Spatial standard deviation in pixels.
    pub sigma_spatial: f64,
    /// Range standard deviation in value units.
    pub sigma_range: f64,
    /// Half-width of the square window, `ceil(2 * sigma_spatial)` unless overridden.
    pub radius: usize,
}

impl BilateralParams {
    pub fn new(sigma_spatial: f64, sigma_range: f64) -> Result<Self> {
        let params = Self {
            sigma_spatial,
            sigma_range,
            radius: (2.0 * sigma_spatial).ceil().max(0.0) as usize,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma_spatial > 0.0 && self.sigma_spatial.is_finite()) {
            return Err(Error::config(format!(
                "bilateral sigma_spatial must be positive, got {}",
                self.sigma_spatial
            )));
        }
        if !(self.sigma_range > 0.0 && self.sigma_range.is_finite()) {
            return Err(Error::config(format!(
                "bilateral sigma_range must be positive, got {}",
                self.sigma_range
            )));
        }
        Ok(())
    }
}

impl Default for BilateralParams {
    fn default() -> Self {
        Self {
            sigma_spatial: 8.0,
            sigma_range: 0.1,
            radius: 16,
        }
    }
}

/// Edge-preserving smoothing of a single-channel map.
///
/// Output pixel `p` is `Σ_q w(p,q) v(q) / Σ_q w(p,q)` over the square window,
/// with `w = exp(-|p-q|²/2σs²) · exp(-(v(p)-v(q))²/2σr²)` and out-of-bounds
/// samples replaced by the nearest edge sample.
pub fn bilateral_filter(map: &ScalarMap, params: &BilateralParams) -> Result<ScalarMap> {
    params.validate()?;
    let (h, w) = (map.height(), map.width());
    let r = params.radius as isize;
    let side = 2 * params.radius + 1;
    let inv_2ss = 1.0 / (2.0 * params.sigma_spatial * params.sigma_spatial);
    let inv_2sr = 1.0 / (2.0 * params.sigma_range * params.sigma_range);

    let spatial: Vec<f32> = (0..side * side)
        .map(|k| {
            let dy = (k / side) as f64 - r as f64;
            let dx = (k % side) as f64 - r as f64;
            (-(dx * dx + dy * dy) * inv_2ss).exp() as f32
        })
        .collect();
    let cols: Vec<usize> = (-r..w as isize + r).map(|x| clamp_index(x, w)).collect();
    let src = map.data();
    let inv_2sr = inv_2sr as f32;

    // Rows padded by r on each side with replicated edge samples.
    let pw = w + 2 * params.radius;
    let padded: Vec<f32> = (0..h).flat_map(|y| cols.iter().map(move |&x| src[y * w + x])).collect();

    // Weights are evaluated in f32 (4 lanes) and accumulated in f64.
    let mut out = vec![0f32; h * w];
    out.par_chunks_mut(w).enumerate().for_each(|(y, row_out)| {
        let mut wt = vec![0.0f32; side];
        for (x, slot) in row_out.iter_mut().enumerate() {
            let center = padded[y * pw + x + params.radius];
            let mut num = 0.0f64;
            let mut den = 0.0f64;
            for (ky, dy) in (-r..=r).enumerate() {
                let row = &padded[clamp_index(y as isize + dy, h) * pw + x..][..side];
                let spatial = &spatial[ky * side..][..side];
                for ((w, &v), &ws) in wt.iter_mut().zip(row).zip(spatial) {
                    let d = v - center;
                    *w = ws * neg_exp(d * d * inv_2sr);
                }
                let (n, d) = dot_and_sum(&wt, row);
                num += n;
                den += d;
            }
            // den >= 1: the centre sample always has weight exactly 1.
            *slot = (num / den) as f32;
        }
    });
    ScalarMap::new(h, w, map.role(), out)
}

/// `(Σ a·b, Σ a)` in f64 with four independent accumulators.
#[inline]
fn dot_and_sum(a: &[f32], b: &[f32]) -> (f64, f64) {
    let mut dot = [0.0f64; 4];
    let mut sum = [0.0f64; 4];
    let (ac, bc) = (a.chunks_exact(4), b.chunks_exact(4));
    let (ar, br) = (ac.remainder(), bc.remainder());
    for (a4, b4) in ac.zip(bc) {
        for l in 0..4 {
            dot[l] += a4[l] as f64 * b4[l] as f64;
            sum[l] += a4[l] as f64;
        }
    }
    for (&x, &y) in ar.iter().zip(br) {
        dot[0] += x as f64 * y as f64;
        sum[0] += x as f64;
    }
    (
        (dot[0] + dot[1]) + (dot[2] + dot[3]),
        (sum[0] + sum[1]) + (sum[2] + sum[3]),
    )
}

/// `exp(-x)` for `x >= 0` in f32 without branches or table lookups, so the
/// inner filter loop vectorizes. Relative error within a few f32 ulps for
/// `x <= 87`; larger arguments are clamped (the true value is below 1e-37).
#[inline]
fn neg_exp(x: f32) -> f32 {
    const LN2_HI: f32 = 0.693_359_4;
    const LN2_LO: f32 = -2.121_944_4e-4;
    // Adding 1.5 * 2^23 rounds to an integer held in the low mantissa bits.
    const SHIFTER: f32 = 12_582_912.0;
    let x = x.min(87.0);
    let shifted = x * std::f32::consts::LOG2_E + SHIFTER;
    let nf = shifted - SHIFTER;
    let n = shifted.to_bits() as i32 - SHIFTER.to_bits() as i32;
    let r = (x - nf * LN2_HI) - nf * LN2_LO;
    // e^{-r} for |r| <= ln2/2, Taylor to degree 7.
    let p = INV_FACT.iter().rev().fold(0.0, |acc, &c| acc * -r + c);
    let scale = f32::from_bits(((127 - n) as u32) << 23);
    p * scale
}

const INV_FACT: [f32; 8] = [
    1.0,
    1.0,
    1.0 / 2.0,
    1.0 / 6.0,
    1.0 / 24.0,
    1.0 / 120.0,
    1.0 / 720.0,
    1.0 / 5040.0,
];
