//! Naive reference implementations and fixtures shared by the integration tests.
#![allow(dead_code)]

use std::path::Path;

use lumaflow_core::image::{linear_to_srgb, srgb_decode, srgb_encode, EPSILON, LUMA_WEIGHTS};
use lumaflow_core::io::{write_png, BitDepth};
use lumaflow_core::synth::{synthetic_pair, SynthOptions};
use lumaflow_core::{BilateralParams, BinaryMask, ColorSpace, ImageBuffer, MapRole, ScalarMap};
use rand::Rng;

fn clamp(i: isize, n: usize) -> usize {
    i.clamp(0, n as isize - 1) as usize
}

/// Direct double loop over the window with replicate borders.
pub fn naive_bilateral(m: &ScalarMap, p: &BilateralParams) -> Vec<f64> {
    let (h, w) = (m.height(), m.width());
    let r = p.radius as isize;
    let mut out = Vec::with_capacity(h * w);
    for y in 0..h as isize {
        for x in 0..w as isize {
            let c = m.get(y as usize, x as usize) as f64;
            let (mut num, mut den) = (0.0, 0.0);
            for dy in -r..=r {
                for dx in -r..=r {
                    let v = m.get(clamp(y + dy, h), clamp(x + dx, w)) as f64;
                    let ws = (-((dx * dx + dy * dy) as f64) / (2.0 * p.sigma_spatial * p.sigma_spatial)).exp();
                    let wr = (-(v - c) * (v - c) / (2.0 * p.sigma_range * p.sigma_range)).exp();
                    num += ws * wr * v;
                    den += ws * wr;
                }
            }
            out.push(num / den);
        }
    }
    out
}

/// `(|Gx| + |Gy|) / 8` with the 3×3 Sobel kernels written out.
pub fn naive_sobel(m: &ScalarMap) -> Vec<f64> {
    let (h, w) = (m.height(), m.width());
    let at = |y: isize, x: isize| m.get(clamp(y, h), clamp(x, w)) as f64;
    let mut out = Vec::with_capacity(h * w);
    for y in 0..h as isize {
        for x in 0..w as isize {
            let gx = (at(y - 1, x + 1) + 2.0 * at(y, x + 1) + at(y + 1, x + 1))
                - (at(y - 1, x - 1) + 2.0 * at(y, x - 1) + at(y + 1, x - 1));
            let gy = (at(y + 1, x - 1) + 2.0 * at(y + 1, x) + at(y + 1, x + 1))
                - (at(y - 1, x - 1) + 2.0 * at(y - 1, x) + at(y - 1, x + 1));
            out.push((gx.abs() + gy.abs()) / 8.0);
        }
    }
    out
}

/// Minimum Euclidean distance to any set pixel by exhaustive search;
/// `h + w` when the mask is empty.
pub fn brute_edt(mask: &BinaryMask) -> Vec<f64> {
    let (h, w) = (mask.height(), mask.width());
    let set: Vec<(f64, f64)> = (0..h)
        .flat_map(|y| (0..w).map(move |x| (y, x)))
        .filter(|&(y, x)| mask.get(y, x))
        .map(|(y, x)| (y as f64, x as f64))
        .collect();
    (0..h)
        .flat_map(|y| (0..w).map(move |x| (y as f64, x as f64)))
        .map(|(y, x)| {
            set.iter()
                .map(|&(sy, sx)| ((y - sy).powi(2) + (x - sx).powi(2)).sqrt())
                .fold((h + w) as f64, f64::min)
        })
        .collect()
}

/// Per-pixel Retinex interpolation in f64 on top of [`naive_bilateral`];
/// returns linear RGB.
pub fn reference_retinex_linear(i0: &ImageBuffer, i1: &ImageBuffer, s: f64, p: &BilateralParams) -> Vec<f64> {
    let (h, w) = (i0.height(), i0.width());
    let lin = |img: &ImageBuffer| -> Vec<f64> { img.data().iter().map(|&v| srgb_decode(v) as f64).collect() };
    let (a, b) = (lin(i0), lin(i1));
    let illum = |px: &[f64]| -> Vec<f64> {
        let y = ScalarMap::from_fn(h, w, MapRole::Luminance, |yy, xx| {
            let k = (yy * w + xx) * 3;
            (LUMA_WEIGHTS[0] * px[k] + LUMA_WEIGHTS[1] * px[k + 1] + LUMA_WEIGHTS[2] * px[k + 2]) as f32
        });
        naive_bilateral(&y, p)
            .into_iter()
            .map(|v| v.clamp(EPSILON as f64, 1.0))
            .collect()
    };
    let (l0, l1) = (illum(&a), illum(&b));
    let beta = 0.5 * s;
    let mut out = Vec::with_capacity(h * w * 3);
    for i in 0..h * w {
        let ls = l0[i].powf(1.0 - s) * l1[i].powf(s);
        for c in 0..3 {
            let r = (1.0 - beta) * a[i * 3 + c] / l0[i] + beta * b[i * 3 + c] / l1[i];
            out.push((r * ls).clamp(0.0, 1.0));
        }
    }
    out
}

pub fn reference_retinex_srgb(i0: &ImageBuffer, i1: &ImageBuffer, s: f64, p: &BilateralParams) -> Vec<f64> {
    reference_retinex_linear(i0, i1, s, p)
        .into_iter()
        .map(|v| srgb_encode(v as f32) as f64)
        .collect()
}

pub fn max_abs_diff(a: impl IntoIterator<Item = f64>, b: impl IntoIterator<Item = f64>) -> f64 {
    a.into_iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

pub fn as_f64(v: &[f32]) -> impl Iterator<Item = f64> + '_ {
    v.iter().map(|&x| x as f64)
}

pub fn random_map<R: Rng>(rng: &mut R, h: usize, w: usize) -> ScalarMap {
    ScalarMap::from_fn(h, w, MapRole::Generic, |_, _| rng.random::<f32>())
}

pub fn random_rgb<R: Rng>(rng: &mut R, h: usize, w: usize) -> ImageBuffer {
    ImageBuffer::from_fn(h, w, 3, ColorSpace::Srgb, |_, _, _| rng.random_range(0.02f32..1.0))
}

/// Bright square of side `side` with top-left corner at `(y, x)` on a dark
/// flat background, as sRGB RGB.
pub fn square_image(n: usize, y: usize, x: usize, side: usize) -> ImageBuffer {
    let lin = ImageBuffer::from_fn(n, n, 3, ColorSpace::Linear, |yy, xx, _| {
        if (y..y + side).contains(&yy) && (x..x + side).contains(&xx) {
            0.8
        } else {
            0.1
        }
    });
    linear_to_srgb(&lin).unwrap()
}

/// Writes `count` synthetic pairs as `<id>_low.png` / `<id>_normal.png`;
/// odd ids are misaligned when `misaligned_odd` is set.
pub fn write_synthetic_pairs(dir: &Path, count: u64, size: usize, misaligned_odd: bool) -> Vec<String> {
    (0..count)
        .map(|i| {
            let id = format!("pair{i:02}");
            let p = synthetic_pair(
                i,
                SynthOptions {
                    size,
                    misaligned: misaligned_odd && i % 2 == 1,
                    ..Default::default()
                },
            );
            write_png(dir.join(format!("{id}_low.png")), &p.low, BitDepth::Eight).unwrap();
            write_png(dir.join(format!("{id}_normal.png")), &p.normal, BitDepth::Eight).unwrap();
            id
        })
        .collect()
}
