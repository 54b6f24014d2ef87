//! Seeded synthetic low/normal-light pairs.
//!
//! A scene is a smooth background with a few flat-colored rectangles. The
//! low-light image is the scene under a dim gain, the normal-light image the
//! same scene under a bright gain. Misaligned pairs render one rectangle of
//! the normal-light image displaced by a few pixels, imitating the local
//! structural drift of generated references.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::image::{linear_to_srgb, ColorSpace, ImageBuffer};
use crate::io::quantize8;

#[derive(Clone, Copy, Debug, PartialEq)]
struct Rect {
    y: usize,
    x: usize,
    h: usize,
    w: usize,
    color: [f32; 3],
}

impl Rect {
    fn contains(&self, y: usize, x: usize, dy: isize, dx: isize) -> bool {
        let (yy, xx) = (y as isize - dy, x as isize - dx);
        yy >= self.y as isize
            && yy < (self.y + self.h) as isize
            && xx >= self.x as isize
            && xx < (self.x + self.w) as isize
    }
}

#[derive(Clone, Debug)]
pub struct SyntheticPair {
    /// Low-light input, sRGB, 8-bit quantized.
    pub low: ImageBuffer,
    /// Normal-light reference, sRGB, 8-bit quantized.
    pub normal: ImageBuffer,
    /// Displacement `(dy, dx)` applied to one rectangle of `normal`, if any.
    pub shift: Option<(isize, isize)>,
}

/// Options for [`synthetic_pair`].
#[derive(Clone, Copy, Debug)]
pub struct SynthOptions {
    pub size: usize,
    /// Range of the displacement magnitude in pixels, inclusive.
    pub shift_px: (usize, usize),
    pub misaligned: bool,
}

impl Default for SynthOptions {
    fn default() -> Self {
        Self {
            size: 64,
            shift_px: (4, 8),
            misaligned: false,
        }
    }
}

/// Deterministic pair for `seed`. In linear light `normal ≥ low` pointwise
/// when not misaligned (before 8-bit quantization).
pub fn synthetic_pair(seed: u64, opts: SynthOptions) -> SyntheticPair {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = opts.size;
    let base: [f32; 3] = std::array::from_fn(|_| rng.random_range(0.25..0.45));
    let tilt: [f32; 2] = [rng.random_range(-0.15..0.15), rng.random_range(-0.15..0.15)];
    let count = rng.random_range(2..=3);
    let rects: Vec<Rect> = (0..count)
        .map(|_| {
            let h = rng.random_range(n / 5..n / 2);
            let w = rng.random_range(n / 5..n / 2);
            Rect {
                y: rng.random_range(4..n - h - 4),
                x: rng.random_range(4..n - w - 4),
                h,
                w,
                color: std::array::from_fn(|_| rng.random_range(0.05..0.95)),
            }
        })
        .collect();
    let low_gain: f32 = rng.random_range(0.08..0.25);
    let high_gain: f32 = rng.random_range(0.75..1.0);
    let shift = opts.misaligned.then(|| {
        let mag = rng.random_range(opts.shift_px.0..=opts.shift_px.1) as isize;
        match rng.random_range(0..4) {
            0 => (mag, 0),
            1 => (-mag, 0),
            2 => (0, mag),
            _ => (0, -mag),
        }
    });
    let moved = rng.random_range(0..rects.len());

    let scene = |y: usize, x: usize, c: usize, displaced: Option<(isize, isize)>| -> f32 {
        let fy = y as f32 / n as f32 - 0.5;
        let fx = x as f32 / n as f32 - 0.5;
        let mut v = base[c] + tilt[0] * fy + tilt[1] * fx;
        for (i, r) in rects.iter().enumerate() {
            let (dy, dx) = match displaced {
                Some(d) if i == moved => d,
                _ => (0, 0),
            };
            if r.contains(y, x, dy, dx) {
                v = r.color[c];
            }
        }
        v.clamp(0.0, 1.0)
    };
    let render = |gain: f32, displaced| {
        let lin = ImageBuffer::from_fn(n, n, 3, ColorSpace::Linear, |y, x, c| {
            (scene(y, x, c, displaced) * gain).clamp(0.0, 1.0)
        });
        quantize8(&linear_to_srgb(&lin).expect("linear input"))
    };
    SyntheticPair {
        low: render(low_gain, None),
        normal: render(high_gain, shift),
        shift,
    }
}
