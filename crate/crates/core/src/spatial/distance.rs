use crate::image::{MapRole, ScalarMap};

use super::BinaryMask;

/// Exact Euclidean distance from every pixel to the nearest set pixel.
///
/// Uses the separable lower-envelope-of-parabolas algorithm: a 1-D squared
/// distance pass down each column, then a second pass along each row. If
/// the mask is empty every value is `height + width`.
pub fn distance_transform(mask: &BinaryMask) -> ScalarMap {
    let (h, w) = (mask.height(), mask.width());
    if mask.is_empty() {
        return ScalarMap::filled(h, w, MapRole::Distance, (h + w) as f32);
    }
    // Larger than any squared in-image distance.
    let inf = ((h * h + w * w) as f64) * 4.0 + 1.0;

    let mut sq = vec![0f64; h * w];
    let mut f = vec![0f64; h.max(w)];
    let mut d = vec![0f64; h.max(w)];
    let mut scratch = Envelope::new(h.max(w));

    for x in 0..w {
        for y in 0..h {
            f[y] = if mask.get(y, x) { 0.0 } else { inf };
        }
        scratch.transform(&f[..h], &mut d[..h]);
        for y in 0..h {
            sq[y * w + x] = d[y];
        }
    }
    for y in 0..h {
        f[..w].copy_from_slice(&sq[y * w..][..w]);
        scratch.transform(&f[..w], &mut d[..w]);
        sq[y * w..][..w].copy_from_slice(&d[..w]);
    }
    let data = sq.into_iter().map(|v| v.sqrt() as f32).collect();
    ScalarMap::new(h, w, MapRole::Distance, data).expect("same shape as mask")
}

struct Envelope {
    vertices: Vec<usize>,
    bounds: Vec<f64>,
}

impl Envelope {
    fn new(n: usize) -> Self {
        Self {
            vertices: vec![0; n],
            bounds: vec![0.0; n + 1],
        }
    }

    /// `out[q] = min_p (q - p)² + f[p]`.
    fn transform(&mut self, f: &[f64], out: &mut [f64]) {
        let n = f.len();
        let v = &mut self.vertices;
        let z = &mut self.bounds;
        let mut k = 0usize;
        v[0] = 0;
        z[0] = f64::NEG_INFINITY;
        z[1] = f64::INFINITY;
        for q in 1..n {
            let qf = q as f64;
            let intersect = |p: usize| {
                let pf = p as f64;
                ((f[q] + qf * qf) - (f[p] + pf * pf)) / (2.0 * (qf - pf))
            };
            let mut s = intersect(v[k]);
            // z[0] = -inf stops the pop before k underflows.
            while s <= z[k] {
                k -= 1;
                s = intersect(v[k]);
            }
            k += 1;
            v[k] = q;
            z[k] = s;
            z[k + 1] = f64::INFINITY;
        }
        k = 0;
        for (q, slot) in out.iter_mut().enumerate() {
            let qf = q as f64;
            while z[k + 1] < qf {
                k += 1;
            }
            let p = v[k] as f64;
            *slot = (qf - p) * (qf - p) + f[v[k]];
        }
    }
}
