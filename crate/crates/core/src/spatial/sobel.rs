use rayon::prelude::*;

use super::clamp_index;
use crate::image::{MapRole, ScalarMap};

/// `|Gx| + |Gy|` with 3×3 Sobel kernels scaled by 1/8.
///
/// With this scaling a unit-slope ramp has response 1.
pub fn sobel_l1(map: &ScalarMap) -> ScalarMap {
    let (h, w) = (map.height(), map.width());
    let src = map.data();
    let mut out = vec![0f32; h * w];
    out.par_chunks_mut(w).enumerate().for_each(|(y, row_out)| {
        let up = &src[clamp_index(y as isize - 1, h) * w..][..w];
        let mid = &src[y * w..][..w];
        let down = &src[clamp_index(y as isize + 1, h) * w..][..w];
        for (x, slot) in row_out.iter_mut().enumerate() {
            let l = clamp_index(x as isize - 1, w);
            let r = clamp_index(x as isize + 1, w);
            let at = |row: &[f32], i: usize| row[i] as f64;
            let gx = (at(up, r) - at(up, l)) + 2.0 * (at(mid, r) - at(mid, l)) + (at(down, r) - at(down, l));
            let gy = (at(down, l) - at(up, l)) + 2.0 * (at(down, x) - at(up, x)) + (at(down, r) - at(up, r));
            *slot = ((gx.abs() + gy.abs()) / 8.0) as f32;
        }
    });
    ScalarMap::new(h, w, MapRole::Edge, out).expect("same shape as input")
}
