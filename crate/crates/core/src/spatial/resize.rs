use crate::error::{Error, Result};
use crate::image::ScalarMap;

/// Block-mean downsampling by integer factors.
pub fn resize_area(map: &ScalarMap, out_h: usize, out_w: usize) -> Result<ScalarMap> {
    let (h, w) = (map.height(), map.width());
    if out_h == 0 || out_w == 0 || out_h > h || out_w > w || h % out_h != 0 || w % out_w != 0 {
        return Err(Error::config(format!(
            "cannot area-resize {h}x{w} to {out_h}x{out_w}: factors must be positive integers"
        )));
    }
    let (fy, fx) = (h / out_h, w / out_w);
    let norm = (fy * fx) as f64;
    let src = map.data();
    let mut out = Vec::with_capacity(out_h * out_w);
    for oy in 0..out_h {
        for ox in 0..out_w {
            let mut sum = 0.0f64;
            for y in oy * fy..(oy + 1) * fy {
                sum += src[y * w + ox * fx..][..fx].iter().map(|&v| v as f64).sum::<f64>();
            }
            out.push((sum / norm) as f32);
        }
    }
    ScalarMap::new(out_h, out_w, map.role(), out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::image::MapRole;

    #[test]
    fn constant_stays_constant() {
        let map = ScalarMap::filled(16, 24, MapRole::Weight, 0.8);
        let out = resize_area(&map, 2, 3).unwrap();
        assert_eq!((out.height(), out.width()), (2, 3));
        assert!(out.data().iter().all(|&v| (v - 0.8).abs() < 1e-7));
    }

    #[test]
    fn block_mean() {
        let map = ScalarMap::new(2, 2, MapRole::Weight, vec![1.0, 1.0, 0.2, 0.2]).unwrap();
        let out = resize_area(&map, 1, 1).unwrap();
        assert!((out.get(0, 0) - 0.6).abs() < 1e-7);
    }

    #[test]
    fn non_integer_factor_is_config_error() {
        let map = ScalarMap::filled(10, 10, MapRole::Weight, 1.0);
        assert!(matches!(resize_area(&map, 3, 5), Err(Error::Config(_))));
        assert!(matches!(resize_area(&map, 20, 5), Err(Error::Config(_))));
    }
}
