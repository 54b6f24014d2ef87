use crate::error::{Error, Result};
use crate::image::ImageBuffer;
use crate::weights::{edge_map_diff, edge_response, MaskParams};

/// Mean structural edge difference over the pixels where either image has an
/// edge response above `params.edge_floor`; 0 when neither does.
pub fn edge_consistency_score(i0: &ImageBuffer, i1: &ImageBuffer, params: &MaskParams) -> Result<f64> {
    if i0.height() != i1.height() || i0.width() != i1.width() {
        return Err(Error::precondition(format!(
            "pair dimensions differ: {}x{} vs {}x{}",
            i0.height(),
            i0.width(),
            i1.height(),
            i1.width()
        )));
    }
    let (e0, e1) = rayon::join(
        || edge_response(i0, &params.structure),
        || edge_response(i1, &params.structure),
    );
    let (e0, e1) = (e0?, e1?);
    let diff = edge_map_diff(&e0, &e1);
    let theta = params.edge_floor;
    let (sum, count) = e0
        .data()
        .iter()
        .zip(e1.data())
        .zip(diff.data())
        .filter(|((&a, &b), _)| a > theta || b > theta)
        .fold((0.0f64, 0usize), |(s, n), (_, &d)| (s + d as f64, n + 1));
    Ok(if count == 0 { 0.0 } else { sum / count as f64 })
}
