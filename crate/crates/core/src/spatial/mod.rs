//! Spatial operators: bilateral smoothing, Sobel gradients, binary morphology,
//! exact Euclidean distance transform, and area resampling.
//!
//! Every operator uses replicate borders and a fixed per-pixel summation order,
//! so results do not depend on how rows are scheduled across threads.

mod bilateral;
mod distance;
mod mask;
mod resize;
mod sobel;

pub use bilateral::{bilateral_filter, BilateralParams};
pub use distance::distance_transform;
pub use mask::{dilate, threshold_percentile, BinaryMask};
pub use resize::resize_area;
pub use sobel::sobel_l1;

#[inline]
pub(crate) fn clamp_index(i: isize, len: usize) -> usize {
    i.clamp(0, len as isize - 1) as usize
}
