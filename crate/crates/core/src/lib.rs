//! Continuous-strength low-light enhancement toolkit.
//!
//! - [`image`], [`io`]: image containers, sRGB transfer, luminance, PNG I/O.
//! - [`spatial`]: bilateral smoothing, Sobel gradients, morphology, distance transform.
//! - [`retinex`]: Retinex decomposition and pseudo-target interpolation.
//! - [`weights`]: structural edge differences and misalignment weight maps.
//! - [`flow`]: a small flow-matching model with strength-scaled low-rank adapters.
//! - [`pipeline`]: dataset ingest, filtering, building, manifests.
//! - [`service`]: HTTP API over a built dataset.

pub mod error;
pub mod flow;
pub mod image;
pub mod io;
pub mod pipeline;
pub mod retinex;
pub mod service;
pub mod spatial;
pub mod synth;
pub mod weights;

pub use error::{Error, Result};
pub use image::{ColorSpace, ImageBuffer, MapRole, ScalarMap};
pub use spatial::{BilateralParams, BinaryMask};
