//! Networked radio-sensing simulator and analysis toolkit.
//!
//! The crate covers the whole chain for 2D point-target scenes observed by a
//! network of terminals:
//!
//! * [`wavenumber`]: spectral support of any Tx/Rx geometry and the image
//!   resolution it predicts,
//! * [`synth`]: range-compressed complex baseband records per channel,
//! * [`imaging`]: time-domain back-projection per Tx/Rx pair,
//! * [`fusion`]: incoherent, coherent and multistatic image combination,
//! * [`orchestrate`]: wavenumber tessellation and cooperative subset planning,
//! * [`metrics`]: resolution, PSLR, ISLR and peak SNR measurements.
//!
//! Everything is SI: meters, seconds, hertz and rad/m.

// `!(x > 0.0)` is used on purpose so NaN fails the checks.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod export;
pub mod fusion;
pub mod geom;
pub mod imaging;
pub mod metrics;
pub mod orchestrate;
pub mod presets;
pub mod scene;
pub mod synth;
pub mod wavenumber;

mod serde_ext;

pub use error::{Error, Result};
pub use geom::Vec2;
pub use num_complex::Complex64;

/// Propagation speed used throughout, m/s.
pub const SPEED_OF_LIGHT: f64 = 3.0e8;
