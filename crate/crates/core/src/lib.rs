//! Embedded wavelet image codec built on morphological dilation.
//!
//! Significant wavelet coefficients are located by quad-tree set partitioning
//! and the rest of each significant cluster is grown by dilation over the
//! 8-connected neighbourhood. Groups of neighbours are coded either with a
//! weight-controlled dilation or a variable-length group test, whichever the
//! running group statistics favour. Member order inside a group follows a
//! significance degree predicted from least-squares context weights.
//!
//! The crate is organised bottom-up:
//!
//! - [`transform`]: 9/7 lifting DWT and the subband pyramid.
//! - [`weights`]: context vectors, least-squares weight training, significance degrees.
//! - [`bitio`]: raw bit packing and an adaptive binary arithmetic coder.
//! - [`codec`]: the mirrored encoder/decoder bitplane state machine.
//! - [`container`]: the `.mdw` stream header.
//! - [`image`], [`metrics`]: PGM I/O and PSNR.
//! - [`rd`]: rate sweeps and the high-level compress/decompress helpers.
//! - [`analysis`]: exhaustive codeword-length enumeration and inequality checks.

pub mod analysis;
pub mod bitio;
pub mod codec;
pub mod container;
mod error;
pub mod image;
pub mod metrics;
pub mod par;
pub mod rd;
pub mod transform;
pub mod weights;

pub use error::{Error, Result};
pub use image::ImagePlane;
pub use transform::{Orientation, WaveletPyramid};
