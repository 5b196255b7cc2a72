//! Bottom-up text line segmentation for Latin-script document images.
//!
//! The pipeline binarizes a page, optionally levels it, extracts and fills
//! 8-connected components, thins them, splits the skeletons into strokes and
//! significant points, and then sweeps the components left to right, growing
//! one cluster per text line. A post-processing pass merges false clusters and
//! places deferred punctuation. [`eval`] scores label rasters with the usual
//! contest measures (DR, RA, FM, one-to-one matches).

pub mod clustering;
pub mod components;
pub mod config;
pub mod error;
pub mod eval;
pub mod features;
pub mod geometry;
pub mod imaging;
pub mod io;
pub mod mixture;
pub mod pipeline;
pub mod postprocess;
pub mod skeleton;
pub mod synth;

pub use error::{Error, Result};
