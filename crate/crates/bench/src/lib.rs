//! Shared inputs for the benchmarks.

use lineseg::imaging::{otsu_binarize, BinaryImage, GrayImage};
use lineseg::synth::{generate_page, PageSpec};

/// A generated page of `lines` lines with a small skew.
pub fn page(lines: usize, seed: u64) -> GrayImage {
    generate_page(&PageSpec { lines, skew_deg: 4.0, seed, ..PageSpec::default() }).image
}

pub fn binarized(lines: usize, seed: u64) -> BinaryImage {
    otsu_binarize(&page(lines, seed)).image
}
