//! Batch front end for `lineseg`: segment page images into line label
//! rasters and JSON, score label rasters against ground truth, and generate
//! synthetic test pages.

pub mod gen;
pub mod score;
pub mod segment;

use std::path::{Path, PathBuf};

use lineseg::config::PipelineConfig;

/// File extensions accepted when a directory is given as input.
pub const IMAGE_EXTENSIONS: [&str; 8] = ["png", "bmp", "pgm", "ppm", "pbm", "tif", "tiff", "jpg"];

pub fn is_image(path: &Path) -> bool {
    path.extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| IMAGE_EXTENSIONS.contains(&e.to_ascii_lowercase().as_str()) || e.eq_ignore_ascii_case("jpeg"))
}

/// Image files directly inside `dir`, sorted by name.
pub fn list_images(dir: &Path) -> std::io::Result<Vec<PathBuf>> {
    let mut out: Vec<PathBuf> = std::fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && is_image(p))
        .collect();
    out.sort();
    Ok(out)
}

/// Loads a `key = value` config file (if any) and applies `overrides` in order.
pub fn load_config(path: Option<&Path>, overrides: &[(String, String)]) -> lineseg::Result<PipelineConfig> {
    let mut cfg = match path {
        Some(p) => PipelineConfig::parse_str(&std::fs::read_to_string(p)?)?,
        None => PipelineConfig::default(),
    };
    for (k, v) in overrides {
        cfg.set(k, v)?;
    }
    cfg.validate()?;
    Ok(cfg)
}
