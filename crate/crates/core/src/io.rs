//! Raster and JSON files: grayscale input, 16-bit label rasters, colour
//! overlays. Every write goes through a temporary file in the target
//! directory and is renamed into place, so readers never see partial output.

use std::io::Write;
use std::path::Path;

use image::{DynamicImage, ImageBuffer, ImageFormat, Luma, Rgb, RgbImage};

use crate::error::{Error, Result};
use crate::eval::LabelRaster;
use crate::imaging::GrayImage;

/// Line colours, cycled by line index.
pub const PALETTE: [[u8; 3]; 12] = [
    [230, 25, 75],
    [60, 180, 75],
    [0, 130, 200],
    [245, 130, 48],
    [145, 30, 180],
    [70, 240, 240],
    [240, 50, 230],
    [210, 245, 60],
    [0, 128, 128],
    [170, 110, 40],
    [128, 0, 0],
    [0, 0, 128],
];

fn open(path: &Path) -> Result<DynamicImage> {
    image::open(path).map_err(|source| Error::Read { path: path.to_path_buf(), source })
}

/// Loads any supported image as 8-bit gray, `round(0.299 R + 0.587 G + 0.114 B)`.
pub fn load_gray(path: &Path) -> Result<GrayImage> {
    let img = open(path)?;
    if let DynamicImage::ImageLuma8(g) = img {
        let (w, h) = g.dimensions();
        return GrayImage::new(w, h, g.into_raw());
    }
    let rgb = img.to_rgb8();
    let (w, h) = rgb.dimensions();
    let pixels = rgb
        .pixels()
        .map(|p| {
            let [r, g, b] = p.0;
            (0.299 * r as f64 + 0.587 * g as f64 + 0.114 * b as f64).round() as u8
        })
        .collect();
    GrayImage::new(w, h, pixels)
}

/// Writes `bytes` to `path` via a sibling temporary file and a rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

fn encode_png<P, C>(path: &Path, buf: &ImageBuffer<P, C>) -> Result<Vec<u8>>
where
    P: image::PixelWithColorType,
    [P::Subpixel]: image::EncodableLayout,
    C: std::ops::Deref<Target = [P::Subpixel]>,
{
    let mut out = std::io::Cursor::new(Vec::new());
    buf.write_to(&mut out, ImageFormat::Png)
        .map_err(|source| Error::Write { path: path.to_path_buf(), source })?;
    Ok(out.into_inner())
}

pub fn save_gray(path: &Path, img: &GrayImage) -> Result<()> {
    let buf: ImageBuffer<Luma<u8>, Vec<u8>> = ImageBuffer::from_raw(img.width(), img.height(), img.pixels().to_vec())
        .ok_or_else(|| Error::InvalidRaster("gray buffer size".into()))?;
    write_atomic(path, &encode_png(path, &buf)?)
}

/// Saves labels as a 16-bit single-channel PNG.
pub fn save_labels(path: &Path, labels: &LabelRaster) -> Result<()> {
    let buf: ImageBuffer<Luma<u16>, Vec<u16>> =
        ImageBuffer::from_raw(labels.width, labels.height, labels.labels.clone())
            .ok_or_else(|| Error::InvalidRaster("label buffer size".into()))?;
    write_atomic(path, &encode_png(path, &buf)?)
}

/// Reads a label raster; 8- and 16-bit single-channel images are taken
/// verbatim, anything else is rejected rather than guessed at.
pub fn load_labels(path: &Path) -> Result<LabelRaster> {
    match open(path)? {
        DynamicImage::ImageLuma16(b) => {
            let (w, h) = b.dimensions();
            LabelRaster::new(w, h, b.into_raw())
        }
        DynamicImage::ImageLuma8(b) => {
            let (w, h) = b.dimensions();
            LabelRaster::new(w, h, b.into_raw().into_iter().map(u16::from).collect())
        }
        other => Err(Error::InvalidRaster(format!(
            "{}: label rasters must be single-channel, got {:?}",
            path.display(),
            other.color()
        ))),
    }
}

/// The page in gray with each labelled pixel painted in its line's colour.
pub fn overlay(img: &GrayImage, labels: &LabelRaster) -> Result<RgbImage> {
    if (img.width(), img.height()) != (labels.width, labels.height) {
        return Err(Error::DimensionMismatch(img.width(), img.height(), labels.width, labels.height));
    }
    Ok(RgbImage::from_fn(img.width(), img.height(), |x, y| match labels.get(x, y) {
        0 => {
            let v = img.get(x, y);
            Rgb([v, v, v])
        }
        k => Rgb(PALETTE[(k as usize - 1) % PALETTE.len()]),
    }))
}

pub fn save_overlay(path: &Path, img: &RgbImage) -> Result<()> {
    write_atomic(path, &encode_png(path, img)?)
}

pub fn save_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    write_atomic(path, &bytes)
}
