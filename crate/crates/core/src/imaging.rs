//! Grayscale input, Otsu binarization, projection profiles and global deskew.

use std::f64::consts::FRAC_PI_4;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrayImage {
    width: u32,
    height: u32,
    pixels: Vec<u8>,
}

impl GrayImage {
    pub fn new(width: u32, height: u32, pixels: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidRaster(format!("empty gray image {width}x{height}")));
        }
        if pixels.len() != width as usize * height as usize {
            return Err(Error::InvalidRaster(format!(
                "gray image {width}x{height} has {} pixels",
                pixels.len()
            )));
        }
        Ok(Self { width, height, pixels })
    }

    pub fn filled(width: u32, height: u32, value: u8) -> Result<Self> {
        Self::new(width, height, vec![value; width as usize * height as usize])
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    pub fn get(&self, x: u32, y: u32) -> u8 {
        self.pixels[(y * self.width + x) as usize]
    }

    pub fn histogram(&self) -> [u64; 256] {
        let mut hist = [0u64; 256];
        for &v in &self.pixels {
            hist[v as usize] += 1;
        }
        hist
    }
}

/// Ink mask, `true` = foreground text.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BinaryImage {
    width: u32,
    height: u32,
    mask: Vec<bool>,
}

impl BinaryImage {
    pub fn new(width: u32, height: u32) -> Self {
        Self { width, height, mask: vec![false; width as usize * height as usize] }
    }

    pub fn from_mask(width: u32, height: u32, mask: Vec<bool>) -> Result<Self> {
        if mask.len() != width as usize * height as usize {
            return Err(Error::InvalidRaster(format!(
                "mask {width}x{height} has {} entries",
                mask.len()
            )));
        }
        Ok(Self { width, height, mask })
    }

    /// Builds a mask from rows of text where `#` marks ink. Handy for fixtures.
    pub fn from_ascii(rows: &[&str]) -> Self {
        let height = rows.len() as u32;
        let width = rows.iter().map(|r| r.chars().count()).max().unwrap_or(0) as u32;
        let mut img = Self::new(width, height);
        for (y, row) in rows.iter().enumerate() {
            for (x, c) in row.chars().enumerate() {
                if c == '#' {
                    img.set(x as u32, y as u32, true);
                }
            }
        }
        img
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    pub fn get(&self, x: u32, y: u32) -> bool {
        self.mask[(y * self.width + x) as usize]
    }

    /// Bounds-checked read; anything outside the raster is background.
    pub fn get_signed(&self, x: i32, y: i32) -> bool {
        x >= 0
            && y >= 0
            && (x as u32) < self.width
            && (y as u32) < self.height
            && self.mask[(y as u32 * self.width + x as u32) as usize]
    }

    pub fn set(&mut self, x: u32, y: u32, ink: bool) {
        self.mask[(y * self.width + x) as usize] = ink;
    }

    pub fn ink_count(&self) -> usize {
        self.mask.iter().filter(|&&b| b).count()
    }

    pub fn ink_pixels(&self) -> impl Iterator<Item = (u32, u32)> + '_ {
        let w = self.width;
        self.mask
            .iter()
            .enumerate()
            .filter(|(_, &b)| b)
            .map(move |(i, _)| (i as u32 % w, i as u32 / w))
    }
}

#[derive(Debug, Clone)]
pub struct Binarization {
    pub threshold: u8,
    pub image: BinaryImage,
    /// Set when the input holds a single intensity and nothing can be split.
    pub degenerate: bool,
    /// Set when the light class was taken as ink (light text on dark ground).
    pub inverted: bool,
}

/// Between-class variance scaled by `total²`, computed from integer sums so that
/// thresholds whose splits coincide score bit-identically.
fn between_class_score(total: u64, sum: u64, count0: u64, sum0: u64) -> f64 {
    let count1 = total - count0;
    if count0 == 0 || count1 == 0 {
        return 0.0;
    }
    let diff = total as i128 * sum0 as i128 - count0 as i128 * sum as i128;
    let d = diff as f64;
    d * d / (count0 as f64 * count1 as f64)
}

/// Otsu threshold over the 256-bin histogram. Pixels `<= threshold` form the dark
/// class, which becomes ink unless it covers more than half the page.
pub fn otsu_binarize(img: &GrayImage) -> Binarization {
    let hist = img.histogram();
    let total = img.pixels.len() as u64;
    let distinct: Vec<usize> = (0..256).filter(|&v| hist[v] > 0).collect();
    if distinct.len() <= 1 {
        return Binarization {
            threshold: distinct.first().copied().unwrap_or(0) as u8,
            image: BinaryImage::new(img.width, img.height),
            degenerate: true,
            inverted: false,
        };
    }
    let sum: u64 = hist.iter().enumerate().map(|(v, &c)| v as u64 * c).sum();

    let mut best_t = 0usize;
    let mut best_score = f64::NEG_INFINITY;
    let (mut count0, mut sum0) = (0u64, 0u64);
    for (t, &h) in hist.iter().enumerate() {
        count0 += h;
        sum0 += t as u64 * h;
        let score = between_class_score(total, sum, count0, sum0);
        if score > best_score {
            best_score = score;
            best_t = t;
        }
    }

    let threshold = best_t as u8;
    let dark: usize = hist[..=best_t].iter().sum::<u64>() as usize;
    let inverted = dark * 2 > img.pixels.len();
    let mask = img.pixels.iter().map(|&v| (v <= threshold) != inverted).collect();
    Binarization {
        threshold,
        image: BinaryImage { width: img.width, height: img.height, mask },
        degenerate: false,
        inverted,
    }
}

/// Ink count per row.
pub fn row_projection_profile(img: &BinaryImage) -> Vec<u32> {
    img.mask
        .chunks(img.width as usize)
        .map(|row| row.iter().filter(|&&b| b).count() as u32)
        .collect()
}

/// Population standard deviation of a profile.
pub fn profile_stddev(profile: &[u32]) -> f64 {
    if profile.is_empty() {
        return 0.0;
    }
    let n = profile.len() as f64;
    let mean = profile.iter().map(|&c| c as f64).sum::<f64>() / n;
    let var = profile.iter().map(|&c| (c as f64 - mean).powi(2)).sum::<f64>() / n;
    var.sqrt()
}

/// Geometry of a rotation about the image centre onto an expanded canvas.
///
/// Positive angles turn the content counter-clockwise as displayed. The canvas
/// keeps the parity of the source dimensions so both centres fall on the same
/// sub-pixel phase and the centre pixel maps onto itself.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RotationFrame {
    pub src_width: u32,
    pub src_height: u32,
    pub dst_width: u32,
    pub dst_height: u32,
    pub angle: f64,
    cos: f64,
    sin: f64,
}

fn canvas_extent(needed: f64, parity_of: u32) -> u32 {
    let mut n = (needed - 1e-9).ceil().max(1.0) as u32;
    if n % 2 != parity_of % 2 {
        n += 1;
    }
    n
}

impl RotationFrame {
    pub fn new(src_width: u32, src_height: u32, angle: f64) -> Self {
        let (sin, cos) = angle.sin_cos();
        let (w, h) = (src_width as f64, src_height as f64);
        let dst_width = canvas_extent(w * cos.abs() + h * sin.abs(), src_width);
        let dst_height = canvas_extent(w * sin.abs() + h * cos.abs(), src_height);
        Self { src_width, src_height, dst_width, dst_height, angle, cos, sin }
    }

    fn src_center(&self) -> (f64, f64) {
        ((self.src_width as f64 - 1.0) / 2.0, (self.src_height as f64 - 1.0) / 2.0)
    }

    fn dst_center(&self) -> (f64, f64) {
        ((self.dst_width as f64 - 1.0) / 2.0, (self.dst_height as f64 - 1.0) / 2.0)
    }

    /// Maps a source coordinate into the rotated canvas.
    pub fn to_dst(&self, x: f64, y: f64) -> (f64, f64) {
        let (scx, scy) = self.src_center();
        let (dcx, dcy) = self.dst_center();
        let (dx, dy) = (x - scx, y - scy);
        (dx * self.cos + dy * self.sin + dcx, -dx * self.sin + dy * self.cos + dcy)
    }

    /// Maps a rotated-canvas coordinate back into the source.
    pub fn to_src(&self, x: f64, y: f64) -> (f64, f64) {
        let (scx, scy) = self.src_center();
        let (dcx, dcy) = self.dst_center();
        let (dx, dy) = (x - dcx, y - dcy);
        (dx * self.cos - dy * self.sin + scx, dx * self.sin + dy * self.cos + scy)
    }

    /// Nearest source pixel sampled by a destination pixel, if inside the source.
    pub fn sample_src(&self, x: u32, y: u32) -> Option<(u32, u32)> {
        let (sx, sy) = self.to_src(x as f64, y as f64);
        round_into(sx, sy, self.src_width, self.src_height)
    }

    /// Nearest destination pixel for a source pixel.
    pub fn forward_pixel(&self, x: u32, y: u32) -> Option<(u32, u32)> {
        let (dx, dy) = self.to_dst(x as f64, y as f64);
        round_into(dx, dy, self.dst_width, self.dst_height)
    }

    /// Nearest source pixel for a destination pixel, clamped into the source.
    pub fn backward_pixel_clamped(&self, x: f64, y: f64) -> (i32, i32) {
        let (sx, sy) = self.to_src(x, y);
        (
            ((sx + 0.5).floor() as i32).clamp(0, self.src_width as i32 - 1),
            ((sy + 0.5).floor() as i32).clamp(0, self.src_height as i32 - 1),
        )
    }
}

fn round_into(x: f64, y: f64, width: u32, height: u32) -> Option<(u32, u32)> {
    let (rx, ry) = ((x + 0.5).floor(), (y + 0.5).floor());
    if rx < 0.0 || ry < 0.0 || rx >= width as f64 || ry >= height as f64 {
        None
    } else {
        Some((rx as u32, ry as u32))
    }
}

/// Nearest-neighbour rotation about the image centre onto an expanded canvas.
pub fn rotate(img: &BinaryImage, angle: f64) -> BinaryImage {
    let frame = RotationFrame::new(img.width, img.height, angle);
    rotate_with(&frame, |x, y| img.get(x, y), false).into()
}

/// Samples any raster through a rotation frame.
pub fn rotate_with<T: Copy, F: Fn(u32, u32) -> T>(
    frame: &RotationFrame,
    sample: F,
    background: T,
) -> RasterBuf<T> {
    let mut out = Vec::with_capacity(frame.dst_width as usize * frame.dst_height as usize);
    for y in 0..frame.dst_height {
        for x in 0..frame.dst_width {
            out.push(match frame.sample_src(x, y) {
                Some((sx, sy)) => sample(sx, sy),
                None => background,
            });
        }
    }
    RasterBuf { width: frame.dst_width, height: frame.dst_height, data: out }
}

/// Plain row-major raster produced by [`rotate_with`].
#[derive(Debug, Clone, PartialEq)]
pub struct RasterBuf<T> {
    pub width: u32,
    pub height: u32,
    pub data: Vec<T>,
}

impl From<RasterBuf<bool>> for BinaryImage {
    fn from(r: RasterBuf<bool>) -> Self {
        BinaryImage { width: r.width, height: r.height, mask: r.data }
    }
}

/// Row profile of `rotate(img, angle)` without materialising the canvas; only
/// destination pixels whose pre-image can hold ink are visited.
pub fn rotated_profile(img: &BinaryImage, angle: f64) -> Vec<u32> {
    let frame = RotationFrame::new(img.width, img.height, angle);
    let mut profile = vec![0u32; frame.dst_height as usize];
    let Some((l, t, r, b)) = ink_bounds(img) else {
        return profile;
    };
    let corners = [(l, t), (r, t), (l, b), (r, b)].map(|(x, y)| frame.to_dst(x as f64, y as f64));
    let x0 = corners.iter().map(|c| c.0).fold(f64::INFINITY, f64::min).floor() - 1.0;
    let x1 = corners.iter().map(|c| c.0).fold(f64::NEG_INFINITY, f64::max).ceil() + 1.0;
    let y0 = corners.iter().map(|c| c.1).fold(f64::INFINITY, f64::min).floor() - 1.0;
    let y1 = corners.iter().map(|c| c.1).fold(f64::NEG_INFINITY, f64::max).ceil() + 1.0;
    let clamp_x = |v: f64| v.clamp(0.0, frame.dst_width as f64 - 1.0) as u32;
    let clamp_y = |v: f64| v.clamp(0.0, frame.dst_height as f64 - 1.0) as u32;
    for y in clamp_y(y0)..=clamp_y(y1) {
        let mut count = 0;
        for x in clamp_x(x0)..=clamp_x(x1) {
            if let Some((sx, sy)) = frame.sample_src(x, y) {
                if img.get(sx, sy) {
                    count += 1;
                }
            }
        }
        profile[y as usize] = count;
    }
    profile
}

fn ink_bounds(img: &BinaryImage) -> Option<(u32, u32, u32, u32)> {
    let mut bounds: Option<(u32, u32, u32, u32)> = None;
    for (x, y) in img.ink_pixels() {
        bounds = Some(match bounds {
            None => (x, y, x, y),
            Some((l, t, r, b)) => (l.min(x), t.min(y), r.max(x), b.max(y)),
        });
    }
    bounds
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SkewEstimate {
    /// Rotation (radians) that levels the text when passed to [`rotate`].
    pub angle: f64,
    pub profile_stddev: f64,
}

fn score_angle(img: &BinaryImage, angle: f64) -> f64 {
    profile_stddev(&rotated_profile(img, angle))
}

/// Picks the best-scoring angle; candidates must be listed by increasing magnitude
/// so that ties resolve toward the smaller rotation.
fn best_of(img: &BinaryImage, angles: impl IntoIterator<Item = f64>) -> SkewEstimate {
    let mut best = SkewEstimate { angle: 0.0, profile_stddev: f64::NEG_INFINITY };
    for a in angles {
        let s = score_angle(img, a);
        if s > best.profile_stddev {
            best = SkewEstimate { angle: a, profile_stddev: s };
        }
    }
    best
}

/// `center ± k·step` for k = 0, 1, 2, … while strictly inside `±limit` of centre
/// and inside the open search range.
fn symmetric_grid(center: f64, step: f64, limit: f64) -> Vec<f64> {
    let mut out = vec![center];
    let mut k = 1;
    loop {
        let off = k as f64 * step;
        if off >= limit - 1e-12 {
            break;
        }
        for a in [center + off, center - off] {
            if a.abs() < FRAC_PI_4 - 1e-12 {
                out.push(a);
            }
        }
        k += 1;
    }
    out
}

/// Grid search over (−π/4, π/4) at the given step for the rotation whose row
/// profile has the largest standard deviation.
pub fn estimate_skew(img: &BinaryImage, step: f64) -> Result<SkewEstimate> {
    if step <= 0.0 || !step.is_finite() {
        return Err(Error::Config(format!("skew step must be positive, got {step}")));
    }
    if img.ink_count() == 0 {
        return Err(Error::EmptyInk);
    }
    Ok(best_of(img, symmetric_grid(0.0, step, FRAC_PI_4)))
}

/// Coarse grid search followed by a fine search within one coarse step of the winner.
pub fn estimate_skew_refined(img: &BinaryImage, coarse: f64, fine: f64) -> Result<SkewEstimate> {
    let first = estimate_skew(img, coarse)?;
    if fine <= 0.0 || !fine.is_finite() {
        return Err(Error::Config(format!("skew step must be positive, got {fine}")));
    }
    let mut grid = symmetric_grid(first.angle, fine, coarse + fine * 0.5);
    // Same tie rule as the coarse pass: prefer smaller magnitudes.
    grid.sort_by(|a, b| a.abs().total_cmp(&b.abs()));
    let refined = best_of(img, grid);
    Ok(if refined.profile_stddev >= first.profile_stddev { refined } else { first })
}
