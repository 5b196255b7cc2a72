//! Whole-page segmentation: binarize, level, sweep, post-process, and map the
//! result back onto the input raster.

use serde::{Deserialize, Serialize};

use crate::clustering::{segment_components, AssignEvent};
use crate::components::{despeckle, extract_filled_components};
use crate::config::PipelineConfig;
use crate::error::Result;
use crate::eval::LabelRaster;
use crate::geometry::Point;
use crate::imaging::{estimate_skew_refined, otsu_binarize, rotate, BinaryImage, GrayImage, RotationFrame};
use crate::postprocess::{assign_specials, MergeDecision};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentRecord {
    pub id: usize,
    /// `[left, top, right, bottom]`, inclusive, in input coordinates.
    pub bbox: [i32; 4],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LineRecord {
    /// 1-based, top to bottom; equals the line's value in the label raster.
    pub index: usize,
    pub components: Vec<ComponentRecord>,
    pub median_line: Vec<[f64; 2]>,
}

/// The per-page JSON document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PageJson {
    pub page: String,
    pub lines: Vec<LineRecord>,
}

#[derive(Debug, Clone)]
pub struct PageResult {
    pub lines: Vec<LineRecord>,
    /// Line index per ink pixel of the input; 0 elsewhere.
    pub labels: LabelRaster,
    pub threshold: u8,
    /// Rotation applied to level the page, in degrees (0 when deskew is off).
    pub deskew_deg: f64,
    /// Hole-filled ink area in the levelled frame and the part of it that
    /// ended up in some line; equal unless pixels were lost.
    pub filled_area: usize,
    pub assigned_area: usize,
    pub trace: Vec<AssignEvent>,
    pub merges: Vec<MergeDecision>,
}

impl PageResult {
    pub fn to_json(&self, page: &str) -> PageJson {
        PageJson { page: page.to_string(), lines: self.lines.clone() }
    }
}

/// Maps levelled-frame coordinates back to the input.
struct Unrotate(Option<RotationFrame>);

impl Unrotate {
    fn point(&self, x: f64, y: f64) -> (f64, f64) {
        match &self.0 {
            Some(f) => f.to_src(x, y),
            None => (x, y),
        }
    }
}

/// Nearest nonzero label within `radius` of `(x, y)` (ties: scan order).
fn nearest_label(labels: &LabelRaster, x: i64, y: i64, radius: i64) -> u16 {
    let mut best = (i64::MAX, 0u16);
    for dy in -radius..=radius {
        for dx in -radius..=radius {
            let (px, py) = (x + dx, y + dy);
            if px < 0 || py < 0 || px >= labels.width as i64 || py >= labels.height as i64 {
                continue;
            }
            let l = labels.get(px as u32, py as u32);
            let d = dx * dx + dy * dy;
            if l != 0 && d < best.0 {
                best = (d, l);
            }
        }
    }
    best.1
}

pub fn segment_page(img: &GrayImage, cfg: &PipelineConfig) -> Result<PageResult> {
    cfg.validate()?;
    let bin = otsu_binarize(img);
    let mut ink = bin.image;
    if cfg.despeckle_min_px > 0 {
        ink = despeckle(&ink, cfg.despeckle_min_px);
    }

    let mut angle = 0.0;
    if cfg.deskew && ink.ink_count() > 0 {
        angle = estimate_skew_refined(&ink, cfg.skew_coarse_deg.to_radians(), cfg.skew_fine_deg.to_radians())?.angle;
    }
    let (work, frame): (BinaryImage, Option<RotationFrame>) = if angle != 0.0 {
        let frame = RotationFrame::new(ink.width(), ink.height(), angle);
        (rotate(&ink, angle), Some(frame))
    } else {
        (ink.clone(), None)
    };

    let comps = extract_filled_components(&work);
    let filled_area = comps.iter().map(|c| c.filled_area()).sum();
    let state = segment_components(comps, work.width(), cfg);
    let post = assign_specials(&state);
    let store = &state.components;

    let mut work_labels = LabelRaster::zeros(work.width(), work.height());
    let mut assigned_area = 0;
    let unrotate = Unrotate(frame);
    let mut lines = Vec::with_capacity(post.lines.len());
    for (k, line) in post.lines.iter().enumerate() {
        let label = (k + 1) as u16;
        let mut members = line.members.clone();
        members.sort_unstable();
        let mut components = Vec::with_capacity(members.len());
        for id in members {
            let cc = &store[&id].cc;
            assigned_area += cc.filled_area();
            let (mut l, mut t, mut r, mut b) = (i32::MAX, i32::MAX, i32::MIN, i32::MIN);
            for p in cc.filled.points() {
                if work.get_signed(p.x, p.y) {
                    work_labels.set(p.x as u32, p.y as u32, label);
                }
                let (sx, sy) = unrotate.point(p.x as f64, p.y as f64);
                let (sx, sy) = (sx.round() as i32, sy.round() as i32);
                l = l.min(sx);
                t = t.min(sy);
                r = r.max(sx);
                b = b.max(sy);
            }
            let clamp_x = |v: i32| v.clamp(0, img.width() as i32 - 1);
            let clamp_y = |v: i32| v.clamp(0, img.height() as i32 - 1);
            components.push(ComponentRecord { id, bbox: [clamp_x(l), clamp_y(t), clamp_x(r), clamp_y(b)] });
        }
        let median_line = line
            .median
            .vertices
            .iter()
            .map(|&(x, y)| {
                let (sx, sy) = unrotate.point(x, y);
                [sx, sy]
            })
            .collect();
        lines.push(LineRecord { index: k + 1, components, median_line });
    }

    let labels = match &unrotate.0 {
        None => work_labels,
        Some(f) => {
            let mut out = LabelRaster::zeros(ink.width(), ink.height());
            for (x, y) in ink.ink_pixels() {
                let (dx, dy) = f.to_dst(x as f64, y as f64);
                let (px, py) = ((dx + 0.5).floor() as i64, (dy + 0.5).floor() as i64);
                let mut l = nearest_label(&work_labels, px, py, 2);
                if l == 0 {
                    l = nearest_label(&work_labels, px, py, 8);
                }
                out.set(x, y, l);
            }
            out
        }
    };

    Ok(PageResult {
        lines,
        labels,
        threshold: bin.threshold,
        deskew_deg: angle.to_degrees(),
        filled_area,
        assigned_area,
        trace: state.trace,
        merges: post.merges,
    })
}

/// Ink pixels of `labels` as points, for callers that need pixel sets.
pub fn line_points(labels: &LabelRaster, index: u16) -> Vec<Point> {
    labels
        .line_pixels(index)
        .into_iter()
        .map(|i| Point::new((i % labels.width as usize) as i32, (i / labels.width as usize) as i32))
        .collect()
}
