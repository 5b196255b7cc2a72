//! Synthetic handwriting-like pages with exact per-pixel line labels.
//!
//! Words are chains of pseudo-glyphs (bowls, arches, stems with ascenders and
//! descenders) joined along the baseline, drawn with a round pen. Pages can be
//! skewed and can carry one connector stroke that makes a word touch the word
//! below it. The labels mark exactly the ink pixels of the gray image.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::eval::LabelRaster;
use crate::imaging::{GrayImage, RotationFrame};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PageSpec {
    /// Width of the level page before rotation.
    pub width: u32,
    pub lines: usize,
    pub skew_deg: f64,
    pub x_height: f64,
    /// Extra blank space between lines, in x-heights (on top of ascenders and descenders).
    pub line_gap: f64,
    pub touching: bool,
    pub seed: u64,
}

impl Default for PageSpec {
    fn default() -> Self {
        Self { width: 640, lines: 5, skew_deg: 0.0, x_height: 14.0, line_gap: 2.0, touching: false, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticPage {
    pub image: GrayImage,
    pub truth: LabelRaster,
    pub lines: usize,
    pub skew_deg: f64,
    /// Line pair `(k, k+1)` (1-based labels) joined by a connector, if any.
    pub touching_pair: Option<(u16, u16)>,
}

const PEN_RADIUS: f64 = 1.3;
const INK: u8 = 30;
const BACKGROUND: u8 = 228;

struct Canvas {
    frame: RotationFrame,
    labels: Vec<u16>,
}

impl Canvas {
    fn stamp(&mut self, x: f64, y: f64, r: f64, label: u16) {
        let (cx, cy) = self.frame.to_dst(x, y);
        let (w, h) = (self.frame.dst_width as i64, self.frame.dst_height as i64);
        let (x0, x1) = ((cx - r).floor() as i64, (cx + r).ceil() as i64);
        let (y0, y1) = ((cy - r).floor() as i64, (cy + r).ceil() as i64);
        for py in y0.max(0)..=y1.min(h - 1) {
            for px in x0.max(0)..=x1.min(w - 1) {
                let (dx, dy) = (px as f64 - cx, py as f64 - cy);
                if dx * dx + dy * dy <= r * r {
                    let i = (py * w + px) as usize;
                    if self.labels[i] == 0 {
                        self.labels[i] = label;
                    }
                }
            }
        }
    }

    fn segment(&mut self, a: (f64, f64), b: (f64, f64), label: u16) {
        let len = (b.0 - a.0).hypot(b.1 - a.1);
        let steps = (len / 0.3).ceil().max(1.0) as usize;
        for s in 0..=steps {
            let t = s as f64 / steps as f64;
            self.stamp(a.0 + (b.0 - a.0) * t, a.1 + (b.1 - a.1) * t, PEN_RADIUS, label);
        }
    }

    fn polyline(&mut self, pts: &[(f64, f64)], label: u16) {
        for w in pts.windows(2) {
            self.segment(w[0], w[1], label);
        }
    }

    /// A squarish loop (superellipse of exponent 3), closer to a written bowl
    /// than a true ellipse.
    fn ellipse(&mut self, c: (f64, f64), rx: f64, ry: f64, label: u16) {
        let n = 64;
        let p = 2.0 / 3.0;
        let pts: Vec<(f64, f64)> = (0..=n)
            .map(|k| {
                let t = k as f64 / n as f64 * std::f64::consts::TAU;
                let (ct, st) = (t.cos(), t.sin());
                (c.0 + rx * ct.signum() * ct.abs().powf(p), c.1 + ry * st.signum() * st.abs().powf(p))
            })
            .collect();
        self.polyline(&pts, label);
    }
}

/// Glyph metrics shared by a page.
#[derive(Clone, Copy)]
struct Metrics {
    h: f64,
    asc: f64,
    desc: f64,
    w: f64,
}

const GLYPHS: &[u8] = b"oanuhldpgie";

/// Draws glyph `g` with its left edge at `x0` on baseline `y0`; returns
/// `(width, entry x, anchor x)` where entry/anchor are the baseline contacts
/// used by the ligatures.
fn glyph(c: &mut Canvas, g: u8, x0: f64, y0: f64, m: Metrics, label: u16) -> (f64, f64, f64) {
    let Metrics { h, asc, desc, w } = m;
    let top = y0 - h;
    let bowl = |c: &mut Canvas, cx: f64| c.ellipse((cx, y0 - h / 2.0), w / 2.0, h / 2.0, label);
    match g {
        b'o' => {
            bowl(c, x0 + w / 2.0);
            (w, x0 + w / 2.0, x0 + w / 2.0)
        }
        b'a' => {
            bowl(c, x0 + w / 2.0);
            c.segment((x0 + w, top), (x0 + w, y0), label);
            (w, x0 + w / 2.0, x0 + w)
        }
        b'n' | b'h' => {
            let stem_top = if g == b'h' { top - asc } else { top };
            c.segment((x0, y0), (x0, stem_top), label);
            c.polyline(
                &[
                    (x0, y0 - 0.6 * h),
                    (x0 + 0.25 * w, y0 - 0.95 * h),
                    (x0 + 0.75 * w, y0 - 0.95 * h),
                    (x0 + w, y0 - 0.6 * h),
                    (x0 + w, y0),
                ],
                label,
            );
            (w, x0, x0 + w)
        }
        b'u' => {
            c.polyline(
                &[
                    (x0, top),
                    (x0, y0 - 0.4 * h),
                    (x0 + 0.25 * w, y0 - 0.05 * h),
                    (x0 + 0.75 * w, y0 - 0.05 * h),
                    (x0 + w, y0 - 0.4 * h),
                ],
                label,
            );
            c.segment((x0 + w, top), (x0 + w, y0), label);
            (w, x0 + 0.25 * w, x0 + w)
        }
        b'l' => {
            let x = x0 + 0.3 * w;
            c.segment((x, y0), (x, top - asc), label);
            (0.6 * w, x, x)
        }
        b'd' => {
            bowl(c, x0 + w / 2.0);
            c.segment((x0 + w, top - asc), (x0 + w, y0), label);
            (w, x0 + w / 2.0, x0 + w)
        }
        b'p' => {
            c.segment((x0, top), (x0, y0 + desc), label);
            bowl(c, x0 + w / 2.0);
            (w, x0, x0 + w / 2.0)
        }
        b'g' => {
            bowl(c, x0 + w / 2.0);
            c.polyline(
                &[
                    (x0 + w, top),
                    (x0 + w, y0 + desc - 3.0),
                    (x0 + 0.6 * w, y0 + desc),
                    (x0 + 0.1 * w, y0 + desc - 2.0),
                ],
                label,
            );
            (w, x0 + w / 2.0, x0 + w / 2.0)
        }
        b'i' => {
            let x = x0 + 0.25 * w;
            c.segment((x, y0), (x, top), label);
            c.stamp(x, top - 0.45 * h, PEN_RADIUS + 0.4, label);
            (0.5 * w, x, x)
        }
        _ => {
            // 'e': a bowl opened on the right with a bar.
            let cx = x0 + w / 2.0;
            let n = 40;
            let pts: Vec<(f64, f64)> = (0..=n)
                .map(|k| {
                    let t = 0.15 * std::f64::consts::TAU
                        + k as f64 / n as f64 * 0.85 * std::f64::consts::TAU;
                    (cx + w / 2.0 * t.cos(), y0 - h / 2.0 - h / 2.0 * t.sin())
                })
                .collect();
            c.polyline(&pts, label);
            c.segment((x0, y0 - h / 2.0), (x0 + w, y0 - h / 2.0), label);
            (w, cx, cx)
        }
    }
}

/// Horizontal extent of one drawn word on its line.
#[derive(Debug, Clone, Copy)]
struct WordBox {
    left: f64,
    right: f64,
}

fn draw_word(c: &mut Canvas, rng: &mut ChaCha8Rng, x0: f64, y0: f64, m: Metrics, label: u16) -> WordBox {
    let len = rng.random_range(2..=6);
    let mut x = x0;
    let mut prev_anchor: Option<f64> = None;
    for k in 0..len {
        let mut g = GLYPHS[rng.random_range(0..GLYPHS.len())];
        if k == 0 && g == b'i' {
            g = b'n';
        }
        let (width, entry, anchor) = glyph(c, g, x, y0, m, label);
        if let Some(a) = prev_anchor {
            // Upward arc, as in joined handwriting, rather than a flat baseline run.
            let mid = ((a + entry) / 2.0, y0 - 0.5 * m.h);
            c.polyline(&[(a, y0), mid, (entry, y0)], label);
        }
        prev_anchor = Some(anchor);
        x += width + 0.6 * m.w;
    }
    WordBox { left: x0, right: x - 0.6 * m.w }
}

/// Renders a page; identical specs give identical pages.
pub fn generate_page(spec: &PageSpec) -> SyntheticPage {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let h = spec.x_height;
    let m = Metrics { h, asc: 0.7 * h, desc: 0.7 * h, w: 0.7 * h };
    let margin = 2.0 * h;
    let pitch = m.asc + h + m.desc + spec.line_gap * h;
    let height = (2.0 * margin + spec.lines as f64 * pitch).ceil() as u32;
    let frame = RotationFrame::new(spec.width, height, spec.skew_deg.to_radians());
    let mut canvas = Canvas { frame, labels: vec![0; frame.dst_width as usize * frame.dst_height as usize] };

    let mut words: Vec<Vec<WordBox>> = Vec::new();
    let mut baselines = Vec::new();
    for k in 0..spec.lines {
        let label = k as u16 + 1;
        let y0 = margin + m.asc + h + k as f64 * pitch + rng.random_range(0.0..0.15 * h);
        baselines.push(y0);
        let mut x = margin + rng.random_range(0.0..2.0 * h);
        let mut line_words = Vec::new();
        while x + 6.0 * m.w < spec.width as f64 - margin {
            let wb = draw_word(&mut canvas, &mut rng, x, y0, m, label);
            x = wb.right;
            if rng.random_bool(0.2) {
                // Comma hanging off the baseline just after the word.
                canvas.stamp(x + 4.0, y0 - 1.0, PEN_RADIUS + 1.0, label);
                canvas.segment((x + 4.0, y0 - 1.0), (x + 2.5, y0 + 0.4 * h), label);
                x += 4.0;
            }
            line_words.push(wb);
            x += rng.random_range(1.0..1.5) * h;
        }
        words.push(line_words);
    }

    let mut touching_pair = None;
    if spec.touching && spec.lines >= 2 {
        let k = rng.random_range(0..spec.lines - 1);
        let mut spans = Vec::new();
        for a in &words[k] {
            for b in &words[k + 1] {
                let lo = a.left.max(b.left) + 3.0;
                let hi = a.right.min(b.right) - 3.0;
                if hi > lo {
                    spans.push((lo, hi));
                }
            }
        }
        if !spans.is_empty() {
            let (lo, hi) = spans[rng.random_range(0..spans.len())];
            let xa = rng.random_range(lo..=hi);
            let xb = (xa + 3.0).min(hi);
            let (ya, yb) = (baselines[k], baselines[k + 1]);
            let mid = (ya + m.desc + yb - h - m.asc) / 2.0;
            let ym = mid;
            let xm = xa + (xb - xa) * (ym - ya) / (yb - ya);
            canvas.segment((xa, ya), (xm, ym), k as u16 + 1);
            canvas.segment((xm, ym), (xb, yb), k as u16 + 2);
            touching_pair = Some((k as u16 + 1, k as u16 + 2));
        }
    }

    let (w, hgt) = (frame.dst_width, frame.dst_height);
    let pixels: Vec<u8> = canvas
        .labels
        .iter()
        .map(|&l| {
            let jitter = rng.random_range(-8i16..=8);
            let base = if l == 0 { BACKGROUND } else { INK } as i16;
            (base + jitter) as u8
        })
        .collect();
    SyntheticPage {
        image: GrayImage::new(w, hgt, pixels).expect("sizes agree"),
        truth: LabelRaster::new(w, hgt, canvas.labels).expect("sizes agree"),
        lines: spec.lines,
        skew_deg: spec.skew_deg,
        touching_pair,
    }
}
