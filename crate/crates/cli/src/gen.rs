use std::path::{Path, PathBuf};

use serde::Serialize;

use lineseg::io;
use lineseg::synth::{generate_page, PageSpec};

#[derive(Debug, Clone)]
pub struct GenOptions {
    pub count: usize,
    pub min_lines: usize,
    pub max_lines: usize,
    /// Skews cycle through `[-max_skew_deg, max_skew_deg]`.
    pub max_skew_deg: f64,
    /// Blank space between lines (beyond ascenders and descenders), in x-heights.
    pub line_gap: f64,
    /// Fraction of pages that carry one touching word pair.
    pub touching: f64,
    pub seed: u64,
    pub width: u32,
}

impl Default for GenOptions {
    fn default() -> Self {
        Self {
            count: 10,
            min_lines: 3,
            max_lines: 8,
            max_skew_deg: 10.0,
            line_gap: PageSpec::default().line_gap,
            touching: 0.0,
            seed: 0,
            width: 640,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct GeneratedPage {
    pub image: PathBuf,
    pub truth: PathBuf,
    pub spec: PageSpec,
    pub touching_pair: Option<(u16, u16)>,
}

/// Whether page `i` gets a touching pair: spreads exactly `⌊count·p⌋` such
/// pages evenly instead of drawing them at random.
pub fn is_touching(p: f64, i: usize) -> bool {
    let p = p.clamp(0.0, 1.0);
    ((i + 1) as f64 * p).floor() > (i as f64 * p).floor()
}

/// Spec of page `i`: line counts cycle through the range, skews step
/// through 21 evenly spaced values.
pub fn page_spec(opts: &GenOptions, i: usize) -> PageSpec {
    let span = opts.max_lines.saturating_sub(opts.min_lines) + 1;
    let step = ((i * 7) % 21) as f64 - 10.0;
    PageSpec {
        width: opts.width,
        lines: opts.min_lines + i % span,
        skew_deg: opts.max_skew_deg * step / 10.0,
        line_gap: opts.line_gap,
        touching: is_touching(opts.touching, i),
        seed: opts.seed + i as u64,
        ..PageSpec::default()
    }
}

/// Writes `images/page_NNN.png`, `gt/page_NNN.png` and a `pages.json` index.
pub fn run(out_dir: &Path, opts: &GenOptions) -> lineseg::Result<Vec<GeneratedPage>> {
    let images = out_dir.join("images");
    let gt = out_dir.join("gt");
    std::fs::create_dir_all(&images)?;
    std::fs::create_dir_all(&gt)?;
    let mut pages = Vec::with_capacity(opts.count);
    for i in 0..opts.count {
        let spec = page_spec(opts, i);
        let page = generate_page(&spec);
        let name = format!("page_{i:03}.png");
        let (img_path, gt_path) = (images.join(&name), gt.join(&name));
        io::save_gray(&img_path, &page.image)?;
        io::save_labels(&gt_path, &page.truth)?;
        pages.push(GeneratedPage { image: img_path, truth: gt_path, spec, touching_pair: page.touching_pair });
    }
    io::save_json(&out_dir.join("pages.json"), &pages)?;
    Ok(pages)
}
