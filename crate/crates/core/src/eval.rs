//! Line-level scoring of a label raster against ground truth: pixel IoU as the
//! match score, greedy one-to-one matching, and DR / RA / FM.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Per-pixel line labels; 0 is background, `k ≥ 1` is line `k`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelRaster {
    pub width: u32,
    pub height: u32,
    pub labels: Vec<u16>,
}

impl LabelRaster {
    pub fn new(width: u32, height: u32, labels: Vec<u16>) -> Result<Self> {
        if labels.len() != width as usize * height as usize {
            return Err(Error::InvalidRaster(format!(
                "{} labels for a {width}x{height} raster",
                labels.len()
            )));
        }
        Ok(Self { width, height, labels })
    }

    pub fn zeros(width: u32, height: u32) -> Self {
        Self { width, height, labels: vec![0; width as usize * height as usize] }
    }

    pub fn get(&self, x: u32, y: u32) -> u16 {
        self.labels[(y * self.width + x) as usize]
    }

    pub fn set(&mut self, x: u32, y: u32, label: u16) {
        self.labels[(y * self.width + x) as usize] = label;
    }

    /// Pixel count per nonzero label.
    pub fn line_sizes(&self) -> BTreeMap<u16, usize> {
        let mut out = BTreeMap::new();
        for &l in self.labels.iter().filter(|&&l| l != 0) {
            *out.entry(l).or_insert(0) += 1;
        }
        out
    }

    pub fn line_count(&self) -> usize {
        self.line_sizes().len()
    }

    /// Sorted pixel indices of line `label`.
    pub fn line_pixels(&self, label: u16) -> Vec<usize> {
        self.labels
            .iter()
            .enumerate()
            .filter(|(_, &l)| l == label)
            .map(|(i, _)| i)
            .collect()
    }
}

/// Intersection over union of two sorted, duplicate-free index sets.
pub fn match_score(gt_line: &[usize], result_line: &[usize]) -> f64 {
    let (mut i, mut j, mut inter) = (0, 0, 0usize);
    while i < gt_line.len() && j < result_line.len() {
        match gt_line[i].cmp(&result_line[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                inter += 1;
                i += 1;
                j += 1;
            }
        }
    }
    let union = gt_line.len() + result_line.len() - inter;
    if union == 0 {
        0.0
    } else {
        inter as f64 / union as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    /// Ground-truth lines.
    pub n: usize,
    /// Detected lines.
    pub m: usize,
    pub o2o: usize,
    pub dr: f64,
    pub ra: f64,
    pub fm: f64,
    pub threshold: f64,
}

fn rate(hits: usize, total: usize) -> f64 {
    if total == 0 {
        1.0
    } else {
        hits as f64 / total as f64
    }
}

impl EvalReport {
    /// Rates from raw counts. An empty side counts as fully recalled.
    pub fn from_counts(n: usize, m: usize, o2o: usize, threshold: f64) -> Self {
        let dr = rate(o2o, n);
        let ra = rate(o2o, m);
        let fm = if dr + ra > 0.0 { 2.0 * dr * ra / (dr + ra) } else { 0.0 };
        Self { n, m, o2o, dr, ra, fm, threshold }
    }
}

/// Matches lines one-to-one, greedily by descending IoU (ties to the lower
/// label pair), counting pairs whose IoU reaches `threshold`.
pub fn evaluate(gt: &LabelRaster, result: &LabelRaster, threshold: f64) -> Result<EvalReport> {
    if (gt.width, gt.height) != (result.width, result.height) {
        return Err(Error::DimensionMismatch(gt.width, gt.height, result.width, result.height));
    }
    let gt_sizes = gt.line_sizes();
    let res_sizes = result.line_sizes();
    let mut inter: HashMap<(u16, u16), usize> = HashMap::new();
    for (&g, &r) in gt.labels.iter().zip(&result.labels) {
        if g != 0 && r != 0 {
            *inter.entry((g, r)).or_insert(0) += 1;
        }
    }
    let mut pairs: Vec<(f64, u16, u16)> = inter
        .into_iter()
        .map(|((g, r), i)| (i as f64 / (gt_sizes[&g] + res_sizes[&r] - i) as f64, g, r))
        .filter(|&(s, _, _)| s >= threshold)
        .collect();
    pairs.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let mut used_g = Vec::new();
    let mut used_r = Vec::new();
    for (_, g, r) in pairs {
        if !used_g.contains(&g) && !used_r.contains(&r) {
            used_g.push(g);
            used_r.push(r);
        }
    }
    Ok(EvalReport::from_counts(gt_sizes.len(), res_sizes.len(), used_g.len(), threshold))
}

/// Dataset-level report: counts are summed and rates recomputed from the sums.
pub fn aggregate(reports: &[EvalReport], threshold: f64) -> EvalReport {
    let n = reports.iter().map(|r| r.n).sum();
    let m = reports.iter().map(|r| r.m).sum();
    let o2o = reports.iter().map(|r| r.o2o).sum();
    EvalReport::from_counts(n, m, o2o, threshold)
}

/// Percentage cut (not rounded) to two decimals, e.g. `0.957038 → "95.70%"`.
pub fn percent_truncated(ratio: f64) -> String {
    let hundredths = (ratio * 10_000.0 + 1e-9).floor() as i64;
    format!("{}.{:02}%", hundredths / 100, hundredths % 100)
}

/// Aligned text table with one row per `(label, report)`.
pub fn format_table(rows: &[(String, EvalReport)]) -> String {
    let width = rows.iter().map(|r| r.0.len()).max().unwrap_or(0).max(8);
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<width$}  {:>8}  {:>6}  {:>6}  {:>8}  {:>8}  {:>8}  {:>6}",
        "page", "M_THRESH", "N", "M", "DR", "RA", "FM", "o2o"
    );
    for (label, r) in rows {
        let _ = writeln!(
            out,
            "{:<width$}  {:>8}  {:>6}  {:>6}  {:>8}  {:>8}  {:>8}  {:>6}",
            label,
            format!("{:.0}%", r.threshold * 100.0),
            r.n,
            r.m,
            percent_truncated(r.dr),
            percent_truncated(r.ra),
            percent_truncated(r.fm),
            r.o2o
        );
    }
    out
}
