use serde::{Deserialize, Serialize};

use crate::features::SignificantPoint;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Right,
    Left,
}

/// `y = slope·x + intercept` in image coordinates (y grows downward).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegressionLine {
    pub slope: f64,
    pub intercept: f64,
    pub side: Side,
    /// Significant points behind the fit; 0 for the flat fallback.
    pub source_count: usize,
    /// Flat fallback used even though enough points were available, because
    /// they all shared one x.
    pub degenerate: bool,
}

impl RegressionLine {
    pub fn flat(y: f64, side: Side) -> Self {
        Self { slope: 0.0, intercept: y, side, source_count: 0, degenerate: false }
    }

    pub fn y_at(&self, x: f64) -> f64 {
        self.slope * x + self.intercept
    }

    /// Mean absolute vertical residual of `points` (must be nonempty).
    pub fn deviation(&self, points: &[(f64, f64)]) -> f64 {
        points.iter().map(|&(x, y)| (y - self.y_at(x)).abs()).sum::<f64>() / points.len() as f64
    }

    /// Line with the averaged slope and intercept of `lines` (must be nonempty).
    pub fn mean(lines: &[RegressionLine]) -> RegressionLine {
        let n = lines.len() as f64;
        RegressionLine {
            slope: lines.iter().map(|l| l.slope).sum::<f64>() / n,
            intercept: lines.iter().map(|l| l.intercept).sum::<f64>() / n,
            side: lines[0].side,
            source_count: lines.iter().map(|l| l.source_count).sum(),
            degenerate: false,
        }
    }
}

/// Least-squares line through the `window` side-most significant points, or a
/// flat line through the middle of `top..=bottom` when fewer are available.
pub fn build_regression_line(
    sign_points: &[SignificantPoint],
    side: Side,
    cc_top: i32,
    cc_bottom: i32,
    window: usize,
) -> RegressionLine {
    let fallback = RegressionLine::flat((cc_top + cc_bottom) as f64 / 2.0, side);
    if sign_points.len() < window {
        return fallback;
    }
    let mut pts: Vec<(i32, i32)> = sign_points.iter().map(|s| (s.pos.x, s.pos.y)).collect();
    pts.sort_unstable();
    if side == Side::Right {
        pts.reverse();
    }
    pts.truncate(window);

    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0 as f64).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1 as f64).sum::<f64>() / n;
    let (mut sxx, mut sxy) = (0.0, 0.0);
    for &(x, y) in &pts {
        let dx = x as f64 - mx;
        sxx += dx * dx;
        sxy += dx * (y as f64 - my);
    }
    if sxx == 0.0 {
        return RegressionLine { degenerate: true, ..fallback };
    }
    let slope = sxy / sxx;
    RegressionLine { slope, intercept: my - slope * mx, side, source_count: pts.len(), degenerate: false }
}
