use serde::{Deserialize, Serialize};

use super::{Cluster, ComponentFeatures, ComponentStore, RegressionLine, Side};
use crate::components::{connected_pieces, ConnectedComponent};
use crate::config::{PipelineConfig, SpecialRule2};
use crate::geometry::{interval_overlap, Point};
use crate::mixture::HeightMixture;

/// Up to `cap` clusters ranked by the distance from the component's leftmost
/// point to each cluster's newest right line, evaluated at that x clamped to
/// the cluster's horizontal extent. Returns `(cluster index, distance)`.
pub fn candidate_clusters(f: &ComponentFeatures, clusters: &[Cluster], cap: usize) -> Vec<(usize, f64)> {
    let lp = f.cc.leftmost_point();
    let mut ranked: Vec<(usize, f64)> = clusters
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let x = lp.x.clamp(c.bbox.left, c.bbox.right) as f64;
            let y = c.last_right_line().y_at(x);
            (i, (lp.x as f64 - x).hypot(lp.y as f64 - y))
        })
        .collect();
    ranked.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
    ranked.truncate(cap);
    ranked
}

/// Smallest, over the cluster's right lines, of the mean absolute vertical
/// residual of the component's significant points.
pub fn cluster_distance(f: &ComponentFeatures, cluster: &Cluster) -> f64 {
    let probes = f.probe_points();
    cluster
        .right_lines
        .iter()
        .map(|l| l.deviation(&probes))
        .fold(f64::INFINITY, f64::min)
}

/// Few strokes and either shorter than the body height or matching the
/// height/width rule selected by `special_rule2`.
pub fn is_special(f: &ComponentFeatures, mix: &HeightMixture, cfg: &PipelineConfig) -> bool {
    if f.stroke_count() >= cfg.stroke_special_max {
        return false;
    }
    let ht = f.cc.ht() as f64;
    let wd = f.cc.wd() as f64;
    let shape = match cfg.special_rule2 {
        SpecialRule2::Literal => ht < 3.0 * wd,
        SpecialRule2::Inverted => wd > 3.0 * ht,
    };
    ht < mix.ht2() || shape
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NewClusterCheck {
    /// Share of the filled area inside the `ht1` band around the best line.
    pub area_ratio: f64,
    /// Cluster strokes whose x-span meets the component's x-extent; pieces
    /// of the same broken component are not counted against each other.
    pub cluster_overlaps: usize,
    /// Component strokes whose x-span meets the cluster's x-extent.
    pub cc_overlaps: usize,
    pub new_cluster: bool,
}

pub fn is_new_cluster(
    f: &ComponentFeatures,
    cluster: &Cluster,
    mix: &HeightMixture,
    store: &ComponentStore,
    cfg: &PipelineConfig,
) -> NewClusterCheck {
    let probes = f.probe_points();
    let line = cluster
        .right_lines
        .iter()
        .min_by(|a, b| a.deviation(&probes).total_cmp(&b.deviation(&probes)))
        .expect("clusters keep at least one line");
    let half = mix.ht1() / 2.0;
    let total = f.cc.filled_area();
    let inside = f
        .cc
        .filled
        .points()
        .filter(|p| (p.y as f64 - line.y_at(p.x as f64)).abs() <= half)
        .count();
    let area_ratio = inside as f64 / total as f64;

    let cc_span = (f.cc.bbox.left, f.cc.bbox.right);
    let cl_span = (cluster.bbox.left, cluster.bbox.right);
    let cluster_overlaps = cluster
        .strokes_excluding(store, f.origin)
        .filter(|s| interval_overlap(s.x_span(), cc_span) > 0)
        .count();
    let cc_overlaps = f
        .strokes
        .iter()
        .filter(|s| interval_overlap(s.x_span(), cl_span) > 0)
        .count();
    let new_cluster = area_ratio < cfg.area_ratio
        || (cluster_overlaps > cfg.overlap_stroke_min && cc_overlaps > cfg.overlap_stroke_min);
    NewClusterCheck { area_ratio, cluster_overlaps, cc_overlaps, new_cluster }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Piece {
    pub points: Vec<Point>,
    pub strokes: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BreakOutcome {
    pub line: RegressionLine,
    pub broken: bool,
    /// After correction when `broken`, otherwise the raw band split.
    pub in_pieces: Vec<Piece>,
    pub out_pieces: Vec<Piece>,
}

impl BreakOutcome {
    /// The component must be replaced by its pieces: it was broken and
    /// something is still left outside the band after correction.
    pub fn splits(&self) -> bool {
        self.broken && !self.out_pieces.is_empty() && !self.in_pieces.is_empty()
    }
}

fn pieces(points: &[Point], cfg: &PipelineConfig) -> Vec<Piece> {
    connected_pieces(points)
        .into_iter()
        .map(|pts| {
            let cc = ConnectedComponent::from_pixels(0, pts);
            let strokes = ComponentFeatures::compute(cc.clone(), cfg.min_branch).stroke_count();
            Piece { points: cc.pixels, strokes }
        })
        .collect()
}

/// Splits the component's filled pixels with a band of total height `ht2`
/// around the mean of the cluster's `side` lines. The component is broken when
/// an in-band piece carries more than `stroke_break_min` strokes; small pieces
/// then swap sides so that stray tails rejoin their word.
pub fn component_break(
    cluster: &Cluster,
    mix: &HeightMixture,
    f: &ComponentFeatures,
    side: Side,
    cfg: &PipelineConfig,
) -> BreakOutcome {
    let line = RegressionLine::mean(cluster.lines(side));
    let half = mix.ht2() / 2.0;
    let (inside, outside): (Vec<Point>, Vec<Point>) = f
        .cc
        .filled
        .points()
        .partition(|p| (p.y as f64 - line.y_at(p.x as f64)).abs() <= half);
    let in_pieces = pieces(&inside, cfg);
    let out_pieces = pieces(&outside, cfg);
    let broken = in_pieces.iter().any(|p| p.strokes > cfg.stroke_break_min);
    if !broken {
        return BreakOutcome { line, broken, in_pieces, out_pieces };
    }
    let min = cfg.stroke_break_min;
    let (in_small, in_keep): (Vec<Piece>, Vec<Piece>) = in_pieces.into_iter().partition(|p| p.strokes < min);
    let (out_small, out_keep): (Vec<Piece>, Vec<Piece>) = out_pieces.into_iter().partition(|p| p.strokes < min);
    let mut in_final = in_keep;
    in_final.extend(out_small);
    let mut out_final = out_keep;
    out_final.extend(in_small);
    let key = |p: &Piece| p.points.iter().map(|q| (q.x, q.y)).min();
    in_final.sort_by_key(key);
    out_final.sort_by_key(key);
    BreakOutcome { line, broken, in_pieces: in_final, out_pieces: out_final }
}
