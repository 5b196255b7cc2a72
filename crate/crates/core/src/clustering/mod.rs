//! Left-to-right sweep that grows one cluster per text line.
//!
//! Each component is compared against the nearest clusters through their
//! regression lines; small components are deferred as specials, components
//! far from every line open new clusters, and components straddling two lines
//! are cut along a band around the line they belong to.

mod regression;
mod rules;
mod state;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

pub use regression::{build_regression_line, RegressionLine, Side};
pub use rules::{
    candidate_clusters, cluster_distance, component_break, is_new_cluster, is_special, BreakOutcome,
    NewClusterCheck, Piece,
};
pub use state::{segment_components, AssignAction, AssignEvent, BackwardRequest, SegmentationState};

use crate::components::ConnectedComponent;
use crate::config::PipelineConfig;
use crate::features::{extract_significant_points, extract_strokes, SignificantPoint, Stroke};
use crate::geometry::{BBox, Point};
use crate::mixture::{column_heights, fit_gmm3, HeightMixture, HeightSample};
use crate::skeleton::{prune, thin};

/// A component together with everything the clustering rules read from it.
#[derive(Debug, Clone, PartialEq)]
pub struct ComponentFeatures {
    pub cc: ConnectedComponent,
    /// Id of the extracted component this one descends from (its own id
    /// unless it is a piece of a broken component).
    pub origin: usize,
    pub strokes: Vec<Stroke>,
    pub sign_points: Vec<SignificantPoint>,
    pub heights: Vec<HeightSample>,
}

impl ComponentFeatures {
    pub fn compute(cc: ConnectedComponent, min_branch: usize) -> Self {
        let sk = prune(&thin(&cc), min_branch);
        let strokes = extract_strokes(&sk);
        let sign_points = extract_significant_points(&sk, &strokes);
        let heights = column_heights(&cc);
        Self { origin: cc.id, cc, strokes, sign_points, heights }
    }

    pub fn id(&self) -> usize {
        self.cc.id
    }

    pub fn stroke_count(&self) -> usize {
        self.strokes.len()
    }

    /// Significant point positions, or the centre of gravity when there are none.
    pub fn probe_points(&self) -> Vec<(f64, f64)> {
        if self.sign_points.is_empty() {
            vec![self.cc.center_of_gravity()]
        } else {
            self.sign_points.iter().map(|s| (s.pos.x as f64, s.pos.y as f64)).collect()
        }
    }
}

pub type ComponentStore = BTreeMap<usize, ComponentFeatures>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cluster {
    pub id: usize,
    /// Component ids in the order they joined.
    pub members: Vec<usize>,
    /// Oldest first; the last entry is the most recently built line.
    pub right_lines: Vec<RegressionLine>,
    pub left_lines: Vec<RegressionLine>,
    pub mixture: HeightMixture,
    pub sign_points: Vec<SignificantPoint>,
    pub height_samples: Vec<HeightSample>,
    pub bbox: BBox,
}

impl Cluster {
    /// A one-member cluster with one line per side.
    pub fn new(id: usize, first: &ComponentFeatures, window: usize) -> Self {
        let cc = &first.cc;
        let line = |side| build_regression_line(&first.sign_points, side, cc.top(), cc.bottom(), window);
        Self {
            id,
            members: vec![first.id()],
            right_lines: vec![line(Side::Right)],
            left_lines: vec![line(Side::Left)],
            mixture: fit_gmm3(&first.heights).expect("a component has at least one column"),
            sign_points: first.sign_points.clone(),
            height_samples: first.heights.clone(),
            bbox: cc.bbox,
        }
    }

    /// Bounding-box width over all members.
    pub fn wd(&self) -> u32 {
        self.bbox.width()
    }

    pub fn lines(&self, side: Side) -> &[RegressionLine] {
        match side {
            Side::Right => &self.right_lines,
            Side::Left => &self.left_lines,
        }
    }

    pub fn last_right_line(&self) -> &RegressionLine {
        self.right_lines.last().expect("clusters keep at least one line")
    }

    /// Adds a member: refits the mixture, builds a fresh line per side and keeps
    /// the `line_cap` lines that deviate least from the new member.
    pub fn add(&mut self, f: &ComponentFeatures, cfg: &PipelineConfig) {
        self.members.push(f.id());
        self.sign_points.extend_from_slice(&f.sign_points);
        self.height_samples.extend_from_slice(&f.heights);
        self.mixture = fit_gmm3(&self.height_samples).expect("samples are nonempty");
        self.bbox = self.bbox.union(f.cc.bbox);
        let probes = f.probe_points();
        for side in [Side::Right, Side::Left] {
            let line = build_regression_line(&self.sign_points, side, f.cc.top(), f.cc.bottom(), cfg.sign_point_window);
            let lines = match side {
                Side::Right => &mut self.right_lines,
                Side::Left => &mut self.left_lines,
            };
            lines.push(line);
            retain_best(lines, &probes, cfg.line_cap);
        }
    }

    /// Rebuilds every derived field from `members`, leaving one fresh line per side.
    pub fn rebuild(&mut self, store: &ComponentStore, cfg: &PipelineConfig) {
        let members: Vec<&ComponentFeatures> = self.members.iter().map(|id| &store[id]).collect();
        self.sign_points = members.iter().flat_map(|f| f.sign_points.iter().copied()).collect();
        self.height_samples = members.iter().flat_map(|f| f.heights.iter().copied()).collect();
        self.mixture = fit_gmm3(&self.height_samples).expect("samples are nonempty");
        self.bbox = members
            .iter()
            .map(|f| f.cc.bbox)
            .reduce(BBox::union)
            .expect("cluster has members");
        let last = &members[members.len() - 1].cc;
        let line = |side| build_regression_line(&self.sign_points, side, last.top(), last.bottom(), cfg.sign_point_window);
        self.right_lines = vec![line(Side::Right)];
        self.left_lines = vec![line(Side::Left)];
    }

    /// Strokes of all members except pieces of component `origin`.
    pub fn strokes_excluding<'a>(
        &'a self,
        store: &'a ComponentStore,
        origin: usize,
    ) -> impl Iterator<Item = &'a Stroke> + 'a {
        self.members
            .iter()
            .map(move |id| &store[id])
            .filter(move |f| f.origin != origin)
            .flat_map(|f| f.strokes.iter())
    }

    pub fn boundary_points(&self, store: &ComponentStore) -> Vec<Point> {
        self.members
            .iter()
            .flat_map(|id| store[id].cc.filled.boundary_points())
            .collect()
    }

    pub fn filled_area(&self, store: &ComponentStore) -> usize {
        self.members.iter().map(|id| store[id].cc.filled_area()).sum()
    }
}

/// Keeps at most `cap` lines, preferring small deviation from `probes` and,
/// on ties, newer lines. Survivors stay in chronological order.
fn retain_best(lines: &mut Vec<RegressionLine>, probes: &[(f64, f64)], cap: usize) {
    if lines.len() <= cap {
        return;
    }
    let mut ranked: Vec<(f64, usize)> = lines.iter().enumerate().map(|(i, l)| (l.deviation(probes), i)).collect();
    ranked.sort_by(|a, b| a.0.total_cmp(&b.0).then(b.1.cmp(&a.1)));
    let mut keep: Vec<usize> = ranked[..cap].iter().map(|r| r.1).collect();
    keep.sort_unstable();
    *lines = keep.into_iter().map(|i| lines[i]).collect();
}

/// Closest distance between two point sets, or `None` when it is at least `limit`.
pub fn min_distance_below(a: &[Point], b: &[Point], limit: f64) -> Option<f64> {
    let ba = BBox::from_points(a.iter().copied())?;
    let bb = BBox::from_points(b.iter().copied())?;
    if ba.gap(&bb) >= limit {
        return None;
    }
    let mut best = i64::MAX;
    for &p in a {
        for &q in b {
            best = best.min(p.dist_sq(q));
        }
    }
    let d = (best as f64).sqrt();
    (d < limit).then_some(d)
}
