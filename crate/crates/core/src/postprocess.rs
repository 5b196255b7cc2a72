//! Final pass over the sweep result: merge clusters that belong to the same
//! line and hand each deferred special component to its closest cluster.

use serde::{Deserialize, Serialize};

use crate::clustering::{Cluster, ComponentStore, SegmentationState};
use crate::config::PipelineConfig;
use crate::geometry::Point;
use crate::mixture::HeightMixture;

/// Polyline through member centres of gravity, extended flat to the cluster's
/// left and right edges.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MedianLine {
    /// Ordered by x.
    pub vertices: Vec<(f64, f64)>,
}

impl MedianLine {
    pub fn left(&self) -> f64 {
        self.vertices[0].0
    }

    pub fn right(&self) -> f64 {
        self.vertices[self.vertices.len() - 1].0
    }

    /// Linear interpolation, flat beyond either end.
    pub fn y_at(&self, x: f64) -> f64 {
        let v = &self.vertices;
        if x <= v[0].0 {
            return v[0].1;
        }
        if x >= v[v.len() - 1].0 {
            return v[v.len() - 1].1;
        }
        let i = v.partition_point(|p| p.0 <= x);
        let (x0, y0) = v[i - 1];
        let (x1, y1) = v[i];
        if x1 == x0 {
            return y0;
        }
        y0 + (y1 - y0) * (x - x0) / (x1 - x0)
    }

    pub fn mean_y(&self) -> f64 {
        self.vertices.iter().map(|v| v.1).sum::<f64>() / self.vertices.len() as f64
    }
}

pub fn median_line(cluster: &Cluster, store: &ComponentStore) -> MedianLine {
    let mut cgs: Vec<(f64, f64)> = cluster.members.iter().map(|id| store[id].cc.center_of_gravity()).collect();
    cgs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    let left = cluster.bbox.left as f64;
    let right = cluster.bbox.right as f64;
    let mut vertices = Vec::with_capacity(cgs.len() + 2);
    if left < cgs[0].0 {
        vertices.push((left, cgs[0].1));
    }
    vertices.extend_from_slice(&cgs);
    let last = cgs[cgs.len() - 1];
    if right > last.0 {
        vertices.push((right, last.1));
    }
    MedianLine { vertices }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MergeCase {
    VerticalOverlap,
    DisjointRight,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MergeDecision {
    pub i: usize,
    pub j: usize,
    pub case: MergeCase,
    pub ht_diff: f64,
    /// Width of the shared x-range; 0 for disjoint clusters.
    pub overlap: f64,
    pub merged: bool,
}

fn ht1(cluster: &Cluster, global: Option<&HeightMixture>) -> f64 {
    match global {
        Some(g) if cluster.mixture.degenerate => g.ht1(),
        _ => cluster.mixture.ht1(),
    }
}

/// Evaluates the merge rule for one pair of clusters.
pub fn merge_decision(
    a: &Cluster,
    b: &Cluster,
    store: &ComponentStore,
    global: Option<&HeightMixture>,
    cfg: &PipelineConfig,
) -> MergeDecision {
    let (ma, mb) = (median_line(a, store), median_line(b, store));
    let lo = a.bbox.left.max(b.bbox.left);
    let hi = a.bbox.right.min(b.bbox.right);
    let (h1a, h1b) = (ht1(a, global), ht1(b, global));
    if lo <= hi {
        let xs = lo..=hi;
        let count = (hi - lo + 1) as f64;
        let ht_diff = xs.map(|x| (ma.y_at(x as f64) - mb.y_at(x as f64)).abs()).sum::<f64>() / count;
        let f = cfg.merge_overlap_factor;
        let merged = ht_diff < h1a
            && ht_diff < h1b
            && (count < f * a.wd() as f64 || count < f * b.wd() as f64);
        MergeDecision { i: a.id, j: b.id, case: MergeCase::VerticalOverlap, ht_diff, overlap: count, merged }
    } else {
        let (l, r) = if a.bbox.right < b.bbox.left { (&ma, &mb) } else { (&mb, &ma) };
        let ht_diff = (l.y_at(l.right()) - r.y_at(r.left())).abs();
        let merged = ht_diff < h1a && ht_diff < h1b;
        MergeDecision { i: a.id, j: b.id, case: MergeCase::DisjointRight, ht_diff, overlap: 0.0, merged }
    }
}

/// Merges cluster pairs until none qualifies. Pairs are visited in ascending
/// id order; the lower id absorbs the higher and the scan restarts.
pub fn combine_clusters(
    mut clusters: Vec<Cluster>,
    store: &ComponentStore,
    global: Option<&HeightMixture>,
    cfg: &PipelineConfig,
) -> (Vec<Cluster>, Vec<MergeDecision>) {
    clusters.sort_by_key(|c| c.id);
    let mut log = Vec::new();
    'scan: loop {
        for i in 0..clusters.len() {
            for j in i + 1..clusters.len() {
                let d = merge_decision(&clusters[i], &clusters[j], store, global, cfg);
                if d.merged {
                    log.push(d);
                    let absorbed = clusters.remove(j);
                    clusters[i].members.extend(absorbed.members);
                    clusters[i].rebuild(store, cfg);
                    continue 'scan;
                }
            }
        }
        break;
    }
    (clusters, log)
}

/// Closest boundary-pixel distance from each special to each cluster; returns
/// the chosen cluster index per special (lowest id on ties).
pub fn place_specials(specials: &[usize], clusters: &[Cluster], store: &ComponentStore) -> Vec<usize> {
    let outlines: Vec<Vec<Point>> = clusters.iter().map(|c| c.boundary_points(store)).collect();
    specials
        .iter()
        .map(|id| {
            let pts = store[id].cc.filled.boundary_points();
            let mut best = (i64::MAX, usize::MAX, 0usize);
            for (k, outline) in outlines.iter().enumerate() {
                let d = pts
                    .iter()
                    .flat_map(|&p| outline.iter().map(move |&q| p.dist_sq(q)))
                    .min()
                    .unwrap_or(i64::MAX);
                if (d, clusters[k].id) < (best.0, best.1) {
                    best = (d, clusters[k].id, k);
                }
            }
            best.2
        })
        .collect()
}

/// One output line: its members (specials included) and median line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FinalLine {
    pub cluster: usize,
    pub members: Vec<usize>,
    pub median: MedianLine,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PostprocessResult {
    /// Top to bottom by mean median-line y.
    pub lines: Vec<FinalLine>,
    pub merges: Vec<MergeDecision>,
}

/// Merges clusters, places specials, and orders lines top to bottom. With no
/// clusters at all, the specials form a single line of their own.
pub fn assign_specials(state: &SegmentationState) -> PostprocessResult {
    let store = &state.components;
    let (clusters, merges) =
        combine_clusters(state.clusters.clone(), store, state.global_mixture.as_ref(), &state.config);
    let mut lines: Vec<FinalLine> = clusters
        .iter()
        .map(|c| FinalLine { cluster: c.id, members: c.members.clone(), median: median_line(c, store) })
        .collect();
    if lines.is_empty() {
        if let Some(&first) = state.specials.first() {
            let mut c = Cluster::new(0, &store[&first], state.config.sign_point_window);
            c.members = state.specials.clone();
            c.rebuild(store, &state.config);
            lines.push(FinalLine { cluster: 0, members: c.members.clone(), median: median_line(&c, store) });
        }
    } else {
        for (id, k) in state.specials.iter().zip(place_specials(&state.specials, &clusters, store)) {
            lines[k].members.push(*id);
        }
    }
    lines.sort_by(|a, b| a.median.mean_y().total_cmp(&b.median.mean_y()).then(a.cluster.cmp(&b.cluster)));
    PostprocessResult { lines, merges }
}
