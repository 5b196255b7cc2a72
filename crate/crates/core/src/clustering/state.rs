use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use super::{
    candidate_clusters, cluster_distance, component_break, is_new_cluster, is_special, min_distance_below,
    BreakOutcome, Cluster, ComponentFeatures, ComponentStore, NewClusterCheck, RegressionLine, Side,
};
use crate::components::{ConnectedComponent, LocalMask};
use crate::config::PipelineConfig;
use crate::geometry::BBox;
use crate::mixture::{fit_gmm3, HeightMixture, HeightSample};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AssignAction {
    Opened { cluster: usize },
    Joined { cluster: usize },
    Special,
    Split { cluster: usize, joined: Vec<usize>, requeued: Vec<usize> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BackwardRequest {
    pub component: usize,
    pub from_cluster: usize,
    pub distance: f64,
    pub broken: bool,
    pub split: bool,
}

/// One step of the sweep, kept for the debug trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssignEvent {
    pub component: usize,
    /// `(cluster id, proxy distance)` in rank order.
    pub candidates: Vec<(usize, f64)>,
    /// `(cluster id, line deviation)` for the same candidates.
    pub distances: Vec<(usize, f64)>,
    pub nearest: Option<usize>,
    pub special: bool,
    pub new_cluster: Option<NewClusterCheck>,
    pub broken: Option<bool>,
    /// Mean line of the band used by the break test.
    pub break_line: Option<RegressionLine>,
    /// `(ht1, ht2)` of the mixture the rules used.
    pub heights: Option<(f64, f64)>,
    pub bbox: BBox,
    pub action: AssignAction,
    pub backward: Vec<BackwardRequest>,
}

#[derive(Debug, Clone)]
pub struct SegmentationState {
    pub clusters: Vec<Cluster>,
    /// Deferred components, placed after cluster merging.
    pub specials: Vec<usize>,
    /// Live component ids in the order they were assigned.
    pub processed: Vec<usize>,
    pub components: ComponentStore,
    /// Fit over every component's samples; stands in for degenerate cluster mixtures.
    pub global_mixture: Option<HeightMixture>,
    pub trace: Vec<AssignEvent>,
    pub page_width: u32,
    pub config: PipelineConfig,
    /// Components still to assign, front first; re-queued pieces go to the front.
    pub queue: VecDeque<usize>,
    next_component: usize,
    next_cluster: usize,
}

/// Runs the sweep over components already sorted left to right.
pub fn segment_components(
    components: Vec<ConnectedComponent>,
    page_width: u32,
    cfg: &PipelineConfig,
) -> SegmentationState {
    let mut state = SegmentationState::new(components, page_width, cfg);
    state.run();
    state
}

impl SegmentationState {
    pub fn new(components: Vec<ConnectedComponent>, page_width: u32, cfg: &PipelineConfig) -> Self {
        let next_component = components.iter().map(|c| c.id + 1).max().unwrap_or(0);
        let mut order: Vec<(i32, i32, usize)> = Vec::new();
        let mut store = ComponentStore::new();
        for cc in components {
            let lp = cc.leftmost_point();
            order.push((lp.x, lp.y, cc.id));
            let f = ComponentFeatures::compute(cc, cfg.min_branch);
            store.insert(f.id(), f);
        }
        order.sort_unstable();
        let all: Vec<HeightSample> = store.values().flat_map(|f| f.heights.iter().copied()).collect();
        Self {
            clusters: Vec::new(),
            specials: Vec::new(),
            processed: Vec::new(),
            components: store,
            global_mixture: fit_gmm3(&all),
            trace: Vec::new(),
            page_width,
            config: cfg.clone(),
            next_component,
            next_cluster: 1,
            queue: order.into_iter().map(|o| o.2).collect(),
        }
    }

    pub fn run(&mut self) {
        while self.step() {}
    }

    /// Assigns the next queued component; false once the queue is empty.
    pub fn step(&mut self) -> bool {
        match self.queue.pop_front() {
            Some(id) => {
                self.assign(id);
                true
            }
            None => false,
        }
    }

    /// Opens a cluster holding only `id`, outside the sweep order.
    pub fn seed_cluster(&mut self, id: usize) -> usize {
        self.queue.retain(|&q| q != id);
        let idx = self.open_cluster(id);
        self.clusters[idx].id
    }

    pub fn cluster_index(&self, cluster_id: usize) -> Option<usize> {
        self.clusters.iter().position(|c| c.id == cluster_id)
    }

    /// Index of the cluster holding `component`, if any.
    pub fn owner_of(&self, component: usize) -> Option<usize> {
        self.clusters.iter().position(|c| c.members.contains(&component))
    }

    /// The cluster's own mixture, or the page mixture when the cluster's is degenerate.
    pub fn effective_mixture(&self, idx: usize) -> &HeightMixture {
        let own = &self.clusters[idx].mixture;
        match &self.global_mixture {
            Some(g) if own.degenerate => g,
            _ => own,
        }
    }

    /// Sum of filled areas over clustered and deferred components.
    pub fn assigned_filled_area(&self) -> usize {
        let clustered: usize = self.clusters.iter().map(|c| c.filled_area(&self.components)).sum();
        let special: usize = self.specials.iter().map(|id| self.components[id].cc.filled_area()).sum();
        clustered + special
    }

    fn open_cluster(&mut self, id: usize) -> usize {
        let cluster = Cluster::new(self.next_cluster, &self.components[&id], self.config.sign_point_window);
        self.next_cluster += 1;
        self.clusters.push(cluster);
        self.processed.push(id);
        self.clusters.len() - 1
    }

    fn join(&mut self, idx: usize, id: usize) {
        self.clusters[idx].add(&self.components[&id], &self.config);
        self.processed.push(id);
    }

    /// Replaces component `id` by the pieces of `outcome`: in-pieces join the
    /// cluster with id `target`, out-pieces go to the front of the queue.
    fn apply_split(&mut self, target: usize, id: usize, outcome: &BreakOutcome) -> (Vec<usize>, Vec<usize>) {
        let original = self.components.remove(&id).expect("component is live");
        self.processed.retain(|&p| p != id);
        if let Some(k) = self.owner_of(id) {
            self.clusters[k].members.retain(|&m| m != id);
            if self.clusters[k].members.is_empty() {
                self.clusters.remove(k);
            } else {
                self.clusters[k].rebuild(&self.components, &self.config);
            }
        }

        let ink = LocalMask::from_points(original.cc.bbox, &original.cc.pixels);
        let make = |state: &mut Self, points: &[crate::geometry::Point]| {
            let bbox = BBox::from_points(points.iter().copied()).expect("pieces are nonempty");
            let mut pixels: Vec<_> = points.iter().copied().filter(|&p| ink.contains(p)).collect();
            pixels.sort_by_key(|p| (p.y, p.x));
            let cc = ConnectedComponent {
                id: state.next_component,
                pixels,
                bbox,
                filled: LocalMask::from_points(bbox, points),
                parent: Some(id),
            };
            state.next_component += 1;
            let mut f = ComponentFeatures::compute(cc, state.config.min_branch);
            f.origin = original.origin;
            let new_id = f.id();
            state.components.insert(new_id, f);
            new_id
        };

        let joined: Vec<usize> = outcome.in_pieces.iter().map(|p| make(self, &p.points)).collect();
        let requeued: Vec<usize> = outcome.out_pieces.iter().map(|p| make(self, &p.points)).collect();
        let idx = self.cluster_index(target).expect("target cluster survives the split");
        for &j in &joined {
            self.join(idx, j);
        }
        for &r in requeued.iter().rev() {
            self.queue.push_front(r);
        }
        (joined, requeued)
    }

    pub fn assign(&mut self, id: usize) {
        let mut event = AssignEvent {
            component: id,
            candidates: Vec::new(),
            distances: Vec::new(),
            nearest: None,
            special: false,
            new_cluster: None,
            broken: None,
            break_line: None,
            heights: None,
            bbox: self.components[&id].cc.bbox,
            action: AssignAction::Special,
            backward: Vec::new(),
        };
        if self.clusters.is_empty() {
            let idx = self.open_cluster(id);
            event.action = AssignAction::Opened { cluster: self.clusters[idx].id };
            self.trace.push(event);
            return;
        }

        let f = &self.components[&id];
        let cands = candidate_clusters(f, &self.clusters, self.config.candidate_cap);
        let dists: Vec<f64> = cands.iter().map(|&(i, _)| cluster_distance(f, &self.clusters[i])).collect();
        let best = (0..cands.len())
            .min_by(|&a, &b| dists[a].total_cmp(&dists[b]).then(a.cmp(&b)))
            .expect("clusters exist");
        let nearest = cands[best].0;
        let nearest_id = self.clusters[nearest].id;
        event.candidates = cands.iter().map(|&(i, d)| (self.clusters[i].id, d)).collect();
        event.distances = cands.iter().zip(&dists).map(|(&(i, _), &d)| (self.clusters[i].id, d)).collect();
        event.nearest = Some(nearest_id);

        let mix = self.effective_mixture(nearest).clone();
        event.heights = Some((mix.ht1(), mix.ht2()));
        if is_special(f, &mix, &self.config) {
            event.special = true;
            self.specials.push(id);
            self.processed.push(id);
            self.trace.push(event);
            return;
        }

        let check = is_new_cluster(f, &self.clusters[nearest], &mix, &self.components, &self.config);
        event.new_cluster = Some(check);
        let side = if check.new_cluster { Side::Left } else { Side::Right };
        let outcome = component_break(&self.clusters[nearest], &mix, f, side, &self.config);
        event.broken = Some(outcome.broken);
        event.break_line = Some(outcome.line);

        if outcome.splits() {
            let (joined, requeued) = self.apply_split(nearest_id, id, &outcome);
            event.action = AssignAction::Split { cluster: nearest_id, joined, requeued };
        } else if check.new_cluster {
            let idx = self.open_cluster(id);
            let new_id = self.clusters[idx].id;
            event.action = AssignAction::Opened { cluster: new_id };
            event.backward = self.backward_merge(new_id);
        } else {
            self.join(nearest, id);
            event.action = AssignAction::Joined { cluster: nearest_id };
        }
        self.trace.push(event);
    }

    /// Components of other clusters that are taller than their cluster's `ht1`
    /// and closer than `max_gap_factor·ht1` (of the new cluster) to it, scanned
    /// right to left by centre of gravity. Returns `(component, distance)`.
    pub fn backward_candidates(&self, cluster_id: usize) -> Vec<(usize, f64)> {
        let Some(idx) = self.cluster_index(cluster_id) else {
            return Vec::new();
        };
        let max_gap = self.config.max_gap_factor * self.effective_mixture(idx).ht1();
        let target = self.clusters[idx].boundary_points(&self.components);
        let left_edge = self.clusters[idx].bbox.left as f64;
        let mut scan: Vec<(f64, usize, usize)> = Vec::new();
        for (k, c) in self.clusters.iter().enumerate() {
            if k == idx {
                continue;
            }
            for &m in &c.members {
                scan.push((self.components[&m].cc.center_of_gravity().0, m, k));
            }
        }
        scan.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
        let mut out = Vec::new();
        for (cgx, m, k) in scan {
            if cgx < left_edge - self.page_width as f64 {
                break;
            }
            let cc = &self.components[&m].cc;
            if cc.ht() as f64 <= self.effective_mixture(k).ht1() {
                continue;
            }
            if let Some(d) = min_distance_below(&cc.filled.boundary_points(), &target, max_gap) {
                out.push((m, d));
            }
        }
        out
    }

    /// Tests every backward candidate against the new cluster's left lines and
    /// moves the in-band part of each broken one into it.
    pub fn backward_merge(&mut self, cluster_id: usize) -> Vec<BackwardRequest> {
        let mut requests = Vec::new();
        for (m, distance) in self.backward_candidates(cluster_id) {
            let (Some(idx), Some(k)) = (self.cluster_index(cluster_id), self.owner_of(m)) else {
                continue;
            };
            let from_cluster = self.clusters[k].id;
            let mix = self.effective_mixture(idx).clone();
            let outcome = component_break(&self.clusters[idx], &mix, &self.components[&m], Side::Left, &self.config);
            let split = outcome.splits();
            if split {
                self.apply_split(cluster_id, m, &outcome);
            }
            requests.push(BackwardRequest { component: m, from_cluster, distance, broken: outcome.broken, split });
        }
        requests
    }
}
