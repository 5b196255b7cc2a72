//! Stroke decomposition of skeletons and significant-point extraction.
//!
//! Tracing repeatedly seeds at the leftmost unused non-junction pixel (topmost
//! on ties) and follows the arc until it reaches a junction, an endpoint, or a
//! direction reversal. A reversal only counts once the trace has moved at
//! least two pixels back from its running extreme on that axis, so the
//! one-pixel staircase of digital arcs does not fragment strokes.

use serde::{Deserialize, Serialize};

use crate::components::LocalMask;
use crate::geometry::{BBox, Point};
use crate::skeleton::Skeleton;

/// Why a stroke stopped growing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StrokeEnd {
    /// No unused continuation (endpoint or already traced pixel).
    Open,
    Junction,
    /// Vertical reversal at the last point; `trough` when it is the visually
    /// lowest point (largest y).
    VerticalReversal { trough: bool },
    HorizontalReversal,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Stroke {
    pub points: Vec<Point>,
    pub owner: usize,
    pub end: StrokeEnd,
}

impl Stroke {
    /// (min x, max x) over the stroke.
    pub fn x_span(&self) -> (i32, i32) {
        let xs = self.points.iter().map(|p| p.x);
        (xs.clone().min().unwrap_or(0), xs.max().unwrap_or(0))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PointKind {
    Minimum,
    Maximum,
    Junction,
    PenLift,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SignificantPoint {
    pub pos: Point,
    pub kind: PointKind,
    pub owner: usize,
}

/// Tracks one axis of a trace and reports when it has reversed.
struct ReversalTracker {
    dir: i32,
    extreme: i32,
    extreme_idx: usize,
}

impl ReversalTracker {
    fn new(start: i32) -> Self {
        Self { dir: 0, extreme: start, extreme_idx: 0 }
    }

    /// Feeds the coordinate of point `idx`; returns the index of the extreme
    /// point once the trace has come back two pixels from it.
    fn push(&mut self, v: i32, idx: usize) -> Option<usize> {
        if self.dir == 0 {
            if v != self.extreme {
                self.dir = (v - self.extreme).signum();
                self.extreme = v;
                self.extreme_idx = idx;
            }
            return None;
        }
        if (v - self.extreme) * self.dir > 0 {
            self.extreme = v;
            self.extreme_idx = idx;
            None
        } else if (self.extreme - v) * self.dir >= 2 {
            Some(self.extreme_idx)
        } else {
            None
        }
    }
}

struct Tracer<'a> {
    sk: &'a Skeleton,
    used: LocalMask,
}

impl<'a> Tracer<'a> {
    fn is_junction(&self, p: Point) -> bool {
        self.sk.neighbor_count(p) >= 3
    }

    fn is_open(&self, p: Point) -> bool {
        self.sk.contains(p) && !self.used.contains(p) && !self.is_junction(p)
    }

    fn trace(&mut self, seed: Point) -> Stroke {
        let mut points = vec![seed];
        self.used.set(seed, true);
        // Rightward bias at the seed: larger x, then smaller y.
        let first = self
            .sk
            .neighbors(seed)
            .filter(|&q| self.is_open(q))
            .max_by_key(|q| (q.x, -q.y));
        let Some(mut next) = first else {
            let end = if self.sk.neighbors(seed).any(|q| self.is_junction(q)) {
                StrokeEnd::Junction
            } else {
                StrokeEnd::Open
            };
            return Stroke { points, owner: self.sk.owner, end };
        };

        let mut vertical = ReversalTracker::new(seed.y);
        let mut horizontal = ReversalTracker::new(seed.x);
        loop {
            let idx = points.len();
            points.push(next);
            self.used.set(next, true);

            let v = vertical.push(next.y, idx);
            let h = horizontal.push(next.x, idx);
            let cut = match (v, h) {
                (Some(vi), Some(hi)) if hi < vi => Some((hi, StrokeEnd::HorizontalReversal)),
                (Some(vi), _) => Some((vi, StrokeEnd::VerticalReversal { trough: vertical.dir > 0 })),
                (None, Some(hi)) => Some((hi, StrokeEnd::HorizontalReversal)),
                (None, None) => None,
            };
            if let Some((keep, end)) = cut {
                for p in points.drain(keep + 1..) {
                    self.used.set(p, false);
                }
                return Stroke { points, owner: self.sk.owner, end };
            }

            let mut junction_ahead = false;
            let mut forward = None;
            for q in self.sk.neighbors(next) {
                if self.used.contains(q) {
                    continue;
                }
                if self.is_junction(q) {
                    junction_ahead = true;
                } else if forward.is_none() {
                    forward = Some(q);
                }
            }
            match forward {
                Some(q) if !junction_ahead => next = q,
                _ => {
                    let end = if junction_ahead { StrokeEnd::Junction } else { StrokeEnd::Open };
                    return Stroke { points, owner: self.sk.owner, end };
                }
            }
        }
    }
}

/// Splits a skeleton into strokes. Every non-junction pixel lands in exactly
/// one stroke; junction pixels belong to none.
pub fn extract_strokes(sk: &Skeleton) -> Vec<Stroke> {
    let points = sk.points();
    let Some(bbox) = BBox::from_points(points.iter().copied()) else {
        return Vec::new();
    };
    let mut tracer = Tracer { sk, used: LocalMask::empty(bbox) };
    let mut order: Vec<Point> = points.into_iter().filter(|&p| !tracer.is_junction(p)).collect();
    order.sort_by_key(|p| (p.x, p.y));

    // Pixels released by a reversal cut were unused when the seed was chosen,
    // so they always sort at or after the cursor.
    let mut strokes = Vec::new();
    for &seed in &order {
        if !tracer.used.contains(seed) {
            strokes.push(tracer.trace(seed));
        }
    }
    strokes
}

/// Junctions (≥3 neighbours), pen lifts (exactly 1 neighbour), and one
/// minimum or maximum per vertical reversal, sorted by position.
pub fn extract_significant_points(sk: &Skeleton, strokes: &[Stroke]) -> Vec<SignificantPoint> {
    let mut out: Vec<SignificantPoint> = Vec::new();
    for p in sk.points() {
        let kind = match sk.neighbor_count(p) {
            1 => PointKind::PenLift,
            n if n >= 3 => PointKind::Junction,
            _ => continue,
        };
        out.push(SignificantPoint { pos: p, kind, owner: sk.owner });
    }
    for s in strokes {
        if let StrokeEnd::VerticalReversal { trough } = s.end {
            let pos = *s.points.last().expect("stroke has points");
            let kind = if trough { PointKind::Minimum } else { PointKind::Maximum };
            out.push(SignificantPoint { pos, kind, owner: sk.owner });
        }
    }
    out.sort_by_key(|s| (s.pos.x, s.pos.y, s.kind));
    out
}
