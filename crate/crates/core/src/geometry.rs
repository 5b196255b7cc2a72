use serde::{Deserialize, Serialize};

/// Integer pixel coordinate, origin top-left, y grows downward.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Point {
    pub x: i32,
    pub y: i32,
}

impl Point {
    pub const fn new(x: i32, y: i32) -> Self {
        Self { x, y }
    }

    pub fn dist_sq(self, other: Point) -> i64 {
        let dx = (self.x - other.x) as i64;
        let dy = (self.y - other.y) as i64;
        dx * dx + dy * dy
    }

    pub fn is_adjacent8(self, other: Point) -> bool {
        self != other && (self.x - other.x).abs() <= 1 && (self.y - other.y).abs() <= 1
    }
}

/// The eight neighbour offsets in clockwise order starting at north.
pub const NEIGHBORS8: [(i32, i32); 8] = [
    (0, -1),
    (1, -1),
    (1, 0),
    (1, 1),
    (0, 1),
    (-1, 1),
    (-1, 0),
    (-1, -1),
];

pub const NEIGHBORS4: [(i32, i32); 4] = [(0, -1), (1, 0), (0, 1), (-1, 0)];

/// Inclusive bounding box.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BBox {
    pub left: i32,
    pub top: i32,
    pub right: i32,
    pub bottom: i32,
}

impl BBox {
    pub fn of_point(p: Point) -> Self {
        Self { left: p.x, top: p.y, right: p.x, bottom: p.y }
    }

    pub fn from_points<I: IntoIterator<Item = Point>>(points: I) -> Option<Self> {
        let mut it = points.into_iter();
        let first = it.next()?;
        Some(it.fold(Self::of_point(first), |b, p| b.include(p)))
    }

    pub fn include(mut self, p: Point) -> Self {
        self.left = self.left.min(p.x);
        self.top = self.top.min(p.y);
        self.right = self.right.max(p.x);
        self.bottom = self.bottom.max(p.y);
        self
    }

    pub fn union(self, other: BBox) -> BBox {
        BBox {
            left: self.left.min(other.left),
            top: self.top.min(other.top),
            right: self.right.max(other.right),
            bottom: self.bottom.max(other.bottom),
        }
    }

    pub fn width(&self) -> u32 {
        (self.right - self.left + 1) as u32
    }

    pub fn height(&self) -> u32 {
        (self.bottom - self.top + 1) as u32
    }

    pub fn contains(&self, p: Point) -> bool {
        p.x >= self.left && p.x <= self.right && p.y >= self.top && p.y <= self.bottom
    }

    /// Euclidean gap between two boxes (0 when they touch or intersect).
    pub fn gap(&self, other: &BBox) -> f64 {
        let dx = (other.left - self.right).max(self.left - other.right).max(0) as f64;
        let dy = (other.top - self.bottom).max(self.top - other.bottom).max(0) as f64;
        dx.hypot(dy)
    }
}

/// Length of the intersection of two closed integer intervals, 0 if disjoint.
pub fn interval_overlap(a: (i32, i32), b: (i32, i32)) -> i32 {
    (a.1.min(b.1) - a.0.max(b.0) + 1).max(0)
}
