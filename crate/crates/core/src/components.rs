//! 8-connected component extraction and hole filling.

use std::collections::VecDeque;

use crate::geometry::{BBox, Point, NEIGHBORS4};
use crate::imaging::BinaryImage;

/// A boolean raster anchored at `origin` in page coordinates.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LocalMask {
    pub origin: Point,
    pub width: u32,
    pub height: u32,
    bits: Vec<bool>,
}

impl LocalMask {
    pub fn empty(bbox: BBox) -> Self {
        Self {
            origin: Point::new(bbox.left, bbox.top),
            width: bbox.width(),
            height: bbox.height(),
            bits: vec![false; bbox.width() as usize * bbox.height() as usize],
        }
    }

    pub fn from_points(bbox: BBox, points: &[Point]) -> Self {
        let mut m = Self::empty(bbox);
        for &p in points {
            m.set(p, true);
        }
        m
    }

    fn index(&self, p: Point) -> Option<usize> {
        let (x, y) = (p.x - self.origin.x, p.y - self.origin.y);
        if x < 0 || y < 0 || x >= self.width as i32 || y >= self.height as i32 {
            None
        } else {
            Some(y as usize * self.width as usize + x as usize)
        }
    }

    pub fn contains(&self, p: Point) -> bool {
        self.index(p).is_some_and(|i| self.bits[i])
    }

    pub fn set(&mut self, p: Point, v: bool) {
        let i = self.index(p).expect("point outside local mask");
        self.bits[i] = v;
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn bbox(&self) -> BBox {
        BBox {
            left: self.origin.x,
            top: self.origin.y,
            right: self.origin.x + self.width as i32 - 1,
            bottom: self.origin.y + self.height as i32 - 1,
        }
    }

    /// Set points in row-major order.
    pub fn points(&self) -> impl Iterator<Item = Point> + '_ {
        let (w, o) = (self.width as usize, self.origin);
        self.bits
            .iter()
            .enumerate()
            .filter(|(_, &b)| b)
            .map(move |(i, _)| Point::new(o.x + (i % w) as i32, o.y + (i / w) as i32))
    }

    /// Set points with at least one 4-neighbour outside the set.
    pub fn boundary_points(&self) -> Vec<Point> {
        self.points()
            .filter(|&p| NEIGHBORS4.iter().any(|&(dx, dy)| !self.contains(Point::new(p.x + dx, p.y + dy))))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConnectedComponent {
    pub id: usize,
    /// Ink pixels in row-major order.
    pub pixels: Vec<Point>,
    pub bbox: BBox,
    /// Hole-filled shape; equals `pixels` until [`fill_holes`] runs.
    pub filled: LocalMask,
    /// Component this one was split from, if any.
    pub parent: Option<usize>,
}

impl ConnectedComponent {
    pub fn from_pixels(id: usize, mut pixels: Vec<Point>) -> Self {
        pixels.sort_by_key(|p| (p.y, p.x));
        let bbox = BBox::from_points(pixels.iter().copied()).expect("component needs pixels");
        let filled = LocalMask::from_points(bbox, &pixels);
        Self { id, pixels, bbox, filled, parent: None }
    }

    /// Bounding-box height.
    pub fn ht(&self) -> u32 {
        self.bbox.height()
    }

    /// Bounding-box width.
    pub fn wd(&self) -> u32 {
        self.bbox.width()
    }

    pub fn top(&self) -> i32 {
        self.bbox.top
    }

    pub fn bottom(&self) -> i32 {
        self.bbox.bottom
    }

    pub fn filled_area(&self) -> usize {
        self.filled.count()
    }

    /// Mean position of the filled pixels.
    pub fn center_of_gravity(&self) -> (f64, f64) {
        let (mut sx, mut sy, mut n) = (0.0, 0.0, 0.0);
        for p in self.filled.points() {
            sx += p.x as f64;
            sy += p.y as f64;
            n += 1.0;
        }
        (sx / n, sy / n)
    }

    /// Leftmost filled pixel, topmost on ties.
    pub fn leftmost_point(&self) -> Point {
        self.filled
            .points()
            .min_by_key(|p| (p.x, p.y))
            .expect("component has pixels")
    }
}

/// Disjoint-set forest with path halving and union by size.
#[derive(Debug, Clone)]
pub struct UnionFind {
    parent: Vec<usize>,
    size: Vec<usize>,
}

impl UnionFind {
    pub fn new(n: usize) -> Self {
        Self { parent: (0..n).collect(), size: vec![1; n] }
    }

    pub fn push(&mut self) -> usize {
        let id = self.parent.len();
        self.parent.push(id);
        self.size.push(1);
        id
    }

    pub fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    pub fn union(&mut self, a: usize, b: usize) {
        let (mut a, mut b) = (self.find(a), self.find(b));
        if a == b {
            return;
        }
        if self.size[a] < self.size[b] {
            std::mem::swap(&mut a, &mut b);
        }
        self.parent[b] = a;
        self.size[a] += self.size[b];
    }
}

/// Two-pass 8-connected labelling. Ids follow (bbox.left, bbox.top), then the
/// first pixel in raster order.
pub fn extract_components(img: &BinaryImage) -> Vec<ConnectedComponent> {
    let (w, h) = (img.width() as usize, img.height() as usize);
    const NONE: usize = usize::MAX;
    let mut labels = vec![NONE; w * h];
    let mut uf = UnionFind::new(0);

    for y in 0..h {
        for x in 0..w {
            if !img.get(x as u32, y as u32) {
                continue;
            }
            // Already-visited neighbours: W, NW, N, NE.
            let mut current = NONE;
            let prior = [
                (x > 0).then(|| y * w + x - 1),
                (x > 0 && y > 0).then(|| (y - 1) * w + x - 1),
                (y > 0).then(|| (y - 1) * w + x),
                (x + 1 < w && y > 0).then(|| (y - 1) * w + x + 1),
            ];
            for idx in prior.into_iter().flatten() {
                let l = labels[idx];
                if l == NONE {
                    continue;
                }
                if current == NONE {
                    current = l;
                } else {
                    uf.union(current, l);
                }
            }
            if current == NONE {
                current = uf.push();
            }
            labels[y * w + x] = current;
        }
    }

    let mut groups: Vec<Vec<Point>> = Vec::new();
    let mut slot = vec![NONE; uf.parent.len()];
    for (i, &l) in labels.iter().enumerate() {
        if l == NONE {
            continue;
        }
        let root = uf.find(l);
        if slot[root] == NONE {
            slot[root] = groups.len();
            groups.push(Vec::new());
        }
        groups[slot[root]].push(Point::new((i % w) as i32, (i / w) as i32));
    }

    let mut comps: Vec<ConnectedComponent> =
        groups.into_iter().map(|px| ConnectedComponent::from_pixels(0, px)).collect();
    sort_and_renumber(&mut comps);
    comps
}

pub(crate) fn sort_and_renumber(comps: &mut [ConnectedComponent]) {
    comps.sort_by_key(|c| (c.bbox.left, c.bbox.top, c.pixels[0].y, c.pixels[0].x));
    for (i, c) in comps.iter_mut().enumerate() {
        c.id = i;
    }
}

/// Adds every background region of the bounding box that is not 4-connected to
/// the box border.
pub fn fill_holes(cc: &ConnectedComponent) -> ConnectedComponent {
    let bbox = cc.bbox;
    let (w, h) = (bbox.width() as i32 + 2, bbox.height() as i32 + 2);
    let origin = Point::new(bbox.left - 1, bbox.top - 1);
    let ink = |x: i32, y: i32| cc.filled.contains(Point::new(origin.x + x, origin.y + y));

    let mut outside = vec![false; (w * h) as usize];
    let mut queue = VecDeque::from([(0, 0)]);
    outside[0] = true;
    while let Some((x, y)) = queue.pop_front() {
        for (dx, dy) in NEIGHBORS4 {
            let (nx, ny) = (x + dx, y + dy);
            if nx < 0 || ny < 0 || nx >= w || ny >= h {
                continue;
            }
            let i = (ny * w + nx) as usize;
            if !outside[i] && !ink(nx, ny) {
                outside[i] = true;
                queue.push_back((nx, ny));
            }
        }
    }

    let mut filled = LocalMask::empty(bbox);
    for y in 1..h - 1 {
        for x in 1..w - 1 {
            if !outside[(y * w + x) as usize] {
                filled.set(Point::new(origin.x + x, origin.y + y), true);
            }
        }
    }
    ConnectedComponent { filled, ..cc.clone() }
}

/// Drops components smaller than `min_px` pixels. `min_px = 0` keeps everything.
pub fn despeckle(img: &BinaryImage, min_px: usize) -> BinaryImage {
    if min_px == 0 {
        return img.clone();
    }
    let mut out = img.clone();
    for c in extract_components(img) {
        if c.pixels.len() < min_px {
            for p in &c.pixels {
                out.set(p.x as u32, p.y as u32, false);
            }
        }
    }
    out
}

/// Extracts, fills, and folds components that sit inside another component's hole
/// into that component, so the filled masks are pairwise disjoint.
pub fn extract_filled_components(img: &BinaryImage) -> Vec<ConnectedComponent> {
    let filled: Vec<ConnectedComponent> = extract_components(img).iter().map(fill_holes).collect();
    let mut nested = vec![false; filled.len()];
    for (i, inner) in filled.iter().enumerate() {
        let probe = inner.pixels[0];
        nested[i] = filled.iter().enumerate().any(|(j, outer)| {
            j != i
                && outer.bbox.left < inner.bbox.left
                && outer.bbox.right > inner.bbox.right
                && outer.bbox.top < inner.bbox.top
                && outer.bbox.bottom > inner.bbox.bottom
                && outer.filled.contains(probe)
        });
    }
    let mut kept: Vec<ConnectedComponent> = filled
        .into_iter()
        .zip(nested)
        .filter(|(_, n)| !n)
        .map(|(c, _)| c)
        .collect();
    sort_and_renumber(&mut kept);
    kept
}

/// Splits an arbitrary point set into 8-connected pieces (row-major seeds).
pub fn connected_pieces(points: &[Point]) -> Vec<Vec<Point>> {
    let Some(bbox) = BBox::from_points(points.iter().copied()) else {
        return Vec::new();
    };
    let mut mask = LocalMask::from_points(bbox, points);
    let mut seeds: Vec<Point> = points.to_vec();
    seeds.sort_by_key(|p| (p.y, p.x));
    let mut pieces = Vec::new();
    for s in seeds {
        if !mask.contains(s) {
            continue;
        }
        mask.set(s, false);
        let mut piece = vec![s];
        let mut stack = vec![s];
        while let Some(p) = stack.pop() {
            for (dx, dy) in crate::geometry::NEIGHBORS8 {
                let q = Point::new(p.x + dx, p.y + dy);
                if mask.contains(q) {
                    mask.set(q, false);
                    piece.push(q);
                    stack.push(q);
                }
            }
        }
        piece.sort_by_key(|p| (p.y, p.x));
        pieces.push(piece);
    }
    pieces
}
