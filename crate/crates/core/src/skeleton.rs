//! Zhang–Suen style thinning of filled components, followed by removal of
//! redundant pixels and short terminal branches.

use crate::components::{ConnectedComponent, LocalMask};
use crate::geometry::{BBox, Point, NEIGHBORS8};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Skeleton {
    pub owner: usize,
    mask: LocalMask,
}

impl Skeleton {
    pub fn from_points(owner: usize, points: &[Point]) -> Self {
        let bbox = BBox::from_points(points.iter().copied())
            .unwrap_or(BBox { left: 0, top: 0, right: 0, bottom: 0 });
        Self { owner, mask: LocalMask::from_points(bbox, points) }
    }

    pub fn contains(&self, p: Point) -> bool {
        self.mask.contains(p)
    }

    pub fn len(&self) -> usize {
        self.mask.count()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Skeleton pixels in row-major order.
    pub fn points(&self) -> Vec<Point> {
        self.mask.points().collect()
    }

    pub fn neighbor_count(&self, p: Point) -> usize {
        NEIGHBORS8
            .iter()
            .filter(|&&(dx, dy)| self.mask.contains(Point::new(p.x + dx, p.y + dy)))
            .count()
    }

    pub fn neighbors(&self, p: Point) -> impl Iterator<Item = Point> + '_ {
        NEIGHBORS8
            .iter()
            .map(move |&(dx, dy)| Point::new(p.x + dx, p.y + dy))
            .filter(|&q| self.mask.contains(q))
    }

    fn remove(&mut self, p: Point) {
        self.mask.set(p, false);
    }
}

/// Padded working raster; out-of-range reads are background.
struct Grid {
    origin: Point,
    width: i32,
    height: i32,
    bits: Vec<bool>,
}

impl Grid {
    fn from_mask(mask: &LocalMask) -> Self {
        let origin = Point::new(mask.origin.x - 1, mask.origin.y - 1);
        let (width, height) = (mask.width as i32 + 2, mask.height as i32 + 2);
        let mut bits = vec![false; (width * height) as usize];
        for p in mask.points() {
            bits[((p.y - origin.y) * width + (p.x - origin.x)) as usize] = true;
        }
        Self { origin, width, height, bits }
    }

    fn get(&self, x: i32, y: i32) -> bool {
        x >= 0 && y >= 0 && x < self.width && y < self.height && self.bits[(y * self.width + x) as usize]
    }

    fn set(&mut self, x: i32, y: i32, v: bool) {
        self.bits[(y * self.width + x) as usize] = v;
    }

    /// Neighbours N, NE, E, SE, S, SW, W, NW.
    fn ring(&self, x: i32, y: i32) -> [bool; 8] {
        NEIGHBORS8.map(|(dx, dy)| self.get(x + dx, y + dy))
    }

    fn piece_count(&self) -> usize {
        let mut seen = vec![false; self.bits.len()];
        let mut pieces = 0;
        for start in 0..self.bits.len() {
            if !self.bits[start] || seen[start] {
                continue;
            }
            pieces += 1;
            seen[start] = true;
            let mut stack = vec![start];
            while let Some(i) = stack.pop() {
                let (x, y) = ((i as i32) % self.width, (i as i32) / self.width);
                for (dx, dy) in NEIGHBORS8 {
                    let (nx, ny) = (x + dx, y + dy);
                    if self.get(nx, ny) {
                        let j = (ny * self.width + nx) as usize;
                        if !seen[j] {
                            seen[j] = true;
                            stack.push(j);
                        }
                    }
                }
            }
        }
        pieces
    }

    fn points(&self) -> Vec<Point> {
        (0..self.height)
            .flat_map(|y| (0..self.width).map(move |x| (x, y)))
            .filter(|&(x, y)| self.get(x, y))
            .map(|(x, y)| Point::new(x + self.origin.x, y + self.origin.y))
            .collect()
    }
}

fn ink_count(ring: &[bool; 8]) -> usize {
    ring.iter().filter(|&&b| b).count()
}

/// 0→1 transitions around the ring.
fn transitions(ring: &[bool; 8]) -> usize {
    (0..8).filter(|&i| !ring[i] && ring[(i + 1) % 8]).count()
}

/// Yokoi connectivity number for 8-connected foreground. A border pixel is
/// simple (deletable without changing topology) iff this equals 1.
fn connectivity8(ring: &[bool; 8]) -> usize {
    let bg = |i: usize| !ring[i % 8];
    [0usize, 2, 4, 6]
        .iter()
        .filter(|&&k| bg(k) && !(bg(k + 1) && bg(k + 2)))
        .count()
}

fn zhang_suen_candidate(ring: &[bool; 8], second: bool) -> bool {
    let b = ink_count(ring);
    if !(2..=6).contains(&b) || transitions(ring) != 1 {
        return false;
    }
    let [n, _, e, _, s, _, w, _] = *ring;
    if second {
        !(n && e && w) && !(n && s && w)
    } else {
        !(n && e && s) && !(e && s && w)
    }
}

fn zhang_suen(grid: &mut Grid) {
    loop {
        let mut changed = false;
        for second in [false, true] {
            let marked: Vec<(i32, i32)> = (0..grid.height)
                .flat_map(|y| (0..grid.width).map(move |x| (x, y)))
                .filter(|&(x, y)| grid.get(x, y) && zhang_suen_candidate(&grid.ring(x, y), second))
                .collect();
            // Deleting in sequence with a fresh check keeps two-pixel-thick
            // runs from vanishing entirely.
            if marked.is_empty() {
                continue;
            }
            changed = true;
            let before = grid.piece_count();
            for &(x, y) in &marked {
                grid.set(x, y, false);
            }
            if grid.piece_count() != before {
                // Parallel deletion erased a two-pixel-thick run; redo this
                // sub-iteration one pixel at a time with a fresh check.
                for &(x, y) in &marked {
                    grid.set(x, y, true);
                }
                for &(x, y) in &marked {
                    let ring = grid.ring(x, y);
                    if transitions(&ring) == 1 && (2..=6).contains(&ink_count(&ring)) {
                        grid.set(x, y, false);
                    }
                }
            }
        }
        if !changed {
            break;
        }
    }
}

/// Removes simple, non-terminal pixels until none remain, leaving an
/// 8-minimal arc structure (staircases become diagonals, junction blobs shrink).
fn remove_redundant(grid: &mut Grid) {
    loop {
        let mut changed = false;
        for y in 0..grid.height {
            for x in 0..grid.width {
                if !grid.get(x, y) {
                    continue;
                }
                let ring = grid.ring(x, y);
                if ink_count(&ring) >= 2 && connectivity8(&ring) == 1 {
                    grid.set(x, y, false);
                    changed = true;
                }
            }
        }
        if !changed {
            break;
        }
    }
}

/// One-pixel-wide skeleton of the component's filled mask.
pub fn thin(cc: &ConnectedComponent) -> Skeleton {
    thin_mask(cc.id, &cc.filled)
}

pub fn thin_mask(owner: usize, mask: &LocalMask) -> Skeleton {
    let mut grid = Grid::from_mask(mask);
    zhang_suen(&mut grid);
    remove_redundant(&mut grid);
    Skeleton::from_points(owner, &grid.points())
}

/// Walks from an endpoint along degree-2 pixels. Returns the branch pixels and
/// the junction that stopped the walk, or `None` when the walk ended at another
/// endpoint or looped.
fn terminal_branch(sk: &Skeleton, start: Point) -> Option<(Vec<Point>, Point)> {
    let mut branch = vec![start];
    let mut prev = start;
    let mut cur = sk.neighbors(start).next()?;
    loop {
        match sk.neighbor_count(cur) {
            n if n >= 3 => return Some((branch, cur)),
            2 => {
                branch.push(cur);
                let next = sk.neighbors(cur).find(|&q| q != prev)?;
                if next == start {
                    return None;
                }
                prev = cur;
                cur = next;
            }
            _ => return None,
        }
    }
}

/// Removes terminal branches (endpoint up to the nearest junction) shorter than
/// `min_branch` pixels, repeating until nothing qualifies. A branch is kept when
/// its junction has already dropped below three neighbours, so pruning never
/// eats through a junction entirely.
pub fn prune(sk: &Skeleton, min_branch: usize) -> Skeleton {
    let mut out = sk.clone();
    if min_branch == 0 {
        return out;
    }
    loop {
        let mut branches: Vec<(Vec<Point>, Point)> = out
            .points()
            .into_iter()
            .filter(|&p| out.neighbor_count(p) == 1)
            .filter_map(|p| terminal_branch(&out, p))
            .filter(|(b, _)| b.len() < min_branch)
            .collect();
        branches.sort_by_key(|(b, _)| (b.len(), b[0].x, b[0].y));
        let mut changed = false;
        for (branch, junction) in branches {
            let still_attached = out.contains(junction) && branch.iter().all(|&p| out.contains(p));
            if still_attached && out.neighbor_count(junction) >= 3 {
                for p in branch {
                    out.remove(p);
                }
                changed = true;
            }
        }
        if !changed {
            return out;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::components::{extract_components, fill_holes, connected_pieces};
    use crate::imaging::BinaryImage;

    fn component(rows: &[&str]) -> ConnectedComponent {
        fill_holes(&extract_components(&BinaryImage::from_ascii(rows))[0])
    }

    fn has_2x2_block(sk: &Skeleton) -> bool {
        sk.points().iter().any(|p| {
            sk.contains(Point::new(p.x + 1, p.y))
                && sk.contains(Point::new(p.x, p.y + 1))
                && sk.contains(Point::new(p.x + 1, p.y + 1))
        })
    }

    fn check_invariants(cc: &ConnectedComponent, sk: &Skeleton) {
        assert!(sk.points().iter().all(|&p| cc.filled.contains(p)));
        assert!(!has_2x2_block(sk), "2x2 block in skeleton");
        let shape: Vec<Point> = cc.filled.points().collect();
        assert_eq!(connected_pieces(&sk.points()).len(), connected_pieces(&shape).len());
    }

    #[test]
    fn single_pixel() {
        let cc = component(&["#"]);
        let sk = thin(&cc);
        assert_eq!(sk.points(), vec![Point::new(0, 0)]);
    }

    #[test]
    fn bar_thins_to_middle_row() {
        let cc = component(&["....................", ".##################.", ".##################.", ".##################."]);
        let sk = thin(&cc);
        check_invariants(&cc, &sk);
        assert!(sk.points().iter().all(|p| p.y == 2), "{:?}", sk.points());
        // Peeling shortens each end by up to the half-thickness plus one.
        assert!((sk.len() as i32 - 18).abs() <= 3, "len {}", sk.len());
    }

    #[test]
    fn two_by_two_survives() {
        let cc = component(&["##", "##"]);
        let sk = thin(&cc);
        check_invariants(&cc, &sk);
        assert!(!sk.is_empty());
    }

    #[test]
    fn disk_collapses_near_centre() {
        let r = 8i32;
        let rows: Vec<String> = (-r..=r)
            .map(|y| (-r..=r).map(|x| if x * x + y * y <= r * r { '#' } else { '.' }).collect())
            .collect();
        let refs: Vec<&str> = rows.iter().map(String::as_str).collect();
        let cc = component(&refs);
        let sk = thin(&cc);
        check_invariants(&cc, &sk);
        assert!(sk.len() <= 5, "disk skeleton has {} pixels", sk.len());
    }

    #[test]
    fn ring_keeps_loop_topology_before_filling() {
        // Thinning an unfilled ring must keep its hole.
        let img = BinaryImage::from_ascii(&[
            "..#####..",
            ".#######.",
            "###...###",
            "##.....##",
            "###...###",
            ".#######.",
            "..#####..",
        ]);
        let cc = extract_components(&img).remove(0);
        let sk = thin(&cc);
        let mut grid = BinaryImage::new(9, 7);
        for p in sk.points() {
            grid.set(p.x as u32, p.y as u32, false);
        }
        // Background pieces (4-connected) in the skeleton complement: outside + hole.
        let bg: Vec<Point> = (0..7)
            .flat_map(|y| (0..9).map(move |x| Point::new(x, y)))
            .filter(|&p| !sk.contains(p))
            .collect();
        let mut mask = LocalMask::from_points(BBox { left: -1, top: -1, right: 9, bottom: 7 }, &bg);
        for x in -1..=9 {
            mask.set(Point::new(x, -1), true);
            mask.set(Point::new(x, 7), true);
        }
        for y in -1..=7 {
            mask.set(Point::new(-1, y), true);
            mask.set(Point::new(9, y), true);
        }
        let mut regions = 0;
        let mut seen = std::collections::HashSet::new();
        for p in mask.points() {
            if seen.contains(&p) {
                continue;
            }
            regions += 1;
            let mut stack = vec![p];
            seen.insert(p);
            while let Some(q) = stack.pop() {
                for (dx, dy) in crate::geometry::NEIGHBORS4 {
                    let r = Point::new(q.x + dx, q.y + dy);
                    if mask.contains(r) && seen.insert(r) {
                        stack.push(r);
                    }
                }
            }
        }
        assert_eq!(regions, 2);
    }

    fn skeleton_of(rows: &[&str]) -> Skeleton {
        let img = BinaryImage::from_ascii(rows);
        let pts: Vec<Point> = img.ink_pixels().map(|(x, y)| Point::new(x as i32, y as i32)).collect();
        Skeleton::from_points(0, &pts)
    }

    #[test]
    fn prune_without_junctions_is_identity() {
        let sk = skeleton_of(&["#....", ".###.", "....#"]);
        assert_eq!(prune(&sk, 10), sk);
    }

    #[test]
    fn prune_zero_is_identity() {
        let sk = skeleton_of(&["..#..", "..#..", "#####", "..#..", "..#.."]);
        assert_eq!(prune(&sk, 0), sk);
    }

    #[test]
    fn prune_removes_short_spur() {
        let sk = skeleton_of(&[
            "#.......",
            "#.......",
            "#..#....",
            "#.#.....",
            ".#......",
            "#.......",
            "#.......",
            "########",
        ]);
        let pruned = prune(&sk, 3);
        let removed: Vec<Point> = sk.points().into_iter().filter(|&p| !pruned.contains(p)).collect();
        assert_eq!(removed, vec![Point::new(3, 2), Point::new(2, 3)]);
        assert_eq!(connected_pieces(&pruned.points()).len(), 1);
    }

    #[test]
    fn prune_keeps_two_arms_of_short_star() {
        let sk = skeleton_of(&["#...#", ".#.#.", "..#..", "..#..", "..#.."]);
        let pruned = prune(&sk, 10);
        assert_eq!(connected_pieces(&pruned.points()).len(), 1);
        assert!(pruned.len() >= 3);
    }

    fn random_blob(seed: u64) -> ConnectedComponent {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut img = BinaryImage::new(40, 40);
        let mut cx = 20i32;
        let mut cy = 20i32;
        for _ in 0..rng.random_range(2..6) {
            let r = rng.random_range(1..5i32);
            for y in -r..=r {
                for x in -r..=r {
                    if x * x + y * y <= r * r {
                        let (px, py) = (cx + x, cy + y);
                        if (0..40).contains(&px) && (0..40).contains(&py) {
                            img.set(px as u32, py as u32, true);
                        }
                    }
                }
            }
            cx = (cx + rng.random_range(-4..=4)).clamp(6, 33);
            cy = (cy + rng.random_range(-4..=4)).clamp(6, 33);
        }
        let comps = extract_components(&img);
        fill_holes(comps.iter().max_by_key(|c| c.pixels.len()).unwrap())
    }

    proptest::proptest! {
        #[test]
        fn thinning_invariants_on_blobs(seed in 0u64..5000) {
            let cc = random_blob(seed);
            let sk = thin(&cc);
            check_invariants(&cc, &sk);
        }

        #[test]
        fn prune_is_idempotent(seed in 0u64..5000, min_branch in 0usize..6) {
            let sk = thin(&random_blob(seed));
            let once = prune(&sk, min_branch);
            proptest::prop_assert_eq!(prune(&once, min_branch), once.clone());
            proptest::prop_assert_eq!(connected_pieces(&once.points()).len(), connected_pieces(&sk.points()).len());
        }
    }
}
