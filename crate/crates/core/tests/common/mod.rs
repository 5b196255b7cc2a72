#![allow(dead_code)]

use lineseg::clustering::ComponentFeatures;
use lineseg::components::ConnectedComponent;
use lineseg::geometry::Point;
use lineseg::mixture::HeightMixture;

pub fn rect(x0: i32, y0: i32, x1: i32, y1: i32) -> Vec<Point> {
    let mut v = Vec::new();
    for y in y0..=y1 {
        for x in x0..=x1 {
            v.push(Point::new(x, y));
        }
    }
    v
}

/// A word stand-in: `teeth` 2-px-wide uprights of height `h` standing on a
/// 2-px base bar whose bottom row is `base`. Skeletonises to many strokes.
pub fn comb(x0: i32, base: i32, teeth: i32, h: i32) -> Vec<Point> {
    let right = x0 + 5 * (teeth - 1) + 1;
    let mut v = rect(x0, base - 1, right, base);
    for t in 0..teeth {
        let x = x0 + 5 * t;
        v.extend(rect(x, base - h + 1, x + 1, base - 2));
    }
    dedup(v)
}

pub fn dedup(mut v: Vec<Point>) -> Vec<Point> {
    v.sort_by_key(|p| (p.y, p.x));
    v.dedup();
    v
}

pub fn features(id: usize, pixels: Vec<Point>) -> ComponentFeatures {
    ComponentFeatures::compute(ConnectedComponent::from_pixels(id, pixels), 3)
}

/// A non-degenerate mixture with the given sorted means.
pub fn mixture(ht1: f64, ht2: f64, ht3: f64) -> HeightMixture {
    HeightMixture {
        means: [ht1, ht2, ht3],
        variances: [1.0; 3],
        weights: [1.0 / 3.0; 3],
        sample_count: 30,
        degenerate: false,
        iterations: 1,
        log_likelihood: 0.0,
    }
}
