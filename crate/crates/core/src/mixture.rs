//! Three-component Gaussian mixture over per-column ink heights.
//!
//! The means, sorted descending, give the cluster height levels used by the
//! clustering rules: `ht1` tracks ascender/descender spans, `ht2` the body
//! (x-height) span and `ht3` the thin-stroke span.

use serde::{Deserialize, Serialize};

use crate::components::ConnectedComponent;
use crate::geometry::Point;

pub const VARIANCE_FLOOR: f64 = 0.25;
pub const MAX_ITERATIONS: usize = 200;
pub const TOLERANCE: f64 = 1e-6;

/// Vertical ink span (max y − min y) inside one width-1 column window.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct HeightSample(pub u32);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeightMixture {
    /// Sorted descending.
    pub means: [f64; 3],
    pub variances: [f64; 3],
    pub weights: [f64; 3],
    pub sample_count: usize,
    /// Fewer than three distinct sample values; parameters were placed, not fitted.
    pub degenerate: bool,
    pub iterations: usize,
    pub log_likelihood: f64,
}

impl HeightMixture {
    pub fn ht1(&self) -> f64 {
        self.means[0]
    }

    pub fn ht2(&self) -> f64 {
        self.means[1]
    }

    pub fn ht3(&self) -> f64 {
        self.means[2]
    }
}

/// One sample per bbox column that holds filled pixels.
pub fn column_heights(cc: &ConnectedComponent) -> Vec<HeightSample> {
    let mask = &cc.filled;
    (0..mask.width as i32)
        .filter_map(|dx| {
            let x = mask.origin.x + dx;
            let mut ys = (0..mask.height as i32)
                .map(|dy| mask.origin.y + dy)
                .filter(|&y| mask.contains(Point::new(x, y)));
            let first = ys.next()?;
            let last = ys.next_back().unwrap_or(first);
            Some(HeightSample((last - first) as u32))
        })
        .collect()
}

fn percentile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

fn log_normal(x: f64, mean: f64, var: f64) -> f64 {
    -0.5 * ((2.0 * std::f64::consts::PI * var).ln() + (x - mean).powi(2) / var)
}

fn log_sum_exp(v: &[f64; 3]) -> f64 {
    let m = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + v.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

struct Params {
    means: [f64; 3],
    variances: [f64; 3],
    weights: [f64; 3],
}

impl Params {
    fn component_logs(&self, x: f64) -> [f64; 3] {
        std::array::from_fn(|k| {
            if self.weights[k] > 0.0 {
                self.weights[k].ln() + log_normal(x, self.means[k], self.variances[k])
            } else {
                f64::NEG_INFINITY
            }
        })
    }

    fn log_likelihood(&self, xs: &[f64]) -> f64 {
        xs.iter().map(|&x| log_sum_exp(&self.component_logs(x))).sum()
    }

    fn em_step(&self, xs: &[f64]) -> Params {
        let n = xs.len() as f64;
        let mut nk = [0.0; 3];
        let mut sx = [0.0; 3];
        let resp: Vec<[f64; 3]> = xs
            .iter()
            .map(|&x| {
                let logs = self.component_logs(x);
                let total = log_sum_exp(&logs);
                let r: [f64; 3] = std::array::from_fn(|k| (logs[k] - total).exp());
                for k in 0..3 {
                    nk[k] += r[k];
                    sx[k] += r[k] * x;
                }
                r
            })
            .collect();
        let mut next = Params { means: self.means, variances: self.variances, weights: [0.0; 3] };
        for k in 0..3 {
            next.weights[k] = nk[k] / n;
            if nk[k] < 1e-12 {
                continue;
            }
            next.means[k] = sx[k] / nk[k];
            let ss: f64 = xs.iter().zip(&resp).map(|(&x, r)| r[k] * (x - next.means[k]).powi(2)).sum();
            next.variances[k] = (ss / nk[k]).max(VARIANCE_FLOOR);
        }
        next
    }
}

fn degenerate_mixture(xs: &[f64], distinct: &[f64]) -> HeightMixture {
    let n = xs.len() as f64;
    let mut levels: Vec<f64> = distinct.iter().rev().copied().collect();
    let mut weights: Vec<f64> = levels
        .iter()
        .map(|&v| xs.iter().filter(|&&x| x == v).count() as f64 / n)
        .collect();
    // Pad by repeating the smallest level, splitting its weight.
    while levels.len() < 3 {
        let last = levels.len() - 1;
        levels.push(levels[last]);
        let share = weights[last] / 2.0;
        weights[last] = share;
        weights.push(share);
    }
    let params = Params {
        means: [levels[0], levels[1], levels[2]],
        variances: [VARIANCE_FLOOR; 3],
        weights: [weights[0], weights[1], weights[2]],
    };
    HeightMixture {
        means: params.means,
        variances: params.variances,
        weights: params.weights,
        sample_count: xs.len(),
        degenerate: true,
        iterations: 0,
        log_likelihood: params.log_likelihood(xs),
    }
}

/// Fits the mixture with EM and also returns the log-likelihood after every
/// iteration (index 0 is the initial parameters).
pub fn fit_gmm3_traced(samples: &[HeightSample]) -> Option<(HeightMixture, Vec<f64>)> {
    if samples.is_empty() {
        return None;
    }
    let xs: Vec<f64> = samples.iter().map(|s| s.0 as f64).collect();
    let mut sorted = xs.clone();
    sorted.sort_by(f64::total_cmp);
    let mut distinct = sorted.clone();
    distinct.dedup();
    if distinct.len() < 3 {
        return Some((degenerate_mixture(&xs, &distinct), Vec::new()));
    }

    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    let init_var = (var / 3.0).max(VARIANCE_FLOOR);
    let mut params = Params {
        means: [percentile(&sorted, 0.85), percentile(&sorted, 0.50), percentile(&sorted, 0.15)],
        variances: [init_var; 3],
        weights: [1.0 / 3.0; 3],
    };

    let mut trace = vec![params.log_likelihood(&xs)];
    let mut iterations = 0;
    while iterations < MAX_ITERATIONS {
        params = params.em_step(&xs);
        iterations += 1;
        let ll = params.log_likelihood(&xs);
        let delta = (ll - trace[trace.len() - 1]).abs();
        trace.push(ll);
        if delta < TOLERANCE {
            break;
        }
    }

    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| params.means[b].total_cmp(&params.means[a]));
    let mixture = HeightMixture {
        means: order.map(|k| params.means[k]),
        variances: order.map(|k| params.variances[k]),
        weights: order.map(|k| params.weights[k]),
        sample_count: xs.len(),
        degenerate: false,
        iterations,
        log_likelihood: *trace.last().expect("trace holds the initial value"),
    };
    Some((mixture, trace))
}

/// EM fit of three 1-D Gaussians; `None` for an empty sample list.
pub fn fit_gmm3(samples: &[HeightSample]) -> Option<HeightMixture> {
    fit_gmm3_traced(samples).map(|(m, _)| m)
}

/// Refits on the full sample list; a no-op when nothing new arrived.
pub fn update_mixture(
    mix: &HeightMixture,
    new_samples: &[HeightSample],
    all_samples: &[HeightSample],
) -> HeightMixture {
    if new_samples.is_empty() {
        return mix.clone();
    }
    fit_gmm3(all_samples).unwrap_or_else(|| mix.clone())
}
