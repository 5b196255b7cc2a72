//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any fails.
//! Runs without the libtest harness so the lines show up in `cargo test` output.

mod common;

use std::collections::BTreeSet;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use common::{comb, features, rect};
use lineseg::clustering::{build_regression_line, Cluster, ComponentFeatures, ComponentStore, Side};
use lineseg::components::{extract_filled_components, ConnectedComponent};
use lineseg::config::PipelineConfig;
use lineseg::eval::{evaluate, percent_truncated, EvalReport};
use lineseg::features::{extract_strokes, PointKind, SignificantPoint};
use lineseg::geometry::Point;
use lineseg::imaging::{estimate_skew_refined, otsu_binarize, BinaryImage, GrayImage};
use lineseg::mixture::{fit_gmm3_traced, HeightSample};
use lineseg::pipeline::{segment_page, PageResult};
use lineseg::postprocess::{combine_clusters, merge_decision, place_specials};
use lineseg::skeleton::{thin, Skeleton};
use lineseg::synth::{generate_page, PageSpec, SyntheticPage};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn within(elapsed: Duration, limit: Duration) -> Result<(), String> {
    check(elapsed < limit, format!("took {elapsed:.2?}, limit {limit:?}"))
}

// --- 1 ---------------------------------------------------------------------

fn metric_arithmetic() -> Outcome {
    let start = Instant::now();
    let rows = [(7329, ["95.91%", "95.49%", "95.70%"]), (7548, ["98.78%", "98.34%", "98.56%"])];
    let mut got = Vec::new();
    for (o2o, want) in rows {
        let r = EvalReport::from_counts(7641, 7675, o2o, 0.95);
        let printed = [r.dr, r.ra, r.fm].map(percent_truncated);
        check(printed == want, format!("o2o {o2o}: {printed:?} vs {want:?}"))?;
        got.push(printed.join("/"));
    }
    within(start.elapsed(), Duration::from_millis(1))?;
    Ok(got.join(", "))
}

// --- 2 ---------------------------------------------------------------------

/// Textbook form: maximise w0·w1·(μ0 − μ1)², first maximum wins.
fn otsu_oracle(pixels: &[u8]) -> u8 {
    let n = pixels.len() as f64;
    let mut best = (f64::NEG_INFINITY, 0u8);
    for t in 0..=255u8 {
        let (c0, s0) = pixels.iter().filter(|&&v| v <= t).fold((0.0, 0.0), |(c, s), &v| (c + 1.0, s + v as f64));
        let (c1, s1) = pixels.iter().filter(|&&v| v > t).fold((0.0, 0.0), |(c, s), &v| (c + 1.0, s + v as f64));
        let var = if c0 == 0.0 || c1 == 0.0 { 0.0 } else { (c0 / n) * (c1 / n) * (s0 / c0 - s1 / c1).powi(2) };
        if var > best.0 * (1.0 + 1e-12) {
            best = (var, t);
        }
    }
    best.1
}

fn otsu_agreement() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut images = Vec::new();
    for k in 0..100 {
        let pixels: Vec<u8> = if k % 2 == 0 {
            (0..64 * 64).map(|_| rng.random()).collect()
        } else {
            // Ink on paper with noise.
            let (ink, paper) = (rng.random_range(10..90), rng.random_range(150..250));
            (0..64 * 64)
                .map(|_| {
                    let base: i32 = if rng.random_bool(0.2) { ink } else { paper };
                    (base + rng.random_range(-25..=25)).clamp(0, 255) as u8
                })
                .collect()
        };
        images.push(GrayImage::new(64, 64, pixels).unwrap());
    }
    let start = Instant::now();
    let got: Vec<u8> = images.iter().map(|img| otsu_binarize(img).threshold).collect();
    within(start.elapsed(), Duration::from_secs(1))?;
    let agree = images.iter().zip(&got).filter(|(img, &t)| otsu_oracle(img.pixels()) == t).count();
    check(agree == 100, format!("{agree}/100 agree"))?;
    Ok("100/100 thresholds equal the exhaustive search".into())
}

// --- 3 ---------------------------------------------------------------------

fn skew_recovery() -> Outcome {
    let start = Instant::now();
    let mut found = Vec::new();
    for theta in [-20.0f64, -7.0, 0.0, 5.0, 15.0] {
        let page = generate_page(&PageSpec { lines: 6, skew_deg: theta, seed: 5, ..PageSpec::default() });
        let ink = otsu_binarize(&page.image).image;
        let est = estimate_skew_refined(&ink, 1f64.to_radians(), 0.1f64.to_radians()).map_err(|e| e.to_string())?;
        let deg = est.angle.to_degrees();
        check((deg + theta).abs() <= 0.2 + 1e-9, format!("θ {theta}: estimated {deg:.3}"))?;
        found.push(format!("{theta}→{deg:.2}"));
    }
    within(start.elapsed(), Duration::from_secs(30))?;
    Ok(found.join(" "))
}

// --- 4 ---------------------------------------------------------------------

fn gmm_recovery() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut samples = Vec::new();
    for mu in [30.0, 15.0, 3.0] {
        let normal = Normal::new(mu, 1.0).unwrap();
        for _ in 0..100 {
            let v: f64 = normal.sample(&mut rng);
            samples.push(HeightSample(v.round().max(0.0) as u32));
        }
    }
    let start = Instant::now();
    let (m, trace) = fit_gmm3_traced(&samples).ok_or("no fit")?;
    within(start.elapsed(), Duration::from_secs(1))?;
    for (k, mu) in [30.0, 15.0, 3.0].into_iter().enumerate() {
        check((m.means[k] - mu).abs() <= 1.0, format!("mean {k}: {:.3} vs {mu}", m.means[k]))?;
        check((m.weights[k] - 1.0 / 3.0).abs() <= 0.1, format!("weight {k}: {:.3}", m.weights[k]))?;
    }
    for w in trace.windows(2) {
        check(w[1] >= w[0] - 1e-9 * w[0].abs().max(1.0), format!("log-likelihood fell {} → {}", w[0], w[1]))?;
    }
    Ok(format!(
        "means {:.2}/{:.2}/{:.2}, weights {:.3}/{:.3}/{:.3}, {} monotone EM steps",
        m.means[0], m.means[1], m.means[2], m.weights[0], m.weights[1], m.weights[2], trace.len() - 1
    ))
}

// --- 5 ---------------------------------------------------------------------

fn regression_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst = 0.0f64;
    for k in 0..50 {
        let mut xs: Vec<i32> = (0..400).collect();
        let pts: Vec<(i32, i32)> = (0..25)
            .map(|_| {
                let i = rng.random_range(0..xs.len());
                (xs.swap_remove(i), rng.random_range(0..300))
            })
            .collect();
        let sps: Vec<SignificantPoint> = pts
            .iter()
            .map(|&(x, y)| SignificantPoint { pos: Point::new(x, y), kind: PointKind::Minimum, owner: 0 })
            .collect();
        let side = if k % 2 == 0 { Side::Left } else { Side::Right };
        let line = build_regression_line(&sps, side, 0, 300, 25);
        // Normal equations on raw sums.
        let n = 25.0;
        let (sx, sy) = pts.iter().fold((0.0, 0.0), |(a, b), &(x, y)| (a + x as f64, b + y as f64));
        let sxx: f64 = pts.iter().map(|&(x, _)| (x as f64).powi(2)).sum();
        let sxy: f64 = pts.iter().map(|&(x, y)| x as f64 * y as f64).sum();
        let slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
        let intercept = (sy - slope * sx) / n;
        let err = (line.slope - slope).abs().max((line.intercept - intercept).abs());
        check(err <= 1e-9, format!("set {k}: error {err:e}"))?;
        worst = worst.max(err);
    }
    Ok(format!("50/50 sets, worst error {worst:.1e}"))
}

// --- 6 ---------------------------------------------------------------------

fn polyline(vertices: &[(i32, i32)]) -> Vec<Point> {
    let mut out = vec![Point::new(vertices[0].0, vertices[0].1)];
    for w in vertices.windows(2) {
        let (mut x, mut y) = w[0];
        let (tx, ty) = w[1];
        while (x, y) != (tx, ty) {
            x += (tx - x).signum();
            y += (ty - y).signum();
            out.push(Point::new(x, y));
        }
    }
    common::dedup(out)
}

fn junction_count(sk: &Skeleton) -> usize {
    sk.points().iter().filter(|&&p| sk.neighbor_count(p) >= 3).count()
}

fn random_skeleton(seed: u64) -> Skeleton {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut img = BinaryImage::new(48, 32);
    let (mut x, mut y) = (24i32, 16i32);
    for _ in 0..rng.random_range(3..9) {
        let r = rng.random_range(1..4i32);
        for dy in -r..=r {
            for dx in -r..=r {
                let (px, py) = (x + dx, y + dy);
                if dx * dx + dy * dy <= r * r && (0..48).contains(&px) && (0..32).contains(&py) {
                    img.set(px as u32, py as u32, true);
                }
            }
        }
        let (sx, sy) = (rng.random_range(-1..=1), rng.random_range(-1..=1));
        for _ in 0..rng.random_range(3..12) {
            x = (x + sx).clamp(2, 45);
            y = (y + sy).clamp(2, 29);
            img.set(x as u32, y as u32, true);
            img.set(x as u32 + 1, y as u32, true);
        }
    }
    let comps = extract_filled_components(&img);
    thin(comps.iter().max_by_key(|c| c.pixels.len()).unwrap())
}

fn stroke_fixtures() -> Outcome {
    let count = |pts: &[Point]| {
        let sk = Skeleton::from_points(0, pts);
        (extract_strokes(&sk).len(), junction_count(&sk))
    };
    let wave = polyline(&[(0, 6), (6, 0), (12, 6), (18, 0), (24, 6), (30, 0), (36, 6)]);
    check(count(&wave) == (6, 0), format!("wave: {:?}", count(&wave)))?;
    let v = polyline(&[(0, 0), (5, 5), (10, 0)]);
    check(count(&v) == (2, 0), format!("V: {:?}", count(&v)))?;
    let mut t = polyline(&[(0, 0), (10, 0)]);
    t.retain(|p| p.x != 5);
    t.extend(polyline(&[(5, 1), (5, 8)]));
    check(count(&t) == (3, 1), format!("T: {:?}", count(&t)))?;
    let mut x = polyline(&[(0, 0), (10, 10)]);
    x.extend(polyline(&[(0, 10), (10, 0)]));
    let x = common::dedup(x);
    check(count(&x) == (4, 1), format!("X: {:?}", count(&x)))?;

    for seed in 0..100 {
        let sk = random_skeleton(seed);
        let strokes = extract_strokes(&sk);
        let covered: Vec<Point> = strokes.iter().flat_map(|s| s.points.iter().copied()).collect();
        let unique: BTreeSet<(i32, i32)> = covered.iter().map(|p| (p.x, p.y)).collect();
        check(unique.len() == covered.len(), format!("skeleton {seed}: a pixel is in two strokes"))?;
        check(
            covered.iter().all(|&p| sk.contains(p) && sk.neighbor_count(p) < 3),
            format!("skeleton {seed}: stroke pixel outside skeleton or on a junction"),
        )?;
        check(covered.len() + junction_count(&sk) == sk.len(), format!("skeleton {seed}: pixels lost"))?;
    }
    Ok("wave 6, V 2, T 3 + junction, X 4 + junction; 100/100 skeletons partitioned".into())
}

// --- 7, 8, 9 -----------------------------------------------------------------

fn sweep_spec(seed: u64, touching: bool) -> PageSpec {
    PageSpec {
        lines: 3 + (seed % 6) as usize,
        skew_deg: ((seed * 7) % 21) as f64 - 10.0,
        seed,
        touching,
        ..PageSpec::default()
    }
}

fn run_page(spec: &PageSpec) -> (SyntheticPage, PageResult) {
    let page = generate_page(spec);
    let res = segment_page(&page.image, &PipelineConfig::default()).expect("segmentation runs");
    (page, res)
}

fn conserved(res: &PageResult) -> Result<(), String> {
    check(res.filled_area == res.assigned_area, format!("filled {} vs assigned {}", res.filled_area, res.assigned_area))
}

fn clean_pages() -> Outcome {
    let start = Instant::now();
    let mut bad = Vec::new();
    for seed in 0..20 {
        let spec = sweep_spec(seed, false);
        let (page, res) = run_page(&spec);
        conserved(&res)?;
        let r = evaluate(&page.truth, &res.labels, 0.9).map_err(|e| e.to_string())?;
        if res.lines.len() != spec.lines || r.fm != 1.0 {
            bad.push(format!("seed {seed}: {} of {} lines, FM {:.3}", res.lines.len(), spec.lines, r.fm));
        }
    }
    check(bad.is_empty(), bad.join("; "))?;
    within(start.elapsed(), Duration::from_secs(60))?;
    Ok(format!("20/20 exact, FM 1.0 ({:.1?})", start.elapsed()))
}

fn touching_pages() -> Outcome {
    let mut good = 0;
    let mut fms = Vec::new();
    for seed in 0..10 {
        let (page, res) = run_page(&sweep_spec(seed, true));
        conserved(&res)?;
        check(page.touching_pair.is_some(), format!("seed {seed}: generator placed no connector"))?;
        let r = evaluate(&page.truth, &res.labels, 0.9).map_err(|e| e.to_string())?;
        good += (r.fm >= 0.9) as usize;
        fms.push(format!("{:.2}", r.fm));
    }
    check(good >= 8, format!("{good}/10 with FM ≥ 0.9 [{}]", fms.join(" ")))?;
    Ok(format!("{good}/10 with FM ≥ 0.9 [{}]", fms.join(" ")))
}

fn conservation_and_determinism() -> Outcome {
    let mut runs = 0;
    for seed in [1, 6, 11, 16] {
        for touching in [false, true] {
            let spec = sweep_spec(seed, touching);
            let (_, a) = run_page(&spec);
            let (_, b) = run_page(&spec);
            conserved(&a)?;
            check(a.labels == b.labels, format!("seed {seed}: label rasters differ"))?;
            let (ja, jb) = (serde_json::to_string(&a.to_json("p")).unwrap(), serde_json::to_string(&b.to_json("p")).unwrap());
            check(ja == jb, format!("seed {seed}: JSON differs"))?;
            check(a.trace == b.trace && a.merges == b.merges, format!("seed {seed}: traces differ"))?;
            // Every pixel the page labelled as ink ends up in some line.
            let ink = otsu_binarize(&generate_page(&spec).image).image;
            let lost = ink.ink_pixels().filter(|&(x, y)| a.labels.get(x, y) == 0).count();
            check(lost == 0, format!("seed {seed}: {lost} ink pixels unlabelled"))?;
            runs += 1;
        }
    }
    Ok(format!("{runs} pages: areas conserved, repeated runs bit-identical"))
}

// --- 10 --------------------------------------------------------------------

fn store_from(fs: Vec<ComponentFeatures>) -> ComponentStore {
    fs.into_iter().map(|f| (f.id(), f)).collect()
}

fn build(id: usize, members: &[usize], store: &ComponentStore, cfg: &PipelineConfig) -> Cluster {
    let mut c = Cluster::new(id, &store[&members[0]], cfg.sign_point_window);
    c.members = members.to_vec();
    c.rebuild(store, cfg);
    c
}

fn line_words(first_id: usize, xs: &[i32], base: i32) -> Vec<ComponentFeatures> {
    xs.iter().enumerate().map(|(k, &x)| features(first_id + k, comb(x, base, 5, 12))).collect()
}

fn brute_closest(special: &ConnectedComponent, clusters: &[Cluster], store: &ComponentStore) -> usize {
    let mut best = (i64::MAX, usize::MAX, 0);
    for (k, c) in clusters.iter().enumerate() {
        for m in &c.members {
            for q in store[m].cc.filled.points() {
                for p in special.filled.points() {
                    if (p.dist_sq(q), c.id) < (best.0, best.1) {
                        best = (p.dist_sq(q), c.id, k);
                    }
                }
            }
        }
    }
    best.2
}

fn postprocess_fixtures() -> Outcome {
    let cfg = PipelineConfig::default();

    // One line broken into two clusters by a wide gap.
    let mut fs = line_words(0, &[0, 40, 80], 30);
    fs.extend(line_words(3, &[200, 240], 30));
    let store = store_from(fs);
    let split = vec![build(1, &[0, 1, 2], &store, &cfg), build(2, &[3, 4], &store, &cfg)];
    let (out, _) = combine_clusters(split, &store, None, &cfg);
    check(out.len() == 1 && out[0].members.len() == 5, "split line not re-merged")?;

    // Three true lines stacked on top of each other.
    let mut fs = Vec::new();
    for (k, base) in [30, 70, 110].into_iter().enumerate() {
        fs.extend(line_words(10 * k, &[0, 40, 80, 120], base));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut specials = Vec::new();
    for s in 0..30 {
        let id = 100 + s;
        let (x, y) = (rng.random_range(0..150), rng.random_range(5..130));
        let pixels = if s % 2 == 0 {
            rect(x, y, x + 1, y + 1)
        } else {
            // Comma: head with a tail slanting down-left.
            let mut v = rect(x, y, x + 2, y + 2);
            v.extend(polyline(&[(x + 1, y + 3), (x - 1, y + 6)]));
            common::dedup(v)
        };
        fs.push(features(id, pixels));
        specials.push(id);
    }
    let store = store_from(fs);
    let stacked: Vec<Cluster> = [7, 3, 5]
        .into_iter()
        .enumerate()
        .map(|(k, id)| build(id, &[10 * k, 10 * k + 1, 10 * k + 2, 10 * k + 3], &store, &cfg))
        .collect();
    for i in 0..3 {
        for j in 0..3 {
            if i != j {
                check(!merge_decision(&stacked[i], &stacked[j], &store, None, &cfg).merged, format!("lines {i},{j} merged"))?;
            }
        }
    }
    let (out, log) = combine_clusters(stacked.clone(), &store, None, &cfg);
    let mut by_id = stacked.clone();
    by_id.sort_by_key(|c| c.id);
    check(log.is_empty() && out == by_id, "combine touched stacked lines")?;

    let got = place_specials(&specials, &stacked, &store);
    let hits = specials.iter().zip(&got).filter(|(s, &k)| k == brute_closest(&store[s].cc, &stacked, &store)).count();
    check(hits == specials.len(), format!("{hits}/{} specials on their closest line", specials.len()))?;
    Ok(format!("split re-merged, stacked kept apart, {hits}/{} specials placed", specials.len()))
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("metric arithmetic", metric_arithmetic),
        ("otsu oracle", otsu_agreement),
        ("skew recovery", skew_recovery),
        ("gmm recovery", gmm_recovery),
        ("regression oracle", regression_oracle),
        ("stroke fixtures", stroke_fixtures),
        ("clean pages end to end", clean_pages),
        ("touching lines", touching_pages),
        ("conservation and determinism", conservation_and_determinism),
        ("postprocess fixtures", postprocess_fixtures),
    ];
    let mut failed = 0;
    for (k, (name, f)) in criteria.iter().enumerate() {
        let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|_| Err("panicked".into()));
        match outcome {
            Ok(detail) => println!("PASS [{:>2}] {name}: {detail}", k + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL [{:>2}] {name}: {detail}", k + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
