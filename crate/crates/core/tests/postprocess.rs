mod common;

use std::collections::BTreeSet;

use common::{comb, features, rect};
use lineseg::clustering::{Cluster, ComponentFeatures, ComponentStore, SegmentationState};
use lineseg::components::ConnectedComponent;
use lineseg::config::PipelineConfig;
use lineseg::postprocess::{assign_specials, combine_clusters, median_line, merge_decision, place_specials, MergeCase};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn build(id: usize, members: &[usize], store: &ComponentStore) -> Cluster {
    let cfg = PipelineConfig::default();
    let mut c = Cluster::new(id, &store[&members[0]], cfg.sign_point_window);
    c.members = members.to_vec();
    c.rebuild(store, &cfg);
    c
}

fn store_from(fs: Vec<ComponentFeatures>) -> ComponentStore {
    fs.into_iter().map(|f| (f.id(), f)).collect()
}

/// Words of one line: combs at `base` starting at each x.
fn line_words(first_id: usize, xs: &[i32], base: i32) -> Vec<ComponentFeatures> {
    xs.iter().enumerate().map(|(k, &x)| features(first_id + k, comb(x, base, 5, 12))).collect()
}

#[test]
fn median_line_of_one_member_is_flat() {
    let store = store_from(vec![features(0, rect(10, 10, 20, 14))]);
    let c = build(1, &[0], &store);
    let m = median_line(&c, &store);
    assert_eq!(m.left(), 10.0);
    assert_eq!(m.right(), 20.0);
    for x in [0.0, 10.0, 15.5, 20.0, 40.0] {
        assert_eq!(m.y_at(x), 12.0);
    }
}

#[test]
fn median_line_through_three_centres() {
    let store = store_from(vec![
        features(0, rect(8, 18, 12, 22)),
        features(1, rect(28, 22, 32, 26)),
        features(2, rect(48, 20, 52, 24)),
    ]);
    let c = build(1, &[2, 0, 1], &store);
    let m = median_line(&c, &store);
    assert_eq!(m.vertices, vec![(8.0, 20.0), (10.0, 20.0), (30.0, 24.0), (50.0, 22.0), (52.0, 22.0)]);
}

#[test]
fn median_line_interpolates_between_vertices() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..20 {
        let n = rng.random_range(2..7);
        let mut fs = Vec::new();
        let mut x = 0;
        for k in 0..n {
            let y = rng.random_range(10..40);
            fs.push(features(k, rect(x, y, x + 4, y + 4)));
            x += rng.random_range(8..20);
        }
        let ids: Vec<usize> = (0..n).collect();
        let store = store_from(fs);
        let c = build(1, &ids, &store);
        let m = median_line(&c, &store);
        let cgs: Vec<(f64, f64)> = ids.iter().map(|id| store[id].cc.center_of_gravity()).collect();
        for w in cgs.windows(2) {
            let ((x0, y0), (x1, y1)) = (w[0], w[1]);
            for s in 0..=10 {
                let t = s as f64 / 10.0;
                let xq = x0 + t * (x1 - x0);
                assert!((m.y_at(xq) - (y0 + t * (y1 - y0))).abs() < 1e-9);
            }
        }
        assert_eq!(m.y_at(-100.0), cgs[0].1);
        assert_eq!(m.y_at(1e6), cgs[cgs.len() - 1].1);
    }
}

#[test]
fn split_line_is_merged_across_a_gap() {
    let cfg = PipelineConfig::default();
    let mut fs = line_words(0, &[0, 40, 80], 30);
    fs.extend(line_words(3, &[200, 240], 30));
    let store = store_from(fs);
    let a = build(1, &[0, 1, 2], &store);
    let b = build(2, &[3, 4], &store);
    let d = merge_decision(&a, &b, &store, None, &cfg);
    assert_eq!(d.case, MergeCase::DisjointRight);
    assert_eq!(d.ht_diff, 0.0);
    assert!(d.merged);
    let (out, log) = combine_clusters(vec![a, b], &store, None, &cfg);
    assert_eq!(out.len(), 1);
    assert_eq!(out[0].id, 1);
    assert_eq!(log.len(), 1);
    let members: BTreeSet<usize> = out[0].members.iter().copied().collect();
    assert_eq!(members, BTreeSet::from([0, 1, 2, 3, 4]));
}

#[test]
fn overlapping_fragments_merge_when_overlap_is_small() {
    let cfg = PipelineConfig::default();
    let mut fs = line_words(0, &[0, 40, 80, 120, 160], 30);
    fs.extend(line_words(5, &[170, 210, 250], 32));
    let store = store_from(fs);
    let a = build(1, &[0, 1, 2, 3, 4], &store);
    let b = build(2, &[5, 6, 7], &store);
    let d = merge_decision(&a, &b, &store, None, &cfg);
    assert_eq!(d.case, MergeCase::VerticalOverlap);
    let lo = a.bbox.left.max(b.bbox.left);
    let hi = a.bbox.right.min(b.bbox.right);
    assert_eq!(d.overlap, (hi - lo + 1) as f64);
    assert!(d.overlap < 0.33 * b.wd() as f64);
    let (ma, mb) = (median_line(&a, &store), median_line(&b, &store));
    let diff = (lo..=hi).map(|x| (ma.y_at(x as f64) - mb.y_at(x as f64)).abs()).sum::<f64>() / d.overlap;
    assert!((d.ht_diff - diff).abs() < 1e-12);
    assert!(d.ht_diff < a.mixture.ht1() && d.ht_diff < b.mixture.ht1());
    assert!(d.merged);
}

#[test]
fn stacked_lines_are_never_merged() {
    let cfg = PipelineConfig::default();
    let mut fs = Vec::new();
    for (k, base) in [30, 70, 110].into_iter().enumerate() {
        fs.extend(line_words(10 * k, &[0, 40, 80, 120], base));
    }
    let store = store_from(fs);
    let clusters: Vec<Cluster> = (0..3)
        .map(|k| build(k + 1, &[10 * k, 10 * k + 1, 10 * k + 2, 10 * k + 3], &store))
        .collect();
    for i in 0..3 {
        for j in i + 1..3 {
            let d = merge_decision(&clusters[i], &clusters[j], &store, None, &cfg);
            assert!(!d.merged);
            assert!(d.ht_diff > clusters[i].mixture.ht1());
        }
    }
    let (out, log) = combine_clusters(clusters.clone(), &store, None, &cfg);
    assert!(log.is_empty());
    assert_eq!(out, clusters);
}

#[test]
fn merging_ignores_cluster_id_order() {
    let cfg = PipelineConfig::default();
    let mut fs = line_words(0, &[0, 40], 30);
    fs.extend(line_words(2, &[200, 240], 30));
    fs.extend(line_words(4, &[0, 40, 80], 80));
    fs.extend(line_words(7, &[150, 190], 81));
    let store = store_from(fs);
    let groups: [&[usize]; 4] = [&[0, 1], &[2, 3], &[4, 5, 6], &[7, 8]];
    let partition = |ids: [usize; 4]| {
        let clusters: Vec<Cluster> = groups.iter().zip(ids).map(|(g, id)| build(id, g, &store)).collect();
        let (out, log) = combine_clusters(clusters, &store, None, &cfg);
        assert!(log.len() <= 3);
        let mut parts: Vec<BTreeSet<usize>> = out.iter().map(|c| c.members.iter().copied().collect()).collect();
        parts.sort();
        parts
    };
    let base = partition([1, 2, 3, 4]);
    assert_eq!(base.len(), 2);
    for ids in [[4, 3, 2, 1], [2, 4, 1, 3], [3, 1, 4, 2]] {
        assert_eq!(partition(ids), base);
    }
}

fn brute_closest(special: &ConnectedComponent, clusters: &[Cluster], store: &ComponentStore) -> usize {
    let mut best = (i64::MAX, usize::MAX, 0);
    for (k, c) in clusters.iter().enumerate() {
        for m in &c.members {
            for q in store[m].cc.filled.points() {
                for p in special.filled.points() {
                    let d = p.dist_sq(q);
                    if (d, c.id) < (best.0, best.1) {
                        best = (d, c.id, k);
                    }
                }
            }
        }
    }
    best.2
}

#[test]
fn specials_follow_closest_pair_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let mut fs = Vec::new();
    for (k, base) in [30, 70, 110].into_iter().enumerate() {
        fs.extend(line_words(10 * k, &[0, 40, 80, 120], base));
    }
    let mut specials = Vec::new();
    for s in 0..20 {
        let (x, y) = (rng.random_range(0..150), rng.random_range(5..130));
        let id = 100 + s;
        fs.push(features(id, rect(x, y, x + 1, y + 1)));
        specials.push(id);
    }
    let store = store_from(fs);
    // Ids deliberately out of index order.
    let clusters: Vec<Cluster> = [7, 3, 5]
        .into_iter()
        .enumerate()
        .map(|(k, id)| build(id, &[10 * k, 10 * k + 1, 10 * k + 2, 10 * k + 3], &store))
        .collect();
    let got = place_specials(&specials, &clusters, &store);
    for (s, k) in specials.iter().zip(got) {
        assert_eq!(k, brute_closest(&store[s].cc, &clusters, &store), "special {s}");
    }
}

#[test]
fn i_dot_goes_to_its_stem() {
    let store = store_from(vec![
        features(0, comb(0, 30, 5, 12)),
        features(1, comb(0, 72, 5, 12)),
        features(2, rect(10, 16, 11, 17)),
    ]);
    let clusters = vec![build(1, &[0], &store), build(2, &[1], &store)];
    assert_eq!(place_specials(&[2], &clusters, &store), vec![0]);
}

#[test]
fn equidistant_special_goes_to_lower_id() {
    let store = store_from(vec![
        features(0, rect(0, 0, 20, 2)),
        features(1, rect(0, 20, 20, 22)),
        features(2, rect(10, 11, 10, 11)),
    ]);
    let clusters = vec![build(9, &[0], &store), build(4, &[1], &store)];
    assert_eq!(place_specials(&[2], &clusters, &store), vec![1]);
}

#[test]
fn page_of_specials_only_forms_one_line() {
    let cfg = PipelineConfig::default();
    let comps = vec![
        ConnectedComponent::from_pixels(0, rect(0, 0, 1, 1)),
        ConnectedComponent::from_pixels(1, rect(10, 0, 11, 1)),
    ];
    let mut state = SegmentationState::new(comps, 20, &cfg);
    state.queue.clear();
    state.specials = vec![0, 1];
    let res = assign_specials(&state);
    assert_eq!(res.lines.len(), 1);
    let members: BTreeSet<usize> = res.lines[0].members.iter().copied().collect();
    assert_eq!(members, BTreeSet::from([0, 1]));
}

#[test]
fn every_component_lands_in_exactly_one_line() {
    let cfg = PipelineConfig::default();
    let mut comps = Vec::new();
    for (k, base) in [30, 70].into_iter().enumerate() {
        for (j, x) in [0, 40, 80, 120].into_iter().enumerate() {
            comps.push(ConnectedComponent::from_pixels(10 * k + j, comb(x, base, 5, 12)));
        }
    }
    comps.push(ConnectedComponent::from_pixels(50, rect(60, 14, 61, 15)));
    let total: usize = comps.iter().map(|c| c.filled_area()).sum();
    let state = lineseg::clustering::segment_components(comps, 200, &cfg);
    let res = assign_specials(&state);
    let mut seen = BTreeSet::new();
    let mut area = 0;
    for l in &res.lines {
        for m in &l.members {
            assert!(seen.insert(*m));
            area += state.components[m].cc.filled_area();
        }
    }
    assert_eq!(seen, state.components.keys().copied().collect());
    assert_eq!(area, total);
}
