use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use sir_core::geometry::{smallest_enclosing_circle, Circle, Point};
use sir_core::mapping::*;
use sir_core::rf_env::*;

fn sample(su: usize, i: usize, e: Vec<f64>) -> SensingSample {
    SensingSample { su_id: su, seq_index: i, location: Point::new(i as f64 * 0.01, 0.0), energies: e }
}

/// Piecewise-constant means with unit-variance-scaled Gaussian noise.
fn regime_sequence(su: usize, means: &[(usize, Vec<f64>)], sd: f64, rng: &mut ChaCha8Rng) -> (Vec<SensingSample>, Vec<usize>) {
    let mut out = Vec::new();
    let mut truth = Vec::new();
    let noise = Normal::new(0.0, sd).unwrap();
    for (label, (len, m)) in means.iter().enumerate() {
        for _ in 0..*len {
            let e: Vec<f64> = m.iter().map(|&mu| mu + noise.sample(rng)).collect();
            out.push(sample(su, out.len(), e));
            truth.push(label);
        }
    }
    (out, truth)
}

fn fast_hyper() -> StickyHyper {
    StickyHyper { burn_in: 100, ..StickyHyper::default() }
}

fn best_permutation_accuracy(pred: &[usize], truth: &[usize], k: usize) -> f64 {
    let mut perm: Vec<usize> = (0..k).collect();
    let mut best = 0.0f64;
    permute(&mut perm, 0, &mut |p| {
        let hits = pred.iter().zip(truth).filter(|(a, b)| p.get(**a) == Some(b)).count();
        best = best.max(hits as f64 / truth.len() as f64);
    });
    best
}

fn permute(v: &mut Vec<usize>, i: usize, f: &mut impl FnMut(&[usize])) {
    if i == v.len() {
        f(v);
        return;
    }
    for j in i..v.len() {
        v.swap(i, j);
        permute(v, i + 1, f);
        v.swap(i, j);
    }
}

#[test]
fn two_regimes_recovered() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let (seq, truth) = regime_sequence(
        0,
        &[(120, vec![1.0, 1.0]), (130, vec![5.0, 1.0]), (130, vec![1.0, 1.0]), (120, vec![5.0, 1.0])],
        0.3,
        &mut rng,
    );
    let truth: Vec<usize> = truth.iter().map(|t| t % 2).collect();
    let fit = fit_sticky_hmm(&[seq], &fast_hyper(), 200, &mut rng).unwrap();
    assert_eq!(fit.k_active, 2, "{:?}", fit.means);
    let acc = best_permutation_accuracy(&fit.labels[0], &truth, 2);
    assert!(acc >= 0.95, "label accuracy {acc}");
    for row in &fit.transition {
        assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    }
}

#[test]
fn single_regime_with_strong_stickiness_is_one_state() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let (seq, _) = regime_sequence(0, &[(500, vec![1.0, 2.0, 1.0])], 0.2, &mut rng);
    let hyper = StickyHyper { kappa: 500.0, ..fast_hyper() };
    let fit = fit_sticky_hmm(&[seq], &hyper, 200, &mut rng).unwrap();
    assert_eq!(fit.k_active, 1);
    assert!(fit.labels[0].iter().all(|&z| z == 0));
}

#[test]
fn switch_rate_decreases_with_stickiness() {
    let mut data_rng = ChaCha8Rng::seed_from_u64(13);
    // Weakly separated regimes: the label path is noisy unless self-transitions are favoured.
    let (seq, _) = regime_sequence(
        0,
        &[(100, vec![1.0]), (100, vec![1.6]), (100, vec![1.0]), (100, vec![1.6]), (100, vec![1.0])],
        0.3,
        &mut data_rng,
    );
    let rates: Vec<f64> = [1.0, 10.0, 100.0]
        .iter()
        .map(|&kappa| {
            let mut rng = ChaCha8Rng::seed_from_u64(99);
            let hyper = StickyHyper { kappa, ..fast_hyper() };
            fit_sticky_hmm(&[seq.clone()], &hyper, 200, &mut rng).unwrap().switch_rate()
        })
        .collect();
    assert!(rates[0] >= rates[1] && rates[1] >= rates[2], "switch rates {rates:?}");
}

#[test]
fn states_shared_across_sequences() {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    let (a, _) = regime_sequence(0, &[(150, vec![1.0]), (150, vec![4.0])], 0.2, &mut rng);
    let (b, _) = regime_sequence(1, &[(150, vec![4.0]), (150, vec![1.0])], 0.2, &mut rng);
    let fit = fit_sticky_hmm(&[a, b], &fast_hyper(), 200, &mut rng).unwrap();
    assert_eq!(fit.k_active, 2);
    assert_eq!(fit.sequence_ids, vec![0, 1]);
    assert_eq!(fit.labels[0][0], fit.labels[1][299]);
    assert_eq!(fit.labels[0][299], fit.labels[1][0]);
}

#[test]
fn sticky_hmm_rejects_bad_input() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    assert!(fit_sticky_hmm(&[], &fast_hyper(), 200, &mut rng).is_err());
    assert!(fit_sticky_hmm(&[vec![]], &fast_hyper(), 200, &mut rng).is_err());
    let seq = vec![sample(0, 0, vec![1.0]), sample(0, 1, vec![1.0])];
    let bad = StickyHyper { k_max: 1, ..fast_hyper() };
    assert!(fit_sticky_hmm(&[seq.clone()], &bad, 200, &mut rng).is_err());
    let nan = vec![sample(0, 0, vec![f64::NAN])];
    assert!(fit_sticky_hmm(&[nan], &fast_hyper(), 200, &mut rng).is_err());
}

#[test]
fn truncation_saturation_is_reported_not_an_error() {
    let mut rng = ChaCha8Rng::seed_from_u64(15);
    let segs: Vec<(usize, Vec<f64>)> = (0..5).map(|i| (80, vec![i as f64 * 5.0])).collect();
    let (seq, _) = regime_sequence(0, &segs, 0.2, &mut rng);
    let hyper = StickyHyper { k_max: 2, ..fast_hyper() };
    let fit = fit_sticky_hmm(&[seq], &hyper, 150, &mut rng).unwrap();
    assert_eq!(fit.k_active, 2);
    assert!(fit.diagnostics.saturated);
}

fn manual_fit(means: Vec<Vec<f64>>, labels: Vec<Vec<usize>>, ids: Vec<usize>) -> StickyHmmFit {
    let k = means.len();
    let variances = means.iter().map(|m| vec![0.04; m.len()]).collect();
    StickyHmmFit {
        k_active: k,
        transition: (0..k).map(|i| (0..k).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect(),
        means,
        variances,
        labels,
        sequence_ids: ids,
        diagnostics: HmmDiagnostics { k_max: 20, ..Default::default() },
    }
}

#[test]
fn fusion_merges_exact_duplicates() {
    let a = manual_fit(vec![vec![1.0, 1.0]], vec![vec![0; 10]], vec![0]);
    let b = manual_fit(vec![vec![1.0, 1.0]], vec![vec![0; 10]], vec![1]);
    let g = fuse_cluster_heads(&[a, b], 1.0).unwrap();
    assert_eq!(g.k_active, 1);
    assert_eq!(g.labels, vec![vec![0; 10], vec![0; 10]]);
}

#[test]
fn fusion_keeps_distant_states() {
    let a = manual_fit(vec![vec![1.0, 1.0]], vec![vec![0; 10]], vec![0]);
    let b = manual_fit(vec![vec![5.0, 1.0]], vec![vec![0; 10]], vec![1]);
    let g = fuse_cluster_heads(&[a, b], 1.0).unwrap();
    assert_eq!(g.k_active, 2);
    assert_eq!(g.means, vec![vec![1.0, 1.0], vec![5.0, 1.0]]);
}

#[test]
fn fusion_recovers_label_permutation() {
    let states = vec![vec![1.0, 1.0, 1.0], vec![5.0, 1.0, 1.0], vec![1.0, 5.0, 1.0], vec![5.0, 5.0, 1.0]];
    let labels: Vec<usize> = (0..40).map(|i| (i / 10) % 4).collect();
    let perm = [2usize, 0, 3, 1];
    let mut permuted_states = vec![vec![]; 4];
    for (s, &p) in perm.iter().enumerate() {
        permuted_states[p] = states[s].iter().map(|x| x + 0.01).collect();
    }
    let a = manual_fit(states.clone(), vec![labels.clone()], vec![0]);
    let b = manual_fit(permuted_states, vec![labels.iter().map(|&z| perm[z]).collect()], vec![1]);
    let g = fuse_cluster_heads(&[a, b], 1.0).unwrap();
    assert_eq!(g.k_active, 4);
    assert_eq!(g.labels[0], g.labels[1]);
}

#[test]
fn fusion_is_idempotent() {
    let a = manual_fit(vec![vec![1.0, 1.0], vec![5.0, 1.0]], vec![vec![0, 0, 1, 1, 0]], vec![0]);
    let b = manual_fit(vec![vec![5.05, 1.0], vec![1.0, 4.9], vec![1.02, 1.0]], vec![vec![2, 0, 1, 1]], vec![1]);
    let once = fuse_cluster_heads(&[a, b], 1.0).unwrap();
    let twice = fuse_cluster_heads(std::slice::from_ref(&once), 1.0).unwrap();
    assert_eq!(once, twice);
}

#[test]
fn occupancy_threshold_rule() {
    let fit = manual_fit(vec![vec![1.0, 3.0], vec![1.1, 1.2]], vec![vec![0, 1]], vec![0]);
    let occ = state_occupancy(&fit, 1.0, 0.5).unwrap();
    assert_eq!(occ, vec![vec![false, true], vec![false, false]]);
    assert!(state_occupancy(&fit, 1.0, 0.0).is_err());
}

#[test]
fn coverage_examples() {
    let c = estimate_coverage(&[Point::<f64>::new(0.0, 0.0), Point::new(2.0, 0.0)]).unwrap();
    assert!((c.center.x - 1.0).abs() < 1e-12 && c.center.y.abs() < 1e-12 && (c.radius - 1.0).abs() < 1e-12);
    let c = estimate_coverage(&[Point::<f64>::new(0.0, 0.0), Point::new(2.0, 0.0), Point::new(1.0, 1.0)]).unwrap();
    assert!((c.center.x - 1.0).abs() < 1e-12 && c.center.y.abs() < 1e-12 && (c.radius - 1.0).abs() < 1e-12);
    assert!(estimate_coverage(&[Point::<f64>::new(0.0, 0.0)]).is_err());
}

fn pu(x: f64, y: f64, r: f64, c: usize) -> PuNode {
    PuNode { position: (x, y), coverage_radius: r, channel: c, power_levels: vec![4.0], level_priors: vec![1.0], mean_dwell: 1.0 }
}

#[test]
fn coverage_error_examples() {
    let truth = vec![pu(3.0, 7.0, 2.2, 0)];
    let exact = CoverageCircle { channel: 0, center: [3.0, 7.0], radius: 2.2 };
    let r = coverage_error(&[exact], &truth).unwrap();
    assert_eq!(r.matches[0].radius_error_pct, 0.0);
    let est = CoverageCircle { channel: 0, center: [3.1, 7.0], radius: 2.1384 };
    let r = coverage_error(&[est], &truth).unwrap();
    assert!((r.matches[0].radius_error_pct - 2.8).abs() < 1e-9);
    assert!((r.matches[0].center_offset_km - 0.1).abs() < 1e-9);
    assert!(coverage_error(&[], &truth).is_err());
    // Different channel: nothing matches.
    let other = CoverageCircle { channel: 1, center: [3.0, 7.0], radius: 2.2 };
    let r = coverage_error(&[other], &truth).unwrap();
    assert!(r.matches.is_empty());
    assert_eq!(r.unmatched_estimates, vec![0]);
    assert_eq!(r.unmatched_truths, vec![0]);
}

proptest! {
    #[test]
    fn coverage_error_is_relative_radius_gap(dr in -0.5f64..0.5, dx in -0.3f64..0.3, r in 0.5f64..5.0) {
        let truth = vec![pu(6.0, 6.0, r, 0), pu(1.0, 1.0, 1.0, 1)];
        let est = vec![
            CoverageCircle { channel: 1, center: [1.0, 1.0], radius: 1.0 },
            CoverageCircle { channel: 0, center: [6.0 + dx, 6.0], radius: r + dr },
        ];
        let rep = coverage_error(&est, &truth).unwrap();
        prop_assert_eq!(rep.matches.len(), 2);
        prop_assert!((rep.matches[0].radius_error_pct - 100.0 * dr.abs() / r).abs() < 1e-9);
        prop_assert!(rep.matches[0].radius_error_pct >= 0.0);
        prop_assert_eq!(rep.matches[1].radius_error_pct, 0.0);
    }

    #[test]
    fn enclosing_circle_contains_all_and_touches_boundary(pts in prop::collection::vec((-10.0f64..10.0, -10.0f64..10.0), 1..40)) {
        let pts: Vec<Point<f64>> = pts.into_iter().map(|(x, y)| Point::new(x, y)).collect();
        let c = smallest_enclosing_circle(&pts).unwrap();
        prop_assert!(pts.iter().all(|p| p.dist(c.center) <= c.radius + 1e-9));
        let on_boundary = pts.iter().filter(|p| (p.dist(c.center) - c.radius).abs() <= 1e-9).count();
        let need = if pts.len() == 1 { 1 } else { 2 };
        prop_assert!(on_boundary >= need);
    }
}

/// Smallest enclosing circle by exhaustive search over pair-diametric and triple
/// circumscribed candidates.
fn brute_force_circle(pts: &[Point<f64>]) -> Circle<f64> {
    let covers = |c: &Circle<f64>| pts.iter().all(|p| p.dist(c.center) <= c.radius * (1.0 + 1e-12) + 1e-12);
    let mut best: Option<Circle<f64>> = None;
    let mut offer = |c: Circle<f64>| {
        if covers(&c) && best.is_none_or(|b| c.radius < b.radius) {
            best = Some(c);
        }
    };
    for i in 0..pts.len() {
        for j in i + 1..pts.len() {
            offer(Circle::diametric(pts[i], pts[j]));
            for k in j + 1..pts.len() {
                if let Some(c) = Circle::circumscribed(pts[i], pts[j], pts[k]) {
                    offer(c);
                }
            }
        }
    }
    best.unwrap()
}

#[test]
fn enclosing_circle_matches_brute_force_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for _ in 0..500 {
        let n = rng.random_range(2..25);
        let pts: Vec<Point<f64>> = (0..n).map(|_| Point::new(rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0))).collect();
        let fast = smallest_enclosing_circle(&pts).unwrap();
        let slow = brute_force_circle(&pts);
        assert!((fast.radius - slow.radius).abs() < 1e-9, "{fast:?} vs {slow:?}");
        assert!(fast.center.dist(slow.center) < 1e-9 * slow.radius.max(1.0) + 1e-7);
    }
}

#[test]
fn enclosing_circle_radius_within_sampling_bound() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..50 {
        let r = rng.random_range(0.5..3.0);
        let m = rng.random_range(20..200);
        let pts: Vec<Point<f64>> = (0..m)
            .map(|_| {
                let t = rng.random_range(0.0..std::f64::consts::TAU);
                let rho = r * rng.random::<f64>().sqrt();
                Point::new(5.0 + rho * t.cos(), 5.0 + rho * t.sin())
            })
            .collect();
        let c = estimate_coverage(&pts).unwrap();
        assert!(c.radius <= r * (1.0 + 3.0 / (m as f64).sqrt()), "r̂ {} r {r}", c.radius);
    }
}

fn demo_map() -> SpectrumMap {
    SpectrumMap {
        area_km: (12.0, 12.0),
        n_channels: 3,
        states: vec![0, 1],
        occupancy: vec![vec![0, 0, 0], vec![1, 0, 0]],
        circles: vec![
            CoverageCircle { channel: 0, center: [3.0, 7.0], radius: 2.2 },
            CoverageCircle { channel: 1, center: [6.0, 5.0], radius: 2.2 },
        ],
    }
}

#[test]
fn spectrum_queries() {
    let map = demo_map();
    assert_eq!(query_spectrum(&map, Point::new(11.0, 1.0)).unwrap(), vec![0, 1, 2]);
    assert_eq!(query_spectrum(&map, Point::new(2.0, 7.5)).unwrap(), vec![1, 2]);
    assert_eq!(query_spectrum(&map, Point::new(4.5, 6.0)).unwrap(), vec![2]);
    assert!(query_spectrum(&map, Point::new(-0.1, 3.0)).is_err());
    assert!(query_spectrum(&map, Point::new(3.0, 12.5)).is_err());
}

#[test]
fn spectrum_map_toml_round_trip() {
    let map = demo_map();
    let text = map.to_toml().unwrap();
    assert!(text.contains("states") && text.contains("occupancy") && text.contains("[[circles]]"));
    assert_eq!(SpectrumMap::from_toml(&text).unwrap(), map);
    let mut bad = map.clone();
    bad.circles[0].radius = 0.0;
    assert!(SpectrumMap::from_toml(&bad.to_toml().unwrap()).is_err());
}

fn three_pu_scenario() -> ScenarioConfig {
    let tr = |a: (f64, f64), b: (f64, f64), ch| SuTrack { start: a, end: b, n_samples: 300, cluster_head: ch };
    ScenarioConfig {
        area_km: (12.0, 12.0),
        pus: vec![pu(3.0, 7.0, 2.2, 0), pu(6.0, 5.0, 2.2, 1), pu(9.0, 7.0, 2.2, 2)],
        sus: vec![
            tr((0.0, 7.0), (12.0, 7.0), 0),
            tr((0.0, 5.0), (12.0, 5.0), 0),
            tr((0.0, 9.0), (12.0, 1.0), 0),
            tr((0.0, 1.0), (12.0, 9.0), 1),
            tr((3.0, 0.0), (3.0, 12.0), 1),
            tr((6.0, 0.0), (6.0, 12.0), 1),
            tr((9.0, 0.0), (9.0, 12.0), 2),
            tr((4.5, 0.0), (4.5, 12.0), 2),
            tr((7.5, 0.0), (7.5, 12.0), 2),
        ],
        noise_var: 1.0,
        samples_per_window: 100,
        slot_duration: 1.0,
        seed: 0,
    }
}

/// The six occupancy signatures of the three-disk arrangement: outside everything, each
/// disk alone, and the two overlapping neighbour pairs.
fn region_signatures() -> Vec<Vec<bool>> {
    let mut v = vec![
        vec![false, false, false],
        vec![true, false, false],
        vec![false, true, false],
        vec![false, false, true],
        vec![true, true, false],
        vec![false, true, true],
    ];
    v.sort();
    v
}

#[test]
fn three_disk_scenario_end_to_end() {
    let cfg = three_pu_scenario();
    let mut counts = Vec::new();
    for seed in 0..10 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let ds = generate_mapping_dataset(&cfg, &mut rng).unwrap();
        let out = run_mapping(&cfg, &ds, &MappingParams::default(), &mut rng).unwrap();
        counts.push(out.fused.k_active);
        let mut sigs = out.occupancy.clone();
        sigs.sort();
        sigs.dedup();
        if out.fused.k_active == 6 {
            assert_eq!(sigs, region_signatures(), "seed {seed}");
        }
        let rep = coverage_error(&out.map.circles, &cfg.pus).unwrap();
        assert_eq!(rep.matches.len(), 3);
        assert!(rep.mean_radius_error_pct().unwrap() <= 10.0);
    }
    assert!(counts.iter().all(|k| (5..=7).contains(k)), "{counts:?}");
    counts.sort();
    assert_eq!(counts[counts.len() / 2], 6, "{counts:?}");
}
