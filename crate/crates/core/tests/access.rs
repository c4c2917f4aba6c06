use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sir_core::access::*;
use sir_core::rf_env::{stationary_idle, MarkovChannelSet};

fn fixed_env(n: usize, p01: f64, p11: f64, idle: bool) -> MarkovChannelSet {
    MarkovChannelSet::new((0..n).collect(), n, p01, p11, vec![idle; n]).unwrap()
}

#[test]
fn env_step_deterministic_chains() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut env = fixed_env(2, 1.0, 1.0, true);
    for _ in 0..100 {
        assert_eq!(env_step(&mut env, 1, &mut rng).unwrap(), (Observation::Idle, 1.0));
    }
    let mut env = fixed_env(2, 0.0, 0.0, false);
    for _ in 0..100 {
        assert_eq!(env_step(&mut env, 0, &mut rng).unwrap(), (Observation::Occupied, 0.0));
    }
    assert!(env_step(&mut env, 2, &mut rng).is_err());
}

#[test]
fn random_policy_earns_stationary_rate() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut env = MarkovChannelSet::random(16, 4, 0.2, 0.9, &mut rng).unwrap();
    let total: f64 = (0..100_000)
        .map(|_| {
            let a = rng.random_range(0..16);
            env_step(&mut env, a, &mut rng).unwrap().1
        })
        .sum();
    assert!((total / 1e5 - stationary_idle(0.2, 0.9)).abs() < 0.01);
}

#[test]
fn history_encoding() {
    let mut h = HistoryState::new(1);
    assert_eq!(encode_window(&h, 2), vec![0.0, 0.0]);
    h.push(0, Observation::Idle);
    assert_eq!(encode_history(&h, 1, 2), vec![1.0, 0.0, 0.0, 1.0]);
    let mut h = HistoryState::new(3);
    assert!(encode_window(&h, 4).iter().all(|&v| v == 0.0));
    h.push(2, Observation::Occupied);
    h.push(1, Observation::Idle);
    let a = encode_history(&h, 3, 4);
    assert_eq!(a, encode_history(&h.clone(), 3, 4));
    assert_eq!(a.len(), 3 * 4 + 4);
    assert_eq!(a[1], 1.0);
    assert_eq!(a[4 + 2], -1.0);
    assert_eq!(a[12 + 3], 1.0);
    // Sparse and dense forms agree.
    let mut gp = GpQModel::new(GpParams::default()).unwrap();
    gp.update(&a, 0.7).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    for _ in 0..40 {
        let mut hh = HistoryState::new(3);
        for _ in 0..rng.random_range(0..4) {
            let o = if rng.random_bool(0.5) { Observation::Idle } else { Observation::Occupied };
            hh.push(rng.random_range(0..4), o);
        }
        let y = rng.random_range(-1.0..1.0);
        gp.update_feature(Feature::from_history(&hh, rng.random_range(0..4), 4), y).unwrap();
    }
    let all = gp_q_values(&gp, &h, 4);
    for (act, q) in all.iter().enumerate() {
        let one = gp.predict_mean(&Feature::from_history(&h, act, 4));
        assert!((q - one).abs() < 1e-12, "{q} vs {one}");
    }
    let dense = gp.predict(&a).0;
    let sparse = gp.predict_mean(&Feature::from_history(&h, 3, 4));
    assert!((dense - sparse).abs() < 1e-15);
}

fn se_kernel(a: &[f64], b: &[f64], p: &GpParams) -> f64 {
    let d2: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum();
    p.signal_var * (-d2 / (2.0 * p.lengthscale.powi(2))).exp()
}

#[test]
fn gp_prior_and_interpolation() {
    let p = GpParams { noise_var: 1e-12, ..GpParams::default() };
    let mut gp = GpQModel::new(p).unwrap();
    assert_eq!(gp.predict(&[0.3, 0.1]), (0.0, 1.0));
    gp.update(&[0.3, 0.1], 2.5).unwrap();
    let (m, v) = gp.predict(&[0.3, 0.1]);
    assert!((m - 2.5).abs() < 1e-6 && v < 1e-6);
    assert!(gp.update(&[0.0, 0.0], f64::NAN).is_err());
}

#[test]
fn gp_matches_dense_solve() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..20 {
        let p = GpParams { ald_tol: 0.0, lengthscale: 0.8, signal_var: 1.3, noise_var: 0.1, budget: 10 };
        let xs: Vec<Vec<f64>> = (0..5).map(|_| (0..3).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
        let ys: Vec<f64> = (0..5).map(|_| rng.random_range(-2.0..2.0)).collect();
        let mut gp = GpQModel::new(p).unwrap();
        for (x, &y) in xs.iter().zip(&ys) {
            gp.update(x, y).unwrap();
        }
        assert_eq!(gp.dictionary_size(), 5);
        let k = DMatrix::from_fn(5, 5, |i, j| se_kernel(&xs[i], &xs[j], &p) + if i == j { p.noise_var } else { 0.0 });
        let c = k.clone().lu().solve(&DVector::from_vec(ys.clone())).unwrap();
        for _ in 0..10 {
            let q: Vec<f64> = (0..3).map(|_| rng.random_range(-1.5..1.5)).collect();
            let kq = DVector::from_fn(5, |i, _| se_kernel(&q, &xs[i], &p));
            let mean = kq.dot(&c);
            let var = p.signal_var - kq.dot(&k.clone().lu().solve(&kq).unwrap());
            let (m, v) = gp.predict(&q);
            assert!((m - mean).abs() < 1e-8, "{m} vs {mean}");
            assert!((v - var).abs() < 1e-8, "{v} vs {var}");
        }
    }
}

#[test]
fn gp_dictionary_rules() {
    let mut gp = GpQModel::new(GpParams::default()).unwrap();
    gp.update(&[1.0, 0.0, 0.0], 1.0).unwrap();
    gp.update(&[1.0, 0.0, 0.0], 0.5).unwrap();
    assert_eq!(gp.dictionary_size(), 1);
    gp.update(&[0.0, 0.0, 40.0], 1.0).unwrap();
    assert_eq!(gp.dictionary_size(), 2);

    let budget = 12;
    let mut gp = GpQModel::new(GpParams { budget, ..GpParams::default() }).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for i in 0..10 * budget {
        let x: Vec<f64> = (0..4).map(|_| rng.random_range(-4.0..4.0)).collect();
        gp.update(&x, (i % 3) as f64).unwrap();
        assert!(gp.dictionary_size() <= budget);
        assert!(gp.factor_diagonal().iter().all(|&d| d > 0.0));
    }
    assert_eq!(gp.dictionary_size(), budget);
    let snap = gp.snapshot();
    assert_eq!(snap.dictionary_size, budget);
    assert_eq!(snap.coefficients.len(), budget);
}

#[test]
fn gp_eviction_keeps_exact_posterior_of_remaining_points() {
    // After evicting the oldest point the model must still predict finite, sensible
    // values and the factor must match a fresh factorization of the kept points.
    let p = GpParams { budget: 3, ald_tol: 0.0, ..GpParams::default() };
    let mut gp = GpQModel::new(p).unwrap();
    for i in 0..6 {
        gp.update(&[i as f64 * 0.7, 0.0], 1.0).unwrap();
    }
    let diag = gp.factor_diagonal();
    let pts: Vec<Vec<f64>> = (3..6).map(|i| vec![i as f64 * 0.7, 0.0]).collect();
    let k = DMatrix::from_fn(3, 3, |i, j| se_kernel(&pts[i], &pts[j], &p) * if i == j { 1.0 + 1e-10 } else { 1.0 });
    let l = k.cholesky().unwrap().l();
    for i in 0..3 {
        assert!((diag[i] - l[(i, i)]).abs() < 1e-9);
    }
}

proptest! {
    #[test]
    fn gp_variance_nonnegative_and_smaller_at_data(xs in prop::collection::vec(prop::collection::vec(-2.0f64..2.0, 2), 1..15), ys in prop::collection::vec(-3.0f64..3.0, 15)) {
        let mut gp = GpQModel::new(GpParams::default()).unwrap();
        for (x, y) in xs.iter().zip(&ys) {
            gp.update(x, *y).unwrap();
        }
        let far = gp.predict(&[100.0, 100.0]).1;
        for x in &xs {
            let v = gp.predict(x).1;
            prop_assert!(v >= 0.0);
            prop_assert!(v <= far + 1e-12);
        }
    }

    #[test]
    fn argmax_invariant_under_positive_affine_maps(v in prop::collection::vec(-20i32..20, 1..16), a in 1i32..5, b in -10i32..10) {
        let x: Vec<f64> = v.iter().map(|&k| k as f64).collect();
        let y: Vec<f64> = v.iter().map(|&k| (a * k + b) as f64).collect();
        prop_assert_eq!(argmax_first(&x), argmax_first(&y));
    }

    #[test]
    fn belief_update_stays_in_unit_interval(b in 0.0f64..=1.0, p01 in 0.0f64..=1.0, p11 in 0.0f64..=1.0) {
        for o in [Observation::Idle, Observation::Occupied, Observation::None] {
            let n = belief_update(b, p01, p11, o);
            prop_assert!((0.0..=1.0).contains(&n));
        }
    }

    #[test]
    fn unobserved_belief_is_contraction(b1 in 0.0f64..=1.0, b2 in 0.0f64..=1.0, p01 in 0.0f64..=1.0, p11 in 0.0f64..=1.0) {
        let d0 = (b1 - b2).abs();
        let d1 = (belief_update(b1, p01, p11, Observation::None) - belief_update(b2, p01, p11, Observation::None)).abs();
        prop_assert!(d1 <= (p11 - p01).abs() * d0 + 1e-12);
    }
}

#[test]
fn gprl_act_rules() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let h = HistoryState::new(2);
    let gp = GpQModel::new(GpParams::default()).unwrap();
    assert_eq!(gprl_act(&gp, &h, 4, 0.0, &mut rng), 0);
    let mut gp = GpQModel::new(GpParams::default()).unwrap();
    for (a, y) in [(0, 0.1), (1, 0.5), (2, 0.9), (3, 0.2)] {
        gp.update_feature(Feature::from_history(&h, a, 4), y).unwrap();
    }
    assert_eq!(gprl_act(&gp, &h, 4, 0.0, &mut rng), 2);
    // Scaling every target by a positive constant leaves the greedy choice unchanged.
    let mut scaled = GpQModel::new(GpParams::default()).unwrap();
    for (a, y) in [(0, 0.1), (1, 0.5), (2, 0.9), (3, 0.2)] {
        scaled.update_feature(Feature::from_history(&h, a, 4), 3.0 * y).unwrap();
    }
    assert_eq!(gprl_act(&scaled, &h, 4, 0.0, &mut rng), 2);
    // ε = 1: uniform, chi-square at the 1% level (df 3 → 11.345).
    let mut counts = [0usize; 4];
    for _ in 0..10_000 {
        counts[gprl_act(&gp, &h, 4, 1.0, &mut rng)] += 1;
    }
    let chi: f64 = counts.iter().map(|&c| (c as f64 - 2500.0).powi(2) / 2500.0).sum();
    assert!(chi < 11.345, "{counts:?}");
}

#[test]
fn belief_examples() {
    assert!((belief_update(1.0, 0.2, 0.9, Observation::None) - 0.9).abs() < 1e-15);
    for b in [0.0, 0.4, 1.0] {
        assert_eq!(belief_update(b, 0.2, 0.9, Observation::Idle), 0.9);
        assert_eq!(belief_update(b, 0.2, 0.9, Observation::Occupied), 0.2);
    }
    let mut b = 0.05;
    for _ in 0..500 {
        b = belief_update(b, 0.2, 0.9, Observation::None);
    }
    assert!((b - stationary_idle(0.2, 0.9)).abs() < 1e-12);
}

/// Whittle index by bisection on the subsidy, with the single-arm problem solved by
/// value iteration on the exact set of beliefs reachable from ω, p01 and p11.
fn whittle_by_value_iteration(omega: f64, p01: f64, p11: f64, beta: f64) -> f64 {
    const K: usize = 300;
    let t = |b: f64| b * p11 + (1.0 - b) * p01;
    // Belief chains: index c*(K+1) + k holds T^k(start_c).
    let starts = [omega, p01, p11];
    let mut pts = Vec::new();
    for &s in &starts {
        let mut b = s;
        for _ in 0..=K {
            pts.push(b);
            b = t(b);
        }
    }
    let next = |i: usize| if i % (K + 1) == K { i } else { i + 1 };
    let i01 = K + 1;
    let i11 = 2 * (K + 1);
    let diff = |m: f64| -> f64 {
        let mut v = vec![0.0; pts.len()];
        loop {
            let mut delta: f64 = 0.0;
            let old = v.clone();
            for i in 0..pts.len() {
                let b = pts[i];
                let passive = m + beta * old[next(i)];
                let active = b + beta * (b * old[i11] + (1.0 - b) * old[i01]);
                v[i] = passive.max(active);
                delta = delta.max((v[i] - old[i]).abs());
            }
            if delta < 1e-13 {
                break;
            }
        }
        let passive = m + beta * v[next(0)];
        let active = omega + beta * (omega * v[i11] + (1.0 - omega) * v[i01]);
        passive - active
    };
    let (mut lo, mut hi) = (-1.0, 2.0);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if diff(mid) >= 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

#[test]
fn whittle_index_matches_value_iteration_and_is_monotone() {
    let (p01, p11, beta) = (0.2, 0.9, 0.9);
    let mut prev = f64::NEG_INFINITY;
    for i in 0..=100 {
        let w = i as f64 / 100.0;
        let closed = whittle_index(w, p01, p11, beta);
        let vi = whittle_by_value_iteration(w, p01, p11, beta);
        assert!((closed - vi).abs() < 1e-6, "ω={w}: closed {closed} vs VI {vi}");
        assert!(closed >= prev - 1e-12, "index not monotone at ω={w}");
        prev = closed;
    }
}

#[test]
fn whittle_index_other_chains() {
    for &(p01, p11, beta) in &[(0.1, 0.6, 0.8), (0.3, 0.95, 0.5), (0.05, 0.5, 0.95)] {
        for i in 0..=20 {
            let w = i as f64 / 20.0;
            let closed = whittle_index(w, p01, p11, beta);
            let vi = whittle_by_value_iteration(w, p01, p11, beta);
            assert!((closed - vi).abs() < 1e-6, "({p01},{p11},{beta}) ω={w}: {closed} vs {vi}");
        }
    }
}

#[test]
fn genie_policy_examples() {
    let env = fixed_env(2, 0.2, 0.9, true);
    assert_eq!(whittle_act(&env, &[0.9, 0.3], 0.9), 0);
    assert_eq!(optimal_act(&env, &[0.9, 0.3]), 0);
    assert_eq!(optimal_act(&env, &[0.3, 0.9]), 1);
    assert_eq!(whittle_act(&env, &[0.5, 0.5], 0.9), 0);
    // Subsets map to their lowest-index channel.
    let env = MarkovChannelSet::new(vec![1, 0, 1, 0], 2, 0.2, 0.9, vec![true, true]).unwrap();
    assert_eq!(optimal_act(&env, &[0.9, 0.3]), 1);
    assert_eq!(optimal_act(&env, &[0.3, 0.9]), 0);
    let mut tr = BeliefTracker::stationary(&env);
    tr.observe(&env, 3, Observation::Occupied);
    assert_eq!(tr.beliefs[0], 0.2);
}

fn tree_optimum(b: [f64; 2], p01: f64, p11: f64, h: usize) -> f64 {
    if h == 0 {
        return 0.0;
    }
    (0..2)
        .map(|a| {
            let upd = |o| {
                let mut nb = b;
                for (u, x) in nb.iter_mut().enumerate() {
                    *x = belief_update(*x, p01, p11, if u == a { o } else { Observation::None });
                }
                nb
            };
            b[a] * (1.0 + tree_optimum(upd(Observation::Idle), p01, p11, h - 1))
                + (1.0 - b[a]) * tree_optimum(upd(Observation::Occupied), p01, p11, h - 1)
        })
        .fold(f64::NEG_INFINITY, f64::max)
}

fn myopic_value(env: &MarkovChannelSet, b: [f64; 2], h: usize) -> f64 {
    if h == 0 {
        return 0.0;
    }
    let a = optimal_act(env, &b);
    let upd = |o| {
        let mut t = BeliefTracker { beliefs: b.to_vec() };
        t.observe(env, a, o);
        [t.beliefs[0], t.beliefs[1]]
    };
    b[a] * (1.0 + myopic_value(env, upd(Observation::Idle), h - 1))
        + (1.0 - b[a]) * myopic_value(env, upd(Observation::Occupied), h - 1)
}

#[test]
fn argmax_belief_is_optimal_on_small_pomdp() {
    let env = fixed_env(2, 0.2, 0.9, true);
    for b in [[2.0 / 3.0, 2.0 / 3.0], [0.9, 0.2], [0.3, 0.5], [0.0, 1.0], [0.55, 0.45]] {
        let opt = tree_optimum(b, 0.2, 0.9, 6);
        let my = myopic_value(&env, b, 6);
        assert!((opt - my).abs() < 1e-9, "{b:?}: {opt} vs {my}");
    }
}

#[test]
fn eval_accuracy_examples() {
    let mut t = EpisodeTrace::default();
    assert!(eval_accuracy(&t, Phase::Testing).is_err());
    for _ in 0..5 {
        t.push(Phase::Testing, 0, true);
    }
    assert_eq!(eval_accuracy(&t, Phase::Testing).unwrap(), 1.0);
    let mut t = EpisodeTrace::default();
    for _ in 0..5 {
        t.push(Phase::Testing, 0, false);
    }
    assert_eq!(eval_accuracy(&t, Phase::Testing).unwrap(), 0.0);
    assert!(eval_accuracy(&t, Phase::Learning).is_err());
    let mut buf = Vec::new();
    t.write_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert!(text.starts_with("slot,phase,action,idle,reward\n0,testing,0,0,0\n"));
}

#[test]
fn fair_coin_channels_defeat_every_policy() {
    let cfg = AccessConfig { p01: 0.5, p11: 0.5, learn_spans: 20, test_spans: 200, ..AccessConfig::default() };
    for m in AccessMethod::ALL {
        let r = run_access(m, &cfg, 21).unwrap();
        assert!((r.accuracy - 0.5).abs() <= 0.02, "{} {}", m.as_str(), r.accuracy);
    }
}

#[test]
fn single_subset_makes_genie_policies_equal() {
    let cfg = AccessConfig { n_subsets: 1, learn_spans: 4, ..AccessConfig::default() };
    let w = run_access(AccessMethod::Whittle, &cfg, 3).unwrap();
    let o = run_access(AccessMethod::Optimal, &cfg, 3).unwrap();
    assert_eq!(w.accuracy, o.accuracy);
}

#[test]
fn learners_master_alternating_channels() {
    // p11 = 0, p01 = 1: every channel flips each slot, so one slot of history suffices.
    let cfg = AccessConfig { n_channels: 4, n_subsets: 4, p01: 1.0, p11: 0.0, learn_spans: 60, test_spans: 10, ..AccessConfig::default() };
    let g = run_access(AccessMethod::Gprl, &cfg, 8).unwrap();
    assert!(g.accuracy >= 0.95, "gprl {}", g.accuracy);
    let n = run_access(AccessMethod::Nnq, &cfg, 8).unwrap();
    assert!(n.accuracy >= 0.9, "nnq {}", n.accuracy);
}

#[test]
fn nnq_gradient_step_reduces_batch_error() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut net = Mlp::new(&[6, 8, 8, 3], &mut rng);
    let xs: Vec<Vec<f64>> = (0..8).map(|_| (0..6).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
    let batch: Vec<(&[f64], usize, f64)> = xs.iter().enumerate().map(|(i, x)| (x.as_slice(), i % 3, i as f64 * 0.3)).collect();
    let before = net.td_loss(&batch);
    let (g, loss) = net.td_gradient(&batch);
    assert!((loss - before).abs() < 1e-12);
    net.sgd_step(&g, 1e-3);
    assert!(net.td_loss(&batch) < before);
}

#[test]
fn nnq_gradient_matches_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let net = Mlp::new(&[3, 4, 4, 2], &mut rng);
    let x = vec![0.3, -0.7, 0.5];
    let batch = vec![(x.as_slice(), 1usize, 0.8)];
    let (g, _) = net.td_gradient(&batch);
    let h = 1e-6;
    for i in 0..net.n_params() {
        let mut e = vec![0.0; net.n_params()];
        e[i] = 1.0;
        let mut plus = net.clone();
        plus.sgd_step(&e, -h);
        let mut minus = net.clone();
        minus.sgd_step(&e, h);
        let fd = (plus.td_loss(&batch) - minus.td_loss(&batch)) / (2.0 * h);
        assert!((fd - g[i]).abs() < 1e-6, "param {i}: {fd} vs {}", g[i]);
    }
}

fn mean_ci(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, 1.96 * (var / n).sqrt())
}

#[test]
fn policy_dominance_over_twenty_seeds() {
    let cfg = AccessConfig { n_subsets: 4, learn_spans: 2, test_spans: 60, ..AccessConfig::default() };
    let acc = |m: AccessMethod| -> Vec<f64> { (0..20).map(|s| run_access(m, &cfg, s).unwrap().accuracy).collect() };
    let (opt, whi, rnd) = (acc(AccessMethod::Optimal), acc(AccessMethod::Whittle), acc(AccessMethod::Random));
    let ((o, oc), (w, wc), (r, rc)) = (mean_ci(&opt), mean_ci(&whi), mean_ci(&rnd));
    assert!(o + oc >= w - wc, "optimal {o}±{oc} vs whittle {w}±{wc}");
    assert!(w - wc > r + rc, "whittle {w}±{wc} vs random {r}±{rc}");
    assert!((r - stationary_idle(cfg.p01, cfg.p11)).abs() <= rc + 0.01, "random {r}");
}
