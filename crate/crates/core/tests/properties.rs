// SPDX-License-Identifier: Apache-2.0

use std::collections::{HashSet, VecDeque};

use nzc_core::accountant::{delta_for_eps, eps_for_delta, MomentCurve};
use nzc_core::mechanisms::noisy_argmax;
use nzc_core::noise::{gaussian_tail_bound, laplace_tail, union_flip_bound};
use nzc_core::sensitivity::{
    brute_force_local, brute_force_smooth, enumerate_neighbors, global_sensitivity,
    local_sensitivity, smooth_sensitivity,
};
use nzc_core::{NoiseSpec, RngStream, VoteHistogram};
use proptest::prelude::*;

fn histogram() -> impl Strategy<Value = VoteHistogram> {
    (2usize..=8)
        .prop_flat_map(|l| prop::collection::vec(0u64..=8, l))
        .prop_filter("needs a vote", |c| c.iter().sum::<u64>() > 0)
        .prop_map(|c| VoteHistogram::new(c).unwrap())
}

/// Histograms whose top-two gap exceeds 3.
fn distance_three_histogram() -> impl Strategy<Value = VoteHistogram> {
    (2usize..=8)
        .prop_flat_map(|l| (prop::collection::vec(0u64..=8, l), 0..l, 0u64..=8))
        .prop_map(|(mut c, top, extra)| {
            let max = *c.iter().max().unwrap();
            c[top] = max + 4 + extra;
            VoteHistogram::new(c).unwrap()
        })
}

fn boost_constant() -> impl Strategy<Value = f64> {
    prop_oneof![Just(0.0), Just(1.0), Just(9.0), Just(100.0)]
}

/// Breadth-first search over single-vote moves until the argmax moves.
fn flip_distance_bfs(v: &VoteHistogram) -> u64 {
    let target = v.argmax();
    let mut seen = HashSet::new();
    let mut queue = VecDeque::from([(v.clone(), 0u64)]);
    seen.insert(v.counts().to_vec());
    while let Some((w, d)) = queue.pop_front() {
        if w.argmax() != target {
            return d;
        }
        for n in enumerate_neighbors(&w) {
            if seen.insert(n.counts().to_vec()) {
                queue.push_back((n, d + 1));
            }
        }
    }
    unreachable!("some move sequence always relocates the argmax")
}

proptest! {
    #[test]
    fn boost_keeps_argmax(v in histogram(), c in 0.0f64..1e6) {
        let b = v.boost(c).unwrap();
        prop_assert_eq!(b.argmax(), v.argmax());
        prop_assert_eq!(b.boost_index(), v.argmax());
    }

    #[test]
    fn boost_widens_gap_by_c(v in histogram(), c in 0u32..1000) {
        prop_assume!(v.gap() > 0);
        let b = v.boost(c as f64).unwrap();
        prop_assert_eq!(b.gap(), (v.gap() + c as u64) as f64);
    }

    #[test]
    fn distance_n_monotone(v in histogram(), n in 0u64..70) {
        if v.is_distance_n(n) {
            for m in 0..n {
                prop_assert!(v.is_distance_n(m));
            }
        }
    }

    #[test]
    fn flip_distance_matches_search(v in histogram()) {
        prop_assert_eq!(v.flip_distance(), flip_distance_bfs(&v));
    }

    #[test]
    fn local_matches_brute_force(v in histogram(), c in boost_constant()) {
        let closed = local_sensitivity(&v, c).unwrap().value;
        prop_assert_eq!(closed, brute_force_local(&v, c).unwrap());
    }

    #[test]
    fn smooth_matches_brute_force(v in histogram(), c in boost_constant(),
                                 beta in prop_oneof![Just(0.5), Just(1.0), Just(2.0)]) {
        let closed = smooth_sensitivity(&v, c, beta).unwrap().value;
        let brute = brute_force_smooth(&v, c, beta).unwrap();
        prop_assert!((closed - brute).abs() <= 1e-12 * brute.max(1.0));
    }

    #[test]
    fn sensitivity_dominance(v in histogram(), c in boost_constant(), beta in 0.1f64..3.0) {
        let local = local_sensitivity(&v, c).unwrap().value;
        prop_assert!(local == 1.0 || local == 1.0 + c);
        prop_assert!(local <= global_sensitivity(c).unwrap());
        let smooth = smooth_sensitivity(&v, c, beta).unwrap().value;
        prop_assert!(smooth * beta.exp() <= (1.0 + c) * (1.0 + 1e-12));
        for w in enumerate_neighbors(&v) {
            let lw = local_sensitivity(&w, c).unwrap().value;
            prop_assert!(lw * (-beta).exp() <= smooth * (1.0 + 1e-12));
        }
    }

    #[test]
    fn qualified_histograms_have_stable_neighbors(v in histogram(), c in boost_constant()) {
        if v.flip_distance() >= 3 {
            for w in enumerate_neighbors(&v) {
                prop_assert_eq!(local_sensitivity(&w, c).unwrap().value, 1.0);
                prop_assert!(w.is_distance_n(2) || w.flip_distance() >= 2);
            }
        }
        if v.is_distance_n(4) {
            prop_assert!(v.flip_distance() >= 3);
        }
    }

    #[test]
    fn smooth_non_increasing_in_beta(v in histogram(), c in boost_constant(),
                                     b1 in 0.05f64..4.0, b2 in 0.05f64..4.0) {
        let (lo, hi) = if b1 <= b2 { (b1, b2) } else { (b2, b1) };
        let s_lo = smooth_sensitivity(&v, c, lo).unwrap().value;
        let s_hi = smooth_sensitivity(&v, c, hi).unwrap().value;
        prop_assert!(s_hi <= s_lo);
    }

    #[test]
    fn bounded_noise_cannot_flip(v in histogram(), bound in 0.5f64..1e4,
                                 seed in any::<u64>()) {
        let mut rng = RngStream::new(seed, 0);
        let noise: Vec<f64> = (0..v.classes())
            .map(|_| 2.0 * rng.centered_uniform() * bound)
            .collect();
        let c = 2.0 * bound;
        let boosted = v.boost(c).unwrap();
        prop_assert_eq!(noisy_argmax(boosted.values(), &noise).unwrap(), v.argmax());
    }

    #[test]
    fn distance_three_neighbors_share_noisy_argmax(v in distance_three_histogram(),
                                                    bound in 0.5f64..1e4, seed in any::<u64>()) {
        prop_assert!(v.is_distance_n(3));
        let mut rng = RngStream::new(seed, 1);
        let noise: Vec<f64> = (0..v.classes())
            .map(|_| 2.0 * rng.centered_uniform() * bound)
            .collect();
        let c = 2.0 * bound;
        let base = noisy_argmax(v.boost(c).unwrap().values(), &noise).unwrap();
        for w in enumerate_neighbors(&v) {
            let other = noisy_argmax(w.boost(c).unwrap().values(), &noise).unwrap();
            prop_assert_eq!(other, base);
        }
    }

    #[test]
    fn noise_streams_are_deterministic(seed in any::<u64>(), stream in any::<u64>(),
                                       gamma in 0.01f64..10.0) {
        let spec = NoiseSpec::laplace(gamma, 1.0).unwrap();
        let mut a = RngStream::new(seed, stream);
        let mut b = RngStream::new(seed, stream);
        let mut xa = [0.0; 8];
        let mut xb = [0.0; 8];
        spec.fill(&mut a, &mut xa);
        spec.fill(&mut b, &mut xb);
        prop_assert_eq!(xa, xb);
    }

    #[test]
    fn probabilities_stay_in_unit_interval(c in -10.0f64..1e4, gamma in 1e-6f64..10.0,
                                           sigma in 1e-3f64..1e3, classes in 1usize..50) {
        for p in [laplace_tail(c, gamma), gaussian_tail_bound(c, sigma)] {
            prop_assert!((0.0..=1.0).contains(&p));
        }
        let lap = NoiseSpec::laplace(gamma, 1.0).unwrap();
        let gauss = NoiseSpec::gaussian(sigma, 1.0).unwrap();
        for spec in [lap, gauss] {
            let p = union_flip_bound(classes, &spec, c);
            prop_assert!((0.0..=1.0).contains(&p));
        }
    }

    #[test]
    fn eps_for_delta_monotone(gamma in 0.0f64..0.5, queries in 0u32..500,
                              d1 in 1e-12f64..1.0, d2 in 1e-12f64..1.0) {
        let mut curve = MomentCurve::zeros(32);
        let single = MomentCurve::laplace(gamma, 32).unwrap();
        for _ in 0..queries {
            curve.accumulate(&single).unwrap();
        }
        let (lo, hi) = if d1 <= d2 { (d1, d2) } else { (d2, d1) };
        let e_lo = eps_for_delta(&curve, lo).unwrap();
        let e_hi = eps_for_delta(&curve, hi).unwrap();
        prop_assert!(e_hi <= e_lo);
        prop_assert!(e_hi >= 0.0);
        let d = delta_for_eps(&curve, e_lo).unwrap();
        prop_assert!((0.0..=1.0).contains(&d));
        prop_assert!(d <= lo * (1.0 + 1e-9));
    }
}

#[test]
fn distance_three_does_not_imply_stable_neighbors() {
    // gap 4, but the runner-up sits at a lower index
    let v = VoteHistogram::new(vec![2, 6, 0]).unwrap();
    assert!(v.is_distance_n(3));
    let w = VoteHistogram::new(vec![3, 5, 0]).unwrap();
    assert!(enumerate_neighbors(&v).contains(&w));
    assert!(!w.is_distance_n(2));
    assert_eq!(local_sensitivity(&w, 9.0).unwrap().value, 10.0);
    assert_eq!(brute_force_local(&w, 9.0).unwrap(), 10.0);
}
