//! Property tests for fusion, evaluation, feature selection and lattice
//! rescoring.

use std::collections::HashMap;
use std::sync::atomic::{AtomicUsize, Ordering};

use proptest::prelude::*;
use wce::data::Label;
use wce::eval::{evaluate, sweep, uniform_grid};
use wce::fusion::combine;
use wce::redecode::{rescore, Confidence, Edge, Lattice};
use wce::sbs::sbs;

fn label() -> impl Strategy<Value = Label> {
    prop_oneof![Just(Label::G), Just(Label::B)]
}

proptest! {
    #[test]
    fn fusion_is_bounded_symmetric_and_monotone(a in 0.0f64..=1.0, m in 0.0f64..=1.0, al in 0.0f64..=1.0, d in 0.0f64..0.5) {
        let p = combine(a, m, al);
        prop_assert!((0.0..=1.0).contains(&p));
        prop_assert!((combine(m, a, 1.0 - al) - p).abs() < 1e-12);
        let up = (a + d).min(1.0);
        if a > 0.0 && m > 0.0 && m < 1.0 {
            prop_assert!(combine(up, m, al) >= p - 1e-12);
        }
        // the fused value lies between the two inputs
        prop_assert!(p >= a.min(m) - 1e-12 && p <= a.max(m) + 1e-12);
    }

    #[test]
    fn evaluation_is_permutation_invariant(pairs in prop::collection::vec((label(), label()), 1..60), seed in any::<u64>()) {
        let (pred, gold): (Vec<_>, Vec<_>) = pairs.iter().cloned().unzip();
        let r = evaluate(&pred, &gold).unwrap();
        let mut idx: Vec<usize> = (0..pairs.len()).collect();
        let mut s = seed;
        for i in (1..idx.len()).rev() {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            idx.swap(i, (s >> 33) as usize % (i + 1));
        }
        let pp: Vec<_> = idx.iter().map(|&i| pred[i]).collect();
        let gp: Vec<_> = idx.iter().map(|&i| gold[i]).collect();
        prop_assert_eq!(evaluate(&pp, &gp).unwrap(), r.clone());
        let bounded = |x: f64| (0.0..=1.0).contains(&x);
        prop_assert!(bounded(r.good.f) && bounded(r.bad.f) && bounded(r.mean_f));
        prop_assert_eq!(r.confusion.iter().flatten().sum::<usize>(), pairs.len());
    }

    #[test]
    fn sweep_predicted_bad_is_non_increasing(ps in prop::collection::vec((0.0f64..=1.0, label()), 1..40)) {
        let (p, gold): (Vec<_>, Vec<_>) = ps.into_iter().unzip();
        let pts = sweep(&p, &gold, &uniform_grid(50)).unwrap();
        let predicted_bad: Vec<usize> = pts.iter().map(|x| x.report.confusion[0][1] + x.report.confusion[1][1]).collect();
        prop_assert!(predicted_bad.windows(2).all(|w| w[1] <= w[0]));
        prop_assert_eq!(predicted_bad[0], p.len());
    }

    #[test]
    fn sbs_makes_quadratic_number_of_calls(n in 1usize..9, seed in any::<u64>()) {
        let names: Vec<String> = (0..n).map(|i| format!("f{i:02}")).collect();
        let calls = AtomicUsize::new(0);
        let r = sbs(&names, |s| {
            calls.fetch_add(1, Ordering::SeqCst);
            let h = s.iter().fold(seed, |h, f| h.rotate_left(7) ^ f.len() as u64 ^ f.as_bytes()[2] as u64);
            Ok((h % 1000) as f64 / 1000.0)
        }, true).unwrap();
        prop_assert_eq!(calls.load(Ordering::SeqCst), n * (n + 1) / 2);
        prop_assert_eq!(r.evaluations, n * (n + 1) / 2);
        prop_assert_eq!(r.curve.len(), n);
        let mut ranks: Vec<usize> = r.ranks.values().cloned().collect();
        ranks.sort();
        prop_assert_eq!(ranks, (1..=n).collect::<Vec<_>>());
        prop_assert!(r.curve.iter().all(|c| c.mean_f <= r.best_mean_f));
    }
}

#[test]
fn sbs_finds_planted_signal() {
    // mean F grows with the number of planted features kept; noise features
    // cost a little each
    let names: Vec<String> = ["noise_a", "noise_b", "sig_1", "noise_c", "sig_2", "noise_d"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    let r = sbs(
        &names,
        |s| {
            let sig = s.iter().filter(|f| f.starts_with("sig")).count() as f64;
            let noise = s.len() as f64 - sig;
            Ok(0.4 + 0.1 * sig - 0.01 * noise)
        },
        false,
    )
    .unwrap();
    let top: Vec<&str> = r.removal_order[4..].iter().map(String::as_str).collect();
    assert!(top.contains(&"sig_1") && top.contains(&"sig_2"));
    assert_eq!(r.best_subset, ["sig_1", "sig_2"]);
}

/// Random DAG over nodes 0..n where every node lies on a 0 -> n-1 path.
fn random_lattice(seed: u64, n: usize, extra: usize) -> Lattice {
    let mut s = seed;
    let mut next = |m: u64| {
        s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        (s >> 33) % m
    };
    let words = ["a", "b", "c", "d"];
    let mut edges = vec![];
    for v in 0..n - 1 {
        edges.push(Edge {
            from: v,
            to: v + 1,
            word: words[next(4) as usize].into(),
            cost: next(100) as f64 / 10.0,
        });
    }
    for _ in 0..extra {
        let a = next(n as u64 - 1) as usize;
        let b = a + 1 + next((n - 1 - a) as u64) as usize;
        edges.push(Edge {
            from: a,
            to: b,
            word: words[next(4) as usize].into(),
            cost: next(100) as f64 / 10.0,
        });
    }
    Lattice::new(n, edges, 0, n - 1).unwrap()
}

fn all_paths(lat: &Lattice, v: usize, acc: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
    if v == lat.end() {
        out.push(acc.clone());
        return;
    }
    for (k, e) in lat.edges().iter().enumerate() {
        if e.from == v {
            acc.push(k);
            all_paths(lat, e.to, acc, out);
            acc.pop();
        }
    }
}

#[test]
fn rescoring_matches_path_enumeration() {
    for seed in 0..200u64 {
        let n = 2 + (seed % 6) as usize;
        let extra = (seed % 7) as usize;
        let lat = random_lattice(seed, n, extra.min(12 - (n - 1)));
        assert!(lat.edges().len() <= 12);
        let labels: HashMap<String, Label> = [("a", Label::B), ("b", Label::G), ("c", Label::B)]
            .iter()
            .map(|(w, l)| (w.to_string(), *l))
            .collect();
        let conf = Confidence::Labels(labels);
        let (reward, penalty) = (0.5, 1.5);
        let got = rescore(&lat, &conf, reward, penalty).unwrap();
        let mut paths = vec![];
        all_paths(&lat, lat.start(), &mut vec![], &mut paths);
        let cost_of = |p: &[usize]| -> f64 {
            p.iter()
                .map(|&k| {
                    let e = &lat.edges()[k];
                    e.cost + conf.adjustment(&e.word, reward, penalty)
                })
                .sum()
        };
        let best = paths.iter().map(|p| cost_of(p)).fold(f64::INFINITY, f64::min);
        assert!((got.cost - best).abs() < 1e-9, "seed {seed}");
        assert!((cost_of(&got.edges) - got.cost).abs() < 1e-9);
    }
}

#[test]
fn zero_weights_keep_the_one_best() {
    for seed in 0..50u64 {
        let lat = random_lattice(seed, 6, 5);
        let none = rescore(&lat, &Confidence::none(), 0.0, 0.0).unwrap();
        let probs: HashMap<String, f64> = [("a", 0.1), ("b", 0.9)]
            .iter()
            .map(|(w, p)| (w.to_string(), *p))
            .collect();
        let with = rescore(&lat, &Confidence::Probabilities(probs), 0.0, 0.0).unwrap();
        assert_eq!(none, with);
    }
}
