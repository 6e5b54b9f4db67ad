//! Oracles and properties for feature extraction and projection.

#![allow(clippy::needless_range_loop)]

use std::collections::BTreeSet;

use proptest::prelude::*;
use wce::data::{ConfusionNetwork, QuintupletRecord, Sentence, Side, Slot, Task, WordAlignment};
use wce::features::{AsrFeatureVector, MtExtractor, MtFeature, MtResources};
use wce::projection::{project_asr_features, project_confidence, NeutralDefaults, Strategy as Joint};

const WORDS: [&str; 4] = ["w0", "w1", "w2", "w3"];

fn cn_strategy(n: usize) -> impl Strategy<Value = Vec<Vec<(usize, u32)>>> {
    prop::collection::vec(prop::collection::btree_map(0usize..4, 1u32..10, 1..4), n)
        .prop_map(|slots| slots.into_iter().map(|m| m.into_iter().collect()).collect())
}

fn build_cn(raw: &[Vec<(usize, u32)>]) -> ConfusionNetwork {
    let slots = raw
        .iter()
        .map(|alts| {
            let total: u32 = alts.iter().map(|a| a.1).sum();
            Slot {
                start: 0.0,
                duration: 0.1,
                alternatives: alts
                    .iter()
                    .map(|&(w, c)| (WORDS[w].to_owned(), c as f64 / total as f64))
                    .collect(),
            }
        })
        .collect();
    ConfusionNetwork::new(slots).unwrap()
}

fn wpp_record(target: &[usize], cn: ConfusionNetwork) -> QuintupletRecord {
    let text = target.iter().map(|&w| WORDS[w]).collect::<Vec<_>>().join(" ");
    let s = |side| Sentence::from_text(&text, side).unwrap();
    QuintupletRecord {
        id: "r".into(),
        f_ref: s(Side::Source),
        f_hyp: s(Side::Source),
        e_hyp_mt: s(Side::Target),
        e_hyp_slt: s(Side::Target),
        e_ref: s(Side::Target),
        cn_asr: None,
        cn_mt: None,
        cn_mt_ref: Some(cn),
        align_src_tgt: None,
        align_ref_mt: None,
        sidecar: Default::default(),
    }
}

proptest! {
    #[test]
    fn wpp_features_match_slot_scan(
        (target, raw) in (1usize..5).prop_flat_map(|n| (prop::collection::vec(0usize..4, n), cn_strategy(n)))
    ) {
        let cn = build_cn(&raw);
        let record = wpp_record(&target, cn.clone());
        let enabled: BTreeSet<MtFeature> = [MtFeature::WppExact, MtFeature::WppAny, MtFeature::WppMin, MtFeature::WppMax, MtFeature::Nodes]
            .into_iter()
            .collect();
        let ex = MtExtractor::new(enabled, MtResources::default()).unwrap();
        let cols: Vec<String> = ex.columns().into_iter().map(|c| c.name).collect();
        let rows = ex.extract(&record, Task::Mt).unwrap();
        let get = |i: usize, name: &str| rows[i][cols.iter().position(|c| c == name).unwrap()].as_num().unwrap();
        for (i, &w) in target.iter().enumerate() {
            let word = WORDS[w];
            // exhaustive scan over every slot and alternative
            let mut any: f64 = 0.0;
            for s in cn.slots() {
                for (a, p) in &s.alternatives {
                    if a == word {
                        any = any.max(*p);
                    }
                }
            }
            prop_assert_eq!(get(i, "wpp_any"), any);
            let slot = &cn.slots()[i];
            let exact = slot.alternatives.iter().find(|a| a.0 == word).map(|a| a.1);
            prop_assert_eq!(get(i, "wpp_exact"), exact.unwrap_or(0.0));
            prop_assert_eq!(get(i, "nodes"), slot.alternatives.len() as f64);
            if exact.is_some() {
                prop_assert!(get(i, "wpp_min") <= get(i, "wpp_exact") && get(i, "wpp_exact") <= get(i, "wpp_max"));
            }
        }
    }
}

fn alignment_strategy() -> impl Strategy<Value = (usize, usize, Vec<(usize, usize)>)> {
    (1usize..=6, 1usize..=6).prop_flat_map(|(ns, nt)| {
        (
            Just(ns),
            Just(nt),
            prop::collection::btree_set((0..ns, 0..nt), 0..=ns * nt).prop_map(|s| s.into_iter().collect()),
        )
    })
}

fn src_vectors(n: usize, seed: &[f64]) -> Vec<AsrFeatureVector> {
    (0..n)
        .map(|k| {
            let x = seed[k % seed.len()];
            AsrFeatureVector {
                f_word: format!("s{k}"),
                f_3g: -3.0 * x,
                f_log: -2.0 * x - k as f64,
                f_back: (k % 3) as f64,
                f_alt: 1 + k % 4,
                f_post: x,
                f_dur: 0.05 * (k + 1) as f64,
                f_pos: format!("P{k}"),
                f_context: ["a".into(), format!("s{k}"), "b".into()],
            }
        })
        .collect()
}

proptest! {
    #[test]
    fn confidence_projection_replays_rules(
        (ns, nt, links) in alignment_strategy(),
        conf in prop::collection::vec(0.0f64..=1.0, 6),
    ) {
        let a = WordAlignment::new(links.clone()).unwrap();
        let got = project_confidence(nt, &a, &conf[..ns]).unwrap();
        prop_assert_eq!(got.len(), nt);
        // straight replay of the per-token rule from the raw link list
        let mut prev = 0.5;
        for j in 0..nt {
            let srcs: Vec<usize> = links.iter().filter(|l| l.1 == j).map(|l| l.0).collect();
            let want = if srcs.is_empty() {
                prev
            } else {
                srcs.iter().map(|&s| conf[s]).sum::<f64>() / srcs.len() as f64
            };
            prop_assert!((got[j] - want).abs() < 1e-12);
            prop_assert!((0.0..=1.0).contains(&got[j]));
            prev = want;
        }
    }

    #[test]
    fn strategies_differ_only_on_symbolic_columns(
        (ns, nt, links) in alignment_strategy(),
        seed in prop::collection::vec(0.0f64..=1.0, 1..6),
    ) {
        let a = WordAlignment::new(links).unwrap();
        let src = src_vectors(ns, &seed);
        let d = NeutralDefaults::default();
        let runs: Vec<Vec<AsrFeatureVector>> = [Joint::Joint1, Joint::Joint2, Joint::Joint3]
            .into_iter()
            .map(|s| project_asr_features(nt, &a, &src, s, &d).unwrap())
            .collect();
        for r in &runs {
            prop_assert_eq!(r.len(), nt);
        }
        for j in 0..nt {
            let (x, y, z) = (&runs[0][j], &runs[1][j], &runs[2][j]);
            for v in [y, z] {
                prop_assert_eq!((x.f_3g, x.f_log, x.f_back, x.f_alt, x.f_post, x.f_dur), (v.f_3g, v.f_log, v.f_back, v.f_alt, v.f_post, v.f_dur));
            }
            let srcs = a.sources_of(j);
            if !srcs.is_empty() {
                let max_post = srcs.iter().map(|&k| src[k].f_post).fold(0.0, f64::max);
                prop_assert!(x.f_post <= max_post + 1e-12);
                prop_assert!((0.0..=1.0).contains(&x.f_post));
            }
        }
    }
}
