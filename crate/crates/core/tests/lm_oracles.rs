//! Brute-force oracles for the back-off LM.

use std::collections::{BTreeMap, HashSet};

use proptest::prelude::*;
use wce::lm::{estimate_arpa, BackoffLm, BOS};

const VOCAB: [&str; 6] = ["<s>", "</s>", "a", "b", "c", "d"];
const ORDER: usize = 3;
const DISCOUNT: f64 = 0.5;

type Ngram = Vec<&'static str>;

/// Absolute-discount back-off model built straight from counts. Returns the
/// ARPA text and the listed probabilities per n-gram.
fn build_model(sentences: &[Vec<usize>]) -> (String, BTreeMap<Ngram, f64>) {
    let mut counts: BTreeMap<Ngram, f64> = BTreeMap::new();
    let mut total = 0.0;
    for s in sentences {
        let toks: Vec<&'static str> = std::iter::once("<s>")
            .chain(s.iter().map(|&i| VOCAB[i + 2]))
            .chain(std::iter::once("</s>"))
            .collect();
        total += toks.len() as f64;
        for n in 1..=ORDER {
            for w in toks.windows(n) {
                *counts.entry(w.to_vec()).or_default() += 1.0;
            }
        }
    }
    // probabilities: add-one unigrams, discounted higher orders
    let mut prob: BTreeMap<Ngram, f64> = BTreeMap::new();
    let mut bow: BTreeMap<Ngram, f64> = BTreeMap::new();
    for w in VOCAB {
        let c = counts.get(&vec![w]).copied().unwrap_or(0.0);
        prob.insert(vec![w], (c + 1.0) / (total + VOCAB.len() as f64));
    }
    fn p_backoff(prob: &BTreeMap<Ngram, f64>, bow: &BTreeMap<Ngram, f64>, h: &[&'static str], w: &'static str) -> f64 {
        let mut g = h.to_vec();
        g.push(w);
        if let Some(p) = prob.get(&g) {
            return *p;
        }
        bow.get(h).copied().unwrap_or(1.0) * p_backoff(prob, bow, &h[1..], w)
    }
    for n in 2..=ORDER {
        let histories: Vec<Ngram> = counts.keys().filter(|k| k.len() == n - 1).cloned().collect();
        for h in histories {
            let follow: Vec<(&'static str, f64)> = VOCAB
                .iter()
                .filter_map(|&w| {
                    let mut g = h.clone();
                    g.push(w);
                    counts.get(&g).map(|&c| (w, c))
                })
                .collect();
            if follow.is_empty() {
                continue;
            }
            let ch: f64 = follow.iter().map(|f| f.1).sum();
            let mut seen_lower = 0.0;
            for &(w, c) in &follow {
                let mut g = h.clone();
                g.push(w);
                prob.insert(g, (c - DISCOUNT) / ch);
                seen_lower += p_backoff(&prob, &bow, &h[1..], w);
            }
            let alpha = DISCOUNT * follow.len() as f64 / ch;
            bow.insert(h, alpha / (1.0 - seen_lower));
        }
    }
    let mut text = String::from("\\data\\\n");
    for n in 1..=ORDER {
        text += &format!("ngram {n}={}\n", prob.keys().filter(|k| k.len() == n).count());
    }
    for n in 1..=ORDER {
        text += &format!("\n\\{n}-grams:\n");
        for (g, p) in prob.iter().filter(|(k, _)| k.len() == n) {
            text += &format!("{} {}", p.log10(), g.join(" "));
            if let Some(b) = bow.get(g) {
                text += &format!(" {}", b.log10());
            }
            text.push('\n');
        }
    }
    text += "\n\\end\\\n";
    (text, prob)
}

fn corpus() -> impl Strategy<Value = Vec<Vec<usize>>> {
    prop::collection::vec(prop::collection::vec(0usize..4, 1..7), 1..8)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn conditional_probabilities_sum_to_one(sents in corpus()) {
        let (text, prob) = build_model(&sents);
        let lm = BackoffLm::parse_arpa(&text).unwrap();
        let contexts: Vec<&Ngram> = prob.keys().filter(|k| k.len() < ORDER).collect();
        prop_assert!(!contexts.is_empty());
        let empty: Ngram = vec![];
        for ctx in contexts.into_iter().chain(std::iter::once(&empty)) {
            let total: f64 = VOCAB.iter().map(|w| 10f64.powf(lm.query(ctx, w).log10_prob)).sum();
            prop_assert!((total - 1.0).abs() < 1e-6, "context {:?} sums to {}", ctx, total);
        }
    }

    #[test]
    fn listed_entries_are_reproduced_exactly(sents in corpus()) {
        let (text, prob) = build_model(&sents);
        let lm = BackoffLm::parse_arpa(&text).unwrap();
        for (g, p) in &prob {
            let q = lm.query(&g[..g.len() - 1], g[g.len() - 1]);
            prop_assert_eq!(q.backoff_level, 0);
            prop_assert_eq!(q.matched_order, g.len());
            // the file carries log10 values printed at full precision
            prop_assert_eq!(q.log10_prob, p.log10());
        }
    }

    #[test]
    fn longest_match_equals_brute_force(
        sents in corpus(),
        probe in prop::collection::vec(0usize..7, 1..10),
    ) {
        let (text, prob) = build_model(&sents);
        let lm = BackoffLm::parse_arpa(&text).unwrap();
        let listed: HashSet<Vec<&str>> = prob.keys().map(|k| k.to_vec()).collect();
        let words: Vec<&str> = probe.iter().map(|&i| if i < VOCAB.len() { VOCAB[i] } else { "zzz" }).collect();
        for i in 0..words.len() {
            let want = (0..=ORDER.min(i + 1))
                .rev()
                .find(|&l| l == 0 || listed.contains(&words[i + 1 - l..=i]))
                .unwrap();
            let got = lm.longest_match(&words, i);
            prop_assert_eq!(got, want);
            if listed.contains(&vec![words[i]]) {
                prop_assert!(got >= 1);
            }
        }
    }
    #[test]
    fn estimated_models_are_normalized(sents in corpus(), ctx in prop::collection::vec(0usize..6, 0..3)) {
        let words: Vec<Vec<&str>> = sents.iter().map(|s| s.iter().map(|&i| VOCAB[i + 2]).collect()).collect();
        let lm = BackoffLm::parse_arpa(&estimate_arpa(&words, ORDER, 0.7).unwrap()).unwrap();
        let ctx: Vec<&str> = ctx.iter().map(|&i| VOCAB[i]).collect();
        let predictable: Vec<&str> = lm.vocab().filter(|&w| w != BOS).collect();
        let total: f64 = predictable.iter().map(|w| 10f64.powf(lm.query(&ctx, w).log10_prob)).sum();
        prop_assert!((total - 1.0).abs() < 1e-9, "context {:?} sums to {}", ctx, total);
    }
}

#[test]
fn oov_has_no_match_and_full_back_off() {
    let (text, _) = build_model(&[vec![0, 1, 2]]);
    let lm = BackoffLm::parse_arpa(&text).unwrap();
    assert_eq!(lm.longest_match(&["a", "zzz"], 1), 0);
    let q = lm.query(&["a", "b"], "zzz");
    assert_eq!(q.backoff_level, ORDER - 1);
    // a listed unigram never seen after (c, b) backs off all the way
    let q = lm.query(&["c", "b"], "<s>");
    assert_eq!(q.backoff_level, ORDER - 1);
    assert_eq!(q.matched_order, 1);
}
