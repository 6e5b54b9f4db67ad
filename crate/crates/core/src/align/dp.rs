//! Dynamic-programming alignment with relaxed matches and phrase spans.
//!
//! Cells hold `(cost, good)` where `good` counts hypothesis tokens aligned
//! by an exact, stem or synonym match. Lower cost wins; at equal cost the
//! path with more good tokens wins. Backtrace then prefers, in order:
//! match, phrase, substitute, delete, insert.

use std::ops::Range;

use super::{EditOp, EditStep, MatchKind, MatchResources, StemSource};
use crate::data::Token;

pub(crate) const EPS: f64 = 1e-9;

#[derive(Clone, Copy, Debug)]
pub(crate) struct Costs {
    pub exact: f64,
    pub stem: f64,
    pub synonym: f64,
    pub substitute: f64,
    pub insert: f64,
    pub delete: f64,
}

impl Costs {
    pub fn unit() -> Self {
        Costs {
            exact: 0.0,
            stem: 1.0,
            synonym: 1.0,
            substitute: 1.0,
            insert: 1.0,
            delete: 1.0,
        }
    }
}

/// Relaxed relation between every (original hypothesis index, reference
/// index) pair: `Some((kind, cost))` when the pair matches.
pub(crate) struct PairScorer {
    n_ref: usize,
    rel: Vec<Option<(MatchKind, f64)>>,
}

impl PairScorer {
    pub fn exact_only(hyp: &[Token], refs: &[Token], costs: &Costs) -> Self {
        let rel = hyp
            .iter()
            .flat_map(|h| {
                refs.iter()
                    .map(move |r| (h.surface == r.surface).then_some((MatchKind::Exact, costs.exact)))
            })
            .collect();
        PairScorer { n_ref: refs.len(), rel }
    }

    pub fn relaxed(hyp: &[Token], refs: &[Token], res: &MatchResources, costs: &Costs) -> Self {
        let mut rel = Vec::with_capacity(hyp.len() * refs.len());
        for h in hyp {
            for r in refs {
                let mut best: Option<(MatchKind, f64)> = None;
                let mut offer = |kind, cost: f64| {
                    if best.is_none_or(|(_, c)| cost < c) {
                        best = Some((kind, cost));
                    }
                };
                if h.surface == r.surface {
                    offer(MatchKind::Exact, costs.exact);
                }
                if res.stem_source == StemSource::TokenStemColumn {
                    if let (Some(hs), Some(rs)) = (&h.stem, &r.stem) {
                        if hs == rs {
                            offer(MatchKind::Stem, costs.stem);
                        }
                    }
                }
                if res.are_synonyms(&h.surface, &r.surface) {
                    offer(MatchKind::Synonym, costs.synonym);
                }
                rel.push(best);
            }
        }
        PairScorer { n_ref: refs.len(), rel }
    }

    pub fn get(&self, h: usize, r: usize) -> Option<(MatchKind, f64)> {
        self.rel[h * self.n_ref + r]
    }

    pub fn n_ref(&self) -> usize {
        self.n_ref
    }
}

/// A paraphrase occurrence: original hypothesis range against a reference range.
#[derive(Clone, Debug)]
pub(crate) struct PhraseCand {
    pub hyp: Range<usize>,
    pub refr: Range<usize>,
    pub cost: f64,
}

#[derive(Clone, Copy, Debug)]
struct Val {
    cost: f64,
    good: u32,
}

impl Val {
    const INF: Val = Val {
        cost: f64::INFINITY,
        good: 0,
    };

    fn add(self, cost: f64, good: u32) -> Val {
        Val {
            cost: self.cost + cost,
            good: self.good + good,
        }
    }

    fn better_than(self, o: Val) -> bool {
        self.cost < o.cost - EPS || ((self.cost - o.cost).abs() <= EPS && self.good > o.good)
    }

    fn same(self, o: Val) -> bool {
        (self.cost - o.cost).abs() <= EPS && self.good == o.good
    }
}

/// Phrase candidates usable under `order`: the hypothesis range must still be
/// contiguous and in its original order. Returned with their row span.
fn usable_phrases<'a>(order: &[usize], phrases: &'a [PhraseCand]) -> Vec<(Range<usize>, &'a PhraseCand)> {
    if phrases.is_empty() {
        return Vec::new();
    }
    let mut pos = vec![0usize; order.len()];
    for (p, &o) in order.iter().enumerate() {
        pos[o] = p;
    }
    phrases
        .iter()
        .filter_map(|c| {
            let start = pos[c.hyp.start];
            c.hyp
                .clone()
                .enumerate()
                .all(|(k, o)| pos[o] == start + k)
                .then(|| (start..start + c.hyp.len(), c))
        })
        .collect()
}

fn diag(scorer: &PairScorer, h: usize, r: usize, costs: &Costs) -> (Option<MatchKind>, f64) {
    match scorer.get(h, r) {
        Some((kind, c)) if c <= costs.substitute => (Some(kind), c),
        _ => (None, costs.substitute),
    }
}

fn fill(order: &[usize], scorer: &PairScorer, phrases: &[(Range<usize>, &PhraseCand)], costs: &Costs) -> Vec<Vec<Val>> {
    let n = order.len();
    let m = scorer.n_ref();
    let mut d = vec![vec![Val::INF; m + 1]; n + 1];
    d[0][0] = Val { cost: 0.0, good: 0 };
    for i in 0..=n {
        for j in 0..=m {
            if i == 0 && j == 0 {
                continue;
            }
            let mut best = Val::INF;
            let mut offer = |v: Val| {
                if v.better_than(best) {
                    best = v;
                }
            };
            if i > 0 && j > 0 {
                let (kind, c) = diag(scorer, order[i - 1], j - 1, costs);
                offer(d[i - 1][j - 1].add(c, u32::from(kind.is_some())));
            }
            if i > 0 {
                offer(d[i - 1][j].add(costs.insert, 0));
            }
            if j > 0 {
                offer(d[i][j - 1].add(costs.delete, 0));
            }
            for (rows, c) in phrases {
                if rows.end == i && c.refr.end == j {
                    offer(d[rows.start][c.refr.start].add(c.cost, 0));
                }
            }
            d[i][j] = best;
        }
    }
    d
}

/// Minimum cost (and good-token count) of aligning `order` to the reference.
pub(crate) fn cost_only(order: &[usize], scorer: &PairScorer, phrases: &[PhraseCand], costs: &Costs) -> (f64, u32) {
    let usable = usable_phrases(order, phrases);
    let d = fill(order, scorer, &usable, costs);
    let v = d[order.len()][scorer.n_ref()];
    (v.cost, v.good)
}

/// Full alignment: `((cost, good), steps)` with steps in left-to-right order.
pub(crate) fn align(
    order: &[usize],
    scorer: &PairScorer,
    phrases: &[PhraseCand],
    costs: &Costs,
) -> ((f64, u32), Vec<EditStep>) {
    let usable = usable_phrases(order, phrases);
    let d = fill(order, scorer, &usable, costs);
    let (mut i, mut j) = (order.len(), scorer.n_ref());
    let end = d[i][j];
    let mut steps = Vec::new();
    let step = |op, hyp: Option<Range<usize>>, refr: Option<Range<usize>>, kind, cost| EditStep {
        op,
        hyp_span: hyp,
        ref_span: refr,
        match_kind: kind,
        cost,
        shift_to: None,
    };
    while i > 0 || j > 0 {
        let cur = d[i][j];
        if i > 0 && j > 0 {
            let (kind, c) = diag(scorer, order[i - 1], j - 1, costs);
            if kind.is_some() && d[i - 1][j - 1].add(c, 1).same(cur) {
                let h = order[i - 1];
                steps.push(step(EditOp::Match, Some(h..h + 1), Some(j - 1..j), kind, c));
                i -= 1;
                j -= 1;
                continue;
            }
        }
        if let Some((rows, c)) = usable
            .iter()
            .find(|(rows, c)| rows.end == i && c.refr.end == j && d[rows.start][c.refr.start].add(c.cost, 0).same(cur))
        {
            steps.push(step(
                EditOp::Match,
                Some(c.hyp.clone()),
                Some(c.refr.clone()),
                Some(MatchKind::Phrase),
                c.cost,
            ));
            i = rows.start;
            j = c.refr.start;
            continue;
        }
        if i > 0 && j > 0 {
            let (kind, c) = diag(scorer, order[i - 1], j - 1, costs);
            if kind.is_none() && d[i - 1][j - 1].add(c, 0).same(cur) {
                let h = order[i - 1];
                steps.push(step(EditOp::Substitute, Some(h..h + 1), Some(j - 1..j), None, c));
                i -= 1;
                j -= 1;
                continue;
            }
        }
        if j > 0 && d[i][j - 1].add(costs.delete, 0).same(cur) {
            steps.push(step(EditOp::Delete, None, Some(j - 1..j), None, costs.delete));
            j -= 1;
            continue;
        }
        debug_assert!(i > 0 && d[i - 1][j].add(costs.insert, 0).same(cur));
        let h = order[i - 1];
        steps.push(step(EditOp::Insert, Some(h..h + 1), None, None, costs.insert));
        i -= 1;
    }
    steps.reverse();
    ((end.cost, end.good), steps)
}
