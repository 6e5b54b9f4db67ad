use std::cmp::Ordering;
use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};

use super::dp::{self, Costs, PairScorer, PhraseCand, EPS};
use super::{collapse_labels, EditOp, EditPath, EditStep, MatchResources};
use crate::data::{EditType, Label, Sentence};
use crate::error::{Error, Result};

/// Edit costs and shift limits for the shift-aware alignment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TerConfig {
    pub cost_exact: f64,
    pub cost_stem: f64,
    pub cost_synonym: f64,
    pub cost_substitute: f64,
    pub cost_insert: f64,
    pub cost_delete: f64,
    pub cost_shift: f64,
    /// Used for paraphrase entries that carry no cost of their own.
    pub cost_phrase: f64,
    pub max_shift_block: usize,
    pub max_shift_distance: usize,
    pub max_shifts: usize,
    /// Shift sequences kept per search depth. 1 is a plain greedy walk.
    pub shift_beam: usize,
}

impl Default for TerConfig {
    fn default() -> Self {
        TerConfig {
            cost_exact: 0.0,
            cost_stem: 0.2,
            cost_synonym: 0.2,
            cost_substitute: 1.0,
            cost_insert: 1.0,
            cost_delete: 1.0,
            cost_shift: 1.0,
            cost_phrase: 0.9,
            max_shift_block: 10,
            max_shift_distance: 50,
            max_shifts: 10,
            shift_beam: 32,
        }
    }
}

impl TerConfig {
    pub fn validate(&self) -> Result<()> {
        let costs = [
            ("cost_stem", self.cost_stem),
            ("cost_synonym", self.cost_synonym),
            ("cost_substitute", self.cost_substitute),
            ("cost_insert", self.cost_insert),
            ("cost_delete", self.cost_delete),
            ("cost_shift", self.cost_shift),
            ("cost_phrase", self.cost_phrase),
        ];
        if !(self.cost_exact.is_finite() && self.cost_exact >= 0.0) {
            return Err(Error::config("cost_exact must be finite and >= 0"));
        }
        for (name, c) in costs {
            if !(c.is_finite() && c >= 0.0) {
                return Err(Error::config(format!("{name} must be finite and >= 0")));
            }
            if c < self.cost_exact {
                return Err(Error::config(format!("{name} is below cost_exact")));
            }
        }
        if self.max_shift_block == 0 || self.max_shift_distance == 0 || self.max_shifts == 0 || self.shift_beam == 0 {
            return Err(Error::config("shift limits must be >= 1"));
        }
        Ok(())
    }

    fn costs(&self) -> Costs {
        Costs {
            exact: self.cost_exact,
            stem: self.cost_stem,
            synonym: self.cost_synonym,
            substitute: self.cost_substitute,
            insert: self.cost_insert,
            delete: self.cost_delete,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TerAlignment {
    pub path: EditPath,
    /// One edit type per original hypothesis token (never `D`).
    pub edit_types: Vec<EditType>,
}

impl TerAlignment {
    pub fn labels(&self) -> Vec<Label> {
        collapse_labels(&self.edit_types).expect("hypothesis edit types never contain D")
    }

    /// Reference positions left unaligned (`D` steps).
    pub fn deleted_refs(&self) -> Vec<usize> {
        self.path
            .steps
            .iter()
            .filter(|s| s.op == EditOp::Delete)
            .filter_map(|s| s.ref_span.as_ref().map(|r| r.start))
            .collect()
    }
}

fn find_all(haystack: &[&str], needle: &[String]) -> Vec<usize> {
    if needle.len() > haystack.len() {
        return Vec::new();
    }
    (0..=haystack.len() - needle.len())
        .filter(|&i| haystack[i..i + needle.len()].iter().zip(needle).all(|(a, b)| *a == b))
        .collect()
}

fn phrase_candidates(hyp: &Sentence, reference: &Sentence, res: &MatchResources, cfg: &TerConfig) -> Vec<PhraseCand> {
    let hs = hyp.surfaces();
    let rs = reference.surfaces();
    let mut out = Vec::new();
    let mut entries: Vec<_> = res.paraphrases().collect();
    // deterministic order regardless of hash iteration
    entries.sort_by(|a, b| (a.0, &a.1.target).cmp(&(b.0, &b.1.target)));
    for (h, p) in entries {
        let cost = p.cost.unwrap_or(cfg.cost_phrase);
        for hi in find_all(&hs, h) {
            for ri in find_all(&rs, &p.target) {
                out.push(PhraseCand {
                    hyp: hi..hi + h.len(),
                    refr: ri..ri + p.target.len(),
                    cost,
                });
            }
        }
    }
    out
}

/// A block move: take `len` tokens at `start`, reinsert them so they begin at
/// `dest` in the resulting order.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
struct Shift {
    start: usize,
    len: usize,
    dest: usize,
}

impl Shift {
    fn displacement(&self) -> isize {
        self.dest as isize - self.start as isize
    }

    /// Tie-break key: smallest start, then block, then displacement.
    fn key(&self) -> (usize, usize, usize, isize) {
        let d = self.displacement();
        (self.start, self.len, d.unsigned_abs(), d)
    }

    fn apply(&self, order: &[usize]) -> Vec<usize> {
        let block = &order[self.start..self.start + self.len];
        let mut rest: Vec<usize> = order[..self.start]
            .iter()
            .chain(&order[self.start + self.len..])
            .copied()
            .collect();
        let tail = rest.split_off(self.dest);
        rest.extend_from_slice(block);
        rest.extend(tail);
        rest
    }
}

/// Blocks whose tokens match some contiguous reference span, moved within
/// the configured limits.
fn shift_candidates(order: &[usize], scorer: &PairScorer, cfg: &TerConfig) -> Vec<Shift> {
    let n = order.len();
    let m = scorer.n_ref();
    let mut out = Vec::new();
    for start in 0..n {
        for len in 1..=cfg.max_shift_block.min(n - start) {
            let block = &order[start..start + len];
            if len > m {
                break;
            }
            let matches_ref =
                (0..=m - len).any(|j| block.iter().enumerate().all(|(k, &h)| scorer.get(h, j + k).is_some()));
            if !matches_ref {
                continue;
            }
            for dest in 0..=n - len {
                if dest != start && dest.abs_diff(start) <= cfg.max_shift_distance {
                    out.push(Shift { start, len, dest });
                }
            }
        }
    }
    out
}

#[derive(Clone)]
struct ShiftState {
    order: Vec<usize>,
    shifts: Vec<Shift>,
    total: f64,
}

impl ShiftState {
    fn keys(&self) -> Vec<(usize, usize, usize, isize)> {
        self.shifts.iter().map(Shift::key).collect()
    }

    /// Lower total first; ties go to the lexicographically smaller shift keys.
    fn before(&self, other: &ShiftState) -> bool {
        self.total < other.total - EPS || ((self.total - other.total).abs() <= EPS && self.keys() < other.keys())
    }
}

/// Searches shift sequences breadth-first, keeping the `shift_beam` best
/// distinct hypothesis orders per depth. An order already reached at a
/// shallower depth is never revisited, and a depth whose shift cost alone
/// cannot beat the best total ends the search.
fn search_shifts(n: usize, scorer: &PairScorer, phrases: &[PhraseCand], costs: &Costs, cfg: &TerConfig) -> ShiftState {
    let identity: Vec<usize> = (0..n).collect();
    let mut best = ShiftState {
        total: dp::cost_only(&identity, scorer, phrases, costs).0,
        order: identity.clone(),
        shifts: Vec::new(),
    };
    let mut seen: HashSet<Vec<usize>> = HashSet::from([identity]);
    let mut beam = vec![best.clone()];
    for depth in 1..=cfg.max_shifts {
        let paid = depth as f64 * cfg.cost_shift;
        if paid >= best.total - EPS {
            break;
        }
        let mut children: HashMap<Vec<usize>, ShiftState> = HashMap::new();
        for state in &beam {
            for s in shift_candidates(&state.order, scorer, cfg) {
                let order = s.apply(&state.order);
                if seen.contains(&order) {
                    continue;
                }
                let mut shifts = state.shifts.clone();
                shifts.push(s);
                let child = ShiftState {
                    total: dp::cost_only(&order, scorer, phrases, costs).0 + paid,
                    order: order.clone(),
                    shifts,
                };
                match children.get(&order) {
                    Some(existing) if !child.before(existing) => {}
                    _ => {
                        children.insert(order, child);
                    }
                }
            }
        }
        let mut next: Vec<ShiftState> = children.into_values().collect();
        next.sort_by(|a, b| {
            if a.before(b) {
                Ordering::Less
            } else if b.before(a) {
                Ordering::Greater
            } else {
                Ordering::Equal
            }
        });
        seen.extend(next.iter().map(|s| s.order.clone()));
        if let Some(first) = next.first() {
            if first.total < best.total - EPS {
                best = first.clone();
            }
        }
        next.truncate(cfg.shift_beam);
        if next.is_empty() {
            break;
        }
        beam = next;
    }
    best
}

/// Shift-aware alignment with relaxed matching.
///
/// Looks for the sequence of block shifts minimizing the edit cost after
/// shifting plus the shift costs (see [`TerConfig::shift_beam`]), then
/// types every hypothesis token from the final alignment: exact E, stem T,
/// synonym Y, paraphrase span P, substitution S, unmatched I.
pub fn align_ter_shift(
    hyp: &Sentence,
    reference: &Sentence,
    res: &MatchResources,
    cfg: &TerConfig,
) -> Result<TerAlignment> {
    if hyp.is_empty() || reference.is_empty() {
        return Err(Error::validation("align_ter_shift needs non-empty sentences"));
    }
    cfg.validate()?;
    let costs = cfg.costs();
    let scorer = PairScorer::relaxed(hyp.tokens(), reference.tokens(), res, &costs);
    let phrases = phrase_candidates(hyp, reference, res, cfg);

    let found = search_shifts(hyp.len(), &scorer, &phrases, &costs, cfg);
    let order = found.order;
    let shift_steps: Vec<EditStep> = found
        .shifts
        .iter()
        .map(|s| EditStep {
            op: EditOp::Shift,
            hyp_span: Some(s.start..s.start + s.len),
            ref_span: None,
            match_kind: None,
            cost: cfg.cost_shift,
            shift_to: Some(s.dest),
        })
        .collect();

    let (_, align_steps) = dp::align(&order, &scorer, &phrases, &costs);
    let mut edit_types = vec![EditType::I; hyp.len()];
    for st in &align_steps {
        if let Some(span) = &st.hyp_span {
            for h in span.clone() {
                edit_types[h] = st.edit_type();
            }
        }
    }
    let steps: Vec<EditStep> = shift_steps.into_iter().chain(align_steps).collect();
    let total_cost = steps.iter().map(|s| s.cost).sum();
    Ok(TerAlignment {
        path: EditPath {
            steps,
            total_cost,
            hyp_order: order,
        },
        edit_types,
    })
}
