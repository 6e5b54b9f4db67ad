//! Reference label generation.
//!
//! ASR hypotheses are aligned to their transcript with a plain
//! minimum-edit (WER) alignment. Translation hypotheses are aligned to their
//! post-edition with a shift-aware alignment that also accepts stem,
//! synonym and paraphrase matches; the resulting edit types are collapsed
//! to good/bad labels.

mod dp;
mod resources;
mod ter;

use std::ops::Range;

use serde::Serialize;

pub use resources::{MatchResources, Paraphrase, StemSource};
pub use ter::{align_ter_shift, TerAlignment, TerConfig};

use crate::data::{EditType, Label, Sentence};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum EditOp {
    Match,
    Substitute,
    Insert,
    Delete,
    Shift,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum MatchKind {
    Exact,
    Stem,
    Synonym,
    Phrase,
}

/// One edit. Alignment steps index the original hypothesis; a shift step's
/// `hyp_span` indexes the hypothesis order just before the shift, and
/// `shift_to` is the block's new start position.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EditStep {
    pub op: EditOp,
    pub hyp_span: Option<Range<usize>>,
    pub ref_span: Option<Range<usize>>,
    pub match_kind: Option<MatchKind>,
    pub cost: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub shift_to: Option<usize>,
}

impl EditStep {
    /// Per-token edit type of the hypothesis tokens covered by this step.
    pub fn edit_type(&self) -> EditType {
        match (self.op, self.match_kind) {
            (EditOp::Match, Some(MatchKind::Stem)) => EditType::T,
            (EditOp::Match, Some(MatchKind::Synonym)) => EditType::Y,
            (EditOp::Match, Some(MatchKind::Phrase)) => EditType::P,
            (EditOp::Match, _) => EditType::E,
            (EditOp::Substitute, _) => EditType::S,
            (EditOp::Insert, _) => EditType::I,
            (EditOp::Delete, _) => EditType::D,
            // shifts carry no per-token type; the shifted tokens are typed by
            // their alignment step
            (EditOp::Shift, _) => EditType::E,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EditPath {
    /// Shift steps first, in application order, then alignment steps in
    /// left-to-right order of the shifted hypothesis.
    pub steps: Vec<EditStep>,
    pub total_cost: f64,
    /// Original hypothesis indices in post-shift order.
    pub hyp_order: Vec<usize>,
}

impl EditPath {
    pub fn shifts(&self) -> usize {
        self.steps.iter().filter(|s| s.op == EditOp::Shift).count()
    }

    pub fn count(&self, op: EditOp) -> usize {
        self.steps.iter().filter(|s| s.op == op).count()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WerAlignment {
    pub path: EditPath,
    pub labels: Vec<Label>,
    pub wer: f64,
}

/// Unit-cost minimum edit alignment of `hyp` against `reference`.
///
/// Matched hypothesis tokens are labeled G, substituted or inserted ones B.
/// `wer` is `(S + I + D) / |reference|`.
pub fn align_wer(hyp: &Sentence, reference: &Sentence) -> Result<WerAlignment> {
    if hyp.is_empty() || reference.is_empty() {
        return Err(Error::validation("align_wer needs non-empty sentences"));
    }
    let costs = dp::Costs::unit();
    let scorer = dp::PairScorer::exact_only(hyp.tokens(), reference.tokens(), &costs);
    let order: Vec<usize> = (0..hyp.len()).collect();
    let steps = dp::align(&order, &scorer, &[], &costs).1;
    let total_cost = steps.iter().map(|s| s.cost).sum();
    let mut labels = vec![Label::B; hyp.len()];
    let mut errors = 0usize;
    for s in &steps {
        match s.op {
            EditOp::Match => {
                for i in s.hyp_span.clone().unwrap() {
                    labels[i] = Label::G;
                }
            }
            _ => errors += 1,
        }
    }
    Ok(WerAlignment {
        path: EditPath {
            steps,
            total_cost,
            hyp_order: order,
        },
        labels,
        wer: errors as f64 / reference.len() as f64,
    })
}

/// Six-way edit types to binary labels: E/T/Y are good, S/P/I bad.
pub fn collapse_labels(edit_types: &[EditType]) -> Result<Vec<Label>> {
    edit_types
        .iter()
        .enumerate()
        .map(|(i, t)| match t {
            EditType::E | EditType::T | EditType::Y => Ok(Label::G),
            EditType::S | EditType::P | EditType::I => Ok(Label::B),
            EditType::D => Err(Error::validation(format!(
                "edit type D at position {i} is reference-only and has no hypothesis label"
            ))),
        })
        .collect()
}
