//! Per-class precision, recall and F-measure, threshold sweeps and label
//! statistics.

use std::fmt::Write as _;

use serde::Serialize;

use crate::crf::decide;
use crate::data::Label;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct ClassScores {
    pub precision: f64,
    pub recall: f64,
    pub f: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EvalReport {
    pub good: ClassScores,
    pub bad: ClassScores,
    pub mean_f: f64,
    /// `confusion[gold][pred]`, indexed by `Label::index()`.
    pub confusion: [[usize; 2]; 2],
    pub n_tokens: usize,
}

fn scores(tp: usize, predicted: usize, actual: usize) -> ClassScores {
    let ratio = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
    let precision = ratio(tp, predicted);
    let recall = ratio(tp, actual);
    let f = if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    ClassScores { precision, recall, f }
}

pub fn evaluate(pred: &[Label], gold: &[Label]) -> Result<EvalReport> {
    if pred.len() != gold.len() {
        return Err(Error::validation(format!(
            "{} predictions for {} gold labels",
            pred.len(),
            gold.len()
        )));
    }
    if pred.is_empty() {
        return Err(Error::validation("nothing to evaluate"));
    }
    let mut m = [[0usize; 2]; 2];
    for (p, g) in pred.iter().zip(gold) {
        m[g.index()][p.index()] += 1;
    }
    let class = |c: usize| scores(m[c][c], m[0][c] + m[1][c], m[c][0] + m[c][1]);
    let good = class(Label::G.index());
    let bad = class(Label::B.index());
    Ok(EvalReport {
        good,
        bad,
        mean_f: (good.f + bad.f) / 2.0,
        confusion: m,
        n_tokens: pred.len(),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepPoint {
    pub threshold: f64,
    pub report: EvalReport,
}

/// Evaluates the `p_bad >= t` labeling at every threshold of `grid`.
pub fn sweep(p_good: &[f64], gold: &[Label], grid: &[f64]) -> Result<Vec<SweepPoint>> {
    if let Some(t) = grid.iter().find(|t| !(0.0..=1.0).contains(*t)) {
        return Err(Error::validation(format!("threshold {t} is outside [0, 1]")));
    }
    if grid.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::validation("threshold grid must be sorted"));
    }
    grid.iter()
        .map(|&t| {
            let pred: Vec<Label> = p_good.iter().map(|&p| decide(p, t)).collect();
            Ok(SweepPoint {
                threshold: t,
                report: evaluate(&pred, gold)?,
            })
        })
        .collect()
}

/// `n + 1` evenly spaced thresholds from 0 to 1.
pub fn uniform_grid(n: usize) -> Vec<f64> {
    let n = n.max(1);
    (0..=n).map(|k| k as f64 / n as f64).collect()
}

pub const SWEEP_CSV_HEADER: &str = "threshold,f_good,f_bad,mean_f,precision_good,recall_good,precision_bad,recall_bad";

pub fn sweep_csv(points: &[SweepPoint]) -> String {
    let mut s = String::from(SWEEP_CSV_HEADER);
    s.push('\n');
    for p in points {
        let r = &p.report;
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{}",
            p.threshold, r.good.f, r.bad.f, r.mean_f, r.good.precision, r.good.recall, r.bad.precision, r.bad.recall
        );
    }
    s
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LabelStats {
    pub pct_good: f64,
    pub pct_bad: f64,
    pub n_good: usize,
    pub n_bad: usize,
}

pub fn label_stats(labels: &[Label]) -> Result<LabelStats> {
    if labels.is_empty() {
        return Err(Error::validation("no labels"));
    }
    let n_bad = labels.iter().filter(|&&l| l == Label::B).count();
    let n_good = labels.len() - n_bad;
    let pct_good = 100.0 * n_good as f64 / labels.len() as f64;
    Ok(LabelStats {
        pct_good,
        pct_bad: 100.0 - pct_good,
        n_good,
        n_bad,
    })
}

/// Mean F of predicting the majority gold class everywhere (G on ties).
pub fn majority_baseline(gold: &[Label]) -> Result<EvalReport> {
    let s = label_stats(gold)?;
    let l = if s.n_bad > s.n_good { Label::B } else { Label::G };
    evaluate(&vec![l; gold.len()], gold)
}
