//! Linear-chain CRF over the labels {G, B}.
//!
//! Observation features come from unigram templates over table columns:
//! categorical columns give indicators `col[off]=value`, numeric columns give
//! real-valued features `col[off]`. Each observation feature has one weight
//! per label; four more weights score label transitions.

mod io;
mod optim;
mod train;

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::data::{ColumnKind, ColumnSpec, FeatureTable, FeatureValue, Label};
use crate::error::{Error, Result};

pub use io::{load_model, read_model_str, save_model, write_model_string};
pub use optim::{minimize_lbfgs, LbfgsConfig, LbfgsReport};
pub use train::{train, train_with_init, CrfProblem, TrainConfig};

pub const MAX_OFFSET: i32 = 2;
const BOS: &str = "__BOS__";
const EOS: &str = "__EOS__";
const BIAS: &str = "__bias__";

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct UnigramTemplate {
    pub column: String,
    pub kind: ColumnKind,
    pub offsets: Vec<i32>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TemplateSet {
    pub unigrams: Vec<UnigramTemplate>,
    /// Label-bigram transition weights.
    pub transitions: bool,
    /// A constant per-label feature on every token.
    pub bias: bool,
}

impl TemplateSet {
    /// Offsets -2..=2 on every column, transitions and bias on.
    pub fn default_for(columns: &[ColumnSpec]) -> Self {
        TemplateSet {
            unigrams: columns
                .iter()
                .map(|c| UnigramTemplate {
                    column: c.name.clone(),
                    kind: c.kind,
                    offsets: (-MAX_OFFSET..=MAX_OFFSET).collect(),
                })
                .collect(),
            transitions: true,
            bias: true,
        }
    }

    /// Same templates with only the given offsets.
    pub fn with_offsets(columns: &[ColumnSpec], offsets: &[i32]) -> Self {
        let mut t = TemplateSet::default_for(columns);
        for u in &mut t.unigrams {
            u.offsets = offsets.to_vec();
        }
        t
    }

    /// Checks the templates against a table's columns. Returns the column
    /// index of each unigram template.
    pub fn bind(&self, columns: &[ColumnSpec]) -> Result<Vec<usize>> {
        self.unigrams
            .iter()
            .map(|u| {
                if u.offsets.is_empty() || u.offsets.iter().any(|o| o.abs() > MAX_OFFSET) {
                    return Err(Error::config(format!(
                        "template `{}`: offsets must be a non-empty subset of -{MAX_OFFSET}..={MAX_OFFSET}",
                        u.column
                    )));
                }
                let k = columns.iter().position(|c| c.name == u.column).ok_or_else(|| {
                    Error::config(format!("template column `{}` is not in the feature table", u.column))
                })?;
                if columns[k].kind != u.kind {
                    return Err(Error::config(format!(
                        "template column `{}` has a different kind in the table",
                        u.column
                    )));
                }
                Ok(k)
            })
            .collect()
    }
}

/// Expands one sentence into per-token `(feature string, value)` lists.
pub(crate) fn expand(templates: &TemplateSet, bound: &[usize], rows: &[Vec<FeatureValue>]) -> Vec<Vec<(String, f64)>> {
    let n = rows.len() as i64;
    (0..n)
        .map(|t| {
            let mut out = Vec::new();
            if templates.bias {
                out.push((BIAS.to_owned(), 1.0));
            }
            for (u, &ci) in templates.unigrams.iter().zip(bound) {
                for &o in &u.offsets {
                    let p = t + o as i64;
                    let cell = (0..n).contains(&p).then(|| &rows[p as usize][ci]);
                    match (u.kind, cell) {
                        (ColumnKind::Categorical, Some(v)) => {
                            out.push((format!("{}[{o}]={}", u.column, v.as_cat().unwrap_or_default()), 1.0))
                        }
                        (ColumnKind::Categorical, None) => {
                            out.push((format!("{}[{o}]={}", u.column, if p < 0 { BOS } else { EOS }), 1.0))
                        }
                        (ColumnKind::Numeric, Some(v)) => {
                            let x = v.as_num().unwrap_or(0.0);
                            if x != 0.0 {
                                out.push((format!("{}[{o}]", u.column), x));
                            }
                        }
                        (ColumnKind::Numeric, None) => {}
                    }
                }
            }
            out
        })
        .collect()
}

/// Per-token active features as (feature index, value).
pub(crate) type Compiled = Vec<Vec<(u32, f64)>>;

/// Per-label probabilities of one sentence, indexed by `Label::index()`.
pub type Marginals = Vec<[f64; 2]>;

/// Per-token emission scores and the transition matrix `[prev][cur]`.
pub type Potentials = (Vec<[f64; 2]>, [[f64; 2]; 2]);

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TrainingInfo {
    pub l2_sigma2: f64,
    pub iterations: usize,
    pub objective: f64,
    pub grad_norm: f64,
    pub converged: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CrfModel {
    templates: TemplateSet,
    features: Vec<String>,
    index: HashMap<String, u32>,
    weights: Vec<f64>,
    info: TrainingInfo,
}

impl CrfModel {
    /// Assembles a model; `weights` holds two weights per feature followed by
    /// four transition weights when transitions are enabled.
    pub fn from_parts(
        templates: TemplateSet,
        features: Vec<String>,
        weights: Vec<f64>,
        info: TrainingInfo,
    ) -> Result<Self> {
        let index: HashMap<String, u32> = features
            .iter()
            .enumerate()
            .map(|(k, f)| (f.clone(), k as u32))
            .collect();
        if index.len() != features.len() {
            return Err(Error::validation("duplicate feature in the model dictionary"));
        }
        let want = n_weights(features.len(), templates.transitions);
        if weights.len() != want {
            return Err(Error::validation(format!(
                "model has {} weights, expected {want} for {} features",
                weights.len(),
                features.len()
            )));
        }
        if weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::Numeric("model weights must be finite".into()));
        }
        if info.l2_sigma2.is_nan() || info.l2_sigma2 <= 0.0 {
            return Err(Error::validation("l2_sigma2 must be positive"));
        }
        Ok(CrfModel {
            templates,
            features,
            index,
            weights,
            info,
        })
    }

    pub fn templates(&self) -> &TemplateSet {
        &self.templates
    }

    pub fn features(&self) -> &[String] {
        &self.features
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn info(&self) -> &TrainingInfo {
        &self.info
    }

    fn compile(&self, bound: &[usize], rows: &[Vec<FeatureValue>]) -> Compiled {
        expand(&self.templates, bound, rows)
            .into_iter()
            .map(|tok| {
                tok.into_iter()
                    .filter_map(|(f, v)| self.index.get(&f).map(|&k| (k, v)))
                    .collect()
            })
            .collect()
    }

    /// Emission scores per token and the transition matrix `[prev][cur]`.
    pub fn scores(&self, columns: &[ColumnSpec], rows: &[Vec<FeatureValue>]) -> Result<Potentials> {
        let bound = self.templates.bind(columns)?;
        let c = self.compile(&bound, rows);
        Ok((
            emissions(&self.weights, &c),
            transitions(&self.weights, self.features.len(), self.templates.transitions),
        ))
    }

    /// Forward–backward marginals for one sentence.
    pub fn marginals(&self, columns: &[ColumnSpec], rows: &[Vec<FeatureValue>]) -> Result<Marginals> {
        let (emit, trans) = self.scores(columns, rows)?;
        Ok(forward_backward(&emit, &trans).marginals)
    }

    /// Marginals for every sentence of a table.
    pub fn marginals_table(&self, table: &FeatureTable) -> Result<Vec<Marginals>> {
        let bound = self.templates.bind(table.columns())?;
        let trans = transitions(&self.weights, self.features.len(), self.templates.transitions);
        Ok((0..table.n_sentences())
            .map(|i| {
                let c = self.compile(&bound, table.sentence(i));
                forward_backward(&emissions(&self.weights, &c), &trans).marginals
            })
            .collect())
    }

    pub fn decode(
        &self,
        columns: &[ColumnSpec],
        rows: &[Vec<FeatureValue>],
        threshold: f64,
    ) -> Result<ConfidenceVector> {
        let m = self.marginals(columns, rows)?;
        Ok(ConfidenceVector::from_p_good(
            m.iter().map(|p| p[0]).collect(),
            threshold,
        ))
    }
}

pub(crate) fn n_weights(n_features: usize, transitions: bool) -> usize {
    2 * n_features + if transitions { 4 } else { 0 }
}

pub(crate) fn emissions(w: &[f64], c: &Compiled) -> Vec<[f64; 2]> {
    c.iter()
        .map(|tok| {
            let mut e = [0.0; 2];
            for &(f, v) in tok {
                e[0] += v * w[2 * f as usize];
                e[1] += v * w[2 * f as usize + 1];
            }
            e
        })
        .collect()
}

pub(crate) fn transitions(w: &[f64], n_features: usize, on: bool) -> [[f64; 2]; 2] {
    if !on {
        return [[0.0; 2]; 2];
    }
    let o = 2 * n_features;
    [[w[o], w[o + 1]], [w[o + 2], w[o + 3]]]
}

fn lse2(a: f64, b: f64) -> f64 {
    let m = a.max(b);
    m + ((a - m).exp() + (b - m).exp()).ln()
}

pub(crate) struct FbResult {
    pub log_z: f64,
    pub marginals: Marginals,
    /// `pairs[t][a][b]` = P(y_{t-1} = a, y_t = b), t >= 1.
    pub pairs: Vec<[[f64; 2]; 2]>,
}

/// Log-domain forward–backward.
pub(crate) fn forward_backward(emit: &[[f64; 2]], trans: &[[f64; 2]; 2]) -> FbResult {
    let n = emit.len();
    let mut alpha = vec![[0.0; 2]; n];
    let mut beta = vec![[0.0; 2]; n];
    alpha[0] = emit[0];
    for t in 1..n {
        for y in 0..2 {
            alpha[t][y] = emit[t][y] + lse2(alpha[t - 1][0] + trans[0][y], alpha[t - 1][1] + trans[1][y]);
        }
    }
    for t in (0..n - 1).rev() {
        for y in 0..2 {
            beta[t][y] = lse2(
                trans[y][0] + emit[t + 1][0] + beta[t + 1][0],
                trans[y][1] + emit[t + 1][1] + beta[t + 1][1],
            );
        }
    }
    let log_z = lse2(alpha[n - 1][0], alpha[n - 1][1]);
    let marginals = (0..n)
        .map(|t| {
            let g = (alpha[t][0] + beta[t][0] - log_z).exp();
            let b = (alpha[t][1] + beta[t][1] - log_z).exp();
            let s = g + b;
            [g / s, b / s]
        })
        .collect();
    let mut pairs = vec![[[0.0; 2]; 2]; n];
    for t in 1..n {
        for a in 0..2 {
            for b in 0..2 {
                pairs[t][a][b] = (alpha[t - 1][a] + trans[a][b] + emit[t][b] + beta[t][b] - log_z).exp();
            }
        }
    }
    FbResult {
        log_z,
        marginals,
        pairs,
    }
}

/// B iff p_bad >= threshold.
pub fn decide(p_good: f64, threshold: f64) -> Label {
    if 1.0 - p_good >= threshold {
        Label::B
    } else {
        Label::G
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConfidenceVector {
    pub p_good: Vec<f64>,
    pub labels: Vec<Label>,
}

impl ConfidenceVector {
    pub fn from_p_good(p_good: Vec<f64>, threshold: f64) -> Self {
        let labels = p_good.iter().map(|&p| decide(p, threshold)).collect();
        ConfidenceVector { p_good, labels }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table() -> FeatureTable {
        let mut t = FeatureTable::new(vec![ColumnSpec::categorical("w"), ColumnSpec::numeric("x")]).unwrap();
        t.push_sentence(vec![
            vec![FeatureValue::cat("a"), FeatureValue::Num(0.5)],
            vec![FeatureValue::cat("b"), FeatureValue::Num(0.0)],
        ])
        .unwrap();
        t
    }

    #[test]
    fn template_expansion() {
        let t = table();
        let ts = TemplateSet::with_offsets(t.columns(), &[-1, 0]);
        let bound = ts.bind(t.columns()).unwrap();
        let e = expand(&ts, &bound, t.sentence(0));
        let names: Vec<&str> = e[0].iter().map(|f| f.0.as_str()).collect();
        assert_eq!(names, ["__bias__", "w[-1]=__BOS__", "w[0]=a", "x[0]"]);
        let names: Vec<&str> = e[1].iter().map(|f| f.0.as_str()).collect();
        // x[0] is zero on the second token and drops out
        assert_eq!(names, ["__bias__", "w[-1]=a", "w[0]=b", "x[-1]"]);
        assert_eq!(e[1][3].1, 0.5);
    }

    #[test]
    fn bind_checks_columns_and_offsets() {
        let t = table();
        let mut ts = TemplateSet::default_for(t.columns());
        ts.unigrams[0].offsets = vec![3];
        assert!(ts.bind(t.columns()).is_err());
        let mut ts = TemplateSet::default_for(t.columns());
        ts.unigrams[1].column = "nope".into();
        assert!(ts.bind(t.columns()).is_err());
    }

    #[test]
    fn single_token_is_softmax() {
        let emit = [[0.3, -1.2]];
        let fb = forward_backward(&emit, &[[0.5, 0.1], [2.0, -1.0]]);
        let z = 0.3f64.exp() + (-1.2f64).exp();
        assert!((fb.marginals[0][0] - 0.3f64.exp() / z).abs() < 1e-15);
        assert!((fb.log_z - z.ln()).abs() < 1e-15);
    }

    #[test]
    fn decision_rule() {
        assert_eq!(decide(0.5, 0.5), Label::B);
        assert_eq!(decide(0.51, 0.5), Label::G);
        assert_eq!(decide(1.0, 0.0), Label::B);
        assert_eq!(decide(0.0, 1.0), Label::B);
        assert_eq!(decide(1e-9, 1.0), Label::G);
    }
}
