use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::optim::{minimize_lbfgs, LbfgsConfig};
use super::{
    emissions, expand, forward_backward, n_weights, transitions, Compiled, CrfModel, TemplateSet, TrainingInfo,
};
use crate::data::{FeatureTable, FeatureValue, Label};
use crate::error::{Error, Result};

/// Sentences per parallel work unit. Partial sums are reduced in chunk order,
/// so results do not depend on the thread count.
const CHUNK: usize = 16;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub l2_sigma2: f64,
    pub max_iters: usize,
    pub tol: f64,
    pub lbfgs_memory: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            l2_sigma2: 1.0,
            max_iters: 200,
            tol: 1e-5,
            lbfgs_memory: 10,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.l2_sigma2.is_finite() && self.l2_sigma2 > 0.0) {
            return Err(Error::config("l2_sigma2 must be finite and > 0"));
        }
        if !(self.tol.is_finite() && self.tol >= 0.0) {
            return Err(Error::config("tol must be finite and >= 0"));
        }
        Ok(())
    }
}

/// The penalized negative log-likelihood of a labeled table.
pub struct CrfProblem {
    templates: TemplateSet,
    features: Vec<String>,
    sentences: Vec<(Compiled, Vec<usize>)>,
    sigma2: f64,
}

impl CrfProblem {
    pub fn new(table: &FeatureTable, labels: &[Label], templates: &TemplateSet, l2_sigma2: f64) -> Result<Self> {
        if table.n_sentences() == 0 {
            return Err(Error::validation("training data is empty"));
        }
        if labels.len() != table.n_rows() {
            return Err(Error::validation(format!(
                "{} labels for {} rows: every row needs a label",
                labels.len(),
                table.n_rows()
            )));
        }
        if let Some(r) = table
            .rows()
            .iter()
            .position(|row| row.iter().any(|v| matches!(v, FeatureValue::Num(x) if !x.is_finite())))
        {
            return Err(Error::validation(format!("row {r} has a non-finite numeric feature")));
        }
        if !(l2_sigma2.is_finite() && l2_sigma2 > 0.0) {
            return Err(Error::config("l2_sigma2 must be finite and > 0"));
        }
        let bound = templates.bind(table.columns())?;
        let mut index: HashMap<String, u32> = HashMap::new();
        let mut features = Vec::new();
        let mut sentences = Vec::with_capacity(table.n_sentences());
        for i in 0..table.n_sentences() {
            let compiled: Compiled = expand(templates, &bound, table.sentence(i))
                .into_iter()
                .map(|tok| {
                    tok.into_iter()
                        .map(|(f, v)| {
                            let next = index.len() as u32;
                            let k = *index.entry(f).or_insert_with_key(|f| {
                                features.push(f.clone());
                                next
                            });
                            (k, v)
                        })
                        .collect()
                })
                .collect();
            let gold = labels[table.sentence_range(i)].iter().map(|l| l.index()).collect();
            sentences.push((compiled, gold));
        }
        Ok(CrfProblem {
            templates: templates.clone(),
            features,
            sentences,
            sigma2: l2_sigma2,
        })
    }

    pub fn n_weights(&self) -> usize {
        n_weights(self.features.len(), self.templates.transitions)
    }

    pub fn features(&self) -> &[String] {
        &self.features
    }

    /// Objective and gradient at `w`.
    pub fn value_and_gradient(&self, w: &[f64]) -> (f64, Vec<f64>) {
        let nf = self.features.len();
        let on = self.templates.transitions;
        let trans = transitions(w, nf, on);
        let partials: Vec<(f64, Vec<f64>)> = self
            .sentences
            .par_chunks(CHUNK)
            .map(|chunk| {
                let mut f = 0.0;
                let mut g = vec![0.0; w.len()];
                for (c, gold) in chunk {
                    f += sentence_nll(w, nf, on, &trans, c, gold, &mut g);
                }
                (f, g)
            })
            .collect();
        let mut f = 0.0;
        let mut g = vec![0.0; w.len()];
        for (pf, pg) in partials {
            f += pf;
            for (a, b) in g.iter_mut().zip(pg) {
                *a += b;
            }
        }
        for (gi, wi) in g.iter_mut().zip(w) {
            f += wi * wi / (2.0 * self.sigma2);
            *gi += wi / self.sigma2;
        }
        (f, g)
    }
}

fn sentence_nll(
    w: &[f64],
    nf: usize,
    on: bool,
    trans: &[[f64; 2]; 2],
    c: &Compiled,
    gold: &[usize],
    g: &mut [f64],
) -> f64 {
    let emit = emissions(w, c);
    let fb = forward_backward(&emit, trans);
    let mut score = 0.0;
    for (t, tok) in c.iter().enumerate() {
        score += emit[t][gold[t]];
        for &(f, v) in tok {
            let k = 2 * f as usize;
            g[k] += v * fb.marginals[t][0];
            g[k + 1] += v * fb.marginals[t][1];
            g[k + gold[t]] -= v;
        }
    }
    if on {
        let o = 2 * nf;
        for t in 1..c.len() {
            score += trans[gold[t - 1]][gold[t]];
            for a in 0..2 {
                for b in 0..2 {
                    g[o + 2 * a + b] += fb.pairs[t][a][b];
                }
            }
            g[o + 2 * gold[t - 1] + gold[t]] -= 1.0;
        }
    }
    fb.log_z - score
}

pub fn train(table: &FeatureTable, labels: &[Label], templates: &TemplateSet, cfg: &TrainConfig) -> Result<CrfModel> {
    train_with_init(table, labels, templates, cfg, None)
}

/// Training from a given starting point (zero weights when `init` is None).
pub fn train_with_init(
    table: &FeatureTable,
    labels: &[Label],
    templates: &TemplateSet,
    cfg: &TrainConfig,
    init: Option<&[f64]>,
) -> Result<CrfModel> {
    cfg.validate()?;
    let problem = CrfProblem::new(table, labels, templates, cfg.l2_sigma2)?;
    let x0 = match init {
        Some(w) if w.len() != problem.n_weights() => {
            return Err(Error::config(format!(
                "initial point has {} weights, the problem has {}",
                w.len(),
                problem.n_weights()
            )))
        }
        Some(w) => w.to_vec(),
        None => vec![0.0; problem.n_weights()],
    };
    let report = minimize_lbfgs(
        |w| {
            let (f, g) = problem.value_and_gradient(w);
            if f.is_finite() {
                Ok((f, g))
            } else {
                Err(Error::Numeric("objective became non-finite".into()))
            }
        },
        x0,
        &LbfgsConfig {
            memory: cfg.lbfgs_memory,
            max_iters: cfg.max_iters,
            tol: cfg.tol,
            ..LbfgsConfig::default()
        },
    )?;
    log::info!(
        "crf: {} features, {} iterations, objective {:.6}, |grad| {:.3e}",
        problem.features.len(),
        report.iterations,
        report.f,
        report.grad_norm
    );
    CrfModel::from_parts(
        problem.templates.clone(),
        problem.features.clone(),
        report.x,
        TrainingInfo {
            l2_sigma2: cfg.l2_sigma2,
            iterations: report.iterations,
            objective: report.f,
            grad_norm: report.grad_norm,
            converged: report.converged,
        },
    )
}
