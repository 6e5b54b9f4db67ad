//! Glue between the stages: per-task reference labels, task feature tables,
//! batch prediction, ASR/MT score fusion on the speech translation output,
//! and the wrapper objective used by feature selection.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::align::{align_ter_shift, align_wer, MatchResources, TerConfig};
use crate::crf::{train, ConfidenceVector, CrfModel, TemplateSet, TrainConfig};
use crate::data::{FeatureTable, Label, QuintupletRecord, Task};
use crate::error::{Error, Result};
use crate::eval::{evaluate, majority_baseline};
use crate::features::{asr_columns, extract_asr_features, AsrFeatureVector, MtExtractor};
use crate::fusion::{combine_posteriors, FusionConfig};
use crate::lm::BackoffLm;
use crate::projection::{project_asr_features, project_confidence, NeutralDefaults, Strategy};

/// Reference labels of the task's hypothesis: WER against the transcript for
/// ASR, shift-aware alignment against the post-edition for MT and SLT.
pub fn task_labels(record: &QuintupletRecord, task: Task, res: &MatchResources, ter: &TerConfig) -> Result<Vec<Label>> {
    let ctx = |e: Error| match e {
        Error::Validation(m) => Error::Validation(format!("record {}: {m}", record.id)),
        e => e,
    };
    match task {
        Task::Asr => align_wer(&record.f_hyp, &record.f_ref).map(|a| a.labels).map_err(ctx),
        Task::Mt => align_ter_shift(&record.e_hyp_mt, &record.e_ref, res, ter)
            .map(|a| a.labels())
            .map_err(ctx),
        Task::Slt => align_ter_shift(&record.e_hyp_slt, &record.e_ref, res, ter)
            .map(|a| a.labels())
            .map_err(ctx),
    }
}

/// Labels every record, in corpus order.
pub fn label_corpus(
    records: &[QuintupletRecord],
    task: Task,
    res: &MatchResources,
    ter: &TerConfig,
) -> Result<Vec<Vec<Label>>> {
    records.par_iter().map(|r| task_labels(r, task, res, ter)).collect()
}

/// What feature extraction needs for a task.
#[derive(Clone, Debug, Default)]
pub struct FeatureSetup {
    /// MT and SLT tasks.
    pub mt: Option<MtExtractor>,
    /// LM over transcripts; ASR features and projected ASR features.
    pub asr_lm: Option<BackoffLm>,
    /// Adds ASR features projected onto the SLT output.
    pub projection: Option<Strategy>,
}

fn record_asr_features(r: &QuintupletRecord, lm: &BackoffLm) -> Result<Vec<AsrFeatureVector>> {
    let cn = r
        .cn_asr
        .as_ref()
        .ok_or_else(|| Error::validation(format!("record {}: cn_asr is missing", r.id)))?;
    extract_asr_features(&r.f_hyp, cn, lm).map_err(|e| Error::validation(format!("record {}: {e}", r.id)))
}

fn asr_lm(setup: &FeatureSetup) -> Result<&BackoffLm> {
    setup
        .asr_lm
        .as_ref()
        .ok_or_else(|| Error::config("ASR features need an LM over transcripts"))
}

/// One sentence per record: `f_hyp` for ASR, `e_hyp_mt` for MT, `e_hyp_slt`
/// for SLT.
pub fn extract_table(records: &[QuintupletRecord], task: Task, setup: &FeatureSetup) -> Result<FeatureTable> {
    if records.is_empty() {
        return Err(Error::validation("no records to featurize"));
    }
    match task {
        Task::Asr => {
            let lm = asr_lm(setup)?;
            let rows: Vec<Vec<AsrFeatureVector>> = records
                .par_iter()
                .map(|r| record_asr_features(r, lm))
                .collect::<Result<_>>()?;
            crate::features::asr_table(&rows)
        }
        Task::Mt | Task::Slt => {
            let ex = setup
                .mt
                .as_ref()
                .ok_or_else(|| Error::config("MT features need an MT feature configuration"))?;
            for r in records {
                ex.check_record(r, task)?;
            }
            let rows: Vec<_> = records.par_iter().map(|r| ex.extract(r, task)).collect::<Result<_>>()?;
            let mut table = FeatureTable::new(ex.columns())?;
            for s in rows {
                table.push_sentence(s)?;
            }
            match (task, setup.projection) {
                (Task::Slt, Some(strategy)) => table.hstack(&projected_table(records, setup, strategy)?),
                (Task::Mt, Some(_)) => Err(Error::config("ASR feature projection applies to the slt task only")),
                _ => Ok(table),
            }
        }
    }
}

fn projected_table(records: &[QuintupletRecord], setup: &FeatureSetup, strategy: Strategy) -> Result<FeatureTable> {
    let lm = asr_lm(setup)?;
    let neutral = NeutralDefaults::from_lm(lm);
    let rows: Vec<Vec<AsrFeatureVector>> = records
        .par_iter()
        .map(|r| {
            let src = record_asr_features(r, lm)?;
            let align = r
                .align_src_tgt
                .as_ref()
                .ok_or_else(|| Error::validation(format!("record {}: align_src_tgt is missing", r.id)))?;
            project_asr_features(r.e_hyp_slt.len(), align, &src, strategy, &neutral)
        })
        .collect::<Result<_>>()?;
    let mut t = FeatureTable::new(asr_columns())?;
    for s in rows {
        t.push_sentence(s.iter().map(AsrFeatureVector::to_row).collect())?;
    }
    Ok(t)
}

/// Posterior decoding of every sentence of `table`.
pub fn predict(model: &CrfModel, table: &FeatureTable, threshold: f64) -> Result<Vec<ConfidenceVector>> {
    check_threshold(threshold)?;
    Ok(model
        .marginals_table(table)?
        .into_iter()
        .map(|m| ConfidenceVector::from_p_good(m.iter().map(|p| p[0]).collect(), threshold))
        .collect())
}

pub fn check_threshold(t: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::config(format!("threshold must be in [0, 1], got {t}")));
    }
    Ok(())
}

/// Projects ASR-side confidences of `f_hyp` onto `e_hyp_slt` and fuses them
/// with the MT-side confidences of `e_hyp_slt`, record by record.
pub fn fuse_slt(
    records: &[QuintupletRecord],
    p_asr_src: &[Vec<f64>],
    p_mt: &[Vec<f64>],
    cfg: &FusionConfig,
) -> Result<Vec<Vec<f64>>> {
    cfg.validate()?;
    if records.len() != p_asr_src.len() || records.len() != p_mt.len() {
        return Err(Error::validation(format!(
            "{} records, {} ASR predictions, {} MT predictions",
            records.len(),
            p_asr_src.len(),
            p_mt.len()
        )));
    }
    records
        .iter()
        .zip(p_asr_src.iter().zip(p_mt))
        .map(|(r, (a, m))| {
            let ctx = |e: Error| Error::validation(format!("record {}: {e}", r.id));
            let align = r
                .align_src_tgt
                .as_ref()
                .ok_or_else(|| ctx(Error::validation("align_src_tgt is missing")))?;
            if a.len() != r.f_hyp.len() {
                return Err(ctx(Error::validation(format!(
                    "{} ASR confidences for {} f_hyp tokens",
                    a.len(),
                    r.f_hyp.len()
                ))));
            }
            let projected = project_confidence(r.e_hyp_slt.len(), align, a).map_err(ctx)?;
            combine_posteriors(&projected, m, cfg).map_err(ctx)
        })
        .collect()
}

/// Labels of one utterance, as written by `label` and `predict`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LabelLine {
    pub id: String,
    pub labels: Vec<Label>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p_good: Option<Vec<f64>>,
}

pub fn write_label_lines(lines: &[LabelLine]) -> String {
    lines
        .iter()
        .map(|l| serde_json::to_string(l).expect("serializable") + "\n")
        .collect()
}

pub fn read_label_lines(text: &str) -> Result<Vec<LabelLine>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(k, l)| {
            let line: LabelLine = serde_json::from_str(l).map_err(|e| Error::parse(k + 1, "json", e.to_string()))?;
            if let Some(p) = &line.p_good {
                if p.len() != line.labels.len() {
                    return Err(Error::parse(k + 1, "p_good", "length differs from labels"));
                }
                if p.iter().any(|x| !(0.0..=1.0).contains(x)) {
                    return Err(Error::parse(k + 1, "p_good", "values must be in [0, 1]"));
                }
            }
            Ok(line)
        })
        .collect()
}

/// Train/selection split used as the feature-selection objective: the mean F
/// on the selection split of a labeler trained on the training split with
/// only the given columns. The empty subset scores the majority-class
/// predictor on the selection split.
#[derive(Clone, Debug)]
pub struct WrapperObjective {
    pub train: FeatureTable,
    pub train_labels: Vec<Label>,
    pub dev: FeatureTable,
    pub dev_labels: Vec<Label>,
    pub config: TrainConfig,
    pub threshold: f64,
}

impl WrapperObjective {
    pub fn new(
        train: FeatureTable,
        train_labels: Vec<Label>,
        dev: FeatureTable,
        dev_labels: Vec<Label>,
        config: TrainConfig,
        threshold: f64,
    ) -> Result<Self> {
        check_threshold(threshold)?;
        config.validate()?;
        if train.columns() != dev.columns() {
            return Err(Error::validation(
                "training and selection tables have different columns",
            ));
        }
        if train.n_rows() != train_labels.len() || dev.n_rows() != dev_labels.len() {
            return Err(Error::validation("label count does not match table rows"));
        }
        Ok(WrapperObjective {
            train,
            train_labels,
            dev,
            dev_labels,
            config,
            threshold,
        })
    }

    pub fn feature_names(&self) -> Vec<String> {
        self.train.columns().iter().map(|c| c.name.clone()).collect()
    }

    pub fn mean_f(&self, subset: &[String]) -> Result<f64> {
        if subset.is_empty() {
            return Ok(majority_baseline(&self.dev_labels)?.mean_f);
        }
        let train_t = self.train.select(subset)?;
        let dev_t = self.dev.select(subset)?;
        let templates = TemplateSet::default_for(train_t.columns());
        let model = train(&train_t, &self.train_labels, &templates, &self.config)?;
        let pred: Vec<Label> = predict(&model, &dev_t, self.threshold)?
            .into_iter()
            .flat_map(|c| c.labels)
            .collect();
        Ok(evaluate(&pred, &self.dev_labels)?.mean_f)
    }
}
