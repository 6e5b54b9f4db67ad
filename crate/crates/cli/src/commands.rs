use std::collections::HashMap;
use std::fs;
use std::ops::Range;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;
use wce::crf::{decide, load_model, train, write_model_string, TemplateSet};
use wce::data::{
    open_text, read_corpus, read_feature_table, write_feature_table_string, FeatureTable, Label, QuintupletRecord, Task,
};
use wce::eval::{evaluate, label_stats, majority_baseline, sweep, sweep_csv, uniform_grid};
use wce::features::MtExtractor;
use wce::lm::BackoffLm;
use wce::pipeline::{
    check_threshold, extract_table, fuse_slt, label_corpus, predict, read_label_lines, write_label_lines, FeatureSetup,
    LabelLine, WrapperObjective,
};
use wce::projection::Strategy;
use wce::redecode::{read_lattice, rescore, Confidence};
use wce::sbs::sbs;
use wce::synth::{self, SynthConfig};
use wce::Error;

use crate::config::{Config, Format};

/// Where command output goes.
pub struct Sink(pub Option<PathBuf>);

impl Sink {
    pub fn write(&self, text: &str) -> Result<()> {
        match &self.0 {
            Some(p) => fs::write(p, text).map_err(|e| Error::Io {
                path: p.clone(),
                source: e,
            })?,
            None => print!("{text}"),
        }
        Ok(())
    }

    pub fn json<T: Serialize>(&self, value: &T) -> Result<()> {
        self.write(&(serde_json::to_string_pretty(value)? + "\n"))
    }
}

fn config_err(msg: impl Into<String>) -> anyhow::Error {
    Error::Config(msg.into()).into()
}

fn read_text(path: &Path) -> Result<String> {
    Ok(open_text(path)?)
}

/// Parses `a..b`, `a..` or `..b` as a half-open record range.
pub fn parse_range(s: &str) -> Result<Range<usize>, String> {
    let (a, b) = s.split_once("..").ok_or("expected START..END")?;
    let num = |x: &str, d: usize| -> Result<usize, String> {
        if x.is_empty() {
            Ok(d)
        } else {
            x.parse().map_err(|_| format!("`{x}` is not a record index"))
        }
    };
    let r = num(a, 0)?..num(b, usize::MAX)?;
    if r.start > r.end {
        return Err("range start is after its end".into());
    }
    Ok(r)
}

#[derive(clap::Args, Debug, Default)]
pub struct CorpusArgs {
    /// Corpus file; defaults to `corpus` from the configuration.
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Half-open record range such as `0..150`.
    #[arg(long, value_parser = parse_range)]
    pub range: Option<Range<usize>>,
}

impl CorpusArgs {
    pub fn load(&self, cfg: &Config) -> Result<Vec<QuintupletRecord>> {
        let path = self
            .corpus
            .clone()
            .or_else(|| cfg.corpus.clone())
            .ok_or_else(|| config_err("no corpus given (use --corpus or set `corpus` in the configuration)"))?;
        let format = self.format.unwrap_or(cfg.format);
        let records = read_corpus(&path, format.into()).with_context(|| format!("reading {}", path.display()))?;
        Ok(match &self.range {
            None => records,
            Some(r) => {
                if r.end != usize::MAX && r.end > records.len() {
                    return Err(Error::Validation(format!(
                        "range {}..{} exceeds the {} records",
                        r.start,
                        r.end,
                        records.len()
                    ))
                    .into());
                }
                let end = r.end.min(records.len());
                records[r.start.min(end)..end].to_vec()
            }
        })
    }
}

pub fn task_of(flag: Option<Task>, cfg: &Config) -> Result<Task> {
    flag.or(cfg.task)
        .ok_or_else(|| config_err("no task given (use --task or set `task` in the configuration)"))
}

fn threshold_of(flag: Option<f64>, cfg: &Config) -> Result<f64> {
    let t = flag.unwrap_or(cfg.threshold);
    check_threshold(t)?;
    Ok(t)
}

pub fn label(cfg: &Config, corpus: &CorpusArgs, task: Option<Task>, out: &Sink) -> Result<()> {
    let task = task_of(task, cfg)?;
    let records = corpus.load(cfg)?;
    let labels = label_corpus(&records, task, &cfg.match_resources()?, &cfg.labels.ter)?;
    let lines: Vec<LabelLine> = records
        .iter()
        .zip(labels)
        .map(|(r, labels)| LabelLine {
            id: r.id.clone(),
            labels,
            p_good: None,
        })
        .collect();
    out.write(&write_label_lines(&lines))
}

fn feature_setup(cfg: &Config, task: Task, projection: Option<Strategy>) -> Result<FeatureSetup> {
    let projection = projection.or(cfg.asr.projection).filter(|_| task == Task::Slt);
    let needs_lm = task == Task::Asr || projection.is_some();
    let asr_lm = match (&cfg.asr.lm, needs_lm) {
        (Some(p), true) => Some(BackoffLm::load_arpa(p)?),
        (None, true) => return Err(config_err("ASR features need `asr.lm` in the configuration")),
        _ => None,
    };
    let mt = match task {
        Task::Asr => None,
        _ => Some(MtExtractor::from_config(&cfg.mt, Path::new(""))?),
    };
    Ok(FeatureSetup { mt, asr_lm, projection })
}

pub fn extract(
    cfg: &Config,
    corpus: &CorpusArgs,
    task: Option<Task>,
    projection: Option<Strategy>,
    with_labels: bool,
    out: &Sink,
) -> Result<()> {
    let task = task_of(task, cfg)?;
    let records = corpus.load(cfg)?;
    let table = extract_table(&records, task, &feature_setup(cfg, task, projection)?)?;
    let labels = if with_labels {
        let per: Vec<Vec<Label>> = label_corpus(&records, task, &cfg.match_resources()?, &cfg.labels.ter)?;
        Some(per.into_iter().flatten().collect::<Vec<_>>())
    } else {
        None
    };
    log::info!(
        "extracted {} tokens in {} sentences",
        table.n_rows(),
        table.n_sentences()
    );
    out.write(&write_feature_table_string(&table, labels.as_deref())?)
}

fn labeled_table(path: &Path) -> Result<(FeatureTable, Vec<Label>)> {
    let (table, labels) = read_feature_table(path)?;
    let labels = labels.ok_or_else(|| {
        Error::Validation(format!(
            "{} has no label column (extract with --with-labels)",
            path.display()
        ))
    })?;
    Ok((table, labels))
}

fn select_columns(table: FeatureTable, columns: &Option<Vec<String>>) -> Result<FeatureTable> {
    Ok(match columns {
        Some(c) => table.select(c)?,
        None => table,
    })
}

pub fn train_cmd(cfg: &Config, features: &Path, columns: &Option<Vec<String>>, out: &Sink) -> Result<()> {
    let (table, labels) = labeled_table(features)?;
    let table = select_columns(table, columns)?;
    let templates = TemplateSet::default_for(table.columns());
    let model = train(&table, &labels, &templates, &cfg.train)?;
    let info = model.info();
    log::info!(
        "trained on {} tokens: {} iterations, objective {:.6}, converged {}",
        table.n_rows(),
        info.iterations,
        info.objective,
        info.converged
    );
    out.write(&write_model_string(&model))
}

pub fn predict_cmd(
    cfg: &Config,
    model: &Path,
    features: &Path,
    ids: Option<&Path>,
    threshold: Option<f64>,
    out: &Sink,
) -> Result<()> {
    let t = threshold_of(threshold, cfg)?;
    let model = load_model(model)?;
    let (table, _) = read_feature_table(features)?;
    let conf = predict(&model, &table, t)?;
    let ids: Vec<String> = match ids {
        Some(p) => {
            let lines = read_label_lines(&read_text(p)?)?;
            if lines.len() != conf.len() {
                return Err(Error::Validation(format!(
                    "{} has {} lines for {} sentences",
                    p.display(),
                    lines.len(),
                    conf.len()
                ))
                .into());
            }
            for (k, (l, c)) in lines.iter().zip(&conf).enumerate() {
                if l.labels.len() != c.labels.len() {
                    return Err(Error::Validation(format!(
                        "sentence {k} ({}) has {} tokens but {} labels in {}",
                        l.id,
                        c.labels.len(),
                        l.labels.len(),
                        p.display()
                    ))
                    .into());
                }
            }
            lines.into_iter().map(|l| l.id).collect()
        }
        None => (0..conf.len()).map(|i| i.to_string()).collect(),
    };
    let lines: Vec<LabelLine> = ids
        .into_iter()
        .zip(conf)
        .map(|(id, c)| LabelLine {
            id,
            labels: c.labels,
            p_good: Some(c.p_good),
        })
        .collect();
    out.write(&write_label_lines(&lines))
}

/// Pairs predictions with gold lines by id.
fn paired(pred: &Path, gold: &Path) -> Result<(Vec<LabelLine>, Vec<Label>)> {
    let pred = read_label_lines(&read_text(pred)?)?;
    let gold = read_label_lines(&read_text(gold)?)?;
    let mut by_id: HashMap<&str, &LabelLine> = HashMap::new();
    for g in &gold {
        if by_id.insert(&g.id, g).is_some() {
            return Err(Error::Validation(format!("duplicate gold id `{}`", g.id)).into());
        }
    }
    if pred.len() != gold.len() {
        return Err(Error::Validation(format!("{} predicted vs {} gold sentences", pred.len(), gold.len())).into());
    }
    let mut gold_labels = Vec::new();
    for p in &pred {
        let g = by_id
            .remove(p.id.as_str())
            .ok_or_else(|| Error::Validation(format!("prediction `{}` has no gold line", p.id)))?;
        if g.labels.len() != p.labels.len() {
            return Err(Error::Validation(format!(
                "`{}`: {} predicted vs {} gold labels",
                p.id,
                p.labels.len(),
                g.labels.len()
            ))
            .into());
        }
        gold_labels.extend_from_slice(&g.labels);
    }
    Ok((pred, gold_labels))
}

#[derive(Serialize)]
struct Evaluation {
    #[serde(flatten)]
    report: wce::eval::EvalReport,
    majority_mean_f: f64,
}

pub fn evaluate_cmd(pred: &Path, gold: &Path, out: &Sink) -> Result<()> {
    let (pred, gold) = paired(pred, gold)?;
    let labels: Vec<Label> = pred.into_iter().flat_map(|l| l.labels).collect();
    out.json(&Evaluation {
        report: evaluate(&labels, &gold)?,
        majority_mean_f: majority_baseline(&gold)?.mean_f,
    })
}

pub fn sweep_cmd(cfg: &Config, pred: &Path, gold: &Path, steps: Option<usize>, out: &Sink) -> Result<()> {
    let (pred, gold) = paired(pred, gold)?;
    let mut p = Vec::with_capacity(gold.len());
    for l in pred {
        let pg = l
            .p_good
            .ok_or_else(|| Error::Validation(format!("prediction `{}` carries no p_good", l.id)))?;
        p.extend(pg);
    }
    let steps = steps.unwrap_or(cfg.sweep.steps);
    if steps == 0 {
        return Err(config_err("--steps must be >= 1"));
    }
    out.write(&sweep_csv(&sweep(&p, &gold, &uniform_grid(steps))?))
}

pub fn fuse_cmd(
    cfg: &Config,
    corpus: &CorpusArgs,
    asr: &Path,
    mt: &Path,
    alpha: Option<f64>,
    threshold: Option<f64>,
    out: &Sink,
) -> Result<()> {
    let t = threshold_of(threshold, cfg)?;
    let mut fusion = cfg.fusion;
    if let Some(a) = alpha {
        fusion.alpha = a;
    }
    fusion.validate()?;
    let records = corpus.load(cfg)?;
    let asr = read_label_lines(&read_text(asr)?)?;
    let mt = read_label_lines(&read_text(mt)?)?;
    if asr.len() != mt.len() || asr.iter().zip(&mt).any(|(a, m)| a.id != m.id) {
        return Err(Error::Validation("ASR and MT predictions must list the same ids in the same order".into()).into());
    }
    let by_id: HashMap<&str, &QuintupletRecord> = records.iter().map(|r| (r.id.as_str(), r)).collect();
    let mut picked = Vec::with_capacity(asr.len());
    let (mut pa, mut pm) = (Vec::new(), Vec::new());
    for (a, m) in asr.iter().zip(&mt) {
        let r = by_id
            .get(a.id.as_str())
            .ok_or_else(|| Error::Validation(format!("id `{}` is not in the corpus", a.id)))?;
        picked.push((*r).clone());
        let p = |l: &LabelLine| {
            l.p_good
                .clone()
                .ok_or_else(|| Error::Validation(format!("prediction `{}` carries no p_good", l.id)))
        };
        pa.push(p(a)?);
        pm.push(p(m)?);
    }
    let fused = fuse_slt(&picked, &pa, &pm, &fusion)?;
    let lines: Vec<LabelLine> = asr
        .iter()
        .zip(fused)
        .map(|(a, p)| LabelLine {
            id: a.id.clone(),
            labels: p.iter().map(|&x| decide(x, t)).collect(),
            p_good: Some(p),
        })
        .collect();
    out.write(&write_label_lines(&lines))
}

pub fn select_cmd(
    cfg: &Config,
    train_path: &Path,
    dev_path: &Path,
    threshold: Option<f64>,
    parallel: bool,
    out: &Sink,
) -> Result<()> {
    let t = threshold_of(threshold, cfg)?;
    let (train_t, train_l) = labeled_table(train_path)?;
    let (dev_t, dev_l) = labeled_table(dev_path)?;
    let obj = WrapperObjective::new(train_t, train_l, dev_t, dev_l, cfg.train.clone(), t)?;
    let result = sbs(&obj.feature_names(), |s| obj.mean_f(s), parallel)?;
    out.json(&result)
}

fn read_confidence(path: &Path) -> Result<Confidence> {
    let text = read_text(path)?;
    let mut labels = HashMap::new();
    let mut probs = HashMap::new();
    for (k, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let parse_err = |m: &str| Error::Parse {
            line: k + 1,
            field: "confidence".into(),
            message: m.into(),
        };
        let (w, v) = line
            .split_once('\t')
            .ok_or_else(|| parse_err("expected `word<TAB>G|B|p_good`"))?;
        if let Ok(l) = v.trim().parse::<Label>() {
            labels.insert(w.to_owned(), l);
        } else {
            let p: f64 = v
                .trim()
                .parse()
                .map_err(|_| parse_err("value is neither a label nor a number"))?;
            if !(0.0..=1.0).contains(&p) {
                return Err(parse_err("probability must be in [0, 1]").into());
            }
            probs.insert(w.to_owned(), p);
        }
    }
    match (labels.is_empty(), probs.is_empty()) {
        (_, true) => Ok(Confidence::Labels(labels)),
        (true, false) => Ok(Confidence::Probabilities(probs)),
        _ => Err(Error::Validation(format!("{} mixes labels and probabilities", path.display())).into()),
    }
}

#[derive(Serialize)]
struct Rescored {
    best: wce::redecode::BestPath,
    baseline: wce::redecode::BestPath,
    changed: bool,
}

pub fn rescore_cmd(
    cfg: &Config,
    lattice: &Path,
    confidence: Option<&Path>,
    reward: Option<f64>,
    penalty: Option<f64>,
    out: &Sink,
) -> Result<()> {
    let reward = reward
        .or(cfg.rescore.reward)
        .ok_or_else(|| config_err("no reward given (use --reward or set rescore.reward)"))?;
    let penalty = penalty
        .or(cfg.rescore.penalty)
        .ok_or_else(|| config_err("no penalty given (use --penalty or set rescore.penalty)"))?;
    let lat = read_lattice(lattice)?;
    let conf = match confidence {
        Some(p) => read_confidence(p)?,
        None => Confidence::none(),
    };
    let best = rescore(&lat, &conf, reward, penalty)?;
    let baseline = rescore(&lat, &Confidence::none(), 0.0, 0.0)?;
    out.json(&Rescored {
        changed: best.edges != baseline.edges,
        best,
        baseline,
    })
}

pub fn stats_cmd(
    cfg: &Config,
    labels: Option<&Path>,
    corpus: &CorpusArgs,
    task: Option<Task>,
    text: bool,
    out: &Sink,
) -> Result<()> {
    let all: Vec<Label> = match labels {
        Some(p) => read_label_lines(&read_text(p)?)?
            .into_iter()
            .flat_map(|l| l.labels)
            .collect(),
        None => {
            let task = task_of(task, cfg)?;
            let records = corpus.load(cfg)?;
            label_corpus(&records, task, &cfg.match_resources()?, &cfg.labels.ter)?
                .into_iter()
                .flatten()
                .collect()
        }
    };
    let s = label_stats(&all)?;
    if text {
        out.write(&format!(
            "G\t{}\t{:.2}%\nB\t{}\t{:.2}%\n",
            s.n_good, s.pct_good, s.n_bad, s.pct_bad
        ))
    } else {
        out.json(&s)
    }
}

const SYNTH_CONFIG: &str = "\
corpus = \"corpus.jsonl\"
format = \"jsonl\"
threshold = 0.5

[labels]
synonyms = \"synonyms.tsv\"
paraphrases = \"paraphrases.tsv\"

[asr]
lm = \"source.arpa\"

[mt]
stoplist = \"stoplist.txt\"
polysemy_lexicon = \"polysemy.tsv\"
source_lm = \"source.arpa\"
target_lm = \"target.arpa\"
";

#[derive(Serialize)]
struct SynthSummary {
    records: usize,
    config: PathBuf,
}

pub fn synth_cmd(dir: &Path, synth_cfg: &SynthConfig, out: &Sink) -> Result<()> {
    let corpus = synth::generate(synth_cfg)?;
    corpus.write_dir(dir)?;
    let config = dir.join("wce.toml");
    fs::write(&config, SYNTH_CONFIG).map_err(|e| Error::Io {
        path: config.clone(),
        source: e,
    })?;
    out.json(&SynthSummary {
        records: corpus.records.len(),
        config,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ranges() {
        assert_eq!(parse_range("0..150").unwrap(), 0..150);
        assert_eq!(parse_range("150..").unwrap(), 150..usize::MAX);
        assert_eq!(parse_range("..3").unwrap(), 0..3);
        assert!(parse_range("5..2").is_err());
        assert!(parse_range("5").is_err());
        assert!(parse_range("a..2").is_err());
    }
}
