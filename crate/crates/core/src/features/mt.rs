use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::data::{
    open_text, ColumnKind, ColumnSpec, FeatureTable, FeatureValue, QuintupletRecord, Task, TranslationView,
};
use crate::error::{Error, Result};
use crate::lm::{BackoffLm, BOS};

use super::{BOUNDARY_END, BOUNDARY_START};

/// Value of a disabled categorical feature.
pub const OFF: &str = "__off__";
/// Value of a source-dependent feature on an unaligned target token.
pub const NULL: &str = "__null__";

macro_rules! mt_features {
    ($($var:ident => $name:literal, $kind:ident;)*) => {
        /// The 24 translation-side features, in table order.
        #[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
        pub enum MtFeature { $($var),* }

        impl MtFeature {
            pub const ALL: [MtFeature; 24] = [$(MtFeature::$var),*];

            pub fn name(self) -> &'static str {
                match self { $(MtFeature::$var => $name),* }
            }

            pub fn kind(self) -> ColumnKind {
                match self { $(MtFeature::$var => ColumnKind::$kind),* }
            }
        }
    };
}

mt_features! {
    ProperName => "proper_name", Numeric;
    UnknownStem => "unknown_stem", Numeric;
    NumWordOcc => "num_word_occ", Numeric;
    NumStemOcc => "num_stem_occ", Numeric;
    PolysemyCountTgt => "polysemy_count_tgt", Numeric;
    BackoffBehaviourTgt => "backoff_behaviour_tgt", Numeric;
    AlignmentFeats => "alignment_feats", Categorical;
    OccurGoogle => "occur_google", Numeric;
    OccurBing => "occur_bing", Numeric;
    StopWord => "stop_word", Numeric;
    WordCtxAlign => "word_ctx_align", Categorical;
    PosCtxAlign => "pos_ctx_align", Categorical;
    StemCtxAlign => "stem_ctx_align", Categorical;
    LongestTgtNgram => "longest_tgt_ngram", Numeric;
    LongestSrcNgram => "longest_src_ngram", Numeric;
    WppExact => "wpp_exact", Numeric;
    WppAny => "wpp_any", Numeric;
    WppMin => "wpp_min", Numeric;
    WppMax => "wpp_max", Numeric;
    Nodes => "nodes", Numeric;
    ConstituentLabel => "constituent_label", Categorical;
    DistToRoot => "dist_to_root", Numeric;
    Numeral => "numeric", Numeric;
    Punctuation => "punctuation", Numeric;
}

impl fmt::Display for MtFeature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for MtFeature {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        MtFeature::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| Error::config(format!("unknown MT feature `{s}`")))
    }
}

/// Feature toggles and resource paths.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MtFeatureConfig {
    /// Enabled feature names; all 24 by default.
    pub enabled: Vec<String>,
    pub stoplist: Option<PathBuf>,
    pub polysemy_lexicon: Option<PathBuf>,
    pub source_lm: Option<PathBuf>,
    pub target_lm: Option<PathBuf>,
    /// Read the external-MT occurrence features from the sidecar.
    pub external_mt: bool,
}

impl Default for MtFeatureConfig {
    fn default() -> Self {
        MtFeatureConfig {
            enabled: MtFeature::ALL.iter().map(|f| f.name().to_owned()).collect(),
            stoplist: None,
            polysemy_lexicon: None,
            source_lm: None,
            target_lm: None,
            external_mt: true,
        }
    }
}

impl MtFeatureConfig {
    pub fn enabled_set(&self) -> Result<BTreeSet<MtFeature>> {
        let mut set = self
            .enabled
            .iter()
            .map(|n| n.parse())
            .collect::<Result<BTreeSet<MtFeature>>>()?;
        if !self.external_mt {
            set.remove(&MtFeature::OccurGoogle);
            set.remove(&MtFeature::OccurBing);
        }
        Ok(set)
    }
}

/// Loaded resources for MT feature extraction.
#[derive(Clone, Debug, Default)]
pub struct MtResources {
    pub stoplist: Option<HashSet<String>>,
    pub polysemy: Option<HashMap<String, f64>>,
    pub source_lm: Option<BackoffLm>,
    pub target_lm: Option<BackoffLm>,
}

impl MtResources {
    /// Loads every resource named in `cfg`, resolving relative paths against `base`.
    pub fn load(cfg: &MtFeatureConfig, base: &Path) -> Result<Self> {
        let resolve = |p: &PathBuf| base.join(p);
        Ok(MtResources {
            stoplist: cfg
                .stoplist
                .as_ref()
                .map(|p| open_text(&resolve(p)).map(|t| parse_stoplist(&t)))
                .transpose()?,
            polysemy: cfg
                .polysemy_lexicon
                .as_ref()
                .map(|p| open_text(&resolve(p)).and_then(|t| parse_polysemy(&t)))
                .transpose()?,
            source_lm: cfg
                .source_lm
                .as_ref()
                .map(|p| BackoffLm::load_arpa(resolve(p)))
                .transpose()?,
            target_lm: cfg
                .target_lm
                .as_ref()
                .map(|p| BackoffLm::load_arpa(resolve(p)))
                .transpose()?,
        })
    }
}

pub fn parse_stoplist(text: &str) -> HashSet<String> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(str::to_owned)
        .collect()
}

/// `word<TAB>count` lines.
pub fn parse_polysemy(text: &str) -> Result<HashMap<String, f64>> {
    let mut out = HashMap::new();
    for (k, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let (w, c) = line
            .split_once('\t')
            .ok_or_else(|| Error::parse(k + 1, "polysemy", "expected `word<TAB>count`"))?;
        let c: f64 = c
            .trim()
            .parse()
            .ok()
            .filter(|c: &f64| c.is_finite() && *c >= 0.0)
            .ok_or_else(|| Error::parse(k + 1, "count", format!("`{c}` is not a non-negative number")))?;
        out.insert(w.to_owned(), c);
    }
    Ok(out)
}

/// Sidecar column names read by the extractor.
const SC_PROPER_NAME: &str = "proper_name";
const SC_POLYSEMY: &str = "polysemy_count";
const SC_GOOGLE: &str = "occur_google";
const SC_BING: &str = "occur_bing";
const SC_CONSTITUENT: &str = "constituent_label";
const SC_DEPTH: &str = "dist_to_root";

#[derive(Clone, Debug)]
pub struct MtExtractor {
    enabled: BTreeSet<MtFeature>,
    res: MtResources,
}

impl MtExtractor {
    /// Fails if an enabled feature lacks a resource it needs.
    pub fn new(enabled: BTreeSet<MtFeature>, res: MtResources) -> Result<Self> {
        use MtFeature::*;
        for f in &enabled {
            let missing = match f {
                StopWord if res.stoplist.is_none() => Some("a stoplist"),
                UnknownStem | LongestSrcNgram if res.source_lm.is_none() => Some("a source LM"),
                BackoffBehaviourTgt | LongestTgtNgram if res.target_lm.is_none() => Some("a target LM"),
                _ => None,
            };
            if let Some(what) = missing {
                return Err(Error::config(format!(
                    "feature `{f}` is enabled but no {what} is configured"
                )));
            }
        }
        Ok(MtExtractor { enabled, res })
    }

    pub fn from_config(cfg: &MtFeatureConfig, base: &Path) -> Result<Self> {
        let enabled = cfg.enabled_set()?;
        MtExtractor::new(enabled, MtResources::load(cfg, base)?)
    }

    pub fn enabled(&self) -> &BTreeSet<MtFeature> {
        &self.enabled
    }

    /// Categorical columns are always present; disabled numeric columns are omitted.
    pub fn columns(&self) -> Vec<ColumnSpec> {
        MtFeature::ALL
            .iter()
            .filter(|f| f.kind() == ColumnKind::Categorical || self.enabled.contains(f))
            .map(|f| ColumnSpec {
                name: f.name().to_owned(),
                kind: f.kind(),
            })
            .collect()
    }

    fn on(&self, f: MtFeature) -> bool {
        self.enabled.contains(&f)
    }

    /// Checks that a record carries what the enabled features read from it.
    pub fn check_record(&self, record: &QuintupletRecord, task: Task) -> Result<()> {
        use MtFeature::*;
        let view = record.translation_view(task)?;
        let n = view.target.len();
        let err = |m: String| Error::validation(format!("record {}: {m}", record.id));
        let needs_align = [
            AlignmentFeats,
            WordCtxAlign,
            PosCtxAlign,
            StemCtxAlign,
            UnknownStem,
            LongestSrcNgram,
        ];
        if view.alignment.is_none() && needs_align.iter().any(|&f| self.on(f)) {
            return Err(err(format!("alignment for `{}` is missing", view.target_field.name())));
        }
        if self.on(PosCtxAlign) && !(view.target.has_pos() && view.source.has_pos()) {
            return Err(err("pos_ctx_align needs POS tags on source and target".into()));
        }
        if [WppExact, WppAny, WppMin, WppMax, Nodes].iter().any(|&f| self.on(f)) {
            match view.cn {
                None => {
                    return Err(err(format!(
                        "MT confusion network for `{}` is missing",
                        view.target_field.name()
                    )))
                }
                Some(cn) if cn.len() != n => {
                    return Err(err(format!(
                        "MT confusion network has {} slots for {n} tokens",
                        cn.len()
                    )))
                }
                _ => {}
            }
        }
        let mut sidecar = vec![];
        if self.on(OccurGoogle) {
            sidecar.push(SC_GOOGLE);
        }
        if self.on(OccurBing) {
            sidecar.push(SC_BING);
        }
        if self.on(ConstituentLabel) {
            sidecar.push(SC_CONSTITUENT);
        }
        if self.on(DistToRoot) {
            sidecar.push(SC_DEPTH);
        }
        if self.on(PolysemyCountTgt) && self.res.polysemy.is_none() {
            sidecar.push(SC_POLYSEMY);
        }
        for name in sidecar {
            match record.sidecar_column(view.target_field, name) {
                None => return Err(err(format!("sidecar column `{name}` is missing"))),
                Some(c) if c.len() != n => {
                    return Err(err(format!(
                        "sidecar column `{name}` has {} values for {n} tokens",
                        c.len()
                    )))
                }
                _ => {}
            }
        }
        if let Some(c) = record.sidecar_column(view.target_field, SC_PROPER_NAME) {
            if c.len() != n {
                return Err(err(format!(
                    "sidecar column `{SC_PROPER_NAME}` has {} values for {n} tokens",
                    c.len()
                )));
            }
        }
        Ok(())
    }

    /// One row per target token, in `columns()` order.
    pub fn extract(&self, record: &QuintupletRecord, task: Task) -> Result<Vec<Vec<FeatureValue>>> {
        self.check_record(record, task)?;
        let view = record.translation_view(task)?;
        let ctx = Ctx::new(record, &view)?;
        let cols = self.columns();
        let mut rows = Vec::with_capacity(view.target.len());
        for i in 0..view.target.len() {
            let mut row = Vec::with_capacity(cols.len());
            for f in MtFeature::ALL {
                let on = self.on(f);
                match f.kind() {
                    ColumnKind::Categorical if !on => row.push(FeatureValue::cat(OFF)),
                    ColumnKind::Numeric if !on => {}
                    _ => row.push(self.value(f, i, &ctx, &view)?),
                }
            }
            rows.push(row);
        }
        Ok(rows)
    }

    fn value(&self, f: MtFeature, i: usize, c: &Ctx<'_>, v: &TranslationView<'_>) -> Result<FeatureValue> {
        use MtFeature::*;
        let tgt = &v.target.tokens()[i];
        let src = c.aligned[i];
        let num = |x: f64| Ok(FeatureValue::Num(x));
        match f {
            ProperName => match c.sidecar(SC_PROPER_NAME) {
                Some(col) => num(parse_bool(&col[i], SC_PROPER_NAME)?),
                None => num(flag(
                    i > 0 && tgt.surface.chars().next().is_some_and(char::is_uppercase),
                )),
            },
            UnknownStem => match src {
                Some(s) => {
                    let stem = v.source.tokens()[s].stem_or_surface();
                    num(flag(!self.res.source_lm.as_ref().unwrap().contains(stem)))
                }
                None => num(0.0),
            },
            NumWordOcc => num(v.target.tokens().iter().filter(|t| t.surface == tgt.surface).count() as f64),
            NumStemOcc => {
                let stem = tgt.stem_or_surface();
                num(v.target.tokens().iter().filter(|t| t.stem_or_surface() == stem).count() as f64)
            }
            PolysemyCountTgt => match &self.res.polysemy {
                Some(lex) => num(lex.get(&tgt.surface).copied().unwrap_or(0.0)),
                None => num(parse_num(&c.sidecar(SC_POLYSEMY).unwrap()[i], SC_POLYSEMY)?),
            },
            BackoffBehaviourTgt => {
                let lm = self.res.target_lm.as_ref().unwrap();
                let words = &c.tgt_words;
                let mut ctx: Vec<&str> = words[i.saturating_sub(2)..i].to_vec();
                if i < 2 && lm.contains(BOS) {
                    ctx.insert(0, BOS);
                }
                num(lm.query(&ctx, &tgt.surface).backoff_level as f64)
            }
            AlignmentFeats => Ok(FeatureValue::cat(match src {
                Some(s) => {
                    let w = &c.tgt_words;
                    join4(c.src_words[s], around(w, i, -1), &tgt.surface, around(w, i, 1))
                }
                None => NULL.to_owned(),
            })),
            OccurGoogle => num(parse_bool(&c.sidecar(SC_GOOGLE).unwrap()[i], SC_GOOGLE)?),
            OccurBing => num(parse_bool(&c.sidecar(SC_BING).unwrap()[i], SC_BING)?),
            StopWord => num(flag(self.res.stoplist.as_ref().unwrap().contains(&tgt.surface))),
            WordCtxAlign => Ok(FeatureValue::cat(source_context(&tgt.surface, src, &c.src_words))),
            PosCtxAlign => {
                let src_pos: Vec<&str> = v.source.tokens().iter().map(|t| t.pos.as_deref().unwrap()).collect();
                Ok(FeatureValue::cat(source_context(
                    tgt.pos.as_deref().unwrap(),
                    src,
                    &src_pos,
                )))
            }
            StemCtxAlign => {
                let src_stem: Vec<&str> = v.source.tokens().iter().map(|t| t.stem_or_surface()).collect();
                Ok(FeatureValue::cat(source_context(tgt.stem_or_surface(), src, &src_stem)))
            }
            LongestTgtNgram => num(self.res.target_lm.as_ref().unwrap().longest_match(&c.tgt_words, i) as f64),
            LongestSrcNgram => match src {
                Some(s) => num(self.res.source_lm.as_ref().unwrap().longest_match(&c.src_words, s) as f64),
                None => num(0.0),
            },
            WppExact => num(c.slot(i).posterior_of(&tgt.surface).unwrap_or(0.0)),
            WppAny => num(wpp_any(v, &tgt.surface)),
            WppMin => num(c.slot(i).min_posterior()),
            WppMax => num(c.slot(i).max_posterior()),
            Nodes => num(c.slot(i).alternatives.len() as f64),
            ConstituentLabel => Ok(FeatureValue::cat(sanitize(&c.sidecar(SC_CONSTITUENT).unwrap()[i]))),
            DistToRoot => num(parse_num(&c.sidecar(SC_DEPTH).unwrap()[i], SC_DEPTH)?),
            Numeral => num(flag(is_numeric(&tgt.surface))),
            Punctuation => num(flag(is_punctuation(&tgt.surface))),
        }
    }
}

/// Extracts a whole corpus for one translation task. Every record is checked
/// before any row is produced.
pub fn extract_mt_table(ex: &MtExtractor, records: &[QuintupletRecord], task: Task) -> Result<FeatureTable> {
    for r in records {
        ex.check_record(r, task)?;
    }
    let mut t = FeatureTable::new(ex.columns())?;
    for r in records {
        t.push_sentence(ex.extract(r, task)?)?;
    }
    Ok(t)
}

struct Ctx<'a> {
    record: &'a QuintupletRecord,
    view: TranslationView<'a>,
    tgt_words: Vec<&'a str>,
    src_words: Vec<&'a str>,
    /// Left-most aligned source index per target token.
    aligned: Vec<Option<usize>>,
}

impl<'a> Ctx<'a> {
    fn new(record: &'a QuintupletRecord, view: &TranslationView<'a>) -> Result<Self> {
        let n = view.target.len();
        let aligned = match view.alignment {
            Some(a) => {
                a.check_bounds(view.source.len(), n)?;
                (0..n).map(|j| a.sources_of(j).first().copied()).collect()
            }
            None => vec![None; n],
        };
        Ok(Ctx {
            record,
            view: *view,
            tgt_words: view.target.surfaces(),
            src_words: view.source.surfaces(),
            aligned,
        })
    }

    fn sidecar(&self, name: &str) -> Option<&'a [String]> {
        self.record.sidecar_column(self.view.target_field, name)
    }

    fn slot(&self, i: usize) -> &'a crate::data::Slot {
        &self.view.cn.expect("checked").slots()[i]
    }
}

fn flag(b: bool) -> f64 {
    if b {
        1.0
    } else {
        0.0
    }
}

fn around<'s>(words: &[&'s str], i: usize, d: isize) -> &'s str {
    match i.checked_add_signed(d) {
        Some(k) if k < words.len() => words[k],
        _ if d < 0 => BOUNDARY_START,
        _ => BOUNDARY_END,
    }
}

fn join4(a: &str, b: &str, c: &str, d: &str) -> String {
    format!("{a}|{b}|{c}|{d}")
}

/// `target|source_prev|source|source_next`, or the null sentinel.
fn source_context(tgt: &str, src: Option<usize>, src_layer: &[&str]) -> String {
    match src {
        Some(s) => join4(tgt, around(src_layer, s, -1), src_layer[s], around(src_layer, s, 1)),
        None => NULL.to_owned(),
    }
}

fn wpp_any(v: &TranslationView<'_>, word: &str) -> f64 {
    v.cn.unwrap()
        .slots()
        .iter()
        .filter_map(|s| s.posterior_of(word))
        .fold(0.0, f64::max)
}

fn parse_bool(s: &str, col: &str) -> Result<f64> {
    match s {
        "1" | "true" | "True" | "yes" => Ok(1.0),
        "0" | "false" | "False" | "no" => Ok(0.0),
        _ => Err(Error::validation(format!("sidecar `{col}`: `{s}` is not a boolean"))),
    }
}

fn parse_num(s: &str, col: &str) -> Result<f64> {
    s.parse::<f64>()
        .ok()
        .filter(|x| x.is_finite())
        .ok_or_else(|| Error::validation(format!("sidecar `{col}`: `{s}` is not a number")))
}

fn sanitize(s: &str) -> String {
    if s.is_empty() {
        NULL.to_owned()
    } else {
        s.replace(['\t', '\n', '\r'], " ")
    }
}

fn is_numeric(w: &str) -> bool {
    w.chars().any(|c| c.is_ascii_digit()) && w.chars().all(|c| c.is_ascii_digit() || ".,:/-+%".contains(c))
}

fn is_punctuation(w: &str) -> bool {
    w.chars().all(|c| c.is_ascii_punctuation() || "«»“”‘’…–—¿¡".contains(c))
}
