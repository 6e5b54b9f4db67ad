use std::collections::BTreeMap;
use std::path::Path;

use serde_json::{Map, Value};

use super::cn::{parse_slot_line, ConfusionNetwork};
use super::{Sentence, Side, Task, WordAlignment};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CorpusFormat {
    /// One JSON object per line.
    Jsonl,
    /// Blank-line separated blocks of `key<TAB>value` lines.
    Columns,
}

/// The five texts of a record.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TextField {
    FRef,
    FHyp,
    EHypMt,
    EHypSlt,
    ERef,
}

impl TextField {
    pub const ALL: [TextField; 5] = [
        TextField::FRef,
        TextField::FHyp,
        TextField::EHypMt,
        TextField::EHypSlt,
        TextField::ERef,
    ];

    pub fn name(self) -> &'static str {
        match self {
            TextField::FRef => "f_ref",
            TextField::FHyp => "f_hyp",
            TextField::EHypMt => "e_hyp_mt",
            TextField::EHypSlt => "e_hyp_slt",
            TextField::ERef => "e_ref",
        }
    }

    pub fn side(self) -> Side {
        match self {
            TextField::FRef | TextField::FHyp => Side::Source,
            _ => Side::Target,
        }
    }

    fn from_name(s: &str) -> Option<TextField> {
        TextField::ALL.into_iter().find(|f| f.name() == s)
    }
}

/// One utterance: transcript, ASR output, text translation, speech
/// translation and post-edition, plus optional evidence.
///
/// `cn_asr` has one slot per `f_hyp` token. `cn_mt`/`align_src_tgt` describe
/// the speech translation (`f_hyp` to `e_hyp_slt`); `cn_mt_ref`/`align_ref_mt`
/// describe the text translation (`f_ref` to `e_hyp_mt`).
#[derive(Clone, Debug, PartialEq)]
pub struct QuintupletRecord {
    pub id: String,
    pub f_ref: Sentence,
    pub f_hyp: Sentence,
    pub e_hyp_mt: Sentence,
    pub e_hyp_slt: Sentence,
    pub e_ref: Sentence,
    pub cn_asr: Option<ConfusionNetwork>,
    pub cn_mt: Option<ConfusionNetwork>,
    pub cn_mt_ref: Option<ConfusionNetwork>,
    pub align_src_tgt: Option<WordAlignment>,
    pub align_ref_mt: Option<WordAlignment>,
    /// Per-token annotation columns. A key `e_hyp_slt.occur_google` applies to
    /// that text only; a bare key applies to whichever text is being featurized.
    pub sidecar: BTreeMap<String, Vec<String>>,
}

/// The pieces a translation task works on.
#[derive(Clone, Copy, Debug)]
pub struct TranslationView<'a> {
    pub target_field: TextField,
    pub target: &'a Sentence,
    pub source_field: TextField,
    pub source: &'a Sentence,
    pub alignment: Option<&'a WordAlignment>,
    pub cn: Option<&'a ConfusionNetwork>,
}

impl QuintupletRecord {
    /// MT judges `e_hyp_mt` (translated from `f_ref`); SLT judges `e_hyp_slt`
    /// (translated from `f_hyp`).
    pub fn translation_view(&self, task: Task) -> Result<TranslationView<'_>> {
        match task {
            Task::Asr => Err(Error::config("the asr task has no translation side")),
            Task::Mt => Ok(TranslationView {
                target_field: TextField::EHypMt,
                target: &self.e_hyp_mt,
                source_field: TextField::FRef,
                source: &self.f_ref,
                alignment: self.align_ref_mt.as_ref(),
                cn: self.cn_mt_ref.as_ref(),
            }),
            Task::Slt => Ok(TranslationView {
                target_field: TextField::EHypSlt,
                target: &self.e_hyp_slt,
                source_field: TextField::FHyp,
                source: &self.f_hyp,
                alignment: self.align_src_tgt.as_ref(),
                cn: self.cn_mt.as_ref(),
            }),
        }
    }

    pub fn text(&self, field: TextField) -> &Sentence {
        match field {
            TextField::FRef => &self.f_ref,
            TextField::FHyp => &self.f_hyp,
            TextField::EHypMt => &self.e_hyp_mt,
            TextField::EHypSlt => &self.e_hyp_slt,
            TextField::ERef => &self.e_ref,
        }
    }

    /// Sidecar column for `name` as seen from `field`.
    pub fn sidecar_column(&self, field: TextField, name: &str) -> Option<&[String]> {
        self.sidecar
            .get(&format!("{}.{name}", field.name()))
            .or_else(|| self.sidecar.get(name))
            .map(Vec::as_slice)
    }

    pub fn validate(&self) -> Result<()> {
        for f in TextField::ALL {
            if self.text(f).is_empty() {
                return Err(Error::validation(format!(
                    "record {}: `{}` is empty",
                    self.id,
                    f.name()
                )));
            }
        }
        let ctx = |e: Error| Error::validation(format!("record {}: {e}", self.id));
        if let Some(cn) = &self.cn_asr {
            cn.validate().map_err(ctx)?;
            if cn.len() != self.f_hyp.len() {
                return Err(Error::validation(format!(
                    "record {}: cn_asr has {} slots but f_hyp has {} tokens",
                    self.id,
                    cn.len(),
                    self.f_hyp.len()
                )));
            }
        }
        for cn in [&self.cn_mt, &self.cn_mt_ref].into_iter().flatten() {
            cn.validate().map_err(ctx)?;
        }
        if let Some(a) = &self.align_src_tgt {
            a.check_bounds(self.f_hyp.len(), self.e_hyp_slt.len()).map_err(ctx)?;
        }
        if let Some(a) = &self.align_ref_mt {
            a.check_bounds(self.f_ref.len(), self.e_hyp_mt.len()).map_err(ctx)?;
        }
        Ok(())
    }
}

/// Reads a corpus file. Records come back in file order, validated.
pub fn read_corpus(path: impl AsRef<Path>, format: CorpusFormat) -> Result<Vec<QuintupletRecord>> {
    read_corpus_str(&super::open_text(path.as_ref())?, format)
}

pub fn read_corpus_str(text: &str, format: CorpusFormat) -> Result<Vec<QuintupletRecord>> {
    match format {
        CorpusFormat::Jsonl => read_jsonl(text),
        CorpusFormat::Columns => read_columns(text),
    }
}

#[derive(Default)]
struct Builder {
    id: Option<String>,
    texts: BTreeMap<TextField, String>,
    pos: BTreeMap<TextField, String>,
    stem: BTreeMap<TextField, String>,
    cn_asr: Option<ConfusionNetwork>,
    cn_mt: Option<ConfusionNetwork>,
    cn_mt_ref: Option<ConfusionNetwork>,
    align_src_tgt: Option<WordAlignment>,
    align_ref_mt: Option<WordAlignment>,
    sidecar: BTreeMap<String, Vec<String>>,
}

impl Builder {
    fn build(mut self, line: usize) -> Result<QuintupletRecord> {
        let id = self.id.take().ok_or_else(|| Error::parse(line, "id", "missing"))?;
        let mut sentence = |f: TextField| -> Result<Sentence> {
            let text = self
                .texts
                .remove(&f)
                .ok_or_else(|| Error::parse(line, f.name(), "missing"))?;
            Sentence::annotated(
                &text,
                self.pos.get(&f).map(String::as_str),
                self.stem.get(&f).map(String::as_str),
                f.side(),
            )
            .map_err(|e| Error::parse(line, f.name(), e.to_string()))
        };
        let rec = QuintupletRecord {
            f_ref: sentence(TextField::FRef)?,
            f_hyp: sentence(TextField::FHyp)?,
            e_hyp_mt: sentence(TextField::EHypMt)?,
            e_hyp_slt: sentence(TextField::EHypSlt)?,
            e_ref: sentence(TextField::ERef)?,
            id,
            cn_asr: self.cn_asr,
            cn_mt: self.cn_mt,
            cn_mt_ref: self.cn_mt_ref,
            align_src_tgt: self.align_src_tgt,
            align_ref_mt: self.align_ref_mt,
            sidecar: self.sidecar,
        };
        rec.validate()
            .map_err(|e| Error::parse(line, "record", e.to_string()))?;
        Ok(rec)
    }
}

fn json_str<'a>(v: &'a Value, line: usize, field: &str) -> Result<&'a str> {
    v.as_str().ok_or_else(|| Error::parse(line, field, "expected a string"))
}

fn json_cn(v: &Value, line: usize, field: &str) -> Result<ConfusionNetwork> {
    let cn: ConfusionNetwork =
        serde_json::from_value(v.clone()).map_err(|e| Error::parse(line, field, e.to_string()))?;
    cn.validate().map_err(|e| Error::parse(line, field, e.to_string()))?;
    Ok(cn)
}

fn json_layer(v: &Value, line: usize, field: &str) -> Result<BTreeMap<TextField, String>> {
    let obj = v
        .as_object()
        .ok_or_else(|| Error::parse(line, field, "expected an object"))?;
    let mut out = BTreeMap::new();
    for (k, v) in obj {
        let f = TextField::from_name(k).ok_or_else(|| Error::parse(line, field, format!("unknown text `{k}`")))?;
        out.insert(f, json_str(v, line, &format!("{field}.{k}"))?.to_owned());
    }
    Ok(out)
}

fn sidecar_value(v: &Value, line: usize, field: &str) -> Result<String> {
    match v {
        Value::String(s) if !s.is_empty() && !s.chars().any(char::is_whitespace) => Ok(s.clone()),
        Value::Number(n) => Ok(n.to_string()),
        Value::Bool(b) => Ok(if *b { "1" } else { "0" }.to_owned()),
        _ => Err(Error::parse(
            line,
            field,
            "sidecar values must be non-empty tokens, numbers or booleans",
        )),
    }
}

fn read_jsonl(text: &str) -> Result<Vec<QuintupletRecord>> {
    let mut out = Vec::new();
    for (k, raw) in text.lines().enumerate() {
        let line = k + 1;
        if raw.trim().is_empty() {
            continue;
        }
        let value: Value = serde_json::from_str(raw).map_err(|e| Error::parse(line, "json", e.to_string()))?;
        let obj = value
            .as_object()
            .ok_or_else(|| Error::parse(line, "json", "expected an object"))?;
        let mut b = Builder::default();
        for (key, v) in obj {
            match key.as_str() {
                "id" => b.id = Some(json_str(v, line, key)?.to_owned()),
                "pos" => b.pos = json_layer(v, line, key)?,
                "stem" => b.stem = json_layer(v, line, key)?,
                "cn_asr" => b.cn_asr = Some(json_cn(v, line, key)?),
                "cn_mt" => b.cn_mt = Some(json_cn(v, line, key)?),
                "cn_mt_ref" => b.cn_mt_ref = Some(json_cn(v, line, key)?),
                "align_src_tgt" | "align_ref_mt" => {
                    let a = WordAlignment::parse(json_str(v, line, key)?)
                        .map_err(|e| Error::parse(line, key, e.to_string()))?;
                    if key == "align_src_tgt" {
                        b.align_src_tgt = Some(a);
                    } else {
                        b.align_ref_mt = Some(a);
                    }
                }
                "sidecar" => {
                    let cols = v
                        .as_object()
                        .ok_or_else(|| Error::parse(line, key, "expected an object"))?;
                    for (name, col) in cols {
                        let field = format!("sidecar.{name}");
                        let arr = col
                            .as_array()
                            .ok_or_else(|| Error::parse(line, &field, "expected an array"))?;
                        let vals = arr
                            .iter()
                            .map(|v| sidecar_value(v, line, &field))
                            .collect::<Result<Vec<_>>>()?;
                        b.sidecar.insert(name.clone(), vals);
                    }
                }
                other => match TextField::from_name(other) {
                    Some(f) => {
                        b.texts.insert(f, json_str(v, line, key)?.to_owned());
                    }
                    None => return Err(Error::parse(line, other, "unknown field")),
                },
            }
        }
        out.push(b.build(line)?);
    }
    Ok(out)
}

fn read_columns(text: &str) -> Result<Vec<QuintupletRecord>> {
    let mut out = Vec::new();
    let mut cur: Option<(Builder, usize)> = None;
    let mut slots: BTreeMap<&str, Vec<super::Slot>> = BTreeMap::new();

    fn flush(
        cur: &mut Option<(Builder, usize)>,
        slots: &mut BTreeMap<&str, Vec<super::Slot>>,
        out: &mut Vec<QuintupletRecord>,
    ) -> Result<()> {
        if let Some((mut b, start)) = cur.take() {
            for (key, s) in std::mem::take(slots) {
                let cn = ConfusionNetwork::new(s).map_err(|e| Error::parse(start, key, e.to_string()))?;
                match key {
                    "cn_asr" => b.cn_asr = Some(cn),
                    "cn_mt" => b.cn_mt = Some(cn),
                    _ => b.cn_mt_ref = Some(cn),
                }
            }
            out.push(b.build(start)?);
        }
        Ok(())
    }

    for (k, raw) in text.lines().enumerate() {
        let line = k + 1;
        if raw.trim().is_empty() {
            flush(&mut cur, &mut slots, &mut out)?;
            continue;
        }
        let (b, _) = cur.get_or_insert_with(|| (Builder::default(), line));
        let (key, value) = raw
            .split_once('\t')
            .ok_or_else(|| Error::parse(line, "line", "expected `key<TAB>value`"))?;
        match key {
            "id" => b.id = Some(value.to_owned()),
            "cn_asr" | "cn_mt" | "cn_mt_ref" => {
                let key: &str = match key {
                    "cn_asr" => "cn_asr",
                    "cn_mt" => "cn_mt",
                    _ => "cn_mt_ref",
                };
                slots.entry(key).or_default().push(parse_slot_line(value, line)?);
            }
            "align_src_tgt" | "align_ref_mt" => {
                let a = WordAlignment::parse(value).map_err(|e| Error::parse(line, key, e.to_string()))?;
                if key == "align_src_tgt" {
                    b.align_src_tgt = Some(a);
                } else {
                    b.align_ref_mt = Some(a);
                }
            }
            _ => {
                if let Some(f) = TextField::from_name(key) {
                    b.texts.insert(f, value.to_owned());
                } else if let Some(rest) = key.strip_prefix("pos.") {
                    let f = TextField::from_name(rest).ok_or_else(|| Error::parse(line, key, "unknown text"))?;
                    b.pos.insert(f, value.to_owned());
                } else if let Some(rest) = key.strip_prefix("stem.") {
                    let f = TextField::from_name(rest).ok_or_else(|| Error::parse(line, key, "unknown text"))?;
                    b.stem.insert(f, value.to_owned());
                } else if let Some(name) = key.strip_prefix("sidecar.") {
                    b.sidecar
                        .insert(name.to_owned(), value.split_whitespace().map(str::to_owned).collect());
                } else {
                    return Err(Error::parse(line, key, "unknown field"));
                }
            }
        }
    }
    flush(&mut cur, &mut slots, &mut out)?;
    Ok(out)
}

fn record_to_json(r: &QuintupletRecord) -> Value {
    let mut obj = Map::new();
    obj.insert("id".into(), Value::String(r.id.clone()));
    let mut pos = Map::new();
    let mut stem = Map::new();
    for f in TextField::ALL {
        let s = r.text(f);
        obj.insert(f.name().into(), Value::String(s.text()));
        if let Some(p) = s.pos_text() {
            pos.insert(f.name().into(), Value::String(p));
        }
        if let Some(st) = s.stem_text() {
            stem.insert(f.name().into(), Value::String(st));
        }
    }
    if !pos.is_empty() {
        obj.insert("pos".into(), Value::Object(pos));
    }
    if !stem.is_empty() {
        obj.insert("stem".into(), Value::Object(stem));
    }
    for (key, cn) in [("cn_asr", &r.cn_asr), ("cn_mt", &r.cn_mt), ("cn_mt_ref", &r.cn_mt_ref)] {
        if let Some(cn) = cn {
            obj.insert(key.into(), serde_json::to_value(cn).expect("serializable"));
        }
    }
    for (key, a) in [("align_src_tgt", &r.align_src_tgt), ("align_ref_mt", &r.align_ref_mt)] {
        if let Some(a) = a {
            obj.insert(key.into(), Value::String(a.to_string()));
        }
    }
    if !r.sidecar.is_empty() {
        let cols = r
            .sidecar
            .iter()
            .map(|(k, v)| (k.clone(), Value::Array(v.iter().cloned().map(Value::String).collect())))
            .collect();
        obj.insert("sidecar".into(), Value::Object(cols));
    }
    Value::Object(obj)
}

/// Serializes records as JSON Lines (keys sorted, one record per line).
pub fn write_corpus_jsonl(records: &[QuintupletRecord]) -> String {
    let mut out = String::new();
    for r in records {
        out.push_str(&record_to_json(r).to_string());
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const BRAIN_RECORD: &str = r#"{"id":"brain","f_ref":"quand notre cerveau chauffe","f_hyp":"comme notre cerveau chauffe","e_hyp_mt":"when our brains chauffe","e_hyp_slt":"as our brains chauffe","e_ref":"when our brain heats up"}"#;

    #[test]
    fn reads_one_quintuplet() {
        let recs = read_corpus_str(BRAIN_RECORD, CorpusFormat::Jsonl).unwrap();
        assert_eq!(recs.len(), 1);
        assert_eq!(recs[0].f_hyp.len(), 4);
        assert_eq!(recs[0].e_ref.len(), 5);
    }

    #[test]
    fn empty_input_gives_no_records() {
        assert!(read_corpus_str("", CorpusFormat::Jsonl).unwrap().is_empty());
        assert!(read_corpus_str("", CorpusFormat::Columns).unwrap().is_empty());
    }

    #[test]
    fn bad_posterior_sum_is_reported_with_slot() {
        let line = r#"{"id":"x","f_ref":"a","f_hyp":"a","e_hyp_mt":"b","e_hyp_slt":"b","e_ref":"b","cn_asr":[{"start":0,"dur":0.1,"alts":[["a",0.5],["c",0.3]]}]}"#;
        let err = read_corpus_str(line, CorpusFormat::Jsonl).unwrap_err().to_string();
        assert!(err.contains("slot 0") && err.contains("line 1"), "{err}");
    }

    #[test]
    fn malformed_line_names_line_and_field() {
        let text = format!("{BRAIN_RECORD}\n{{\"id\":\"y\",\"f_ref\":3}}\n");
        let err = read_corpus_str(&text, CorpusFormat::Jsonl).unwrap_err();
        match err {
            Error::Parse { line, field, .. } => {
                assert_eq!(line, 2);
                assert_eq!(field, "f_ref");
            }
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn cn_length_must_match_hypothesis() {
        let line = r#"{"id":"x","f_ref":"a b","f_hyp":"a b","e_hyp_mt":"b","e_hyp_slt":"b","e_ref":"b","cn_asr":[{"start":0,"dur":0.1,"alts":[["a",1.0]]}]}"#;
        assert!(read_corpus_str(line, CorpusFormat::Jsonl).is_err());
    }

    #[test]
    fn columns_format_matches_jsonl() {
        let cols = "id\tbrain\nf_ref\tquand notre cerveau chauffe\nf_hyp\tcomme notre cerveau chauffe\n\
e_hyp_mt\twhen our brains chauffe\ne_hyp_slt\tas our brains chauffe\ne_ref\twhen our brain heats up\n\n";
        assert_eq!(
            read_corpus_str(cols, CorpusFormat::Columns).unwrap(),
            read_corpus_str(BRAIN_RECORD, CorpusFormat::Jsonl).unwrap()
        );
    }

    #[test]
    fn jsonl_round_trip_with_everything() {
        let line = r#"{"id":"x","f_ref":"a b","f_hyp":"a c","e_hyp_mt":"u v","e_hyp_slt":"u w","e_ref":"u v",
"pos":{"f_hyp":"D N"},"stem":{"e_hyp_slt":"u w"},
"cn_asr":[{"start":0,"dur":0.1,"alts":[["a",0.75],["e",0.25]]},{"start":0.1,"dur":0.2,"alts":[["c",1.0]]}],
"align_src_tgt":"0-0 1-1","sidecar":{"occur_google":[1,0],"e_hyp_slt.constituent":["NP","VP"]}}"#
            .replace('\n', "");
        let recs = read_corpus_str(&line, CorpusFormat::Jsonl).unwrap();
        let again = read_corpus_str(&write_corpus_jsonl(&recs), CorpusFormat::Jsonl).unwrap();
        assert_eq!(recs, again);
        assert_eq!(
            recs[0].sidecar_column(TextField::EHypSlt, "constituent").unwrap(),
            ["NP".to_string(), "VP".to_string()]
        );
        assert_eq!(
            recs[0].sidecar_column(TextField::EHypMt, "occur_google").unwrap()[0],
            "1"
        );
    }
}
