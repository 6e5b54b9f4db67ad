//! Carrying source-side ASR features and confidences over to target tokens
//! through the word alignment.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::data::WordAlignment;
use crate::error::{Error, Result};
use crate::features::{AsrFeatureVector, BOUNDARY_END, BOUNDARY_START, NULL};
use crate::lm::{BackoffLm, DEFAULT_UNK_FLOOR};

/// How symbolic features are merged when a target token has several
/// aligned source words.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    /// First aligned source word.
    #[default]
    Joint1,
    /// Last aligned source word.
    Joint2,
    /// All aligned source words joined by `_`.
    Joint3,
}

impl Strategy {
    pub fn as_str(self) -> &'static str {
        match self {
            Strategy::Joint1 => "joint1",
            Strategy::Joint2 => "joint2",
            Strategy::Joint3 => "joint3",
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "joint1" => Ok(Strategy::Joint1),
            "joint2" => Ok(Strategy::Joint2),
            "joint3" => Ok(Strategy::Joint3),
            _ => Err(Error::config(format!("unknown projection strategy `{s}`"))),
        }
    }
}

/// Values for an unaligned first target token.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NeutralDefaults {
    pub floor_log10: f64,
    pub lm_order: usize,
}

impl NeutralDefaults {
    pub fn from_lm(lm: &BackoffLm) -> Self {
        NeutralDefaults {
            floor_log10: lm.unk_floor(),
            lm_order: lm.order(),
        }
    }

    pub fn vector(&self) -> AsrFeatureVector {
        AsrFeatureVector {
            f_word: NULL.to_owned(),
            f_3g: self.floor_log10,
            f_log: self.floor_log10,
            f_back: self.lm_order.saturating_sub(1) as f64,
            f_alt: 1,
            f_post: 0.5,
            f_dur: 0.0,
            f_pos: NULL.to_owned(),
            f_context: [NULL.to_owned(), NULL.to_owned(), NULL.to_owned()],
        }
    }
}

impl Default for NeutralDefaults {
    fn default() -> Self {
        NeutralDefaults {
            floor_log10: DEFAULT_UNK_FLOOR,
            lm_order: 3,
        }
    }
}

fn mean(xs: impl Iterator<Item = f64>) -> f64 {
    let (s, n) = xs.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    s / n as f64
}

fn merge(src: &[AsrFeatureVector], idx: &[usize], strategy: Strategy) -> AsrFeatureVector {
    if let [k] = idx {
        return src[*k].clone();
    }
    let pick = |f: fn(&AsrFeatureVector) -> &str| match strategy {
        Strategy::Joint1 => f(&src[idx[0]]).to_owned(),
        Strategy::Joint2 => f(&src[*idx.last().unwrap()]).to_owned(),
        Strategy::Joint3 => idx.iter().map(|&k| f(&src[k])).collect::<Vec<_>>().join("_"),
    };
    let f_word = pick(|v| &v.f_word);
    let (first, last) = (idx[0], *idx.last().unwrap());
    let before = if first == 0 {
        BOUNDARY_START.to_owned()
    } else {
        src[first - 1].f_pos.clone()
    };
    let after = src.get(last + 1).map_or(BOUNDARY_END.to_owned(), |v| v.f_pos.clone());
    AsrFeatureVector {
        f_3g: idx.iter().map(|&k| src[k].f_3g).fold(f64::NEG_INFINITY, f64::max),
        f_log: mean(idx.iter().map(|&k| src[k].f_log)),
        f_back: mean(idx.iter().map(|&k| src[k].f_back)),
        f_alt: idx.iter().map(|&k| src[k].f_alt).max().unwrap(),
        f_post: mean(idx.iter().map(|&k| src[k].f_post)),
        f_dur: idx.iter().map(|&k| src[k].f_dur).fold(f64::NEG_INFINITY, f64::max),
        f_pos: pick(|v| &v.f_pos),
        f_context: [before, f_word.clone(), after],
        f_word,
    }
}

fn check(align: &WordAlignment, src_len: usize, tgt_len: usize) -> Result<()> {
    if tgt_len == 0 {
        return Err(Error::validation("cannot project onto an empty target"));
    }
    align.check_bounds(src_len, tgt_len)
}

/// Projects per-source-word ASR features onto `tgt_len` target tokens.
pub fn project_asr_features(
    tgt_len: usize,
    align: &WordAlignment,
    src_feats: &[AsrFeatureVector],
    strategy: Strategy,
    neutral: &NeutralDefaults,
) -> Result<Vec<AsrFeatureVector>> {
    check(align, src_feats.len(), tgt_len)?;
    let mut out: Vec<AsrFeatureVector> = Vec::with_capacity(tgt_len);
    for j in 0..tgt_len {
        let idx = align.sources_of(j);
        let v = if !idx.is_empty() {
            merge(src_feats, &idx, strategy)
        } else if let Some(prev) = out.last() {
            prev.clone()
        } else {
            neutral.vector()
        };
        out.push(v);
    }
    Ok(out)
}

/// Projects per-source-word confidences (p_good) onto target tokens: mean
/// over aligned source words, previous target value when unaligned, 0.5 for
/// an unaligned first token.
pub fn project_confidence(tgt_len: usize, align: &WordAlignment, src_conf: &[f64]) -> Result<Vec<f64>> {
    check(align, src_conf.len(), tgt_len)?;
    if let Some(p) = src_conf.iter().find(|p| !(0.0..=1.0).contains(*p)) {
        return Err(Error::validation(format!("source confidence {p} is outside [0, 1]")));
    }
    let mut out: Vec<f64> = Vec::with_capacity(tgt_len);
    for j in 0..tgt_len {
        let idx = align.sources_of(j);
        let v = if !idx.is_empty() {
            mean(idx.iter().map(|&k| src_conf[k]))
        } else {
            out.last().copied().unwrap_or(0.5)
        };
        out.push(v);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(word: &str, pos: &str, post: f64, dur: f64) -> AsrFeatureVector {
        AsrFeatureVector {
            f_word: word.into(),
            f_3g: -post,
            f_log: -dur,
            f_back: 1.0,
            f_alt: 2,
            f_post: post,
            f_dur: dur,
            f_pos: pos.into(),
            f_context: ["<s>".into(), word.into(), "</s>".into()],
        }
    }

    fn src() -> Vec<AsrFeatureVector> {
        vec![v("le", "DET", 0.8, 0.10), v("chat", "NOM", 0.4, 0.30)]
    }

    #[test]
    fn many_to_one_strategies() {
        let a = WordAlignment::parse("0-0 1-0").unwrap();
        let d = NeutralDefaults::default();
        let j1 = project_asr_features(1, &a, &src(), Strategy::Joint1, &d).unwrap();
        assert!((j1[0].f_post - 0.6).abs() < 1e-12);
        assert_eq!(j1[0].f_dur, 0.30);
        assert_eq!(j1[0].f_word, "le");
        assert_eq!(j1[0].f_context, ["<s>", "le", "</s>"].map(String::from));
        let j2 = project_asr_features(1, &a, &src(), Strategy::Joint2, &d).unwrap();
        assert_eq!((j2[0].f_word.as_str(), j2[0].f_pos.as_str()), ("chat", "NOM"));
        let j3 = project_asr_features(1, &a, &src(), Strategy::Joint3, &d).unwrap();
        assert_eq!((j3[0].f_word.as_str(), j3[0].f_pos.as_str()), ("le_chat", "DET_NOM"));
        assert_eq!(j3[0].f_3g, -0.4);
        assert_eq!(
            (j1[0].f_3g, j1[0].f_log, j1[0].f_alt),
            (j3[0].f_3g, j3[0].f_log, j3[0].f_alt)
        );
    }

    #[test]
    fn identity_copies() {
        let a = WordAlignment::identity(2);
        for s in [Strategy::Joint1, Strategy::Joint2, Strategy::Joint3] {
            assert_eq!(
                project_asr_features(2, &a, &src(), s, &NeutralDefaults::default()).unwrap(),
                src()
            );
        }
    }

    #[test]
    fn unaligned_tokens_duplicate_previous() {
        let a = WordAlignment::parse("0-1 1-2").unwrap();
        let d = NeutralDefaults {
            floor_log10: -7.0,
            lm_order: 3,
        };
        let p = project_asr_features(4, &a, &src(), Strategy::Joint1, &d).unwrap();
        assert_eq!(p[0], d.vector());
        assert_eq!((p[0].f_post, p[0].f_alt, p[0].f_back, p[0].f_3g), (0.5, 1, 2.0, -7.0));
        assert_eq!(p[3], p[2]);
        assert_eq!(p[1], src()[0]);
    }

    #[test]
    fn confidence_rules() {
        let a = WordAlignment::parse("0-1 1-1").unwrap();
        let c = project_confidence(3, &a, &[0.9, 0.5]).unwrap();
        assert_eq!(c[0], 0.5);
        assert!((c[1] - 0.7).abs() < 1e-12);
        assert_eq!(c[2], c[1]);
        assert_eq!(
            project_confidence(2, &WordAlignment::identity(2), &[0.25, 1.0]).unwrap(),
            [0.25, 1.0]
        );
        assert!(project_confidence(2, &WordAlignment::identity(2), &[0.25, 1.5]).is_err());
        assert!(project_confidence(1, &WordAlignment::identity(2), &[0.2, 0.3]).is_err());
    }

    #[test]
    fn strategy_names() {
        for s in [Strategy::Joint1, Strategy::Joint2, Strategy::Joint3] {
            assert_eq!(s.as_str().parse::<Strategy>().unwrap(), s);
        }
    }
}
