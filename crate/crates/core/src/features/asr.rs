use crate::data::{ColumnSpec, ConfusionNetwork, FeatureTable, FeatureValue, Sentence};
use crate::error::{Error, Result};
use crate::lm::{BackoffLm, BOS};

use super::{BOUNDARY_END, BOUNDARY_START};

pub const ASR_FEATURES: [&str; 9] = [
    "f_word",
    "f_3g",
    "f_log",
    "f_back",
    "f_alt",
    "f_post",
    "f_dur",
    "f_pos",
    "f_context",
];

/// The nine ASR features of one hypothesis word.
///
/// `f_back` is kept as a real so projected vectors can carry averages.
#[derive(Clone, Debug, PartialEq)]
pub struct AsrFeatureVector {
    pub f_word: String,
    pub f_3g: f64,
    pub f_log: f64,
    pub f_back: f64,
    pub f_alt: usize,
    pub f_post: f64,
    pub f_dur: f64,
    pub f_pos: String,
    /// (pos of previous word, word, pos of next word)
    pub f_context: [String; 3],
}

impl AsrFeatureVector {
    pub fn context_string(&self) -> String {
        self.f_context.join("|")
    }

    pub fn to_row(&self) -> Vec<FeatureValue> {
        vec![
            FeatureValue::cat(&self.f_word),
            FeatureValue::Num(self.f_3g),
            FeatureValue::Num(self.f_log),
            FeatureValue::Num(self.f_back),
            FeatureValue::Num(self.f_alt as f64),
            FeatureValue::Num(self.f_post),
            FeatureValue::Num(self.f_dur),
            FeatureValue::cat(&self.f_pos),
            FeatureValue::cat(self.context_string()),
        ]
    }
}

pub fn asr_columns() -> Vec<ColumnSpec> {
    ASR_FEATURES
        .iter()
        .map(|&n| match n {
            "f_word" | "f_pos" | "f_context" => ColumnSpec::categorical(n),
            _ => ColumnSpec::numeric(n),
        })
        .collect()
}

/// Stacks per-sentence vectors into a feature table.
pub fn asr_table(sentences: &[Vec<AsrFeatureVector>]) -> Result<FeatureTable> {
    let mut t = FeatureTable::new(asr_columns())?;
    for s in sentences {
        t.push_sentence(s.iter().map(AsrFeatureVector::to_row).collect())?;
    }
    Ok(t)
}

pub fn extract_asr_features(sent: &Sentence, cn: &ConfusionNetwork, lm: &BackoffLm) -> Result<Vec<AsrFeatureVector>> {
    if !sent.has_pos() {
        return Err(Error::validation("ASR features need POS tags on the hypothesis"));
    }
    if cn.len() != sent.len() {
        return Err(Error::validation(format!(
            "confusion network has {} slots for {} words",
            cn.len(),
            sent.len()
        )));
    }
    let words = sent.surfaces();
    let pos: Vec<&str> = sent
        .tokens()
        .iter()
        .map(|t| t.pos.as_deref().unwrap_or_default())
        .collect();
    let pad = lm.contains(BOS);
    let mut out = Vec::with_capacity(words.len());
    for (i, (w, slot)) in words.iter().zip(cn.slots()).enumerate() {
        let f_post = slot.posterior_of(w).ok_or_else(|| {
            Error::validation(format!(
                "slot {i}: hypothesis word `{w}` is not among the slot's alternatives"
            ))
        })?;
        let mut ctx: Vec<&str> = words[i.saturating_sub(2)..i].to_vec();
        if pad && ctx.len() < 2 && i < 2 {
            ctx.insert(0, BOS);
        }
        let tri = lm.query(&ctx, w);
        let uni = lm.query(&[], w);
        let prev = if i == 0 { BOUNDARY_START } else { pos[i - 1] };
        let next = pos.get(i + 1).copied().unwrap_or(BOUNDARY_END);
        out.push(AsrFeatureVector {
            f_word: (*w).to_owned(),
            f_3g: tri.log10_prob,
            f_log: uni.log10_prob,
            f_back: tri.backoff_level as f64,
            f_alt: slot.alternatives.len(),
            f_post,
            f_dur: slot.duration,
            f_pos: pos[i].to_owned(),
            f_context: [prev.to_owned(), (*w).to_owned(), next.to_owned()],
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{Side, Slot};

    const LM: &str = "\\data\\
ngram 1=5
ngram 2=2
ngram 3=1

\\1-grams:
-1.0 <s> -0.5
-0.6 comme -0.25
-0.8 notre -0.2
-0.9 cerveau
-1.2 chauffe

\\2-grams:
-0.3 <s> comme -0.1
-0.4 comme notre

\\3-grams:
-0.2 <s> comme notre

\\end\\
";

    fn slot(alts: &[(&str, f64)], dur: f64) -> Slot {
        Slot {
            start: 0.0,
            duration: dur,
            alternatives: alts.iter().map(|&(w, p)| (w.to_owned(), p)).collect(),
        }
    }

    fn fixture() -> (Sentence, ConfusionNetwork, BackoffLm) {
        let s = Sentence::annotated("comme notre cerveau", Some("CSU DET NOM"), None, Side::Source).unwrap();
        let cn = ConfusionNetwork::new(vec![
            slot(&[("comme", 0.6), ("quand", 0.3), ("qu'", 0.1)], 0.21),
            slot(&[("notre", 1.0)], 0.15),
            slot(&[("cerveau", 0.8), ("serveur", 0.2)], 0.4),
        ])
        .unwrap();
        (s, cn, BackoffLm::parse_arpa(LM).unwrap())
    }

    #[test]
    fn slot_read_off() {
        let (s, cn, lm) = fixture();
        let f = extract_asr_features(&s, &cn, &lm).unwrap();
        assert_eq!(f.len(), 3);
        assert_eq!((f[0].f_alt, f[0].f_post, f[0].f_dur), (3, 0.6, 0.21));
        assert_eq!(f[0].f_context, ["<s>", "comme", "DET"].map(String::from));
        assert_eq!(f[2].f_context, ["DET", "cerveau", "</s>"].map(String::from));
        assert_eq!(f[1].f_pos, "DET");
    }

    #[test]
    fn lm_features_follow_back_off_chain() {
        let (s, cn, lm) = fixture();
        let f = extract_asr_features(&s, &cn, &lm).unwrap();
        // (<s>) comme: bigram listed
        assert_eq!((f[0].f_3g, f[0].f_back), (-0.3, 0.0));
        assert_eq!(f[0].f_log, -0.6);
        // <s> comme notre: trigram listed
        assert_eq!((f[1].f_3g, f[1].f_back), (-0.2, 0.0));
        // comme notre cerveau: no trigram, no bigram (notre cerveau):
        // bow(comme notre) absent, bow(notre) = -0.2, P(cerveau) = -0.9
        assert!((f[2].f_3g - (-0.2 + -0.9)).abs() < 1e-12);
        assert_eq!(f[2].f_back, 2.0);
    }

    #[test]
    fn word_missing_from_its_slot_names_the_slot() {
        let (s, _, lm) = fixture();
        let cn = ConfusionNetwork::new(vec![
            slot(&[("comme", 1.0)], 0.1),
            slot(&[("votre", 1.0)], 0.1),
            slot(&[("cerveau", 1.0)], 0.1),
        ])
        .unwrap();
        let err = extract_asr_features(&s, &cn, &lm).unwrap_err().to_string();
        assert!(err.contains("slot 1"), "{err}");
    }

    #[test]
    fn requires_pos_and_matching_lengths() {
        let (_, cn, lm) = fixture();
        let bare = Sentence::from_text("comme notre cerveau", Side::Source).unwrap();
        assert!(extract_asr_features(&bare, &cn, &lm).is_err());
        let short = Sentence::annotated("comme notre", Some("CSU DET"), None, Side::Source).unwrap();
        assert!(extract_asr_features(&short, &cn, &lm).is_err());
    }

    #[test]
    fn table_columns_match_rows() {
        let (s, cn, lm) = fixture();
        let f = extract_asr_features(&s, &cn, &lm).unwrap();
        let t = asr_table(&[f]).unwrap();
        assert_eq!(t.n_rows(), 3);
        assert_eq!(t.rows()[0][8].as_cat(), Some("<s>|comme|DET"));
    }
}
