use std::collections::{HashMap, HashSet};
use std::path::Path;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum StemSource {
    /// Compare the `stem` annotation of tokens when both carry one.
    #[default]
    TokenStemColumn,
    Disabled,
}

/// A reference-side rewrite of a hypothesis phrase, with an optional
/// table-supplied cost.
#[derive(Clone, Debug, PartialEq)]
pub struct Paraphrase {
    pub target: Vec<String>,
    pub cost: Option<f64>,
}

/// Relaxed-match knowledge: synonym pairs, a paraphrase table and the stem
/// policy.
#[derive(Clone, Debug, Default)]
pub struct MatchResources {
    synonyms: HashSet<(String, String)>,
    paraphrases: HashMap<Vec<String>, Vec<Paraphrase>>,
    pub stem_source: StemSource,
}

fn ordered(a: &str, b: &str) -> (String, String) {
    if a <= b {
        (a.to_owned(), b.to_owned())
    } else {
        (b.to_owned(), a.to_owned())
    }
}

impl MatchResources {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_synonym(&mut self, a: &str, b: &str) {
        self.synonyms.insert(ordered(a, b));
    }

    pub fn are_synonyms(&self, a: &str, b: &str) -> bool {
        a != b && self.synonyms.contains(&ordered(a, b))
    }

    pub fn add_paraphrase(&mut self, hyp: &str, reference: &str, cost: Option<f64>) -> Result<()> {
        let h: Vec<String> = hyp.split_whitespace().map(str::to_owned).collect();
        let r: Vec<String> = reference.split_whitespace().map(str::to_owned).collect();
        if h.is_empty() || r.is_empty() {
            return Err(Error::validation("paraphrase phrases must be non-empty"));
        }
        if let Some(c) = cost {
            if !(c.is_finite() && c >= 0.0) {
                return Err(Error::validation(format!(
                    "paraphrase cost {c} must be finite and >= 0"
                )));
            }
        }
        self.paraphrases
            .entry(h)
            .or_default()
            .push(Paraphrase { target: r, cost });
        Ok(())
    }

    pub fn paraphrases(&self) -> impl Iterator<Item = (&[String], &Paraphrase)> {
        self.paraphrases
            .iter()
            .flat_map(|(h, ps)| ps.iter().map(move |p| (h.as_slice(), p)))
    }

    pub fn n_synonyms(&self) -> usize {
        self.synonyms.len()
    }

    /// `w1<TAB>w2` per line.
    pub fn parse_synonyms(&mut self, text: &str) -> Result<()> {
        for (k, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let (a, b) = line
                .split_once('\t')
                .ok_or_else(|| Error::parse(k + 1, "synonym", "expected `w1<TAB>w2`"))?;
            let (a, b) = (a.trim(), b.trim());
            if a.is_empty() || b.is_empty() {
                return Err(Error::parse(k + 1, "synonym", "empty word"));
            }
            self.add_synonym(a, b);
        }
        Ok(())
    }

    /// `hyp phrase<TAB>ref phrase[<TAB>cost]` per line.
    pub fn parse_paraphrases(&mut self, text: &str) -> Result<()> {
        for (k, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let parts: Vec<&str> = line.split('\t').collect();
            if !(2..=3).contains(&parts.len()) {
                return Err(Error::parse(
                    k + 1,
                    "paraphrase",
                    "expected 2 or 3 tab-separated fields",
                ));
            }
            let cost = match parts.get(2) {
                Some(c) if !c.trim().is_empty() => Some(
                    c.trim()
                        .parse::<f64>()
                        .map_err(|_| Error::parse(k + 1, "cost", format!("`{c}` is not a number")))?,
                ),
                _ => None,
            };
            self.add_paraphrase(parts[0], parts[1], cost)
                .map_err(|e| Error::parse(k + 1, "paraphrase", e.to_string()))?;
        }
        Ok(())
    }

    pub fn load_synonyms(&mut self, path: impl AsRef<Path>) -> Result<()> {
        self.parse_synonyms(&crate::data::open_text(path.as_ref())?)
    }

    pub fn load_paraphrases(&mut self, path: impl AsRef<Path>) -> Result<()> {
        self.parse_paraphrases(&crate::data::open_text(path.as_ref())?)
    }
}
