//! Domain types shared by every stage of the toolkit, plus the readers and
//! writers for the corpus, confusion-network, alignment and feature-table
//! formats.

mod alignment;
mod cn;
mod corpus;
mod table;

use std::fmt;
use std::fs::File;
use std::io::{BufReader, Read};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use alignment::WordAlignment;
pub use cn::{read_cn_file, write_cn_file, ConfusionNetwork, Slot};
pub use corpus::{
    read_corpus, read_corpus_str, write_corpus_jsonl, CorpusFormat, QuintupletRecord, TextField, TranslationView,
};
pub use table::{
    read_feature_table, read_feature_table_str, write_feature_table, write_feature_table_string, ColumnKind,
    ColumnSpec, FeatureTable, FeatureValue,
};

use crate::error::{Error, Result};

/// Binary word quality label.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Label {
    G,
    B,
}

impl Label {
    pub const ALL: [Label; 2] = [Label::G, Label::B];

    /// Dense index used by the labeler: G = 0, B = 1.
    pub fn index(self) -> usize {
        match self {
            Label::G => 0,
            Label::B => 1,
        }
    }

    pub fn from_index(i: usize) -> Label {
        if i == 0 {
            Label::G
        } else {
            Label::B
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Label::G => "G",
            Label::B => "B",
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Label {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "G" => Ok(Label::G),
            "B" => Ok(Label::B),
            other => Err(Error::validation(format!("unknown label `{other}` (expected G or B)"))),
        }
    }
}

/// Edit types produced by the shift-aware alignment. `D` is reference-only.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EditType {
    /// exact match
    E,
    /// substitution
    S,
    /// stem match
    T,
    /// synonym match
    Y,
    /// phrasal substitution
    P,
    /// hypothesis-only word
    I,
    /// reference-only word
    D,
}

impl EditType {
    pub fn as_char(self) -> char {
        match self {
            EditType::E => 'E',
            EditType::S => 'S',
            EditType::T => 'T',
            EditType::Y => 'Y',
            EditType::P => 'P',
            EditType::I => 'I',
            EditType::D => 'D',
        }
    }
}

impl fmt::Display for EditType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.as_char())
    }
}

impl FromStr for EditType {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "E" => EditType::E,
            "S" => EditType::S,
            "T" => EditType::T,
            "Y" => EditType::Y,
            "P" => EditType::P,
            "I" => EditType::I,
            "D" => EditType::D,
            other => return Err(Error::validation(format!("unknown edit type `{other}`"))),
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Token {
    pub surface: String,
    pub pos: Option<String>,
    pub stem: Option<String>,
}

impl Token {
    pub fn new(surface: impl Into<String>) -> Self {
        Token {
            surface: surface.into(),
            pos: None,
            stem: None,
        }
    }

    /// The stem when annotated, otherwise the surface form.
    pub fn stem_or_surface(&self) -> &str {
        self.stem.as_deref().unwrap_or(&self.surface)
    }
}

/// Which hypothesis is being judged: the ASR transcript, the translation of
/// the reference transcript, or the translation of the ASR output.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Task {
    Asr,
    Mt,
    Slt,
}

impl Task {
    pub const ALL: [Task; 3] = [Task::Asr, Task::Mt, Task::Slt];

    pub fn as_str(self) -> &'static str {
        match self {
            Task::Asr => "asr",
            Task::Mt => "mt",
            Task::Slt => "slt",
        }
    }

    /// The hypothesis field labeled for this task.
    pub fn hypothesis(self) -> TextField {
        match self {
            Task::Asr => TextField::FHyp,
            Task::Mt => TextField::EHypMt,
            Task::Slt => TextField::EHypSlt,
        }
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Task {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Task::ALL
            .into_iter()
            .find(|t| t.as_str() == s)
            .ok_or_else(|| Error::config(format!("unknown task `{s}` (expected asr, mt or slt)")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Source,
    Target,
}

/// A pre-tokenized sentence. POS and stem layers are each either present on
/// every token or absent from all of them.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Sentence {
    tokens: Vec<Token>,
    side: Side,
}

fn check_word(w: &str, what: &str) -> Result<()> {
    if w.is_empty() {
        return Err(Error::validation(format!("empty {what}")));
    }
    if w.chars().any(char::is_whitespace) {
        return Err(Error::validation(format!("{what} `{w}` contains whitespace")));
    }
    Ok(())
}

impl Sentence {
    pub fn new(tokens: Vec<Token>, side: Side) -> Result<Self> {
        for t in &tokens {
            check_word(&t.surface, "token")?;
            if let Some(p) = &t.pos {
                check_word(p, "POS tag")?;
            }
            if let Some(s) = &t.stem {
                check_word(s, "stem")?;
            }
        }
        let pos = tokens.iter().filter(|t| t.pos.is_some()).count();
        let stem = tokens.iter().filter(|t| t.stem.is_some()).count();
        if pos != 0 && pos != tokens.len() {
            return Err(Error::validation("POS annotations must cover the whole sentence"));
        }
        if stem != 0 && stem != tokens.len() {
            return Err(Error::validation("stem annotations must cover the whole sentence"));
        }
        Ok(Sentence { tokens, side })
    }

    /// Splits whitespace-separated text into tokens.
    pub fn from_text(text: &str, side: Side) -> Result<Self> {
        Sentence::new(text.split_whitespace().map(Token::new).collect(), side)
    }

    /// Like [`Sentence::from_text`] with optional whitespace-separated POS and
    /// stem layers that must have one item per token.
    pub fn annotated(text: &str, pos: Option<&str>, stem: Option<&str>, side: Side) -> Result<Self> {
        let mut tokens: Vec<Token> = text.split_whitespace().map(Token::new).collect();
        let n = tokens.len();
        let layer = |s: &str, what: &str| -> Result<Vec<String>> {
            let items: Vec<String> = s.split_whitespace().map(str::to_owned).collect();
            if items.len() != n {
                return Err(Error::validation(format!(
                    "{what} layer has {} items for {n} tokens",
                    items.len()
                )));
            }
            Ok(items)
        };
        if let Some(p) = pos {
            for (t, p) in tokens.iter_mut().zip(layer(p, "POS")?) {
                t.pos = Some(p);
            }
        }
        if let Some(s) = stem {
            for (t, s) in tokens.iter_mut().zip(layer(s, "stem")?) {
                t.stem = Some(s);
            }
        }
        Sentence::new(tokens, side)
    }

    pub fn tokens(&self) -> &[Token] {
        &self.tokens
    }

    pub fn side(&self) -> Side {
        self.side
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn surfaces(&self) -> Vec<&str> {
        self.tokens.iter().map(|t| t.surface.as_str()).collect()
    }

    pub fn has_pos(&self) -> bool {
        self.tokens.first().is_some_and(|t| t.pos.is_some())
    }

    pub fn has_stem(&self) -> bool {
        self.tokens.first().is_some_and(|t| t.stem.is_some())
    }

    pub fn text(&self) -> String {
        self.surfaces().join(" ")
    }

    pub(crate) fn pos_text(&self) -> Option<String> {
        self.has_pos().then(|| {
            self.tokens
                .iter()
                .map(|t| t.pos.as_deref().unwrap_or(""))
                .collect::<Vec<_>>()
                .join(" ")
        })
    }

    pub(crate) fn stem_text(&self) -> Option<String> {
        self.has_stem().then(|| {
            self.tokens
                .iter()
                .map(|t| t.stem.as_deref().unwrap_or(""))
                .collect::<Vec<_>>()
                .join(" ")
        })
    }
}

/// Opens a file for reading, transparently decompressing gzip input.
pub fn open_text(path: &Path) -> Result<String> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = BufReader::new(file);
    let mut bytes = Vec::new();
    reader.read_to_end(&mut bytes).map_err(|e| Error::io(path, e))?;
    if bytes.starts_with(&[0x1f, 0x8b]) {
        let mut out = String::new();
        flate2::read::MultiGzDecoder::new(&bytes[..])
            .read_to_string(&mut out)
            .map_err(|e| Error::io(path, e))?;
        Ok(out)
    } else {
        String::from_utf8(bytes).map_err(|e| Error::validation(format!("{}: not UTF-8: {e}", path.display())))
    }
}
