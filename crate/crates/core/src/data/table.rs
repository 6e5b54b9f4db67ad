use std::collections::HashSet;
use std::fmt::Write as _;
use std::ops::Range;
use std::path::Path;

use super::Label;
use crate::error::{Error, Result};

const HEADER_TAG: &str = "#wce-features";
const LABEL_COLUMN: &str = "label";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum ColumnKind {
    #[serde(rename = "cat")]
    Categorical,
    #[serde(rename = "num")]
    Numeric,
}

impl ColumnKind {
    pub fn tag(self) -> &'static str {
        match self {
            ColumnKind::Categorical => "cat",
            ColumnKind::Numeric => "num",
        }
    }

    pub fn from_tag(tag: &str) -> Option<Self> {
        match tag {
            "cat" => Some(ColumnKind::Categorical),
            "num" => Some(ColumnKind::Numeric),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ColumnSpec {
    pub name: String,
    pub kind: ColumnKind,
}

impl ColumnSpec {
    pub fn categorical(name: impl Into<String>) -> Self {
        ColumnSpec {
            name: name.into(),
            kind: ColumnKind::Categorical,
        }
    }

    pub fn numeric(name: impl Into<String>) -> Self {
        ColumnSpec {
            name: name.into(),
            kind: ColumnKind::Numeric,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum FeatureValue {
    Cat(String),
    Num(f64),
}

impl FeatureValue {
    pub fn cat(s: impl Into<String>) -> Self {
        FeatureValue::Cat(s.into())
    }

    pub fn as_num(&self) -> Option<f64> {
        match self {
            FeatureValue::Num(x) => Some(*x),
            FeatureValue::Cat(_) => None,
        }
    }

    pub fn as_cat(&self) -> Option<&str> {
        match self {
            FeatureValue::Cat(s) => Some(s),
            FeatureValue::Num(_) => None,
        }
    }
}

/// Per-token feature columns for a sequence of sentences.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureTable {
    columns: Vec<ColumnSpec>,
    rows: Vec<Vec<FeatureValue>>,
    /// Exclusive end row of each sentence.
    sentence_ends: Vec<usize>,
}

impl FeatureTable {
    pub fn new(columns: Vec<ColumnSpec>) -> Result<Self> {
        let mut seen = HashSet::new();
        for c in &columns {
            if c.name.is_empty() || c.name.contains(['\t', '\n', '\r', ':']) || c.name == LABEL_COLUMN {
                return Err(Error::validation(format!("invalid column name `{}`", c.name)));
            }
            if !seen.insert(c.name.as_str()) {
                return Err(Error::validation(format!("duplicate column `{}`", c.name)));
            }
        }
        Ok(FeatureTable {
            columns,
            rows: Vec::new(),
            sentence_ends: Vec::new(),
        })
    }

    fn check_row(&self, row: &[FeatureValue]) -> Result<()> {
        if row.len() != self.columns.len() {
            return Err(Error::validation(format!(
                "row has {} values for {} columns",
                row.len(),
                self.columns.len()
            )));
        }
        for (v, c) in row.iter().zip(&self.columns) {
            match (v, c.kind) {
                (FeatureValue::Num(x), ColumnKind::Numeric) => {
                    if !x.is_finite() {
                        return Err(Error::validation(format!("column `{}`: non-finite value {x}", c.name)));
                    }
                }
                (FeatureValue::Cat(s), ColumnKind::Categorical) => {
                    if s.is_empty() || s.contains(['\t', '\n', '\r']) {
                        return Err(Error::validation(format!(
                            "column `{}`: invalid category `{s}`",
                            c.name
                        )));
                    }
                }
                _ => {
                    return Err(Error::validation(format!(
                        "column `{}`: value of the wrong kind",
                        c.name
                    )))
                }
            }
        }
        Ok(())
    }

    /// Appends one non-empty sentence.
    pub fn push_sentence(&mut self, rows: Vec<Vec<FeatureValue>>) -> Result<()> {
        if rows.is_empty() {
            return Err(Error::validation("empty sentence"));
        }
        for r in &rows {
            self.check_row(r)?;
        }
        self.rows.extend(rows);
        self.sentence_ends.push(self.rows.len());
        Ok(())
    }

    pub fn columns(&self) -> &[ColumnSpec] {
        &self.columns
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c.name == name)
    }

    pub fn rows(&self) -> &[Vec<FeatureValue>] {
        &self.rows
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn n_sentences(&self) -> usize {
        self.sentence_ends.len()
    }

    pub fn sentence_ends(&self) -> &[usize] {
        &self.sentence_ends
    }

    pub fn sentence_range(&self, i: usize) -> Range<usize> {
        let start = if i == 0 { 0 } else { self.sentence_ends[i - 1] };
        start..self.sentence_ends[i]
    }

    pub fn sentence(&self, i: usize) -> &[Vec<FeatureValue>] {
        &self.rows[self.sentence_range(i)]
    }

    /// Keeps only the named columns, in the given order.
    pub fn select(&self, names: &[impl AsRef<str>]) -> Result<FeatureTable> {
        let idx = names
            .iter()
            .map(|n| {
                self.column_index(n.as_ref())
                    .ok_or_else(|| Error::validation(format!("unknown column `{}`", n.as_ref())))
            })
            .collect::<Result<Vec<_>>>()?;
        let mut out = FeatureTable::new(idx.iter().map(|&i| self.columns[i].clone()).collect())?;
        out.rows = self
            .rows
            .iter()
            .map(|r| idx.iter().map(|&i| r[i].clone()).collect())
            .collect();
        out.sentence_ends = self.sentence_ends.clone();
        Ok(out)
    }

    /// Places the columns of `other` to the right of this table's. Sentence
    /// segmentation must be identical.
    pub fn hstack(&self, other: &FeatureTable) -> Result<FeatureTable> {
        if self.sentence_ends != other.sentence_ends {
            return Err(Error::validation("tables have different sentence segmentation"));
        }
        let mut out = FeatureTable::new(self.columns.iter().chain(&other.columns).cloned().collect())?;
        out.rows = self
            .rows
            .iter()
            .zip(&other.rows)
            .map(|(a, b)| a.iter().chain(b).cloned().collect())
            .collect();
        out.sentence_ends = self.sentence_ends.clone();
        Ok(out)
    }

    /// Sentences `range` as a new table.
    pub fn slice_sentences(&self, range: Range<usize>) -> FeatureTable {
        let mut out = FeatureTable {
            columns: self.columns.clone(),
            rows: Vec::new(),
            sentence_ends: Vec::new(),
        };
        for i in range {
            out.rows.extend(self.sentence(i).iter().cloned());
            out.sentence_ends.push(out.rows.len());
        }
        out
    }
}

fn format_value(v: &FeatureValue) -> String {
    match v {
        FeatureValue::Cat(s) => s.clone(),
        // Display of f64 is the shortest decimal that parses back to the same bits.
        FeatureValue::Num(x) => format!("{x}"),
    }
}

/// Serializes a table: a `#wce-features` header naming `column:kind` fields,
/// then one tab-separated token per line, label last, blank line after each
/// sentence.
pub fn write_feature_table_string(table: &FeatureTable, labels: Option<&[Label]>) -> Result<String> {
    if let Some(l) = labels {
        if l.len() != table.n_rows() {
            return Err(Error::validation(format!(
                "{} labels for {} rows",
                l.len(),
                table.n_rows()
            )));
        }
    }
    if table.columns.is_empty() && labels.is_none() && table.n_rows() > 0 {
        return Err(Error::validation("cannot write rows without columns or labels"));
    }
    let mut out = String::from(HEADER_TAG);
    for c in &table.columns {
        write!(out, "\t{}:{}", c.name, c.kind.tag()).unwrap();
    }
    if labels.is_some() {
        write!(out, "\t{LABEL_COLUMN}").unwrap();
    }
    out.push('\n');
    for s in 0..table.n_sentences() {
        for r in table.sentence_range(s) {
            let mut fields: Vec<String> = table.rows[r].iter().map(format_value).collect();
            if let Some(l) = labels {
                fields.push(l[r].to_string());
            }
            out.push_str(&fields.join("\t"));
            out.push('\n');
        }
        out.push('\n');
    }
    Ok(out)
}

pub fn write_feature_table(table: &FeatureTable, labels: Option<&[Label]>, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let text = write_feature_table_string(table, labels)?;
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn read_feature_table(path: impl AsRef<Path>) -> Result<(FeatureTable, Option<Vec<Label>>)> {
    read_feature_table_str(&super::open_text(path.as_ref())?)
}

pub fn read_feature_table_str(text: &str) -> Result<(FeatureTable, Option<Vec<Label>>)> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| Error::parse(1, "header", "missing `#wce-features` header"))?;
    let mut fields = header.split('\t');
    if fields.next() != Some(HEADER_TAG) {
        return Err(Error::parse(1, "header", "missing `#wce-features` header"));
    }
    let mut columns = Vec::new();
    let mut has_labels = false;
    for f in fields {
        if has_labels {
            return Err(Error::parse(1, "header", "`label` must be the last column"));
        }
        if f == LABEL_COLUMN {
            has_labels = true;
            continue;
        }
        let (name, kind) = f
            .rsplit_once(':')
            .ok_or_else(|| Error::parse(1, "header", format!("column `{f}` lacks a kind")))?;
        let kind = ColumnKind::from_tag(kind)
            .ok_or_else(|| Error::parse(1, "header", format!("unknown column kind `{kind}`")))?;
        columns.push(ColumnSpec {
            name: name.to_owned(),
            kind,
        });
    }
    let mut table = FeatureTable::new(columns).map_err(|e| Error::parse(1, "header", e.to_string()))?;
    let width = table.columns.len() + usize::from(has_labels);
    let mut labels = Vec::new();
    let mut pending: Vec<Vec<FeatureValue>> = Vec::new();
    let mut pending_start = 0;

    for (k, line) in lines {
        let lineno = k + 1;
        if line.is_empty() {
            if !pending.is_empty() {
                table
                    .push_sentence(std::mem::take(&mut pending))
                    .map_err(|e| Error::parse(pending_start, "row", e.to_string()))?;
            }
            continue;
        }
        if pending.is_empty() {
            pending_start = lineno;
        }
        let parts: Vec<&str> = line.split('\t').collect();
        if parts.len() != width {
            return Err(Error::parse(
                lineno,
                "row",
                format!("{} fields, expected {width}", parts.len()),
            ));
        }
        let mut row = Vec::with_capacity(table.columns.len());
        for (raw, col) in parts.iter().zip(&table.columns) {
            row.push(match col.kind {
                ColumnKind::Categorical => FeatureValue::Cat((*raw).to_owned()),
                ColumnKind::Numeric => FeatureValue::Num(
                    raw.parse::<f64>()
                        .map_err(|_| Error::parse(lineno, &col.name, format!("`{raw}` is not a number")))?,
                ),
            });
        }
        if has_labels {
            labels.push(
                parts[width - 1]
                    .parse::<Label>()
                    .map_err(|e| Error::parse(lineno, LABEL_COLUMN, e.to_string()))?,
            );
        }
        pending.push(row);
    }
    if !pending.is_empty() {
        table
            .push_sentence(pending)
            .map_err(|e| Error::parse(pending_start, "row", e.to_string()))?;
    }
    Ok((table, has_labels.then_some(labels)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn tiny() -> FeatureTable {
        let mut t = FeatureTable::new(vec![ColumnSpec::categorical("w"), ColumnSpec::numeric("p")]).unwrap();
        t.push_sentence(vec![
            vec![FeatureValue::cat("le"), FeatureValue::Num(0.25)],
            vec![FeatureValue::cat("chat"), FeatureValue::Num(1.0)],
        ])
        .unwrap();
        t
    }

    #[test]
    fn writes_one_line_per_token_and_blank_separator() {
        let s = write_feature_table_string(&tiny(), Some(&[Label::G, Label::B])).unwrap();
        let lines: Vec<&str> = s.lines().collect();
        assert_eq!(lines.len(), 4);
        assert_eq!(lines[1], "le\t0.25\tG");
        assert_eq!(lines[2].split('\t').count(), 3);
        assert_eq!(lines[3], "");
    }

    #[test]
    fn label_count_mismatch_is_an_error() {
        assert!(write_feature_table_string(&tiny(), Some(&[Label::G])).is_err());
    }

    #[test]
    fn decimal_text_reads_back_exactly() {
        let s = write_feature_table_string(&tiny(), None).unwrap();
        let (t, labels) = read_feature_table_str(&s).unwrap();
        assert!(labels.is_none());
        assert_eq!(t.rows()[0][1], FeatureValue::Num(0.25));
    }

    #[test]
    fn rejects_bad_rows() {
        let mut t = tiny();
        assert!(t
            .push_sentence(vec![vec![FeatureValue::cat("x"), FeatureValue::Num(f64::NAN)]])
            .is_err());
        assert!(t
            .push_sentence(vec![vec![FeatureValue::Num(1.0), FeatureValue::Num(1.0)]])
            .is_err());
        assert!(t.push_sentence(vec![]).is_err());
        assert!(FeatureTable::new(vec![ColumnSpec::numeric("a"), ColumnSpec::numeric("a")]).is_err());
        assert!(read_feature_table_str("#wce-features\ta:num\nxyz\n").is_err());
    }

    #[test]
    fn select_and_hstack() {
        let t = tiny();
        let p = t.select(&["p"]).unwrap();
        assert_eq!(p.columns().len(), 1);
        let w = t.select(&["w"]).unwrap();
        assert_eq!(w.hstack(&p).unwrap(), t);
        assert!(t.select(&["zzz"]).is_err());
    }

    fn arb_table() -> impl Strategy<Value = (FeatureTable, Option<Vec<Label>>)> {
        (
            1usize..=10,
            prop::collection::vec(1usize..=8, 1..=6),
            any::<u64>(),
            any::<bool>(),
        )
            .prop_map(|(ncols, sent_lens, seed, with_labels)| {
                use rand::{Rng, SeedableRng};
                let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
                let cols: Vec<ColumnSpec> = (0..ncols)
                    .map(|i| {
                        if rng.gen_bool(0.5) {
                            ColumnSpec::numeric(format!("n{i}"))
                        } else {
                            ColumnSpec::categorical(format!("c{i}"))
                        }
                    })
                    .collect();
                let mut t = FeatureTable::new(cols.clone()).unwrap();
                let mut labels = Vec::new();
                for len in sent_lens {
                    let rows = (0..len)
                        .map(|_| {
                            labels.push(if rng.gen_bool(0.5) { Label::G } else { Label::B });
                            cols.iter()
                                .map(|c| match c.kind {
                                    ColumnKind::Numeric => {
                                        FeatureValue::Num(rng.gen_range(-1e6..1e6) * rng.gen::<f64>())
                                    }
                                    ColumnKind::Categorical => {
                                        FeatureValue::Cat(format!("v|{}:é", rng.gen_range(0..20)))
                                    }
                                })
                                .collect()
                        })
                        .collect();
                    t.push_sentence(rows).unwrap();
                }
                (t, with_labels.then_some(labels))
            })
    }

    proptest! {
        #[test]
        fn write_then_read_is_identity((table, labels) in arb_table()) {
            let text = write_feature_table_string(&table, labels.as_deref()).unwrap();
            let (back, back_labels) = read_feature_table_str(&text).unwrap();
            prop_assert_eq!(back, table);
            prop_assert_eq!(back_labels, labels);
        }
    }
}
