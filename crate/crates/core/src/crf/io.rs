//! Text model format (fields are tab-separated):
//!
//! ```text
//! WCE-CRF v1
//! labels  G  B
//! meta  l2_sigma2  1
//! meta  iterations  42
//! meta  objective  12.5
//! meta  grad_norm  0.0001
//! meta  converged  true
//! templates  2  transitions=true  bias=true
//! unigram  f_word  cat  -2,-1,0,1,2
//! ...
//! features  N
//! <one feature string per line>
//! weights  M
//! <one weight per line>
//! end
//! ```
//!
//! Weights use the shortest decimal that parses back to the same `f64`.

use std::fmt::Write as _;
use std::path::Path;

use super::{CrfModel, TemplateSet, TrainingInfo, UnigramTemplate};
use crate::data::ColumnKind;
use crate::error::{Error, Result};

const MAGIC: &str = "WCE-CRF v1";

pub fn write_model_string(m: &CrfModel) -> String {
    let mut s = String::new();
    let info = m.info();
    let t = m.templates();
    let _ = writeln!(s, "{MAGIC}");
    let _ = writeln!(s, "labels\tG\tB");
    let _ = writeln!(s, "meta\tl2_sigma2\t{}", info.l2_sigma2);
    let _ = writeln!(s, "meta\titerations\t{}", info.iterations);
    let _ = writeln!(s, "meta\tobjective\t{}", info.objective);
    let _ = writeln!(s, "meta\tgrad_norm\t{}", info.grad_norm);
    let _ = writeln!(s, "meta\tconverged\t{}", info.converged);
    let _ = writeln!(
        s,
        "templates\t{}\ttransitions={}\tbias={}",
        t.unigrams.len(),
        t.transitions,
        t.bias
    );
    for u in &t.unigrams {
        let offs: Vec<String> = u.offsets.iter().map(i32::to_string).collect();
        let _ = writeln!(s, "unigram\t{}\t{}\t{}", u.column, u.kind.tag(), offs.join(","));
    }
    let _ = writeln!(s, "features\t{}", m.features().len());
    for f in m.features() {
        let _ = writeln!(s, "{f}");
    }
    let _ = writeln!(s, "weights\t{}", m.weights().len());
    for w in m.weights() {
        let _ = writeln!(s, "{w}");
    }
    s.push_str("end\n");
    s
}

pub fn save_model(m: &CrfModel, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, write_model_string(m)).map_err(|e| Error::io(path, e))
}

pub fn load_model(path: impl AsRef<Path>) -> Result<CrfModel> {
    let path = path.as_ref();
    read_model_str(&crate::data::open_text(path)?)
}

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
    last: usize,
}

impl<'a> Lines<'a> {
    fn next(&mut self, what: &str) -> Result<(usize, &'a str)> {
        match self.inner.next() {
            Some((k, l)) => {
                self.last = k + 1;
                Ok((k + 1, l))
            }
            None => Err(Error::parse(self.last + 1, what, "unexpected end of model file")),
        }
    }

    fn keyed(&mut self, key: &str) -> Result<(usize, Vec<&'a str>)> {
        let (n, l) = self.next(key)?;
        let parts: Vec<&str> = l.split('\t').collect();
        if parts[0] != key {
            return Err(Error::parse(n, key, format!("expected a `{key}` line")));
        }
        Ok((n, parts[1..].to_vec()))
    }
}

fn num<T: std::str::FromStr>(line: usize, field: &str, s: Option<&&str>) -> Result<T> {
    s.and_then(|v| v.parse().ok())
        .ok_or_else(|| Error::parse(line, field, "missing or malformed value"))
}

pub fn read_model_str(text: &str) -> Result<CrfModel> {
    let mut it = Lines {
        inner: text.lines().enumerate(),
        last: 0,
    };
    let (n, magic) = it.next("header")?;
    if magic != MAGIC {
        return Err(Error::parse(n, "header", format!("expected `{MAGIC}`")));
    }
    let (n, labels) = it.keyed("labels")?;
    if labels != ["G", "B"] {
        return Err(Error::parse(n, "labels", "only the label set G B is supported"));
    }
    let mut meta = |key: &str| -> Result<(usize, String)> {
        let (n, parts) = it.keyed("meta")?;
        if parts.first() != Some(&key) || parts.len() != 2 {
            return Err(Error::parse(n, "meta", format!("expected `meta<TAB>{key}<TAB>value`")));
        }
        Ok((n, parts[1].to_owned()))
    };
    let (n1, s1) = meta("l2_sigma2")?;
    let (n2, s2) = meta("iterations")?;
    let (n3, s3) = meta("objective")?;
    let (n4, s4) = meta("grad_norm")?;
    let (n5, s5) = meta("converged")?;
    let info = TrainingInfo {
        l2_sigma2: num(n1, "l2_sigma2", Some(&s1.as_str()))?,
        iterations: num(n2, "iterations", Some(&s2.as_str()))?,
        objective: num(n3, "objective", Some(&s3.as_str()))?,
        grad_norm: num(n4, "grad_norm", Some(&s4.as_str()))?,
        converged: num(n5, "converged", Some(&s5.as_str()))?,
    };
    let (n, parts) = it.keyed("templates")?;
    let count: usize = num(n, "templates", parts.first())?;
    let flag = |p: Option<&&str>, key: &str| -> Result<bool> {
        p.and_then(|v| v.strip_prefix(key))
            .and_then(|v| v.strip_prefix('='))
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| Error::parse(n, "templates", format!("missing `{key}=true|false`")))
    };
    let transitions = flag(parts.get(1), "transitions")?;
    let bias = flag(parts.get(2), "bias")?;
    let mut unigrams = Vec::with_capacity(count);
    for _ in 0..count {
        let (n, p) = it.keyed("unigram")?;
        if p.len() != 3 {
            return Err(Error::parse(
                n,
                "unigram",
                "expected `unigram<TAB>column<TAB>kind<TAB>offsets`",
            ));
        }
        let kind = ColumnKind::from_tag(p[1]).ok_or_else(|| Error::parse(n, "unigram", "kind must be cat or num"))?;
        let offsets = p[2]
            .split(',')
            .map(|o| {
                o.parse::<i32>()
                    .map_err(|_| Error::parse(n, "unigram", format!("bad offset `{o}`")))
            })
            .collect::<Result<Vec<_>>>()?;
        unigrams.push(UnigramTemplate {
            column: p[0].to_owned(),
            kind,
            offsets,
        });
    }
    let (n, parts) = it.keyed("features")?;
    let nf: usize = num(n, "features", parts.first())?;
    let mut features = Vec::with_capacity(nf);
    for _ in 0..nf {
        features.push(it.next("feature")?.1.to_owned());
    }
    let (n, parts) = it.keyed("weights")?;
    let nw: usize = num(n, "weights", parts.first())?;
    let mut weights = Vec::with_capacity(nw);
    for _ in 0..nw {
        let (n, l) = it.next("weight")?;
        weights.push(num(n, "weight", Some(&l))?);
    }
    let (n, end) = it.next("end")?;
    if end != "end" {
        return Err(Error::parse(n, "end", "expected `end`"));
    }
    CrfModel::from_parts(
        TemplateSet {
            unigrams,
            transitions,
            bias,
        },
        features,
        weights,
        info,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::crf::{train, TrainConfig};
    use crate::data::{ColumnSpec, FeatureTable, FeatureValue, Label};

    #[test]
    fn round_trip_is_exact() {
        let mut t = FeatureTable::new(vec![ColumnSpec::categorical("w"), ColumnSpec::numeric("x")]).unwrap();
        let mut labels = vec![];
        for s in 0..6 {
            let rows = (0..4)
                .map(|k| {
                    labels.push(if (s + k) % 3 == 0 { Label::B } else { Label::G });
                    vec![
                        FeatureValue::cat(format!("v{}", (s * k) % 4)),
                        FeatureValue::Num(0.1 * (s + k) as f64),
                    ]
                })
                .collect();
            t.push_sentence(rows).unwrap();
        }
        let m = train(
            &t,
            &labels,
            &TemplateSet::default_for(t.columns()),
            &TrainConfig::default(),
        )
        .unwrap();
        let text = write_model_string(&m);
        let back = read_model_str(&text).unwrap();
        assert_eq!(back, m);
        assert_eq!(write_model_string(&back), text);
        for i in 0..t.n_sentences() {
            let a = m.decode(t.columns(), t.sentence(i), 0.5).unwrap();
            let b = back.decode(t.columns(), t.sentence(i), 0.5).unwrap();
            assert_eq!(
                a.p_good.iter().map(|p| p.to_bits()).collect::<Vec<_>>(),
                b.p_good.iter().map(|p| p.to_bits()).collect::<Vec<_>>()
            );
        }
    }

    #[test]
    fn malformed_files_fail() {
        assert!(read_model_str("nope\n").is_err());
        assert!(read_model_str("WCE-CRF v1\nlabels\tG\tB\n").is_err());
    }
}
