use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const POSTERIOR_TOL: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Slot {
    pub start: f64,
    #[serde(rename = "dur")]
    pub duration: f64,
    #[serde(rename = "alts")]
    pub alternatives: Vec<(String, f64)>,
}

impl Slot {
    pub fn posterior_of(&self, word: &str) -> Option<f64> {
        self.alternatives.iter().find(|(w, _)| w == word).map(|&(_, p)| p)
    }

    pub fn min_posterior(&self) -> f64 {
        self.alternatives.iter().map(|a| a.1).fold(f64::INFINITY, f64::min)
    }

    pub fn max_posterior(&self) -> f64 {
        self.alternatives.iter().map(|a| a.1).fold(f64::NEG_INFINITY, f64::max)
    }
}

/// A linearized word lattice: time-ordered slots of weighted alternatives.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ConfusionNetwork {
    slots: Vec<Slot>,
}

impl ConfusionNetwork {
    pub fn new(slots: Vec<Slot>) -> Result<Self> {
        let cn = ConfusionNetwork { slots };
        cn.validate()?;
        Ok(cn)
    }

    pub fn validate(&self) -> Result<()> {
        let mut prev_start = f64::NEG_INFINITY;
        for (k, slot) in self.slots.iter().enumerate() {
            if !(slot.start.is_finite() && slot.start >= 0.0) {
                return Err(Error::validation(format!(
                    "slot {k}: start time {} is invalid",
                    slot.start
                )));
            }
            if !(slot.duration.is_finite() && slot.duration >= 0.0) {
                return Err(Error::validation(format!(
                    "slot {k}: duration {} is invalid",
                    slot.duration
                )));
            }
            if slot.start < prev_start {
                return Err(Error::validation(format!(
                    "slot {k}: start times are not non-decreasing"
                )));
            }
            prev_start = slot.start;
            if slot.alternatives.is_empty() {
                return Err(Error::validation(format!("slot {k}: no alternatives")));
            }
            let mut sum = 0.0;
            for (w, p) in &slot.alternatives {
                if w.is_empty() || w.chars().any(char::is_whitespace) {
                    return Err(Error::validation(format!("slot {k}: invalid word `{w}`")));
                }
                if !(p.is_finite() && (0.0..=1.0).contains(p)) {
                    return Err(Error::validation(format!("slot {k}: posterior {p} outside [0,1]")));
                }
                sum += p;
            }
            if (sum - 1.0).abs() > POSTERIOR_TOL {
                return Err(Error::validation(format!(
                    "slot {k}: posteriors sum to {sum}, expected 1"
                )));
            }
        }
        Ok(())
    }

    pub fn slots(&self) -> &[Slot] {
        &self.slots
    }

    pub fn len(&self) -> usize {
        self.slots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }

    /// Text form: one `start dur word:p ...` line per slot.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for slot in &self.slots {
            write!(out, "{} {}", slot.start, slot.duration).unwrap();
            for (w, p) in &slot.alternatives {
                write!(out, " {w}:{p}").unwrap();
            }
            out.push('\n');
        }
        out
    }
}

fn parse_slot(line: &str, lineno: usize) -> Result<Slot> {
    let mut it = line.split_whitespace();
    let num = |s: Option<&str>, field: &str| -> Result<f64> {
        let s = s.ok_or_else(|| Error::parse(lineno, field, "missing"))?;
        s.parse::<f64>()
            .map_err(|_| Error::parse(lineno, field, format!("`{s}` is not a number")))
    };
    let start = num(it.next(), "start")?;
    let duration = num(it.next(), "dur")?;
    let mut alternatives = Vec::new();
    for item in it {
        let (w, p) = item
            .rsplit_once(':')
            .ok_or_else(|| Error::parse(lineno, "alternative", format!("`{item}` is not word:posterior")))?;
        let p: f64 = p
            .parse()
            .map_err(|_| Error::parse(lineno, "alternative", format!("bad posterior in `{item}`")))?;
        alternatives.push((w.to_owned(), p));
    }
    Ok(Slot {
        start,
        duration,
        alternatives,
    })
}

/// Parses blank-line separated confusion networks from text.
pub fn parse_cn_blocks(text: &str) -> Result<Vec<ConfusionNetwork>> {
    let mut out = Vec::new();
    let mut slots = Vec::new();
    let mut first_line = 0;
    let mut finish = |slots: &mut Vec<Slot>, first_line: usize| -> Result<()> {
        if !slots.is_empty() {
            let cn = ConfusionNetwork::new(std::mem::take(slots))
                .map_err(|e| Error::parse(first_line, "cn", e.to_string()))?;
            out.push(cn);
        }
        Ok(())
    };
    for (k, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            finish(&mut slots, first_line)?;
            continue;
        }
        if slots.is_empty() {
            first_line = k + 1;
        }
        slots.push(parse_slot(line, k + 1)?);
    }
    finish(&mut slots, first_line)?;
    Ok(out)
}

pub fn read_cn_file(path: impl AsRef<Path>) -> Result<Vec<ConfusionNetwork>> {
    parse_cn_blocks(&super::open_text(path.as_ref())?)
}

pub fn write_cn_file(path: impl AsRef<Path>, cns: &[ConfusionNetwork]) -> Result<()> {
    let path = path.as_ref();
    let text = cns.iter().map(ConfusionNetwork::to_text).collect::<Vec<_>>().join("\n");
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub(crate) fn parse_slot_line(line: &str, lineno: usize) -> Result<Slot> {
    parse_slot(line, lineno)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn slot(alts: &[(&str, f64)]) -> Slot {
        Slot {
            start: 0.0,
            duration: 0.21,
            alternatives: alts.iter().map(|&(w, p)| (w.to_owned(), p)).collect(),
        }
    }

    #[test]
    fn posterior_sum_violation_names_slot() {
        let cn = ConfusionNetwork::new(vec![slot(&[("a", 1.0)]), slot(&[("b", 0.5), ("c", 0.3)])]);
        let msg = cn.unwrap_err().to_string();
        assert!(msg.contains("slot 1"), "{msg}");
    }

    #[test]
    fn text_round_trip() {
        let text = "0 0.21 comme:0.6 quand:0.3 qu':0.1\n0.21 0.3 notre:1\n\n0 0.5 x:1\n";
        let cns = parse_cn_blocks(text).unwrap();
        assert_eq!(cns.len(), 2);
        assert_eq!(cns[0].slots()[0].posterior_of("qu'"), Some(0.1));
        let again = parse_cn_blocks(&cns.iter().map(|c| c.to_text()).collect::<Vec<_>>().join("\n")).unwrap();
        assert_eq!(again, cns);
    }

    #[test]
    fn rejects_decreasing_start_and_empty_slot() {
        let mut a = slot(&[("a", 1.0)]);
        a.start = 1.0;
        assert!(ConfusionNetwork::new(vec![a, slot(&[("b", 1.0)])]).is_err());
        assert!(ConfusionNetwork::new(vec![slot(&[])]).is_err());
        assert!(parse_cn_blocks("0 0.1 a=1\n").is_err());
    }
}
