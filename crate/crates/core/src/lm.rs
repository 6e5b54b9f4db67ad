//! Back-off n-gram language models in ARPA format.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};

pub const UNK: &str = "<unk>";
pub const BOS: &str = "<s>";
pub const EOS: &str = "</s>";
pub const DEFAULT_UNK_FLOOR: f64 = -10.0;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NgramEntry {
    pub log10_prob: f64,
    pub backoff: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LmQuery {
    pub log10_prob: f64,
    /// Requested order minus matched order; 0 when the full n-gram is listed.
    pub backoff_level: usize,
    /// Order of the n-gram the probability came from (0 for the floor).
    pub matched_order: usize,
}

#[derive(Clone, Debug)]
pub struct BackoffLm {
    order: usize,
    ids: HashMap<String, u32>,
    /// `tables[k]` holds the (k+1)-grams.
    tables: Vec<HashMap<Vec<u32>, NgramEntry>>,
    unk_floor: f64,
}

impl BackoffLm {
    pub fn load_arpa(path: impl AsRef<Path>) -> Result<Self> {
        Self::parse_arpa(&crate::data::open_text(path.as_ref())?)
    }

    pub fn parse_arpa(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate().map(|(k, l)| (k + 1, l.trim()));
        // header
        loop {
            match lines.next() {
                Some((_, "\\data\\")) => break,
                Some(_) => continue,
                None => return Err(Error::parse(1, "\\data\\", "missing `\\data\\` header")),
            }
        }
        let mut counts: Vec<usize> = Vec::new();
        let mut section: Option<(usize, usize)> = None;
        for (lineno, line) in lines.by_ref() {
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix("ngram ") {
                let (n, c) = rest
                    .split_once('=')
                    .ok_or_else(|| Error::parse(lineno, "ngram", "expected `ngram N=count`"))?;
                let n: usize = n
                    .trim()
                    .parse()
                    .map_err(|_| Error::parse(lineno, "ngram", "bad order"))?;
                let c: usize = c
                    .trim()
                    .parse()
                    .map_err(|_| Error::parse(lineno, "ngram", "bad count"))?;
                if n != counts.len() + 1 {
                    return Err(Error::parse(lineno, "ngram", "orders must be listed as 1, 2, ..."));
                }
                counts.push(c);
                continue;
            }
            section = Some((parse_section_header(line, lineno)?, lineno));
            break;
        }
        if counts.is_empty() {
            return Err(Error::parse(1, "ngram", "no `ngram N=count` lines"));
        }
        let order = counts.len();
        let mut lm = BackoffLm {
            order,
            ids: HashMap::new(),
            tables: vec![HashMap::new(); order],
            unk_floor: DEFAULT_UNK_FLOOR,
        };
        let mut seen_end = false;
        let mut last_line = 0;
        while let Some((n, header_line)) = section.take() {
            if n == 0 || n > order {
                return Err(Error::parse(
                    header_line,
                    "section",
                    format!("no header count for {n}-grams"),
                ));
            }
            let mut listed = 0usize;
            for (lineno, line) in lines.by_ref() {
                last_line = lineno;
                if line.is_empty() {
                    continue;
                }
                if line == "\\end\\" {
                    seen_end = true;
                    break;
                }
                if line.starts_with('\\') {
                    section = Some((parse_section_header(line, lineno)?, lineno));
                    break;
                }
                lm.add_entry(n, line, lineno)?;
                listed += 1;
            }
            if listed != counts[n - 1] {
                return Err(Error::parse(
                    header_line,
                    format!("{n}-grams"),
                    format!("header declares {} entries, section lists {listed}", counts[n - 1]),
                ));
            }
            if seen_end {
                break;
            }
        }
        if !seen_end {
            return Err(Error::parse(last_line.max(1), "\\end\\", "missing `\\end\\` marker"));
        }
        for (k, t) in lm.tables.iter().enumerate() {
            if t.len() != counts[k] {
                return Err(Error::parse(
                    last_line,
                    format!("{}-grams", k + 1),
                    format!("header declares {} entries, found {}", counts[k], t.len()),
                ));
            }
        }
        Ok(lm)
    }

    fn add_entry(&mut self, n: usize, line: &str, lineno: usize) -> Result<()> {
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != n + 1 && fields.len() != n + 2 {
            return Err(Error::parse(lineno, format!("{n}-gram"), "wrong number of fields"));
        }
        let log10_prob: f64 = fields[0]
            .parse()
            .map_err(|_| Error::parse(lineno, "log10_prob", format!("`{}` is not a number", fields[0])))?;
        if !(log10_prob.is_finite() && log10_prob <= 0.0) {
            return Err(Error::parse(lineno, "log10_prob", "must be finite and <= 0"));
        }
        let backoff = match fields.get(n + 1) {
            Some(b) => {
                let b: f64 = b
                    .parse()
                    .map_err(|_| Error::parse(lineno, "backoff", format!("`{b}` is not a number")))?;
                if !b.is_finite() {
                    return Err(Error::parse(lineno, "backoff", "must be finite"));
                }
                Some(b)
            }
            None => None,
        };
        let mut key = Vec::with_capacity(n);
        for w in &fields[1..=n] {
            let id = if n == 1 {
                let next = self.ids.len() as u32;
                *self.ids.entry((*w).to_owned()).or_insert(next)
            } else {
                *self.ids.get(*w).ok_or_else(|| {
                    Error::parse(
                        lineno,
                        format!("{n}-gram"),
                        format!("word `{w}` is not a listed unigram"),
                    )
                })?
            };
            key.push(id);
        }
        if self.tables[n - 1]
            .insert(key, NgramEntry { log10_prob, backoff })
            .is_some()
        {
            return Err(Error::parse(lineno, format!("{n}-gram"), "duplicate entry"));
        }
        Ok(())
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn vocab_size(&self) -> usize {
        self.ids.len()
    }

    pub fn contains(&self, word: &str) -> bool {
        self.ids.contains_key(word)
    }

    pub fn vocab(&self) -> impl Iterator<Item = &str> {
        self.ids.keys().map(String::as_str)
    }

    pub fn unk_floor(&self) -> f64 {
        self.unk_floor
    }

    /// Log10 probability returned for unknown words when the model has no `<unk>`.
    pub fn set_unk_floor(&mut self, floor: f64) {
        self.unk_floor = floor;
    }

    fn key(&self, words: &[&str]) -> Option<Vec<u32>> {
        words.iter().map(|w| self.ids.get(*w).copied()).collect()
    }

    /// The listed entry for exactly this n-gram, without unknown-word mapping.
    pub fn entry(&self, ngram: &[&str]) -> Option<&NgramEntry> {
        if ngram.is_empty() || ngram.len() > self.order {
            return None;
        }
        self.tables[ngram.len() - 1].get(&self.key(ngram)?)
    }

    fn id_or_unk(&self, w: &str) -> Option<u32> {
        self.ids.get(w).or_else(|| self.ids.get(UNK)).copied()
    }

    /// Back-off probability of `word` after `context` (the last `order - 1`
    /// context words are used). Unknown words map to `<unk>`.
    pub fn query(&self, context: &[&str], word: &str) -> LmQuery {
        let ctx = &context[context.len().saturating_sub(self.order - 1)..];
        let requested = ctx.len() + 1;
        let Some(wid) = self.id_or_unk(word) else {
            return LmQuery {
                log10_prob: self.unk_floor,
                backoff_level: self.order - 1,
                matched_order: 0,
            };
        };
        let ctx_ids: Vec<Option<u32>> = ctx.iter().map(|w| self.id_or_unk(w)).collect();
        let mut backoff_sum = 0.0;
        for k in (0..=ctx.len()).rev() {
            let hist = &ctx_ids[ctx.len() - k..];
            if let Some(hist) = hist.iter().copied().collect::<Option<Vec<u32>>>() {
                let mut key = hist.clone();
                key.push(wid);
                if let Some(e) = self.tables[k].get(&key) {
                    return LmQuery {
                        log10_prob: e.log10_prob + backoff_sum,
                        backoff_level: requested - (k + 1),
                        matched_order: k + 1,
                    };
                }
                if k > 0 {
                    if let Some(b) = self.tables[k - 1].get(&hist).and_then(|e| e.backoff) {
                        backoff_sum += b;
                    }
                }
            }
        }
        // unreachable for a word with an id: every id is a listed unigram
        LmQuery {
            log10_prob: self.unk_floor,
            backoff_level: requested - 1,
            matched_order: 0,
        }
    }

    /// Length of the longest listed n-gram ending at `tokens[i]` (0 if even the
    /// unigram is unlisted). No unknown-word mapping.
    pub fn longest_match(&self, tokens: &[&str], i: usize) -> usize {
        (1..=self.order.min(i + 1))
            .rev()
            .find(|&l| self.entry(&tokens[i + 1 - l..=i]).is_some())
            .unwrap_or(0)
    }
}

/// Estimates an interpolated absolute-discount model from tokenized sentences
/// and returns it as ARPA text. Unigrams are add-one smoothed over the
/// vocabulary plus `</s>` and `<unk>`; `<s>` is listed with log10 prob -99.
pub fn estimate_arpa<S: AsRef<str>>(sentences: &[Vec<S>], order: usize, discount: f64) -> Result<String> {
    if order == 0 {
        return Err(Error::config("LM order must be at least 1"));
    }
    if !(discount > 0.0 && discount < 1.0) {
        return Err(Error::config(format!("discount must be in (0, 1), got {discount}")));
    }
    let mut counts: Vec<BTreeMap<Vec<&str>, f64>> = vec![BTreeMap::new(); order];
    let mut vocab: BTreeSet<&str> = [EOS, UNK].into_iter().collect();
    let mut total = 0.0;
    for s in sentences {
        let toks: Vec<&str> = std::iter::once(BOS)
            .chain(s.iter().map(AsRef::as_ref))
            .chain(std::iter::once(EOS))
            .collect();
        for w in &toks[1..] {
            if w.is_empty() || w.chars().any(char::is_whitespace) || *w == BOS {
                return Err(Error::validation(format!("invalid LM training token `{w}`")));
            }
            vocab.insert(w);
        }
        total += (toks.len() - 1) as f64;
        for n in 1..=order {
            for g in toks.windows(n) {
                // the start marker is never predicted
                if n == 1 && g[0] == BOS {
                    continue;
                }
                *counts[n - 1].entry(g.to_vec()).or_default() += 1.0;
            }
        }
    }
    let mut prob: Vec<BTreeMap<Vec<&str>, f64>> = vec![BTreeMap::new(); order];
    let mut bow: BTreeMap<Vec<&str>, f64> = BTreeMap::new();
    let v = vocab.len() as f64;
    for &w in &vocab {
        let c = counts[0].get(&vec![w]).copied().unwrap_or(0.0);
        prob[0].insert(vec![w], (c + 1.0) / (total + v));
    }
    fn lookup(prob: &[BTreeMap<Vec<&str>, f64>], bow: &BTreeMap<Vec<&str>, f64>, h: &[&str], w: &str) -> f64 {
        let mut g = h.to_vec();
        g.push(w);
        if let Some(p) = prob[g.len() - 1].get(&g) {
            return *p;
        }
        bow.get(h).copied().unwrap_or(1.0) * lookup(prob, bow, &h[1..], w)
    }
    for n in 2..=order {
        let mut by_history: BTreeMap<Vec<&str>, Vec<(&str, f64)>> = BTreeMap::new();
        for (g, &c) in &counts[n - 1] {
            by_history.entry(g[..n - 1].to_vec()).or_default().push((g[n - 1], c));
        }
        for (h, follow) in by_history {
            let ch: f64 = follow.iter().map(|f| f.1).sum();
            let gamma = discount * follow.len() as f64 / ch;
            for (w, c) in follow {
                let p = (c - discount) / ch + gamma * lookup(&prob, &bow, &h[1..], w);
                let mut g = h.clone();
                g.push(w);
                prob[n - 1].insert(g, p);
            }
            bow.insert(h, gamma);
        }
    }
    let mut out = String::from("\\data\\\n");
    for (n, table) in prob.iter().enumerate() {
        let extra = usize::from(n == 0);
        let _ = writeln!(out, "ngram {}={}", n + 1, table.len() + extra);
    }
    for (n, table) in prob.iter().enumerate() {
        let _ = write!(out, "\n\\{}-grams:\n", n + 1);
        let mut line = |g: &[&str], lp: f64| {
            let _ = write!(out, "{lp}\t{}", g.join(" "));
            if n + 1 < order {
                if let Some(b) = bow.get(g) {
                    let _ = write!(out, "\t{}", b.log10());
                }
            }
            out.push('\n');
        };
        if n == 0 {
            line(&[BOS], -99.0);
        }
        for (g, p) in table {
            line(g, p.log10());
        }
    }
    out.push_str("\n\\end\\\n");
    Ok(out)
}

fn parse_section_header(line: &str, lineno: usize) -> Result<usize> {
    line.strip_prefix('\\')
        .and_then(|s| s.strip_suffix("-grams:"))
        .and_then(|n| n.parse().ok())
        .ok_or_else(|| Error::parse(lineno, "section", format!("unexpected line `{line}`")))
}
