//! Seeded synthetic speech translation corpora.
//!
//! A toy source and target language share a lexicon and a handful of
//! sentence templates (adjectives follow nouns in the source and precede them
//! in the target). Each utterance is corrupted twice: recognition errors turn
//! the transcript into `f_hyp`, and a per-source-word translation error plan
//! is applied both to the transcript (giving `e_hyp_mt`) and to `f_hyp`
//! (giving `e_hyp_slt`), so speech translation errors are a superset of the
//! text translation errors. Confusion-network posteriors, durations and
//! sidecar annotations are drawn so that they correlate with correctness.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rand::distributions::WeightedIndex;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::{write_corpus_jsonl, ConfusionNetwork, QuintupletRecord, Sentence, Side, Slot, Token, WordAlignment};
use crate::error::{Error, Result};
use crate::lm::estimate_arpa;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    pub utterances: usize,
    pub seed: u64,
    /// Per-word recognition substitution rate.
    pub asr_substitution: f64,
    /// Per-word recognition deletion and insertion rates.
    pub asr_indel: f64,
    /// Per-source-word translation error rate.
    pub mt_error: f64,
    /// Clean sentence pairs used to estimate the two LMs.
    pub lm_sentences: usize,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            utterances: 200,
            seed: 2015,
            asr_substitution: 0.12,
            asr_indel: 0.03,
            mt_error: 0.15,
            lm_sentences: 2000,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        if self.utterances == 0 {
            return Err(Error::config("utterances must be at least 1"));
        }
        for (name, p) in [
            ("asr_substitution", self.asr_substitution),
            ("asr_indel", self.asr_indel),
            ("mt_error", self.mt_error),
        ] {
            if !(0.0..=0.5).contains(&p) {
                return Err(Error::config(format!("{name} must be in [0, 0.5], got {p}")));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Pos {
    Det,
    Noun,
    Verb,
    Adj,
    Prep,
    Pron,
    Num,
    Punct,
}

impl Pos {
    fn tag(self) -> &'static str {
        match self {
            Pos::Det => "DET",
            Pos::Noun => "NOUN",
            Pos::Verb => "VERB",
            Pos::Adj => "ADJ",
            Pos::Prep => "PREP",
            Pos::Pron => "PRON",
            Pos::Num => "NUM",
            Pos::Punct => "PUNCT",
        }
    }

    fn constituent(self) -> &'static str {
        match self {
            Pos::Det | Pos::Noun | Pos::Pron => "NP",
            Pos::Verb => "VP",
            Pos::Adj => "ADJP",
            Pos::Prep => "PP",
            Pos::Num => "QP",
            Pos::Punct => "PUNCT",
        }
    }

    fn is_function(self) -> bool {
        matches!(self, Pos::Det | Pos::Prep | Pos::Pron)
    }
}

const TEMPLATES: &[&[Pos]] = {
    use Pos::*;
    &[
        &[Det, Noun, Verb, Det, Noun, Punct],
        &[Det, Noun, Adj, Verb, Prep, Det, Noun, Punct],
        &[Pron, Verb, Det, Noun, Adj, Prep, Det, Noun, Punct],
        &[Det, Noun, Prep, Det, Noun, Verb, Det, Noun, Adj, Punct],
        &[Pron, Verb, Num, Noun, Punct],
        &[Pron, Verb, Prep, Det, Noun, Punct],
        &[Det, Noun, Adj, Verb, Pron, Punct],
        &[Det, Noun, Verb, Adj, Punct],
    ]
};

#[derive(Clone, Debug)]
struct Lemma {
    pos: Pos,
    src: String,
    /// One word, or a verb plus particle.
    tgt: Vec<String>,
    synonym: Option<String>,
    paraphrase: Option<String>,
    confusable: Vec<usize>,
}

struct Lexicon {
    lemmas: Vec<Lemma>,
    by_pos: BTreeMap<&'static str, Vec<usize>>,
    zipf: BTreeMap<&'static str, WeightedIndex<f64>>,
}

struct WordMaker {
    used: HashSet<String>,
}

impl WordMaker {
    fn make(&mut self, rng: &mut ChaCha8Rng, cons: &[u8], vowels: &[u8], syllables: usize) -> String {
        loop {
            let mut w = String::new();
            for _ in 0..syllables {
                w.push(*cons.choose(rng).unwrap() as char);
                w.push(*vowels.choose(rng).unwrap() as char);
            }
            // plural forms append `s`, so no base form may end in it
            if self.used.insert(w.clone()) && self.used.insert(format!("{w}s")) {
                return w;
            }
        }
    }
}

const SRC_CONS: &[u8] = b"bdfglmnprtv";
const SRC_VOW: &[u8] = b"aeiou";
const TGT_CONS: &[u8] = b"chjkwxz";
const TGT_VOW: &[u8] = b"aeiouy";

fn build_lexicon(rng: &mut ChaCha8Rng) -> Lexicon {
    let mut wm = WordMaker { used: HashSet::new() };
    let sizes = [
        (Pos::Det, 5),
        (Pos::Noun, 50),
        (Pos::Verb, 30),
        (Pos::Adj, 24),
        (Pos::Prep, 7),
        (Pos::Pron, 6),
    ];
    let mut lemmas = Vec::new();
    let particles: Vec<String> = (0..4).map(|_| wm.make(rng, TGT_CONS, TGT_VOW, 1)).collect();
    for (pos, n) in sizes {
        for _ in 0..n {
            let syl = if pos.is_function() { 1 } else { rng.gen_range(2..=3) };
            let src = wm.make(rng, SRC_CONS, SRC_VOW, syl);
            let mut tgt = vec![wm.make(rng, TGT_CONS, TGT_VOW, syl)];
            let mut paraphrase = None;
            if pos == Pos::Verb && rng.gen_bool(0.25) {
                tgt.push(particles.choose(rng).unwrap().clone());
                paraphrase = Some(wm.make(rng, TGT_CONS, TGT_VOW, 3));
            }
            let synonym = (matches!(pos, Pos::Verb | Pos::Adj) && tgt.len() == 1 && rng.gen_bool(0.3))
                .then(|| wm.make(rng, TGT_CONS, TGT_VOW, syl));
            lemmas.push(Lemma {
                pos,
                src,
                tgt,
                synonym,
                paraphrase,
                confusable: vec![],
            });
        }
    }
    for k in 2..=13 {
        lemmas.push(Lemma {
            pos: Pos::Num,
            src: k.to_string(),
            tgt: vec![k.to_string()],
            synonym: None,
            paraphrase: None,
            confusable: vec![],
        });
    }
    lemmas.push(Lemma {
        pos: Pos::Punct,
        src: ".".into(),
        tgt: vec![".".into()],
        synonym: None,
        paraphrase: None,
        confusable: vec![],
    });
    let mut by_pos: BTreeMap<&'static str, Vec<usize>> = BTreeMap::new();
    for (i, l) in lemmas.iter().enumerate() {
        by_pos.entry(l.pos.tag()).or_default().push(i);
    }
    for i in 0..lemmas.len() {
        let same = &by_pos[lemmas[i].pos.tag()];
        if same.len() < 2 {
            continue;
        }
        let mut c: Vec<usize> = same.iter().copied().filter(|&j| j != i).collect();
        c.shuffle(rng);
        c.truncate(3);
        lemmas[i].confusable = c;
    }
    let zipf = by_pos
        .iter()
        .map(|(&tag, ids)| {
            let w: Vec<f64> = (0..ids.len()).map(|r| 1.0 / (r as f64 + 1.5)).collect();
            (tag, WeightedIndex::new(w).expect("non-empty"))
        })
        .collect();
    Lexicon { lemmas, by_pos, zipf }
}

#[derive(Clone, Copy, Debug, PartialEq)]
struct SrcTok {
    lemma: usize,
    plural: bool,
}

#[derive(Clone, Debug)]
struct TgtTok {
    surface: String,
    stem: String,
    pos: &'static str,
    /// Intended as a correct translation of a correctly recognized word.
    ok: bool,
}

#[derive(Clone, Copy, Debug)]
enum MtError {
    Lexical(usize),
    Inflection,
    Synonym,
    Paraphrase,
    Drop,
    Insert(usize),
}

impl Lexicon {
    fn sample(&self, rng: &mut ChaCha8Rng, pos: Pos) -> usize {
        let tag = pos.tag();
        self.by_pos[tag][self.zipf[tag].sample(rng)]
    }

    fn sentence(&self, rng: &mut ChaCha8Rng) -> Vec<SrcTok> {
        let t = TEMPLATES.choose(rng).unwrap();
        let mut out = Vec::with_capacity(t.len());
        for (k, &pos) in t.iter().enumerate() {
            let plural = pos == Pos::Noun && (k > 0 && t[k - 1] == Pos::Num || rng.gen_bool(0.3));
            out.push(SrcTok {
                lemma: self.sample(rng, pos),
                plural,
            });
        }
        out
    }

    fn src_token(&self, t: SrcTok) -> Token {
        let l = &self.lemmas[t.lemma];
        Token {
            surface: if t.plural { format!("{}s", l.src) } else { l.src.clone() },
            pos: Some(l.pos.tag().to_owned()),
            stem: Some(l.src.clone()),
        }
    }

    fn translate_word(&self, t: SrcTok, ok: bool) -> Vec<TgtTok> {
        let l = &self.lemmas[t.lemma];
        l.tgt
            .iter()
            .enumerate()
            .map(|(k, w)| TgtTok {
                surface: if k == 0 && t.plural { format!("{w}s") } else { w.clone() },
                stem: w.clone(),
                pos: if k == 0 { l.pos.tag() } else { "PRT" },
                ok,
            })
            .collect()
    }

    fn plan(&self, rng: &mut ChaCha8Rng, src: &[SrcTok], rate: f64) -> Vec<Option<MtError>> {
        src.iter()
            .map(|&t| {
                let l = &self.lemmas[t.lemma];
                if l.pos == Pos::Punct || !rng.gen_bool(rate) {
                    return None;
                }
                let r: f64 = rng.gen();
                Some(if r < 0.12 && l.pos == Pos::Noun {
                    MtError::Inflection
                } else if r < 0.24 && l.synonym.is_some() {
                    MtError::Synonym
                } else if r < 0.32 && l.paraphrase.is_some() {
                    MtError::Paraphrase
                } else if r < 0.44 {
                    MtError::Drop
                } else if r < 0.56 {
                    let pos = *[Pos::Det, Pos::Prep].choose(rng).unwrap();
                    MtError::Insert(self.sample(rng, pos))
                } else {
                    let same = &self.by_pos[l.pos.tag()];
                    let mut other = *same.choose(rng).unwrap();
                    while other == t.lemma && same.len() > 1 {
                        other = *same.choose(rng).unwrap();
                    }
                    MtError::Lexical(other)
                })
            })
            .collect()
    }

    /// Translates `src` (each token tagged with its transcript position, if
    /// any, and whether it was recognized correctly) under an error plan
    /// indexed by transcript position.
    fn translate(
        &self,
        src: &[(SrcTok, Option<usize>, bool)],
        plan: &[Option<MtError>],
    ) -> (Vec<TgtTok>, WordAlignment) {
        let mut chunks: Vec<Vec<(TgtTok, bool)>> = Vec::with_capacity(src.len());
        for &(t, origin, recognized) in src {
            let err = origin.and_then(|o| plan[o]);
            let aligned = |v: Vec<TgtTok>| v.into_iter().map(|x| (x, true)).collect::<Vec<_>>();
            let chunk = match err {
                None => aligned(self.translate_word(t, recognized)),
                Some(MtError::Lexical(other)) => aligned(self.translate_word(
                    SrcTok {
                        lemma: other,
                        plural: t.plural,
                    },
                    false,
                )),
                Some(MtError::Inflection) => aligned(self.translate_word(
                    SrcTok {
                        lemma: t.lemma,
                        plural: !t.plural,
                    },
                    recognized,
                )),
                Some(MtError::Synonym) => {
                    let l = &self.lemmas[t.lemma];
                    match &l.synonym {
                        Some(s) => aligned(vec![TgtTok {
                            surface: s.clone(),
                            stem: s.clone(),
                            pos: l.pos.tag(),
                            ok: recognized,
                        }]),
                        None => aligned(self.translate_word(t, false)),
                    }
                }
                Some(MtError::Paraphrase) => {
                    let l = &self.lemmas[t.lemma];
                    match &l.paraphrase {
                        Some(p) => aligned(vec![TgtTok {
                            surface: p.clone(),
                            stem: p.clone(),
                            pos: l.pos.tag(),
                            ok: false,
                        }]),
                        None => aligned(self.translate_word(t, false)),
                    }
                }
                Some(MtError::Drop) => vec![],
                Some(MtError::Insert(f)) => {
                    let mut c = aligned(self.translate_word(t, recognized));
                    c.extend(
                        self.translate_word(
                            SrcTok {
                                lemma: f,
                                plural: false,
                            },
                            false,
                        )
                        .into_iter()
                        .map(|x| (x, false)),
                    );
                    c
                }
            };
            chunks.push(chunk);
        }
        // noun-adjective order flips between the two languages
        let mut order: Vec<usize> = (0..src.len()).collect();
        let mut k = 0;
        while k + 1 < src.len() {
            let (a, b) = (self.lemmas[src[k].0.lemma].pos, self.lemmas[src[k + 1].0.lemma].pos);
            if a == Pos::Noun && b == Pos::Adj {
                order.swap(k, k + 1);
                k += 2;
            } else {
                k += 1;
            }
        }
        let mut out = Vec::new();
        let mut links = Vec::new();
        for i in order {
            for (tok, is_aligned) in chunks[i].drain(..) {
                if is_aligned {
                    links.push((i, out.len()));
                }
                out.push(tok);
            }
        }
        (out, WordAlignment::new(links).expect("unique links"))
    }
}

fn sentence(tokens: Vec<Token>, side: Side) -> Result<Sentence> {
    Sentence::new(tokens, side)
}

fn tgt_sentence(toks: &[TgtTok]) -> Result<Sentence> {
    sentence(
        toks.iter()
            .map(|t| Token {
                surface: t.surface.clone(),
                pos: Some(t.pos.to_owned()),
                stem: Some(t.stem.clone()),
            })
            .collect(),
        Side::Target,
    )
}

/// A slot whose first alternative is `word` with posterior `p`; the rest of
/// the mass goes to `others` in random proportions.
fn slot(rng: &mut ChaCha8Rng, start: f64, duration: f64, word: &str, p: f64, others: &[String]) -> Slot {
    let mut alts = vec![(word.to_owned(), p)];
    let others: Vec<&String> = others.iter().filter(|o| o.as_str() != word).collect();
    if others.is_empty() || p >= 1.0 {
        if p < 1.0 {
            alts.push(("<eps>".to_owned(), 1.0 - p));
        }
    } else {
        let w: Vec<f64> = others.iter().map(|_| rng.gen_range(0.2..1.0)).collect();
        let z: f64 = w.iter().sum();
        let mut seen = HashSet::new();
        for (o, wi) in others.iter().zip(&w) {
            if seen.insert(o.as_str()) {
                alts.push(((*o).clone(), (1.0 - p) * wi / z));
            } else if let Some(a) = alts.iter_mut().find(|a| &a.0 == *o) {
                a.1 += (1.0 - p) * wi / z;
            }
        }
    }
    Slot {
        start,
        duration,
        alternatives: alts,
    }
}

fn posterior(rng: &mut ChaCha8Rng, ok: bool) -> f64 {
    let u: f64 = rng.gen();
    let p = if ok { 0.45 + 0.55 * u.sqrt() } else { 0.1 + 0.5 * u };
    (p * 1000.0).round() / 1000.0
}

/// Everything the pipeline needs to run on the synthetic corpus.
#[derive(Clone, Debug)]
pub struct SynthCorpus {
    pub records: Vec<QuintupletRecord>,
    /// ARPA text over clean transcripts.
    pub source_lm: String,
    /// ARPA text over clean target sentences.
    pub target_lm: String,
    pub stoplist: String,
    pub synonyms: String,
    pub paraphrases: String,
    pub polysemy: String,
}

pub const CORPUS_FILE: &str = "corpus.jsonl";
pub const SOURCE_LM_FILE: &str = "source.arpa";
pub const TARGET_LM_FILE: &str = "target.arpa";
pub const STOPLIST_FILE: &str = "stoplist.txt";
pub const SYNONYMS_FILE: &str = "synonyms.tsv";
pub const PARAPHRASES_FILE: &str = "paraphrases.tsv";
pub const POLYSEMY_FILE: &str = "polysemy.tsv";

impl SynthCorpus {
    pub fn write_dir(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let files = [
            (CORPUS_FILE, write_corpus_jsonl(&self.records)),
            (SOURCE_LM_FILE, self.source_lm.clone()),
            (TARGET_LM_FILE, self.target_lm.clone()),
            (STOPLIST_FILE, self.stoplist.clone()),
            (SYNONYMS_FILE, self.synonyms.clone()),
            (PARAPHRASES_FILE, self.paraphrases.clone()),
            (POLYSEMY_FILE, self.polysemy.clone()),
        ];
        for (name, text) in files {
            let p = dir.join(name);
            fs::write(&p, text).map_err(|e| Error::io(&p, e))?;
        }
        Ok(())
    }
}

pub fn generate(cfg: &SynthConfig) -> Result<SynthCorpus> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let lex = build_lexicon(&mut rng);

    let mut src_lm_text = Vec::with_capacity(cfg.lm_sentences);
    let mut tgt_lm_text = Vec::with_capacity(cfg.lm_sentences);
    for _ in 0..cfg.lm_sentences {
        let s = lex.sentence(&mut rng);
        let tagged: Vec<_> = s.iter().enumerate().map(|(i, &t)| (t, Some(i), true)).collect();
        let (tgt, _) = lex.translate(&tagged, &vec![None; s.len()]);
        src_lm_text.push(s.iter().map(|&t| lex.src_token(t).surface).collect::<Vec<_>>());
        tgt_lm_text.push(tgt.into_iter().map(|t| t.surface).collect::<Vec<_>>());
    }

    let mut records = Vec::with_capacity(cfg.utterances);
    for u in 0..cfg.utterances {
        records.push(utterance(&mut rng, &lex, cfg, format!("synth-{:04}", u + 1))?);
    }

    let mut stop = BTreeSet::new();
    let mut synonyms = String::new();
    let mut paraphrases = String::new();
    let mut polysemy = BTreeMap::new();
    for l in &lex.lemmas {
        if l.pos.is_function() {
            stop.insert(l.tgt[0].clone());
        }
        if l.tgt.len() > 1 {
            stop.insert(l.tgt[1].clone());
        }
        if let Some(s) = &l.synonym {
            let _ = writeln!(synonyms, "{}\t{s}", l.tgt[0]);
        }
        if let Some(p) = &l.paraphrase {
            let _ = writeln!(paraphrases, "{p}\t{}", l.tgt.join(" "));
        }
        if matches!(l.pos, Pos::Noun | Pos::Verb | Pos::Adj) {
            let senses = rng.gen_range(1..=if l.pos.is_function() { 2 } else { 8 });
            polysemy.insert(l.tgt[0].clone(), senses);
            if l.pos == Pos::Noun {
                polysemy.insert(format!("{}s", l.tgt[0]), senses);
            }
        }
    }
    let stoplist = stop.into_iter().map(|w| w + "\n").collect();
    let polysemy = polysemy.into_iter().map(|(w, c)| format!("{w}\t{c}\n")).collect();
    Ok(SynthCorpus {
        records,
        source_lm: estimate_arpa(&src_lm_text, 3, 0.7)?,
        target_lm: estimate_arpa(&tgt_lm_text, 3, 0.7)?,
        stoplist,
        synonyms,
        paraphrases,
        polysemy,
    })
}

fn utterance(rng: &mut ChaCha8Rng, lex: &Lexicon, cfg: &SynthConfig, id: String) -> Result<QuintupletRecord> {
    let src = lex.sentence(rng);

    // recognition: substitutions by confusable words, deletions, insertions
    let mut hyp: Vec<(SrcTok, Option<usize>, bool)> = Vec::new();
    for (i, &t) in src.iter().enumerate() {
        let l = &lex.lemmas[t.lemma];
        let r: f64 = rng.gen();
        if l.pos == Pos::Punct {
            hyp.push((t, Some(i), true));
        } else if r < cfg.asr_indel && src.len() > 3 {
            // deleted
        } else if r < cfg.asr_indel + cfg.asr_substitution && !l.confusable.is_empty() {
            let other = *l.confusable.choose(rng).unwrap();
            hyp.push((
                SrcTok {
                    lemma: other,
                    plural: t.plural,
                },
                Some(i),
                false,
            ));
        } else {
            hyp.push((t, Some(i), true));
        }
        if l.pos != Pos::Punct && rng.gen_bool(cfg.asr_indel) {
            let pos = *[Pos::Det, Pos::Pron].choose(rng).unwrap();
            let f = lex.sample(rng, pos);
            hyp.push((
                SrcTok {
                    lemma: f,
                    plural: false,
                },
                None,
                false,
            ));
        }
    }

    let clean: Vec<_> = src.iter().enumerate().map(|(i, &t)| (t, Some(i), true)).collect();
    let no_errors = vec![None; src.len()];
    let plan = lex.plan(rng, &src, cfg.mt_error);
    let (e_ref, _) = lex.translate(&clean, &no_errors);
    let (e_mt, align_mt) = lex.translate(&clean, &plan);
    let (e_slt, align_slt) = lex.translate(&hyp, &plan);

    let f_ref = sentence(src.iter().map(|&t| lex.src_token(t)).collect(), Side::Source)?;
    let f_hyp = sentence(hyp.iter().map(|h| lex.src_token(h.0)).collect(), Side::Source)?;

    // recognition confusion network
    let mut slots = Vec::with_capacity(hyp.len());
    let mut clock = 0.0;
    for &(t, origin, ok) in &hyp {
        let tok = lex.src_token(t);
        let l = &lex.lemmas[t.lemma];
        let p = if l.pos == Pos::Punct { 1.0 } else { posterior(rng, ok) };
        let mut others: Vec<String> = Vec::new();
        if let (false, Some(o)) = (ok, origin) {
            others.push(lex.src_token(src[o]).surface);
        }
        for &c in l.confusable.iter().take(rng.gen_range(0..=2)) {
            others.push(
                lex.src_token(SrcTok {
                    lemma: c,
                    plural: t.plural,
                })
                .surface,
            );
        }
        let base = if l.pos == Pos::Punct {
            0.0
        } else {
            0.06 + 0.045 * tok.surface.len() as f64
        };
        let dur = ((base * if ok { 1.0 } else { 0.75 } * rng.gen_range(0.85..1.15)) * 100.0).round() / 100.0;
        slots.push(slot(
            rng,
            (clock * 100.0_f64).round() / 100.0,
            dur,
            &tok.surface,
            p,
            &others,
        ));
        clock += dur + 0.02;
    }
    let cn_asr = ConfusionNetwork::new(slots)?;

    let mt_cn = |rng: &mut ChaCha8Rng, toks: &[TgtTok]| -> Result<ConfusionNetwork> {
        let slots = toks
            .iter()
            .enumerate()
            .map(|(k, t)| {
                let p = if t.pos == "PUNCT" { 1.0 } else { posterior(rng, t.ok) };
                let others: Vec<String> = e_ref
                    .iter()
                    .filter(|r| r.pos == t.pos)
                    .map(|r| r.surface.clone())
                    .take(2)
                    .collect();
                slot(rng, k as f64, 0.0, &t.surface, p, &others)
            })
            .collect();
        ConfusionNetwork::new(slots)
    };
    let cn_mt_ref = mt_cn(rng, &e_mt)?;
    let cn_mt = mt_cn(rng, &e_slt)?;

    let mut sidecar = BTreeMap::new();
    for (field, toks) in [("e_hyp_mt", &e_mt), ("e_hyp_slt", &e_slt)] {
        let mut google = vec![];
        let mut bing = vec![];
        let mut constituent = vec![];
        let mut depth = vec![];
        for t in toks.iter() {
            google.push(u8::from(rng.gen_bool(if t.ok { 0.85 } else { 0.35 })).to_string());
            bing.push(u8::from(rng.gen_bool(if t.ok { 0.8 } else { 0.4 })).to_string());
            let pos = TAGS.iter().find(|p| p.tag() == t.pos).copied();
            constituent.push(pos.map_or("PRT", Pos::constituent).to_owned());
            let d = if pos.is_some_and(Pos::is_function) { 3 } else { 2 };
            depth.push((d + rng.gen_range(0..2)).to_string());
        }
        sidecar.insert(format!("{field}.occur_google"), google);
        sidecar.insert(format!("{field}.occur_bing"), bing);
        sidecar.insert(format!("{field}.constituent_label"), constituent);
        sidecar.insert(format!("{field}.dist_to_root"), depth);
    }

    let rec = QuintupletRecord {
        id,
        f_ref,
        f_hyp,
        e_hyp_mt: tgt_sentence(&e_mt)?,
        e_hyp_slt: tgt_sentence(&e_slt)?,
        e_ref: tgt_sentence(&e_ref)?,
        cn_asr: Some(cn_asr),
        cn_mt: Some(cn_mt),
        cn_mt_ref: Some(cn_mt_ref),
        align_src_tgt: Some(align_slt),
        align_ref_mt: Some(align_mt),
        sidecar,
    };
    rec.validate()?;
    Ok(rec)
}

const TAGS: [Pos; 8] = [
    Pos::Det,
    Pos::Noun,
    Pos::Verb,
    Pos::Adj,
    Pos::Prep,
    Pos::Pron,
    Pos::Num,
    Pos::Punct,
];
