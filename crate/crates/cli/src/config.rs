//! Pipeline configuration file. Relative paths resolve against the directory
//! holding the file; command-line flags override file values.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use wce::align::{MatchResources, StemSource, TerConfig};
use wce::crf::TrainConfig;
use wce::data::{CorpusFormat, Task};
use wce::features::MtFeatureConfig;
use wce::fusion::FusionConfig;
use wce::projection::Strategy;
use wce::Error;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Jsonl,
    Columns,
}

impl From<Format> for CorpusFormat {
    fn from(f: Format) -> Self {
        match f {
            Format::Jsonl => CorpusFormat::Jsonl,
            Format::Columns => CorpusFormat::Columns,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub corpus: Option<PathBuf>,
    pub format: Format,
    pub task: Option<Task>,
    pub threshold: f64,
    pub jobs: Option<usize>,
    pub labels: LabelSection,
    pub asr: AsrSection,
    pub mt: MtFeatureConfig,
    pub train: TrainConfig,
    pub fusion: FusionConfig,
    pub sweep: SweepSection,
    pub rescore: RescoreSection,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            corpus: None,
            format: Format::Jsonl,
            task: None,
            threshold: 0.5,
            jobs: None,
            labels: LabelSection::default(),
            asr: AsrSection::default(),
            mt: MtFeatureConfig::default(),
            train: TrainConfig::default(),
            fusion: FusionConfig::default(),
            sweep: SweepSection::default(),
            rescore: RescoreSection::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LabelSection {
    pub synonyms: Option<PathBuf>,
    pub paraphrases: Option<PathBuf>,
    /// Match on the `stem` annotation when both tokens carry one.
    pub stems: bool,
    pub ter: TerConfig,
}

impl Default for LabelSection {
    fn default() -> Self {
        LabelSection {
            synonyms: None,
            paraphrases: None,
            stems: true,
            ter: TerConfig::default(),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AsrSection {
    /// LM over source transcripts.
    pub lm: Option<PathBuf>,
    pub projection: Option<Strategy>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSection {
    pub steps: usize,
}

impl Default for SweepSection {
    fn default() -> Self {
        SweepSection { steps: 100 }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RescoreSection {
    pub reward: Option<f64>,
    pub penalty: Option<f64>,
}

impl Config {
    /// Reads, resolves and validates a configuration file.
    pub fn load(path: &Path) -> Result<Self, Error> {
        let text = fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let mut cfg: Config =
            toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {}", path.display(), e.message())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        cfg.resolve(base);
        cfg.validate()?;
        Ok(cfg)
    }

    fn resolve(&mut self, base: &Path) {
        let fix = |p: &mut Option<PathBuf>| {
            if let Some(x) = p.as_mut() {
                *x = base.join(&*x);
            }
        };
        fix(&mut self.corpus);
        fix(&mut self.labels.synonyms);
        fix(&mut self.labels.paraphrases);
        fix(&mut self.asr.lm);
        fix(&mut self.mt.stoplist);
        fix(&mut self.mt.polysemy_lexicon);
        fix(&mut self.mt.source_lm);
        fix(&mut self.mt.target_lm);
    }

    pub fn validate(&self) -> Result<(), Error> {
        wce::pipeline::check_threshold(self.threshold)?;
        self.train.validate()?;
        self.fusion.validate()?;
        self.labels.ter.validate()?;
        self.mt.enabled_set()?;
        if self.sweep.steps == 0 {
            return Err(Error::Config("sweep.steps must be >= 1".into()));
        }
        if self.jobs == Some(0) {
            return Err(Error::Config("jobs must be >= 1".into()));
        }
        for w in [self.rescore.reward, self.rescore.penalty].into_iter().flatten() {
            if !(w.is_finite() && w >= 0.0) {
                return Err(Error::Config("rescore weights must be finite and >= 0".into()));
            }
        }
        let paths = [
            &self.corpus,
            &self.labels.synonyms,
            &self.labels.paraphrases,
            &self.asr.lm,
            &self.mt.stoplist,
            &self.mt.polysemy_lexicon,
            &self.mt.source_lm,
            &self.mt.target_lm,
        ];
        for p in paths.into_iter().flatten() {
            if !p.exists() {
                return Err(Error::Config(format!("referenced file {} does not exist", p.display())));
            }
        }
        Ok(())
    }

    pub fn match_resources(&self) -> Result<MatchResources, Error> {
        let mut res = MatchResources::new();
        if let Some(p) = &self.labels.synonyms {
            res.load_synonyms(p)?;
        }
        if let Some(p) = &self.labels.paraphrases {
            res.load_paraphrases(p)?;
        }
        if !self.labels.stems {
            res.stem_source = StemSource::Disabled;
        }
        Ok(res)
    }
}
