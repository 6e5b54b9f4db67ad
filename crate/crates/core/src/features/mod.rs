//! Per-token feature extraction for ASR hypotheses and translation hypotheses.

mod asr;
mod mt;

pub use asr::{asr_columns, asr_table, extract_asr_features, AsrFeatureVector, ASR_FEATURES};
pub use mt::{
    extract_mt_table, parse_polysemy, parse_stoplist, MtExtractor, MtFeature, MtFeatureConfig, MtResources, NULL, OFF,
};

/// Sentence-boundary placeholders used in context features.
pub const BOUNDARY_START: &str = "<s>";
pub const BOUNDARY_END: &str = "</s>";
