//! Word-level confidence estimation for spoken language translation.

pub mod align;
pub mod crf;
pub mod data;
pub mod error;
pub mod eval;
pub mod features;
pub mod fusion;
pub mod lm;
pub mod pipeline;
pub mod projection;
pub mod redecode;
pub mod sbs;
pub mod synth;

pub use error::{Error, Result};
