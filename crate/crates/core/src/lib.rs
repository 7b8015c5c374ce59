pub mod corpus;
pub mod error;
pub mod fsutil;
pub mod harness;
pub mod inject;
pub mod lang;
pub mod llm;
pub mod patch_eval;
pub mod perturb;
pub mod report;
pub mod stats;
pub mod synth;

pub use error::{Error, Result};
