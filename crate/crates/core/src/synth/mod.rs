//! Understand layer: model-written bug/fix/test triples, checked by
//! building and running them.

mod candidate;
mod generate;
mod layer;
mod verify;

pub use candidate::{CandidateStatus, HistoryEntry, Part, SynthCandidate, VerifyOutcome};
pub use generate::{synthesize_variants, BehaviorMode, RootCauseMode, SynthContext, SynthMode, SynthModes, REASKS};
pub use layer::{build_understand_layer, failing_output, BugYield, UnderstandOptions, UnderstandReport};
pub use verify::{refine_candidate, settle_candidate, verify_candidate, DEFAULT_MAX_REFINE_ITERS, LOG_TAIL};
