//! Analyze layer: the parent bug's defect injected into similar functions
//! of other projects.

mod ingest;
#[allow(clippy::module_inception)]
mod inject;
mod layer;
mod verify;

pub use ingest::{
    ingest_clone_candidates, read_search_export, CloneCandidate, IngestReport, SearchRecord, MAX_PER_PARENT,
};
pub use inject::{generate_tests, inject_bug, splice_function, InjectedVariant, REASKS};
pub use layer::{build_analyze_layer, AnalyzeOptions, AnalyzeReport, CandidateOutcome, ParentCoverage};
pub use verify::{verify_injected, verify_refine};
