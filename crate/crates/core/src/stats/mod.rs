//! FIX classes, per-layer solved rates, paired tests and cross-layer change.

mod aggregate;
mod fix;
mod mcnemar;
mod percent;

pub use aggregate::{
    aggregate_layer, cross_layer_delta, BugOutcome, DeltaReport, LayerReport, Metric, MetricDelta, SolveMatrix,
    SolveRow,
};
pub use fix::{classify_fix, FixClass};
pub use mcnemar::{mcnemar, mcnemar_counts, McNemarMethod, McNemarResult, ALPHA, EXACT_BELOW};
pub use percent::Ratio;
