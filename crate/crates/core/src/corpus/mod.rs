//! Bug corpus: originals, layered variants and task bundles.

mod bundle;
mod lint;
mod model;
mod store;

pub use bundle::{materialize_task_bundle, run_checkout, BundleMetadata, CheckoutRun, TaskBundle};
pub use lint::{lint_benchmark, lint_instance, LintReport};
pub use model::{
    variant_id, BugInstance, CommentMode, LayerTag, Provenance, RenameTargets, SourceRegion, TransformDescriptor,
    TransformScheme, Variant, VariantSet,
};
pub use store::{
    checkout, instance_from_record, load_manifest, Benchmark, EvalUnit, Manifest, ManifestBug, VariantRecord,
};
