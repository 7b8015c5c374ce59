//! Apply layer: renaming and comment perturbation.

mod comments;
mod plan;
mod rename;
mod scheme;

pub use comments::{perturb_comments, perturb_region, TEXTUAL_COMMENT};
pub use plan::{
    hash_name, hash_plan_for_names, hash_rename_plan, project_identifiers, rephrase_plan_for_names,
    rephrase_rename_plan, RenamePlan, RenameScheme as PlanScheme, REPHRASE_ROUNDS,
};
pub use rename::{apply_rename, verify_renamed, RenameOutcome};
pub use scheme::{
    generate_apply_layer, ApplyOptions, ApplyOutcome, ApplyReport, ApplyScheme, ApplySchemes, CommentScheme,
    RenameScheme,
};
