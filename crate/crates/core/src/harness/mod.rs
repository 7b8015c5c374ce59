mod adapter;
mod campaign;
mod exec;
mod ledger;
mod pool;

pub use adapter::{
    run_sue, AdapterConfig, AdapterKinds, CommandAdapter, Invocation, Reference, ReferenceAdapter, SueAdapter,
    SueOutput, SueTask, DEFAULT_ADAPTER_TIMEOUT_S, DEFAULT_ATTEMPT_BUDGET,
};
pub use campaign::{plan_run, run_campaign, CampaignConfig, CampaignSummary};
pub use exec::{execute_build_test, tail, ExecLimits, ExecResult};
pub use ledger::{
    completed_units, load_run, read_ledger, validate_run_id, EntryKind, LedgerEntry, LedgerWriter, PlannedUnit,
    RunPlan, RunRecord, Timing, UnitFailure, FAILURES_FILE, LEDGER_FILE, PLAN_FILE,
};
pub use pool::parallel_map;
