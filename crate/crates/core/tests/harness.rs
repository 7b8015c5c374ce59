mod common;

use std::path::Path;

use layerbench::corpus::{load_manifest, materialize_task_bundle, Benchmark, LayerTag};
use layerbench::harness::{
    load_run, run_campaign, run_sue, AdapterConfig, AdapterKinds, CampaignConfig, ExecLimits, LedgerEntry, SueAdapter,
    SueTask, LEDGER_FILE,
};
use layerbench::stats::{aggregate_layer, FixClass, Metric};
use layerbench::Error;

fn small_bench(ids: &[&str]) -> (tempfile::TempDir, Benchmark) {
    let (tmp, root) = common::scratch_corpus("c-corpus");
    let mut bench = load_manifest(&root).unwrap();
    bench.bugs.retain(|b| ids.contains(&b.id.as_str()));
    (tmp, bench)
}

fn adapter(kind: &str) -> Box<dyn SueAdapter> {
    AdapterKinds::default().build(AdapterConfig::builtin(kind)).unwrap()
}

fn command(cmd: &str, budget: u32) -> Box<dyn SueAdapter> {
    let mut c = AdapterConfig::command("scripted", cmd);
    c.attempt_budget = budget;
    AdapterKinds::default().build(c).unwrap()
}

fn sue_on(bench: &Benchmark, adapter: &dyn SueAdapter) -> layerbench::harness::SueOutput {
    let tmp = tempfile::tempdir().unwrap();
    let bug = &bench.bugs[0];
    let bundle = materialize_task_bundle(bug, &tmp.path().join("b"), &ExecLimits::default()).unwrap();
    let out = tmp.path().join("out");
    run_sue(
        adapter,
        &SueTask {
            bundle: &bundle,
            out: &out,
            oracle: bug,
        },
    )
    .unwrap()
}

#[test]
fn adapter_configs_are_checked() {
    let kinds = AdapterKinds::default();
    assert_eq!(kinds.names(), ["buggy", "command", "never", "oracle"]);
    assert!(matches!(
        kinds.build(AdapterConfig::command("x", "run --out {out}")),
        Err(Error::Config(_))
    ));
    let mut zero = AdapterConfig::builtin("oracle");
    zero.attempt_budget = 0;
    assert!(matches!(kinds.build(zero), Err(Error::Config(_))));
    assert!(matches!(
        kinds.build(AdapterConfig::builtin("telepathy")),
        Err(Error::UnknownStrategy { .. })
    ));
}

#[test]
fn run_sue_keeps_the_budget_and_skips_bad_lines() {
    let (_tmp, bench) = small_bench(&["Clamp-1"]);
    let line = r#"{"bug_id":"Clamp-1","variant_id":"Clamp-1","attempt":N,"file":"src/clamp.c","function_name":"clamp","replacement":"int clamp(void){return 0;}"}"#;
    let script = format!(
        "test -f {{bundle}}/metadata.json && (echo 'not json'; for i in $(seq 1 12); do echo '{}' | sed \"s/N/$i/\"; done) > {{out}}/patches.jsonl",
        line
    );
    let out = sue_on(&bench, command(&script, 10).as_ref());
    assert_eq!(out.failure, None);
    assert_eq!(out.patches.len(), 10);
    assert_eq!(
        out.patches.iter().map(|p| p.attempt).collect::<Vec<_>>(),
        (1..=10).collect::<Vec<_>>()
    );
    assert!(out.patches.iter().all(|p| p.producer == "scripted"));
    assert!(
        out.notes[0].starts_with("patches.jsonl line 1: skipped"),
        "{:?}",
        out.notes
    );
    assert!(out.notes[1].contains("2 patch(es) over the attempt budget of 10"));

    let failed = sue_on(
        &bench,
        command("echo crashed >&2; exit 3 # {bundle} {out}", 10).as_ref(),
    );
    assert!(failed.patches.is_empty());
    assert!(failed.failure.unwrap().contains("exit code 3"));

    let oracle = sue_on(&bench, adapter("oracle").as_ref());
    assert_eq!(oracle.patches.len(), 1);
    assert_eq!(oracle.patches[0].replacement, bench.bugs[0].fixed_function.text);
}

fn strip_timing(path: &Path) -> Vec<serde_json::Value> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .map(|l| {
            let mut v: serde_json::Value = serde_json::from_str(l).unwrap();
            v.as_object_mut().unwrap().remove("timing");
            v
        })
        .collect()
}

#[test]
fn reference_adapters_bracket_the_metrics() {
    let (tmp, bench) = small_bench(&["Clamp-1", "Trim-1", "Hex-1"]);
    let runs = tmp.path().join("runs");
    let mut results = Vec::new();
    for kind in ["oracle", "never", "buggy"] {
        let mut cfg = CampaignConfig::new(kind, &runs);
        cfg.workers = 2;
        let a = adapter(kind);
        let summary = run_campaign(&bench, &[LayerTag::Remember], a.as_ref(), &cfg).unwrap();
        assert_eq!((summary.planned, summary.executed, summary.remaining), (3, 3, 0));
        assert!(summary.failures.is_empty(), "{:?}", summary.failures);
        let run = load_run(&runs, kind).unwrap();
        let matrices = run.matrices().unwrap();
        assert_eq!(matrices.len(), 1);
        results.push((run, aggregate_layer(&matrices[0]).unwrap()));
    }
    let (oracle_run, oracle) = &results[0];
    assert_eq!(oracle.total_bugs, 3);
    for m in Metric::ALL {
        assert_eq!(oracle.solved[&m], 3, "{m}");
    }
    let patch_entries: Vec<&LedgerEntry> = oracle_run.entries.iter().filter(|e| e.verdict.is_some()).collect();
    assert_eq!(patch_entries.len(), 3);
    assert!(patch_entries.iter().all(|e| e.verdict.as_ref().unwrap().em));

    let (never_run, never) = &results[1];
    assert_eq!(never.solved[&Metric::Pp], 0);
    assert_eq!(never.classes[&Metric::Pp][&FixClass::Fix0], 3);
    assert_eq!(never_run.entries.len(), 3, "only unit entries");

    let (_, buggy) = &results[2];
    assert_eq!(buggy.solved[&Metric::Pp], 0);
}

#[test]
fn interrupted_runs_resume_to_the_same_ledger() {
    let (tmp, bench) = small_bench(&["Clamp-1", "Trim-1", "Hex-1", "Flag-1"]);
    let a = adapter("oracle");

    let whole = tmp.path().join("whole");
    let mut cfg = CampaignConfig::new("r1", &whole);
    cfg.workers = 3;
    run_campaign(&bench, &[LayerTag::Remember], a.as_ref(), &cfg).unwrap();

    let parts = tmp.path().join("parts");
    let mut cfg = CampaignConfig::new("r1", &parts);
    cfg.max_units = Some(1);
    let first = run_campaign(&bench, &[LayerTag::Remember], a.as_ref(), &cfg).unwrap();
    assert_eq!((first.executed, first.remaining), (1, 3));
    assert!(matches!(load_run(&parts, "r1").unwrap().matrices(), Err(Error::IncompleteLedger(m)) if m.len() == 3));
    // a write cut short by the interruption
    let ledger = parts.join("r1").join(LEDGER_FILE);
    let mut text = std::fs::read_to_string(&ledger).unwrap();
    text.push_str("{\"run_id\":\"r1\",\"kind\":\"pa");
    std::fs::write(&ledger, text).unwrap();

    cfg.max_units = None;
    cfg.workers = 2;
    let rest = run_campaign(&bench, &[LayerTag::Remember], a.as_ref(), &cfg).unwrap();
    assert_eq!((rest.skipped, rest.executed, rest.remaining), (1, 3, 0));
    assert_eq!(strip_timing(&whole.join("r1").join(LEDGER_FILE)), strip_timing(&ledger));

    let again = run_campaign(&bench, &[LayerTag::Remember], a.as_ref(), &cfg).unwrap();
    assert_eq!((again.skipped, again.executed), (4, 0));
}

#[test]
fn runs_are_bound_to_their_plan() {
    let (tmp, bench) = small_bench(&["Clamp-1"]);
    let runs = tmp.path().join("runs");
    let cfg = CampaignConfig::new("r", &runs);
    run_campaign(&bench, &[LayerTag::Remember], adapter("never").as_ref(), &cfg).unwrap();
    let other = run_campaign(&bench, &[LayerTag::Remember], adapter("oracle").as_ref(), &cfg);
    assert!(matches!(other, Err(Error::Config(_))));
    assert!(matches!(load_run(&runs, "nope"), Err(Error::RunNotFound(_))));
    assert!(matches!(
        run_campaign(
            &bench,
            &[LayerTag::Apply],
            adapter("never").as_ref(),
            &CampaignConfig::new("a", &runs)
        ),
        Err(Error::Config(_))
    ));
    let bad = run_campaign(
        &bench,
        &[LayerTag::Remember],
        adapter("never").as_ref(),
        &CampaignConfig::new("../x", &runs),
    );
    assert!(matches!(bad, Err(Error::Config(_))));
}

#[test]
fn adapter_crashes_land_in_the_failure_manifest() {
    let (tmp, bench) = small_bench(&["Clamp-1", "Hex-1"]);
    let runs = tmp.path().join("runs");
    let a = command(
        "grep -q Hex {bundle}/metadata.json && exit 1; : > {out}/patches.jsonl",
        10,
    );
    let summary = run_campaign(
        &bench,
        &[LayerTag::Remember],
        a.as_ref(),
        &CampaignConfig::new("c", &runs),
    )
    .unwrap();
    assert_eq!(summary.remaining, 0);
    assert_eq!(summary.failures.len(), 1);
    assert_eq!(summary.failures[0].bug_id, "Hex-1");
    let on_disk: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(runs.join("c").join("failures.json")).unwrap()).unwrap();
    assert_eq!(on_disk[0]["variant_id"], "Hex-1");
    let report = aggregate_layer(&load_run(&runs, "c").unwrap().matrices().unwrap()[0]).unwrap();
    assert_eq!(report.solved[&Metric::Pp], 0);
}
