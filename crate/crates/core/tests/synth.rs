mod common;

use layerbench::corpus::{lint_instance, load_manifest, LayerTag, TransformScheme};
use layerbench::harness::ExecLimits;
use layerbench::lang::SubjectProfile;
use layerbench::llm::{LlmGateway, LlmMode, Script, ScriptRule, ScriptedProvider, TranscriptStore};
use layerbench::synth::{
    build_understand_layer, refine_candidate, settle_candidate, synthesize_variants, verify_candidate, CandidateStatus,
    Part, SynthCandidate, SynthContext, SynthModes, UnderstandOptions, VerifyOutcome,
};

fn buggy(name: &str) -> String {
    format!("int {name}(int n)\n{{\n    int total = 0;\n    for (int i = 1; i < n; i++)\n        total += i;\n    return total;\n}}\n")
}

fn fixed(name: &str) -> String {
    buggy(name).replace("i < n", "i <= n")
}

fn test_src(name: &str, expect: i32) -> String {
    format!("int {name}(int n);\n\nint main(void)\n{{\n    return {name}(3) == {expect} ? 0 : 1;\n}}\n")
}

fn block(name: &str, b: &str, f: &str, t: &str) -> String {
    format!("FUNCTION: {name}\n<<<BUGGY>>>\n{b}<<<FIXED>>>\n{f}<<<TEST>>>\n{t}<<<END>>>\n")
}

fn good(name: &str) -> String {
    block(name, &buggy(name), &fixed(name), &test_src(name, 6))
}

fn rule(template: &str, contains: &[&str], responses: Vec<String>, repeat: bool) -> ScriptRule {
    ScriptRule {
        template: template.into(),
        contains: contains.iter().map(|s| s.to_string()).collect(),
        responses,
        repeat,
    }
}

fn gateway(rules: Vec<ScriptRule>) -> LlmGateway {
    let provider = ScriptedProvider::new("claude", Script { rules });
    LlmGateway::new(
        LlmMode::Record,
        "claude",
        Some(Box::new(provider)),
        TranscriptStore::in_memory(),
    )
    .unwrap()
}

fn candidate(name: &str, b: String, f: String, t: String) -> SynthCandidate {
    SynthCandidate {
        parent_id: "Clamp-1".into(),
        mode: "behavior".into(),
        function_name: name.into(),
        buggy_source: b,
        fixed_source: f,
        test_source: t,
        iteration: 0,
        status: CandidateStatus::Unverified,
        review_flag: false,
        history: vec![],
        error: None,
    }
}

fn c() -> SubjectProfile {
    SubjectProfile::c()
}

#[test]
fn verification_classifies_each_contract_breach() {
    let p = c();
    let scaffold = p.scaffold.as_ref().unwrap();
    let tmp = tempfile::tempdir().unwrap();
    let limits = ExecLimits::default();
    let run = |cand: &SynthCandidate| verify_candidate(cand, scaffold, &tmp.path().join("v"), &limits).unwrap();

    assert_eq!(
        run(&candidate("s", buggy("s"), fixed("s"), test_src("s", 6))),
        VerifyOutcome::Ok
    );
    let vacuous = candidate("s", buggy("s"), fixed("s"), "int main(void) { return 0; }\n".into());
    assert!(matches!(run(&vacuous), VerifyOutcome::TestNotFailingOnBuggy { .. }));
    let wrong = candidate("s", buggy("s"), fixed("s"), test_src("s", 5));
    assert!(matches!(run(&wrong), VerifyOutcome::TestFailingOnFixed { .. }));
    let broken = candidate(
        "s",
        buggy("s").replace("total = 0;", "total = 0"),
        fixed("s"),
        test_src("s", 6),
    );
    match run(&broken) {
        VerifyOutcome::CompileFail { part, log } => {
            assert_eq!(part, Part::Buggy);
            assert!(log.contains("error"), "{log}");
        }
        other => panic!("{other:?}"),
    }
    let bad_test = candidate("s", buggy("s"), fixed("s"), "int main(void) { return }\n".into());
    assert!(matches!(
        run(&bad_test),
        VerifyOutcome::CompileFail { part: Part::Test, .. }
    ));
}

#[test]
fn refinement_regenerates_only_the_blamed_part() {
    let p = c();
    let llm = gateway(vec![
        rule(
            "refine.test",
            &[],
            vec![format!("<<<SOURCE>>>\n{}<<<END>>>", test_src("s", 6))],
            false,
        ),
        rule(
            "refine.compile",
            &["part: buggy", "total = 0\n"],
            vec![format!("```c\n{}```", buggy("s"))],
            false,
        ),
    ]);
    let wrong = candidate("s", buggy("s"), fixed("s"), test_src("s", 5));
    let outcome = VerifyOutcome::TestFailingOnFixed { log: "exit 1".into() };
    let refined = refine_candidate(wrong.clone(), &outcome, &p, &llm, 3).unwrap();
    assert_eq!(refined.iteration, 1);
    assert!(refined.review_flag);
    assert_eq!(refined.status, CandidateStatus::Unverified);
    assert_eq!(refined.test_source, test_src("s", 6));
    assert_eq!(
        (&refined.buggy_source, &refined.fixed_source),
        (&wrong.buggy_source, &wrong.fixed_source)
    );
    assert_eq!(llm.transcripts().entries().last().unwrap().template_id, "refine.test");

    let mut at_cap = wrong.clone();
    at_cap.iteration = 3;
    let done = refine_candidate(at_cap, &outcome, &p, &llm, 3).unwrap();
    assert_eq!(done.status, CandidateStatus::Rejected);
    assert_eq!(llm.provider_calls(), 1);
}

#[test]
fn broken_candidate_is_repaired_by_the_loop() {
    let p = c();
    let llm = gateway(vec![rule(
        "refine.compile",
        &[],
        vec![format!("<<<SOURCE>>>\n{}<<<END>>>", buggy("s"))],
        false,
    )]);
    let tmp = tempfile::tempdir().unwrap();
    let broken = candidate(
        "s",
        buggy("s").replace("total = 0;", "total = 0"),
        fixed("s"),
        test_src("s", 6),
    );
    let settled = settle_candidate(broken, &p, &llm, tmp.path(), &ExecLimits::default(), 3).unwrap();
    assert_eq!(settled.status, CandidateStatus::Verified);
    assert_eq!(settled.iteration, 1);
    let outcomes: Vec<&str> = settled.history.iter().map(|h| h.outcome.as_str()).collect();
    assert_eq!(outcomes, ["compile_fail", "ok"]);
}

#[test]
fn hopeless_candidate_stops_at_the_budget() {
    let p = c();
    let vacuous = "int main(void) { return 0; }\n".to_string();
    let llm = gateway(vec![rule(
        "refine.test",
        &[],
        vec![format!("<<<SOURCE>>>\n{vacuous}<<<END>>>")],
        true,
    )]);
    let tmp = tempfile::tempdir().unwrap();
    let c0 = candidate("s", buggy("s"), fixed("s"), vacuous);
    let settled = settle_candidate(c0, &p, &llm, tmp.path(), &ExecLimits::default(), 3).unwrap();
    assert_eq!(settled.status, CandidateStatus::Rejected);
    assert_eq!(settled.iteration, 3);
    assert_eq!(settled.history.len(), 4);
}

fn parent() -> (tempfile::TempDir, layerbench::corpus::Benchmark) {
    let (tmp, root) = common::scratch_corpus("c-corpus");
    let mut bench = load_manifest(&root).unwrap();
    bench.bugs.retain(|b| b.id == "Clamp-1");
    (tmp, bench)
}

#[test]
fn synthesis_parses_screens_and_reasks() {
    let (_tmp, bench) = parent();
    let bug = &bench.bugs[0];
    let modes = SynthModes::default();
    let ctx = SynthContext::default();

    let llm = gateway(vec![rule("understand.behavior.generate", &[], vec![good("s")], false)]);
    let got = synthesize_variants(bug, &bench.profile, modes.get("behavior").unwrap(), 1, &ctx, &llm).unwrap();
    assert_eq!(got.len(), 1);
    assert_eq!(got[0].status, CandidateStatus::Unverified);
    assert_eq!(got[0].buggy_source, buggy("s"));
    assert_eq!(got[0].test_source, test_src("s", 6));

    let fix_only = format!("FUNCTION: s\n<<<FIXED>>>\n{}<<<END>>>\n", fixed("s"));
    let llm = gateway(vec![rule("understand.behavior.generate", &[], vec![fix_only], true)]);
    let got = synthesize_variants(bug, &bench.profile, modes.get("behavior").unwrap(), 1, &ctx, &llm).unwrap();
    assert_eq!(got[0].status, CandidateStatus::Rejected);
    assert!(got[0].error.as_deref().unwrap().contains("missing <<<BUGGY>>>"));
    assert_eq!(llm.provider_calls(), 3);

    // a copy of the parent is refused once, then a distinct program is taken
    let copy = block(
        "clamp",
        &bug.buggy_function.text,
        &bug.fixed_function.text,
        &test_src("clamp", 0),
    );
    let llm = gateway(vec![
        rule(
            "understand.root_cause.analyze",
            &[],
            vec!["The upper bound branch returns the wrong limit.".into()],
            false,
        ),
        rule("understand.root_cause.generate", &[], vec![copy, good("s")], false),
    ]);
    let got = synthesize_variants(bug, &bench.profile, modes.get("root_cause").unwrap(), 1, &ctx, &llm).unwrap();
    assert_eq!(got[0].function_name, "s");
    assert_eq!(llm.provider_calls(), 3);
    let prompts: Vec<String> = llm.transcripts().entries().iter().map(|e| e.prompt.clone()).collect();
    assert!(prompts[0].contains("int clamp(int value"));
    assert!(prompts[1].contains("The upper bound branch returns the wrong limit."));
    assert!(prompts[2].contains("copy of the original"));
}

fn layer_with(
    responses: String,
    refine: Vec<ScriptRule>,
) -> (
    tempfile::TempDir,
    layerbench::corpus::Benchmark,
    layerbench::synth::UnderstandReport,
) {
    let (tmp, mut bench) = parent();
    let mut rules = vec![
        rule("understand.root_cause.analyze", &[], vec!["Wrong bound.".into()], true),
        rule("understand.root_cause.generate", &[], vec![responses], true),
    ];
    rules.extend(refine);
    let llm = gateway(rules);
    let modes = SynthModes::default();
    let opts = UnderstandOptions {
        jobs: 2,
        ..Default::default()
    };
    let report = build_understand_layer(&mut bench, modes.get("root_cause").unwrap(), &llm, &opts).unwrap();
    (tmp, bench, report)
}

#[test]
fn five_valid_triples_make_a_full_set() {
    let names = ["sa", "sb", "sc", "sd", "se"];
    let text: String = names.iter().map(|n| good(n)).collect();
    let (_tmp, bench, report) = layer_with(text, vec![]);
    assert_eq!(report.group, "synthetic_root_cause");
    assert_eq!(
        (report.bugs[0].verified, report.bugs[0].rejected),
        (5, 0),
        "{:?}",
        report.bugs[0].error
    );
    let set = bench.sets(LayerTag::Understand).next().unwrap();
    assert_eq!(set.variants.iter().map(|v| v.slot).collect::<Vec<_>>(), [1, 2, 3, 4, 5]);
    for v in &set.variants {
        assert_eq!(v.transform.scheme, TransformScheme::SyntheticRootCause);
        assert_eq!(
            lint_instance(&v.bug, &bench.profile, &ExecLimits::default()).unwrap(),
            None,
            "{}",
            v.bug.id
        );
        let dir = bench.root.join("variants/understand/Clamp-1").join(v.slot.to_string());
        assert!(dir.join("candidate.json").is_file());
    }
    // survives a reload from disk
    let again = load_manifest(&bench.root).unwrap();
    assert_eq!(again.sets(LayerTag::Understand).count(), 1);
}

#[test]
fn partial_and_empty_yields() {
    let vacuous = "int main(void) { return 0; }\n";
    let mut text: String = ["sa", "sb", "sc"].iter().map(|n| good(n)).collect();
    text.push_str(&block("sd", &buggy("sd"), &fixed("sd"), vacuous));
    text.push_str(&block("se", &buggy("se"), &fixed("se"), vacuous));
    let refine = vec![rule(
        "refine.test",
        &[],
        vec![format!("<<<SOURCE>>>\n{vacuous}<<<END>>>")],
        true,
    )];
    let (_tmp, bench, report) = layer_with(text, refine);
    assert_eq!(
        (
            report.bugs[0].requested,
            report.bugs[0].verified,
            report.bugs[0].rejected
        ),
        (5, 3, 2)
    );
    assert_eq!(bench.sets(LayerTag::Understand).next().unwrap().variants.len(), 3);
    let rejected: SynthCandidate = layerbench::fsutil::read_json(
        &bench
            .root
            .join("candidates/synthetic_root_cause/Clamp-1/4/candidate.json"),
    )
    .unwrap();
    assert_eq!(rejected.status, CandidateStatus::Rejected);
    assert!(rejected.review_flag);

    let (_tmp, bench, report) = layer_with("nothing useful".into(), vec![]);
    assert_eq!(report.uncovered(), ["Clamp-1"]);
    assert_eq!(bench.sets(LayerTag::Understand).count(), 0);
}
