mod common;

use std::collections::BTreeSet;
use std::path::Path;

use layerbench::corpus::{lint_instance, load_manifest, CommentMode, LayerTag, RenameTargets, TransformScheme};
use layerbench::fsutil;
use layerbench::harness::ExecLimits;
use layerbench::lang::{index_call_sites, resolve_function_scope, source_files, tokenize, SubjectProfile, TokenKind};
use layerbench::llm::{LlmGateway, LlmMode, Script, ScriptRule, ScriptedProvider, TranscriptStore};
use layerbench::perturb::{
    apply_rename, generate_apply_layer, hash_plan_for_names, perturb_comments, rephrase_plan_for_names, ApplyOptions,
    ApplySchemes, TEXTUAL_COMMENT,
};
use layerbench::Error;
use proptest::prelude::*;

const STAMP: u64 = 1_700_000_000;

fn ids(list: &[(String, String)]) -> Vec<&str> {
    list.iter().map(|(id, _)| id.as_str()).collect()
}

fn token_texts(src: &str, p: &SubjectProfile) -> Vec<(TokenKind, String)> {
    tokenize(src, p)
        .unwrap()
        .into_iter()
        .map(|t| (t.kind, t.text))
        .collect()
}

#[test]
fn function_renaming_excludes_exactly_the_hazards() {
    let (_tmp, root) = common::scratch_corpus("c-corpus");
    let mut bench = load_manifest(&root).unwrap();
    let schemes = ApplySchemes::default();
    let opts = ApplyOptions {
        targets: RenameTargets::Funcs,
        clock_stamp: STAMP,
        jobs: 4,
        ..Default::default()
    };
    let report = generate_apply_layer(&mut bench, schemes.get("hash").unwrap(), &opts).unwrap();
    assert!(report.failed.is_empty(), "{:?}", report.failed);
    assert_eq!(report.generated.len(), 9);
    assert_eq!(ids(&report.excluded), ["StrTab-1", "Normalize-1", "CmpInt-1"]);
    assert_eq!(report.group, "hash_rename/funcs");

    let clamp = bench.instance("Clamp-1-apply-v2").unwrap();
    let new = format!("f_{}", &layerbench::fsutil::sha256_hex(b"clamp|1700000000")[..16]);
    assert_eq!(new, "f_626a7984462c94ef");
    assert_eq!(clamp.function_name, new);
    assert!(clamp.fixed_function.text.contains(&format!("int {new}(int value")));
    // prototype, caller and tests all follow the new name
    let left = index_call_sites(&clamp.buggy_root, &bench.profile, "clamp");
    assert!(left.definitions.is_empty() && left.sites.is_empty());
}

#[test]
fn java_hazards_are_never_renamed() {
    let (_tmp, root) = common::scratch_corpus("java-hazards");
    let mut bench = load_manifest(&root).unwrap();
    let schemes = ApplySchemes::default();
    let hash = schemes.get("hash").unwrap();
    for targets in [RenameTargets::Funcs, RenameTargets::Both] {
        let opts = ApplyOptions {
            targets,
            clock_stamp: STAMP,
            ..Default::default()
        };
        let report = generate_apply_layer(&mut bench, hash, &opts).unwrap();
        assert_eq!(report.generated, ["Clean-1"]);
        assert_eq!(ids(&report.excluded), ["Overload-1", "Inherit-1", "Reflect-1"]);
        let (_, reason) = &report.excluded[0];
        assert!(reason.contains("hazard"), "{reason}");
    }
    let opts = ApplyOptions {
        targets: RenameTargets::Vars,
        clock_stamp: STAMP,
        ..Default::default()
    };
    let report = generate_apply_layer(&mut bench, hash, &opts).unwrap();
    assert_eq!(report.generated.len(), 4, "{:?} {:?}", report.excluded, report.failed);
}

#[test]
fn renamed_variants_keep_their_behavior() {
    let (_tmp, root) = common::scratch_corpus("c-corpus");
    let mut bench = load_manifest(&root).unwrap();
    let schemes = ApplySchemes::default();
    for targets in [RenameTargets::Vars, RenameTargets::Both] {
        let opts = ApplyOptions {
            targets,
            clock_stamp: STAMP,
            jobs: 4,
            ..Default::default()
        };
        let report = generate_apply_layer(&mut bench, schemes.get("hash").unwrap(), &opts).unwrap();
        assert!(report.failed.is_empty(), "{:?}", report.failed);
    }
    for mode in CommentMode::ALL {
        let opts = ApplyOptions {
            comment_mode: mode,
            ..Default::default()
        };
        let report = generate_apply_layer(&mut bench, schemes.get("comments").unwrap(), &opts).unwrap();
        assert!(report.failed.is_empty(), "{:?}", report.failed);
    }
    let limits = ExecLimits::default();
    let mut checked = 0;
    for set in bench.sets(LayerTag::Apply) {
        for v in &set.variants {
            assert_eq!(
                lint_instance(&v.bug, &bench.profile, &limits).unwrap(),
                None,
                "{}",
                v.bug.id
            );
            checked += 1;
        }
    }
    // 12 vars + 9 both + comment variants for every bug whose function changes
    assert!(checked >= 12 + 9 + 24, "{checked}");
}

#[test]
fn hash_generation_is_byte_reproducible() {
    let digest = || {
        let (_tmp, root) = common::scratch_corpus("c-corpus");
        let mut bench = load_manifest(&root).unwrap();
        let opts = ApplyOptions {
            targets: RenameTargets::Both,
            clock_stamp: STAMP,
            jobs: 3,
            ..Default::default()
        };
        generate_apply_layer(&mut bench, ApplySchemes::default().get("hash").unwrap(), &opts).unwrap();
        fsutil::tree_digest(&root.join("variants")).unwrap()
    };
    assert_eq!(digest(), digest());
}

fn write(root: &Path, rel: &str, text: &str) {
    fsutil::write(&root.join(rel), text).unwrap();
}

#[test]
fn function_rename_rewrites_definition_and_all_calls() {
    let tmp = tempfile::tempdir().unwrap();
    let src = tmp.path().join("src");
    write(
        &src,
        "a.c",
        "int twice(int x)\n{\n    return x * 2;\n}\n\nint four(int x) { return twice(twice(x)); }\n",
    );
    write(&src, "b.c", "int use(int y) { return twice(y) + 1; }\n");
    let p = SubjectProfile::c();
    let text = std::fs::read_to_string(src.join("a.c")).unwrap();
    let scope = resolve_function_scope(&text, &p, "twice", None).unwrap();
    let calls = index_call_sites(&src, &p, "twice");
    let funcs = BTreeSet::from(["twice".to_string()]);
    let plan = hash_plan_for_names(&BTreeSet::new(), &funcs, RenameTargets::Funcs, STAMP, &BTreeSet::new()).unwrap();
    let out = tmp.path().join("out");
    let outcome = apply_rename(&src, &out, &plan, Path::new("a.c"), &scope, Some(&calls)).unwrap();
    assert_eq!(outcome.total(), 4);
    assert_eq!(outcome.edits.len(), 2);
    let new = &plan.funcs["twice"];
    let b = std::fs::read_to_string(out.join("b.c")).unwrap();
    assert_eq!(b, format!("int use(int y) {{ return {new}(y) + 1; }}\n"));
    // untouched source tree
    assert_eq!(std::fs::read_to_string(src.join("a.c")).unwrap(), text);
}

#[test]
fn hazard_and_overlap_abort_before_writing() {
    let tmp = tempfile::tempdir().unwrap();
    let src = tmp.path().join("src");
    write(
        &src,
        "a.c",
        "int f(int x) { return x; }\nconst char *n = \"f\";\nint g(void) { return f(1); }\n",
    );
    let p = SubjectProfile::c();
    let text = std::fs::read_to_string(src.join("a.c")).unwrap();
    let scope = resolve_function_scope(&text, &p, "f", None).unwrap();
    let calls = index_call_sites(&src, &p, "f");
    assert!(calls.hazards.reflective_or_string_refs);
    let funcs = BTreeSet::from(["f".to_string()]);
    let plan = hash_plan_for_names(&BTreeSet::new(), &funcs, RenameTargets::Funcs, STAMP, &BTreeSet::new()).unwrap();
    let out = tmp.path().join("out");
    let err = apply_rename(&src, &out, &plan, Path::new("a.c"), &scope, Some(&calls)).unwrap_err();
    assert!(matches!(err, Error::RenameHazard { .. }), "{err}");
    assert!(!out.exists());

    let mut corrupt = scope.clone();
    let first = corrupt.params[0].occurrences[0];
    corrupt.params[0]
        .occurrences
        .push(layerbench::lang::Span::new(first.start, 3));
    let vars = BTreeSet::from(["x".to_string()]);
    let plan = hash_plan_for_names(&vars, &BTreeSet::new(), RenameTargets::Vars, STAMP, &BTreeSet::new()).unwrap();
    let err = apply_rename(&src, &out, &plan, Path::new("a.c"), &corrupt, None).unwrap_err();
    assert!(matches!(err, Error::SpanOverlap { .. }), "{err}");
    assert!(!out.exists());
}

fn scripted(responses: &[&str]) -> LlmGateway {
    let script = Script {
        rules: vec![ScriptRule {
            template: "apply.rephrase".into(),
            contains: vec![],
            responses: responses.iter().map(|s| s.to_string()).collect(),
            repeat: false,
        }],
    };
    let provider = ScriptedProvider::new("gpt-4o", script);
    LlmGateway::new(
        LlmMode::Record,
        "gpt-4o",
        Some(Box::new(provider)),
        TranscriptStore::in_memory(),
    )
    .unwrap()
}

#[test]
fn rephrased_names_are_checked_and_reasked() {
    let p = SubjectProfile::c();
    let vars = BTreeSet::from(["count".to_string(), "i".to_string()]);
    let funcs = BTreeSet::from(["parseIndex".to_string()]);
    let taken = BTreeSet::from(["total".to_string()]);
    let llm = scripted(&[
        r#"{"count": "return", "i": "total", "parseIndex": "parseIdx"}"#,
        r#"{"count": "tally", "i": "tally"}"#,
        r#"```json
{"i": "idx"}
```"#,
    ]);
    let plan = rephrase_plan_for_names(
        "int parseIndex(...)",
        &vars,
        &funcs,
        RenameTargets::Both,
        &taken,
        &p,
        &llm,
    )
    .unwrap();
    assert_eq!(plan.funcs["parseIndex"], "parseIdx");
    assert_eq!(plan.vars["count"], "tally");
    assert_eq!(plan.vars["i"], "idx");
    assert_eq!(llm.provider_calls(), 3);

    let llm = scripted(&[
        r#"{"i": "for"}"#,
        r#"{"i": "while"}"#,
        r#"{"i": "if"}"#,
        r#"{"i": "ok"}"#,
    ]);
    let vars = BTreeSet::from(["i".to_string()]);
    let err = rephrase_plan_for_names("", &vars, &BTreeSet::new(), RenameTargets::Vars, &taken, &p, &llm).unwrap_err();
    assert!(
        matches!(err, Error::PartialPlan(ref names) if names == &["i".to_string()]),
        "{err}"
    );
    assert_eq!(llm.provider_calls(), 3);
}

#[test]
fn rephrase_layer_registers_model_names() {
    let (_tmp, root) = common::scratch_corpus("c-corpus");
    let mut bench = load_manifest(&root).unwrap();
    bench.bugs.retain(|b| b.id == "Clamp-1");
    let llm = scripted(&[r#"{"clamp": "bound", "value": "v", "low": "lo", "high": "hi"}"#]);
    let opts = ApplyOptions {
        targets: RenameTargets::Both,
        llm: Some(&llm),
        ..Default::default()
    };
    let report = generate_apply_layer(&mut bench, ApplySchemes::default().get("rephrase").unwrap(), &opts).unwrap();
    assert_eq!(report.generated, ["Clamp-1"], "{:?}", report.failed);
    let v = &bench.sets(LayerTag::Apply).next().unwrap().variants[0];
    assert_eq!(v.slot, 6);
    assert_eq!(v.transform.scheme, TransformScheme::RephraseRename);
    assert!(v
        .bug
        .fixed_function
        .text
        .starts_with("int bound(int v, int lo, int hi)"));
    assert_eq!(
        lint_instance(&v.bug, &bench.profile, &ExecLimits::default()).unwrap(),
        None
    );
}

#[test]
fn comment_modes_keep_tokens_on_every_fixture_file() {
    let p = SubjectProfile::c();
    let mut files = 0;
    for file in source_files(&common::fixture("c-corpus"), &p) {
        let src = std::fs::read_to_string(&file).unwrap();
        let base = token_texts(&src, &p);
        let stripped = perturb_comments(&src, &p, CommentMode::RemoveAll).unwrap();
        for mode in CommentMode::ALL {
            let out = perturb_comments(&src, &p, mode).unwrap();
            assert_eq!(token_texts(&out, &p), base, "{} {mode:?}", file.display());
            assert_eq!(perturb_comments(&out, &p, CommentMode::RemoveAll).unwrap(), stripped);
        }
        assert!(!stripped.contains("/*") && !stripped.contains("//"));
        files += 1;
    }
    assert!(files > 30, "{files}");
}

#[test]
fn code_comments_double_a_ten_line_function() {
    let src = "int sum(int *xs, int n)\n{\n    int total = 0;\n    int i;\n    for (i = 0; i < n; i++) {\n        total += xs[i];\n    }\n    if (total < 0)\n        return 0;\n    return total;\n}\n";
    assert_eq!(src.lines().count(), 11);
    let out = perturb_comments(src, &SubjectProfile::c(), CommentMode::AddCodeComments).unwrap();
    assert_eq!(out.lines().count(), 22);
    let textual = perturb_comments(src, &SubjectProfile::c(), CommentMode::AddTextual).unwrap();
    assert!(textual.contains(TEXTUAL_COMMENT));
}

fn c_like() -> impl Strategy<Value = String> {
    let piece = prop_oneof![
        Just("int a = 1;".to_string()),
        Just("b = a /* mid */ + 2;".to_string()),
        Just("s = \"x // y /* z */\";".to_string()),
        Just("// note */ \\".to_string()),
        Just("/* multi\n   line */".to_string()),
        Just("if (a) {".to_string()),
        Just("}".to_string()),
        Just("#define M(x) \\\n  ((x) + 1)".to_string()),
        Just("c = '\\'';".to_string()),
        Just("".to_string()),
    ];
    (prop::collection::vec((piece, 0usize..8), 0..25)).prop_map(|lines| {
        lines
            .into_iter()
            .map(|(l, indent)| format!("{}{l}\n", " ".repeat(indent)))
            .collect()
    })
}

proptest! {
    #[test]
    fn perturbation_never_changes_tokens(src in c_like()) {
        let p = SubjectProfile::c();
        let base = token_texts(&src, &p);
        let stripped = perturb_comments(&src, &p, CommentMode::RemoveAll).unwrap();
        prop_assert_eq!(token_texts(&stripped, &p), base.clone());
        for mode in [CommentMode::AddTextual, CommentMode::AddCodeComments] {
            let out = perturb_comments(&src, &p, mode).unwrap();
            prop_assert_eq!(token_texts(&out, &p), base.clone());
            prop_assert_eq!(perturb_comments(&out, &p, CommentMode::RemoveAll).unwrap(), stripped.clone());
        }
    }

    #[test]
    fn hash_names_never_collide(names in prop::collection::btree_set("[a-z][a-z0-9_]{0,12}", 1..400)) {
        let plan = hash_plan_for_names(&names, &BTreeSet::new(), RenameTargets::Vars, STAMP, &BTreeSet::new()).unwrap();
        let distinct: BTreeSet<_> = plan.vars.values().collect();
        prop_assert_eq!(distinct.len(), names.len());
    }
}

#[test]
fn ten_thousand_names_get_distinct_hashes() {
    let names: BTreeSet<String> = (0..10_000).map(|i| format!("name{i}")).collect();
    let plan = hash_plan_for_names(&names, &BTreeSet::new(), RenameTargets::Vars, STAMP, &BTreeSet::new()).unwrap();
    assert_eq!(plan.vars.values().collect::<BTreeSet<_>>().len(), 10_000);
    assert!(plan.vars.values().all(|n| n.len() == 18 && n.starts_with("v_")));
}
