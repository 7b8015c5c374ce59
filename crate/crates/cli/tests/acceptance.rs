//! One test per acceptance criterion. Each prints a single PASS/FAIL line
//! straight to stdout so the verdicts show up without `--nocapture`.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::io::Write;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::time::{Duration, Instant};

use layerbench::corpus::{lint_benchmark, load_manifest, Benchmark, LayerTag, RenameTargets};
use layerbench::fsutil;
use layerbench::harness::ExecLimits;
use layerbench::inject::{generate_tests, ingest_clone_candidates, inject_bug, read_search_export, verify_refine};
use layerbench::lang::SubjectProfile;
use layerbench::llm::{
    CompletionRequest, LlmGateway, LlmMode, Provider, ProviderError, Script, ScriptRule, ScriptedProvider,
    TranscriptStore,
};
use layerbench::patch_eval::{judge_em, judge_sye};
use layerbench::perturb::{generate_apply_layer, hash_name, ApplyOptions, ApplySchemes};
use layerbench::stats::{
    aggregate_layer, classify_fix, cross_layer_delta, mcnemar_counts, FixClass, McNemarMethod, Metric, SolveMatrix,
};
use layerbench::synth::{settle_candidate, CandidateStatus, SynthCandidate};
use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

// Pinned tolerances and budgets.
const RATE_TOL: f64 = 0.005;
const DELTA_TOL: f64 = 0.01;
const ANCHOR_BUDGET: Duration = Duration::from_secs(1);
const RENAME_BUDGET: Duration = Duration::from_secs(300);
const EXACT_TOL: f64 = 1e-9;
const CHI2_TOL: f64 = 1e-6;
const SYE_CASES: usize = 1000;
const MCNEMAR_PAIRS: usize = 100;
const HASH_NAMES: usize = 10_000;
const STAMP: u64 = 1_700_000_000;
const SEED: u64 = 0x5eed;

fn criterion(n: u32, name: &str, body: impl FnOnce() -> String) {
    let outcome = catch_unwind(AssertUnwindSafe(body));
    let line = match &outcome {
        Ok(detail) => format!("criterion {n:>2} {name}: PASS ({detail})\n"),
        Err(e) => {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            format!("criterion {n:>2} {name}: FAIL ({})\n", msg.lines().next().unwrap_or(""))
        }
    };
    let _ = std::io::stdout().lock().write_all(line.as_bytes());
    if let Err(e) = outcome {
        std::panic::resume_unwind(e);
    }
}

fn core_fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../core/fixtures")
        .join(name)
}

fn mini_fixture() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/mini")
}

fn scratch(src: &Path) -> (tempfile::TempDir, PathBuf) {
    let tmp = tempfile::tempdir().unwrap();
    let dest = tmp.path().join(src.file_name().unwrap());
    fsutil::copy_dir_all(src, &dest).unwrap();
    (tmp, dest)
}

fn bench(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bench"))
        .args(args)
        .current_dir(cwd)
        .output()
        .unwrap()
}

fn bench_ok(args: &[&str], cwd: &Path) -> String {
    let out = bench(args, cwd);
    let stdout = String::from_utf8_lossy(&out.stdout).into_owned();
    assert!(
        out.status.success(),
        "bench {}: {}\n{stdout}",
        args.join(" "),
        String::from_utf8_lossy(&out.stderr)
    );
    stdout
}

fn matrix(layer: LayerTag, group: &str, solved: u64, total: u64) -> SolveMatrix {
    let mut m = SolveMatrix::new("sue", layer, group);
    for i in 0..total {
        let id = format!("B-{i:03}");
        m.expect(&id, 1);
        m.record(&id, &id, i < solved, false, false);
    }
    m
}

fn pct(r: Option<layerbench::stats::Ratio>) -> f64 {
    r.unwrap().as_f64() * 100.0
}

#[test]
fn c01_reported_anchors() {
    criterion(1, "reported anchors", || {
        let start = Instant::now();
        let high = aggregate_layer(&matrix(LayerTag::Remember, "original", 177, 217)).unwrap();
        let low = aggregate_layer(&matrix(LayerTag::Remember, "original", 117, 217)).unwrap();
        let base = aggregate_layer(&matrix(LayerTag::Remember, "original", 149, 217)).unwrap();
        let other = aggregate_layer(&matrix(LayerTag::Apply, "hash_rename/vars", 54, 217)).unwrap();
        let delta = cross_layer_delta(&base, &other).unwrap();
        let elapsed = start.elapsed();

        let a = pct(high.rate[&Metric::Pp]);
        let b = pct(low.rate[&Metric::Pp]);
        let d = &delta.deltas[&Metric::Pp];
        let (from, to, rel) = (pct(d.base), pct(d.other), pct(d.relative));
        assert!((a - 81.57).abs() <= RATE_TOL, "177/217 gave {a}");
        assert!((b - 53.92).abs() <= RATE_TOL, "117/217 gave {b}");
        assert!(
            (from - 68.66).abs() <= RATE_TOL && (to - 24.88).abs() <= RATE_TOL,
            "{from} -> {to}"
        );
        assert!((rel + 63.76).abs() <= DELTA_TOL, "delta {rel}");
        // independent arithmetic
        assert!((a - 17_700.0 / 217.0).abs() < RATE_TOL);
        assert!((rel - (54.0 - 149.0) / 149.0 * 100.0).abs() < DELTA_TOL);
        assert!(elapsed < ANCHOR_BUDGET, "{elapsed:?}");
        format!("{a:.2}% {b:.2}% {from:.2}%->{to:.2}% = {rel:.2}% in {elapsed:?}")
    });
}

/// Proposes `<old>_alt` for every identifier it is asked about.
struct SuffixNamer;

impl Provider for SuffixNamer {
    fn name(&self) -> &str {
        "suffix"
    }

    fn model(&self) -> &str {
        "suffix"
    }

    fn complete(&self, prompt: &str, _req: &CompletionRequest) -> Result<String, ProviderError> {
        let names = prompt
            .split("Identifiers to rename:\n")
            .nth(1)
            .and_then(|rest| rest.split("\n\n").next())
            .unwrap_or("");
        let map: BTreeMap<&str, String> = names.lines().map(|n| (n, format!("{n}_alt"))).collect();
        Ok(serde_json::to_string(&map).unwrap())
    }
}

#[test]
fn c02_renamed_variants_keep_behavior() {
    criterion(2, "renamed variants compile and keep trigger behavior", || {
        let start = Instant::now();
        let (_tmp, root) = scratch(&core_fixture("c-corpus"));
        let mut bench = load_manifest(&root).unwrap();
        assert!(bench.bugs.len() >= 10, "only {} triples", bench.bugs.len());
        let llm = LlmGateway::new(
            LlmMode::Record,
            "suffix",
            Some(Box::new(SuffixNamer)),
            TranscriptStore::in_memory(),
        )
        .unwrap();
        let schemes = ApplySchemes::default();
        let mut generated = 0;
        for scheme in ["hash", "rephrase"] {
            for targets in [RenameTargets::Vars, RenameTargets::Funcs, RenameTargets::Both] {
                let opts = ApplyOptions {
                    targets,
                    clock_stamp: STAMP,
                    llm: Some(&llm),
                    jobs: 4,
                    ..Default::default()
                };
                let report = generate_apply_layer(&mut bench, schemes.get(scheme).unwrap(), &opts).unwrap();
                assert!(report.failed.is_empty(), "{}: {:?}", report.group, report.failed);
                generated += report.generated.len();
            }
        }
        let report = lint_benchmark(&bench, &ExecLimits::default(), 4).unwrap();
        assert!(report.failures.is_empty(), "{:?}", report.failures);
        let checked = report.checked.iter().filter(|id| id.contains("-apply-")).count();
        assert_eq!(checked, generated);
        let elapsed = start.elapsed();
        assert!(elapsed < RENAME_BUDGET, "{elapsed:?}");
        format!(
            "{checked}/{generated} eligible variants pass in {:.1}s",
            elapsed.as_secs_f64()
        )
    });
}

#[test]
fn c03_hazards_are_excluded() {
    criterion(3, "rename hazards excluded", || {
        let cases = [
            ("c-corpus", vec!["StrTab-1", "Normalize-1", "CmpInt-1"]),
            ("java-hazards", vec!["Overload-1", "Inherit-1", "Reflect-1"]),
        ];
        let schemes = ApplySchemes::default();
        let mut hazards = 0;
        for (fixture, expected) in cases {
            let (_tmp, root) = scratch(&core_fixture(fixture));
            let mut bench = load_manifest(&root).unwrap();
            for targets in [RenameTargets::Funcs, RenameTargets::Both] {
                let opts = ApplyOptions {
                    targets,
                    clock_stamp: STAMP,
                    ..Default::default()
                };
                let report = generate_apply_layer(&mut bench, schemes.get("hash").unwrap(), &opts).unwrap();
                let excluded: BTreeSet<&str> = report.excluded.iter().map(|(id, _)| id.as_str()).collect();
                for id in &expected {
                    assert!(excluded.contains(id), "{fixture}: {id} not excluded");
                    assert!(
                        !report.generated.iter().any(|g| g.starts_with(&format!("{id}-"))),
                        "{id} renamed"
                    );
                }
                // nothing else is held back
                assert_eq!(excluded.len(), expected.len(), "{fixture}: {excluded:?}");
                assert_eq!(report.generated.len() + excluded.len(), bench.bugs.len());
            }
            hazards += expected.len();
        }
        format!("{hazards} hazard fixtures excluded, 0 false inclusions")
    });
}

const IDENTS: &[&str] = &["a", "b", "c", "n", "x", "total", "len", "buf"];
const OTHER: &[&str] = &[
    "int", "char", "return", "if", "while", "(", ")", "{", "}", ";", "=", "+", "-", "<", "*", "0", "1", "42", "'c'",
    "\"s\"",
];

const SEPARATORS: &[&str] = &[" ", "  ", "\n", "\t ", "\n    "];

fn random_tokens(rng: &mut StdRng) -> Vec<String> {
    let len = rng.gen_range(1..24);
    let mut out: Vec<String> = (0..len)
        .map(|_| {
            if rng.gen_bool(0.4) {
                IDENTS[rng.gen_range(0..IDENTS.len())].to_string()
            } else {
                OTHER[rng.gen_range(0..OTHER.len())].to_string()
            }
        })
        .collect();
    let at = rng.gen_range(0..=out.len());
    out.insert(at, OTHER[rng.gen_range(0..OTHER.len())].to_string());
    out
}

#[test]
fn c04_syntactic_equivalence_properties() {
    criterion(4, "SYE properties", || {
        let p = SubjectProfile::c();
        let mut rng = StdRng::seed_from_u64(SEED);
        for case in 0..SYE_CASES {
            let a = random_tokens(&mut rng);
            let text = a.join(" ");

            // a bijection onto fresh names, sometimes reusing the old pool
            let mut pool: Vec<String> = IDENTS.iter().map(|s| s.to_string()).collect();
            pool.extend((0..IDENTS.len()).map(|i| format!("r{i}_{case}")));
            let mut map = HashMap::new();
            for id in IDENTS {
                let k = rng.gen_range(0..pool.len());
                map.insert(*id, pool.swap_remove(k));
            }
            let renamed: Vec<String> = a
                .iter()
                .map(|t| map.get(t.as_str()).cloned().unwrap_or_else(|| t.clone()))
                .collect();
            assert!(
                judge_sye(&text, &renamed.join(" "), &p),
                "case {case}: renaming {text:?}"
            );

            let slots: Vec<usize> = (0..a.len()).filter(|&i| !IDENTS.contains(&a[i].as_str())).collect();
            let at = slots[rng.gen_range(0..slots.len())];
            let mut mutated = a.clone();
            while mutated[at] == a[at] {
                mutated[at] = OTHER[rng.gen_range(0..OTHER.len())].to_string();
            }
            assert!(
                !judge_sye(&text, &mutated.join(" "), &p),
                "case {case}: mutation at {at} of {text:?}"
            );

            let spaced: String = a
                .iter()
                .map(|t| format!("{t}{}", SEPARATORS[rng.gen_range(0..SEPARATORS.len())]))
                .collect();
            assert!(judge_em(&text, &spaced, &p), "case {case}: whitespace");
            assert!(judge_sye(&text, &spaced, &p));
            let other = random_tokens(&mut rng).join(" ");
            if judge_em(&text, &other, &p) {
                assert!(judge_sye(&text, &other, &p), "case {case}: EM without SYE");
            }
        }
        format!("{SYE_CASES} cases x 3 properties, 0 violations")
    });
}

#[test]
fn c05_fix_classes_match_popcount() {
    criterion(5, "FIX classification", || {
        let mut vectors = 0;
        for len in 1..=6usize {
            for bits in 0u32..(1 << len) {
                let v: Vec<bool> = (0..len).map(|i| bits & (1 << i) != 0).collect();
                let want = match bits.count_ones() as usize {
                    0 => FixClass::Fix0,
                    k if k == len => FixClass::FixAll,
                    1 => FixClass::Fix1,
                    _ => FixClass::FixPlus,
                };
                assert_eq!(classify_fix(&v).unwrap(), want, "{v:?}");
                vectors += 1;
            }
        }
        assert_eq!(vectors, 126);
        assert!(classify_fix(&[]).is_err());
        format!("{vectors} vectors agree")
    });
}

fn exact_oracle(b: u64, c: u64) -> f64 {
    let n = b + c;
    if n == 0 {
        return 1.0;
    }
    let mut row = vec![BigUint::one()];
    for _ in 0..n {
        let mut next = vec![BigUint::one(); row.len() + 1];
        for k in 1..row.len() {
            next[k] = &row[k - 1] + &row[k];
        }
        row = next;
    }
    let tail = row[..=(b.min(c) as usize)]
        .iter()
        .fold(BigUint::zero(), |acc, x| acc + x);
    ((tail * 2u32).to_f64().unwrap() / (BigUint::one() << n).to_f64().unwrap()).min(1.0)
}

// 1 - 2 * integral of the standard normal density over [0, sqrt(x)].
fn chi2_oracle(b: u64, c: u64) -> f64 {
    let stat = ((b as f64 - c as f64).abs() - 1.0).max(0.0).powi(2) / (b + c) as f64;
    let z = stat.sqrt();
    let steps = 20_000;
    let h = z / steps as f64;
    let phi = |t: f64| (-t * t / 2.0).exp() / (2.0 * std::f64::consts::PI).sqrt();
    let mut sum = phi(0.0) + phi(z);
    for i in 1..steps {
        sum += if i % 2 == 1 { 4.0 } else { 2.0 } * phi(i as f64 * h);
    }
    1.0 - 2.0 * sum * h / 3.0
}

#[test]
fn c06_mcnemar_matches_oracles() {
    criterion(6, "McNemar", || {
        assert_eq!(mcnemar_counts(0, 0).p_value, 1.0);
        assert_eq!(mcnemar_counts(1, 5).p_value, 0.21875);
        let mut rng = StdRng::seed_from_u64(SEED);
        let (mut exact, mut chi2) = (0, 0);
        for i in 0..MCNEMAR_PAIRS {
            let (b, c) = if i % 2 == 0 {
                let n = rng.gen_range(0..25u64);
                let b = rng.gen_range(0..=n);
                (b, n - b)
            } else {
                loop {
                    let (b, c) = (rng.gen_range(0..150u64), rng.gen_range(0..150u64));
                    if b + c >= 25 {
                        break (b, c);
                    }
                }
            };
            let r = mcnemar_counts(b, c);
            match r.method {
                McNemarMethod::Exact => {
                    assert!(b + c < 25);
                    assert!((r.p_value - exact_oracle(b, c)).abs() <= EXACT_TOL, "b={b} c={c}");
                    exact += 1;
                }
                McNemarMethod::CcChi2 => {
                    assert!(b + c >= 25);
                    assert!((r.p_value - chi2_oracle(b, c)).abs() <= CHI2_TOL, "b={b} c={c}");
                    chi2 += 1;
                }
            }
        }
        format!("{exact} exact + {chi2} chi2 pairs within tolerance")
    });
}

fn read_tree(root: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in std::fs::read_dir(&dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                out.insert(
                    path.strip_prefix(root).unwrap().to_path_buf(),
                    std::fs::read(&path).unwrap(),
                );
            }
        }
    }
    out
}

#[test]
fn c07_hash_names_and_reproducibility() {
    criterion(7, "hash names", || {
        let c = SubjectProfile::c();
        let java = SubjectProfile::java();
        let mut seen = BTreeSet::new();
        for i in 0..HASH_NAMES {
            let prefix = if i % 2 == 0 { "v_" } else { "f_" };
            let name = hash_name(prefix, &format!("ident{i}"), STAMP, 0);
            assert!(
                c.is_valid_identifier(&name) && java.is_valid_identifier(&name),
                "{name}"
            );
            assert!(seen.insert(name.clone()), "duplicate {name}");
        }
        let generate = || {
            let (tmp, root) = scratch(&core_fixture("c-corpus"));
            let mut bench = load_manifest(&root).unwrap();
            let opts = ApplyOptions {
                targets: RenameTargets::Both,
                clock_stamp: STAMP,
                jobs: 3,
                ..Default::default()
            };
            generate_apply_layer(&mut bench, ApplySchemes::default().get("hash").unwrap(), &opts).unwrap();
            (tmp, read_tree(&root.join("variants")))
        };
        let (_a, first) = generate();
        let (_b, second) = generate();
        assert!(!first.is_empty());
        assert!(first == second, "variant trees differ");
        format!(
            "{HASH_NAMES} distinct valid names; {} variant files byte-identical",
            first.len()
        )
    });
}

fn ledger_without_timing(path: &Path) -> Vec<serde_json::Value> {
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

const REPORTS: [&str; 3] = ["report.md", "report.csv", "report.json"];

/// Builds all four layers of the mini corpus and runs `adapter` on them.
fn mini_campaign(adapter: &str) -> (tempfile::TempDir, PathBuf) {
    let (tmp, dir) = scratch(&mini_fixture());
    let stamp = STAMP.to_string();
    bench_ok(
        &[
            "--corpus",
            "corpus",
            "gen",
            "apply",
            "--scheme",
            "hash",
            "--targets",
            "both",
            "--stamp",
            &stamp,
        ],
        &dir,
    );
    bench_ok(
        &[
            "--config",
            "bench.toml",
            "--corpus",
            "corpus",
            "gen",
            "understand",
            "--count",
            "2",
        ],
        &dir,
    );
    bench_ok(
        &[
            "--config",
            "bench.toml",
            "--corpus",
            "corpus",
            "gen",
            "analyze",
            "--search",
            "workspace/search.jsonl",
            "--workspace",
            "workspace",
        ],
        &dir,
    );
    bench_ok(
        &[
            "--corpus",
            "corpus",
            "run",
            "--layer",
            "all",
            "--adapter",
            adapter,
            "--run-id",
            "e2e",
        ],
        &dir,
    );
    bench_ok(&["--corpus", "corpus", "report", "--run", "e2e"], &dir);
    let run = dir.join("corpus/runs/e2e");
    (tmp, run)
}

#[test]
fn c08_end_to_end_on_the_mini_corpus() {
    criterion(8, "end-to-end", || {
        let (_a, first) = mini_campaign("oracle");
        let (_b, second) = mini_campaign("oracle");
        assert_eq!(
            ledger_without_timing(&first.join("ledger.jsonl")),
            ledger_without_timing(&second.join("ledger.jsonl"))
        );
        for f in REPORTS.iter().chain(&["plan.json", "failures.json"]) {
            assert_eq!(
                std::fs::read(first.join(f)).unwrap(),
                std::fs::read(second.join(f)).unwrap(),
                "{f} differs"
            );
        }

        let report: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(first.join("report.json")).unwrap()).unwrap();
        let layers: BTreeSet<&str> = report["layers"]
            .as_array()
            .unwrap()
            .iter()
            .map(|l| l["layer"].as_str().unwrap())
            .collect();
        assert_eq!(layers, BTreeSet::from(["remember", "understand", "apply", "analyze"]));
        for l in report["layers"].as_array().unwrap() {
            assert_eq!(l["rate"]["pp"], "100.00", "oracle at {} {}", l["layer"], l["group"]);
        }

        let (_c, never) = mini_campaign("never");
        let report: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(never.join("report.json")).unwrap()).unwrap();
        let entries = report["layers"].as_array().unwrap();
        assert_eq!(entries.len(), 4);
        for l in entries {
            assert_eq!(l["solved"]["pp"], 0);
            assert_eq!(
                l["classes"]["pp"]["FIX_0"], l["total_bugs"],
                "{} {}",
                l["layer"], l["group"]
            );
        }
        "4 layers, reproducible ledger and reports, oracle 100% PP, never 0% PP all FIX_0".to_string()
    });
}

fn script_gateway(rules: Vec<ScriptRule>) -> LlmGateway {
    let provider = ScriptedProvider::new("scripted-model", Script { rules });
    LlmGateway::new(
        LlmMode::Record,
        "scripted-model",
        Some(Box::new(provider)),
        TranscriptStore::in_memory(),
    )
    .unwrap()
}

fn rule(template: &str, responses: &[&str], repeat: bool) -> ScriptRule {
    ScriptRule {
        template: template.into(),
        contains: vec![],
        responses: responses.iter().map(|s| s.to_string()).collect(),
        repeat,
    }
}

fn source(text: &str) -> String {
    format!("<<<SOURCE>>>\n{text}<<<END>>>\n")
}

const SUM_BUGGY: &str =
    "int sum_to(int n)\n{\n    int t = 0;\n    for (int i = 1; i < n; i++)\n        t += i;\n    return t;\n}\n";
const SUM_FIXED: &str =
    "int sum_to(int n)\n{\n    int t = 0;\n    for (int i = 1; i <= n; i++)\n        t += i;\n    return t;\n}\n";
const SUM_TEST: &str = "int sum_to(int n);\n\nint main(void)\n{\n    return sum_to(3) == 6 ? 0 : 1;\n}\n";
const VACUOUS: &str = "int main(void)\n{\n    return 0;\n}\n";
const LIMIT_BUGGY: &str = "int limit(int v, int lo, int hi)\n{\n    if (v < lo)\n        return lo;\n    if (v > hi)\n        return lo;\n    return v;\n}\n";
const LIMIT_TEST: &str =
    "int limit(int v, int lo, int hi);\n\nint main(void)\n{\n    return limit(50, 0, 10) == 10 ? 0 : 1;\n}\n";

fn synth(test: &str) -> SynthCandidate {
    SynthCandidate {
        parent_id: "Clamp-1".into(),
        mode: "behavior".into(),
        function_name: "sum_to".into(),
        buggy_source: SUM_BUGGY.into(),
        fixed_source: SUM_FIXED.into(),
        test_source: test.into(),
        iteration: 0,
        status: CandidateStatus::Unverified,
        review_flag: false,
        history: vec![],
        error: None,
    }
}

fn mini_bench() -> (tempfile::TempDir, Benchmark) {
    let (tmp, dir) = scratch(&mini_fixture());
    let bench = load_manifest(&dir.join("corpus")).unwrap();
    (tmp, bench)
}

#[test]
fn c09_verify_refine_loops() {
    criterion(9, "verify-refine", || {
        let p = SubjectProfile::c();
        let limits = ExecLimits::default();
        let work = tempfile::tempdir().unwrap();

        let llm = script_gateway(vec![rule("refine.test", &[&source(SUM_TEST)], false)]);
        let s = settle_candidate(synth(VACUOUS), &p, &llm, &work.path().join("s1"), &limits, 3).unwrap();
        assert_eq!((s.status, s.iteration), (CandidateStatus::Verified, 1));
        let llm = script_gateway(vec![rule("refine.test", &[&source(VACUOUS)], true)]);
        let s = settle_candidate(synth(VACUOUS), &p, &llm, &work.path().join("s2"), &limits, 3).unwrap();
        assert_eq!((s.status, s.iteration), (CandidateStatus::Rejected, 3));

        let (tmp, bench) = mini_bench();
        let ws = tmp.path().join("mini/workspace");
        let records = read_search_export(&ws.join("search.jsonl")).unwrap();
        let limit: Vec<_> = records
            .into_iter()
            .filter(|r| r.function == "limit" && r.repo == "mathlib")
            .collect();
        let ingest = ingest_clone_candidates(&limit, &ws, &p);
        let clone = &ingest.for_parent("Clamp-1")[0];
        let parent = bench.bug("Clamp-1").unwrap();

        let llm = script_gateway(vec![
            rule("analyze.inject", &[&source(LIMIT_BUGGY)], false),
            rule("analyze.tests", &[&source(VACUOUS)], false),
            rule("refine.test", &[&source(LIMIT_TEST)], false),
        ]);
        let v = generate_tests(inject_bug(clone, parent, &p, &llm).unwrap(), "", &p, &llm).unwrap();
        let v = verify_refine(v, &p, &llm, &work.path().join("i1"), &limits, 3).unwrap();
        assert_eq!(
            (v.status, v.refine_iterations),
            (CandidateStatus::Verified, 1),
            "{:?}",
            v.error
        );

        let broken = LIMIT_BUGGY.replace("return lo;\n    return v;", "return lo\n    return v;");
        let llm = script_gateway(vec![
            rule("analyze.inject", &[&source(&broken)], false),
            rule("analyze.tests", &[&source(LIMIT_TEST)], false),
            rule("refine.compile", &[&source(&broken)], true),
        ]);
        let v = generate_tests(inject_bug(clone, parent, &p, &llm).unwrap(), "", &p, &llm).unwrap();
        let v = verify_refine(v, &p, &llm, &work.path().join("i2"), &limits, 3).unwrap();
        assert_eq!((v.status, v.refine_iterations), (CandidateStatus::Rejected, 3));
        "synth and inject verify at iteration 1 and reject at 3".to_string()
    });
}

#[test]
fn c10_lint_names_the_offending_entry() {
    criterion(10, "lint", || {
        let (_tmp, dir) = scratch(&mini_fixture());
        let stamp = STAMP.to_string();
        bench_ok(
            &[
                "--corpus",
                "corpus",
                "gen",
                "apply",
                "--scheme",
                "hash",
                "--targets",
                "both",
                "--stamp",
                &stamp,
            ],
            &dir,
        );
        let ok = bench_ok(&["lint", "corpus"], &dir);
        assert!(ok.contains("lint: 10 instances ok"), "{ok}");

        // the fixed tree of one renamed variant regresses to its buggy tree
        let variant = dir.join("corpus/variants/apply/Clamp-1/3");
        let buggy = std::fs::read(variant.join("buggy/src/clamp.c")).unwrap();
        std::fs::write(variant.join("fixed/src/clamp.c"), buggy).unwrap();
        let out = bench(&["lint", "corpus"], &dir);
        let stdout = String::from_utf8_lossy(&out.stdout);
        assert!(!out.status.success());
        assert!(stdout.contains("FAIL Clamp-1-apply-v3:"), "{stdout}");
        assert_eq!(stdout.matches("FAIL ").count(), 1, "{stdout}");
        "10 entries pass; a broken variant fails lint by id".to_string()
    });
}
