use std::path::{Path, PathBuf};
use std::time::Duration;

use layerbench::corpus::{lint_benchmark, load_manifest, Benchmark, CommentMode, LayerTag, RenameTargets};
use layerbench::fsutil;
use layerbench::harness::{load_run, run_campaign, AdapterKinds, CampaignConfig, ExecLimits};
use layerbench::inject::{build_analyze_layer, ingest_clone_candidates, read_search_export, AnalyzeOptions};
use layerbench::llm::{LlmGateway, LlmMode, ProviderRegistry, TranscriptStore};
use layerbench::perturb::{generate_apply_layer, ApplyOptions, ApplySchemes};
use layerbench::report::{emit_report, ReportFormat};
use layerbench::synth::{build_understand_layer, SynthModes, UnderstandOptions, DEFAULT_MAX_REFINE_ITERS};
use layerbench::{Error, Result};

use crate::config::FileConfig;
use crate::{AnalyzeArgs, ApplyArgs, Cli, Command, GenCommand, ReportArgs, RunArgs, UnderstandArgs};

const DEFAULT_WORKERS: usize = 4;
const RECORD_FILE: &str = "recorded.jsonl";

struct Ctx<'a> {
    cli: &'a Cli,
    file: FileConfig,
}

fn first_line(s: &str) -> &str {
    s.lines().next().unwrap_or("")
}

fn parse<T: std::str::FromStr<Err = Error>>(value: Option<String>, default: &str) -> Result<T> {
    value.as_deref().unwrap_or(default).parse()
}

impl Ctx<'_> {
    fn corpus_path(&self, positional: Option<&PathBuf>) -> Result<PathBuf> {
        self.cli
            .corpus
            .clone()
            .or_else(|| positional.cloned())
            .or_else(|| self.file.corpus.clone())
            .ok_or_else(|| Error::Config("no corpus given (--corpus)".into()))
    }

    fn bench(&self) -> Result<Benchmark> {
        load_manifest(&self.corpus_path(None)?)
    }

    fn workers(&self) -> usize {
        self.cli.workers.or(self.file.workers).unwrap_or(DEFAULT_WORKERS).max(1)
    }

    fn limits(&self) -> ExecLimits {
        let mut l = ExecLimits::default();
        if let Some(t) = self.cli.timeout_s.or(self.file.timeout_s) {
            l.timeout_s = t;
        }
        if let Some(b) = self.file.max_output_bytes {
            l.max_output_bytes = b;
        }
        l
    }

    fn out(&self) -> Option<PathBuf> {
        self.cli.out.clone().or_else(|| self.file.out.clone())
    }

    fn gateway(&self, corpus: &Path) -> Result<LlmGateway> {
        let mode: LlmMode = parse(
            self.cli.llm_mode.clone().or_else(|| self.file.llm_mode.clone()),
            "replay",
        )?;
        let dir = self
            .cli
            .transcripts
            .clone()
            .or_else(|| self.file.transcripts.clone())
            .unwrap_or_else(|| corpus.join("transcripts"));
        let provider_cfg = self.file.llm.clone().unwrap_or_default().apply_env();
        let provider = match mode {
            LlmMode::Replay => None,
            _ => Some(ProviderRegistry::default().create(&provider_cfg)?),
        };
        let store = TranscriptStore::open(&dir, RECORD_FILE)?;
        Ok(LlmGateway::new(mode, &provider_cfg.model, provider, store)?
            .with_rate_limit(provider_cfg.requests_per_minute)
            .with_retries(
                provider_cfg.max_retries,
                Duration::from_millis(provider_cfg.retry_backoff_ms),
            ))
    }

    fn write_summary<T: serde::Serialize>(&self, name: &str, value: &T) -> Result<()> {
        if let Some(out) = self.out() {
            let path = out.join(name);
            fsutil::write_json(&path, value)?;
            println!("wrote {}", path.display());
        }
        Ok(())
    }
}

pub fn dispatch(cli: &Cli) -> Result<()> {
    let file = match &cli.config {
        Some(p) => FileConfig::load(p)?,
        None => FileConfig::default(),
    };
    let ctx = Ctx { cli, file };
    match &cli.command {
        Command::Lint { path } => lint(&ctx, path.as_ref()),
        Command::Gen { layer } => match layer {
            GenCommand::Apply(a) => gen_apply(&ctx, a),
            GenCommand::Understand(a) => gen_understand(&ctx, a),
            GenCommand::Analyze(a) => gen_analyze(&ctx, a),
        },
        Command::Run(a) => run(&ctx, a),
        Command::Report(a) => report(&ctx, a),
    }
}

fn lint(ctx: &Ctx<'_>, path: Option<&PathBuf>) -> Result<()> {
    let bench = load_manifest(&ctx.corpus_path(path)?)?;
    let report = lint_benchmark(&bench, &ctx.limits(), ctx.workers())?;
    for (id, reason) in &report.failures {
        println!("FAIL {id}: {}", first_line(reason));
    }
    let report = report.into_result()?;
    println!("lint: {} instances ok", report.checked.len());
    Ok(())
}

fn gen_apply(ctx: &Ctx<'_>, a: &ApplyArgs) -> Result<()> {
    let mut bench = ctx.bench()?;
    let f = &ctx.file;
    let scheme_name = a
        .scheme
        .clone()
        .or_else(|| f.scheme.clone())
        .unwrap_or_else(|| "hash".into());
    let schemes = ApplySchemes::default();
    let scheme = schemes.get(&scheme_name)?;
    let targets: RenameTargets = parse(a.targets.clone().or_else(|| f.targets.clone()), "both")?;
    let comment_mode: CommentMode = parse(a.comment_mode.clone().or_else(|| f.comment_mode.clone()), "add_textual")?;
    let clock_stamp = match a.stamp.or(f.stamp) {
        Some(s) => s,
        None if scheme_name == "hash" => {
            return Err(Error::Config("the hash scheme needs --stamp".into()));
        }
        None => 0,
    };
    let llm = if scheme_name == "rephrase" {
        Some(ctx.gateway(&bench.root)?)
    } else {
        None
    };
    let opts = ApplyOptions {
        targets,
        clock_stamp,
        comment_mode,
        llm: llm.as_ref(),
        jobs: ctx.workers(),
    };
    let report = generate_apply_layer(&mut bench, scheme, &opts)?;
    println!(
        "apply {}: {} generated, {} excluded, {} failed",
        report.group,
        report.generated.len(),
        report.excluded.len(),
        report.failed.len()
    );
    for (id, why) in &report.excluded {
        println!("  excluded {id}: {}", first_line(why));
    }
    for (id, why) in &report.failed {
        println!("  failed {id}: {}", first_line(why));
    }
    ctx.write_summary("generation-apply.json", &report)
}

fn gen_understand(ctx: &Ctx<'_>, a: &UnderstandArgs) -> Result<()> {
    let mut bench = ctx.bench()?;
    let f = &ctx.file;
    let mode_name = a
        .mode
        .clone()
        .or_else(|| f.mode.clone())
        .unwrap_or_else(|| "root_cause".into());
    let modes = SynthModes::default();
    let mode = modes.get(&mode_name)?;
    let llm = ctx.gateway(&bench.root)?;
    let opts = UnderstandOptions {
        count: a.count.or(f.count).unwrap_or(5),
        max_refine_iters: a
            .max_refine_iters
            .or(f.max_refine_iters)
            .unwrap_or(DEFAULT_MAX_REFINE_ITERS),
        limits: ctx.limits(),
        jobs: ctx.workers(),
    };
    let report = build_understand_layer(&mut bench, mode, &llm, &opts)?;
    let verified: usize = report.bugs.iter().map(|b| b.verified).sum();
    let requested: usize = report.bugs.iter().map(|b| b.requested).sum();
    println!(
        "understand {}: {verified}/{requested} candidates verified, {} bug(s) uncovered",
        report.group,
        report.uncovered().len()
    );
    for b in report.bugs.iter().filter(|b| !b.covered()) {
        println!(
            "  uncovered {}: {}",
            b.bug_id,
            b.error.as_deref().map(first_line).unwrap_or("no verified candidate")
        );
    }
    ctx.write_summary(&format!("generation-understand-{mode_name}.json"), &report)
}

fn gen_analyze(ctx: &Ctx<'_>, a: &AnalyzeArgs) -> Result<()> {
    let mut bench = ctx.bench()?;
    let f = &ctx.file;
    let search = a
        .search
        .clone()
        .or_else(|| f.search.clone())
        .ok_or_else(|| Error::Config("the analyze layer needs --search".into()))?;
    let workspace = a
        .workspace
        .clone()
        .or_else(|| f.workspace.clone())
        .ok_or_else(|| Error::Config("the analyze layer needs --workspace".into()))?;
    let records = read_search_export(&search)?;
    let ingest = ingest_clone_candidates(&records, &workspace, &bench.profile);
    let llm = ctx.gateway(&bench.root)?;
    let opts = AnalyzeOptions {
        max_refine_iters: a
            .max_refine_iters
            .or(f.max_refine_iters)
            .unwrap_or(DEFAULT_MAX_REFINE_ITERS),
        limits: ctx.limits(),
        jobs: ctx.workers(),
    };
    let report = build_analyze_layer(&mut bench, &ingest, &llm, &opts)?;
    let verified: usize = report.parents.iter().map(|p| p.verified).sum();
    let candidates: usize = report.parents.iter().map(|p| p.candidates).sum();
    println!(
        "analyze {}: {verified}/{candidates} candidates verified, {} search hit(s) dropped, {} bug(s) uncovered",
        report.group,
        report.dropped.len(),
        report.uncovered().len()
    );
    ctx.write_summary("generation-analyze.json", &report)
}

fn parse_layers(values: &[String]) -> Result<Vec<LayerTag>> {
    let mut out = Vec::new();
    for v in values {
        if v == "all" {
            out.extend(LayerTag::ALL);
        } else {
            out.push(v.parse()?);
        }
    }
    if out.is_empty() {
        return Err(Error::Config("no layer given (--layer)".into()));
    }
    Ok(out)
}

fn run(ctx: &Ctx<'_>, a: &RunArgs) -> Result<()> {
    let bench = ctx.bench()?;
    let f = &ctx.file;
    let layer_names = if a.layer.is_empty() {
        f.layer.clone().unwrap_or_default()
    } else {
        a.layer.clone()
    };
    let layers = parse_layers(&layer_names)?;
    let adapter_name = a
        .adapter
        .clone()
        .or_else(|| f.adapter.clone())
        .ok_or_else(|| Error::Config("no adapter given (--adapter)".into()))?;
    let adapter = AdapterKinds::default().build(f.adapter_config(&adapter_name)?)?;
    let runs_dir = ctx
        .out()
        .or_else(|| f.runs.clone())
        .unwrap_or_else(|| bench.root.join("runs"));
    let run_id = a.run_id.clone().or_else(|| f.run_id.clone()).unwrap_or_else(|| {
        let names: Vec<&str> = layers.iter().map(|l| l.as_str()).collect();
        format!("{adapter_name}-{}", names.join("_"))
    });
    let mut cfg = CampaignConfig::new(&run_id, &runs_dir);
    cfg.workers = ctx.workers();
    cfg.limits = ctx.limits();
    cfg.max_units = a.max_units;
    let s = run_campaign(&bench, &layers, adapter.as_ref(), &cfg)?;
    println!(
        "run {}: {} planned, {} already done, {} evaluated, {} remaining, {} failure(s)",
        s.run_id,
        s.planned,
        s.skipped,
        s.executed,
        s.remaining,
        s.failures.len()
    );
    println!("ledger {}", s.run_dir.join(layerbench::harness::LEDGER_FILE).display());
    Ok(())
}

fn report(ctx: &Ctx<'_>, a: &ReportArgs) -> Result<()> {
    let f = &ctx.file;
    let runs_dir = a
        .runs
        .clone()
        .or_else(|| f.runs.clone())
        .or_else(|| ctx.corpus_path(None).ok().map(|c| c.join("runs")))
        .unwrap_or_else(|| PathBuf::from("runs"));
    let ids = if a.run.is_empty() {
        f.run.clone().unwrap_or_default()
    } else {
        a.run.clone()
    };
    if ids.is_empty() {
        return Err(Error::Config("no run given (--run)".into()));
    }
    let runs = ids
        .iter()
        .map(|id| load_run(&runs_dir, id))
        .collect::<Result<Vec<_>>>()?;
    let format_names = if a.format.is_empty() {
        f.format.clone().unwrap_or_default()
    } else {
        a.format.clone()
    };
    let formats = if format_names.is_empty() {
        ReportFormat::ALL.to_vec()
    } else {
        format_names
            .iter()
            .map(|s| s.parse())
            .collect::<Result<Vec<ReportFormat>>>()?
    };
    let out = ctx.out().unwrap_or_else(|| runs_dir.join(&ids[0]));
    for path in emit_report(&runs, &formats, &out)? {
        println!("wrote {}", path.display());
    }
    Ok(())
}
