//! Static reports over one or more run ledgers.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::Serialize;

use crate::corpus::LayerTag;
use crate::error::{Error, Result};
use crate::fsutil;
use crate::harness::RunRecord;
use crate::stats::{
    aggregate_layer, cross_layer_delta, mcnemar, FixClass, LayerReport, McNemarResult, Metric, Ratio, SolveMatrix,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum ReportFormat {
    Markdown,
    Csv,
    Json,
}

impl ReportFormat {
    pub const ALL: [ReportFormat; 3] = [ReportFormat::Markdown, ReportFormat::Csv, ReportFormat::Json];

    pub fn file_name(&self) -> &'static str {
        match self {
            ReportFormat::Markdown => "report.md",
            ReportFormat::Csv => "report.csv",
            ReportFormat::Json => "report.json",
        }
    }
}

impl FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "markdown" | "md" => Ok(ReportFormat::Markdown),
            "csv" => Ok(ReportFormat::Csv),
            "json" => Ok(ReportFormat::Json),
            _ => Err(Error::Config(format!("unknown report format {s:?}"))),
        }
    }
}

/// Solve matrices of one run plus where they came from.
#[derive(Debug, Clone)]
pub struct RunInput {
    pub run_id: String,
    pub corpus: String,
    pub corpus_digest: String,
    pub matrices: Vec<SolveMatrix>,
}

impl RunInput {
    pub fn from_record(run: &RunRecord) -> Result<Self> {
        Ok(RunInput {
            run_id: run.plan.run_id.clone(),
            corpus: run.plan.corpus.clone(),
            corpus_digest: run.plan.corpus_digest.clone(),
            matrices: run.matrices()?,
        })
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Provenance {
    pub run_id: String,
    pub corpus: String,
    pub corpus_digest: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct LayerEntry {
    pub run_id: String,
    #[serde(flatten)]
    pub report: LayerReport,
}

/// A layer against the originals, over the bugs the layer covers.
#[derive(Debug, Clone, Serialize)]
pub struct DeltaEntry {
    pub run_id: String,
    pub config: String,
    pub layer: LayerTag,
    pub group: String,
    pub bugs: u64,
    pub metric: Metric,
    pub base: Option<Ratio>,
    pub other: Option<Ratio>,
    pub relative: Option<Ratio>,
    pub mcnemar: Option<McNemarResult>,
    pub significant: bool,
}

/// Two runs on the same layer group and bugs.
#[derive(Debug, Clone, Serialize)]
pub struct ComparisonEntry {
    pub layer: LayerTag,
    pub group: String,
    pub metric: Metric,
    pub a: String,
    pub b: String,
    pub mcnemar: McNemarResult,
    pub significant: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct ReportBundle {
    pub provenance: Vec<Provenance>,
    pub layers: Vec<LayerEntry>,
    pub deltas: Vec<DeltaEntry>,
    pub comparisons: Vec<ComparisonEntry>,
}

fn restrict(m: &SolveMatrix, bugs: &BTreeSet<&String>) -> SolveMatrix {
    let mut out = m.clone();
    out.expected.retain(|b, _| bugs.contains(b));
    out.rows.retain(|b, _| bugs.contains(b));
    out
}

fn label(run_id: &str, r: &LayerReport) -> String {
    format!("{}@{run_id}", r.config)
}

pub fn build_report(runs: &[RunInput]) -> Result<ReportBundle> {
    let mut provenance = Vec::new();
    let mut layers = Vec::new();
    let mut deltas = Vec::new();
    for run in runs {
        provenance.push(Provenance {
            run_id: run.run_id.clone(),
            corpus: run.corpus.clone(),
            corpus_digest: run.corpus_digest.clone(),
        });
        let base = run.matrices.iter().find(|m| m.layer == LayerTag::Remember);
        for m in &run.matrices {
            let report = aggregate_layer(m)?;
            if let (Some(base), true) = (base, m.layer != LayerTag::Remember) {
                let covered: BTreeSet<&String> = m.expected.keys().collect();
                let paired = restrict(base, &covered);
                if paired.expected.len() == covered.len() {
                    let base_report = aggregate_layer(&paired)?;
                    let d = cross_layer_delta(&base_report, &report)?;
                    for (metric, md) in d.deltas {
                        deltas.push(DeltaEntry {
                            run_id: run.run_id.clone(),
                            config: report.config.clone(),
                            layer: report.layer,
                            group: report.group.clone(),
                            bugs: report.total_bugs,
                            metric,
                            base: md.base,
                            other: md.other,
                            relative: md.relative,
                            significant: md.mcnemar.as_ref().is_some_and(|t| t.significant()),
                            mcnemar: md.mcnemar,
                        });
                    }
                }
            }
            layers.push(LayerEntry {
                run_id: run.run_id.clone(),
                report,
            });
        }
    }

    let mut comparisons = Vec::new();
    for (i, x) in layers.iter().enumerate() {
        for y in &layers[i + 1..] {
            let (a, b) = (&x.report, &y.report);
            let same_bugs = a.bugs.iter().map(|o| &o.bug_id).eq(b.bugs.iter().map(|o| &o.bug_id));
            if x.run_id == y.run_id || a.layer != b.layer || a.group != b.group || !same_bugs || a.bugs.is_empty() {
                continue;
            }
            for metric in Metric::ALL {
                let va: Vec<bool> = a.solved_vector(metric).into_iter().map(|(_, s)| s).collect();
                let vb: Vec<bool> = b.solved_vector(metric).into_iter().map(|(_, s)| s).collect();
                let test = mcnemar(&va, &vb)?;
                comparisons.push(ComparisonEntry {
                    layer: a.layer,
                    group: a.group.clone(),
                    metric,
                    a: label(&x.run_id, a),
                    b: label(&y.run_id, b),
                    significant: test.significant(),
                    mcnemar: test,
                });
            }
        }
    }
    Ok(ReportBundle {
        provenance,
        layers,
        deltas,
        comparisons,
    })
}

fn pct(r: Option<Ratio>) -> String {
    r.map_or("n/a".into(), |r| r.to_string())
}

/// Markdown prints negative numbers with a true minus sign.
fn md_pct(r: Option<Ratio>) -> String {
    pct(r).replacen('-', "\u{2212}", 1)
}

fn p_value(t: &Option<McNemarResult>) -> String {
    t.as_ref().map_or("n/a".into(), |t| format!("{:.4}", t.p_value))
}

fn star(significant: bool) -> &'static str {
    if significant {
        " *"
    } else {
        ""
    }
}

pub fn render_markdown(r: &ReportBundle) -> String {
    let mut s = String::from("# Layered evaluation report\n\n");
    for p in &r.provenance {
        s.push_str(&format!(
            "- run `{}` on corpus `{}` (digest `{}`)\n",
            p.run_id, p.corpus, p.corpus_digest
        ));
    }

    s.push_str("\n## Solved rates\n\n| Config | Run | Layer | Group | Bugs | %PP | %SYE | %EM |\n|---|---|---|---|---:|---:|---:|---:|\n");
    for l in &r.layers {
        let rep = &l.report;
        s.push_str(&format!(
            "| {} | {} | {} | {} | {} | {} | {} | {} |\n",
            rep.config,
            l.run_id,
            rep.layer,
            rep.group,
            rep.total_bugs,
            md_pct(rep.rate[&Metric::Pp]),
            md_pct(rep.rate[&Metric::Sye]),
            md_pct(rep.rate[&Metric::Em]),
        ));
    }

    s.push_str("\n## FIX distribution\n\n| Config | Run | Layer | Group | Metric | FIX_0 | FIX_1 | FIX_PLUS | FIX_ALL |\n|---|---|---|---|---|---:|---:|---:|---:|\n");
    for l in &r.layers {
        let rep = &l.report;
        for m in Metric::ALL {
            let c = &rep.classes[&m];
            s.push_str(&format!(
                "| {} | {} | {} | {} | {} | {} | {} | {} | {} |\n",
                rep.config,
                l.run_id,
                rep.layer,
                rep.group,
                m.as_str().to_uppercase(),
                c[&FixClass::Fix0],
                c[&FixClass::Fix1],
                c[&FixClass::FixPlus],
                c[&FixClass::FixAll],
            ));
        }
    }

    s.push_str("\n## Change against the original bugs\n\nStarred deltas are significant under McNemar's test at alpha = 0.05.\n\n| Config | Run | Layer | Group | Bugs | Metric | Original | Layer rate | Delta | p |\n|---|---|---|---|---:|---|---:|---:|---:|---:|\n");
    for d in &r.deltas {
        s.push_str(&format!(
            "| {} | {} | {} | {} | {} | {} | {} | {} | {}{} | {} |\n",
            d.config,
            d.run_id,
            d.layer,
            d.group,
            d.bugs,
            d.metric.as_str().to_uppercase(),
            md_pct(d.base),
            md_pct(d.other),
            md_pct(d.relative),
            star(d.significant),
            p_value(&d.mcnemar),
        ));
    }

    if !r.comparisons.is_empty() {
        s.push_str("\n## Configuration comparisons\n\n| Layer | Group | Metric | A | B | A only | B only | Test | p |\n|---|---|---|---|---|---:|---:|---|---:|\n");
        for c in &r.comparisons {
            let method = match c.mcnemar.method {
                crate::stats::McNemarMethod::Exact => "exact",
                crate::stats::McNemarMethod::CcChi2 => "chi2 (cc)",
            };
            s.push_str(&format!(
                "| {} | {} | {} | {} | {} | {} | {} | {} | {:.4}{} |\n",
                c.layer,
                c.group,
                c.metric.as_str().to_uppercase(),
                c.a,
                c.b,
                c.mcnemar.b,
                c.mcnemar.c,
                method,
                c.mcnemar.p_value,
                star(c.significant),
            ));
        }
    }
    s
}

fn csv_field(f: &str) -> String {
    if f.contains([',', '"', '\n']) {
        format!("\"{}\"", f.replace('"', "\"\""))
    } else {
        f.to_string()
    }
}

fn csv_row(out: &mut String, fields: &[String]) {
    let row: Vec<String> = fields.iter().map(|f| csv_field(f)).collect();
    out.push_str(&row.join(","));
    out.push('\n');
}

pub fn render_csv(r: &ReportBundle) -> String {
    let mut s = String::new();
    csv_row(
        &mut s,
        &[
            "table",
            "config",
            "run",
            "layer",
            "group",
            "bugs",
            "metric",
            "key",
            "value",
            "p_value",
            "significant",
        ]
        .map(String::from),
    );
    for l in &r.layers {
        let rep = &l.report;
        let head = |table: &str| {
            vec![
                table.to_string(),
                rep.config.clone(),
                l.run_id.clone(),
                rep.layer.to_string(),
                rep.group.clone(),
                rep.total_bugs.to_string(),
            ]
        };
        for m in Metric::ALL {
            let mut row = head("rate");
            row.extend([
                m.as_str().into(),
                "percent".into(),
                pct(rep.rate[&m]),
                String::new(),
                String::new(),
            ]);
            csv_row(&mut s, &row);
            let mut row = head("rate");
            row.extend([
                m.as_str().into(),
                "solved".into(),
                rep.solved[&m].to_string(),
                String::new(),
                String::new(),
            ]);
            csv_row(&mut s, &row);
        }
        for m in Metric::ALL {
            for c in FixClass::ALL {
                let mut row = head("fix");
                row.extend([
                    m.as_str().into(),
                    c.as_str().into(),
                    rep.classes[&m][&c].to_string(),
                    String::new(),
                    String::new(),
                ]);
                csv_row(&mut s, &row);
            }
        }
    }
    for d in &r.deltas {
        for (key, value) in [("original", d.base), ("layer", d.other), ("delta", d.relative)] {
            let (p, sig) = if key == "delta" {
                (p_value(&d.mcnemar), d.significant.to_string())
            } else {
                (String::new(), String::new())
            };
            csv_row(
                &mut s,
                &[
                    "delta".into(),
                    d.config.clone(),
                    d.run_id.clone(),
                    d.layer.to_string(),
                    d.group.clone(),
                    d.bugs.to_string(),
                    d.metric.as_str().into(),
                    key.into(),
                    pct(value),
                    p,
                    sig,
                ],
            );
        }
    }
    for c in &r.comparisons {
        csv_row(
            &mut s,
            &[
                "comparison".into(),
                format!("{} vs {}", c.a, c.b),
                String::new(),
                c.layer.to_string(),
                c.group.clone(),
                String::new(),
                c.metric.as_str().into(),
                "discordant".into(),
                format!("{}/{}", c.mcnemar.b, c.mcnemar.c),
                format!("{:.4}", c.mcnemar.p_value),
                c.significant.to_string(),
            ],
        );
    }
    s
}

pub fn render_json(r: &ReportBundle) -> String {
    let mut s = serde_json::to_string_pretty(r).expect("report serializes");
    s.push('\n');
    s
}

pub fn render(r: &ReportBundle, format: ReportFormat) -> String {
    match format {
        ReportFormat::Markdown => render_markdown(r),
        ReportFormat::Csv => render_csv(r),
        ReportFormat::Json => render_json(r),
    }
}

/// Writes one file per format into `out_dir`.
pub fn emit_report(runs: &[RunRecord], formats: &[ReportFormat], out_dir: &Path) -> Result<Vec<PathBuf>> {
    let mut inputs = Vec::new();
    let mut missing = Vec::new();
    for run in runs {
        match RunInput::from_record(run) {
            Ok(i) => inputs.push(i),
            Err(Error::IncompleteLedger(m)) => missing.extend(m),
            Err(e) => return Err(e),
        }
    }
    if !missing.is_empty() {
        return Err(Error::IncompleteLedger(missing));
    }
    let bundle = build_report(&inputs)?;
    let formats: BTreeSet<ReportFormat> = formats.iter().copied().collect();
    let mut written = Vec::new();
    for f in formats {
        let path = out_dir.join(f.file_name());
        fsutil::write(&path, render(&bundle, f))?;
        written.push(path);
    }
    Ok(written)
}
