use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use super::fix::{classify_fix, FixClass};
use super::mcnemar::{mcnemar, McNemarResult};
use super::percent::Ratio;
use crate::corpus::LayerTag;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    Pp,
    Sye,
    Em,
}

impl Metric {
    pub const ALL: [Metric; 3] = [Metric::Pp, Metric::Sye, Metric::Em];

    pub fn as_str(&self) -> &'static str {
        match self {
            Metric::Pp => "pp",
            Metric::Sye => "sye",
            Metric::Em => "em",
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Per-variant results of one bug, in variant order.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SolveRow {
    pub variants: Vec<String>,
    pub pp: Vec<bool>,
    pub sye: Vec<bool>,
    pub em: Vec<bool>,
}

impl SolveRow {
    pub fn push(&mut self, variant: &str, pp: bool, sye: bool, em: bool) {
        self.variants.push(variant.to_string());
        self.pp.push(pp);
        // equivalence only counts for plausible patches
        self.sye.push(pp && sye);
        self.em.push(pp && em);
    }

    pub fn metric(&self, m: Metric) -> &[bool] {
        match m {
            Metric::Pp => &self.pp,
            Metric::Sye => &self.sye,
            Metric::Em => &self.em,
        }
    }
}

/// Solved vectors for one configuration (agent, model, layer, scheme).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SolveMatrix {
    pub config: String,
    pub layer: LayerTag,
    /// Transform group for layered configurations, `original` for originals.
    pub group: String,
    /// Registered variant count per bug.
    pub expected: BTreeMap<String, usize>,
    pub rows: BTreeMap<String, SolveRow>,
}

impl SolveMatrix {
    pub fn new(config: impl Into<String>, layer: LayerTag, group: impl Into<String>) -> Self {
        SolveMatrix {
            config: config.into(),
            layer,
            group: group.into(),
            expected: BTreeMap::new(),
            rows: BTreeMap::new(),
        }
    }

    pub fn expect(&mut self, bug: &str, variants: usize) {
        *self.expected.entry(bug.to_string()).or_default() += variants;
    }

    pub fn record(&mut self, bug: &str, variant: &str, pp: bool, sye: bool, em: bool) {
        self.rows.entry(bug.to_string()).or_default().push(variant, pp, sye, em);
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BugOutcome {
    pub bug_id: String,
    pub solved: BTreeMap<Metric, bool>,
    pub class: BTreeMap<Metric, FixClass>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LayerReport {
    pub config: String,
    pub layer: LayerTag,
    pub group: String,
    pub total_bugs: u64,
    pub solved: BTreeMap<Metric, u64>,
    /// Absent when there are no bugs.
    pub rate: BTreeMap<Metric, Option<Ratio>>,
    pub classes: BTreeMap<Metric, BTreeMap<FixClass, u64>>,
    pub bugs: Vec<BugOutcome>,
}

impl LayerReport {
    pub fn solved_vector(&self, m: Metric) -> Vec<(&str, bool)> {
        self.bugs.iter().map(|b| (b.bug_id.as_str(), b.solved[&m])).collect()
    }
}

/// Solved rate per metric. Single-variant layers count a bug solved when its
/// variant is; multi-variant layers count FIX_PLUS and FIX_ALL.
pub fn aggregate_layer(matrix: &SolveMatrix) -> Result<LayerReport> {
    let mut missing = Vec::new();
    for (bug, &n) in &matrix.expected {
        match matrix.rows.get(bug) {
            Some(row) if row.pp.len() == n && n > 0 => {}
            _ => missing.push(bug.clone()),
        }
    }
    if !missing.is_empty() {
        return Err(Error::IncompleteRows(missing));
    }
    let multi = matrix.layer.is_multi_variant();
    let mut solved: BTreeMap<Metric, u64> = Metric::ALL.iter().map(|&m| (m, 0)).collect();
    let mut classes: BTreeMap<Metric, BTreeMap<FixClass, u64>> = Metric::ALL
        .iter()
        .map(|&m| (m, FixClass::ALL.iter().map(|&c| (c, 0)).collect()))
        .collect();
    let mut bugs = Vec::new();
    for bug in matrix.expected.keys() {
        let row = &matrix.rows[bug];
        let mut outcome = BugOutcome {
            bug_id: bug.clone(),
            solved: BTreeMap::new(),
            class: BTreeMap::new(),
        };
        for m in Metric::ALL {
            let v = row.metric(m);
            let class = classify_fix(v)?;
            let ok = if multi {
                class.counts_as_solved()
            } else {
                v.iter().any(|&s| s)
            };
            *classes.get_mut(&m).unwrap().get_mut(&class).unwrap() += 1;
            if ok {
                *solved.get_mut(&m).unwrap() += 1;
            }
            outcome.solved.insert(m, ok);
            outcome.class.insert(m, class);
        }
        bugs.push(outcome);
    }
    let total = matrix.expected.len() as u64;
    let rate = solved.iter().map(|(&m, &k)| (m, Ratio::of(k, total))).collect();
    Ok(LayerReport {
        config: matrix.config.clone(),
        layer: matrix.layer,
        group: matrix.group.clone(),
        total_bugs: total,
        solved,
        rate,
        classes,
        bugs,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricDelta {
    pub base: Option<Ratio>,
    pub other: Option<Ratio>,
    /// `(other - base) / base`; absent when the base rate is zero.
    pub relative: Option<Ratio>,
    pub undefined: bool,
    /// Paired test over the shared bugs, when both sides cover the same ones.
    pub mcnemar: Option<McNemarResult>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DeltaReport {
    pub base: String,
    pub other: String,
    pub deltas: BTreeMap<Metric, MetricDelta>,
}

pub fn cross_layer_delta(base: &LayerReport, other: &LayerReport) -> Result<DeltaReport> {
    let keys = |r: &LayerReport| r.rate.keys().copied().collect::<BTreeSet<_>>();
    if keys(base) != keys(other) {
        return Err(Error::MetricMismatch);
    }
    let same_bugs = base
        .bugs
        .iter()
        .map(|b| &b.bug_id)
        .eq(other.bugs.iter().map(|b| &b.bug_id));
    let mut deltas = BTreeMap::new();
    for (&m, &b) in &base.rate {
        let o = other.rate[&m];
        let relative = match (b, o) {
            (Some(b), Some(o)) => Ratio::relative_change(b, o),
            _ => None,
        };
        let test = if same_bugs {
            let va: Vec<bool> = base.solved_vector(m).into_iter().map(|(_, s)| s).collect();
            let vb: Vec<bool> = other.solved_vector(m).into_iter().map(|(_, s)| s).collect();
            Some(mcnemar(&va, &vb)?)
        } else {
            None
        };
        deltas.insert(
            m,
            MetricDelta {
                base: b,
                other: o,
                relative,
                undefined: relative.is_none(),
                mcnemar: test,
            },
        );
    }
    Ok(DeltaReport {
        base: format!("{}:{}", base.config, base.group),
        other: format!("{}:{}", other.config, other.group),
        deltas,
    })
}
