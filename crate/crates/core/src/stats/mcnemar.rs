use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{Error, Result};

/// Below this many discordant pairs the exact binomial test is used.
pub const EXACT_BELOW: u64 = 25;
pub const ALPHA: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum McNemarMethod {
    Exact,
    CcChi2,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McNemarResult {
    /// Solved by A only.
    pub b: u64,
    /// Solved by B only.
    pub c: u64,
    pub n_discordant: u64,
    pub method: McNemarMethod,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub statistic: Option<f64>,
    pub p_value: f64,
}

impl McNemarResult {
    pub fn significant(&self) -> bool {
        self.p_value < ALPHA
    }
}

fn binomial(n: u64, k: u64) -> f64 {
    let mut acc = 1.0f64;
    for i in 0..k.min(n - k) {
        acc = acc * (n - i) as f64 / (i + 1) as f64;
    }
    acc.round()
}

/// McNemar's test from discordant counts.
pub fn mcnemar_counts(b: u64, c: u64) -> McNemarResult {
    let n = b + c;
    if n < EXACT_BELOW {
        let p = if n == 0 {
            1.0
        } else {
            let tail: f64 = (0..=b.min(c)).map(|k| binomial(n, k)).sum();
            (2.0 * tail / 2f64.powi(n as i32)).min(1.0)
        };
        return McNemarResult {
            b,
            c,
            n_discordant: n,
            method: McNemarMethod::Exact,
            statistic: None,
            p_value: p,
        };
    }
    let diff = b.abs_diff(c) as f64 - 1.0;
    let stat = diff.max(0.0).powi(2) / n as f64;
    let chi = ChiSquared::new(1.0).expect("one degree of freedom");
    McNemarResult {
        b,
        c,
        n_discordant: n,
        method: McNemarMethod::CcChi2,
        statistic: Some(stat),
        p_value: chi.sf(stat).clamp(0.0, 1.0),
    }
}

/// Paired comparison of two solved vectors aligned by bug.
pub fn mcnemar(a: &[bool], b: &[bool]) -> Result<McNemarResult> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    let only_a = a.iter().zip(b).filter(|(x, y)| **x && !**y).count() as u64;
    let only_b = a.iter().zip(b).filter(|(x, y)| !**x && **y).count() as u64;
    Ok(mcnemar_counts(only_a, only_b))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_samples_are_exact() {
        let r = mcnemar_counts(0, 0);
        assert_eq!(r.p_value, 1.0);
        assert_eq!(r.method, McNemarMethod::Exact);
        assert_eq!(mcnemar_counts(1, 5).p_value, 0.21875);
        assert_eq!(mcnemar_counts(12, 12).p_value, 1.0);
    }

    #[test]
    fn switch_at_twenty_five() {
        assert_eq!(mcnemar_counts(12, 12).method, McNemarMethod::Exact);
        assert_eq!(mcnemar_counts(12, 13).method, McNemarMethod::CcChi2);
    }

    #[test]
    fn vectors() {
        let a = [true, true, false, false];
        let b = [true, false, true, true];
        let r = mcnemar(&a, &b).unwrap();
        assert_eq!((r.b, r.c), (1, 2));
        assert!(matches!(
            mcnemar(&a, &b[..3]),
            Err(Error::LengthMismatch { left: 4, right: 3 })
        ));
    }
}
