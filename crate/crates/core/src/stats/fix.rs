use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// How many of a bug's variants were solved.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum FixClass {
    #[serde(rename = "FIX_0")]
    Fix0,
    #[serde(rename = "FIX_1")]
    Fix1,
    #[serde(rename = "FIX_PLUS")]
    FixPlus,
    #[serde(rename = "FIX_ALL")]
    FixAll,
}

impl FixClass {
    pub const ALL: [FixClass; 4] = [FixClass::Fix0, FixClass::Fix1, FixClass::FixPlus, FixClass::FixAll];

    pub fn as_str(&self) -> &'static str {
        match self {
            FixClass::Fix0 => "FIX_0",
            FixClass::Fix1 => "FIX_1",
            FixClass::FixPlus => "FIX_PLUS",
            FixClass::FixAll => "FIX_ALL",
        }
    }

    /// Counted as solved when aggregating multi-variant layers.
    pub fn counts_as_solved(&self) -> bool {
        matches!(self, FixClass::FixPlus | FixClass::FixAll)
    }
}

impl fmt::Display for FixClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A single solved variant out of one is FIX_ALL.
pub fn classify_fix(solved: &[bool]) -> Result<FixClass> {
    if solved.is_empty() {
        return Err(Error::EmptyVector);
    }
    let k = solved.iter().filter(|&&s| s).count();
    Ok(if k == 0 {
        FixClass::Fix0
    } else if k == solved.len() {
        FixClass::FixAll
    } else if k == 1 {
        FixClass::Fix1
    } else {
        FixClass::FixPlus
    })
}
