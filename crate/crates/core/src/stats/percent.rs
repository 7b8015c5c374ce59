use std::cmp::Ordering;
use std::fmt;

use serde::{Serialize, Serializer};

/// An exact fraction shown as a percentage with two decimals, rounded half
/// away from zero.
#[derive(Debug, Clone, Copy)]
pub struct Ratio {
    pub num: i128,
    pub den: i128,
}

impl Ratio {
    /// `den` must be non-zero.
    pub fn new(num: i128, den: i128) -> Self {
        assert!(den != 0, "ratio with zero denominator");
        if den < 0 {
            Ratio { num: -num, den: -den }
        } else {
            Ratio { num, den }
        }
    }

    pub fn of(count: u64, total: u64) -> Option<Self> {
        (total > 0).then(|| Ratio::new(count as i128, total as i128))
    }

    /// Hundredths of a percent, rounded.
    pub fn basis_points(&self) -> i128 {
        let scaled = self.num.abs() * 10_000;
        let rounded = (2 * scaled + self.den) / (2 * self.den);
        if self.num < 0 {
            -rounded
        } else {
            rounded
        }
    }

    pub fn as_f64(&self) -> f64 {
        self.num as f64 / self.den as f64
    }

    /// `81.57`, `-63.76`, `0.00`.
    pub fn percent_string(&self) -> String {
        let bp = self.basis_points();
        let sign = if bp < 0 { "-" } else { "" };
        format!("{sign}{}.{:02}", bp.abs() / 100, bp.abs() % 100)
    }

    /// Relative change `(other - base) / base`; `None` when `base` is zero.
    pub fn relative_change(base: Ratio, other: Ratio) -> Option<Ratio> {
        if base.num == 0 {
            return None;
        }
        Some(Ratio::new(
            other.num * base.den - base.num * other.den,
            other.den * base.num,
        ))
    }
}

impl PartialEq for Ratio {
    fn eq(&self, other: &Self) -> bool {
        self.num * other.den == other.num * self.den
    }
}

impl Eq for Ratio {}

impl PartialOrd for Ratio {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Ratio {
    fn cmp(&self, other: &Self) -> Ordering {
        (self.num * other.den).cmp(&(other.num * self.den))
    }
}

impl fmt::Display for Ratio {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}%", self.percent_string())
    }
}

impl Serialize for Ratio {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.percent_string())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rounding_half_away_from_zero() {
        assert_eq!(Ratio::new(1, 8).percent_string(), "12.50");
        assert_eq!(Ratio::new(1, 3).percent_string(), "33.33");
        assert_eq!(Ratio::new(2, 3).percent_string(), "66.67");
        assert_eq!(Ratio::new(1, 80000).percent_string(), "0.00");
        assert_eq!(Ratio::new(1, 40000).percent_string(), "0.00");
        assert_eq!(Ratio::new(1, 20000).percent_string(), "0.01");
        assert_eq!(Ratio::new(-1, 20000).percent_string(), "-0.01");
        assert_eq!(Ratio::new(-2, 3).percent_string(), "-66.67");
    }

    #[test]
    fn zero_base_has_no_relative_change() {
        assert!(Ratio::relative_change(Ratio::new(0, 5), Ratio::new(1, 5)).is_none());
        let same = Ratio::relative_change(Ratio::new(3, 7), Ratio::new(6, 14)).unwrap();
        assert_eq!(same.percent_string(), "0.00");
    }

    #[test]
    fn equality_is_by_value() {
        assert_eq!(Ratio::new(1, 2), Ratio::new(2, 4));
        assert_eq!(Ratio::new(1, -2), Ratio::new(-1, 2));
        assert!(Ratio::new(1, 3) < Ratio::new(1, 2));
    }
}
