//! Fixed-point plan time.
//!
//! Plans carry times with three decimals, so everything inside the pipeline
//! works on integer milliseconds. Happening equality is exact.

use alloc::string::String;
use core::fmt;
use core::ops::{Add, Sub};

use serde::{Deserialize, Serialize};

/// A point in time or a duration, in integer milliseconds.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Millis(pub i64);

impl Millis {
    pub const ZERO: Millis = Millis(0);

    pub fn from_secs_f64(secs: f64) -> Millis {
        // round half away from zero
        let scaled = secs * 1000.0;
        let r = if scaled >= 0.0 { scaled + 0.5 } else { scaled - 0.5 };
        Millis(r as i64)
    }

    pub fn as_secs_f64(self) -> f64 {
        self.0 as f64 / 1000.0
    }

    /// Parses a non-negative decimal number of seconds such as `5.002` or `8`.
    ///
    /// At most three fractional digits are accepted; anything finer cannot be
    /// represented exactly.
    pub fn parse_secs(text: &str) -> Option<Millis> {
        let text = text.trim();
        if text.is_empty() {
            return None;
        }
        let (int_part, frac_part) = match text.split_once('.') {
            Some((i, f)) => (i, f),
            None => (text, ""),
        };
        if int_part.is_empty() && frac_part.is_empty() {
            return None;
        }
        if !int_part.bytes().all(|b| b.is_ascii_digit()) || !frac_part.bytes().all(|b| b.is_ascii_digit()) {
            return None;
        }
        let trimmed = frac_part.trim_end_matches('0');
        if trimmed.len() > 3 {
            return None;
        }
        let whole: i64 = if int_part.is_empty() { 0 } else { int_part.parse().ok()? };
        let mut frac: i64 = 0;
        for (i, b) in trimmed.bytes().enumerate() {
            frac += i64::from(b - b'0') * [100, 10, 1][i];
        }
        whole.checked_mul(1000)?.checked_add(frac).map(Millis)
    }

    /// Renders as seconds with exactly three decimals (`%.3f`).
    pub fn to_secs_string(self) -> String {
        alloc::format!("{}", SecsDisplay(self))
    }
}

/// `Display` adapter printing seconds with three decimals.
pub struct SecsDisplay(pub Millis);

impl fmt::Display for SecsDisplay {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let ms = self.0 .0;
        let sign = if ms < 0 { "-" } else { "" };
        let abs = ms.unsigned_abs();
        write!(f, "{}{}.{:03}", sign, abs / 1000, abs % 1000)
    }
}

impl fmt::Display for Millis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl Add for Millis {
    type Output = Millis;
    fn add(self, rhs: Millis) -> Millis {
        Millis(self.0 + rhs.0)
    }
}

impl Sub for Millis {
    type Output = Millis;
    fn sub(self, rhs: Millis) -> Millis {
        Millis(self.0 - rhs.0)
    }
}
