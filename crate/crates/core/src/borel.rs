//! Finite unions of intervals on the real line.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
    pub lo_closed: bool,
    pub hi_closed: bool,
}

impl Interval {
    pub fn new(lo: f64, hi: f64, lo_closed: bool, hi_closed: bool) -> Self {
        // Infinite endpoints are never attained.
        Interval { lo, hi, lo_closed: lo_closed && lo.is_finite(), hi_closed: hi_closed && hi.is_finite() }
    }

    fn is_empty(&self) -> bool {
        self.lo > self.hi || (self.lo == self.hi && !(self.lo_closed && self.hi_closed))
    }

    pub fn contains(&self, x: f64) -> bool {
        let above = if self.lo_closed { x >= self.lo } else { x > self.lo };
        let below = if self.hi_closed { x <= self.hi } else { x < self.hi };
        above && below
    }
}

/// A Borel set represented as a sorted list of disjoint intervals.
///
/// Every constructor normalizes: empty pieces are dropped and overlapping or
/// touching pieces are merged, so two sets with the same points compare equal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Interval>", into = "Vec<Interval>")]
pub struct BorelSet1D {
    intervals: Vec<Interval>,
}

impl TryFrom<Vec<Interval>> for BorelSet1D {
    type Error = Error;
    fn try_from(v: Vec<Interval>) -> Result<Self> {
        if v.iter().any(|i| i.lo.is_nan() || i.hi.is_nan()) {
            return Err(Error::InvalidConfig("NaN interval endpoint".into()));
        }
        Ok(BorelSet1D::from_intervals(v))
    }
}

impl From<BorelSet1D> for Vec<Interval> {
    fn from(b: BorelSet1D) -> Self {
        b.intervals
    }
}

impl BorelSet1D {
    pub fn from_intervals(intervals: impl IntoIterator<Item = Interval>) -> Self {
        let mut v: Vec<Interval> = intervals.into_iter().filter(|i| !i.is_empty()).collect();
        v.sort_by(|a, b| a.lo.total_cmp(&b.lo).then_with(|| b.lo_closed.cmp(&a.lo_closed)));
        let mut merged: Vec<Interval> = Vec::with_capacity(v.len());
        for next in v {
            if let Some(last) = merged.last_mut() {
                let touches = last.hi > next.lo || (last.hi == next.lo && (last.hi_closed || next.lo_closed));
                if touches {
                    if next.hi > last.hi || (next.hi == last.hi && next.hi_closed) {
                        last.hi = next.hi;
                        last.hi_closed = next.hi_closed;
                    }
                    continue;
                }
            }
            merged.push(next);
        }
        BorelSet1D { intervals: merged }
    }

    pub fn empty() -> Self {
        BorelSet1D { intervals: Vec::new() }
    }

    pub fn real_line() -> Self {
        Self::from_intervals([Interval::new(f64::NEG_INFINITY, f64::INFINITY, false, false)])
    }

    pub fn closed(a: f64, b: f64) -> Self {
        Self::from_intervals([Interval::new(a, b, true, true)])
    }

    /// `[a, ∞)`
    pub fn at_least(a: f64) -> Self {
        Self::from_intervals([Interval::new(a, f64::INFINITY, true, false)])
    }

    /// `(-∞, b]`
    pub fn at_most(b: f64) -> Self {
        Self::from_intervals([Interval::new(f64::NEG_INFINITY, b, false, true)])
    }

    /// `(a, ∞)`
    pub fn greater_than(a: f64) -> Self {
        Self::from_intervals([Interval::new(a, f64::INFINITY, false, false)])
    }

    /// `(-∞, b)`
    pub fn less_than(b: f64) -> Self {
        Self::from_intervals([Interval::new(f64::NEG_INFINITY, b, false, false)])
    }

    pub fn intervals(&self) -> &[Interval] {
        &self.intervals
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    pub fn is_real_line(&self) -> bool {
        matches!(self.intervals.as_slice(),
            [i] if i.lo == f64::NEG_INFINITY && i.hi == f64::INFINITY)
    }

    pub fn contains(&self, x: f64) -> bool {
        self.intervals.iter().any(|i| i.contains(x))
    }

    pub fn union(&self, other: &BorelSet1D) -> Self {
        Self::from_intervals(self.intervals.iter().chain(&other.intervals).copied())
    }

    pub fn complement(&self) -> Self {
        let mut out = Vec::new();
        let mut lo = f64::NEG_INFINITY;
        let mut lo_closed = false;
        for i in &self.intervals {
            out.push(Interval::new(lo, i.lo, lo_closed, !i.lo_closed));
            lo = i.hi;
            lo_closed = !i.hi_closed;
        }
        out.push(Interval::new(lo, f64::INFINITY, lo_closed, false));
        Self::from_intervals(out)
    }

    pub fn intersection(&self, other: &BorelSet1D) -> Self {
        self.complement().union(&other.complement()).complement()
    }

    pub fn shifted(&self, d: f64) -> Self {
        Self::from_intervals(self.intervals.iter().map(|i| Interval { lo: i.lo + d, hi: i.hi + d, ..*i }))
    }

    /// Closures of the pieces clipped to `[lo, hi]`, dropping pieces of zero length.
    pub fn pieces_within(&self, lo: f64, hi: f64) -> Vec<(f64, f64)> {
        self.intervals.iter().map(|i| (i.lo.max(lo), i.hi.min(hi))).filter(|(a, b)| b > a).collect()
    }
}

fn fmt_endpoint(x: f64) -> String {
    if x == f64::INFINITY {
        "inf".into()
    } else if x == f64::NEG_INFINITY {
        "-inf".into()
    } else {
        format!("{x}")
    }
}

impl fmt::Display for BorelSet1D {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_real_line() {
            return write!(f, "R");
        }
        if self.is_empty() {
            return write!(f, "{{}}");
        }
        let parts: Vec<String> = self
            .intervals
            .iter()
            .map(|i| {
                format!(
                    "{}{},{}{}",
                    if i.lo_closed { '[' } else { '(' },
                    fmt_endpoint(i.lo),
                    fmt_endpoint(i.hi),
                    if i.hi_closed { ']' } else { ')' }
                )
            })
            .collect();
        write!(f, "{}", parts.join("u"))
    }
}

fn parse_endpoint(s: &str) -> Result<f64> {
    match s.trim() {
        "inf" | "+inf" | "∞" => Ok(f64::INFINITY),
        "-inf" | "-∞" => Ok(f64::NEG_INFINITY),
        t => t.parse::<f64>().map_err(|_| Error::Parse(format!("bad interval endpoint '{t}'"))),
    }
}

impl FromStr for BorelSet1D {
    type Err = Error;

    /// Accepts `R`, `{}` or unions such as `(-inf,-0.5]u[1,3]`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "R" || s == "ℝ" {
            return Ok(Self::real_line());
        }
        if s == "{}" || s.is_empty() {
            return Ok(Self::empty());
        }
        let mut intervals = Vec::new();
        for part in s.split(['u', 'U', '∪']) {
            let part = part.trim();
            let lo_closed = match part.chars().next() {
                Some('[') => true,
                Some('(') => false,
                _ => return Err(Error::Parse(format!("interval '{part}' must start with '[' or '('"))),
            };
            let hi_closed = match part.chars().last() {
                Some(']') => true,
                Some(')') => false,
                _ => return Err(Error::Parse(format!("interval '{part}' must end with ']' or ')'"))),
            };
            let inner = &part[1..part.len() - 1];
            let (a, b) =
                inner.split_once(',').ok_or_else(|| Error::Parse(format!("interval '{part}' needs two endpoints")))?;
            let (lo, hi) = (parse_endpoint(a)?, parse_endpoint(b)?);
            if lo > hi {
                return Err(Error::Parse(format!("interval '{part}' has lo > hi")));
            }
            intervals.push(Interval::new(lo, hi, lo_closed, hi_closed));
        }
        Ok(Self::from_intervals(intervals))
    }
}
