//! Calendar periods: months (`YYYY-MM`), years (`YYYY`) and inclusive month spans.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MIN_YEAR: i32 = 1900;
pub const MAX_YEAR: i32 = 2200;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct YearMonth {
    year: i32,
    month: u8,
}

impl YearMonth {
    pub fn new(year: i32, month: u8) -> Result<Self> {
        if !(MIN_YEAR..=MAX_YEAR).contains(&year) {
            return Err(Error::Validation(format!("year {year} outside [{MIN_YEAR}, {MAX_YEAR}]")));
        }
        if !(1..=12).contains(&month) {
            return Err(Error::Validation(format!("month {month} outside [1, 12]")));
        }
        Ok(YearMonth { year, month })
    }

    pub fn year(self) -> i32 {
        self.year
    }

    pub fn month(self) -> u8 {
        self.month
    }

    /// Months since year 0; consecutive months differ by one.
    pub fn ordinal(self) -> i64 {
        self.year as i64 * 12 + (self.month as i64 - 1)
    }

    pub fn from_ordinal(ordinal: i64) -> Result<Self> {
        let year = ordinal.div_euclid(12);
        let month = ordinal.rem_euclid(12) + 1;
        let year =
            i32::try_from(year).map_err(|_| Error::Validation(format!("month ordinal {ordinal} out of range")))?;
        YearMonth::new(year, month as u8)
    }

    /// Shift by `months` (may be negative).
    pub fn offset(self, months: i64) -> Result<Self> {
        YearMonth::from_ordinal(self.ordinal() + months)
    }
}

impl fmt::Display for YearMonth {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:04}-{:02}", self.year, self.month)
    }
}

fn parse_year(s: &str) -> Result<i32> {
    if s.len() != 4 || !s.bytes().all(|b| b.is_ascii_digit()) {
        return Err(Error::Validation(format!("malformed year {s:?}")));
    }
    let year: i32 = s.parse().map_err(|_| Error::Validation(format!("malformed year {s:?}")))?;
    if !(MIN_YEAR..=MAX_YEAR).contains(&year) {
        return Err(Error::Validation(format!("year {year} outside [{MIN_YEAR}, {MAX_YEAR}]")));
    }
    Ok(year)
}

impl FromStr for YearMonth {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (y, m) =
            s.split_once('-').ok_or_else(|| Error::Validation(format!("malformed period {s:?}, expected YYYY-MM")))?;
        if m.len() != 2 || !m.bytes().all(|b| b.is_ascii_digit()) {
            return Err(Error::Validation(format!("malformed month in {s:?}")));
        }
        let year = parse_year(y)?;
        let month: u8 = m.parse().map_err(|_| Error::Validation(format!("malformed month in {s:?}")))?;
        YearMonth::new(year, month)
    }
}

impl TryFrom<String> for YearMonth {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<YearMonth> for String {
    fn from(ym: YearMonth) -> String {
        ym.to_string()
    }
}

/// Inclusive range of months.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct PeriodSpan {
    pub start: YearMonth,
    pub end: YearMonth,
}

impl PeriodSpan {
    pub fn new(start: YearMonth, end: YearMonth) -> Result<Self> {
        if end < start {
            return Err(Error::Validation(format!("span end {end} precedes start {start}")));
        }
        Ok(PeriodSpan { start, end })
    }

    pub fn month(m: YearMonth) -> Self {
        PeriodSpan { start: m, end: m }
    }

    pub fn year(year: i32) -> Result<Self> {
        Ok(PeriodSpan { start: YearMonth::new(year, 1)?, end: YearMonth::new(year, 12)? })
    }

    pub fn contains(&self, m: YearMonth) -> bool {
        self.start <= m && m <= self.end
    }

    pub fn overlaps(&self, other: &PeriodSpan) -> bool {
        self.start <= other.end && other.start <= self.end
    }

    pub fn is_single_month(&self) -> bool {
        self.start == self.end
    }

    pub fn n_months(&self) -> i64 {
        self.end.ordinal() - self.start.ordinal() + 1
    }
}

impl fmt::Display for PeriodSpan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_single_month() {
            write!(f, "{}", self.start)
        } else if self.start.month() == 1 && self.end.month() == 12 && self.start.year() == self.end.year() {
            write!(f, "{}", self.start.year())
        } else {
            write!(f, "{}:{}", self.start, self.end)
        }
    }
}

/// Accepts `YYYY`, `YYYY-MM`, `YYYY:YYYY` and `YYYY-MM:YYYY-MM`.
impl FromStr for PeriodSpan {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        fn bound(s: &str, is_end: bool) -> Result<YearMonth> {
            if s.contains('-') {
                s.parse()
            } else {
                YearMonth::new(parse_year(s)?, if is_end { 12 } else { 1 })
            }
        }
        match s.split_once(':') {
            Some((a, b)) => PeriodSpan::new(bound(a, false)?, bound(b, true)?),
            None => PeriodSpan::new(bound(s, false)?, bound(s, true)?),
        }
    }
}

/// Observation date of an indicator series.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Period {
    Month(YearMonth),
    Year(i32),
}

impl Period {
    pub fn year(self) -> i32 {
        match self {
            Period::Month(m) => m.year(),
            Period::Year(y) => y,
        }
    }

    /// Same period one year earlier.
    pub fn year_before(self) -> Option<Period> {
        match self {
            Period::Month(m) => m.offset(-12).ok().map(Period::Month),
            Period::Year(y) if y > MIN_YEAR => Some(Period::Year(y - 1)),
            Period::Year(_) => None,
        }
    }

    pub fn parse(s: &str, frequency: Frequency) -> Result<Self> {
        match frequency {
            Frequency::Monthly => s.parse().map(Period::Month),
            Frequency::Annual => parse_year(s).map(Period::Year),
        }
    }
}

impl fmt::Display for Period {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Period::Month(m) => write!(f, "{m}"),
            Period::Year(y) => write!(f, "{y:04}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Frequency {
    Monthly,
    Annual,
}
