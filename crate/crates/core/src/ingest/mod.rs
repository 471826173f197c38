//! Readers and writers for flow records, concordances, indicator series and matrix files.

mod concordance;
mod matrix_file;

pub use concordance::{apply_concordance, division_concordance, parse_concordance, ConcordanceTable, DefaultPolicy};
pub use matrix_file::{read_matrix, write_matrix, MatrixFile};

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flow::{FlowRecord, IndustryCode, Measured};
use crate::period::{Frequency, Period, YearMonth};

pub const FLOWS_HEADER: [&str; 5] = ["period", "payer", "payee", "value", "count"];
pub const INDICATOR_HEADER: [&str; 2] = ["date", "value"];

/// Sentinel for a suppressed field in the flows CSV.
pub const SUPPRESSED_FIELD: &str = "S";

fn csv_error(e: csv::Error) -> Error {
    Error::Parse { line: e.position().map(|p| p.line()).unwrap_or(0), message: e.to_string() }
}

fn check_header(rdr: &mut csv::Reader<impl Read>, expected: &[&str]) -> Result<()> {
    let headers = rdr.headers().map_err(csv_error)?;
    let found: Vec<&str> = headers.iter().collect();
    if found != expected {
        return Err(Error::Schema(format!("expected header `{}`, found `{}`", expected.join(","), found.join(","))));
    }
    Ok(())
}

/// Parse a flows CSV (`period,payer,payee,value,count`). Row order is preserved.
pub fn parse_flows<R: Read>(reader: R) -> Result<Vec<FlowRecord>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    check_header(&mut rdr, &FLOWS_HEADER)?;
    let mut out = Vec::new();
    for row in rdr.records() {
        let row = row.map_err(csv_error)?;
        let line = row.position().map(|p| p.line()).unwrap_or(0);
        let field = |k: usize| row.get(k).unwrap_or_default();
        let parse_err = |message: String| Error::Parse { line, message };

        let period: YearMonth =
            field(0).parse().map_err(|e: Error| parse_err(format!("period {:?}: {e}", field(0))))?;
        let payer = IndustryCode::infer(field(1)).map_err(|e| parse_err(e.to_string()))?;
        let payee = IndustryCode::infer(field(2)).map_err(|e| parse_err(e.to_string()))?;
        let value = match field(3) {
            SUPPRESSED_FIELD => Measured::Suppressed,
            s => {
                let v: f64 = s.parse().map_err(|_| parse_err(format!("value {s:?} is not a number")))?;
                if !v.is_finite() || v < 0.0 {
                    return Err(Error::Validation(format!("line {line}: value {s} is negative or not finite")));
                }
                Measured::Observed(v)
            }
        };
        let count = match field(4) {
            SUPPRESSED_FIELD => Measured::Suppressed,
            s if s.starts_with('-') => {
                return Err(Error::Validation(format!("line {line}: count {s} is negative")));
            }
            s => Measured::Observed(s.parse().map_err(|_| parse_err(format!("count {s:?} is not an integer")))?),
        };
        out.push(FlowRecord { period, payer, payee, value, count });
    }
    Ok(out)
}

/// Write records in the flows CSV format. Values use the shortest representation
/// that parses back to the same `f64`.
pub fn serialize_flows<W: Write>(records: &[FlowRecord], writer: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    let io = |e: csv::Error| Error::Io(e.to_string());
    wtr.write_record(FLOWS_HEADER).map_err(io)?;
    for r in records {
        let value = match r.value {
            Measured::Observed(v) => format!("{v:?}"),
            Measured::Suppressed => SUPPRESSED_FIELD.to_string(),
        };
        let count = match r.count {
            Measured::Observed(c) => c.to_string(),
            Measured::Suppressed => SUPPRESSED_FIELD.to_string(),
        };
        wtr.write_record([r.period.to_string(), r.payer.to_string(), r.payee.to_string(), value, count]).map_err(io)?;
    }
    wtr.flush()?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Adjustment {
    Sa,
    Nsa,
    Na,
}

/// Dated external macro series (GDP proxy, money aggregate, price index, ...).
#[derive(Debug, Clone, PartialEq)]
pub struct IndicatorSeries {
    pub name: String,
    pub frequency: Frequency,
    pub adjusted: Adjustment,
    points: Vec<(Period, f64)>,
}

impl IndicatorSeries {
    /// Validates that dates are strictly increasing and match `frequency`.
    pub fn new(name: impl Into<String>, frequency: Frequency, points: Vec<(Period, f64)>) -> Result<Self> {
        let name = name.into();
        for (p, v) in &points {
            let ok_freq =
                matches!((frequency, p), (Frequency::Monthly, Period::Month(_)) | (Frequency::Annual, Period::Year(_)));
            if !ok_freq {
                return Err(Error::Validation(format!("{name}: date {p} does not match {frequency:?} frequency")));
            }
            if !v.is_finite() {
                return Err(Error::Validation(format!("{name}: value at {p} is not finite")));
            }
        }
        for w in points.windows(2) {
            if w[1].0 <= w[0].0 {
                return Err(Error::Validation(format!("{name}: dates not strictly increasing at {}", w[1].0)));
            }
        }
        Ok(IndicatorSeries { name, frequency, adjusted: Adjustment::Na, points })
    }

    /// Sorts the points first; duplicate dates are an error.
    pub fn from_unsorted(
        name: impl Into<String>,
        frequency: Frequency,
        mut points: Vec<(Period, f64)>,
    ) -> Result<Self> {
        let name = name.into();
        points.sort_by_key(|&(p, _)| p);
        if let Some(w) = points.windows(2).find(|w| w[0].0 == w[1].0) {
            return Err(Error::Validation(format!("{name}: duplicate date {}", w[0].0)));
        }
        IndicatorSeries::new(name, frequency, points)
    }

    pub fn with_adjustment(mut self, adjusted: Adjustment) -> Self {
        self.adjusted = adjusted;
        self
    }

    pub fn points(&self) -> &[(Period, f64)] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn value_at(&self, p: Period) -> Option<f64> {
        self.points.binary_search_by_key(&p, |&(d, _)| d).ok().map(|k| self.points[k].1)
    }
}

/// Parse a two-column `date,value` CSV. Rows may come in any order.
pub fn parse_indicator<R: Read>(reader: R, name: &str, frequency: Frequency) -> Result<IndicatorSeries> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    check_header(&mut rdr, &INDICATOR_HEADER)?;
    let mut points = Vec::new();
    for row in rdr.records() {
        let row = row.map_err(csv_error)?;
        let line = row.position().map(|p| p.line()).unwrap_or(0);
        let date = row.get(0).unwrap_or_default();
        let value = row.get(1).unwrap_or_default();
        let period = Period::parse(date, frequency).map_err(|e| Error::Parse { line, message: e.to_string() })?;
        let v: f64 =
            value.parse().map_err(|_| Error::Parse { line, message: format!("value {value:?} is not a number") })?;
        points.push((period, v));
    }
    IndicatorSeries::from_unsorted(name, frequency, points)
}

#[cfg(test)]
mod tests {
    use super::*;

    const HEADER: &str = "period,payer,payee,value,count\n";

    #[test]
    fn parses_plain_row() {
        let recs = parse_flows(format!("{HEADER}2019-03,84110,64191,1250.50,3\n").as_bytes()).unwrap();
        assert_eq!(recs.len(), 1);
        let r = &recs[0];
        assert_eq!(r.period.to_string(), "2019-03");
        assert_eq!(r.payer.as_str(), "84110");
        assert_eq!(r.payee.as_str(), "64191");
        assert_eq!(r.value, Measured::Observed(1250.50));
        assert_eq!(r.count, Measured::Observed(3));
    }

    #[test]
    fn parses_suppressed_row() {
        let recs = parse_flows(format!("{HEADER}2019-03,84110,64191,S,S\n").as_bytes()).unwrap();
        assert!(recs[0].value.is_suppressed());
        assert!(recs[0].count.is_suppressed());
    }

    #[test]
    fn bad_month_reports_line() {
        let text = format!("{HEADER}2019-03,84110,64191,1,1\n2019-13,84110,64191,1,1\n");
        match parse_flows(text.as_bytes()) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn negative_value_and_unknown_column() {
        let neg = format!("{HEADER}2019-03,84110,64191,-5,1\n");
        assert_eq!(parse_flows(neg.as_bytes()).unwrap_err().name(), "ValidationError");
        let extra = "period,payer,payee,value,count,bank\n";
        assert_eq!(parse_flows(extra.as_bytes()).unwrap_err().name(), "SchemaError");
    }

    #[test]
    fn round_trip_preserves_order_and_bits() {
        let text = format!("{HEADER}2019-03,84110,64191,1250.5,3\n2019-01,K64,O84,0.1,S\n2019-02,64191,84110,S,7\n");
        let recs = parse_flows(text.as_bytes()).unwrap();
        let mut buf = Vec::new();
        serialize_flows(&recs, &mut buf).unwrap();
        assert_eq!(parse_flows(buf.as_slice()).unwrap(), recs);
        assert_eq!(String::from_utf8(buf).unwrap(), text);
    }

    #[test]
    fn indicator_monthly_and_annual() {
        let s = parse_indicator("date,value\n2015-08,100.0\n2015-09,101.2\n".as_bytes(), "gdp", Frequency::Monthly)
            .unwrap();
        assert_eq!(s.len(), 2);
        let a = parse_indicator("date,value\n2016,2027.1\n".as_bytes(), "gdp", Frequency::Annual).unwrap();
        assert_eq!(a.points(), &[(Period::Year(2016), 2027.1)]);
    }

    #[test]
    fn indicator_sorted_and_validated() {
        let s = parse_indicator("date,value\n2015-09,2\n2015-08,1\n".as_bytes(), "m1", Frequency::Monthly).unwrap();
        let ms: Vec<String> = s.points().iter().map(|(p, _)| p.to_string()).collect();
        assert_eq!(ms, ["2015-08", "2015-09"]);
        assert_eq!(s.points()[0].1, 1.0);
        let dup = parse_indicator("date,value\n2015-08,1\n2015-08,2\n".as_bytes(), "m1", Frequency::Monthly);
        assert_eq!(dup.unwrap_err().name(), "ValidationError");
        let nan = parse_indicator("date,value\n2015-08,abc\n".as_bytes(), "m1", Frequency::Monthly);
        assert_eq!(nan.unwrap_err().name(), "ParseError");
    }
}
