//! Benchmarking aggregate payment flows against external macro indicators.

use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;

use crate::correlate::{growth_rates, pearson, AggregateMode};
use crate::error::{Error, Result};
use crate::flow::{FlowMatrix, WeightKind};
use crate::ingest::IndicatorSeries;
use crate::period::{Frequency, Period, YearMonth};
use crate::scalar::format_scalar;

/// Fewest aligned observations for a defined correlation.
pub const MIN_ALIGNED: usize = 3;
pub const UNDEFINED: &str = "NA";
pub const DEFAULT_BASE_YEAR: i32 = 2015;

/// Monthly (or annual) value, count and average-value totals of the payment system.
#[derive(Debug, Clone, PartialEq)]
pub struct PaymentTotals {
    pub value: IndicatorSeries,
    pub count: IndicatorSeries,
    /// `value / count`; periods with zero count are absent.
    pub avg: IndicatorSeries,
}

impl PaymentTotals {
    fn from_sums(frequency: Frequency, sums: &BTreeMap<Period, (f64, f64)>) -> Result<Self> {
        let value = sums.iter().map(|(&p, &(v, _))| (p, v)).collect();
        let count = sums.iter().map(|(&p, &(_, c))| (p, c)).collect();
        let avg = sums.iter().filter(|(_, (_, c))| *c > 0.0).map(|(&p, &(v, c))| (p, v / c)).collect();
        Ok(PaymentTotals {
            value: IndicatorSeries::new("value", frequency, value)?,
            count: IndicatorSeries::new("count", frequency, count)?,
            avg: IndicatorSeries::new("avg", frequency, avg)?,
        })
    }

    pub fn frequency(&self) -> Frequency {
        self.value.frequency
    }

    fn series(&self, measure: Measure) -> &IndicatorSeries {
        match measure {
            Measure::Value => &self.value,
            Measure::Count => &self.count,
            Measure::Avg => &self.avg,
        }
    }
}

/// Totals over all cells of one Value and one Count matrix per month.
pub fn monthly_totals(matrices: &[FlowMatrix]) -> Result<PaymentTotals> {
    let mut by_month: BTreeMap<YearMonth, (Option<f64>, Option<f64>)> = BTreeMap::new();
    for m in matrices {
        let span = m.span();
        if !span.is_single_month() {
            return Err(Error::Usage(format!("monthly totals need single-month matrices, got span {span}")));
        }
        let slot = by_month.entry(span.start).or_default();
        let target = match m.weight_kind() {
            WeightKind::Value => &mut slot.0,
            WeightKind::Count => &mut slot.1,
        };
        if target.replace(m.total()).is_some() {
            return Err(Error::Usage(format!("more than one {} matrix for {}", m.weight_kind(), span.start)));
        }
    }
    let mut sums = BTreeMap::new();
    for (month, slot) in by_month {
        match slot {
            (Some(v), Some(c)) => {
                sums.insert(Period::Month(month), (v, c));
            }
            _ => return Err(Error::Usage(format!("{month} lacks a matching value or count matrix"))),
        }
    }
    PaymentTotals::from_sums(Frequency::Monthly, &sums)
}

/// Annual totals over calendar years with all twelve months observed.
pub fn annual_totals(monthly: &PaymentTotals) -> Result<PaymentTotals> {
    if monthly.frequency() != Frequency::Monthly {
        return Err(Error::Usage("annual totals need monthly input".into()));
    }
    let mut acc: BTreeMap<i32, (f64, f64, usize)> = BTreeMap::new();
    for (&(p, v), &(_, c)) in monthly.value.points().iter().zip(monthly.count.points()) {
        let e = acc.entry(p.year()).or_default();
        e.0 += v;
        e.1 += c;
        e.2 += 1;
    }
    let sums = acc.into_iter().filter(|(_, e)| e.2 == 12).map(|(y, (v, c, _))| (Period::Year(y), (v, c))).collect();
    PaymentTotals::from_sums(Frequency::Annual, &sums)
}

/// March 2020 through December 2022 for monthly data; 2020-2022 for annual data.
pub fn in_covid_window(p: Period) -> bool {
    match p {
        Period::Month(m) => (m.year(), m.month()) >= (2020, 3) && m.year() <= 2022,
        Period::Year(y) => (2020..=2022).contains(&y),
    }
}

pub fn covid_mask(series: &IndicatorSeries) -> IndicatorSeries {
    filtered(series, |p| !in_covid_window(p))
}

fn filtered(series: &IndicatorSeries, keep: impl Fn(Period) -> bool) -> IndicatorSeries {
    let points = series.points().iter().copied().filter(|&(p, _)| keep(p)).collect();
    IndicatorSeries::new(series.name.clone(), series.frequency, points)
        .expect("a subsequence of a valid series is valid")
        .with_adjustment(series.adjusted)
}

/// Index to `100 * x / mean(base-year points)`; the mean uses whatever base-year periods are present.
pub fn rebase_index(series: &IndicatorSeries, base_year: i32) -> Result<IndicatorSeries> {
    let base: Vec<f64> = series.points().iter().filter(|(p, _)| p.year() == base_year).map(|&(_, v)| v).collect();
    if base.is_empty() {
        return Err(Error::Usage(format!("{} has no observations in {base_year}", series.name)));
    }
    let mean = base.iter().sum::<f64>() / base.len() as f64;
    if mean == 0.0 {
        return Err(Error::Usage(format!("{} has a zero {base_year} mean", series.name)));
    }
    let points = series.points().iter().map(|&(p, v)| (p, v / mean * 100.0)).collect();
    Ok(IndicatorSeries::new(series.name.clone(), series.frequency, points)?.with_adjustment(series.adjusted))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Measure {
    Value,
    Count,
    Avg,
}

/// Row of the benchmark table: payment series frequency and measure.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SeriesBasis {
    pub frequency: Frequency,
    pub measure: Measure,
}

impl SeriesBasis {
    pub const ALL: [SeriesBasis; 6] = [
        SeriesBasis { frequency: Frequency::Annual, measure: Measure::Value },
        SeriesBasis { frequency: Frequency::Monthly, measure: Measure::Value },
        SeriesBasis { frequency: Frequency::Annual, measure: Measure::Count },
        SeriesBasis { frequency: Frequency::Monthly, measure: Measure::Count },
        SeriesBasis { frequency: Frequency::Annual, measure: Measure::Avg },
        SeriesBasis { frequency: Frequency::Monthly, measure: Measure::Avg },
    ];
}

impl fmt::Display for SeriesBasis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let freq = match self.frequency {
            Frequency::Annual => "Yearly",
            Frequency::Monthly => "Monthly",
        };
        let measure = match self.measure {
            Measure::Value => "value",
            Measure::Count => "count",
            Measure::Avg => "avg",
        };
        write!(f, "{freq} ({measure})")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkRow {
    pub basis: SeriesBasis,
    pub mode: AggregateMode,
    /// One Pearson coefficient per indicator column; `None` is undefined.
    pub cells: Vec<Option<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkTable {
    pub columns: Vec<String>,
    pub rows: Vec<BenchmarkRow>,
    pub covid_excluded: bool,
    /// Annual payment value as a ratio of each indicator's annual total.
    pub share_row: Option<(i32, Vec<Option<f64>>)>,
}

impl BenchmarkTable {
    pub fn cell(&self, basis: SeriesBasis, mode: AggregateMode, column: &str) -> Option<f64> {
        let c = self.columns.iter().position(|n| n == column)?;
        self.rows.iter().find(|r| r.basis == basis && r.mode == mode)?.cells[c]
    }

    pub fn write_csv<W: Write>(&self, mut w: W, digits: Option<usize>) -> Result<()> {
        let fmt_cell = |c: &Option<f64>| c.map_or_else(|| UNDEFINED.to_string(), |v| format_scalar(v, digits));
        writeln!(w, "panel,series,{}", self.columns.join(","))?;
        if let Some((year, cells)) = &self.share_row {
            let cells: Vec<String> = cells.iter().map(fmt_cell).collect();
            writeln!(w, "share,Share in {year},{}", cells.join(","))?;
        }
        for row in &self.rows {
            let panel = match row.mode {
                AggregateMode::Levels => "levels",
                AggregateMode::GrowthRates => "growth",
            };
            let cells: Vec<String> = row.cells.iter().map(fmt_cell).collect();
            writeln!(w, "{panel},{},{}", row.basis, cells.join(","))?;
        }
        Ok(())
    }
}

/// Pearson correlation after optional Covid masking, inner-join alignment and,
/// for growth rates, year-over-year ratios on the aligned dates.
pub fn aligned_correlation(
    a: &IndicatorSeries,
    b: &IndicatorSeries,
    covid_excluded: bool,
    mode: AggregateMode,
) -> Option<f64> {
    if a.frequency != b.frequency {
        return None;
    }
    let keep = |p: Period| !covid_excluded || !in_covid_window(p);
    let bs: BTreeMap<Period, f64> = b.points().iter().copied().filter(|&(p, _)| keep(p)).collect();
    let (mut xa, mut xb) = (Vec::new(), Vec::new());
    for &(p, v) in a.points().iter().filter(|&&(p, _)| keep(p)) {
        if let Some(&w) = bs.get(&p) {
            xa.push((p, v));
            xb.push((p, w));
        }
    }
    let (ya, yb): (Vec<f64>, Vec<f64>) = match mode {
        AggregateMode::Levels => (xa.iter().map(|x| x.1).collect(), xb.iter().map(|x| x.1).collect()),
        AggregateMode::GrowthRates => {
            let ga = growth_rates(&xa);
            let gb: BTreeMap<Period, f64> = growth_rates(&xb).into_iter().collect();
            ga.iter().filter_map(|(p, g)| Some((*g, *gb.get(p)?))).unzip()
        }
    };
    if ya.len() < MIN_ALIGNED {
        return None;
    }
    pearson(&ya, &yb).ok().flatten()
}

/// Correlation table of the payment totals (all six bases, each requested mode)
/// against every indicator. Indicators whose frequency differs from a row's are undefined there.
pub fn benchmark_correlations(
    monthly: &PaymentTotals,
    indicators: &[IndicatorSeries],
    covid_excluded: bool,
    modes: &[AggregateMode],
) -> Result<BenchmarkTable> {
    let annual = annual_totals(monthly)?;
    let mut rows = Vec::new();
    for &mode in modes {
        for basis in SeriesBasis::ALL {
            let totals = match basis.frequency {
                Frequency::Monthly => monthly,
                Frequency::Annual => &annual,
            };
            let series = totals.series(basis.measure);
            let cells = indicators.iter().map(|ind| aligned_correlation(series, ind, covid_excluded, mode)).collect();
            rows.push(BenchmarkRow { basis, mode, cells });
        }
    }
    Ok(BenchmarkTable {
        columns: indicators.iter().map(|i| i.name.clone()).collect(),
        rows,
        covid_excluded,
        share_row: None,
    })
}

/// Annual payment value over each indicator's total for `year`; monthly
/// indicators need all twelve months.
pub fn share_in_year(monthly: &PaymentTotals, indicators: &[IndicatorSeries], year: i32) -> Result<Vec<Option<f64>>> {
    let annual = annual_totals(monthly)?;
    let Some(payments) = annual.value.value_at(Period::Year(year)) else {
        return Ok(vec![None; indicators.len()]);
    };
    Ok(indicators
        .iter()
        .map(|ind| {
            let in_year: Vec<f64> = ind.points().iter().filter(|(p, _)| p.year() == year).map(|x| x.1).collect();
            let complete = match ind.frequency {
                Frequency::Annual => in_year.len() == 1,
                Frequency::Monthly => in_year.len() == 12,
            };
            let total: f64 = in_year.iter().sum();
            (complete && total != 0.0).then(|| payments / total)
        })
        .collect())
}
