//! Year-indexed annual series and the arithmetic shared by every analysis
//! module: normalization, compound growth, cumulative integration, smoothing.

use std::fmt;
use std::ops::Deref;
use std::str::FromStr;

use thiserror::Error;

/// Calendar year.
pub type Year = i32;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SeriesError {
    #[error("series is empty")]
    Empty,
    #[error("non-finite value {value} at year {year}")]
    NonFinite { year: Year, value: f64 },
    #[error("value {value} at year {year} must be strictly positive for unit {unit}")]
    NonPositive { year: Year, value: f64, unit: Unit },
    #[error("year {year} outside series range {start}..={end}")]
    YearOutOfRange { year: Year, start: Year, end: Year },
    #[error("invalid period {from}..{to}: start must precede end")]
    InvalidPeriod { from: Year, to: Year },
    #[error("invalid moving-average window {window} for series of length {len} (must be odd, >= 1, <= length)")]
    InvalidWindow { window: usize, len: usize },
    #[error("series needs at least {min} values, got {len}")]
    TooShort { len: usize, min: usize },
    #[error("series do not overlap")]
    NoOverlap,
}

/// Physical unit carried by a series.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Unit {
    EjPerYear,
    TrillionUsd2011Ppp,
    Persons,
    Dimensionless,
    MjPerKg,
    GtPerYear,
    /// Energy intensity of GDP.
    EjPerTrillionUsd,
    /// Per-capita energy flow.
    GjPerPersonYear,
}

impl Unit {
    pub const ALL: [Unit; 8] = [
        Unit::EjPerYear,
        Unit::TrillionUsd2011Ppp,
        Unit::Persons,
        Unit::Dimensionless,
        Unit::MjPerKg,
        Unit::GtPerYear,
        Unit::EjPerTrillionUsd,
        Unit::GjPerPersonYear,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Unit::EjPerYear => "EJ_per_year",
            Unit::TrillionUsd2011Ppp => "trillion_USD2011_PPP",
            Unit::Persons => "persons",
            Unit::Dimensionless => "dimensionless",
            Unit::MjPerKg => "MJ_per_kg",
            Unit::GtPerYear => "Gt_per_year",
            Unit::EjPerTrillionUsd => "EJ_per_trillion_USD",
            Unit::GjPerPersonYear => "GJ_per_person_year",
        }
    }

    /// Stocks and flows of these units are physically positive; a zero or
    /// negative value is a data error.
    pub fn requires_positive(self) -> bool {
        matches!(
            self,
            Unit::EjPerYear | Unit::TrillionUsd2011Ppp | Unit::Persons
        )
    }
}

impl fmt::Display for Unit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Unit {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Unit::ALL
            .into_iter()
            .find(|u| u.as_str() == s)
            .ok_or_else(|| format!("unknown unit `{s}`"))
    }
}

/// Annual series over consecutive calendar years.
///
/// Invariants: non-empty, every value finite, and strictly positive when the
/// unit is a positive quantity (see [`Unit::requires_positive`]).
#[derive(Debug, Clone, PartialEq)]
pub struct AnnualSeries {
    start_year: Year,
    values: Vec<f64>,
    unit: Unit,
}

impl AnnualSeries {
    pub fn new(start_year: Year, values: Vec<f64>, unit: Unit) -> Result<Self, SeriesError> {
        if values.is_empty() {
            return Err(SeriesError::Empty);
        }
        for (i, &value) in values.iter().enumerate() {
            let year = start_year + i as Year;
            if !value.is_finite() {
                return Err(SeriesError::NonFinite { year, value });
            }
            if unit.requires_positive() && value <= 0.0 {
                return Err(SeriesError::NonPositive { year, value, unit });
            }
        }
        Ok(Self {
            start_year,
            values,
            unit,
        })
    }

    /// Builds a series from a closure evaluated on every year of `start..=end`.
    pub fn from_fn(
        start: Year,
        end: Year,
        unit: Unit,
        f: impl FnMut(Year) -> f64,
    ) -> Result<Self, SeriesError> {
        Self::new(start, (start..=end).map(f).collect(), unit)
    }

    pub fn start_year(&self) -> Year {
        self.start_year
    }

    pub fn end_year(&self) -> Year {
        self.start_year + self.values.len() as Year - 1
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    /// Always `false` for a constructed series.
    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn unit(&self) -> Unit {
        self.unit
    }

    pub fn contains(&self, year: Year) -> bool {
        year >= self.start_year && year <= self.end_year()
    }

    pub fn get(&self, year: Year) -> Option<f64> {
        self.contains(year)
            .then(|| self.values[(year - self.start_year) as usize])
    }

    pub fn value_at(&self, year: Year) -> Result<f64, SeriesError> {
        self.get(year).ok_or(SeriesError::YearOutOfRange {
            year,
            start: self.start_year,
            end: self.end_year(),
        })
    }

    pub fn years(&self) -> impl Iterator<Item = Year> + '_ {
        self.start_year..=self.end_year()
    }

    /// `(year, value)` pairs in order.
    pub fn iter(&self) -> impl Iterator<Item = (Year, f64)> + '_ {
        self.values
            .iter()
            .enumerate()
            .map(move |(i, &v)| (self.start_year + i as Year, v))
    }

    /// Restriction to `from..=to`.
    pub fn slice(&self, from: Year, to: Year) -> Result<Self, SeriesError> {
        if from > to {
            return Err(SeriesError::InvalidPeriod { from, to });
        }
        self.value_at(from)?;
        self.value_at(to)?;
        let lo = (from - self.start_year) as usize;
        let hi = (to - self.start_year) as usize;
        Ok(Self {
            start_year: from,
            values: self.values[lo..=hi].to_vec(),
            unit: self.unit,
        })
    }

    /// Same values under a different unit tag, re-validated.
    pub fn with_unit(&self, unit: Unit) -> Result<Self, SeriesError> {
        Self::new(self.start_year, self.values.clone(), unit)
    }

    /// Element-wise map, re-validated under `unit`.
    pub fn map(&self, unit: Unit, f: impl Fn(f64) -> f64) -> Result<Self, SeriesError> {
        Self::new(
            self.start_year,
            self.values.iter().map(|&v| f(v)).collect(),
            unit,
        )
    }
}

/// Inclusive common year span of two series.
pub fn overlap(a: &AnnualSeries, b: &AnnualSeries) -> Option<(Year, Year)> {
    let start = a.start_year().max(b.start_year());
    let end = a.end_year().min(b.end_year());
    (start <= end).then_some((start, end))
}

/// Combines two series year by year over their overlap.
pub fn zip_with(
    a: &AnnualSeries,
    b: &AnnualSeries,
    unit: Unit,
    f: impl Fn(f64, f64) -> f64,
) -> Result<AnnualSeries, SeriesError> {
    let (start, end) = overlap(a, b).ok_or(SeriesError::NoOverlap)?;
    AnnualSeries::from_fn(start, end, unit, |y| {
        f(a.get(y).expect("in overlap"), b.get(y).expect("in overlap"))
    })
}

/// A dimensionless series equal to exactly 1 at its base year.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedSeries {
    base_year: Year,
    series: AnnualSeries,
}

impl NormalizedSeries {
    pub fn base_year(&self) -> Year {
        self.base_year
    }

    pub fn as_series(&self) -> &AnnualSeries {
        &self.series
    }

    pub fn into_series(self) -> AnnualSeries {
        self.series
    }

    /// Wraps a dimensionless series whose base-year value is already 1.
    pub(crate) fn from_parts(base_year: Year, series: AnnualSeries) -> Self {
        debug_assert_eq!(series.get(base_year), Some(1.0));
        Self { base_year, series }
    }
}

impl Deref for NormalizedSeries {
    type Target = AnnualSeries;

    fn deref(&self) -> &AnnualSeries {
        &self.series
    }
}

/// Divides every value by the value at `base_year`.
pub fn normalize(series: &AnnualSeries, base_year: Year) -> Result<NormalizedSeries, SeriesError> {
    let base = series.value_at(base_year)?;
    if base <= 0.0 {
        return Err(SeriesError::NonPositive {
            year: base_year,
            value: base,
            unit: series.unit(),
        });
    }
    let mut values: Vec<f64> = series.values().iter().map(|v| v / base).collect();
    // x / x is 1 in IEEE arithmetic, but pin it anyway.
    values[(base_year - series.start_year()) as usize] = 1.0;
    let series = AnnualSeries::new(series.start_year(), values, Unit::Dimensionless)?;
    Ok(NormalizedSeries { base_year, series })
}

/// Geometric compound annual growth rate between two years.
pub fn cagr(series: &AnnualSeries, from: Year, to: Year) -> Result<f64, SeriesError> {
    if from >= to {
        return Err(SeriesError::InvalidPeriod { from, to });
    }
    let start = series.value_at(from)?;
    let end = series.value_at(to)?;
    for (year, value) in [(from, start), (to, end)] {
        if value <= 0.0 {
            return Err(SeriesError::NonPositive {
                year,
                value,
                unit: series.unit(),
            });
        }
    }
    Ok((end / start).powf(1.0 / f64::from(to - from)) - 1.0)
}

/// Running trapezoid integral with a one-year step, zero at the first year.
///
/// The integrand is expected to be dimensionless (a normalized flow), so the
/// result is tagged dimensionless and reads in "base-year flow × years".
pub fn cumulative_integral(series: &AnnualSeries) -> AnnualSeries {
    let mut acc = 0.0;
    let mut out = Vec::with_capacity(series.len());
    out.push(0.0);
    for w in series.values().windows(2) {
        acc += 0.5 * (w[0] + w[1]);
        out.push(acc);
    }
    AnnualSeries::new(series.start_year(), out, Unit::Dimensionless)
        .expect("integral of finite values is finite")
}

/// Centered moving average; near the edges the window shrinks to the years
/// that exist.
pub fn moving_average(series: &AnnualSeries, window: usize) -> Result<AnnualSeries, SeriesError> {
    let n = series.len();
    if window == 0 || window.is_multiple_of(2) || window > n {
        return Err(SeriesError::InvalidWindow { window, len: n });
    }
    let half = window / 2;
    let v = series.values();
    let out = (0..n)
        .map(|i| {
            let lo = i.saturating_sub(half);
            let hi = (i + half).min(n - 1);
            v[lo..=hi].iter().sum::<f64>() / (hi - lo + 1) as f64
        })
        .collect();
    AnnualSeries::new(series.start_year(), out, series.unit())
}

/// Year-over-year relative change `x[y] / x[y-1] - 1`, one year shorter than
/// the input and starting at its second year.
pub fn log_growth(series: &AnnualSeries) -> Result<AnnualSeries, SeriesError> {
    if series.len() < 2 {
        return Err(SeriesError::TooShort {
            len: series.len(),
            min: 2,
        });
    }
    if let Some((year, value)) = series.iter().find(|&(_, v)| v <= 0.0) {
        return Err(SeriesError::NonPositive {
            year,
            value,
            unit: series.unit(),
        });
    }
    let out = series
        .values()
        .windows(2)
        .map(|w| w[1] / w[0] - 1.0)
        .collect();
    AnnualSeries::new(series.start_year() + 1, out, Unit::Dimensionless)
}
