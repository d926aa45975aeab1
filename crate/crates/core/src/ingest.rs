//! Reading, validating and reshaping the historical input tables: primary
//! energy by source, GDP, population and biomass mass.
//!
//! Tables are comma-separated with a header row. Ingestion is strict: a
//! missing year, a non-numeric cell or a negative energy value is an error
//! reported with its line and column, never silently patched. Filling sparse
//! decennial data is a separate, explicit step ([`interpolate_decennial`]).

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use serde::Deserialize;
use thiserror::Error;

use crate::series::{overlap, zip_with, AnnualSeries, SeriesError, Unit, Year};

/// Exajoules in one terawatt-year (Julian year of 365.25 days).
///
/// Charts often round this to 31.6.
pub const EJ_PER_TW_YEAR: f64 = 31.5576;

/// Gigajoules per exajoule, for per-capita figures.
const GJ_PER_EJ: f64 = 1e9;

/// Span every dataset must cover in all of its tables.
pub const REQUIRED_SPAN: (Year, Year) = (1820, 1920);

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{}: {} problem(s), first: {}", .path.display(), .issues.len(), .issues[0])]
    Table {
        path: PathBuf,
        issues: Vec<TableIssue>,
    },
    #[error("invalid manifest {path}: {message}")]
    Manifest { path: PathBuf, message: String },
    #[error("dataset is inconsistent: {0}")]
    Dataset(String),
    #[error("relative humidity {0}% outside the supported range [10, 50]")]
    HumidityOutOfRange(f64),
    #[error("rescale factor must be positive and finite, got {0}")]
    InvalidFactor(f64),
    #[error("interpolation anchors: {0}")]
    Anchors(String),
    #[error("energy breakdown: {0}")]
    Breakdown(String),
    #[error("no fuelwood mass table in the dataset")]
    NoBiomassMass,
    #[error(transparent)]
    Series(#[from] SeriesError),
}

/// One problem found while reading a table. Lines count from 1 with the header
/// on line 1.
#[derive(Debug, Clone, PartialEq)]
pub enum TableIssue {
    EmptyTable,
    MissingColumn {
        column: String,
    },
    UnexpectedColumn {
        column: String,
    },
    Malformed {
        line: u64,
        message: String,
    },
    NonNumeric {
        line: u64,
        column: String,
        text: String,
    },
    NonFinite {
        line: u64,
        column: String,
    },
    Negative {
        line: u64,
        column: String,
        value: f64,
    },
    NonPositive {
        line: u64,
        column: String,
        value: f64,
    },
    GapYear {
        line: u64,
        missing_year: Year,
    },
    YearNotIncreasing {
        line: u64,
        year: Year,
    },
}

impl fmt::Display for TableIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TableIssue::EmptyTable => write!(f, "table has no data rows"),
            TableIssue::MissingColumn { column } => write!(f, "missing column `{column}`"),
            TableIssue::UnexpectedColumn { column } => write!(f, "unexpected column `{column}`"),
            TableIssue::Malformed { line, message } => write!(f, "line {line}: {message}"),
            TableIssue::NonNumeric { line, column, text } => {
                write!(
                    f,
                    "line {line}, column `{column}`: non-numeric value `{text}`"
                )
            }
            TableIssue::NonFinite { line, column } => {
                write!(f, "line {line}, column `{column}`: non-finite value")
            }
            TableIssue::Negative {
                line,
                column,
                value,
            } => {
                write!(f, "line {line}, column `{column}`: negative value {value}")
            }
            TableIssue::NonPositive {
                line,
                column,
                value,
            } => {
                write!(
                    f,
                    "line {line}, column `{column}`: value {value} must be positive"
                )
            }
            TableIssue::GapYear { line, missing_year } => {
                write!(f, "line {line}: gap in years, {missing_year} is missing")
            }
            TableIssue::YearNotIncreasing { line, year } => {
                write!(
                    f,
                    "line {line}: year {year} does not follow the previous row"
                )
            }
        }
    }
}

/// The eight primary-energy source categories, traditional ones first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum EnergyCategory {
    Food,
    Fuelwood,
    Fodder,
    Coal,
    Oil,
    NaturalGas,
    RenewableElectricity,
    Nuclear,
}

impl EnergyCategory {
    pub const ALL: [EnergyCategory; 8] = [
        EnergyCategory::Food,
        EnergyCategory::Fuelwood,
        EnergyCategory::Fodder,
        EnergyCategory::Coal,
        EnergyCategory::Oil,
        EnergyCategory::NaturalGas,
        EnergyCategory::RenewableElectricity,
        EnergyCategory::Nuclear,
    ];

    /// Column name in the breakdown table.
    pub fn column(self) -> &'static str {
        match self {
            EnergyCategory::Food => "food",
            EnergyCategory::Fuelwood => "fuelwood",
            EnergyCategory::Fodder => "fodder",
            EnergyCategory::Coal => "coal",
            EnergyCategory::Oil => "oil",
            EnergyCategory::NaturalGas => "natural_gas",
            EnergyCategory::RenewableElectricity => "renewable_electricity",
            EnergyCategory::Nuclear => "nuclear",
        }
    }

    /// Fossil, hydro/wind/solar electricity and nuclear; everything except
    /// food, fuelwood and fodder.
    pub fn is_modern(self) -> bool {
        !matches!(
            self,
            EnergyCategory::Food | EnergyCategory::Fuelwood | EnergyCategory::Fodder
        )
    }

    fn index(self) -> usize {
        self as usize
    }
}

/// Which categories [`aggregate_pec`] sums.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scope {
    All,
    ModernOnly,
    TraditionalOnly,
}

/// Primary energy by source, one non-negative EJ/yr column per category over a
/// shared span of consecutive years.
///
/// Columns are stored raw rather than as [`AnnualSeries`] because individual
/// sources are legitimately zero before they appear (oil in 1820, nuclear
/// before the 1950s), while an `EJ_per_year` series must be strictly positive.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyBreakdown {
    start_year: Year,
    columns: [Vec<f64>; 8],
}

impl EnergyBreakdown {
    pub fn new(start_year: Year, columns: [Vec<f64>; 8]) -> Result<Self, IngestError> {
        let len = columns[0].len();
        if len == 0 {
            return Err(IngestError::Breakdown("no years".into()));
        }
        for (cat, col) in EnergyCategory::ALL.iter().zip(&columns) {
            if col.len() != len {
                return Err(IngestError::Breakdown(format!(
                    "column `{}` has {} values, expected {len}",
                    cat.column(),
                    col.len()
                )));
            }
            if let Some((i, v)) = col
                .iter()
                .enumerate()
                .find(|(_, v)| !v.is_finite() || **v < 0.0)
            {
                return Err(IngestError::Breakdown(format!(
                    "column `{}` year {}: invalid value {v}",
                    cat.column(),
                    start_year + i as Year
                )));
            }
        }
        Ok(Self {
            start_year,
            columns,
        })
    }

    pub fn start_year(&self) -> Year {
        self.start_year
    }

    pub fn end_year(&self) -> Year {
        self.start_year + self.len() as Year - 1
    }

    pub fn len(&self) -> usize {
        self.columns[0].len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn category(&self, cat: EnergyCategory) -> &[f64] {
        &self.columns[cat.index()]
    }

    /// Copy with one category column replaced.
    pub fn with_category(
        &self,
        cat: EnergyCategory,
        values: Vec<f64>,
    ) -> Result<Self, IngestError> {
        let mut columns = self.columns.clone();
        columns[cat.index()] = values;
        Self::new(self.start_year, columns)
    }

    /// The eight values of one year, in category order.
    pub fn row(&self, year: Year) -> Option<[f64; 8]> {
        if year < self.start_year || year > self.end_year() {
            return None;
        }
        let i = (year - self.start_year) as usize;
        Some(std::array::from_fn(|c| self.columns[c][i]))
    }
}

/// Per-year sum over the categories selected by `scope`.
///
/// `All` is computed as traditional plus modern so that the partition identity
/// holds bit for bit. Fails only if some year sums to zero, which cannot be
/// represented as a positive energy flow.
pub fn aggregate_pec(
    breakdown: &EnergyBreakdown,
    scope: Scope,
) -> Result<AnnualSeries, IngestError> {
    let sum_of = |modern: bool, i: usize| -> f64 {
        EnergyCategory::ALL
            .iter()
            .filter(|c| c.is_modern() == modern)
            .map(|c| breakdown.category(*c)[i])
            .sum()
    };
    let values = (0..breakdown.len())
        .map(|i| match scope {
            Scope::TraditionalOnly => sum_of(false, i),
            Scope::ModernOnly => sum_of(true, i),
            Scope::All => sum_of(false, i) + sum_of(true, i),
        })
        .collect();
    Ok(AnnualSeries::new(
        breakdown.start_year(),
        values,
        Unit::EjPerYear,
    )?)
}

/// Layout of an input table.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Schema {
    /// `year,food,fuelwood,fodder,coal,oil,natural_gas,renewable_electricity,nuclear`
    PecBreakdown,
    /// `year,value`, tagged with the given unit.
    SingleSeries(Unit),
    /// `year,mass_gt`
    BiomassMass,
}

impl Schema {
    fn value_columns(self) -> Vec<&'static str> {
        match self {
            Schema::PecBreakdown => EnergyCategory::ALL.iter().map(|c| c.column()).collect(),
            Schema::SingleSeries(_) => vec!["value"],
            Schema::BiomassMass => vec!["mass_gt"],
        }
    }

    fn unit(self) -> Unit {
        match self {
            Schema::PecBreakdown => Unit::EjPerYear,
            Schema::SingleSeries(u) => u,
            Schema::BiomassMass => Unit::GtPerYear,
        }
    }
}

/// A parsed table.
#[derive(Debug, Clone, PartialEq)]
pub enum Table {
    Breakdown(EnergyBreakdown),
    Series(AnnualSeries),
}

/// Parses a table file according to `schema`.
pub fn parse_table(path: &Path, schema: Schema) -> Result<Table, IngestError> {
    let file = fs::File::open(path).map_err(|source| IngestError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_table_from_reader(file, schema).map_err(|e| match e {
        IngestError::Table { issues, .. } => IngestError::Table {
            path: path.to_path_buf(),
            issues,
        },
        other => other,
    })
}

/// Same as [`parse_table`] over any reader; errors name the source `<input>`.
pub fn parse_table_from_reader<R: Read>(reader: R, schema: Schema) -> Result<Table, IngestError> {
    let (start, columns) = read_columns(reader, schema).map_err(|issues| IngestError::Table {
        path: PathBuf::from("<input>"),
        issues,
    })?;
    match schema {
        Schema::PecBreakdown => {
            let cols: [Vec<f64>; 8] = columns
                .try_into()
                .expect("breakdown schema has eight value columns");
            Ok(Table::Breakdown(EnergyBreakdown::new(start, cols)?))
        }
        Schema::SingleSeries(_) | Schema::BiomassMass => {
            let values = columns.into_iter().next().expect("one value column");
            Ok(Table::Series(AnnualSeries::new(
                start,
                values,
                schema.unit(),
            )?))
        }
    }
}

pub fn parse_breakdown(path: &Path) -> Result<EnergyBreakdown, IngestError> {
    match parse_table(path, Schema::PecBreakdown)? {
        Table::Breakdown(b) => Ok(b),
        Table::Series(_) => unreachable!("breakdown schema yields a breakdown"),
    }
}

pub fn parse_series(path: &Path, schema: Schema) -> Result<AnnualSeries, IngestError> {
    match parse_table(path, schema)? {
        Table::Series(s) => Ok(s),
        Table::Breakdown(_) => unreachable!("single-column schema yields a series"),
    }
}

/// Reads every row, collecting all problems instead of stopping at the first.
fn read_columns<R: Read>(
    reader: R,
    schema: Schema,
) -> Result<(Year, Vec<Vec<f64>>), Vec<TableIssue>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(reader);
    let mut issues = Vec::new();

    let header: Vec<String> = match rdr.headers() {
        Ok(h) => h.iter().map(str::to_owned).collect(),
        Err(e) => {
            return Err(vec![TableIssue::Malformed {
                line: 1,
                message: e.to_string(),
            }])
        }
    };
    let wanted = schema.value_columns();
    if header.first().map(String::as_str) != Some("year") {
        issues.push(TableIssue::MissingColumn {
            column: "year".into(),
        });
    }
    let mut positions = Vec::with_capacity(wanted.len());
    for name in &wanted {
        match header.iter().position(|h| h == name) {
            Some(p) => positions.push(p),
            None => issues.push(TableIssue::MissingColumn {
                column: (*name).into(),
            }),
        }
    }
    for h in header.iter().skip(1) {
        if !wanted.contains(&h.as_str()) {
            issues.push(TableIssue::UnexpectedColumn { column: h.clone() });
        }
    }
    if !issues.is_empty() {
        return Err(issues);
    }

    let unit = schema.unit();
    let mut start: Option<Year> = None;
    let mut prev: Option<Year> = None;
    let mut columns: Vec<Vec<f64>> = vec![Vec::new(); wanted.len()];
    for (i, record) in rdr.records().enumerate() {
        let fallback_line = i as u64 + 2;
        let record = match record {
            Ok(r) => r,
            Err(e) => {
                issues.push(TableIssue::Malformed {
                    line: fallback_line,
                    message: e.to_string(),
                });
                continue;
            }
        };
        let line = record.position().map_or(fallback_line, |p| p.line());
        if record.len() != header.len() {
            issues.push(TableIssue::Malformed {
                line,
                message: format!("expected {} fields, found {}", header.len(), record.len()),
            });
            continue;
        }
        let year_text = &record[0];
        let year: Year = match year_text.parse() {
            Ok(y) => y,
            Err(_) => {
                issues.push(TableIssue::NonNumeric {
                    line,
                    column: "year".into(),
                    text: year_text.into(),
                });
                continue;
            }
        };
        if let Some(p) = prev {
            if year <= p {
                issues.push(TableIssue::YearNotIncreasing { line, year });
                continue;
            }
            if year > p + 1 {
                issues.push(TableIssue::GapYear {
                    line,
                    missing_year: p + 1,
                });
            }
        }
        start.get_or_insert(year);
        prev = Some(year);

        for (col, (&pos, name)) in positions.iter().zip(&wanted).enumerate() {
            let text = &record[pos];
            let value = match text.parse::<f64>() {
                Ok(v) if v.is_finite() => v,
                Ok(_) => {
                    issues.push(TableIssue::NonFinite {
                        line,
                        column: (*name).into(),
                    });
                    continue;
                }
                Err(_) => {
                    issues.push(TableIssue::NonNumeric {
                        line,
                        column: (*name).into(),
                        text: text.into(),
                    });
                    continue;
                }
            };
            if value < 0.0 {
                issues.push(TableIssue::Negative {
                    line,
                    column: (*name).into(),
                    value,
                });
            } else if value == 0.0 && unit.requires_positive() && schema != Schema::PecBreakdown {
                issues.push(TableIssue::NonPositive {
                    line,
                    column: (*name).into(),
                    value,
                });
            }
            columns[col].push(value);
        }
    }
    if !issues.is_empty() {
        return Err(issues);
    }
    start
        .map(|s| (s, columns))
        .ok_or_else(|| vec![TableIssue::EmptyTable])
}

/// Writes a breakdown in the `PecBreakdown` layout with round-trip floats.
pub fn write_breakdown<W: Write>(breakdown: &EnergyBreakdown, writer: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec!["year"];
    header.extend(EnergyCategory::ALL.iter().map(|c| c.column()));
    w.write_record(&header)?;
    for (i, year) in (breakdown.start_year()..=breakdown.end_year()).enumerate() {
        let mut rec = vec![year.to_string()];
        rec.extend(
            EnergyCategory::ALL
                .iter()
                .map(|c| breakdown.category(*c)[i].to_string()),
        );
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// Writes a two-column table; `value_column` is `value` or `mass_gt`.
pub fn write_series<W: Write>(
    series: &AnnualSeries,
    value_column: &str,
    writer: W,
) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["year", value_column])?;
    for (year, v) in series.iter() {
        w.write_record([year.to_string(), v.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// Annual series through sparse anchors, geometric between neighbours.
pub fn interpolate_decennial(
    anchors: &[(Year, f64)],
    unit: Unit,
) -> Result<AnnualSeries, IngestError> {
    if anchors.len() < 2 {
        return Err(IngestError::Anchors("need at least two anchors".into()));
    }
    for w in anchors.windows(2) {
        if w[1].0 <= w[0].0 {
            return Err(IngestError::Anchors(format!(
                "years must be strictly increasing ({} then {})",
                w[0].0, w[1].0
            )));
        }
    }
    if let Some(&(year, v)) = anchors.iter().find(|(_, v)| !(v.is_finite() && *v > 0.0)) {
        return Err(IngestError::Anchors(format!(
            "value {v} at {year} must be positive"
        )));
    }
    let mut values = Vec::new();
    for w in anchors.windows(2) {
        let (y0, v0) = w[0];
        let (y1, v1) = w[1];
        let span = f64::from(y1 - y0);
        let log_ratio = (v1 / v0).ln();
        for y in y0..y1 {
            values.push(v0 * (log_ratio * f64::from(y - y0) / span).exp());
        }
    }
    values.push(anchors[anchors.len() - 1].1);
    Ok(AnnualSeries::new(anchors[0].0, values, unit)?)
}

/// Lower heating value of wood at a given relative humidity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HumidityConversion {
    relative_humidity: f64,
    lhv: f64,
}

impl HumidityConversion {
    /// (relative humidity %, LHV MJ/kg) anchors of the conversion curve.
    pub const ANCHORS: [(f64, f64); 3] = [(10.0, 17.0), (33.0, 12.5), (50.0, 9.5)];

    pub fn new(relative_humidity: f64) -> Result<Self, IngestError> {
        let [(lo, _), _, (hi, _)] = Self::ANCHORS;
        if !(lo..=hi).contains(&relative_humidity) {
            return Err(IngestError::HumidityOutOfRange(relative_humidity));
        }
        let seg = if relative_humidity <= Self::ANCHORS[1].0 {
            0
        } else {
            1
        };
        let (h0, l0) = Self::ANCHORS[seg];
        let (h1, l1) = Self::ANCHORS[seg + 1];
        let lhv = if relative_humidity == h1 {
            l1
        } else {
            l0 + (l1 - l0) * (relative_humidity - h0) / (h1 - h0)
        };
        Ok(Self {
            relative_humidity,
            lhv,
        })
    }

    pub fn relative_humidity(&self) -> f64 {
        self.relative_humidity
    }

    /// MJ per kg.
    pub fn lhv(&self) -> f64 {
        self.lhv
    }
}

/// Energy content of a biomass mass flow: 1 Gt at 1 MJ/kg is 1 EJ.
pub fn biomass_mass_to_energy(
    mass: &AnnualSeries,
    humidity: f64,
) -> Result<AnnualSeries, IngestError> {
    let lhv = HumidityConversion::new(humidity)?.lhv();
    Ok(mass.map(Unit::EjPerYear, |m| m * lhv)?)
}

/// E/Y on the common span, in EJ per trillion dollars.
pub fn energy_intensity(
    energy: &AnnualSeries,
    gdp: &AnnualSeries,
) -> Result<AnnualSeries, IngestError> {
    Ok(zip_with(energy, gdp, Unit::EjPerTrillionUsd, |e, y| e / y)?)
}

/// Per-capita energy in GJ per person and year.
pub fn per_capita_energy(
    energy: &AnnualSeries,
    population: &AnnualSeries,
) -> Result<AnnualSeries, IngestError> {
    Ok(zip_with(
        energy,
        population,
        Unit::GjPerPersonYear,
        |e, l| e * GJ_PER_EJ / l,
    )?)
}

/// Multiplies every value by `factor`, keeping the unit tag; used for
/// currency-base conversions such as 1990 to 2011 dollars.
pub fn rescale_series(series: &AnnualSeries, factor: f64) -> Result<AnnualSeries, IngestError> {
    if !(factor.is_finite() && factor > 0.0) {
        return Err(IngestError::InvalidFactor(factor));
    }
    Ok(series.map(series.unit(), |v| v * factor)?)
}

/// EJ/yr to TW-years per year.
pub fn ej_to_tw_years(ej: f64) -> f64 {
    ej / EJ_PER_TW_YEAR
}

/// Relative gap `(a - b) / b` on the common span with its largest magnitude.
#[derive(Debug, Clone, PartialEq)]
pub struct SeriesComparison {
    pub gap: AnnualSeries,
    pub max_abs_gap: f64,
    pub year_of_max: Year,
}

pub fn compare_series(a: &AnnualSeries, b: &AnnualSeries) -> Result<SeriesComparison, IngestError> {
    let (start, end) = overlap(a, b).ok_or(SeriesError::NoOverlap)?;
    for y in start..=end {
        let v = b.value_at(y)?;
        if v <= 0.0 {
            return Err(SeriesError::NonPositive {
                year: y,
                value: v,
                unit: b.unit(),
            }
            .into());
        }
    }
    let gap = zip_with(a, b, Unit::Dimensionless, |x, y| (x - y) / y)?;
    let (year_of_max, max_abs_gap) =
        gap.iter()
            .map(|(y, g)| (y, g.abs()))
            .fold(
                (start, -1.0),
                |best, cur| if cur.1 > best.1 { cur } else { best },
            );
    Ok(SeriesComparison {
        gap,
        max_abs_gap,
        year_of_max,
    })
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct ManifestEntry {
    path: PathBuf,
    unit: String,
    #[serde(default)]
    provenance: String,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct ManifestFile {
    pec: ManifestEntry,
    gdp: ManifestEntry,
    population: ManifestEntry,
    biomass_mass: Option<ManifestEntry>,
}

/// Table declarations read from a manifest, with paths resolved against the
/// manifest's directory.
#[derive(Debug, Clone)]
pub struct Manifest {
    path: PathBuf,
    entries: Vec<TableDecl>,
}

#[derive(Debug, Clone)]
pub struct TableDecl {
    pub name: &'static str,
    pub path: PathBuf,
    pub declared_unit: String,
    pub provenance: String,
    pub schema: Schema,
}

impl Manifest {
    pub fn load(path: &Path) -> Result<Self, IngestError> {
        let text = fs::read_to_string(path).map_err(|source| IngestError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&text, path)
    }

    /// Parses manifest text; relative table paths resolve against the
    /// directory of `path`.
    pub fn parse(text: &str, path: &Path) -> Result<Self, IngestError> {
        let raw: ManifestFile = toml::from_str(text).map_err(|e| IngestError::Manifest {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        let dir = path.parent().unwrap_or_else(|| Path::new("."));
        let decl = |name: &'static str, e: ManifestEntry, schema: Schema| TableDecl {
            name,
            path: dir.join(e.path),
            declared_unit: e.unit,
            provenance: e.provenance,
            schema,
        };
        let mut entries = vec![
            decl("pec", raw.pec, Schema::PecBreakdown),
            decl(
                "gdp",
                raw.gdp,
                Schema::SingleSeries(Unit::TrillionUsd2011Ppp),
            ),
            decl(
                "population",
                raw.population,
                Schema::SingleSeries(Unit::Persons),
            ),
        ];
        if let Some(m) = raw.biomass_mass {
            entries.push(decl("biomass_mass", m, Schema::BiomassMass));
        }
        Ok(Self {
            path: path.to_path_buf(),
            entries,
        })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn tables(&self) -> &[TableDecl] {
        &self.entries
    }
}

impl TableDecl {
    fn unit_issue(&self) -> Option<String> {
        let expected = self.schema.unit();
        (self.declared_unit != expected.as_str()).then(|| {
            format!(
                "declared unit `{}` but this table must be `{expected}`",
                self.declared_unit
            )
        })
    }
}

/// All inputs of one analysis run.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub pec: EnergyBreakdown,
    pub gdp: AnnualSeries,
    pub population: AnnualSeries,
    pub biomass_mass: Option<AnnualSeries>,
    /// Free-text provenance label per table name.
    pub provenance: BTreeMap<String, String>,
}

impl Dataset {
    pub fn new(
        pec: EnergyBreakdown,
        gdp: AnnualSeries,
        population: AnnualSeries,
        biomass_mass: Option<AnnualSeries>,
        provenance: BTreeMap<String, String>,
    ) -> Result<Self, IngestError> {
        if gdp.unit() != Unit::TrillionUsd2011Ppp || population.unit() != Unit::Persons {
            return Err(IngestError::Dataset(
                "gdp and population must carry their canonical units".into(),
            ));
        }
        let (lo, hi) = REQUIRED_SPAN;
        let spans = [
            ("pec", pec.start_year(), pec.end_year()),
            ("gdp", gdp.start_year(), gdp.end_year()),
            ("population", population.start_year(), population.end_year()),
        ];
        for (name, s, e) in spans {
            if s > lo || e < hi {
                return Err(IngestError::Dataset(format!(
                    "{name} covers {s}..={e} but must cover {lo}..={hi}"
                )));
            }
        }
        Ok(Self {
            pec,
            gdp,
            population,
            biomass_mass,
            provenance,
        })
    }

    pub fn load(manifest_path: &Path) -> Result<Self, IngestError> {
        let manifest = Manifest::load(manifest_path)?;
        let mut pec = None;
        let mut gdp = None;
        let mut population = None;
        let mut mass = None;
        let mut provenance = BTreeMap::new();
        for t in manifest.tables() {
            if let Some(msg) = t.unit_issue() {
                return Err(IngestError::Manifest {
                    path: manifest_path.to_path_buf(),
                    message: format!("{}: {msg}", t.name),
                });
            }
            provenance.insert(t.name.to_owned(), t.provenance.clone());
            match (t.name, parse_table(&t.path, t.schema)?) {
                ("pec", Table::Breakdown(b)) => pec = Some(b),
                ("gdp", Table::Series(s)) => gdp = Some(s),
                ("population", Table::Series(s)) => population = Some(s),
                ("biomass_mass", Table::Series(s)) => mass = Some(s),
                _ => unreachable!("schema fixes the table kind"),
            }
        }
        Self::new(
            pec.expect("manifest requires pec"),
            gdp.expect("manifest requires gdp"),
            population.expect("manifest requires population"),
            mass,
            provenance,
        )
    }

    /// Total primary energy, all eight categories.
    pub fn total_pec(&self) -> Result<AnnualSeries, IngestError> {
        aggregate_pec(&self.pec, Scope::All)
    }

    /// Breakdown with the fuelwood column recomputed from the biomass mass
    /// table at another humidity. Years without a mass value keep the
    /// tabulated fuelwood.
    pub fn pec_with_fuelwood_humidity(
        &self,
        humidity: f64,
    ) -> Result<EnergyBreakdown, IngestError> {
        let mass = self
            .biomass_mass
            .as_ref()
            .ok_or(IngestError::NoBiomassMass)?;
        let energy = biomass_mass_to_energy(mass, humidity)?;
        let fuelwood: Vec<f64> = (self.pec.start_year()..=self.pec.end_year())
            .zip(self.pec.category(EnergyCategory::Fuelwood))
            .map(|(y, &orig)| energy.get(y).unwrap_or(orig))
            .collect();
        self.pec.with_category(EnergyCategory::Fuelwood, fuelwood)
    }
}

/// Outcome of checking one table declared in a manifest.
#[derive(Debug, Clone)]
pub struct TableReport {
    pub name: &'static str,
    pub path: PathBuf,
    pub unit: String,
    pub span: Option<(Year, Year)>,
    pub issues: Vec<String>,
}

/// Everything `validate` found; empty issue lists mean the dataset loads.
#[derive(Debug, Clone)]
pub struct ValidationReport {
    pub manifest: PathBuf,
    pub tables: Vec<TableReport>,
    pub dataset_issues: Vec<String>,
}

impl ValidationReport {
    pub fn violation_count(&self) -> usize {
        self.tables.iter().map(|t| t.issues.len()).sum::<usize>() + self.dataset_issues.len()
    }

    pub fn is_ok(&self) -> bool {
        self.violation_count() == 0
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "manifest: {}", self.manifest.display())?;
        for t in &self.tables {
            let span = t
                .span
                .map_or_else(|| "-".to_owned(), |(s, e)| format!("{s}..{e}"));
            writeln!(
                f,
                "table {}: {} span={} unit={} violations={}",
                t.name,
                t.path.display(),
                span,
                t.unit,
                t.issues.len()
            )?;
            for i in &t.issues {
                writeln!(f, "  {i}")?;
            }
        }
        for i in &self.dataset_issues {
            writeln!(f, "dataset: {i}")?;
        }
        write!(f, "total violations: {}", self.violation_count())
    }
}

/// Checks every table of a manifest, collecting all problems. Only an
/// unreadable or malformed manifest is an error.
pub fn validate_manifest(manifest_path: &Path) -> Result<ValidationReport, IngestError> {
    let manifest = Manifest::load(manifest_path)?;
    let mut tables = Vec::new();
    let mut spans = Vec::new();
    for t in manifest.tables() {
        let mut issues: Vec<String> = t.unit_issue().into_iter().collect();
        let mut span = None;
        match parse_table(&t.path, t.schema) {
            Ok(Table::Breakdown(b)) => span = Some((b.start_year(), b.end_year())),
            Ok(Table::Series(s)) => span = Some((s.start_year(), s.end_year())),
            Err(IngestError::Table { issues: found, .. }) => {
                issues.extend(found.iter().map(ToString::to_string))
            }
            Err(other) => issues.push(other.to_string()),
        }
        if let Some(sp) = span {
            if t.name != "biomass_mass" {
                spans.push((t.name, sp));
            }
        }
        tables.push(TableReport {
            name: t.name,
            path: t.path.clone(),
            unit: t.declared_unit.clone(),
            span,
            issues,
        });
    }
    let (lo, hi) = REQUIRED_SPAN;
    let dataset_issues = spans
        .into_iter()
        .filter(|(_, (s, e))| *s > lo || *e < hi)
        .map(|(name, (s, e))| format!("{name} covers {s}..={e} but must cover {lo}..={hi}"))
        .collect();
    Ok(ValidationReport {
        manifest: manifest_path.to_path_buf(),
        tables,
        dataset_issues,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    const BREAKDOWN_HEADER: &str =
        "year,food,fuelwood,fodder,coal,oil,natural_gas,renewable_electricity,nuclear";

    fn breakdown(text: &str) -> Result<EnergyBreakdown, IngestError> {
        match parse_table_from_reader(text.as_bytes(), Schema::PecBreakdown)? {
            Table::Breakdown(b) => Ok(b),
            Table::Series(_) => unreachable!(),
        }
    }

    fn table_issues(err: IngestError) -> Vec<TableIssue> {
        match err {
            IngestError::Table { issues, .. } => issues,
            other => panic!("expected table error, got {other}"),
        }
    }

    fn ones(len: usize) -> EnergyBreakdown {
        EnergyBreakdown::new(1900, std::array::from_fn(|_| vec![1.0; len])).unwrap()
    }

    #[test]
    fn single_series_round_trip() {
        let text = "year,value\n1820,1.5\n1821,2.25\n1822,3\n";
        let t = parse_table_from_reader(
            text.as_bytes(),
            Schema::SingleSeries(Unit::TrillionUsd2011Ppp),
        )
        .unwrap();
        let Table::Series(s) = t else { panic!() };
        assert_eq!(s.start_year(), 1820);
        assert_eq!(s.values(), &[1.5, 2.25, 3.0]);
        assert_eq!(s.unit(), Unit::TrillionUsd2011Ppp);
    }

    #[test]
    fn gap_year_is_named() {
        let text = "year,value\n1848,1\n1849,1\n1851,1\n";
        let err = parse_table_from_reader(text.as_bytes(), Schema::SingleSeries(Unit::Persons))
            .unwrap_err();
        let issues = table_issues(err);
        assert_eq!(
            issues,
            vec![TableIssue::GapYear {
                line: 4,
                missing_year: 1850
            }]
        );
        assert!(issues[0].to_string().contains("1850"));
    }

    #[test]
    fn breakdown_row_sum_matches_independent_sum() {
        let rows = [
            [3.4, 8.6, 2.6, 0.87, 0.0, 0.0, 0.0, 0.0],
            [3.5, 8.7, 2.7, 0.91, 0.01, 0.0, 0.0, 0.0],
            [3.6, 8.8, 2.8, 1.10, 0.02, 0.003, 0.001, 0.0],
        ];
        let mut text = format!("{BREAKDOWN_HEADER}\n");
        for (i, r) in rows.iter().enumerate() {
            let cells: Vec<String> = r.iter().map(f64::to_string).collect();
            text.push_str(&format!("{},{}\n", 1900 + i, cells.join(",")));
        }
        let b = breakdown(&text).unwrap();
        let all = aggregate_pec(&b, Scope::All).unwrap();
        for (i, r) in rows.iter().enumerate() {
            let expected = (r[0] + r[1] + r[2]) + (r[3] + r[4] + r[5] + r[6] + r[7]);
            assert_relative_eq!(all.values()[i], expected, max_relative = 1e-15);
        }
    }

    #[test]
    fn breakdown_errors_carry_position() {
        let text = format!("{BREAKDOWN_HEADER}\n1900,1,1,1,1,1,1,1,1\n1901,1,1,1,-2,1,1,1,1\n1902,1,1,1,1,x,1,1,1\n");
        let issues = table_issues(breakdown(&text).unwrap_err());
        assert_eq!(
            issues,
            vec![
                TableIssue::Negative {
                    line: 3,
                    column: "coal".into(),
                    value: -2.0
                },
                TableIssue::NonNumeric {
                    line: 4,
                    column: "oil".into(),
                    text: "x".into()
                },
            ]
        );
    }

    #[test]
    fn missing_column_is_reported() {
        let text = "year,food,fuelwood\n1900,1,1\n";
        let issues = table_issues(breakdown(text).unwrap_err());
        assert!(issues.contains(&TableIssue::MissingColumn {
            column: "coal".into()
        }));
        let empty = table_issues(breakdown(&format!("{BREAKDOWN_HEADER}\n")).unwrap_err());
        assert_eq!(empty, vec![TableIssue::EmptyTable]);
    }

    #[test]
    fn non_increasing_year_rejected() {
        let text = "year,value\n1900,1\n1900,1\n";
        let issues = table_issues(
            parse_table_from_reader(text.as_bytes(), Schema::SingleSeries(Unit::Dimensionless))
                .unwrap_err(),
        );
        assert_eq!(
            issues,
            vec![TableIssue::YearNotIncreasing {
                line: 3,
                year: 1900
            }]
        );
    }

    #[test]
    fn interpolation_cases() {
        let s = interpolate_decennial(&[(1820, 1.0), (1830, 2.0)], Unit::Dimensionless).unwrap();
        assert_relative_eq!(s.value_at(1825).unwrap(), 2f64.sqrt(), max_relative = 1e-15);
        assert_eq!(s.value_at(1830).unwrap(), 2.0);

        let c = interpolate_decennial(&[(1900, 3.0), (1950, 3.0)], Unit::Dimensionless).unwrap();
        assert!(c.values().iter().all(|&v| v == 3.0));

        let g = 0.013;
        let anchors: Vec<(Year, f64)> = (0..=5)
            .map(|k| (1900 + 10 * k, (g * f64::from(10 * k)).exp()))
            .collect();
        let s = interpolate_decennial(&anchors, Unit::Dimensionless).unwrap();
        for (y, v) in s.iter() {
            assert_relative_eq!(v, (g * f64::from(y - 1900)).exp(), max_relative = 1e-13);
        }

        assert!(interpolate_decennial(&[(1900, 1.0)], Unit::Dimensionless).is_err());
        assert!(interpolate_decennial(&[(1900, 1.0), (1900, 2.0)], Unit::Dimensionless).is_err());
        assert!(interpolate_decennial(&[(1910, 1.0), (1900, 2.0)], Unit::Dimensionless).is_err());
        assert!(interpolate_decennial(&[(1900, 1.0), (1910, 0.0)], Unit::Dimensionless).is_err());
    }

    #[test]
    fn humidity_anchor_values() {
        let one = AnnualSeries::new(2000, vec![1.0], Unit::GtPerYear).unwrap();
        let two = AnnualSeries::new(2000, vec![2.0], Unit::GtPerYear).unwrap();
        assert_eq!(
            biomass_mass_to_energy(&one, 33.0).unwrap().values(),
            &[12.5]
        );
        assert_eq!(
            biomass_mass_to_energy(&two, 50.0).unwrap().values(),
            &[19.0]
        );
        assert_eq!(
            biomass_mass_to_energy(&one, 10.0).unwrap().values(),
            &[17.0]
        );
        assert_eq!(HumidityConversion::new(33.0).unwrap().lhv(), 12.5);
        assert!(matches!(
            biomass_mass_to_energy(&one, 9.9),
            Err(IngestError::HumidityOutOfRange(_))
        ));
        assert!(HumidityConversion::new(50.1).is_err());
    }

    #[test]
    fn aggregate_counts_categories() {
        let b = ones(4);
        assert!(aggregate_pec(&b, Scope::All)
            .unwrap()
            .values()
            .iter()
            .all(|&v| v == 8.0));
        assert!(aggregate_pec(&b, Scope::ModernOnly)
            .unwrap()
            .values()
            .iter()
            .all(|&v| v == 5.0));
        assert!(aggregate_pec(&b, Scope::TraditionalOnly)
            .unwrap()
            .values()
            .iter()
            .all(|&v| v == 3.0));
    }

    #[test]
    fn intensity_and_rescale() {
        let e = AnnualSeries::new(1900, vec![2.0, 3.0, 5.0], Unit::EjPerYear).unwrap();
        let y = AnnualSeries::new(1900, vec![2.0, 3.0, 5.0], Unit::TrillionUsd2011Ppp).unwrap();
        assert!(energy_intensity(&e, &y)
            .unwrap()
            .values()
            .iter()
            .all(|&v| v == 1.0));
        let later = AnnualSeries::new(1950, vec![1.0], Unit::TrillionUsd2011Ppp).unwrap();
        assert!(energy_intensity(&e, &later).is_err());

        assert_eq!(rescale_series(&y, 1.0).unwrap(), y);
        let r = rescale_series(&y, 1.57).unwrap();
        assert_eq!(r.unit(), y.unit());
        for (a, b) in r.values().iter().zip(y.values()) {
            assert_eq!(*a, b * 1.57);
        }
        let rate = crate::series::cagr(&y, 1900, 1902).unwrap();
        let rate_r = crate::series::cagr(&r, 1900, 1902).unwrap();
        assert_relative_eq!(rate, rate_r, max_relative = 1e-14);
        assert!(rescale_series(&y, 0.0).is_err());
        assert!(rescale_series(&y, -1.0).is_err());
    }

    #[test]
    fn comparison_cases() {
        let b = AnnualSeries::new(1900, vec![1.0, 2.0, 4.0], Unit::EjPerYear).unwrap();
        let same = compare_series(&b, &b).unwrap();
        assert!(same.gap.values().iter().all(|&g| g == 0.0));
        assert_eq!(same.max_abs_gap, 0.0);
        let a = b.map(Unit::EjPerYear, |v| 1.1 * v).unwrap();
        let c = compare_series(&a, &b).unwrap();
        for &g in c.gap.values() {
            assert_relative_eq!(g, 0.10, max_relative = 1e-12);
        }
        let other = AnnualSeries::new(2000, vec![1.0], Unit::EjPerYear).unwrap();
        assert!(compare_series(&a, &other).is_err());
    }

    #[test]
    fn tw_year_constant() {
        assert_relative_eq!(
            EJ_PER_TW_YEAR,
            1e12 * 365.25 * 86400.0 / 1e18,
            max_relative = 1e-15
        );
        assert_eq!(ej_to_tw_years(EJ_PER_TW_YEAR), 1.0);
    }

    #[test]
    fn manifest_rejects_unknown_keys() {
        let text = "[pec]\npath='a'\nunit='EJ_per_year'\ncolour='red'\n";
        assert!(matches!(
            Manifest::parse(text, Path::new("m.toml")),
            Err(IngestError::Manifest { .. })
        ));
    }

    fn breakdown_strategy() -> impl Strategy<Value = EnergyBreakdown> {
        (1usize..30).prop_flat_map(|len| {
            prop::collection::vec(prop::collection::vec(0.0f64..50.0, len), 8).prop_map(|cols| {
                let mut cols = cols;
                // Keep every aggregate strictly positive.
                for v in cols[0].iter_mut() {
                    *v += 0.1;
                }
                for v in cols[3].iter_mut() {
                    *v += 0.1;
                }
                let cols: [Vec<f64>; 8] = cols.try_into().unwrap();
                EnergyBreakdown::new(1820, cols).unwrap()
            })
        })
    }

    proptest! {
        #[test]
        fn partition_identity(b in breakdown_strategy()) {
            let all = aggregate_pec(&b, Scope::All).unwrap();
            let modern = aggregate_pec(&b, Scope::ModernOnly).unwrap();
            let trad = aggregate_pec(&b, Scope::TraditionalOnly).unwrap();
            for i in 0..b.len() {
                let resid = all.values()[i] - modern.values()[i] - trad.values()[i];
                prop_assert!(resid.abs() <= 1e-12 * all.values()[i]);
            }
        }

        #[test]
        fn breakdown_serialization_round_trips(b in breakdown_strategy()) {
            let mut buf = Vec::new();
            write_breakdown(&b, &mut buf).unwrap();
            let back = parse_table_from_reader(buf.as_slice(), Schema::PecBreakdown).unwrap();
            prop_assert_eq!(back, Table::Breakdown(b));
        }

        #[test]
        fn series_serialization_round_trips(v in prop::collection::vec(1e-6f64..1e6, 1..40), start in 1700i32..2000) {
            let s = AnnualSeries::new(start, v, Unit::Persons).unwrap();
            let mut buf = Vec::new();
            write_series(&s, "value", &mut buf).unwrap();
            let back = parse_table_from_reader(buf.as_slice(), Schema::SingleSeries(Unit::Persons)).unwrap();
            prop_assert_eq!(back, Table::Series(s));
        }

        #[test]
        fn biomass_linear_in_mass_and_decreasing_in_humidity(
            m in 0.01f64..10.0, k in 0.1f64..5.0, h1 in 10.0f64..50.0, h2 in 10.0f64..50.0,
        ) {
            let s = AnnualSeries::new(1900, vec![m], Unit::GtPerYear).unwrap();
            let sk = AnnualSeries::new(1900, vec![m * k], Unit::GtPerYear).unwrap();
            let e = biomass_mass_to_energy(&s, h1).unwrap().values()[0];
            let ek = biomass_mass_to_energy(&sk, h1).unwrap().values()[0];
            prop_assert!((ek - k * e).abs() <= 1e-12 * ek);
            let (lo, hi) = if h1 < h2 { (h1, h2) } else { (h2, h1) };
            prop_assume!(hi - lo > 1e-9);
            let e_lo = biomass_mass_to_energy(&s, lo).unwrap().values()[0];
            let e_hi = biomass_mass_to_energy(&s, hi).unwrap().values()[0];
            prop_assert!(e_hi < e_lo);
        }
    }
}
