//! Command-line front end.
//!
//! Every command computes all of its tables in memory first and only then
//! writes them, each through a temporary file renamed into place, so a failed
//! run leaves no partial output behind. Numbers are printed in Rust's
//! shortest round-trip decimal form, which makes identical inputs produce
//! byte-identical files.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

use crate::ingest::{
    aggregate_pec, compare_series, ej_to_tw_years, energy_intensity, per_capita_energy,
    validate_manifest, Dataset, IngestError, Scope,
};
use crate::residual::{
    cumulative_energy, fit_chi, growth_structure, model_gdp, residual_a, PeakConfig, PeakReport,
    ResidualError, ResidualFit,
};
use crate::scenario::{
    default_scenarios, export_plane, project, write_plane, Anchors, ScenarioError, ScenarioFile,
};
use crate::series::{cagr, normalize, AnnualSeries, NormalizedSeries, SeriesError, Year};
use crate::sim::{
    alpha_sweep, calibrate_chi_alpha, horizon_for_energy_ratio, simulate_b13, SimConfig, SimError,
    SweepResult, Trajectory, DEFAULT_DT, REFERENCE_ENERGY_RATIO, REFERENCE_G, REFERENCE_TARGET,
};

/// Normalization year of every relative quantity.
pub const BASE_YEAR: Year = 1820;
pub const DEFAULT_FIT_WINDOW: (Year, Year) = (1926, 2016);
pub const DEFAULT_MANIFEST: &str = "data/fixtures/manifest.toml";

/// Periods of the growth-rate table.
pub const METRIC_PERIODS: [(Year, Year); 7] = [
    (1820, 1850),
    (1850, 1870),
    (1870, 1900),
    (1900, 1920),
    (1920, 1950),
    (1950, 1980),
    (1980, 2016),
];

/// The two growth epochs, before and after the residual takes off.
pub const EPOCHS: [(Year, Year); 2] = [(1820, 1920), (1920, 2016)];

pub const DEFAULT_SWEEP_ALPHAS: [f64; 5] = [0.0, 0.25, 0.5, 0.75, 1.0];

#[derive(Debug, Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("validation found {count} violation(s)\n{report}")]
    ValidationFailed { count: usize, report: String },
    #[error("{command}: {source}")]
    Ingest {
        command: &'static str,
        #[source]
        source: IngestError,
    },
    #[error("{command}: {source}")]
    Residual {
        command: &'static str,
        #[source]
        source: ResidualError,
    },
    #[error("{command}: {source}")]
    Series {
        command: &'static str,
        #[source]
        source: SeriesError,
    },
    #[error("{command}: {source}")]
    Sim {
        command: &'static str,
        #[source]
        source: SimError,
    },
    #[error("{command}: {source}")]
    Scenario {
        command: &'static str,
        #[source]
        source: ScenarioError,
    },
    #[error("cannot write {path}: {source}")]
    Output {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    /// Process exit status: 2 for usage errors, 1 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            _ => 1,
        }
    }
}

/// Attaches the command name to a module error.
trait Context<T> {
    fn ctx(self, command: &'static str) -> Result<T, CliError>;
}

macro_rules! impl_context {
    ($err:ty, $variant:ident) => {
        impl<T> Context<T> for Result<T, $err> {
            fn ctx(self, command: &'static str) -> Result<T, CliError> {
                self.map_err(|source| CliError::$variant { command, source })
            }
        }
    };
}
impl_context!(IngestError, Ingest);
impl_context!(SeriesError, Series);
impl_context!(SimError, Sim);
impl_context!(ScenarioError, Scenario);

impl<T> Context<T> for Result<T, ResidualError> {
    fn ctx(self, command: &'static str) -> Result<T, CliError> {
        self.map_err(|source| match source {
            ResidualError::WindowTooShort { .. } | ResidualError::AnalysisWindowTooShort { .. } => {
                CliError::Usage(format!("{command}: {source}"))
            }
            source => CliError::Residual { command, source },
        })
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "energy-growth",
    version,
    about = "Energy-driven growth model: data checks, residual fit, capital dynamics, scenarios"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check every table of a manifest and list all violations.
    Validate {
        #[arg(long, default_value = DEFAULT_MANIFEST)]
        manifest: PathBuf,
    },
    /// Period growth rates and epoch growth factors of energy, population and GDP.
    Metrics {
        #[command(flatten)]
        data: DataArgs,
        /// Extra periods as Y1:Y2, comma separated; replaces the standard set.
        #[arg(long, value_delimiter = ',', value_parser = parse_window)]
        periods: Vec<(Year, Year)>,
    },
    /// Fit the residual against cumulative energy.
    Fit {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long, value_parser = parse_window, default_value = "1926:2016")]
        window: (Year, Year),
    },
    /// Annual residual growth, its smoothed trend, booms and busts.
    Peaks {
        #[command(flatten)]
        data: DataArgs,
        /// Analysis window.
        #[arg(long, value_parser = parse_window, default_value = "1926:2016")]
        window: (Year, Year),
        /// Window of the fit that provides the trend.
        #[arg(long, value_parser = parse_window, default_value = "1926:2016")]
        fit_window: (Year, Year),
    },
    /// Single-capital run with a growing residual.
    Simulate {
        #[command(flatten)]
        sim: SimArgs,
        #[arg(long, default_value_t = 1.0)]
        alpha: f64,
        /// Residual growth rate; calibrated to the target when omitted.
        #[arg(long)]
        chi: Option<f64>,
    },
    /// Calibrate and compare runs over several capital elasticities.
    Sweep {
        #[command(flatten)]
        sim: SimArgs,
        #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_SWEEP_ALPHAS)]
        alphas: Vec<f64>,
    },
    /// Project energy and GDP under policy scenarios.
    Scenario {
        #[command(flatten)]
        data: DataArgs,
        /// Scenario file; the three standard scenarios when omitted.
        #[arg(long)]
        spec: Option<PathBuf>,
        #[arg(long, value_parser = parse_window, default_value = "1926:2016")]
        fit_window: (Year, Year),
    },
    /// Regenerate every figure-data table in one go.
    Figures {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long, default_value_t = DEFAULT_DT)]
        dt: f64,
    },
}

#[derive(Debug, Clone, Args)]
pub struct DataArgs {
    #[arg(long, default_value = DEFAULT_MANIFEST)]
    pub manifest: PathBuf,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    /// Recompute fuelwood energy at this relative humidity (percent, 10 to 50).
    #[arg(long)]
    pub humidity: Option<f64>,
}

#[derive(Debug, Clone, Args)]
pub struct SimArgs {
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    #[arg(long, default_value_t = DEFAULT_DT)]
    pub dt: f64,
    /// Energy growth per time unit.
    #[arg(long, default_value_t = REFERENCE_G)]
    pub g: f64,
    /// Horizon in time units; defaults to fortyfold energy growth at `g`.
    #[arg(long)]
    pub t_end: Option<f64>,
    /// Final output-to-energy ratio the calibration aims for.
    #[arg(long, default_value_t = REFERENCE_TARGET)]
    pub target: f64,
}

impl SimArgs {
    fn config(&self, alpha: f64) -> SimConfig {
        SimConfig {
            alpha,
            chi: 0.0,
            g: self.g,
            t_end: self
                .t_end
                .unwrap_or_else(|| horizon_for_energy_ratio(REFERENCE_ENERGY_RATIO, self.g)),
            dt: self.dt,
            saving: 1.0,
            decay: 1.0,
        }
    }
}

/// Parses `Y1:Y2` with `Y1 < Y2`.
pub fn parse_window(text: &str) -> Result<(Year, Year), String> {
    let (a, b) = text
        .split_once(':')
        .ok_or_else(|| format!("expected Y1:Y2, got `{text}`"))?;
    let from: Year = a.trim().parse().map_err(|_| format!("bad year `{a}`"))?;
    let to: Year = b.trim().parse().map_err(|_| format!("bad year `{b}`"))?;
    if from >= to {
        return Err(format!("window {from}:{to} must run forward"));
    }
    Ok((from, to))
}

/// A finished table waiting to be written.
#[derive(Debug, Clone, PartialEq)]
pub struct OutputFile {
    pub name: String,
    pub contents: String,
}

/// What a successful command produced.
#[derive(Debug, Clone, Default)]
pub struct Outcome {
    pub summary: String,
    pub out_dir: Option<PathBuf>,
    pub files: Vec<OutputFile>,
}

/// Parses arguments (the first being the program name) and runs the command.
pub fn execute<I, T>(args: I) -> Result<Outcome, CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = Cli::try_parse_from(args).map_err(|e| CliError::Usage(e.to_string()))?;
    run(&cli.command)
}

pub fn run(command: &Command) -> Result<Outcome, CliError> {
    let (outcome, out) = match command {
        Command::Validate { manifest } => return cmd_validate(manifest),
        Command::Metrics { data, periods } => (cmd_metrics(data, periods)?, &data.out),
        Command::Fit { data, window } => (cmd_fit(data, *window)?, &data.out),
        Command::Peaks {
            data,
            window,
            fit_window,
        } => (cmd_peaks(data, *window, *fit_window)?, &data.out),
        Command::Simulate { sim, alpha, chi } => (cmd_simulate(sim, *alpha, *chi)?, &sim.out),
        Command::Sweep { sim, alphas } => (cmd_sweep(sim, alphas)?, &sim.out),
        Command::Scenario {
            data,
            spec,
            fit_window,
        } => (cmd_scenario(data, spec.as_deref(), *fit_window)?, &data.out),
        Command::Figures { data, dt } => (cmd_figures(data, *dt)?, &data.out),
    };
    write_outputs(out, &outcome.files)?;
    Ok(Outcome {
        out_dir: Some(out.clone()),
        ..outcome
    })
}

/// Writes each file to a hidden temporary name, then renames it into place.
pub fn write_outputs(dir: &Path, files: &[OutputFile]) -> Result<(), CliError> {
    let io = |path: &Path| {
        let path = path.to_path_buf();
        move |source| CliError::Output { path, source }
    };
    fs::create_dir_all(dir).map_err(io(dir))?;
    for f in files {
        let target = dir.join(&f.name);
        let tmp = dir.join(format!(".{}.tmp", f.name));
        let mut handle = fs::File::create(&tmp).map_err(io(&tmp))?;
        handle.write_all(f.contents.as_bytes()).map_err(io(&tmp))?;
        handle.sync_all().map_err(io(&tmp))?;
        fs::rename(&tmp, &target).map_err(io(&target))?;
    }
    Ok(())
}

/// Minimal CSV builder; every cell here is a number or a plain identifier.
struct Csv(String);

impl Csv {
    fn new(header: &[&str]) -> Self {
        Csv(header.join(",") + "\n")
    }

    fn row(&mut self, cells: &[String]) {
        self.0.push_str(&cells.join(","));
        self.0.push('\n');
    }

    fn file(self, name: &str) -> OutputFile {
        OutputFile {
            name: name.into(),
            contents: self.0,
        }
    }
}

fn num(v: f64) -> String {
    v.to_string()
}

fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

fn cmd_validate(manifest: &Path) -> Result<Outcome, CliError> {
    let report = validate_manifest(manifest).ctx("validate")?;
    let text = report.to_string();
    if report.is_ok() {
        Ok(Outcome {
            summary: text,
            ..Outcome::default()
        })
    } else {
        Err(CliError::ValidationFailed {
            count: report.violation_count(),
            report: text,
        })
    }
}

/// Dataset plus the total-energy series used by every analysis.
struct Loaded {
    data: Dataset,
    energy: AnnualSeries,
}

fn load(args: &DataArgs, command: &'static str) -> Result<Loaded, CliError> {
    let data = Dataset::load(&args.manifest).ctx(command)?;
    let breakdown = match args.humidity {
        Some(h) => data.pec_with_fuelwood_humidity(h).ctx(command)?,
        None => data.pec.clone(),
    };
    let energy = aggregate_pec(&breakdown, Scope::All).ctx(command)?;
    Ok(Loaded { data, energy })
}

/// Residual, cumulative energy and fit, shared by several commands.
struct Calibrated {
    residual: NormalizedSeries,
    cum_energy: AnnualSeries,
    fit: ResidualFit,
}

fn calibrate(
    l: &Loaded,
    window: (Year, Year),
    command: &'static str,
) -> Result<Calibrated, CliError> {
    let residual = residual_a(&l.data.gdp, &l.energy, BASE_YEAR).ctx(command)?;
    let cum_energy = cumulative_energy(&l.energy, BASE_YEAR).ctx(command)?;
    let fit = fit_chi(&residual, &cum_energy, window).ctx(command)?;
    Ok(Calibrated {
        residual,
        cum_energy,
        fit,
    })
}

fn metrics_table(l: &Loaded, periods: &[(Year, Year)]) -> Result<OutputFile, CliError> {
    // E_per_L is the per-capita energy diagnostic: the energy rate minus the
    // population rate on cagr rows, the ratio of the two factors on factor rows.
    let mut csv = Csv::new(&["measure", "from", "to", "E", "L", "Y", "E_per_L"]);
    let series = [&l.energy, &l.data.population, &l.data.gdp];
    for &(from, to) in periods {
        let rates = series
            .iter()
            .map(|s| cagr(s, from, to))
            .collect::<Result<Vec<_>, _>>()
            .ctx("metrics")?;
        let mut cells = vec!["cagr".into(), from.to_string(), to.to_string()];
        cells.extend(rates.iter().copied().map(num));
        cells.push(num(rates[0] - rates[1]));
        csv.row(&cells);
    }
    for &(from, to) in &EPOCHS {
        let mut cells = vec!["factor".into(), from.to_string(), to.to_string()];
        let mut factors = Vec::with_capacity(3);
        for s in series {
            let a = s.value_at(from).ctx("metrics")?;
            let b = s.value_at(to).ctx("metrics")?;
            factors.push(b / a);
        }
        cells.extend(factors.iter().copied().map(num));
        cells.push(num(factors[0] / factors[1]));
        csv.row(&cells);
    }
    Ok(csv.file("growth_metrics.csv"))
}

fn cmd_metrics(args: &DataArgs, periods: &[(Year, Year)]) -> Result<Outcome, CliError> {
    let l = load(args, "metrics")?;
    let periods = if periods.is_empty() {
        METRIC_PERIODS.to_vec()
    } else {
        periods.to_vec()
    };
    let table = metrics_table(&l, &periods)?;
    Ok(Outcome {
        summary: table.contents.clone(),
        files: vec![table],
        ..Outcome::default()
    })
}

fn fit_tables(c: &Calibrated, l: &Loaded) -> Result<Vec<OutputFile>, CliError> {
    let mut points = Csv::new(&["year", "cum_energy", "A", "ln_A", "fitted_ln_A"]);
    for (year, a) in c.residual.iter() {
        let Some(x) = c.cum_energy.get(year) else {
            continue;
        };
        points.row(&[
            year.to_string(),
            num(x),
            num(a),
            num(a.ln()),
            num(c.fit.intercept + c.fit.chi * x),
        ]);
    }
    let f = &c.fit;
    let mut summary = Csv::new(&["key", "value"]);
    for (k, v) in [
        ("chi", num(f.chi)),
        ("intercept", num(f.intercept)),
        ("r_squared", num(f.r_squared)),
        ("base_year", f.base_year.to_string()),
        ("fit_start", f.fit_start.to_string()),
        ("fit_end", f.fit_end.to_string()),
        ("points", f.points.to_string()),
    ] {
        summary.row(&[k.into(), v]);
    }

    let y_base = l.data.gdp.value_at(BASE_YEAR).ctx("fit")?;
    let model = model_gdp(&l.energy, f.chi, BASE_YEAR, y_base).ctx("fit")?;
    let mut m = Csv::new(&["year", "Y_observed", "Y_model", "relative_gap"]);
    for (year, ym) in model.iter() {
        let Some(obs) = l.data.gdp.get(year) else {
            continue;
        };
        m.row(&[year.to_string(), num(obs), num(ym), num(ym / obs - 1.0)]);
    }
    Ok(vec![
        points.file("A_vs_cumE.csv"),
        summary.file("fit_summary.csv"),
        m.file("model_gdp.csv"),
    ])
}

fn fit_summary_text(f: &ResidualFit) -> String {
    format!(
        "chi = {} per year, intercept = {}, r_squared = {}, window {}..={} ({} points)",
        f.chi, f.intercept, f.r_squared, f.fit_start, f.fit_end, f.points
    )
}

fn cmd_fit(args: &DataArgs, window: (Year, Year)) -> Result<Outcome, CliError> {
    let l = load(args, "fit")?;
    let c = calibrate(&l, window, "fit")?;
    Ok(Outcome {
        summary: fit_summary_text(&c.fit),
        files: fit_tables(&c, &l)?,
        ..Outcome::default()
    })
}

fn peak_tables(r: &PeakReport) -> Vec<OutputFile> {
    let mut g = Csv::new(&["year", "dA_over_A", "smoothed", "trend"]);
    for (year, v) in r.growth.iter() {
        g.row(&[
            year.to_string(),
            num(v),
            opt(r.smoothed.get(year)),
            opt(r.trend.get(year)),
        ]);
    }
    let mut p = Csv::new(&["kind", "year"]);
    for y in &r.peak_years {
        p.row(&["peak".into(), y.to_string()]);
    }
    for y in &r.dip_years {
        p.row(&["dip".into(), y.to_string()]);
    }
    vec![g.file("residual_growth.csv"), p.file("peaks.csv")]
}

fn peak_report(l: &Loaded, c: &Calibrated, window: (Year, Year)) -> Result<PeakReport, CliError> {
    let e_norm = normalize(&l.energy, BASE_YEAR).ctx("peaks")?;
    growth_structure(
        &c.residual,
        c.fit.chi,
        &e_norm,
        window,
        &PeakConfig::default(),
    )
    .ctx("peaks")
}

fn cmd_peaks(
    args: &DataArgs,
    window: (Year, Year),
    fit_window: (Year, Year),
) -> Result<Outcome, CliError> {
    let l = load(args, "peaks")?;
    let c = calibrate(&l, fit_window, "peaks")?;
    let r = peak_report(&l, &c, window)?;
    let join = |ys: &[Year]| {
        ys.iter()
            .map(ToString::to_string)
            .collect::<Vec<_>>()
            .join(" ")
    };
    Ok(Outcome {
        summary: format!(
            "peaks: {}\ndips: {}",
            join(&r.peak_years),
            join(&r.dip_years)
        ),
        files: peak_tables(&r),
        ..Outcome::default()
    })
}

fn trajectory_table(tr: &Trajectory, name: &str) -> OutputFile {
    let mut csv = Csv::new(&["t", "y_eps", "j_eps", "A", "cum_energy"]);
    for i in 0..tr.len() {
        csv.row(&[
            num(tr.times[i]),
            num(tr.y_eps[i]),
            num(tr.j_eps[i]),
            num(tr.a[i]),
            num(tr.cum_e[i]),
        ]);
    }
    csv.file(name)
}

fn cmd_simulate(sim: &SimArgs, alpha: f64, chi: Option<f64>) -> Result<Outcome, CliError> {
    let cfg = sim.config(alpha);
    cfg.validate().ctx("simulate")?;
    let chi = match chi {
        Some(c) => c,
        None => calibrate_chi_alpha(&cfg, sim.target).ctx("simulate")?,
    };
    let tr = simulate_b13(&cfg.with_chi(chi)).ctx("simulate")?;
    Ok(Outcome {
        summary: format!(
            "alpha = {alpha}, chi = {chi}, g = {}, t_end = {}, final y_eps = {}",
            cfg.g,
            cfg.t_end,
            tr.final_y()
        ),
        files: vec![trajectory_table(&tr, "simulation.csv")],
        ..Outcome::default()
    })
}

fn sweep_tables(r: &SweepResult) -> Vec<OutputFile> {
    let mut header = vec!["t".to_owned()];
    header.extend(
        r.runs
            .iter()
            .map(|run| format!("y_eps_alpha_{}", run.alpha)),
    );
    let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();
    let mut wide = Csv::new(&header_refs);
    let n = r
        .runs
        .iter()
        .map(|run| run.trajectory.len())
        .min()
        .unwrap_or(0);
    for k in 0..n {
        let mut cells = vec![num(r.runs[0].trajectory.times[k])];
        cells.extend(r.runs.iter().map(|run| num(run.trajectory.y_eps[k])));
        wide.row(&cells);
    }
    let mut summary = Csv::new(&["alpha", "chi", "final_y_eps"]);
    for run in &r.runs {
        summary.row(&[num(run.alpha), num(run.chi), num(run.trajectory.final_y())]);
    }
    let mut gap = Csv::new(&["key", "value"]);
    gap.row(&["max_gap".into(), num(r.max_gap)]);
    gap.row(&["worst_alpha_a".into(), num(r.worst_pair.0)]);
    gap.row(&["worst_alpha_b".into(), num(r.worst_pair.1)]);
    gap.row(&["worst_time".into(), num(r.worst_time)]);
    vec![
        wide.file("alpha_sweep.csv"),
        summary.file("alpha_sweep_calibration.csv"),
        gap.file("alpha_sweep_gap.csv"),
    ]
}

fn cmd_sweep(sim: &SimArgs, alphas: &[f64]) -> Result<Outcome, CliError> {
    let base = sim.config(alphas.first().copied().unwrap_or(0.5));
    let r = alpha_sweep(alphas, &base, sim.target).ctx("sweep")?;
    let mut summary = String::new();
    for run in &r.runs {
        let _ = writeln!(summary, "alpha = {}: chi = {}", run.alpha, run.chi);
    }
    let _ = write!(
        summary,
        "max gap = {} between alpha {} and {} at t = {}",
        r.max_gap, r.worst_pair.0, r.worst_pair.1, r.worst_time
    );
    Ok(Outcome {
        summary,
        files: sweep_tables(&r),
        ..Outcome::default()
    })
}

fn scenario_table(
    l: &Loaded,
    chi: f64,
    specs: &[crate::scenario::ScenarioSpec],
) -> Result<(OutputFile, String), CliError> {
    let mut paths = Vec::with_capacity(specs.len());
    let mut summary = String::new();
    for spec in specs {
        let anchors = Anchors::from_history(&l.energy, &l.data.gdp, BASE_YEAR, spec.anchor_year)
            .ctx("scenario")?;
        let p = project(spec, &anchors, Some(chi)).ctx("scenario")?;
        let last = p.years.len() - 1;
        let _ = writeln!(
            summary,
            "{}: {} E = {} EJ/yr, Y = {} trillion USD",
            p.name, p.years[last], p.energy[last], p.gdp[last]
        );
        paths.push(p);
    }
    let rows = export_plane(&l.energy, &l.data.gdp, BASE_YEAR, &paths).ctx("scenario")?;
    let mut buf = Vec::new();
    write_plane(&rows, &mut buf).ctx("scenario")?;
    let contents = String::from_utf8(buf).expect("csv output is UTF-8");
    Ok((
        OutputFile {
            name: "scenarios.csv".into(),
            contents,
        },
        summary.trim_end().to_owned(),
    ))
}

fn cmd_scenario(
    args: &DataArgs,
    spec: Option<&Path>,
    fit_window: (Year, Year),
) -> Result<Outcome, CliError> {
    let l = load(args, "scenario")?;
    let c = calibrate(&l, fit_window, "scenario")?;
    let specs = match spec {
        Some(path) => ScenarioFile::load(path).ctx("scenario")?.scenario,
        None => default_scenarios(),
    };
    let (file, summary) = scenario_table(&l, c.fit.chi, &specs)?;
    Ok(Outcome {
        summary,
        files: vec![file],
        ..Outcome::default()
    })
}

fn energy_gdp_table(l: &Loaded) -> Result<OutputFile, CliError> {
    let per_capita = per_capita_energy(&l.energy, &l.data.population).ctx("figures")?;
    let mut csv = Csv::new(&[
        "year",
        "E_EJ_per_yr",
        "E_TW",
        "Y_trillion_USD2011",
        "L_persons",
        "E_per_capita_GJ",
    ]);
    for (year, e) in l.energy.iter() {
        let (Some(y), Some(pop)) = (l.data.gdp.get(year), l.data.population.get(year)) else {
            continue;
        };
        csv.row(&[
            year.to_string(),
            num(e),
            num(ej_to_tw_years(e)),
            num(y),
            num(pop),
            opt(per_capita.get(year)),
        ]);
    }
    Ok(csv.file("energy_gdp.csv"))
}

fn intensity_table(l: &Loaded) -> Result<OutputFile, CliError> {
    let modern = aggregate_pec(&l.data.pec, Scope::ModernOnly).ctx("figures")?;
    let all = energy_intensity(&l.energy, &l.data.gdp).ctx("figures")?;
    let modern = energy_intensity(&modern, &l.data.gdp).ctx("figures")?;
    let mut csv = Csv::new(&["year", "intensity_all", "intensity_modern"]);
    for (year, v) in all.iter() {
        csv.row(&[year.to_string(), num(v), opt(modern.get(year))]);
    }
    Ok(csv.file("energy_intensity.csv"))
}

fn humidity_table(l: &Loaded) -> Result<Option<OutputFile>, CliError> {
    if l.data.biomass_mass.is_none() {
        return Ok(None);
    }
    let total_at = |h: f64| -> Result<AnnualSeries, CliError> {
        let b = l.data.pec_with_fuelwood_humidity(h).ctx("figures")?;
        aggregate_pec(&b, Scope::All).ctx("figures")
    };
    let dry = total_at(10.0)?;
    let mid = total_at(33.0)?;
    let wet = total_at(50.0)?;
    let cmp = compare_series(&dry, &wet).ctx("figures")?;
    let mut csv = Csv::new(&[
        "year",
        "E_rh10",
        "E_rh33",
        "E_rh50",
        "relative_gap_10_vs_50",
    ]);
    for (year, g) in cmp.gap.iter() {
        csv.row(&[
            year.to_string(),
            opt(dry.get(year)),
            opt(mid.get(year)),
            opt(wet.get(year)),
            num(g),
        ]);
    }
    Ok(Some(csv.file("humidity_band.csv")))
}

fn cmd_figures(args: &DataArgs, dt: f64) -> Result<Outcome, CliError> {
    let l = load(args, "figures")?;
    let c = calibrate(&l, DEFAULT_FIT_WINDOW, "figures")?;
    let peaks = peak_report(&l, &c, DEFAULT_FIT_WINDOW)?;

    let mut files = vec![energy_gdp_table(&l)?, metrics_table(&l, &METRIC_PERIODS)?];
    files.extend(fit_tables(&c, &l)?);
    files.extend(peak_tables(&peaks));
    files.push(intensity_table(&l)?);
    files.extend(humidity_table(&l)?);

    let sim = SimArgs {
        out: args.out.clone(),
        dt,
        g: REFERENCE_G,
        t_end: None,
        target: REFERENCE_TARGET,
    };
    let sweep =
        alpha_sweep(&DEFAULT_SWEEP_ALPHAS, &sim.config(0.5), REFERENCE_TARGET).ctx("figures")?;
    let unit_alpha = sweep
        .runs
        .iter()
        .find(|r| r.alpha == 1.0)
        .expect("default sweep includes alpha = 1");
    files.push(trajectory_table(&unit_alpha.trajectory, "simulation.csv"));
    files.extend(sweep_tables(&sweep));

    let (plane, _) = scenario_table(&l, c.fit.chi, &default_scenarios())?;
    files.push(plane);

    let names: Vec<&str> = files.iter().map(|f| f.name.as_str()).collect();
    Ok(Outcome {
        summary: format!(
            "{}\nwrote {} tables: {}",
            fit_summary_text(&c.fit),
            files.len(),
            names.join(", ")
        ),
        files,
        ..Outcome::default()
    })
}
