//! Forward projections of primary energy and GDP.
//!
//! A scenario starts from the historical state at an anchor year and steps
//! year by year through policy segments. Energy follows the policy, the
//! residual grows with cumulative normalized energy exactly as in the
//! historical analysis, and GDP follows from `Y/Y₀ = (A/A₀)(E/E₀)`.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::residual::{cumulative_energy, residual_a, ResidualError};
use crate::series::{AnnualSeries, Year};

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("scenario `{0}` has no segments")]
    NoSegments(String),
    #[error(
        "segment end years must increase strictly and exceed the anchor year {anchor}; got {end}"
    )]
    BadSegmentOrder { anchor: Year, end: Year },
    #[error("growth rate {0} is not a finite rate above -1")]
    BadRate(f64),
    #[error("anchor year {year} outside the historical span {start}..={end}")]
    AnchorOutsideHistory { year: Year, start: Year, end: Year },
    #[error("chi {0} must be finite and non-negative")]
    BadChi(f64),
    #[error("scenario `{name}` gives no chi and none was supplied from a fit")]
    MissingChi { name: String },
    #[error("cannot read scenario file {path}: {message}")]
    File { path: String, message: String },
    #[error(transparent)]
    Residual(#[from] ResidualError),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

/// Energy rule within one segment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "policy", rename_all = "snake_case", deny_unknown_fields)]
pub enum Policy {
    /// Energy compounds at `rate` per year.
    ExpEGrowth { rate: f64 },
    /// Energy frozen at its level when the segment starts.
    ConstantE,
    /// GDP frozen; energy then decays algebraically as efficiency keeps rising.
    ConstantY,
}

impl Policy {
    pub fn tag(&self) -> &'static str {
        match self {
            Policy::ExpEGrowth { .. } => "exp_e_growth",
            Policy::ConstantE => "constant_e",
            Policy::ConstantY => "constant_y",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    /// Last year (inclusive) governed by `policy`.
    pub end_year: Year,
    #[serde(flatten)]
    pub policy: Policy,
}

/// A named piecewise policy path, as read from a scenario file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSpec {
    pub name: String,
    pub anchor_year: Year,
    /// Residual growth per unit of cumulative normalized energy; taken from
    /// the historical fit when absent.
    #[serde(default)]
    pub chi: Option<f64>,
    /// Energy of the normalization base year in EJ/yr; taken from history
    /// when absent.
    #[serde(default)]
    pub e_base: Option<f64>,
    pub segments: Vec<Segment>,
}

/// A scenario file holds one or more `[[scenario]]` tables.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub scenario: Vec<ScenarioSpec>,
}

impl ScenarioFile {
    pub fn load(path: &Path) -> Result<Self, ScenarioError> {
        let file_err = |message: String| ScenarioError::File {
            path: path.display().to_string(),
            message,
        };
        let text = std::fs::read_to_string(path).map_err(|e| file_err(e.to_string()))?;
        let parsed: Self = toml::from_str(&text).map_err(|e| file_err(e.to_string()))?;
        for s in &parsed.scenario {
            s.validate()?;
        }
        Ok(parsed)
    }
}

impl ScenarioSpec {
    pub fn validate(&self) -> Result<(), ScenarioError> {
        if self.segments.is_empty() {
            return Err(ScenarioError::NoSegments(self.name.clone()));
        }
        let mut last = self.anchor_year;
        for seg in &self.segments {
            if seg.end_year <= last {
                return Err(ScenarioError::BadSegmentOrder {
                    anchor: self.anchor_year,
                    end: seg.end_year,
                });
            }
            last = seg.end_year;
            if let Policy::ExpEGrowth { rate } = seg.policy {
                if !(rate.is_finite() && rate > -1.0) {
                    return Err(ScenarioError::BadRate(rate));
                }
            }
        }
        if let Some(chi) = self.chi {
            if !(chi.is_finite() && chi >= 0.0) {
                return Err(ScenarioError::BadChi(chi));
            }
        }
        Ok(())
    }
}

pub const DEFAULT_ANCHOR_YEAR: Year = 2016;
pub const DEFAULT_TURN_YEAR: Year = 2040;
pub const DEFAULT_HORIZON: Year = 2100;
/// Energy growth of the last four decades, extrapolated.
pub const DEFAULT_BAU_RATE: f64 = 0.019;

/// Business as usual, and the two policy turns at the default turn year.
pub fn default_scenarios() -> Vec<ScenarioSpec> {
    let bau = Policy::ExpEGrowth {
        rate: DEFAULT_BAU_RATE,
    };
    let spec = |name: &str, segments: Vec<Segment>| ScenarioSpec {
        name: name.into(),
        anchor_year: DEFAULT_ANCHOR_YEAR,
        chi: None,
        e_base: None,
        segments,
    };
    let turn = |after: Policy| {
        vec![
            Segment {
                end_year: DEFAULT_TURN_YEAR,
                policy: bau,
            },
            Segment {
                end_year: DEFAULT_HORIZON,
                policy: after,
            },
        ]
    };
    vec![
        spec(
            "business_as_usual",
            vec![Segment {
                end_year: DEFAULT_HORIZON,
                policy: bau,
            }],
        ),
        spec("constant_pec", turn(Policy::ConstantE)),
        spec("constant_gdp", turn(Policy::ConstantY)),
    ]
}

/// Historical state a projection starts from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Anchors {
    pub year: Year,
    pub energy: f64,
    pub gdp: f64,
    pub residual: f64,
    /// Cumulative normalized energy since the base year.
    pub cum_energy: f64,
    pub base_year: Year,
    pub energy_base: f64,
}

impl Anchors {
    pub fn from_history(
        energy: &AnnualSeries,
        gdp: &AnnualSeries,
        base_year: Year,
        anchor_year: Year,
    ) -> Result<Self, ScenarioError> {
        let a = residual_a(gdp, energy, base_year)?;
        let cum = cumulative_energy(energy, base_year)?;
        let start = a.start_year().max(base_year);
        let end = a.end_year().min(cum.end_year());
        if anchor_year < start || anchor_year > end {
            return Err(ScenarioError::AnchorOutsideHistory {
                year: anchor_year,
                start,
                end,
            });
        }
        let get = |s: &AnnualSeries, y| s.get(y).expect("anchor inside checked span");
        Ok(Self {
            year: anchor_year,
            energy: get(energy, anchor_year),
            gdp: get(gdp, anchor_year),
            residual: get(&a, anchor_year),
            cum_energy: get(&cum, anchor_year),
            base_year,
            energy_base: get(energy, base_year),
        })
    }
}

/// Energy under constant GDP, `t` years after the turn:
/// `E = 1 / (1/E₀ + χ·t/E_base)`.
pub fn degrowth_e(t: f64, e0: f64, chi: f64, e_base: f64) -> f64 {
    1.0 / (1.0 / e0 + chi * t / e_base)
}

/// Cumulative normalized energy accrued `t` years into a constant-GDP
/// segment, the exact integral of [`degrowth_e`] divided by `E_base`.
fn degrowth_cum_energy(t: f64, e0: f64, chi: f64, e_base: f64) -> f64 {
    let x = chi * e0 * t / e_base;
    if chi == 0.0 {
        e0 * t / e_base
    } else {
        x.ln_1p() / chi
    }
}

/// Projected yearly states, the anchor year first.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectedPath {
    pub name: String,
    pub years: Vec<Year>,
    pub energy: Vec<f64>,
    pub gdp: Vec<f64>,
    pub residual: Vec<f64>,
    pub cum_energy: Vec<f64>,
    /// Policy in force for the step ending at each year; `anchor` on the first row.
    pub policy_tags: Vec<&'static str>,
}

impl ProjectedPath {
    pub fn value_at(&self, year: Year) -> Option<(f64, f64, f64)> {
        let i = self.years.iter().position(|&y| y == year)?;
        Some((self.energy[i], self.gdp[i], self.residual[i]))
    }
}

/// Steps the scenario forward from the anchors. `fallback_chi` is used when
/// the scenario carries no chi of its own.
pub fn project(
    spec: &ScenarioSpec,
    anchors: &Anchors,
    fallback_chi: Option<f64>,
) -> Result<ProjectedPath, ScenarioError> {
    spec.validate()?;
    if spec.anchor_year != anchors.year {
        return Err(ScenarioError::AnchorOutsideHistory {
            year: spec.anchor_year,
            start: anchors.year,
            end: anchors.year,
        });
    }
    let chi = spec
        .chi
        .or(fallback_chi)
        .ok_or_else(|| ScenarioError::MissingChi {
            name: spec.name.clone(),
        })?;
    if !(chi.is_finite() && chi >= 0.0) {
        return Err(ScenarioError::BadChi(chi));
    }
    let e_base = spec.e_base.unwrap_or(anchors.energy_base);

    let mut path = ProjectedPath {
        name: spec.name.clone(),
        years: vec![anchors.year],
        energy: vec![anchors.energy],
        gdp: vec![anchors.gdp],
        residual: vec![anchors.residual],
        cum_energy: vec![anchors.cum_energy],
        policy_tags: vec!["anchor"],
    };
    let push = |path: &mut ProjectedPath, year: Year, e: f64, cum: f64, tag: &'static str| {
        let a = anchors.residual * (chi * (cum - anchors.cum_energy)).exp();
        let y = anchors.gdp * (a / anchors.residual) * (e / anchors.energy);
        path.years.push(year);
        path.energy.push(e);
        path.gdp.push(y);
        path.residual.push(a);
        path.cum_energy.push(cum);
        path.policy_tags.push(tag);
    };

    let mut seg_start = anchors.year;
    for seg in &spec.segments {
        let e0 = *path.energy.last().expect("anchor row");
        let cum0 = *path.cum_energy.last().expect("anchor row");
        let tag = seg.policy.tag();
        match seg.policy {
            Policy::ExpEGrowth { .. } | Policy::ConstantE => {
                let rate = match seg.policy {
                    Policy::ExpEGrowth { rate } => rate,
                    _ => 0.0,
                };
                let mut cum = cum0;
                let mut prev = e0;
                for year in seg_start + 1..=seg.end_year {
                    let e = e0 * (1.0 + rate).powi(year - seg_start);
                    cum += 0.5 * (prev + e) / e_base;
                    prev = e;
                    push(&mut path, year, e, cum, tag);
                }
            }
            Policy::ConstantY => {
                for year in seg_start + 1..=seg.end_year {
                    let t = f64::from(year - seg_start);
                    let e = degrowth_e(t, e0, chi, e_base);
                    let cum = cum0 + degrowth_cum_energy(t, e0, chi, e_base);
                    push(&mut path, year, e, cum, tag);
                }
            }
        }
        seg_start = seg.end_year;
    }
    Ok(path)
}

/// One row of the energy-GDP plane table.
#[derive(Debug, Clone, PartialEq)]
pub struct PlaneRow {
    pub year: Year,
    pub energy: f64,
    pub gdp: f64,
    pub residual: f64,
    pub label: String,
}

/// Historical rows labelled `history` followed by each path's projected rows
/// (the anchor row is omitted since history already holds it).
pub fn export_plane(
    energy: &AnnualSeries,
    gdp: &AnnualSeries,
    base_year: Year,
    paths: &[ProjectedPath],
) -> Result<Vec<PlaneRow>, ScenarioError> {
    let a = residual_a(gdp, energy, base_year)?;
    let mut rows: Vec<PlaneRow> = a
        .iter()
        .map(|(year, r)| PlaneRow {
            year,
            energy: energy.get(year).expect("residual span inside energy"),
            gdp: gdp.get(year).expect("residual span inside gdp"),
            residual: r,
            label: "history".into(),
        })
        .collect();
    for p in paths {
        for i in 1..p.years.len() {
            rows.push(PlaneRow {
                year: p.years[i],
                energy: p.energy[i],
                gdp: p.gdp[i],
                residual: p.residual[i],
                label: p.name.clone(),
            });
        }
    }
    Ok(rows)
}

pub const PLANE_HEADER: [&str; 5] = ["year", "E_EJ_per_yr", "Y_trillion_USD2011", "A", "label"];

pub fn write_plane<W: Write>(rows: &[PlaneRow], writer: W) -> Result<(), ScenarioError> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(PLANE_HEADER)?;
    for r in rows {
        w.write_record([
            r.year.to_string(),
            r.energy.to_string(),
            r.gdp.to_string(),
            r.residual.to_string(),
            r.label.clone(),
        ])?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}
