//! End-to-end checks of the command-line surface, both in process through
//! `execute` and through the built binary for exit codes.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use energy_growth::cli::{execute, CliError};
use energy_growth::ingest::{write_breakdown, write_series, EnergyBreakdown};
use energy_growth::residual::cumulative_energy;
use energy_growth::{AnnualSeries, Unit};
use tempfile::TempDir;

fn fixture_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/fixtures")
}

fn fixture_manifest() -> PathBuf {
    fixture_dir().join("manifest.toml")
}

fn binary(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_energy-growth"))
        .args(args)
        .output()
        .expect("binary runs")
}

/// Copies the fixture tables into a scratch directory so single files can be
/// corrupted without touching the originals.
fn scratch_copy() -> TempDir {
    let dir = tempfile::tempdir().unwrap();
    for entry in fs::read_dir(fixture_dir()).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "csv" || e == "toml") {
            fs::copy(&path, dir.path().join(path.file_name().unwrap())).unwrap();
        }
    }
    dir
}

fn rewrite_line(path: &Path, year: &str, edit: impl Fn(&str) -> Option<String>) {
    let text = fs::read_to_string(path).unwrap();
    let lines: Vec<String> = text
        .lines()
        .filter_map(|l| {
            if l.starts_with(&format!("{year},")) {
                edit(l)
            } else {
                Some(l.to_owned())
            }
        })
        .collect();
    fs::write(path, lines.join("\n") + "\n").unwrap();
}

#[test]
fn validate_fixture_reports_zero_violations() {
    let out = binary(&[
        "validate",
        "--manifest",
        fixture_manifest().to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("total violations: 0"), "{stdout}");
    for table in ["pec", "gdp", "population", "biomass_mass"] {
        assert!(stdout.contains(&format!("table {table}:")), "{stdout}");
    }
}

#[test]
fn validate_names_the_gap_year() {
    let dir = scratch_copy();
    rewrite_line(&dir.path().join("gdp.csv"), "1901", |_| None);
    let out = binary(&[
        "validate",
        "--manifest",
        dir.path().join("manifest.toml").to_str().unwrap(),
    ]);
    assert!(!out.status.success());
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("1901 is missing"), "{stderr}");
}

#[test]
fn validate_names_row_and_column_of_negative_coal() {
    let dir = scratch_copy();
    let pec = dir.path().join("pec_breakdown.csv");
    rewrite_line(&pec, "1830", |l| {
        let mut cells: Vec<&str> = l.split(',').collect();
        cells[4] = "-1.5";
        Some(cells.join(","))
    });
    let out = binary(&[
        "validate",
        "--manifest",
        dir.path().join("manifest.toml").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&out.stderr);
    // Header is line 1, so 1830 sits on line 12.
    assert!(
        stderr.contains("line 12, column `coal`: negative value -1.5"),
        "{stderr}"
    );
}

#[test]
fn metrics_reports_post_war_rates() {
    let out = tempfile::tempdir().unwrap();
    let outcome = execute([
        "energy-growth",
        "metrics",
        "--manifest",
        fixture_manifest().to_str().unwrap(),
        "--out",
        out.path().to_str().unwrap(),
        "--periods",
        "1950:1980",
    ])
    .unwrap();
    let text = fs::read_to_string(out.path().join("growth_metrics.csv")).unwrap();
    assert_eq!(text, outcome.files[0].contents);
    let row = text
        .lines()
        .find(|l| l.starts_with("cagr,1950,1980,"))
        .expect("period row");
    let rates: Vec<f64> = row.split(',').skip(3).map(|v| v.parse().unwrap()).collect();
    for (got, want) in rates.iter().zip([0.037, 0.019, 0.045]) {
        assert!((got - want).abs() <= 0.001, "{row}");
    }
}

#[test]
fn metrics_rejects_single_year_period() {
    let err = execute([
        "energy-growth",
        "metrics",
        "--manifest",
        fixture_manifest().to_str().unwrap(),
        "--periods",
        "1950:1950",
    ])
    .unwrap_err();
    assert!(!matches!(err, CliError::ValidationFailed { .. }));
}

#[test]
fn fit_on_fixture_lands_in_range() {
    let out = tempfile::tempdir().unwrap();
    let outcome = execute([
        "energy-growth",
        "fit",
        "--manifest",
        fixture_manifest().to_str().unwrap(),
        "--out",
        out.path().to_str().unwrap(),
    ])
    .unwrap();
    assert!(out.path().join("A_vs_cumE.csv").exists());
    assert!(out.path().join("fit_summary.csv").exists());
    let chi: f64 = outcome.summary["chi = ".len()..]
        .split(' ')
        .next()
        .unwrap()
        .parse()
        .unwrap();
    assert!((0.00040..=0.00052).contains(&chi), "{}", outcome.summary);
}

/// Manifest whose residual is an exact exponential of cumulative energy.
fn synthetic_manifest(dir: &Path, chi: f64) -> PathBuf {
    let n = 2016 - 1820 + 1;
    let energy: Vec<f64> = (0..n).map(|i| 15.0 * (0.012 * i as f64).exp()).collect();
    let total = AnnualSeries::new(1820, energy.clone(), Unit::EjPerYear).unwrap();
    let cum = cumulative_energy(&total, 1820).unwrap();
    let gdp: Vec<f64> = energy
        .iter()
        .zip(cum.values())
        .map(|(e, c)| 1.1 * (chi * c).exp() * e / energy[0])
        .collect();
    let zeros = vec![0.0; n];
    let columns = [
        energy,
        zeros.clone(),
        zeros.clone(),
        zeros.clone(),
        zeros.clone(),
        zeros.clone(),
        zeros.clone(),
        zeros,
    ];
    let pec = EnergyBreakdown::new(1820, columns).unwrap();
    write_breakdown(&pec, fs::File::create(dir.join("pec.csv")).unwrap()).unwrap();
    let gdp = AnnualSeries::new(1820, gdp, Unit::TrillionUsd2011Ppp).unwrap();
    write_series(
        &gdp,
        "value",
        fs::File::create(dir.join("gdp.csv")).unwrap(),
    )
    .unwrap();
    let pop = AnnualSeries::from_fn(1820, 2016, Unit::Persons, |y| {
        1e9 + 1e7 * f64::from(y - 1820)
    })
    .unwrap();
    write_series(
        &pop,
        "value",
        fs::File::create(dir.join("pop.csv")).unwrap(),
    )
    .unwrap();
    let manifest = dir.join("manifest.toml");
    fs::write(
        &manifest,
        r#"[pec]
path = "pec.csv"
unit = "EJ_per_year"
provenance = "synthetic"

[gdp]
path = "gdp.csv"
unit = "trillion_USD2011_PPP"
provenance = "synthetic"

[population]
path = "pop.csv"
unit = "persons"
provenance = "synthetic"
"#,
    )
    .unwrap();
    manifest
}

#[test]
fn fit_on_exact_exponential_reports_unit_r_squared() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = synthetic_manifest(dir.path(), 4.6e-4);
    let outcome = execute([
        "energy-growth",
        "fit",
        "--manifest",
        manifest.to_str().unwrap(),
        "--out",
        dir.path().join("out").to_str().unwrap(),
    ])
    .unwrap();
    let r2: f64 = outcome
        .summary
        .split("r_squared = ")
        .nth(1)
        .unwrap()
        .split(',')
        .next()
        .unwrap()
        .parse()
        .unwrap();
    assert!((r2 - 1.0).abs() < 1e-12, "{}", outcome.summary);
}

#[test]
fn two_year_fit_window_is_a_usage_error() {
    let out = binary(&[
        "fit",
        "--manifest",
        fixture_manifest().to_str().unwrap(),
        "--window",
        "2000:2001",
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn malformed_window_is_a_usage_error() {
    let out = binary(&["fit", "--window", "1926-2016"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn peaks_on_fixture_match_most_marked_years() {
    let out = tempfile::tempdir().unwrap();
    execute([
        "energy-growth",
        "peaks",
        "--manifest",
        fixture_manifest().to_str().unwrap(),
        "--out",
        out.path().to_str().unwrap(),
    ])
    .unwrap();
    let text = fs::read_to_string(out.path().join("peaks.csv")).unwrap();
    let peaks: Vec<i32> = text
        .lines()
        .skip(1)
        .filter(|l| l.starts_with("peak,"))
        .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
        .collect();
    let hits = [1964, 1974, 1980, 1997, 2006]
        .iter()
        .filter(|&&y| peaks.iter().any(|p| (p - y).abs() <= 1))
        .count();
    assert!(hits >= 4, "{peaks:?}");
}

#[test]
fn sweep_over_three_alphas_reports_gap_below_three_percent() {
    let out = tempfile::tempdir().unwrap();
    execute([
        "energy-growth",
        "sweep",
        "--alphas",
        "0,0.5,1",
        "--out",
        out.path().to_str().unwrap(),
    ])
    .unwrap();
    let text = fs::read_to_string(out.path().join("alpha_sweep_gap.csv")).unwrap();
    let gap: f64 = text
        .lines()
        .find_map(|l| l.strip_prefix("max_gap,"))
        .unwrap()
        .parse()
        .unwrap();
    assert!(gap < 0.03, "max gap {gap}");
}

#[test]
fn default_scenarios_coincide_at_the_turn() {
    let out = tempfile::tempdir().unwrap();
    execute([
        "energy-growth",
        "scenario",
        "--manifest",
        fixture_manifest().to_str().unwrap(),
        "--out",
        out.path().to_str().unwrap(),
    ])
    .unwrap();
    let text = fs::read_to_string(out.path().join("scenarios.csv")).unwrap();
    let at_turn: Vec<(String, String, String)> = text
        .lines()
        .filter(|l| l.starts_with("2040,"))
        .map(|l| {
            let c: Vec<&str> = l.split(',').collect();
            (c[1].to_owned(), c[2].to_owned(), c[4].to_owned())
        })
        .collect();
    assert_eq!(at_turn.len(), 3, "{at_turn:?}");
    assert!(
        at_turn
            .iter()
            .all(|r| r.0 == at_turn[0].0 && r.1 == at_turn[0].1),
        "{at_turn:?}"
    );
}

#[test]
fn failed_command_leaves_no_output_directory() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let status = binary(&[
        "fit",
        "--manifest",
        dir.path().join("missing.toml").to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(status.status.code(), Some(1));
    assert!(!out.exists());
}
