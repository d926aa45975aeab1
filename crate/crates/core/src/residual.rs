//! Energy-productivity residual: the part of GDP growth not explained by
//! primary energy, its calibration against cumulative energy use, and the
//! boom-and-bust structure of its annual growth.

use thiserror::Error;

use crate::series::{
    cumulative_integral, log_growth, moving_average, normalize, AnnualSeries, NormalizedSeries,
    SeriesError, Unit, Year,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ResidualError {
    #[error("base year {base} outside the common span {start}..={end}")]
    BaseOutsideOverlap { base: Year, start: Year, end: Year },
    #[error("fit window {from}..={to} has {points} point(s); at least 3 are required")]
    WindowTooShort { from: Year, to: Year, points: i64 },
    #[error("analysis window {from}..={to} is shorter than 5 years")]
    AnalysisWindowTooShort { from: Year, to: Year },
    #[error("window {from}..={to} not covered by the input series")]
    WindowOutsideData { from: Year, to: Year },
    #[error("cumulative energy is constant over the fit window")]
    DegenerateRegressor,
    #[error("residual must be positive to take its logarithm (year {year}, value {value})")]
    NonPositiveResidual { year: Year, value: f64 },
    #[error(transparent)]
    Series(#[from] SeriesError),
}

/// Log-space least-squares fit of the residual against cumulative energy.
#[derive(Debug, Clone, PartialEq)]
pub struct ResidualFit {
    /// Growth of ln A per unit of base-normalized cumulative energy, per year.
    pub chi: f64,
    /// Fitted ln A at zero cumulative energy.
    pub intercept: f64,
    pub r_squared: f64,
    pub base_year: Year,
    pub fit_start: Year,
    pub fit_end: Year,
    pub points: usize,
}

/// `A = (Y / Y_base) / (E / E_base)` on the common span of GDP and energy.
pub fn residual_a(
    gdp: &AnnualSeries,
    energy: &AnnualSeries,
    base_year: Year,
) -> Result<NormalizedSeries, ResidualError> {
    let start = gdp.start_year().max(energy.start_year());
    let end = gdp.end_year().min(energy.end_year());
    if base_year < start || base_year > end {
        return Err(ResidualError::BaseOutsideOverlap {
            base: base_year,
            start,
            end,
        });
    }
    let y = normalize(&gdp.slice(start, end)?, base_year)?;
    let e = normalize(&energy.slice(start, end)?, base_year)?;
    let mut values: Vec<f64> = y
        .values()
        .iter()
        .zip(e.values())
        .map(|(y, e)| y / e)
        .collect();
    values[(base_year - start) as usize] = 1.0;
    let series = AnnualSeries::new(start, values, Unit::Dimensionless)?;
    Ok(NormalizedSeries::from_parts(base_year, series))
}

/// Running trapezoid integral of energy normalized to `base_year`, starting
/// at zero in that year. Years before `base_year` are dropped.
pub fn cumulative_energy(
    energy: &AnnualSeries,
    base_year: Year,
) -> Result<AnnualSeries, ResidualError> {
    let tail = energy.slice(base_year, energy.end_year())?;
    let norm = normalize(&tail, base_year)?;
    Ok(cumulative_integral(&norm))
}

/// Ordinary least squares of `ln A` on cumulative energy over `window`
/// (inclusive). A perfectly flat residual gives `r_squared = 1`.
pub fn fit_chi(
    residual: &NormalizedSeries,
    cum_energy: &AnnualSeries,
    window: (Year, Year),
) -> Result<ResidualFit, ResidualError> {
    let (from, to) = window;
    let points = i64::from(to) - i64::from(from) + 1;
    if points < 3 {
        return Err(ResidualError::WindowTooShort { from, to, points });
    }
    let covered = |s: &AnnualSeries| s.contains(from) && s.contains(to);
    if !covered(residual) || !covered(cum_energy) {
        return Err(ResidualError::WindowOutsideData { from, to });
    }
    let mut xs = Vec::with_capacity(points as usize);
    let mut ys = Vec::with_capacity(points as usize);
    for year in from..=to {
        let a = residual.value_at(year)?;
        if a <= 0.0 {
            return Err(ResidualError::NonPositiveResidual { year, value: a });
        }
        xs.push(cum_energy.value_at(year)?);
        ys.push(a.ln());
    }
    let n = xs.len() as f64;
    let x_mean = xs.iter().sum::<f64>() / n;
    let y_mean = ys.iter().sum::<f64>() / n;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(&ys) {
        let dx = x - x_mean;
        let dy = y - y_mean;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    if sxx <= 0.0 {
        return Err(ResidualError::DegenerateRegressor);
    }
    let chi = sxy / sxx;
    let intercept = y_mean - chi * x_mean;
    let ss_res: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| {
            let r = y - (intercept + chi * x);
            r * r
        })
        .sum();
    let r_squared = if syy == 0.0 { 1.0 } else { 1.0 - ss_res / syy };
    Ok(ResidualFit {
        chi,
        intercept,
        r_squared,
        base_year: residual.base_year(),
        fit_start: from,
        fit_end: to,
        points: xs.len(),
    })
}

/// Knobs of the peak and dip detector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeakConfig {
    /// Minimum excess of the smoothed growth over the trend for a peak.
    pub peak_threshold: f64,
    /// Smoothed growth must fall below this for a dip.
    pub dip_threshold: f64,
    /// Odd width of the centered moving average.
    pub smoothing_window: usize,
    /// Detections fewer than this many years apart are merged.
    pub merge_distance: Year,
}

impl Default for PeakConfig {
    fn default() -> Self {
        Self {
            peak_threshold: 0.005,
            dip_threshold: -0.005,
            smoothing_window: 3,
            merge_distance: 3,
        }
    }
}

/// Annual residual growth, its smoothed version and the detected extremes.
#[derive(Debug, Clone, PartialEq)]
pub struct PeakReport {
    pub window: (Year, Year),
    /// Year-over-year `ΔA/A` on the window.
    pub growth: AnnualSeries,
    pub smoothed: AnnualSeries,
    /// Growth explained by energy alone, `chi × normalized energy`.
    pub trend: AnnualSeries,
    pub peak_years: Vec<Year>,
    pub dip_years: Vec<Year>,
}

/// Detects booms (smoothed growth well above trend) and busts (negative
/// smoothed growth) of the residual inside `window`.
///
/// Smoothing runs over the whole available growth series before restricting
/// to the window, so window edges see their true neighbours.
pub fn growth_structure(
    residual: &AnnualSeries,
    chi: f64,
    energy_norm: &AnnualSeries,
    window: (Year, Year),
    config: &PeakConfig,
) -> Result<PeakReport, ResidualError> {
    let (from, to) = window;
    if to - from + 1 < 5 {
        return Err(ResidualError::AnalysisWindowTooShort { from, to });
    }
    let growth_full = log_growth(residual)?;
    let smoothed_full = moving_average(&growth_full, config.smoothing_window)?;
    if !(growth_full.contains(from) && growth_full.contains(to))
        || !(energy_norm.contains(from) && energy_norm.contains(to))
    {
        return Err(ResidualError::WindowOutsideData { from, to });
    }
    let growth = growth_full.slice(from, to)?;
    let smoothed = smoothed_full.slice(from, to)?;
    let trend = energy_norm
        .slice(from, to)?
        .map(Unit::Dimensionless, |e| chi * e)?;

    let s = |y: Year| smoothed_full.get(y);
    let mut peaks = Vec::new();
    let mut dips = Vec::new();
    for year in from..=to {
        let v = s(year).expect("inside window");
        // Missing neighbours (data edges) do not block a detection.
        let left = s(year - 1);
        let right = s(year + 1);
        let is_max = left.is_none_or(|l| v > l) && right.is_none_or(|r| v >= r);
        let is_min = left.is_none_or(|l| v < l) && right.is_none_or(|r| v <= r);
        let excess = v - trend.value_at(year)?;
        if is_max && excess > config.peak_threshold {
            peaks.push((year, excess));
        }
        if is_min && v < config.dip_threshold {
            dips.push((year, -v));
        }
    }
    Ok(PeakReport {
        window,
        growth,
        smoothed,
        trend,
        peak_years: merge_close(peaks, config.merge_distance),
        dip_years: merge_close(dips, config.merge_distance),
    })
}

/// Among detections closer than `distance`, keeps the one with the larger score.
fn merge_close(found: Vec<(Year, f64)>, distance: Year) -> Vec<Year> {
    let mut kept: Vec<(Year, f64)> = Vec::new();
    for (year, score) in found {
        match kept.last_mut() {
            Some(last) if year - last.0 < distance => {
                if score > last.1 {
                    *last = (year, score);
                }
            }
            _ => kept.push((year, score)),
        }
    }
    kept.into_iter().map(|(y, _)| y).collect()
}

/// GDP implied by energy alone with an exponential residual:
/// `Y[y] = y_base × exp(chi × cumE[y]) × E[y] / E[base]`, where `cumE` is the
/// cumulative base-normalized energy counted from `base_year`.
pub fn model_gdp(
    energy: &AnnualSeries,
    chi: f64,
    base_year: Year,
    y_base: f64,
) -> Result<AnnualSeries, ResidualError> {
    let tail = energy.slice(base_year, energy.end_year())?;
    let e_norm = normalize(&tail, base_year)?;
    let cum = cumulative_integral(&e_norm);
    let values = e_norm
        .values()
        .iter()
        .zip(cum.values())
        .map(|(e, c)| y_base * (chi * c).exp() * e)
        .collect();
    Ok(AnnualSeries::new(
        base_year,
        values,
        Unit::TrillionUsd2011Ppp,
    )?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn energy(start: Year, end: Year, rate: f64) -> AnnualSeries {
        AnnualSeries::from_fn(start, end, Unit::EjPerYear, |y| {
            15.5 * (rate * f64::from(y - start)).exp()
        })
        .unwrap()
    }

    /// GDP whose residual is exactly `exp(chi × cumE)`.
    fn exact_gdp(e: &AnnualSeries, chi: f64) -> AnnualSeries {
        model_gdp(e, chi, e.start_year(), 1.2).unwrap()
    }

    #[test]
    fn proportional_gdp_gives_flat_residual() {
        let e = energy(1820, 1900, 0.01);
        let y = e.map(Unit::TrillionUsd2011Ppp, |v| 0.077 * v).unwrap();
        let a = residual_a(&y, &e, 1820).unwrap();
        assert_eq!(a.value_at(1820).unwrap(), 1.0);
        for &v in a.values() {
            assert_relative_eq!(v, 1.0, max_relative = 1e-14);
        }
    }

    #[test]
    fn residual_base_outside_overlap() {
        let e = energy(1820, 1900, 0.01);
        let y = energy(1850, 1950, 0.01)
            .with_unit(Unit::TrillionUsd2011Ppp)
            .unwrap();
        assert!(matches!(
            residual_a(&y, &e, 1820),
            Err(ResidualError::BaseOutsideOverlap { .. })
        ));
    }

    #[test]
    fn fit_recovers_planted_slope() {
        let chi0 = 0.0005;
        let e = energy(1820, 2016, 0.015);
        let y = exact_gdp(&e, chi0);
        let a = residual_a(&y, &e, 1820).unwrap();
        let cum = cumulative_energy(&e, 1820).unwrap();
        let fit = fit_chi(&a, &cum, (1926, 2016)).unwrap();
        assert!((fit.chi - chi0).abs() <= 1e-12 * chi0, "chi = {}", fit.chi);
        assert!((fit.r_squared - 1.0).abs() < 1e-12);
        assert!(fit.intercept.abs() < 1e-9);
        assert_eq!(fit.points, 91);
    }

    #[test]
    fn flat_residual_fits_zero() {
        let e = energy(1820, 1900, 0.01);
        let a = NormalizedSeries::from_parts(
            1820,
            AnnualSeries::new(1820, vec![1.0; 81], Unit::Dimensionless).unwrap(),
        );
        let cum = cumulative_energy(&e, 1820).unwrap();
        let fit = fit_chi(&a, &cum, (1830, 1900)).unwrap();
        assert_eq!(fit.chi, 0.0);
        assert_eq!(fit.intercept, 0.0);
        assert_eq!(fit.r_squared, 1.0);
    }

    #[test]
    fn fit_errors() {
        let e = energy(1820, 1900, 0.01);
        let y = exact_gdp(&e, 0.0005);
        let a = residual_a(&y, &e, 1820).unwrap();
        let cum = cumulative_energy(&e, 1820).unwrap();
        assert!(matches!(
            fit_chi(&a, &cum, (1850, 1851)),
            Err(ResidualError::WindowTooShort { points: 2, .. })
        ));
        assert!(matches!(
            fit_chi(&a, &cum, (1850, 1950)),
            Err(ResidualError::WindowOutsideData { .. })
        ));
        let flat = AnnualSeries::new(1820, vec![3.0; 81], Unit::Dimensionless).unwrap();
        assert_eq!(
            fit_chi(&a, &flat, (1850, 1860)),
            Err(ResidualError::DegenerateRegressor)
        );
    }

    #[test]
    fn exact_exponential_residual_has_no_structure() {
        let e = energy(1820, 2016, 0.016);
        let chi = 0.00046;
        let y = exact_gdp(&e, chi);
        let a = residual_a(&y, &e, 1820).unwrap();
        let e_norm = normalize(&e, 1820).unwrap();
        let r = growth_structure(&a, chi, &e_norm, (1926, 2016), &PeakConfig::default()).unwrap();
        assert!(r.peak_years.is_empty());
        assert!(r.dip_years.is_empty());
        assert_eq!(r.growth.len(), 91);
        assert_eq!(r.smoothed.start_year(), 1926);
    }

    #[test]
    fn planted_boom_and_bust_are_found() {
        let e = energy(1900, 2000, 0.02);
        let e_norm = normalize(&e, 1900).unwrap();
        let chi = 0.0005;
        // ln A: trend plus three years of 2% extra growth centred on 1950,
        // and a three-year 3% annual decline centred on 1970 with no rebound.
        let cum = cumulative_integral(&e_norm);
        let a = AnnualSeries::from_fn(1900, 2000, Unit::Dimensionless, |y| {
            let boom = 0.02 * f64::from((y - 1948).clamp(0, 3));
            let bust = -0.03 * f64::from((y - 1968).clamp(0, 3));
            (chi * cum.value_at(y).unwrap() + boom + bust).exp()
        })
        .unwrap();
        let r = growth_structure(&a, chi, &e_norm, (1910, 1990), &PeakConfig::default()).unwrap();
        assert_eq!(r.peak_years, vec![1950]);
        assert_eq!(r.dip_years, vec![1970]);
    }

    #[test]
    fn short_window_rejected() {
        let e = energy(1900, 2000, 0.02);
        let e_norm = normalize(&e, 1900).unwrap();
        let a = AnnualSeries::new(1900, vec![1.0; 101], Unit::Dimensionless).unwrap();
        assert!(matches!(
            growth_structure(&a, 0.0, &e_norm, (1950, 1953), &PeakConfig::default()),
            Err(ResidualError::AnalysisWindowTooShort { .. })
        ));
    }

    #[test]
    fn merge_keeps_strongest() {
        let merged = merge_close(vec![(1960, 0.01), (1962, 0.02), (1970, 0.01)], 3);
        assert_eq!(merged, vec![1962, 1970]);
        assert_eq!(merge_close(vec![(1960, 0.03), (1961, 0.02)], 3), vec![1960]);
    }

    #[test]
    fn model_with_zero_chi_is_scaled_energy() {
        let e = energy(1820, 1950, 0.013);
        let m = model_gdp(&e, 0.0, 1820, 1.2).unwrap();
        let e_norm = normalize(&e, 1820).unwrap();
        for (a, b) in m.values().iter().zip(e_norm.values()) {
            assert_eq!(*a, 1.2 * b);
        }
    }

    #[test]
    fn model_growth_matches_derivative_form() {
        // Historical-scale growth, where energy-driven residual growth stays
        // below energy growth itself.
        let rate = 0.015;
        let e = energy(1820, 2016, rate);
        let chi = 0.00046;
        let m = model_gdp(&e, chi, 1820, 1.2).unwrap();
        let dy = log_growth(&m).unwrap();
        let de = log_growth(&e).unwrap();
        let e_norm = normalize(&e, 1820).unwrap();
        for y in 1821..=2016 {
            let eps = e_norm.value_at(y).unwrap();
            let expected = de.value_at(y).unwrap() + chi * eps;
            let dev = (dy.value_at(y).unwrap() - expected).abs();
            assert!(dev < chi * eps * rate, "year {y}: deviation {dev}");
        }
    }

    proptest! {
        #[test]
        fn reconstruction_identity(
            e in prop::collection::vec(1.0f64..500.0, 5..80),
            k in prop::collection::vec(0.5f64..2.0, 5..80),
        ) {
            let n = e.len().min(k.len());
            let es = AnnualSeries::new(1820, e[..n].to_vec(), Unit::EjPerYear).unwrap();
            let ys = AnnualSeries::new(1820, e[..n].iter().zip(&k).map(|(a, b)| a * b).collect(), Unit::TrillionUsd2011Ppp).unwrap();
            let a = residual_a(&ys, &es, 1820).unwrap();
            let en = normalize(&es, 1820).unwrap();
            let y0 = ys.value_at(1820).unwrap();
            for i in 0..n {
                let back = a.values()[i] * en.values()[i] * y0;
                prop_assert!((back / ys.values()[i] - 1.0).abs() < 1e-14);
            }
        }

        #[test]
        fn fit_is_exact_on_log_linear_data(chi0 in 1e-5f64..5e-3, c in -0.5f64..0.5, rate in 0.005f64..0.03) {
            let e = energy(1820, 2016, rate);
            let cum = cumulative_energy(&e, 1820).unwrap();
            let a = AnnualSeries::from_fn(1820, 2016, Unit::Dimensionless, |y| (c + chi0 * cum.value_at(y).unwrap()).exp()).unwrap();
            let a = NormalizedSeries::from_parts(1820, a.map(Unit::Dimensionless, |v| v / c.exp()).unwrap());
            let fit = fit_chi(&a, &cum, (1926, 2016)).unwrap();
            prop_assert!((fit.chi / chi0 - 1.0).abs() < 1e-10);
            prop_assert!((fit.r_squared - 1.0).abs() < 1e-10);
        }

        #[test]
        fn fit_slope_invariant_under_gdp_scaling(scale in 0.1f64..10.0, chi0 in 1e-4f64..1e-3, rebase in 1821i32..2016) {
            let e = energy(1820, 2016, 0.015);
            let cum = cumulative_energy(&e, 1820).unwrap();
            let y = AnnualSeries::from_fn(1820, 2016, Unit::TrillionUsd2011Ppp, |yr| {
                let wobble = 1.0 + 0.02 * (f64::from(yr) * 0.7).sin();
                1.2 * e.value_at(yr).unwrap() * (chi0 * cum.value_at(yr).unwrap()).exp() * wobble
            }).unwrap();
            let ys = y.map(Unit::TrillionUsd2011Ppp, |v| v * scale).unwrap();
            let a = residual_a(&y, &e, 1820).unwrap();
            let f1 = fit_chi(&a, &cum, (1926, 2016)).unwrap();
            let f2 = fit_chi(&residual_a(&ys, &e, 1820).unwrap(), &cum, (1926, 2016)).unwrap();
            prop_assert!((f1.chi - f2.chi).abs() <= 1e-12 * f1.chi.abs());
            prop_assert!((f1.intercept - f2.intercept).abs() <= 1e-12);
            // A constant factor on the residual itself moves only the intercept.
            let shifted = normalize(&a, rebase).unwrap();
            let f3 = fit_chi(&shifted, &cum, (1926, 2016)).unwrap();
            let c = a.value_at(rebase).unwrap();
            prop_assert!((f3.chi - f1.chi).abs() <= 1e-10 * f1.chi.abs());
            prop_assert!((f3.intercept - (f1.intercept - c.ln())).abs() <= 1e-10);
        }

        #[test]
        fn peaks_invariant_under_global_scale(scale in 0.1f64..10.0, seed in 0u64..1000) {
            let e = energy(1900, 2000, 0.02);
            let e_norm = normalize(&e, 1900).unwrap();
            let a = AnnualSeries::from_fn(1900, 2000, Unit::Dimensionless, |y| {
                let t = f64::from(y) + seed as f64;
                (0.01 * f64::from(y - 1900) + 0.03 * (t * 0.9).sin()).exp()
            }).unwrap();
            let scaled = a.map(Unit::Dimensionless, |v| v * scale).unwrap();
            let cfg = PeakConfig::default();
            let r1 = growth_structure(&a, 0.0005, &e_norm, (1910, 1990), &cfg).unwrap();
            let r2 = growth_structure(&scaled, 0.0005, &e_norm, (1910, 1990), &cfg).unwrap();
            prop_assert_eq!(r1.peak_years, r2.peak_years);
            prop_assert_eq!(r1.dip_years, r2.dip_years);
        }
    }
}
