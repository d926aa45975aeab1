//! Fixed-step numerical integration of the capital equations when the
//! residual productivity `A` grows with cumulative energy.
//!
//! Time is measured in units of the effective depreciation time `1/(δ+g)`,
//! and energy grows as `e^{gt}` in those units. Cumulative normalized energy
//! is then `(e^{gt} − 1)/g`, and `A(t) = exp(χ·cumE(t))` is evaluated in
//! closed form rather than integrated alongside the state.

use rayon::prelude::*;
use thiserror::Error;

use crate::balanced::{two_capital_output, two_capital_rhs, TwoCapitalParams};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("state became non-finite at t = {time}; reduce the step size")]
    Instability { time: f64 },
    #[error("could not bracket chi for target {target}: final output {reached} at chi = {chi}")]
    Bracketing { target: f64, chi: f64, reached: f64 },
    #[error("target {target} is below the zero-chi outcome {baseline}")]
    TargetBelowBaseline { target: f64, baseline: f64 },
    #[error("alpha sweep needs at least one alpha")]
    EmptySweep,
}

/// Energy growth per time unit used for the reference runs.
///
/// With the time unit set to the effective depreciation time, a yearly
/// depreciation near three times the historical energy growth puts `g` at a
/// quarter of `δ + g`.
pub const REFERENCE_G: f64 = 0.25;

/// Growth of primary energy over the historical period the reference runs
/// reproduce (about 15.5 to 600 EJ/yr).
pub const REFERENCE_ENERGY_RATIO: f64 = 40.0;

/// Growth of output per unit of energy over the same period.
pub const REFERENCE_TARGET: f64 = 2.3;

pub const DEFAULT_DT: f64 = 0.01;

/// Horizon over which energy growing at `g` multiplies by `ratio`.
pub fn horizon_for_energy_ratio(ratio: f64, g: f64) -> f64 {
    ratio.ln() / g
}

/// Horizon over which the cumulative normalized energy `(e^{gt} − 1)/g`
/// reaches `cum_energy`.
pub fn horizon_for_cumulative_energy(cum_energy: f64, g: f64) -> f64 {
    if g == 0.0 {
        cum_energy
    } else {
        (g * cum_energy).ln_1p() / g
    }
}

/// Cumulative normalized energy at time `t`.
pub fn cumulative_energy_at(t: f64, g: f64) -> f64 {
    if g == 0.0 {
        t
    } else {
        (g * t).exp_m1() / g
    }
}

/// Residual productivity at time `t`, `exp(χ·cumE(t))`.
pub fn residual_at(t: f64, chi: f64, g: f64) -> f64 {
    (chi * cumulative_energy_at(t, g)).exp()
}

/// One classical fourth-order Runge-Kutta step.
pub fn rk4_step<const N: usize>(
    f: &impl Fn(f64, &[f64; N]) -> [f64; N],
    t: f64,
    x: &[f64; N],
    h: f64,
) -> [f64; N] {
    let add = |a: &[f64; N], b: &[f64; N], s: f64| -> [f64; N] {
        std::array::from_fn(|i| a[i] + s * b[i])
    };
    let k1 = f(t, x);
    let k2 = f(t + 0.5 * h, &add(x, &k1, 0.5 * h));
    let k3 = f(t + 0.5 * h, &add(x, &k2, 0.5 * h));
    let k4 = f(t + h, &add(x, &k3, h));
    std::array::from_fn(|i| x[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
}

/// Integrates from 0 to `t_end` with the step shrunk slightly so that a whole
/// number of steps lands exactly on `t_end`. `observe` sees every sample,
/// including the initial one.
pub fn integrate_rk4<const N: usize>(
    f: impl Fn(f64, &[f64; N]) -> [f64; N],
    x0: [f64; N],
    t_end: f64,
    dt: f64,
    mut observe: impl FnMut(f64, &[f64; N]),
) -> Result<[f64; N], SimError> {
    let steps = ((t_end / dt).round() as usize).max(1);
    let h = t_end / steps as f64;
    let mut x = x0;
    observe(0.0, &x);
    for i in 0..steps {
        let t = i as f64 * h;
        x = rk4_step(&f, t, &x, h);
        let t_next = if i + 1 == steps {
            t_end
        } else {
            (i + 1) as f64 * h
        };
        if x.iter().any(|v| !v.is_finite()) {
            return Err(SimError::Instability { time: t_next });
        }
        observe(t_next, &x);
    }
    Ok(x)
}

/// Settings of a single-capital run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimConfig {
    /// Capital elasticity in `[0, 1]`.
    pub alpha: f64,
    /// Residual growth per unit of cumulative energy, per time unit.
    pub chi: f64,
    /// Energy growth per time unit.
    pub g: f64,
    pub t_end: f64,
    pub dt: f64,
    /// Normalized savings rate; 1 in the reference normalization.
    pub saving: f64,
    /// Effective depreciation `δ + g`; 1 in the reference normalization.
    pub decay: f64,
}

impl SimConfig {
    /// Reference normalization: `s = δ + g = 1`, `g = 0.25`, and a horizon
    /// over which energy grows fortyfold.
    pub fn reference(alpha: f64) -> Self {
        Self {
            alpha,
            chi: 0.0,
            g: REFERENCE_G,
            t_end: horizon_for_energy_ratio(REFERENCE_ENERGY_RATIO, REFERENCE_G),
            dt: DEFAULT_DT,
            saving: 1.0,
            decay: 1.0,
        }
    }

    pub fn with_chi(self, chi: f64) -> Self {
        Self { chi, ..self }
    }

    pub fn with_alpha(self, alpha: f64) -> Self {
        Self { alpha, ..self }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |m: String| Err(SimError::InvalidConfig(m));
        if !(0.0..=1.0).contains(&self.alpha) {
            return bad(format!("alpha {} outside [0, 1]", self.alpha));
        }
        if !(self.chi.is_finite() && self.chi >= 0.0) {
            return bad(format!("chi {} must be finite and non-negative", self.chi));
        }
        if !(self.g.is_finite() && self.g >= 0.0) {
            return bad(format!("g {} must be finite and non-negative", self.g));
        }
        if !(self.t_end.is_finite() && self.t_end > 0.0) {
            return bad(format!("t_end {} must be positive", self.t_end));
        }
        if !(self.dt > 0.0 && self.dt <= self.t_end / 10.0) {
            return bad(format!("dt {} must lie in (0, t_end/10]", self.dt));
        }
        if !(self.saving.is_finite()
            && self.saving > 0.0
            && self.decay.is_finite()
            && self.decay > 0.0)
        {
            return bad("saving and decay must be positive".into());
        }
        Ok(())
    }
}

/// Sampled single-capital run.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub alpha: f64,
    pub times: Vec<f64>,
    pub y_eps: Vec<f64>,
    pub j_eps: Vec<f64>,
    pub a: Vec<f64>,
    pub cum_e: Vec<f64>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn final_y(&self) -> f64 {
        *self.y_eps.last().expect("trajectory has samples")
    }

    pub fn final_j(&self) -> f64 {
        *self.j_eps.last().expect("trajectory has samples")
    }
}

/// Integrates `dj/dt = s·y − (δ+g)·j` with `y = A(t)·j^α` from the balanced
/// start `j(0) = 1`.
pub fn simulate_b13(cfg: &SimConfig) -> Result<Trajectory, SimError> {
    cfg.validate()?;
    let SimConfig {
        alpha,
        chi,
        g,
        saving,
        decay,
        ..
    } = *cfg;
    let rhs = |t: f64, x: &[f64; 1]| {
        let y = residual_at(t, chi, g) * x[0].powf(alpha);
        [saving * y - decay * x[0]]
    };
    let cap = ((cfg.t_end / cfg.dt).round() as usize).max(1) + 1;
    let mut tr = Trajectory {
        alpha,
        times: Vec::with_capacity(cap),
        y_eps: Vec::with_capacity(cap),
        j_eps: Vec::with_capacity(cap),
        a: Vec::with_capacity(cap),
        cum_e: Vec::with_capacity(cap),
    };
    integrate_rk4(rhs, [1.0], cfg.t_end, cfg.dt, |t, x| {
        let cum = cumulative_energy_at(t, g);
        let a = (chi * cum).exp();
        tr.times.push(t);
        tr.j_eps.push(x[0]);
        tr.a.push(a);
        tr.cum_e.push(cum);
        tr.y_eps.push(a * x[0].powf(alpha));
    })?;
    Ok(tr)
}

/// Final normalized output; overflow counts as "above any target".
fn final_output(cfg: &SimConfig) -> Result<f64, SimError> {
    match simulate_b13(cfg) {
        Ok(tr) => Ok(tr.final_y()),
        Err(SimError::Instability { .. }) => Ok(f64::INFINITY),
        Err(e) => Err(e),
    }
}

/// Finds the `chi` for which the run described by `base` ends with normalized
/// output equal to `target`. Bisection on a bracket that doubles its upper
/// end until it straddles the target; final output rises strictly with chi.
/// The `chi` field of `base` is ignored.
pub fn calibrate_chi_alpha(base: &SimConfig, target: f64) -> Result<f64, SimError> {
    let run = |chi: f64| final_output(&base.with_chi(chi));
    let baseline = run(0.0)?;
    if !(target.is_finite()) {
        return Err(SimError::InvalidConfig(format!(
            "target {target} must be finite"
        )));
    }
    if target == baseline {
        return Ok(0.0);
    }
    if target < baseline {
        return Err(SimError::TargetBelowBaseline { target, baseline });
    }
    let mut lo = 0.0;
    let mut hi = 1e-3;
    let mut reached = run(hi)?;
    let mut expansions = 0;
    while reached < target {
        lo = hi;
        hi *= 2.0;
        expansions += 1;
        reached = run(hi)?;
        if expansions > 80 {
            return Err(SimError::Bracketing {
                target,
                chi: hi,
                reached,
            });
        }
    }
    // Bisect to the resolution of f64 on chi itself, which also meets any
    // reasonable tolerance on the output.
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if run(mid)? < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let (y_lo, y_hi) = (run(lo)?, run(hi)?);
    Ok(if (target - y_lo).abs() <= (y_hi - target).abs() {
        lo
    } else {
        hi
    })
}

/// One member of an alpha sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRun {
    pub alpha: f64,
    pub chi: f64,
    pub trajectory: Trajectory,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub runs: Vec<SweepRun>,
    /// Largest relative distance `|y_a − y_b| / min(y_a, y_b)` over all pairs
    /// and sample times.
    pub max_gap: f64,
    /// Alphas of the pair attaining `max_gap`, and the time where it occurs.
    pub worst_pair: (f64, f64),
    pub worst_time: f64,
}

/// Relative distance between two positive outputs, symmetric in its inputs.
pub fn relative_gap(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.min(b)
}

/// Calibrates and simulates every alpha (in parallel), then measures how far
/// apart the output paths are.
pub fn alpha_sweep(alphas: &[f64], base: &SimConfig, target: f64) -> Result<SweepResult, SimError> {
    if alphas.is_empty() {
        return Err(SimError::EmptySweep);
    }
    let runs = alphas
        .par_iter()
        .map(|&alpha| {
            let cfg = base.with_alpha(alpha);
            let chi = calibrate_chi_alpha(&cfg, target)?;
            let trajectory = simulate_b13(&cfg.with_chi(chi))?;
            Ok(SweepRun {
                alpha,
                chi,
                trajectory,
            })
        })
        .collect::<Result<Vec<_>, SimError>>()?;

    let mut max_gap = 0.0;
    let mut worst_pair = (alphas[0], alphas[0]);
    let mut worst_time = 0.0;
    for (i, a) in runs.iter().enumerate() {
        for b in &runs[i + 1..] {
            let ta = &a.trajectory;
            let tb = &b.trajectory;
            for k in 0..ta.len().min(tb.len()) {
                let gap = relative_gap(ta.y_eps[k], tb.y_eps[k]);
                if gap > max_gap {
                    max_gap = gap;
                    worst_pair = (a.alpha, b.alpha);
                    worst_time = ta.times[k];
                }
            }
        }
    }
    Ok(SweepResult {
        runs,
        max_gap,
        worst_pair,
        worst_time,
    })
}

/// How the residual evolves in a two-capital run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ResidualMode {
    /// `A ≡ 1`: pure capital dynamics, converging to the fixed point.
    ConstantOne,
    /// `A = exp(χ·cumE)` with energy growing at the parameters' `g`. An
    /// extension: the growing residual is otherwise studied with one capital.
    ChiDriven { chi: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct TwoCapitalTrajectory {
    pub times: Vec<f64>,
    pub y_eps: Vec<f64>,
    pub k_eps: Vec<f64>,
    pub h_eps: Vec<f64>,
    pub a: Vec<f64>,
}

impl TwoCapitalTrajectory {
    pub fn final_state(&self) -> (f64, f64, f64) {
        let n = self.times.len() - 1;
        (self.k_eps[n], self.h_eps[n], self.y_eps[n])
    }
}

/// Integrates the two-capital system from `k = h = 1`. Time and rates share
/// the units of `p`.
pub fn simulate_b3(
    p: &TwoCapitalParams,
    mode: ResidualMode,
    t_end: f64,
    dt: f64,
) -> Result<TwoCapitalTrajectory, SimError> {
    p.validate()
        .map_err(|e| SimError::InvalidConfig(e.to_string()))?;
    if !(t_end.is_finite() && t_end > 0.0 && dt > 0.0 && dt <= t_end / 10.0) {
        return Err(SimError::InvalidConfig(format!(
            "need t_end > 0 and 0 < dt <= t_end/10, got t_end = {t_end}, dt = {dt}"
        )));
    }
    let chi = match mode {
        ResidualMode::ConstantOne => 0.0,
        ResidualMode::ChiDriven { chi } if chi.is_finite() && chi >= 0.0 => chi,
        ResidualMode::ChiDriven { chi } => {
            return Err(SimError::InvalidConfig(format!(
                "chi {chi} must be non-negative"
            )))
        }
    };
    let g = p.g;
    let a_of = |t: f64| {
        if chi == 0.0 {
            1.0
        } else {
            residual_at(t, chi, g)
        }
    };
    let rhs = |t: f64, x: &[f64; 2]| {
        let (dk, dh) = two_capital_rhs(x[0], x[1], a_of(t), p);
        [dk, dh]
    };
    let mut tr = TwoCapitalTrajectory {
        times: Vec::new(),
        y_eps: Vec::new(),
        k_eps: Vec::new(),
        h_eps: Vec::new(),
        a: Vec::new(),
    };
    integrate_rk4(rhs, [1.0, 1.0], t_end, dt, |t, x| {
        let a = a_of(t);
        tr.times.push(t);
        tr.k_eps.push(x[0]);
        tr.h_eps.push(x[1]);
        tr.a.push(a);
        tr.y_eps.push(two_capital_output(x[0], x[1], a, p));
    })?;
    Ok(tr)
}
