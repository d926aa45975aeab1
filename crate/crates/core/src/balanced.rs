//! Closed-form capital dynamics in energy-normalized variables.
//!
//! All quantities are ratios to their value at the base year and divided by
//! normalized energy, so a balanced economy sits at 1. With one capital
//! factor the normalized capital `j` obeys `dj/dt = s·j^α − (δ+g)·j` and
//! normalized output is `y = j^α`. With two capital factors (physical `k`,
//! human `h`) output is `y = k^α·h^β` and each factor accumulates from its own
//! savings rate.
//!
//! Savings rates here are always the normalized ones, i.e. the raw saving
//! share divided by the base-year capital-to-output ratio.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BalancedError {
    #[error("alpha = {0} must lie in (0, 1]")]
    AlphaOutOfRange(f64),
    #[error("alpha = {alpha}, beta = {beta}: both must lie in (0, 1) with alpha + beta < 1")]
    ElasticitiesOutOfRange { alpha: f64, beta: f64 },
    #[error("parameter `{name}` = {value} is not admissible")]
    InvalidParameter { name: &'static str, value: f64 },
    #[error("time {0} must be finite and non-negative")]
    InvalidTime(f64),
    #[error("no finite fixed point when alpha = 1")]
    NoFixedPointAtUnitAlpha,
    #[error("beta must be positive to infer human-capital growth")]
    ZeroBeta,
}

fn positive(name: &'static str, value: f64) -> Result<f64, BalancedError> {
    if value.is_finite() && value > 0.0 {
        Ok(value)
    } else {
        Err(BalancedError::InvalidParameter { name, value })
    }
}

fn non_negative(name: &'static str, value: f64) -> Result<f64, BalancedError> {
    if value.is_finite() && value >= 0.0 {
        Ok(value)
    } else {
        Err(BalancedError::InvalidParameter { name, value })
    }
}

/// One capital factor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SingleCapitalParams {
    alpha: f64,
    s: f64,
    delta: f64,
    g: f64,
}

impl SingleCapitalParams {
    /// `s` is the normalized savings rate, `delta` depreciation and `g`
    /// energy growth, all per year.
    pub fn new(alpha: f64, s: f64, delta: f64, g: f64) -> Result<Self, BalancedError> {
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(BalancedError::AlphaOutOfRange(alpha));
        }
        Ok(Self {
            alpha,
            s: positive("s", s)?,
            delta: positive("delta", delta)?,
            g: non_negative("g", g)?,
        })
    }

    /// Builds from a raw saving share and the base-year capital-to-output
    /// ratio.
    pub fn from_saving_share(
        alpha: f64,
        saving_share: f64,
        capital_output_ratio: f64,
        delta: f64,
        g: f64,
    ) -> Result<Self, BalancedError> {
        let ratio = positive("capital_output_ratio", capital_output_ratio)?;
        Self::new(
            alpha,
            positive("saving_share", saving_share)? / ratio,
            delta,
            g,
        )
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn g(&self) -> f64 {
        self.g
    }

    /// Effective depreciation `δ + g`.
    pub fn effective_decay(&self) -> f64 {
        self.delta + self.g
    }
}

/// Right-hand side of the single-capital equation, `s·j^α − (δ+g)·j`.
pub fn single_rhs(j: f64, p: &SingleCapitalParams) -> f64 {
    p.s * j.powf(p.alpha) - p.effective_decay() * j
}

fn check_time(t: f64) -> Result<(), BalancedError> {
    if t.is_finite() && t >= 0.0 {
        Ok(())
    } else {
        Err(BalancedError::InvalidTime(t))
    }
}

/// Exact normalized capital at time `t` from the balanced start `j(0) = 1`.
///
/// For `α < 1` the substitution `φ = j^(1−α)` makes the equation linear,
/// giving `j = (e^{−λt} + r(1 − e^{−λt}))^{1/(1−α)}` with `λ = (1−α)(δ+g)`
/// and `r = s/(δ+g)`. At `α = 1` the equation is already linear and
/// [`j_epsilon_unit_alpha`] gives its solution.
pub fn j_epsilon_exact(t: f64, p: &SingleCapitalParams) -> Result<f64, BalancedError> {
    check_time(t)?;
    if p.alpha == 1.0 {
        return j_epsilon_unit_alpha(t, p);
    }
    let decay = p.effective_decay();
    let ratio = p.s / decay;
    let one_minus = 1.0 - p.alpha;
    // 1 + (r − 1)(1 − e^{−λt}), written with expm1 to keep precision at small t.
    let base = 1.0 - (ratio - 1.0) * (-one_minus * decay * t).exp_m1();
    Ok(base.powf(1.0 / one_minus))
}

/// Solution of the linear case `dj/dt = (s − δ − g)·j`, i.e. `e^{(s−δ−g)t}`.
pub fn j_epsilon_unit_alpha(t: f64, p: &SingleCapitalParams) -> Result<f64, BalancedError> {
    check_time(t)?;
    Ok(((p.s - p.effective_decay()) * t).exp())
}

/// Normalized output `j^α`.
pub fn y_epsilon_exact(t: f64, p: &SingleCapitalParams) -> Result<f64, BalancedError> {
    Ok(j_epsilon_exact(t, p)?.powf(p.alpha))
}

/// Balanced-growth levels for one capital factor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SingleFixedPoint {
    pub j_star: f64,
    pub y_star: f64,
    /// `j*/y* = s/(δ+g)`, the same for every α.
    pub capital_output_ratio: f64,
}

pub fn fixed_point_single(p: &SingleCapitalParams) -> Result<SingleFixedPoint, BalancedError> {
    if p.alpha == 1.0 {
        return Err(BalancedError::NoFixedPointAtUnitAlpha);
    }
    let ratio = p.s / p.effective_decay();
    let one_minus = 1.0 - p.alpha;
    Ok(SingleFixedPoint {
        j_star: ratio.powf(1.0 / one_minus),
        y_star: ratio.powf(p.alpha / one_minus),
        capital_output_ratio: ratio,
    })
}

/// Physical and human capital.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoCapitalParams {
    pub alpha: f64,
    pub beta: f64,
    pub sigma_k: f64,
    pub sigma_h: f64,
    pub delta_k: f64,
    pub delta_h: f64,
    pub g: f64,
}

impl TwoCapitalParams {
    pub fn new(
        alpha: f64,
        beta: f64,
        sigma_k: f64,
        sigma_h: f64,
        delta_k: f64,
        delta_h: f64,
        g: f64,
    ) -> Result<Self, BalancedError> {
        let p = Self {
            alpha,
            beta,
            sigma_k,
            sigma_h,
            delta_k,
            delta_h,
            g,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), BalancedError> {
        let (a, b) = (self.alpha, self.beta);
        let in_unit = |x: f64| x > 0.0 && x < 1.0;
        if !(in_unit(a) && in_unit(b) && a + b < 1.0) {
            return Err(BalancedError::ElasticitiesOutOfRange { alpha: a, beta: b });
        }
        positive("sigma_k", self.sigma_k)?;
        positive("sigma_h", self.sigma_h)?;
        positive("delta_k", self.delta_k)?;
        positive("delta_h", self.delta_h)?;
        non_negative("g", self.g)?;
        Ok(())
    }

    /// Energy elasticity, the remainder of constant returns.
    pub fn gamma(&self) -> f64 {
        1.0 - self.alpha - self.beta
    }
}

/// Normalized output `A·k^α·h^β`.
pub fn two_capital_output(k: f64, h: f64, a: f64, p: &TwoCapitalParams) -> f64 {
    a * k.powf(p.alpha) * h.powf(p.beta)
}

/// Time derivatives `(dk/dt, dh/dt)` of the two-capital system.
pub fn two_capital_rhs(k: f64, h: f64, a: f64, p: &TwoCapitalParams) -> (f64, f64) {
    let y = two_capital_output(k, h, a, p);
    (
        p.sigma_k * y - (p.delta_k + p.g) * k,
        p.sigma_h * y - (p.delta_h + p.g) * h,
    )
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoCapitalFixedPoint {
    pub k_star: f64,
    pub h_star: f64,
    pub y_star: f64,
}

pub fn fixed_point_two_capital(
    p: &TwoCapitalParams,
) -> Result<TwoCapitalFixedPoint, BalancedError> {
    p.validate()?;
    let rk = p.sigma_k / (p.g + p.delta_k);
    let rh = p.sigma_h / (p.g + p.delta_h);
    let gamma = p.gamma();
    let k_star = rk.powf((1.0 - p.beta) / gamma) * rh.powf(p.beta / gamma);
    let h_star = rh.powf((1.0 - p.alpha) / gamma) * rk.powf(p.alpha / gamma);
    Ok(TwoCapitalFixedPoint {
        k_star,
        h_star,
        y_star: k_star.powf(p.alpha) * h_star.powf(p.beta),
    })
}

/// Human-capital growth consistent with observed output and physical-capital
/// growth: `ΔH/H = ΔY/Y − (α/β)(ΔK/K − ΔY/Y)`.
pub fn implied_h_growth(
    dy_over_y: f64,
    dk_over_k: f64,
    alpha: f64,
    beta: f64,
) -> Result<f64, BalancedError> {
    if beta == 0.0 {
        return Err(BalancedError::ZeroBeta);
    }
    positive("alpha", alpha)?;
    positive("beta", beta)?;
    Ok(dy_over_y - alpha / beta * (dk_over_k - dy_over_y))
}
