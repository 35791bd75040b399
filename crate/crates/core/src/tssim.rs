//! AR(1) sample generation with conditionally heteroskedastic innovations.
//!
//! The observed series follows `Y_i = mu + Y*_i` with `Y*_i = rho Y*_{i-1} + U_i`
//! for `i = 1..n`, where `U_i = sigma_i eps_i` and `eps_i` is standard normal.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{IcrError, Result};
use crate::rng::{substream, Domain};

/// Pre-sample steps discarded before the first returned GARCH/ARCH draw.
pub const VARIANCE_WARM_UP: usize = 500;

/// Conditional heteroskedasticity of the innovations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum InnovationSpec {
    /// i.i.d. N(0, 1).
    Iid,
    /// `sigma_i^2 = intercept + ma U_{i-1}^2 + ar sigma_{i-1}^2`.
    Garch11 { ma: f64, ar: f64, intercept: f64 },
    /// `sigma_i^2 = intercept + sum_k ar[k] U_{i-1-k}^2`.
    Arch4 { ar: [f64; 4], intercept: f64 },
}

impl InnovationSpec {
    pub const GARCH1: Self = Self::Garch11 { ma: 0.05, ar: 0.9, intercept: 0.001 };
    pub const GARCH2: Self = Self::Garch11 { ma: 0.15, ar: 0.8, intercept: 0.2 };
    pub const GARCH3: Self = Self::Garch11 { ma: 0.25, ar: 0.7, intercept: 0.2 };
    pub const ARCH4: Self = Self::Arch4 { ar: [0.3, 0.2, 0.2, 0.2], intercept: 0.2 };

    /// The five heteroskedasticity designs of the coverage study, in table order.
    pub fn study_presets() -> [(&'static str, Self); 5] {
        [
            ("iid", Self::Iid),
            ("garch1", Self::GARCH1),
            ("garch2", Self::GARCH2),
            ("garch3", Self::GARCH3),
            ("arch4", Self::ARCH4),
        ]
    }

    pub fn preset(name: &str) -> Option<Self> {
        Self::study_presets()
            .into_iter()
            .find(|(key, _)| key.eq_ignore_ascii_case(name))
            .map(|(_, spec)| spec)
    }

    /// Short label used in result tables.
    pub fn label(&self) -> String {
        if let Some((name, _)) = Self::study_presets().into_iter().find(|(_, s)| s == self) {
            return name.to_string();
        }
        match self {
            Self::Iid => "iid".into(),
            Self::Garch11 { ma, ar, intercept } => format!("garch({ma},{ar};{intercept})"),
            Self::Arch4 { ar, intercept } => {
                format!("arch({},{},{},{};{intercept})", ar[0], ar[1], ar[2], ar[3])
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(IcrError::ParameterDomain(msg));
        match *self {
            Self::Iid => Ok(()),
            Self::Garch11 { ma, ar, intercept } => {
                if !(ma.is_finite() && ar.is_finite() && intercept.is_finite()) {
                    return bad("GARCH parameters must be finite".into());
                }
                if ma < 0.0 || ar < 0.0 {
                    return bad(format!("GARCH ma={ma}, ar={ar} must be nonnegative"));
                }
                if ma + ar >= 1.0 {
                    return bad(format!("GARCH ma + ar = {} must be below 1", ma + ar));
                }
                if intercept <= 0.0 {
                    return bad(format!("GARCH intercept {intercept} must be positive"));
                }
                Ok(())
            }
            Self::Arch4 { ar, intercept } => {
                if ar.iter().any(|a| !a.is_finite() || *a < 0.0) {
                    return bad(format!("ARCH coefficients {ar:?} must be finite and nonnegative"));
                }
                let total: f64 = ar.iter().sum();
                if total >= 1.0 {
                    return bad(format!("ARCH coefficient sum {total} must be below 1"));
                }
                if !(intercept.is_finite() && intercept > 0.0) {
                    return bad(format!("ARCH intercept {intercept} must be positive"));
                }
                Ok(())
            }
        }
    }

    /// Unconditional variance `E U_i^2`.
    pub fn unconditional_variance(&self) -> f64 {
        match *self {
            Self::Iid => 1.0,
            Self::Garch11 { ma, ar, intercept } => intercept / (1.0 - ma - ar),
            Self::Arch4 { ar, intercept } => intercept / (1.0 - ar.iter().sum::<f64>()),
        }
    }
}

/// How the pre-sample value `Y*_0` is generated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum InitialCondition {
    /// `Y*_0 = 0`.
    Fixed0,
    /// `Y*_0 = sum_{i>=0} rho^i U_{-i}`.
    Stationary,
    /// `sqrt(n)` times the stationary draw.
    ScaledSqrtN,
    /// `n^{3/4}` times the stationary draw.
    Explosive,
}

impl InitialCondition {
    pub const ALL: [Self; 4] = [Self::Fixed0, Self::Stationary, Self::ScaledSqrtN, Self::Explosive];

    pub fn label(&self) -> &'static str {
        match self {
            Self::Fixed0 => "fixed",
            Self::Stationary => "stationary",
            Self::ScaledSqrtN => "scaled",
            Self::Explosive => "explosive",
        }
    }

    pub fn parse(name: &str) -> Option<Self> {
        match name.to_ascii_lowercase().as_str() {
            "fixed" | "fixed0" => Some(Self::Fixed0),
            "stationary" => Some(Self::Stationary),
            "scaled" | "scaledsqrtn" | "scaled_sqrt_n" => Some(Self::ScaledSqrtN),
            "explosive" => Some(Self::Explosive),
            _ => None,
        }
    }

    /// Multiplier applied to the stationary sum.
    fn scale(&self, n: usize) -> f64 {
        let n = n as f64;
        match self {
            Self::Fixed0 => 0.0,
            Self::Stationary => 1.0,
            Self::ScaledSqrtN => n.sqrt(),
            Self::Explosive => n.powf(0.75),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InitialConditionSpec {
    pub kind: InitialCondition,
    /// Truncation point of the geometric pre-sample sum. `None` picks a
    /// length at which the neglected weight is below `1e-12`.
    pub burn_in: Option<usize>,
}

impl InitialConditionSpec {
    pub fn new(kind: InitialCondition) -> Self {
        Self { kind, burn_in: None }
    }

    pub fn with_burn_in(kind: InitialCondition, burn_in: usize) -> Self {
        Self { kind, burn_in: Some(burn_in) }
    }

    pub fn validate(&self) -> Result<()> {
        match self.burn_in {
            Some(0) => Err(IcrError::ParameterDomain("burn_in must be at least 1".into())),
            _ => Ok(()),
        }
    }

    /// Effective truncation length for autoregressive coefficient `rho`.
    pub fn burn_in_for(&self, rho: f64) -> usize {
        self.burn_in.unwrap_or_else(|| default_burn_in(rho))
    }
}

impl Default for InitialConditionSpec {
    /// `Y*_0 = 0`.
    fn default() -> Self {
        Self::new(InitialCondition::Fixed0)
    }
}

/// `max(1000, ceil(log(1e-12) / log|rho|))`.
pub fn default_burn_in(rho: f64) -> usize {
    let a = rho.abs();
    if a == 0.0 {
        return 1000;
    }
    let needed = (1e-12f64.ln() / a.ln()).ceil();
    if needed.is_finite() && needed > 1000.0 {
        needed as usize
    } else {
        1000
    }
}

/// Level, autoregressive coefficient and sample length.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub mu: f64,
    pub rho: f64,
    pub n: usize,
}

impl ModelParams {
    pub fn new(mu: f64, rho: f64, n: usize) -> Result<Self> {
        let m = Self { mu, rho, n };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.mu.is_finite() {
            return Err(IcrError::ParameterDomain(format!("mu = {} is not finite", self.mu)));
        }
        if !(self.rho > -1.0 && self.rho <= 1.0) {
            return Err(IcrError::ParameterDomain(format!("rho = {} outside (-1, 1]", self.rho)));
        }
        if self.n < 4 {
            return Err(IcrError::ParameterDomain(format!("n = {} is below 4", self.n)));
        }
        Ok(())
    }
}

/// Where a simulated series came from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeriesProvenance {
    pub model: ModelParams,
    pub innov: InnovationSpec,
    pub init: InitialConditionSpec,
    pub seed: u64,
    pub replication: u64,
}

/// Observations `Y_0..Y_n`.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    y: Vec<f64>,
    pub meta: Option<SeriesProvenance>,
}

impl TimeSeries {
    pub fn new(y: Vec<f64>) -> Result<Self> {
        if y.len() < 2 {
            return Err(IcrError::Domain(format!("series has {} observations; need at least 2", y.len())));
        }
        if let Some(i) = y.iter().position(|v| !v.is_finite()) {
            return Err(IcrError::Domain(format!("observation {i} is not finite")));
        }
        Ok(Self { y, meta: None })
    }

    /// Full series including `Y_0`.
    pub fn y(&self) -> &[f64] {
        &self.y
    }

    /// Number of regression observations (`len - 1`).
    pub fn n(&self) -> usize {
        self.y.len() - 1
    }

    /// Dependent variable `Y_1..Y_n`.
    pub fn response(&self) -> &[f64] {
        &self.y[1..]
    }

    /// Lagged regressor `Y_0..Y_{n-1}`.
    pub fn lagged(&self) -> &[f64] {
        &self.y[..self.y.len() - 1]
    }
}

/// Draws `count` innovations `U_1..U_count`.
///
/// GARCH and ARCH recursions start at the unconditional variance and run
/// [`VARIANCE_WARM_UP`] discarded steps first.
pub fn draw_innovations<R: Rng + ?Sized>(spec: &InnovationSpec, count: usize, rng: &mut R) -> Result<Vec<f64>> {
    draw_innovations_with_variance(spec, count, rng).map(|(u, _)| u)
}

/// Like [`draw_innovations`], also returning the conditional variances `sigma_i^2`.
pub fn draw_innovations_with_variance<R: Rng + ?Sized>(
    spec: &InnovationSpec,
    count: usize,
    rng: &mut R,
) -> Result<(Vec<f64>, Vec<f64>)> {
    spec.validate()?;
    if count == 0 {
        return Err(IcrError::Argument("innovation count must be at least 1".into()));
    }
    let mut eps = || -> f64 { rng.sample(StandardNormal) };
    let mut u = Vec::with_capacity(count);
    let mut sigma2 = Vec::with_capacity(count);
    match *spec {
        InnovationSpec::Iid => {
            for _ in 0..count {
                u.push(eps());
                sigma2.push(1.0);
            }
        }
        InnovationSpec::Garch11 { ma, ar, intercept } => {
            let mut var = spec.unconditional_variance();
            let mut u_prev_sq = var;
            for step in 0..VARIANCE_WARM_UP + count {
                var = intercept + ma * u_prev_sq + ar * var;
                let ui = var.sqrt() * eps();
                u_prev_sq = ui * ui;
                if step >= VARIANCE_WARM_UP {
                    u.push(ui);
                    sigma2.push(var);
                }
            }
        }
        InnovationSpec::Arch4 { ar, intercept } => {
            // lags[k] holds U_{i-1-k}^2
            let mut lags = [spec.unconditional_variance(); 4];
            for step in 0..VARIANCE_WARM_UP + count {
                let var = intercept + ar.iter().zip(&lags).map(|(a, l)| a * l).sum::<f64>();
                let ui = var.sqrt() * eps();
                lags.rotate_right(1);
                lags[0] = ui * ui;
                if step >= VARIANCE_WARM_UP {
                    u.push(ui);
                    sigma2.push(var);
                }
            }
        }
    }
    Ok((u, sigma2))
}

/// Draws the demeaned pre-sample value `Y*_0`.
pub fn draw_initial_condition<R: Rng + ?Sized>(
    spec: &InitialConditionSpec,
    model: &ModelParams,
    innov: &InnovationSpec,
    rng: &mut R,
) -> Result<f64> {
    spec.validate()?;
    model.validate()?;
    if spec.kind == InitialCondition::Fixed0 {
        return Ok(0.0);
    }
    if model.rho >= 1.0 {
        return Err(IcrError::Domain(format!(
            "{} initial condition is undefined at rho = 1",
            spec.kind.label()
        )));
    }
    let burn = spec.burn_in_for(model.rho);
    // Chronological U_{-burn}..U_0; Horner gives sum rho^i U_{-i}.
    let pre = draw_innovations(innov, burn + 1, rng)?;
    let stationary = pre.iter().fold(0.0, |acc, u| model.rho * acc + u);
    Ok(spec.kind.scale(model.n) * stationary)
}

/// Runs the AR(1) recursion from a given `Y*_0` and innovations `U_1..U_n`.
pub fn series_from_innovations(mu: f64, rho: f64, y0_star: f64, u: &[f64]) -> Result<TimeSeries> {
    let mut y = Vec::with_capacity(u.len() + 1);
    let mut state = y0_star;
    y.push(mu + state);
    for &ui in u {
        state = rho * state + ui;
        y.push(mu + state);
    }
    TimeSeries::new(y)
}

/// Simulates one series. In-sample innovations come from `innov_rng`, the
/// pre-sample draws behind `Y*_0` from the independent `pre_rng`.
pub fn simulate_series<R: Rng + ?Sized>(
    model: &ModelParams,
    innov: &InnovationSpec,
    init: &InitialConditionSpec,
    innov_rng: &mut R,
    pre_rng: &mut R,
) -> Result<TimeSeries> {
    model.validate()?;
    let y0_star = draw_initial_condition(init, model, innov, pre_rng)?;
    let u = draw_innovations(innov, model.n, innov_rng)?;
    series_from_innovations(model.mu, model.rho, y0_star, &u)
}

/// Simulates replication `rep` of a design from its master seed.
pub fn simulate_replication(
    model: &ModelParams,
    innov: &InnovationSpec,
    init: &InitialConditionSpec,
    seed: u64,
    rep: u64,
) -> Result<TimeSeries> {
    let mut innov_rng = substream(seed, Domain::Innovations, rep);
    let mut pre_rng = substream(seed, Domain::PreSample, rep);
    let mut series = simulate_series(model, innov, init, &mut innov_rng, &mut pre_rng)?;
    series.meta = Some(SeriesProvenance { model: *model, innov: *innov, init: *init, seed, replication: rep });
    Ok(series)
}
