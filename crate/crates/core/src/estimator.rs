//! The initial-condition-robust least squares estimator, its HC5 sandwich
//! variance and the t-statistic used for test inversion.

use crate::design::{check_rho, X2Projector};
use crate::error::{IcrError, Result};
use crate::tssim::TimeSeries;

/// Sandwich variances at or below this are treated as an exact fit.
pub const DEGENERATE_VARIANCE_TOL: f64 = 1e-300;

/// Fit at one hypothesized `rho`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TStatResult {
    /// Hypothesized coefficient the statistic was evaluated at.
    pub rho: f64,
    pub rho_hat: f64,
    pub sigma2_hat: f64,
    pub t: f64,
    /// `max_i |U_hat_i|`.
    pub residual_scale: f64,
}

/// Reusable evaluator of `T_n(rho)` for one series.
///
/// Everything that does not depend on `rho` (centred data) is computed once;
/// each evaluation is a handful of O(n) passes.
#[derive(Debug, Clone)]
pub struct TStatEvaluator<'a> {
    series: &'a TimeSeries,
    xc: Vec<f64>,
    yc: Vec<f64>,
    x_raw_ss: f64,
    proj: X2Projector,
    m: Vec<f64>,
    my: Vec<f64>,
}

impl<'a> TStatEvaluator<'a> {
    pub fn new(series: &'a TimeSeries) -> Result<Self> {
        let n = series.n();
        if n < 4 {
            return Err(IcrError::Domain(format!("n = {n} is below the minimum of 4")));
        }
        let center = |v: &[f64]| {
            let mean = v.iter().sum::<f64>() / v.len() as f64;
            v.iter().map(|x| x - mean).collect::<Vec<_>>()
        };
        let x = series.lagged();
        Ok(Self {
            series,
            xc: center(x),
            yc: center(series.response()),
            x_raw_ss: x.iter().map(|v| v * v).sum(),
            proj: X2Projector::new(n, 0.0)?,
            m: vec![0.0; n],
            my: vec![0.0; n],
        })
    }

    pub fn series(&self) -> &TimeSeries {
        self.series
    }

    pub fn evaluate(&mut self, rho: f64) -> Result<TStatResult> {
        check_rho(rho)?;
        self.proj.set_rho(rho)?;
        let n = self.xc.len();
        let nf = n as f64;

        self.proj.annihilate_centered_into(&self.xc, &mut self.m);
        self.proj.annihilate_centered_into(&self.yc, &mut self.my);
        let (mut smm, mut smy) = (0.0, 0.0);
        for (m, my) in self.m.iter().zip(&self.my) {
            smm += m * m;
            smy += m * my;
        }
        if !(smm > crate::design::PIVOT_RATIO_TOL * self.x_raw_ss) {
            return Err(IcrError::SingularDesign(format!(
                "lagged series lies in the span of X2 at rho = {rho}"
            )));
        }
        let rho_hat = smy / smm;

        // Full-design residuals and leverages follow from
        // P_X = P_{X2} + P_{M2 X1}.
        let cap = nf.sqrt().recip();
        let mut meat = 0.0;
        let mut residual_scale: f64 = 0.0;
        for i in 0..n {
            let m = self.m[i];
            let u_hat = self.my[i] - rho_hat * m;
            residual_scale = residual_scale.max(u_hat.abs());
            let p = self.proj.leverage(i) + m * m / smm;
            let d = u_hat / (1.0 - p.min(cap));
            meat += m * m * d * d;
        }
        // (S/n)^{-1} (meat/n) (S/n)^{-1}
        let sigma2_hat = nf * meat / (smm * smm);
        if !(sigma2_hat > DEGENERATE_VARIANCE_TOL) || !sigma2_hat.is_finite() {
            return Err(IcrError::DegenerateVariance(sigma2_hat));
        }
        let t = nf.sqrt() * (rho_hat - rho) / sigma2_hat.sqrt();
        Ok(TStatResult { rho, rho_hat, sigma2_hat, t, residual_scale })
    }
}

/// `(rho_hat, sigma2_hat, T_n)` at a single hypothesized `rho`.
pub fn icr_estimate(series: &TimeSeries, rho: f64) -> Result<TStatResult> {
    TStatEvaluator::new(series)?.evaluate(rho)
}

/// One grid point of a t-statistic profile.
#[derive(Debug)]
pub struct ProfilePoint {
    pub rho: f64,
    pub result: Result<TStatResult>,
}

/// Evaluates `T_n` over a strictly increasing grid. Failures at individual
/// points are recorded rather than propagated.
pub fn t_profile(series: &TimeSeries, rho_grid: &[f64]) -> Result<Vec<ProfilePoint>> {
    if rho_grid.is_empty() {
        return Err(IcrError::Argument("rho grid is empty".into()));
    }
    if let Some(w) = rho_grid.windows(2).find(|w| !(w[1] > w[0])) {
        return Err(IcrError::Argument(format!("rho grid not strictly increasing at {} -> {}", w[0], w[1])));
    }
    for &rho in rho_grid {
        check_rho(rho)?;
    }
    let mut eval = TStatEvaluator::new(series)?;
    Ok(rho_grid.iter().map(|&rho| ProfilePoint { rho, result: eval.evaluate(rho) }).collect())
}
