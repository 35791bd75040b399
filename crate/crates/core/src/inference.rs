//! Test inversion: confidence intervals and the median-unbiased interval
//! estimator.
//!
//! A hypothesized `rho` is accepted at level `alpha` when
//! `c_h(alpha/2) <= T_n(rho) <= c_h(1 - alpha/2)` with `h = n (1 - rho)`.
//! Both constructions scan a grid over `[-1 + epsilon, 1]` that always
//! contains `rho = 1`.

use serde::Serialize;

use crate::asymdist::QuantileTable;
use crate::error::{IcrError, Result};
use crate::estimator::{icr_estimate, TStatEvaluator};
use crate::tssim::TimeSeries;

pub const DEFAULT_GRID_STEP: f64 = 1e-3;
/// Lower end of the parameter space is `-1 + DEFAULT_EPSILON`.
pub const DEFAULT_EPSILON: f64 = 1e-3;

/// Grid over `[-1 + epsilon, 1]` with spacing `step`, increasing, containing
/// both endpoints. When `1 / step` is an integer `m` the interior points are
/// exactly `j / m`, so values such as `0.5` or `0.9` are hit exactly.
pub fn rho_grid(step: f64, epsilon: f64) -> Result<Vec<f64>> {
    if !(step.is_finite() && step > 0.0 && step < 1.0) {
        return Err(IcrError::Argument(format!("grid step {step} must lie in (0, 1)")));
    }
    if !(epsilon > 0.0 && epsilon < 2.0) {
        return Err(IcrError::Argument(format!("epsilon {epsilon} must lie in (0, 2)")));
    }
    let lo = -1.0 + epsilon;
    let m = (1.0 / step).round();
    let mut grid = Vec::new();
    if (m * step - 1.0).abs() < 1e-9 && m < 1e8 {
        let first = (lo * m - 1e-9).ceil() as i64;
        let last = m as i64;
        grid.extend((first..=last).map(|j| j as f64 / m));
    } else {
        let mut k = 0u64;
        loop {
            let v = 1.0 - k as f64 * step;
            if v < lo - 1e-12 {
                break;
            }
            grid.push(v);
            k += 1;
        }
        grid.reverse();
    }
    if grid.first().map_or(true, |g| *g > lo + 1e-12) {
        grid.insert(0, lo);
    } else {
        grid[0] = lo;
    }
    Ok(grid)
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(IcrError::Argument(format!("alpha = {alpha} must lie in (0, 1)")))
    }
}

/// Local-to-unity drift of a hypothesized coefficient.
pub fn drift(n: usize, rho: f64) -> f64 {
    n as f64 * (1.0 - rho)
}

/// Whether `t` lies in the equal-tailed acceptance region at drift `h`.
pub fn accepts(table: &QuantileTable, h: f64, alpha: f64, t: f64) -> Result<bool> {
    let lo = table.lookup(h, alpha / 2.0)?;
    let hi = table.lookup(h, 1.0 - alpha / 2.0)?;
    Ok(lo <= t && t <= hi)
}

/// Evaluates the acceptance decision at a single `rho`. Estimator failures
/// count as rejection.
pub fn accepts_at(series: &TimeSeries, rho: f64, alpha: f64, table: &QuantileTable) -> Result<bool> {
    check_alpha(alpha)?;
    match icr_estimate(series, rho) {
        Ok(fit) => accepts(table, drift(series.n(), rho), alpha, fit.t),
        Err(IcrError::SingularDesign(_) | IcrError::DegenerateVariance(_)) => Ok(false),
        Err(e) => Err(e),
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct InversionDiagnostics {
    /// Grid points where `T_n` could not be computed.
    pub estimator_errors: usize,
}

/// Confidence set from test inversion, reported as `[lower, upper]` together
/// with the full acceptance mask. `lower` and `upper` are NaN when no grid
/// point is accepted.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IntervalResult {
    pub lower: f64,
    pub upper: f64,
    pub alpha: f64,
    pub grid_step: f64,
    #[serde(skip)]
    pub grid: Vec<f64>,
    #[serde(skip)]
    pub accepted: Vec<bool>,
    pub empty: bool,
    /// Some rejected grid point lies between two accepted ones.
    pub disconnected: bool,
    pub diagnostics: InversionDiagnostics,
}

impl IntervalResult {
    /// `upper - lower`, zero for an empty set.
    pub fn length(&self) -> f64 {
        if self.empty {
            0.0
        } else {
            self.upper - self.lower
        }
    }

    /// Whether `[lower, upper]` contains `rho`.
    pub fn contains(&self, rho: f64) -> bool {
        !self.empty && self.lower <= rho && rho <= self.upper
    }
}

/// Median-unbiased interval estimator `[rho_low, rho_up]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MueResult {
    pub rho_low: f64,
    pub rho_up: f64,
    /// `rho_up - rho_low <= grid_step`.
    pub is_point: bool,
    /// The upper-bound set `{c_h(.5) <= T_n}` was empty; both ends sit at the
    /// lower end of the grid.
    pub up_set_empty: bool,
    /// The lower-bound set `{T_n <= c_h(.5)}` was empty; both ends sit at 1.
    pub low_set_empty: bool,
    pub diagnostics: InversionDiagnostics,
}

impl MueResult {
    /// Scalar estimate (`rho_up`).
    pub fn point_estimate(&self) -> f64 {
        self.rho_up
    }
}

/// `T_n` on a grid, with failed points as `None`.
#[derive(Debug, Clone)]
pub struct StatProfile {
    pub n: usize,
    pub grid: Vec<f64>,
    pub t: Vec<Option<f64>>,
}

impl StatProfile {
    pub fn compute(series: &TimeSeries, grid: &[f64]) -> Result<Self> {
        let mut eval = TStatEvaluator::new(series)?;
        let mut t = Vec::with_capacity(grid.len());
        for &rho in grid {
            t.push(match eval.evaluate(rho) {
                Ok(fit) => Some(fit.t),
                Err(IcrError::SingularDesign(_) | IcrError::DegenerateVariance(_)) => None,
                Err(e) => return Err(e),
            });
        }
        Ok(Self { n: series.n(), grid: grid.to_vec(), t })
    }

    fn errors(&self) -> usize {
        self.t.iter().filter(|t| t.is_none()).count()
    }

    pub fn interval(&self, alpha: f64, table: &QuantileTable, grid_step: f64) -> Result<IntervalResult> {
        check_alpha(alpha)?;
        let mut accepted = Vec::with_capacity(self.grid.len());
        for (rho, t) in self.grid.iter().zip(&self.t) {
            accepted.push(match t {
                Some(t) => accepts(table, drift(self.n, *rho), alpha, *t)?,
                None => false,
            });
        }
        let first = accepted.iter().position(|a| *a);
        let last = accepted.iter().rposition(|a| *a);
        let (lower, upper, empty, disconnected) = match (first, last) {
            (Some(i), Some(j)) => (self.grid[i], self.grid[j], false, accepted[i..=j].iter().any(|a| !a)),
            _ => (f64::NAN, f64::NAN, true, false),
        };
        Ok(IntervalResult {
            lower,
            upper,
            alpha,
            grid_step,
            grid: self.grid.clone(),
            accepted,
            empty,
            disconnected,
            diagnostics: InversionDiagnostics { estimator_errors: self.errors() },
        })
    }

    /// Median-unbiased interval. Each end is refined from its bracketing grid
    /// pair by linear interpolation of `T_n(rho) - c_h(.5)`, so a single
    /// crossing yields `rho_low == rho_up` and `rho_low <= rho_up` always holds.
    pub fn mue(&self, table: &QuantileTable, grid_step: f64) -> Result<MueResult> {
        let mut pts: Vec<(f64, f64)> = Vec::with_capacity(self.grid.len());
        for (rho, t) in self.grid.iter().zip(&self.t) {
            if let Some(t) = t {
                pts.push((*rho, t - table.lookup(drift(self.n, *rho), 0.5)?));
            }
        }
        if pts.is_empty() {
            return Err(IcrError::Domain("T_n is undefined at every grid point".into()));
        }
        let root = |(r0, d0): (f64, f64), (r1, d1): (f64, f64)| r0 + d0 / (d0 - d1) * (r1 - r0);
        let grid_lo = self.grid[0];
        let grid_hi = self.grid[self.grid.len() - 1];
        let diagnostics = InversionDiagnostics { estimator_errors: self.errors() };

        let up_idx = pts.iter().rposition(|p| p.1 >= 0.0);
        let low_idx = pts.iter().position(|p| p.1 <= 0.0);
        let (rho_low, rho_up, up_set_empty, low_set_empty) = match (up_idx, low_idx) {
            (None, _) => (grid_lo, grid_lo, true, false),
            (_, None) => (grid_hi, grid_hi, false, true),
            (Some(k), Some(j)) => {
                let up = if k + 1 == pts.len() { pts[k].0 } else { root(pts[k], pts[k + 1]) };
                let low = if j == 0 { pts[0].0 } else { root(pts[j - 1], pts[j]) };
                (low, up, false, false)
            }
        };
        Ok(MueResult {
            rho_low,
            rho_up,
            is_point: rho_up - rho_low <= grid_step,
            up_set_empty,
            low_set_empty,
            diagnostics,
        })
    }
}

/// Equal-tailed `1 - alpha` confidence interval.
pub fn invert_ci(series: &TimeSeries, alpha: f64, table: &QuantileTable, grid_step: f64) -> Result<IntervalResult> {
    check_alpha(alpha)?;
    let grid = rho_grid(grid_step, DEFAULT_EPSILON)?;
    StatProfile::compute(series, &grid)?.interval(alpha, table, grid_step)
}

/// Median-unbiased interval estimator.
pub fn mue(series: &TimeSeries, table: &QuantileTable, grid_step: f64) -> Result<MueResult> {
    let grid = rho_grid(grid_step, DEFAULT_EPSILON)?;
    StatProfile::compute(series, &grid)?.mue(table, grid_step)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tssim::{simulate_replication, InitialCondition, InitialConditionSpec, InnovationSpec, ModelParams};

    fn sample(rho: f64, seed: u64) -> TimeSeries {
        let model = ModelParams::new(0.0, rho, 150).unwrap();
        simulate_replication(&model, &InnovationSpec::Iid, &InitialConditionSpec::new(InitialCondition::Fixed0), seed, 0)
            .unwrap()
    }

    #[test]
    fn default_grid_layout() {
        let g = rho_grid(1e-3, 1e-3).unwrap();
        assert_eq!(g.len(), 2000);
        assert_eq!(g[0], -0.999);
        assert_eq!(*g.last().unwrap(), 1.0);
        assert!(g.contains(&0.5) && g.contains(&0.9) && g.contains(&0.0) && g.contains(&0.99));
        assert!(g.windows(2).all(|w| w[1] > w[0]));
        let odd = rho_grid(0.3, 1e-3).unwrap();
        assert_eq!(odd[0], -0.999);
        assert_eq!(*odd.last().unwrap(), 1.0);
        assert!(rho_grid(0.0, 1e-3).is_err());
    }

    #[test]
    fn alpha_validation() {
        let s = sample(0.5, 1);
        let t = QuantileTable::bundled();
        assert!(invert_ci(&s, 1.2, &t, 1e-3).is_err());
        assert!(invert_ci(&s, 0.0, &t, 1e-3).is_err());
    }

    #[test]
    fn boundary_statistic_is_accepted() {
        let t = QuantileTable::bundled();
        let h = 3.0;
        let lo = t.lookup(h, 0.025).unwrap();
        let hi = t.lookup(h, 0.975).unwrap();
        assert!(accepts(&t, h, 0.05, lo).unwrap());
        assert!(accepts(&t, h, 0.05, hi).unwrap());
        assert!(!accepts(&t, h, 0.05, lo - 1e-12).unwrap());
    }

    #[test]
    fn interval_contains_its_mask() {
        let s = sample(0.7, 2);
        let t = QuantileTable::bundled();
        let ci = invert_ci(&s, 0.05, &t, 1e-3).unwrap();
        assert!(!ci.empty && ci.lower <= ci.upper);
        for (rho, a) in ci.grid.iter().zip(&ci.accepted) {
            if *a {
                assert!(ci.contains(*rho));
            }
        }
        assert_eq!(ci.grid.len(), ci.accepted.len());
    }

    #[test]
    fn mue_is_ordered_and_usually_a_point() {
        let t = QuantileTable::bundled();
        for seed in 0..20 {
            let m = mue(&sample(0.5, seed), &t, 1e-3).unwrap();
            assert!(m.rho_low <= m.rho_up);
            assert!(m.rho_low > -1.0 && m.rho_up <= 1.0);
        }
        let m = mue(&sample(0.5, 3), &t, 1e-3).unwrap();
        assert!(m.is_point);
    }
}
