//! Discretized Brownian functionals behind the limit law `J_h`.
//!
//! On the grid `r_j = j / N`, the Ornstein-Uhlenbeck integral
//! `I_h(r_j) = sum_{i<=j} exp(-(r_j - r_i) h) dW_i` is built by the one-step
//! recursion `I_h(r_j) = e^{-h/N} I_h(r_{j-1}) + dW_j`, projected off
//! `f_h(r) = (1, e^{-hr})'` (or `(1, r)'` at `h = 0`), and combined into
//!
//! ```text
//! J_h = sum_j I_fh(r_{j-1}) dW_j / sqrt( (1/N) sum_j I_fh(r_j)^2 )
//! ```
//!
//! with a left-endpoint (Ito) sum in the numerator and right-endpoint
//! Riemann sums for every `dr` integral.

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{IcrError, Result};
use crate::rng::{substream, Domain};

/// Below this `h` the projection weights are evaluated from their Taylor
/// expansions instead of the closed form. The closed form cancels to
/// `O(h^4)` and keeps fewer than 10 digits already at `h = 1e-2`.
pub const SMALL_H_SWITCH: f64 = 0.1;

/// Paths whose denominator falls below this are redrawn.
pub const DEGENERATE_DENOMINATOR_TOL: f64 = 1e-14;

/// Discretization and sample size for limit-law simulation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PathGridConfig {
    pub n_steps: usize,
    pub n_paths: usize,
    pub seed: u64,
}

impl PathGridConfig {
    pub fn new(n_steps: usize, n_paths: usize, seed: u64) -> Result<Self> {
        let cfg = Self { n_steps, n_paths, seed };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_steps < 100 {
            return Err(IcrError::Argument(format!("n_steps = {} is below 100", self.n_steps)));
        }
        if self.n_paths < 1000 {
            return Err(IcrError::Argument(format!("n_paths = {} is below 1000", self.n_paths)));
        }
        Ok(())
    }
}

fn check_h(h: f64) -> Result<()> {
    if h.is_finite() && h >= 0.0 {
        Ok(())
    } else {
        Err(IcrError::Domain(format!("h = {h} must be finite and nonnegative")))
    }
}

/// `I_h(r_j)` for `j = 1..N` from increments `dW_1..dW_N`.
pub fn simulate_ih_path(h: f64, dw: &[f64]) -> Result<Vec<f64>> {
    check_h(h)?;
    if dw.len() < 2 {
        return Err(IcrError::Argument("need at least two increments".into()));
    }
    let decay = (-h / dw.len() as f64).exp();
    let mut level = 0.0;
    Ok(dw
        .iter()
        .map(|d| {
            level = decay * level + d;
            level
        })
        .collect())
}

const SERIES_DEGREE: usize = 18;
type Series = [f64; SERIES_DEGREE + 1];

fn exp_series(c: f64) -> Series {
    // e^{c h} = sum c^k h^k / k!
    let mut s = [0.0; SERIES_DEGREE + 1];
    let mut term = 1.0;
    for (k, coef) in s.iter_mut().enumerate() {
        *coef = term;
        term *= c / (k + 1) as f64;
    }
    s
}

fn mul(a: &Series, b: &Series) -> Series {
    let mut out = [0.0; SERIES_DEGREE + 1];
    for i in 0..=SERIES_DEGREE {
        for j in 0..=SERIES_DEGREE - i {
            out[i + j] += a[i] * b[j];
        }
    }
    out
}

fn shift(a: &Series, by: usize) -> Series {
    let mut out = [0.0; SERIES_DEGREE + 1];
    out[by..].copy_from_slice(&a[..=SERIES_DEGREE - by]);
    out
}

fn lin(terms: &[(f64, &Series)]) -> Series {
    let mut out = [0.0; SERIES_DEGREE + 1];
    for (w, s) in terms {
        for (o, v) in out.iter_mut().zip(s.iter()) {
            *o += w * v;
        }
    }
    out
}

/// Evaluates `sum_{k>=4} s_k h^{k-4}`; the terms below `h^4` vanish
/// identically for every series built here.
fn eval_from_fourth(s: &Series, h: f64) -> f64 {
    s[4..].iter().rev().fold(0.0, |acc, c| acc * h + c)
}

fn alpha_beta_series(h: f64, r: f64) -> (f64, f64) {
    let one = exp_series(0.0);
    let e1 = exp_series(-1.0);
    let e2 = exp_series(-2.0);
    let er = exp_series(-r);
    let one_minus_e1 = lin(&[(1.0, &one), (-1.0, &e1)]);
    // h (1 - e^{-2h}) - 2 (1 - e^{-h})^2
    let denom = lin(&[
        (1.0, &shift(&lin(&[(1.0, &one), (-1.0, &e2)]), 1)),
        (-2.0, &mul(&one_minus_e1, &one_minus_e1)),
    ]);
    // h [1 - e^{-2h} - 2 (1 - e^{-h}) e^{-hr} + 2 h e^{-hr} - 2 (1 - e^{-h})]
    let num_a = shift(
        &lin(&[
            (1.0, &one),
            (-1.0, &e2),
            (-2.0, &mul(&one_minus_e1, &er)),
            (2.0, &shift(&er, 1)),
            (-2.0, &one_minus_e1),
        ]),
        1,
    );
    // 2 h^2 [(1 - e^{-h}) - h e^{-hr}]
    let num_b = shift(&lin(&[(2.0, &one_minus_e1), (-2.0, &shift(&er, 1))]), 2);
    let d = eval_from_fourth(&denom, h);
    (eval_from_fourth(&num_a, h) / d, eval_from_fourth(&num_b, h) / d)
}

/// Projection weights `(alpha_h(r), beta_h(r))` such that
/// `I_fh(r) = I_h(r) - alpha_h(r) int I_h - beta_h(r) int ((1 - e^{-hs}) / h) I_h`.
///
/// As `h -> 0` these tend to `(4 - 6r, 12r - 6)`.
pub fn alpha_beta(h: f64, r: f64) -> Result<(f64, f64)> {
    if !(h.is_finite() && h > 0.0) {
        return Err(IcrError::Domain(format!("alpha/beta need finite h > 0, got {h}")));
    }
    if h < SMALL_H_SWITCH {
        return Ok(alpha_beta_series(h, r));
    }
    let e_2h = (-2.0 * h).exp();
    let e_hr = (-h * r).exp();
    let one_minus_e_h = -(-h).exp_m1();
    let denom = h * (1.0 - e_2h) - 2.0 * one_minus_e_h * one_minus_e_h;
    let alpha = h * (1.0 - e_2h - 2.0 * one_minus_e_h * e_hr + 2.0 * h * e_hr - 2.0 * one_minus_e_h) / denom;
    let beta = 2.0 * h * h * (one_minus_e_h - h * e_hr) / denom;
    Ok((alpha, beta))
}

/// Precomputed per-`h` quantities on a fixed grid.
#[derive(Debug, Clone)]
pub struct IfhKernel {
    h: f64,
    dt: f64,
    decay: f64,
    alpha: Vec<f64>,
    beta: Vec<f64>,
    /// `(1 - e^{-h r_j}) / h`, or `r_j` at `h = 0`.
    weight: Vec<f64>,
}

impl IfhKernel {
    pub fn new(h: f64, n_steps: usize, dt: f64) -> Result<Self> {
        check_h(h)?;
        let mut alpha = Vec::with_capacity(n_steps);
        let mut beta = Vec::with_capacity(n_steps);
        let mut weight = Vec::with_capacity(n_steps);
        for j in 1..=n_steps {
            let r = j as f64 * dt;
            if h == 0.0 {
                alpha.push(4.0 - 6.0 * r);
                beta.push(12.0 * r - 6.0);
                weight.push(r);
            } else {
                let (a, b) = alpha_beta(h, r)?;
                alpha.push(a);
                beta.push(b);
                weight.push(-(-h * r).exp_m1() / h);
            }
        }
        Ok(Self { h, dt, decay: (-h * dt).exp(), alpha, beta, weight })
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn n_steps(&self) -> usize {
        self.alpha.len()
    }

    /// Projects a path `I_h(r_1..r_N)` in place.
    fn project_in_place(&self, path: &mut [f64]) {
        let (mut int_i, mut int_w) = (0.0, 0.0);
        for (v, w) in path.iter().zip(&self.weight) {
            int_i += v;
            int_w += w * v;
        }
        int_i *= self.dt;
        int_w *= self.dt;
        for ((v, a), b) in path.iter_mut().zip(&self.alpha).zip(&self.beta) {
            *v -= a * int_i + b * int_w;
        }
    }

    pub fn project(&self, i_path: &[f64]) -> Vec<f64> {
        let mut out = i_path.to_vec();
        self.project_in_place(&mut out);
        out
    }

    /// Numerator and denominator of `J_h` for one path of increments,
    /// using `scratch` (length `N`) as working storage.
    pub fn functionals(&self, dw: &[f64], scratch: &mut [f64]) -> LimitFunctionals {
        let mut level = 0.0;
        for (s, d) in scratch.iter_mut().zip(dw) {
            level = self.decay * level + d;
            *s = level;
        }
        self.project_in_place(scratch);
        let mut numerator = 0.0;
        let mut denominator = 0.0;
        let mut prev = 0.0;
        for (v, d) in scratch.iter().zip(dw) {
            numerator += prev * d;
            denominator += v * v;
            prev = *v;
        }
        denominator *= self.dt;
        LimitFunctionals { numerator, denominator }
    }
}

/// Per-path stochastic integrals.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LimitFunctionals {
    /// `int I_fh dW`.
    pub numerator: f64,
    /// `int I_fh^2 dr`.
    pub denominator: f64,
}

impl LimitFunctionals {
    /// `J_h` draw, or `None` for a degenerate path.
    pub fn ratio(&self) -> Option<f64> {
        (self.denominator >= DEGENERATE_DENOMINATOR_TOL).then(|| self.numerator / self.denominator.sqrt())
    }
}

/// `I_fh` on the grid for a path from [`simulate_ih_path`].
pub fn project_ifh(h: f64, i_path: &[f64], dt: f64) -> Result<Vec<f64>> {
    if !(dt.is_finite() && dt > 0.0) {
        return Err(IcrError::Argument(format!("dt = {dt} must be positive")));
    }
    Ok(IfhKernel::new(h, i_path.len(), dt)?.project(i_path))
}

/// Draws of `J_h` for each requested `h`, all sharing the same Brownian paths.
#[derive(Debug, Clone)]
pub struct JhSample {
    pub h_grid: Vec<f64>,
    /// `draws[k][p]` is path `p` at `h_grid[k]`.
    pub draws: Vec<Vec<f64>>,
    /// Number of redrawn degenerate paths.
    pub resampled: usize,
}

fn fill_increments(rng: &mut impl Rng, dw: &mut [f64]) {
    let sd = (dw.len() as f64).sqrt().recip();
    for d in dw.iter_mut() {
        let z: f64 = rng.sample(StandardNormal);
        *d = z * sd;
    }
}

/// Simulates `J_h` for several `h` at once. Path `p` uses the substream
/// `(seed, p)`, so results do not depend on the thread count, and a single-`h`
/// call returns the same draws as the corresponding row of a multi-`h` call.
pub fn sample_jh_many(h_grid: &[f64], cfg: &PathGridConfig) -> Result<JhSample> {
    cfg.validate()?;
    if h_grid.is_empty() {
        return Err(IcrError::Argument("h grid is empty".into()));
    }
    let n = cfg.n_steps;
    let kernels = h_grid
        .iter()
        .map(|&h| IfhKernel::new(h, n, 1.0 / n as f64))
        .collect::<Result<Vec<_>>>()?;

    let per_path: Vec<(Vec<f64>, usize)> = (0..cfg.n_paths)
        .into_par_iter()
        .map_init(
            || (vec![0.0; n], vec![0.0; n]),
            |(dw, scratch), p| {
                let mut rng = substream(cfg.seed, Domain::BrownianPath, p as u64);
                let mut redraws = 0;
                loop {
                    fill_increments(&mut rng, dw);
                    let draws: Option<Vec<f64>> =
                        kernels.iter().map(|k| k.functionals(dw, scratch).ratio()).collect();
                    match draws {
                        Some(d) => return (d, redraws),
                        None => redraws += 1,
                    }
                }
            },
        )
        .collect();

    let mut draws = vec![Vec::with_capacity(cfg.n_paths); h_grid.len()];
    let mut resampled = 0;
    for (row, redraws) in per_path {
        resampled += redraws;
        for (k, v) in row.into_iter().enumerate() {
            draws[k].push(v);
        }
    }
    Ok(JhSample { h_grid: h_grid.to_vec(), draws, resampled })
}

/// `B` draws of `J_h`.
pub fn sample_jh(h: f64, cfg: &PathGridConfig) -> Result<Vec<f64>> {
    let mut s = sample_jh_many(&[h], cfg)?;
    Ok(s.draws.pop().unwrap_or_default())
}

/// Empirical quantile interpolating linearly between order statistics
/// (position `(B - 1) alpha` in the sorted sample).
pub fn empirical_quantile(sorted: &[f64], alpha: f64) -> f64 {
    let pos = (sorted.len() - 1) as f64 * alpha;
    let lo = pos.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    let frac = pos - lo as f64;
    sorted[lo] + frac * (sorted[hi] - sorted[lo])
}
