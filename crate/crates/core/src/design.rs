//! Regression design for the initial-condition-robust fit.
//!
//! For a hypothesized `rho` the design is `X(rho) = [X1 : X2(rho)]` where `X1`
//! holds the lagged observations and `X2(rho)` has rows `(1, rho^{i-1})`
//! (`0^0 = 1`), or `(1, i)` at the unit root. Projections are computed from
//! the small Gram systems; no `n x n` matrix is ever formed.

use crate::error::{IcrError, Result};
use crate::tssim::TimeSeries;

/// Pivot ratio below which a Gram matrix is declared singular.
pub const PIVOT_RATIO_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct DesignMatrices {
    /// `X1[i] = Y_{i-1}`.
    pub x1: Vec<f64>,
    pub x2: Vec<[f64; 2]>,
    pub rho: f64,
}

impl DesignMatrices {
    /// Rows of the full design `[X1 : X2(rho)]`.
    pub fn full(&self) -> Vec<[f64; 3]> {
        self.x1.iter().zip(&self.x2).map(|(x, r)| [*x, r[0], r[1]]).collect()
    }
}

/// Hat-matrix diagonals and their capped version `min(p_ii, n^{-1/2})`.
#[derive(Debug, Clone, PartialEq)]
pub struct LeverageVector {
    pub p_ii: Vec<f64>,
    pub p_ii_star: Vec<f64>,
}

pub(crate) fn check_rho(rho: f64) -> Result<()> {
    if rho > -1.0 && rho <= 1.0 {
        Ok(())
    } else {
        Err(IcrError::Domain(format!("hypothesized rho = {rho} outside (-1, 1]")))
    }
}

/// Second design column `g_i` for `i = 1..n`. The unit-root trend is
/// returned as `i / n`; every projection built from it is invariant to that
/// column scaling.
pub(crate) fn fill_second_column(rho: f64, out: &mut [f64]) {
    let n = out.len() as f64;
    if rho == 1.0 {
        for (i, g) in out.iter_mut().enumerate() {
            *g = (i + 1) as f64 / n;
        }
    } else {
        let mut pow = 1.0;
        for g in out.iter_mut() {
            *g = pow;
            pow *= rho;
        }
    }
}

pub fn build_design(series: &TimeSeries, rho: f64) -> Result<DesignMatrices> {
    check_rho(rho)?;
    if series.y().len() < 5 {
        return Err(IcrError::Domain(format!(
            "series has {} observations; the design needs at least 5",
            series.y().len()
        )));
    }
    let n = series.n();
    let x2 = if rho == 1.0 {
        (1..=n).map(|i| [1.0, i as f64]).collect()
    } else {
        let mut g = vec![0.0; n];
        fill_second_column(rho, &mut g);
        g.into_iter().map(|gi| [1.0, gi]).collect()
    };
    Ok(DesignMatrices { x1: series.lagged().to_vec(), x2, rho })
}

/// Inverts a symmetric positive semidefinite `K x K` Gram matrix after unit
/// diagonal equilibration, using Gauss-Jordan elimination with partial
/// pivoting. Returns the inverse of the original (unscaled) matrix.
fn invert_gram<const K: usize>(gram: [[f64; K]; K]) -> Result<[[f64; K]; K]> {
    let mut scale = [0.0; K];
    for k in 0..K {
        if !(gram[k][k] > 0.0) || !gram[k][k].is_finite() {
            return Err(IcrError::SingularDesign(format!("design column {k} is zero")));
        }
        scale[k] = gram[k][k].sqrt().recip();
    }
    let mut a = [[0.0; K]; K];
    let mut inv = [[0.0; K]; K];
    for i in 0..K {
        for j in 0..K {
            a[i][j] = gram[i][j] * scale[i] * scale[j];
        }
        inv[i][i] = 1.0;
    }
    let mut first_pivot = None;
    for col in 0..K {
        let piv = (col..K)
            .max_by(|&r, &s| a[r][col].abs().total_cmp(&a[s][col].abs()))
            .unwrap_or(col);
        a.swap(col, piv);
        inv.swap(col, piv);
        let p = a[col][col];
        let reference = *first_pivot.get_or_insert(p.abs());
        if !(p.abs() > PIVOT_RATIO_TOL * reference) {
            return Err(IcrError::SingularDesign(format!(
                "pivot ratio {:.3e} below {PIVOT_RATIO_TOL:e}",
                p.abs() / reference
            )));
        }
        for j in 0..K {
            a[col][j] /= p;
            inv[col][j] /= p;
        }
        for r in 0..K {
            if r != col {
                let f = a[r][col];
                if f != 0.0 {
                    for j in 0..K {
                        a[r][j] -= f * a[col][j];
                        inv[r][j] -= f * inv[col][j];
                    }
                }
            }
        }
    }
    for i in 0..K {
        for j in 0..K {
            inv[i][j] *= scale[i] * scale[j];
        }
    }
    Ok(inv)
}

fn gram<const K: usize>(rows: &[[f64; K]]) -> [[f64; K]; K] {
    let mut g = [[0.0; K]; K];
    for row in rows {
        for i in 0..K {
            for j in i..K {
                g[i][j] += row[i] * row[j];
            }
        }
    }
    for i in 0..K {
        for j in 0..i {
            g[i][j] = g[j][i];
        }
    }
    g
}

/// `M_{X2} v = v - X2 (X2'X2)^{-1} X2' v`.
pub fn annihilate(v: &[f64], x2: &[[f64; 2]]) -> Result<Vec<f64>> {
    if v.len() != x2.len() {
        return Err(IcrError::Argument(format!("vector length {} vs design rows {}", v.len(), x2.len())));
    }
    let inv = invert_gram(gram(x2))?;
    let mut xtv = [0.0; 2];
    for (row, vi) in x2.iter().zip(v) {
        xtv[0] += row[0] * vi;
        xtv[1] += row[1] * vi;
    }
    let b = [
        inv[0][0] * xtv[0] + inv[0][1] * xtv[1],
        inv[1][0] * xtv[0] + inv[1][1] * xtv[1],
    ];
    Ok(x2.iter().zip(v).map(|(row, vi)| vi - row[0] * b[0] - row[1] * b[1]).collect())
}

/// Diagonal of `P_X = X (X'X)^{-1} X'` for a three-column design.
pub fn hat_diagonals(x: &[[f64; 3]]) -> Result<LeverageVector> {
    let inv = invert_gram(gram(x))?;
    let cap = (x.len() as f64).sqrt().recip();
    let p_ii: Vec<f64> = x
        .iter()
        .map(|row| {
            let mut q = 0.0;
            for i in 0..3 {
                for j in 0..3 {
                    q += row[i] * inv[i][j] * row[j];
                }
            }
            q
        })
        .collect();
    let p_ii_star = p_ii.iter().map(|p| p.min(cap)).collect();
    Ok(LeverageVector { p_ii, p_ii_star })
}

/// Matrix-free annihilator for `X2(rho)` at a fixed sample length.
///
/// Holds the design's second column centred against the constant, so that
/// `M_{X2} v = (v - mean v) - (gc'v / gc'gc) gc`. Reusable across `rho`
/// values without reallocating.
#[derive(Debug, Clone)]
pub struct X2Projector {
    rho: f64,
    centered: Vec<f64>,
    ss: f64,
}

impl X2Projector {
    pub fn new(n: usize, rho: f64) -> Result<Self> {
        let mut p = Self { rho, centered: vec![0.0; n], ss: 0.0 };
        p.set_rho(rho)?;
        Ok(p)
    }

    /// Rebuilds the projector for a different hypothesized `rho`.
    pub fn set_rho(&mut self, rho: f64) -> Result<()> {
        check_rho(rho)?;
        let n = self.centered.len();
        if n < 3 {
            return Err(IcrError::Domain(format!("need at least 3 rows, got {n}")));
        }
        self.rho = rho;
        fill_second_column(rho, &mut self.centered);
        let raw_ss: f64 = self.centered.iter().map(|g| g * g).sum();
        let mean = self.centered.iter().sum::<f64>() / n as f64;
        let mut ss = 0.0;
        for g in self.centered.iter_mut() {
            *g -= mean;
            ss += *g * *g;
        }
        // Schur pivot of the equilibrated Gram after eliminating the constant.
        if !(ss > PIVOT_RATIO_TOL * raw_ss) {
            return Err(IcrError::SingularDesign(format!("X2 is rank deficient at rho = {rho}")));
        }
        self.ss = ss;
        Ok(())
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn len(&self) -> usize {
        self.centered.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centered.is_empty()
    }

    /// Second column centred on its mean.
    pub fn centered_column(&self) -> &[f64] {
        &self.centered
    }

    /// `gc'gc`.
    pub fn centered_ss(&self) -> f64 {
        self.ss
    }

    /// Writes `M_{X2} v` into `out`, given `v` already centred on its mean.
    pub fn annihilate_centered_into(&self, vc: &[f64], out: &mut [f64]) {
        let coef = self.centered.iter().zip(vc).map(|(g, v)| g * v).sum::<f64>() / self.ss;
        for ((o, v), g) in out.iter_mut().zip(vc).zip(&self.centered) {
            *o = v - coef * g;
        }
    }

    pub fn annihilate(&self, v: &[f64]) -> Vec<f64> {
        let mean = v.iter().sum::<f64>() / v.len() as f64;
        let vc: Vec<f64> = v.iter().map(|x| x - mean).collect();
        let mut out = vec![0.0; v.len()];
        self.annihilate_centered_into(&vc, &mut out);
        out
    }

    /// Diagonal element `i` of `P_{X2}`.
    pub fn leverage(&self, i: usize) -> f64 {
        let g = self.centered[i];
        (self.centered.len() as f64).recip() + g * g / self.ss
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn series(y: &[f64]) -> TimeSeries {
        TimeSeries::new(y.to_vec()).unwrap()
    }

    #[test]
    fn second_column_conventions() {
        let s = series(&[0.1, 0.2, 0.3, 0.4, 0.5]);
        let d = build_design(&s, 0.0).unwrap();
        assert_eq!(&d.x2[..3], &[[1.0, 1.0], [1.0, 0.0], [1.0, 0.0]]);
        let d = build_design(&s, 1.0).unwrap();
        assert_eq!(&d.x2[..3], &[[1.0, 1.0], [1.0, 2.0], [1.0, 3.0]]);
        let d = build_design(&s, 0.5).unwrap();
        assert_eq!(&d.x2[..3], &[[1.0, 1.0], [1.0, 0.5], [1.0, 0.25]]);
        assert_eq!(d.x1, vec![0.1, 0.2, 0.3, 0.4]);
    }

    #[test]
    fn build_design_rejects_bad_inputs() {
        assert!(build_design(&series(&[1.0, 2.0, 3.0, 4.0]), 0.5).is_err());
        assert!(build_design(&series(&[1.0, 2.0, 3.0, 4.0, 5.0]), 1.5).is_err());
        assert!(build_design(&series(&[1.0, 2.0, 3.0, 4.0, 5.0]), -1.0).is_err());
    }

    #[test]
    fn annihilator_kills_own_span() {
        let x2: Vec<[f64; 2]> = (0..6).map(|i| [1.0, 0.7f64.powi(i)]).collect();
        let col: Vec<f64> = x2.iter().map(|r| r[1]).collect();
        let out = annihilate(&col, &x2).unwrap();
        assert!(out.iter().all(|v| v.abs() < 1e-14));
    }

    #[test]
    fn annihilator_fixes_orthogonal_vectors() {
        let x2: Vec<[f64; 2]> = (1..=4).map(|i| [1.0, i as f64]).collect();
        // orthogonal to (1,1,1,1) and (1,2,3,4)
        let v = [1.0, -1.0, -1.0, 1.0];
        let out = annihilate(&v, &x2).unwrap();
        for (a, b) in out.iter().zip(&v) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn rank_deficient_design_is_singular() {
        let x2 = vec![[1.0, 2.0]; 5];
        assert!(matches!(annihilate(&[1.0; 5], &x2), Err(IcrError::SingularDesign(_))));
        let x = vec![[1.0, 1.0, 3.0]; 6];
        assert!(matches!(hat_diagonals(&x), Err(IcrError::SingularDesign(_))));
    }

    #[test]
    fn leverage_cap_and_trace() {
        // one outlying row forces a large leverage
        let x: Vec<[f64; 3]> = (0..9)
            .map(|i| {
                let t = i as f64;
                [if i == 8 { 40.0 } else { t.sin() }, 1.0, t]
            })
            .collect();
        let lev = hat_diagonals(&x).unwrap();
        let sum: f64 = lev.p_ii.iter().sum();
        assert!((sum - 3.0).abs() < 1e-8);
        assert!(lev.p_ii.iter().any(|p| *p > 1.0 / 3.0));
        for (p, ps) in lev.p_ii.iter().zip(&lev.p_ii_star) {
            assert!(*p >= -1e-12 && *p <= 1.0 + 1e-12);
            assert_eq!(*ps, p.min(1.0 / 3.0));
        }
    }

    #[test]
    fn trend_scaling_leaves_projection_unchanged() {
        let n = 12;
        let v: Vec<f64> = (0..n).map(|i| ((i * 7) % 5) as f64 - 1.3).collect();
        let raw: Vec<[f64; 2]> = (1..=n).map(|i| [1.0, i as f64]).collect();
        let scaled: Vec<[f64; 2]> = (1..=n).map(|i| [1.0, i as f64 / n as f64]).collect();
        let a = annihilate(&v, &raw).unwrap();
        let b = annihilate(&v, &scaled).unwrap();
        let p = X2Projector::new(n, 1.0).unwrap().annihilate(&v);
        for ((x, y), z) in a.iter().zip(&b).zip(&p) {
            assert!((x - y).abs() < 1e-12 && (x - z).abs() < 1e-12);
        }
        let full_raw: Vec<[f64; 3]> = raw.iter().zip(&v).map(|(r, x)| [*x, r[0], r[1]]).collect();
        let full_scaled: Vec<[f64; 3]> = scaled.iter().zip(&v).map(|(r, x)| [*x, r[0], r[1]]).collect();
        let la = hat_diagonals(&full_raw).unwrap();
        let lb = hat_diagonals(&full_scaled).unwrap();
        for (x, y) in la.p_ii.iter().zip(&lb.p_ii) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn projector_matches_generic_annihilator() {
        for rho in [-0.9, 0.0, 0.3, 0.95, 0.999, 1.0] {
            let n = 20;
            let v: Vec<f64> = (0..n).map(|i| (i as f64 * 1.7).cos() * 3.0 + 0.5).collect();
            let s = series(&(0..=n).map(|i| i as f64).collect::<Vec<_>>());
            let d = build_design(&s, rho).unwrap();
            let generic = annihilate(&v, &d.x2).unwrap();
            let proj = X2Projector::new(n, rho).unwrap();
            let fast = proj.annihilate(&v);
            for (a, b) in generic.iter().zip(&fast) {
                assert!((a - b).abs() < 1e-10, "rho={rho}");
            }
        }
    }
}
