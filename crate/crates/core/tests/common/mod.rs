//! Independent reference implementations shared by the integration tests.
#![allow(dead_code)]

use icr::asymdist::QuantileTable;
use icr::estimator::icr_estimate;
use icr::rng::{substream, Domain};
use icr::tssim::{draw_innovations, series_from_innovations, InnovationSpec, TimeSeries};

/// `(rho_hat, sigma2_hat, t)` from the dense 3-column normal equations.
#[derive(Debug, Clone, Copy)]
pub struct DenseFit {
    pub rho_hat: f64,
    pub sigma2_hat: f64,
    pub t: f64,
}

fn det3(a: &[[f64; 3]; 3]) -> f64 {
    a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1]) - a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0])
        + a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0])
}

/// Inverse by cofactors.
pub fn inv3(a: &[[f64; 3]; 3]) -> [[f64; 3]; 3] {
    let d = det3(a);
    let mut out = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            let (r0, r1) = ((j + 1) % 3, (j + 2) % 3);
            let (c0, c1) = ((i + 1) % 3, (i + 2) % 3);
            out[i][j] = (a[r0][c0] * a[r1][c1] - a[r0][c1] * a[r1][c0]) / d;
        }
    }
    out
}

/// Dense fit of `Y_i` on `(Y_{i-1}, 1, g_i)` with the HC5 sandwich.
pub fn dense_fit(y: &[f64], rho: f64) -> DenseFit {
    let n = y.len() - 1;
    let nf = n as f64;
    let rows: Vec<[f64; 3]> = (1..=n)
        .map(|i| {
            let g = if rho == 1.0 { i as f64 } else { rho.powi(i as i32 - 1) };
            [y[i - 1], 1.0, g]
        })
        .collect();
    let resp = &y[1..];
    // Equilibrate columns before the cofactor inverse.
    let mut scale = [0.0f64; 3];
    for r in &rows {
        for k in 0..3 {
            scale[k] += r[k] * r[k];
        }
    }
    let scale = scale.map(|s| s.sqrt().recip());
    let xs: Vec<[f64; 3]> = rows.iter().map(|r| [r[0] * scale[0], r[1] * scale[1], r[2] * scale[2]]).collect();
    let mut g = [[0.0; 3]; 3];
    let mut xty = [0.0; 3];
    for (r, yi) in xs.iter().zip(resp) {
        for a in 0..3 {
            xty[a] += r[a] * yi;
            for b in 0..3 {
                g[a][b] += r[a] * r[b];
            }
        }
    }
    let gi = inv3(&g);
    let beta: Vec<f64> = (0..3).map(|a| (0..3).map(|b| gi[a][b] * xty[b]).sum()).collect();
    let cap = nf.sqrt().recip();
    let mut meat = [[0.0; 3]; 3];
    for (r, yi) in xs.iter().zip(resp) {
        let fitted: f64 = (0..3).map(|k| r[k] * beta[k]).sum();
        let u = yi - fitted;
        let p: f64 = (0..3).map(|a| (0..3).map(|b| r[a] * gi[a][b] * r[b]).sum::<f64>()).sum();
        let d = u / (1.0 - p.min(cap));
        for a in 0..3 {
            for b in 0..3 {
                meat[a][b] += r[a] * r[b] * d * d;
            }
        }
    }
    let mut v00 = 0.0;
    for a in 0..3 {
        for b in 0..3 {
            v00 += gi[0][a] * meat[a][b] * gi[b][0];
        }
    }
    let rho_hat = beta[0] * scale[0];
    let sigma2_hat = nf * v00 * scale[0] * scale[0];
    let t = nf.sqrt() * (rho_hat - rho) / sigma2_hat.sqrt();
    DenseFit { rho_hat, sigma2_hat, t }
}

/// `I_h(r_j) = sum_{k <= j} exp(-h (j - k) / N) dW_k`.
pub fn brute_force_ih(h: f64, dw: &[f64]) -> Vec<f64> {
    let n = dw.len() as f64;
    (0..dw.len()).map(|j| (0..=j).map(|k| (-h * (j - k) as f64 / n).exp() * dw[k]).sum()).collect()
}

/// Projection of `path` off `f(r) = (1, e^{-hr})` (or `(1, r)` at `h = 0`)
/// with the exact Gram matrix and right-endpoint Riemann sums.
pub fn gram_projection(h: f64, path: &[f64], dt: f64) -> Vec<f64> {
    let f2 = |r: f64| if h == 0.0 { r } else { (-h * r).exp() };
    let (g01, g11) = if h == 0.0 {
        (0.5, 1.0 / 3.0)
    } else {
        ((1.0 - (-h).exp()) / h, (1.0 - (-2.0 * h).exp()) / (2.0 * h))
    };
    let (mut b0, mut b1) = (0.0, 0.0);
    for (j, v) in path.iter().enumerate() {
        let r = (j + 1) as f64 * dt;
        b0 += v * dt;
        b1 += f2(r) * v * dt;
    }
    let det = g11 - g01 * g01;
    let c0 = (g11 * b0 - g01 * b1) / det;
    let c1 = (b1 - g01 * b0) / det;
    path.iter()
        .enumerate()
        .map(|(j, v)| v - c0 - c1 * f2((j + 1) as f64 * dt))
        .collect()
}

/// Accepted endpoints of a brute-force scan over `[-1 + 1e-3, 1]` at `step`,
/// evaluating every point independently.
pub fn scan_ci(series: &TimeSeries, alpha: f64, table: &QuantileTable, step: f64) -> Option<(f64, f64)> {
    let n = series.n() as f64;
    let m = (1.0 / step).round() as i64;
    let first = ((-1.0 + 1e-3) * m as f64).ceil() as i64;
    let mut lo = None;
    let mut hi = None;
    for k in first..=m {
        let rho = k as f64 / m as f64;
        let Ok(fit) = icr_estimate(series, rho) else { continue };
        let h = n * (1.0 - rho);
        let ok = table.lookup(h, alpha / 2.0).unwrap() <= fit.t && fit.t <= table.lookup(h, 1.0 - alpha / 2.0).unwrap();
        if ok {
            lo.get_or_insert(rho);
            hi = Some(rho);
        }
    }
    lo.zip(hi)
}

/// Largest scanned `rho` with `T_n(rho) >= c_h(.5)`.
pub fn scan_mue_up(series: &TimeSeries, table: &QuantileTable, step: f64) -> Option<f64> {
    let n = series.n() as f64;
    let m = (1.0 / step).round() as i64;
    let first = ((-1.0 + 1e-3) * m as f64).ceil() as i64;
    (first..=m).rev().map(|k| k as f64 / m as f64).find(|&rho| match icr_estimate(series, rho) {
        Ok(fit) => fit.t >= table.lookup(n * (1.0 - rho), 0.5).unwrap(),
        Err(_) => false,
    })
}

/// IID innovations for replication `rep` of a test stream.
pub fn iid_innovations(seed: u64, rep: u64, n: usize) -> Vec<f64> {
    draw_innovations(&InnovationSpec::Iid, n, &mut substream(seed, Domain::Innovations, rep)).unwrap()
}

pub fn ar1(mu: f64, rho: f64, y0: f64, u: &[f64]) -> TimeSeries {
    series_from_innovations(mu, rho, y0, u).unwrap()
}

pub fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}
