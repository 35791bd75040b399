//! Critical-value tables `c_h(alpha)` and interpolated lookups.

use std::fmt::Write as _;
use std::path::Path;

use statrs::distribution::{ContinuousCDF, Normal};

use super::functionals::{empirical_quantile, sample_jh_many, PathGridConfig};
use crate::error::{IcrError, Result};

const BUNDLED_TABLE: &str = include_str!("../../data/critical_values.csv");

/// Quantile levels of the bundled table.
pub const DEFAULT_ALPHAS: [f64; 5] = [0.025, 0.05, 0.5, 0.95, 0.975];

/// The 39 `h` values of the bundled table.
pub const DEFAULT_H_GRID: [f64; 39] = [
    0.0, 0.2, 0.4, 0.6, 0.8, 1.0, 1.4, 1.8, 2.2, 2.6, 3.0, 3.4, 3.8, 4.2, 4.6, 5.0, 6.0, 7.0, 8.0, 9.0, 10.0,
    11.0, 12.0, 13.0, 14.0, 15.0, 20.0, 25.0, 30.0, 40.0, 50.0, 60.0, 70.0, 80.0, 90.0, 100.0, 200.0, 300.0, 500.0,
];

const ALPHA_MATCH_TOL: f64 = 1e-9;

/// Where a table's values came from.
#[derive(Debug, Clone, PartialEq)]
pub enum Provenance {
    /// The published two-decimal table shipped with the crate.
    Bundled,
    Simulated { cfg: PathGridConfig, resampled: usize },
    /// Loaded from a file whose comment block is not recognised.
    Unknown(Vec<String>),
}

/// `values[k][a]` is `c_{h_grid[k]}(alpha_grid[a])`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantileTable {
    pub h_grid: Vec<f64>,
    pub alpha_grid: Vec<f64>,
    pub values: Vec<Vec<f64>>,
    pub provenance: Provenance,
}

fn normal_quantile(alpha: f64) -> f64 {
    Normal::standard().inverse_cdf(alpha)
}

impl QuantileTable {
    pub fn new(h_grid: Vec<f64>, alpha_grid: Vec<f64>, values: Vec<Vec<f64>>, provenance: Provenance) -> Result<Self> {
        let t = Self { h_grid, alpha_grid, values, provenance };
        t.validate()?;
        Ok(t)
    }

    /// The verbatim published table.
    pub fn bundled() -> Self {
        Self::from_csv_str(BUNDLED_TABLE, "<bundled critical_values.csv>").expect("bundled table is well formed")
    }

    pub fn validate(&self) -> Result<()> {
        let invalid = |msg: String| Err(IcrError::Domain(msg));
        if self.h_grid.is_empty() || self.alpha_grid.is_empty() {
            return invalid("table grids must be nonempty".into());
        }
        if self.h_grid.iter().any(|h| !(h.is_finite() && *h >= 0.0)) {
            return invalid("table h values must be finite and nonnegative".into());
        }
        if self.h_grid.windows(2).any(|w| !(w[1] > w[0])) {
            return invalid("table h grid must be strictly increasing".into());
        }
        if self.alpha_grid.iter().any(|a| !(*a > 0.0 && *a < 1.0)) {
            return invalid("table alpha values must lie in (0, 1)".into());
        }
        if self.alpha_grid.windows(2).any(|w| !(w[1] > w[0])) {
            return invalid("table alpha grid must be strictly increasing".into());
        }
        if self.values.len() != self.h_grid.len() || self.values.iter().any(|r| r.len() != self.alpha_grid.len()) {
            return invalid("table values do not match the grid dimensions".into());
        }
        for (h, row) in self.h_grid.iter().zip(&self.values) {
            if row.iter().any(|v| !v.is_finite()) {
                return invalid(format!("table row h={h} has a non-finite value"));
            }
            if let Some(w) = row.windows(2).position(|w| w[1] < w[0]) {
                return invalid(format!(
                    "table row h={h} decreases in alpha between {} and {}",
                    self.alpha_grid[w],
                    self.alpha_grid[w + 1]
                ));
            }
        }
        Ok(())
    }

    /// Critical value at grid row `k`, interpolating linearly in `alpha`
    /// between bracketing grid levels.
    fn row_value(&self, k: usize, alpha: f64) -> Result<f64> {
        let grid = &self.alpha_grid;
        let row = &self.values[k];
        if let Some(a) = grid.iter().position(|g| (g - alpha).abs() <= ALPHA_MATCH_TOL) {
            return Ok(row[a]);
        }
        let hi = grid.partition_point(|g| *g < alpha);
        if hi == 0 || hi == grid.len() {
            return Err(IcrError::Domain(format!(
                "alpha = {alpha} outside the table's range [{}, {}]",
                grid[0],
                grid[grid.len() - 1]
            )));
        }
        let (a0, a1) = (grid[hi - 1], grid[hi]);
        let w = (alpha - a0) / (a1 - a0);
        Ok(row[hi - 1] + w * (row[hi] - row[hi - 1]))
    }

    /// `c_h(alpha)`: linear in `h` inside the grid, linear in `h^{-1/2}`
    /// between the last grid row and the normal limit beyond it.
    pub fn lookup(&self, h: f64, alpha: f64) -> Result<f64> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(IcrError::Domain(format!("alpha = {alpha} outside (0, 1)")));
        }
        if h.is_nan() || h < 0.0 {
            return Err(IcrError::Domain(format!("h = {h} must be nonnegative")));
        }
        if h == f64::INFINITY {
            return Ok(normal_quantile(alpha));
        }
        let grid = &self.h_grid;
        let last = grid.len() - 1;
        if h < grid[0] {
            return Err(IcrError::Domain(format!("h = {h} below the table's first row {}", grid[0])));
        }
        if h > grid[last] {
            let c_last = self.row_value(last, alpha)?;
            let z = normal_quantile(alpha);
            let frac = (grid[last] / h).sqrt();
            return Ok(z + frac * (c_last - z));
        }
        let hi = grid.partition_point(|g| *g < h);
        if grid[hi] == h {
            return self.row_value(hi, alpha);
        }
        let (h0, h1) = (grid[hi - 1], grid[hi]);
        let c0 = self.row_value(hi - 1, alpha)?;
        let c1 = self.row_value(hi, alpha)?;
        Ok(c0 + (h - h0) / (h1 - h0) * (c1 - c0))
    }

    pub fn to_csv_string(&self) -> String {
        let mut out = String::new();
        match &self.provenance {
            Provenance::Bundled => out.push_str("# source=paper-table-1\n"),
            Provenance::Simulated { cfg, resampled } => {
                let _ = writeln!(out, "# source=simulated");
                let _ = writeln!(out, "# seed={}", cfg.seed);
                let _ = writeln!(out, "# paths={}", cfg.n_paths);
                let _ = writeln!(out, "# steps={}", cfg.n_steps);
                let _ = writeln!(out, "# resampled={resampled}");
            }
            Provenance::Unknown(lines) => {
                for l in lines {
                    let _ = writeln!(out, "# {l}");
                }
            }
        }
        out.push_str("h,alpha,c\n");
        for (h, row) in self.h_grid.iter().zip(&self.values) {
            for (a, c) in self.alpha_grid.iter().zip(row) {
                let _ = writeln!(out, "{h},{a},{c}");
            }
        }
        out
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv_string()).map_err(|e| IcrError::io(path, e))
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| IcrError::io(path, e))?;
        Self::from_csv_str(&text, &path.display().to_string())
    }

    /// Parses the `h,alpha,c` format. Comment lines start with `#`; rows may
    /// appear in any order but must cover the full `h x alpha` grid.
    pub fn from_csv_str(text: &str, origin: &str) -> Result<Self> {
        let parse_err = |line: u64, msg: String| IcrError::Parse { path: origin.to_string(), line, msg };
        let mut comments = Vec::new();
        let mut header_seen = false;
        let mut entries: Vec<(f64, f64, f64)> = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx as u64 + 1;
            let line = raw.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(c) = line.strip_prefix('#') {
                comments.push(c.trim().to_string());
                continue;
            }
            if !header_seen {
                let cols: Vec<&str> = line.split(',').map(str::trim).collect();
                if cols != ["h", "alpha", "c"] {
                    return Err(parse_err(line_no, format!("expected header `h,alpha,c`, found `{line}`")));
                }
                header_seen = true;
                continue;
            }
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            if fields.len() != 3 {
                return Err(parse_err(line_no, format!("expected 3 fields, found {}", fields.len())));
            }
            let mut nums = [0.0; 3];
            for (slot, f) in nums.iter_mut().zip(&fields) {
                *slot = f.parse().map_err(|_| parse_err(line_no, format!("`{f}` is not a number")))?;
            }
            entries.push((nums[0], nums[1], nums[2]));
        }
        if !header_seen {
            return Err(parse_err(1, "missing header `h,alpha,c`".into()));
        }
        let mut h_grid: Vec<f64> = entries.iter().map(|e| e.0).collect();
        let mut alpha_grid: Vec<f64> = entries.iter().map(|e| e.1).collect();
        for g in [&mut h_grid, &mut alpha_grid] {
            g.sort_by(f64::total_cmp);
            g.dedup();
        }
        let mut values = vec![vec![f64::NAN; alpha_grid.len()]; h_grid.len()];
        for &(h, a, c) in &entries {
            let k = h_grid.partition_point(|x| *x < h);
            let j = alpha_grid.partition_point(|x| *x < a);
            if !values[k][j].is_nan() {
                return Err(parse_err(0, format!("duplicate entry for h={h}, alpha={a}")));
            }
            values[k][j] = c;
        }
        if let Some((k, j)) = values
            .iter()
            .enumerate()
            .find_map(|(k, row)| row.iter().position(|v| v.is_nan()).map(|j| (k, j)))
        {
            return Err(parse_err(0, format!("missing entry for h={}, alpha={}", h_grid[k], alpha_grid[j])));
        }
        let provenance = parse_provenance(&comments);
        Self::new(h_grid, alpha_grid, values, provenance)
    }
}

fn parse_provenance(comments: &[String]) -> Provenance {
    let get = |key: &str| {
        comments
            .iter()
            .find_map(|c| c.strip_prefix(key).and_then(|rest| rest.strip_prefix('=')).map(str::trim))
    };
    match get("source") {
        Some("paper-table-1") => Provenance::Bundled,
        Some("simulated") => {
            let num = |k| get(k).and_then(|v| v.parse::<u64>().ok());
            match (num("seed"), num("paths"), num("steps")) {
                (Some(seed), Some(paths), Some(steps)) => Provenance::Simulated {
                    cfg: PathGridConfig { n_steps: steps as usize, n_paths: paths as usize, seed },
                    resampled: num("resampled").unwrap_or(0) as usize,
                },
                _ => Provenance::Unknown(comments.to_vec()),
            }
        }
        _ => Provenance::Unknown(comments.to_vec()),
    }
}

/// Simulates `c_h(alpha)` over the given grids. All `h` share the same
/// Brownian paths and every `alpha` is read from the same sorted sample.
pub fn build_table(h_grid: &[f64], alpha_grid: &[f64], cfg: &PathGridConfig) -> Result<QuantileTable> {
    if alpha_grid.is_empty() || alpha_grid.iter().any(|a| !(*a > 0.0 && *a < 1.0)) {
        return Err(IcrError::Argument("alpha grid must be nonempty within (0, 1)".into()));
    }
    if alpha_grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(IcrError::Argument("alpha grid must be strictly increasing".into()));
    }
    if h_grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(IcrError::Argument("h grid must be strictly increasing".into()));
    }
    let sample = sample_jh_many(h_grid, cfg)?;
    let values = sample
        .draws
        .into_iter()
        .map(|mut d| {
            d.sort_unstable_by(f64::total_cmp);
            alpha_grid.iter().map(|&a| empirical_quantile(&d, a)).collect()
        })
        .collect();
    let t = QuantileTable::new(
        h_grid.to_vec(),
        alpha_grid.to_vec(),
        values,
        Provenance::Simulated { cfg: *cfg, resampled: sample.resampled },
    )?;
    Ok(t)
}

/// Free-function form of [`QuantileTable::lookup`].
pub fn lookup(table: &QuantileTable, h: f64, alpha: f64) -> Result<f64> {
    table.lookup(h, alpha)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_table_shape_and_anchors() {
        let t = QuantileTable::bundled();
        assert_eq!(t.h_grid, DEFAULT_H_GRID.to_vec());
        assert_eq!(t.alpha_grid, DEFAULT_ALPHAS.to_vec());
        assert_eq!(t.provenance, Provenance::Bundled);
        assert_eq!(t.lookup(0.0, 0.025).unwrap(), -3.66);
        assert_eq!(t.lookup(100.0, 0.975).unwrap(), 1.68);
        assert_eq!(t.lookup(1.0, 0.5).unwrap(), -1.95);
    }

    #[test]
    fn h_interpolation_rules() {
        let t = QuantileTable::bundled();
        assert!((t.lookup(0.1, 0.05).unwrap() - (-3.395)).abs() < 1e-12);
        assert_eq!(t.lookup(f64::INFINITY, 0.5).unwrap(), 0.0);
        let z = normal_quantile(0.975);
        assert!((t.lookup(f64::INFINITY, 0.975).unwrap() - z).abs() < 1e-12);
        // beyond the grid: halfway in h^{-1/2} between 500 and infinity
        let v = t.lookup(2000.0, 0.975).unwrap();
        assert!((v - (z + 0.5 * (1.83 - z))).abs() < 1e-12);
        assert!(t.lookup(-1.0, 0.5).is_err());
    }

    #[test]
    fn alpha_domain() {
        let t = QuantileTable::bundled();
        assert!(t.lookup(1.0, 0.0).is_err());
        assert!(t.lookup(1.0, 1.2).is_err());
        assert!(t.lookup(1.0, 0.01).is_err());
        let mid = t.lookup(0.0, 0.0375).unwrap();
        assert!((mid - (-3.66 - 3.41) / 2.0).abs() < 1e-12);
    }

    #[test]
    fn csv_round_trip() {
        let t = QuantileTable::bundled();
        let again = QuantileTable::from_csv_str(&t.to_csv_string(), "x").unwrap();
        assert_eq!(t, again);
    }

    #[test]
    fn non_monotone_row_rejected() {
        let text = "h,alpha,c\n0,0.05,-1\n0,0.5,-2\n";
        let err = QuantileTable::from_csv_str(text, "bad.csv").unwrap_err();
        assert!(err.to_string().contains("h=0"), "{err}");
    }

    #[test]
    fn malformed_csv_reports_line() {
        let err = QuantileTable::from_csv_str("# c\nh,alpha,c\n0,0.5,abc\n", "f.csv").unwrap_err();
        assert!(matches!(err, IcrError::Parse { line: 3, .. }), "{err}");
        assert!(QuantileTable::from_csv_str("a,b\n", "f.csv").is_err());
        assert!(QuantileTable::from_csv_str("h,alpha,c\n0,0.5,1\n1,0.05,0\n", "f.csv").is_err());
    }

    #[test]
    fn median_row_is_nearly_monotone_in_h() {
        let t = QuantileTable::bundled();
        let med: Vec<f64> = (0..t.h_grid.len()).map(|k| t.row_value(k, 0.5).unwrap()).collect();
        assert!(med.windows(2).all(|w| w[1] >= w[0]));
    }
}
