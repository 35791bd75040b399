//! Monte Carlo coverage studies: coverage probability, average length and
//! absolute median bias of the interval procedures over a design grid.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::Serialize;

use crate::asymdist::QuantileTable;
use crate::error::{IcrError, Result};
use crate::inference::{accepts_at, rho_grid, StatProfile, DEFAULT_EPSILON, DEFAULT_GRID_STEP};
use crate::tssim::{simulate_replication, InitialCondition, InitialConditionSpec, InnovationSpec, ModelParams};

/// One cell of a simulation design.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioSpec {
    /// Label used in result files; empty means "use the cell index".
    pub id: String,
    pub model: ModelParams,
    pub innov: InnovationSpec,
    pub init: InitialConditionSpec,
    pub reps: usize,
    pub alpha: f64,
    pub seed: u64,
    pub grid_step: f64,
}

impl ScenarioSpec {
    /// IID errors, fixed initial condition, `n = 150`, 95% intervals.
    pub fn new(rho: f64) -> Result<Self> {
        Ok(Self {
            id: String::new(),
            model: ModelParams::new(0.0, rho, 150)?,
            innov: InnovationSpec::Iid,
            init: InitialConditionSpec::new(InitialCondition::Fixed0),
            reps: 2000,
            alpha: 0.05,
            seed: 1,
            grid_step: DEFAULT_GRID_STEP,
        })
    }

    pub fn with_innov(mut self, innov: InnovationSpec) -> Self {
        self.innov = innov;
        self
    }

    pub fn with_init(mut self, kind: InitialCondition) -> Self {
        self.init = InitialConditionSpec::new(kind);
        self
    }

    pub fn with_reps(mut self, reps: usize) -> Self {
        self.reps = reps;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.model.validate()?;
        self.innov.validate()?;
        self.init.validate()?;
        if self.reps == 0 {
            return Err(IcrError::config("reps", "must be at least 1"));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(IcrError::config("alpha", format!("{} must lie in (0, 1)", self.alpha)));
        }
        if !(self.grid_step > 0.0 && self.grid_step < 1.0) {
            return Err(IcrError::config("grid_step", format!("{} must lie in (0, 1)", self.grid_step)));
        }
        if self.model.rho >= 1.0 && self.init.kind != InitialCondition::Fixed0 {
            return Err(IcrError::Domain(format!(
                "{} initial condition is undefined at rho = 1",
                self.init.kind.label()
            )));
        }
        Ok(())
    }
}

/// Outcome of one replication.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Replication {
    pub covered: bool,
    pub length: f64,
    pub empty: bool,
    pub disconnected: bool,
    pub mue: f64,
    pub estimator_errors: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct McSummary {
    pub reps: usize,
    pub cp: f64,
    pub avg_length: f64,
    pub abs_median_bias: f64,
    pub empty_ci_count: usize,
    pub disconnected_count: usize,
    /// Replications with at least one grid point where `T_n` failed.
    pub reps_with_estimator_errors: usize,
    pub mc_standard_error_cp: f64,
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_unstable_by(f64::total_cmp);
    let m = values.len() / 2;
    if values.len() % 2 == 1 {
        values[m]
    } else {
        0.5 * (values[m - 1] + values[m])
    }
}

impl McSummary {
    pub fn from_replications(rho_true: f64, reps: &[Replication]) -> Self {
        let r = reps.len() as f64;
        let covered = reps.iter().filter(|x| x.covered).count();
        let cp = covered as f64 / r;
        let mut mues: Vec<f64> = reps.iter().map(|x| x.mue).collect();
        Self {
            reps: reps.len(),
            cp,
            avg_length: reps.iter().map(|x| x.length).sum::<f64>() / r,
            abs_median_bias: (median(&mut mues) - rho_true).abs(),
            empty_ci_count: reps.iter().filter(|x| x.empty).count(),
            disconnected_count: reps.iter().filter(|x| x.disconnected).count(),
            reps_with_estimator_errors: reps.iter().filter(|x| x.estimator_errors > 0).count(),
            mc_standard_error_cp: (cp * (1.0 - cp) / r).sqrt(),
        }
    }
}

fn replicate(spec: &ScenarioSpec, init: &InitialConditionSpec, grid: &[f64], table: &QuantileTable, rep: u64) -> Result<Replication> {
    let series = simulate_replication(&spec.model, &spec.innov, init, spec.seed, rep)?;
    let profile = StatProfile::compute(&series, grid)?;
    let ci = profile.interval(spec.alpha, table, spec.grid_step)?;
    let mue = profile.mue(table, spec.grid_step)?;
    Ok(Replication {
        covered: accepts_at(&series, spec.model.rho, spec.alpha, table)?,
        length: ci.length(),
        empty: ci.empty,
        disconnected: ci.disconnected,
        mue: mue.point_estimate(),
        estimator_errors: ci.diagnostics.estimator_errors,
    })
}

/// Per-replication outcomes for a cell, in replication order.
pub fn run_replications(spec: &ScenarioSpec, table: &QuantileTable) -> Result<Vec<Replication>> {
    spec.validate()?;
    let grid = rho_grid(spec.grid_step, DEFAULT_EPSILON)?;
    (0..spec.reps as u64)
        .into_par_iter()
        .map(|rep| replicate(spec, &spec.init, &grid, table, rep))
        .collect()
}

pub fn run_cell(spec: &ScenarioSpec, table: &QuantileTable) -> Result<McSummary> {
    let reps = run_replications(spec, table)?;
    Ok(McSummary::from_replications(spec.model.rho, &reps))
}

/// Summaries for a list of cells.
#[derive(Debug, Clone)]
pub struct GridResults {
    pub cells: Vec<(ScenarioSpec, McSummary)>,
}

pub fn run_grid(specs: &[ScenarioSpec], table: &QuantileTable) -> Result<GridResults> {
    if specs.is_empty() {
        return Err(IcrError::Argument("no scenario cells given".into()));
    }
    let cells = specs
        .iter()
        .map(|s| run_cell(s, table).map(|m| (s.clone(), m)))
        .collect::<Result<Vec<_>>>()?;
    Ok(GridResults { cells })
}

impl GridResults {
    fn cell_id(idx: usize, spec: &ScenarioSpec) -> String {
        if spec.id.is_empty() {
            idx.to_string()
        } else {
            spec.id.clone()
        }
    }

    /// `cell_id,innov,init,rho,cp,al,amb,empty_ci,mc_se`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("cell_id,innov,init,rho,cp,al,amb,empty_ci,mc_se\n");
        for (i, (spec, m)) in self.cells.iter().enumerate() {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{}",
                Self::cell_id(i, spec),
                spec.innov.label(),
                spec.init.kind.label(),
                spec.model.rho,
                m.cp,
                m.avg_length,
                m.abs_median_bias,
                m.empty_ci_count,
                m.mc_standard_error_cp
            );
        }
        out
    }

    /// Text tables with initial-condition panels, innovation rows and `rho`
    /// columns, one block each for CP (x100), AL and AMB.
    pub fn render_text(&self) -> String {
        let mut rhos: Vec<f64> = self.cells.iter().map(|(s, _)| s.model.rho).collect();
        rhos.sort_by(f64::total_cmp);
        rhos.dedup();
        let mut inits: Vec<InitialCondition> = Vec::new();
        let mut innovs: Vec<String> = Vec::new();
        let mut lookup: BTreeMap<(String, &'static str, u64), McSummary> = BTreeMap::new();
        for (spec, m) in &self.cells {
            if !inits.contains(&spec.init.kind) {
                inits.push(spec.init.kind);
            }
            let label = spec.innov.label();
            if !innovs.contains(&label) {
                innovs.push(label.clone());
            }
            lookup.insert((label, spec.init.kind.label(), spec.model.rho.to_bits()), *m);
        }
        let metrics: [(&str, fn(&McSummary) -> String); 3] = [
            ("Coverage probability (x100)", |m| format!("{:.1}", 100.0 * m.cp)),
            ("Average length", |m| format!("{:.3}", m.avg_length)),
            ("Absolute median bias", |m| format!("{:.3}", m.abs_median_bias)),
        ];
        let mut out = String::new();
        for (title, fmt) in metrics {
            let _ = writeln!(out, "{title}");
            for init in &inits {
                let _ = write!(out, "  {:<12}", init.label());
                for r in &rhos {
                    let _ = write!(out, "{:>8}", format!("{r}"));
                }
                out.push('\n');
                for innov in &innovs {
                    let _ = write!(out, "  {:<12}", innov);
                    for r in &rhos {
                        let cell = lookup
                            .get(&(innov.clone(), init.label(), r.to_bits()))
                            .map(fmt)
                            .unwrap_or_else(|| "-".into());
                        let _ = write!(out, "{cell:>8}");
                    }
                    out.push('\n');
                }
            }
            out.push('\n');
        }
        out
    }
}

/// Coverage indicators of one cell under two initial-condition regimes that
/// share innovation substreams.
#[derive(Debug, Clone)]
pub struct InvarianceCheck {
    pub base: Vec<Replication>,
    pub other: Vec<Replication>,
}

impl InvarianceCheck {
    /// Per-replication agreement of the coverage indicator.
    pub fn agreement(&self) -> Vec<bool> {
        self.base.iter().zip(&self.other).map(|(a, b)| a.covered == b.covered).collect()
    }

    pub fn all_identical(&self) -> bool {
        self.agreement().into_iter().all(|x| x)
    }

    pub fn mean_lengths(&self) -> (f64, f64) {
        let mean = |v: &[Replication]| v.iter().map(|r| r.length).sum::<f64>() / v.len() as f64;
        (mean(&self.base), mean(&self.other))
    }
}

/// Runs `spec` as given and again with `other` as initial condition.
pub fn initial_condition_invariance_check(
    spec: &ScenarioSpec,
    other: InitialConditionSpec,
    table: &QuantileTable,
) -> Result<InvarianceCheck> {
    let alt = ScenarioSpec { init: other, ..spec.clone() };
    alt.validate()?;
    Ok(InvarianceCheck { base: run_replications(spec, table)?, other: run_replications(&alt, table)? })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_replication_summary() {
        let table = QuantileTable::bundled();
        let spec = ScenarioSpec::new(0.5).unwrap().with_reps(1).with_seed(4);
        let reps = run_replications(&spec, &table).unwrap();
        let m = run_cell(&spec, &table).unwrap();
        assert!(m.cp == 0.0 || m.cp == 1.0);
        assert_eq!(m.avg_length, reps[0].length);
        assert_eq!(m.abs_median_bias, (reps[0].mue - 0.5).abs());
    }

    #[test]
    fn zero_reps_is_config_error() {
        let table = QuantileTable::bundled();
        let spec = ScenarioSpec::new(0.5).unwrap().with_reps(0);
        assert!(matches!(run_cell(&spec, &table), Err(IcrError::Config { .. })));
    }

    #[test]
    fn unit_root_with_scaled_init_rejected() {
        let spec = ScenarioSpec::new(1.0).unwrap().with_init(InitialCondition::ScaledSqrtN);
        assert!(matches!(spec.validate(), Err(IcrError::Domain(_))));
    }

    #[test]
    fn summary_standard_error() {
        let rep = |covered| Replication {
            covered,
            length: 0.2,
            empty: false,
            disconnected: false,
            mue: 0.4,
            estimator_errors: 0,
        };
        let reps = [rep(true), rep(true), rep(false), rep(true)];
        let m = McSummary::from_replications(0.5, &reps);
        assert_eq!(m.cp, 0.75);
        assert!((m.mc_standard_error_cp - (0.75f64 * 0.25 / 4.0).sqrt()).abs() < 1e-15);
        assert!((m.abs_median_bias - 0.1).abs() < 1e-12);
    }

    #[test]
    fn median_even_and_odd() {
        assert_eq!(median(&mut [3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&mut [4.0, 1.0, 2.0, 3.0]), 2.5);
    }

    #[test]
    fn thread_count_does_not_change_results() {
        let table = QuantileTable::bundled();
        let spec = ScenarioSpec::new(0.9).unwrap().with_innov(InnovationSpec::GARCH2).with_reps(16);
        let a = run_cell(&spec, &table).unwrap();
        let pool = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap();
        let b = pool.install(|| run_cell(&spec, &table).unwrap());
        assert_eq!(a, b);
    }

    #[test]
    fn text_rendering_has_panels() {
        let table = QuantileTable::bundled();
        let specs: Vec<ScenarioSpec> = [0.0, 0.9]
            .iter()
            .map(|&r| ScenarioSpec::new(r).unwrap().with_reps(3))
            .collect();
        let res = run_grid(&specs, &table).unwrap();
        let text = res.render_text();
        assert!(text.contains("fixed") && text.contains("iid") && text.contains("0.9"));
        let csv = res.to_csv();
        assert_eq!(csv.lines().count(), 3);
        assert!(csv.starts_with("cell_id,innov,init,rho,cp,al,amb,empty_ci,mc_se\n"));
    }
}
