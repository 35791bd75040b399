//! T_n(rho) across the parameter space with the acceptance band.

use icr::estimator::t_profile;
use icr::inference::drift;
use icr::tssim::{simulate_replication, InitialConditionSpec, InnovationSpec, ModelParams};
use icr::QuantileTable;

fn main() -> icr::Result<()> {
    let table = QuantileTable::bundled();
    let model = ModelParams::new(0.0, 0.8, 150)?;
    let s = simulate_replication(&model, &InnovationSpec::Iid, &InitialConditionSpec::default(), 9, 0)?;
    let grid: Vec<f64> = (0..=20).map(|k| 0.5 + 0.025 * k as f64).collect();
    println!("{:>6} {:>8} {:>8} {:>8}", "rho", "lo", "T_n", "hi");
    for p in t_profile(&s, &grid)? {
        let h = drift(s.n(), p.rho);
        let t = p.result.map(|r| r.t).unwrap_or(f64::NAN);
        let (lo, hi) = (table.lookup(h, 0.025)?, table.lookup(h, 0.975)?);
        let mark = if lo <= t && t <= hi { "*" } else { "" };
        println!("{:>6.3} {lo:>8.3} {t:>8.3} {hi:>8.3} {mark}", p.rho);
    }
    Ok(())
}
