//! Median-unbiased estimates next to the least squares fit, across rho.

use icr::estimator::icr_estimate;
use icr::tssim::{simulate_replication, InitialConditionSpec, InnovationSpec, ModelParams};
use icr::{mue, QuantileTable};

fn main() -> icr::Result<()> {
    let table = QuantileTable::bundled();
    println!("{:>6} {:>9} {:>9} {:>9} {:>6}", "rho", "rho_low", "rho_up", "ls(1)", "point");
    for rho in [0.0, 0.5, 0.9, 0.99, 1.0] {
        let model = ModelParams::new(0.0, rho, 150)?;
        let s = simulate_replication(&model, &InnovationSpec::Iid, &InitialConditionSpec::default(), 3, 0)?;
        let m = mue(&s, &table, 1e-3)?;
        // rho_hat at rho = 1 is the fit with a linear trend
        let ls = icr_estimate(&s, 1.0)?.rho_hat;
        println!("{rho:>6} {:>9.4} {:>9.4} {ls:>9.4} {:>6}", m.rho_low, m.rho_up, m.is_point);
    }
    Ok(())
}
