//! 95% and 90% intervals for rho from one simulated series.

use icr::tssim::{simulate_replication, InitialCondition, InitialConditionSpec, InnovationSpec, ModelParams};
use icr::{invert_ci, QuantileTable};

fn main() -> icr::Result<()> {
    let table = QuantileTable::bundled();
    let model = ModelParams::new(0.0, 0.95, 150)?;
    let init = InitialConditionSpec::new(InitialCondition::Stationary);
    let series = simulate_replication(&model, &InnovationSpec::GARCH2, &init, 7, 0)?;
    for alpha in [0.05, 0.10] {
        let ci = invert_ci(&series, alpha, &table, 1e-3)?;
        println!(
            "{:>3.0}% CI: [{:.3}, {:.3}]  length {:.3}  disconnected {}",
            100.0 * (1.0 - alpha),
            ci.lower,
            ci.upper,
            ci.length(),
            ci.disconnected
        );
    }
    Ok(())
}
