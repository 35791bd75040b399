//! A small coverage study over innovations and rho. Pass a replication
//! count to change the default of 200.

use icr::mc::{run_grid, ScenarioSpec};
use icr::tssim::InnovationSpec;
use icr::QuantileTable;

fn main() -> icr::Result<()> {
    let reps = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(200);
    let mut specs = Vec::new();
    for innov in [InnovationSpec::Iid, InnovationSpec::GARCH3] {
        for rho in [0.0, 0.9, 0.99] {
            specs.push(ScenarioSpec::new(rho)?.with_innov(innov).with_reps(reps).with_seed(11));
        }
    }
    let results = run_grid(&specs, &QuantileTable::bundled())?;
    print!("{}", results.render_text());
    print!("{}", results.to_csv());
    Ok(())
}
