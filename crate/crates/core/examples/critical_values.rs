//! Simulate a few quantiles of the limit law and compare them with the
//! bundled table. Increase paths and steps for publication accuracy.

use icr::asymdist::{build_table, PathGridConfig, QuantileTable};

fn main() -> icr::Result<()> {
    let paths = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(5_000);
    let cfg = PathGridConfig::new(1_000, paths, 1)?;
    let hs = [0.0, 5.0, 50.0];
    let alphas = [0.025, 0.5, 0.975];
    let sim = build_table(&hs, &alphas, &cfg)?;
    let bundled = QuantileTable::bundled();
    for h in hs {
        for a in alphas {
            println!("c_{h}({a}): simulated {:>7.3}  bundled {:>7.3}", sim.lookup(h, a)?, bundled.lookup(h, a)?);
        }
    }
    println!("c_inf(0.975) = {:.4}", bundled.lookup(f64::INFINITY, 0.975)?);
    println!("c_2000(0.975) = {:.4} (between the last row and the normal limit)", bundled.lookup(2000.0, 0.975)?);
    Ok(())
}
