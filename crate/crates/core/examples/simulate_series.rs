//! Draw AR(1) samples under each innovation design and initial condition.

use icr::tssim::{simulate_replication, InitialCondition, InitialConditionSpec, InnovationSpec, ModelParams};

fn main() -> icr::Result<()> {
    let model = ModelParams::new(1.0, 0.9, 150)?;
    println!("{:<8} {:<11} {:>10} {:>10} {:>10}", "innov", "init", "Y_0", "mean", "sd");
    for (name, innov) in InnovationSpec::study_presets() {
        for init in InitialCondition::ALL {
            let s = simulate_replication(&model, &innov, &InitialConditionSpec::new(init), 42, 0)?;
            let y = s.y();
            let mean = y.iter().sum::<f64>() / y.len() as f64;
            let sd = (y.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (y.len() - 1) as f64).sqrt();
            println!("{name:<8} {:<11} {:>10.3} {mean:>10.3} {sd:>10.3}", init.label(), y[0]);
        }
    }
    Ok(())
}
