//! Step-size schedules and the convergence conditions they satisfy.

use loggap::agents::{Rate, StepSchedule};

fn main() -> loggap::Result<()> {
    let decaying = StepSchedule::polynomial(0.3, 0.4)?;
    println!("{}\n", decaying.validate());
    for t in [0, 10, 1_000, 100_000] {
        let (log, reg) = decaying.rates(t);
        println!("t = {t:>6}: beta_log = {log:.5}, beta_reg = {reg:.5}");
    }

    let constant_reg = StepSchedule::new(Rate::polynomial(0.4), Rate::constant(0.5))?;
    println!("\n{}", constant_reg.validate());

    if let Err(e) = StepSchedule::polynomial(0.7, 0.6) {
        println!("\nrejected: {e}");
    }
    Ok(())
}
