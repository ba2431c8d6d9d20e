//! RMS error against Q* while learning, for two schedules with the same
//! beta_log * beta_reg.

use loggap::agents::{StepSchedule, Variant};
use loggap::harness::{rms_curve, ExperimentConfig};

fn main() -> loggap::Result<()> {
    let base = ExperimentConfig::chain("chain_positive", Variant::LogTwoStep, 0.9, 1)?.with_num_sweeps(20_000);
    for (beta_log, beta_reg) in [(0.01, 1.0), (1.0, 0.01)] {
        let mut cfg = base.clone();
        cfg.agent.schedule = StepSchedule::constant(beta_log, beta_reg)?;
        let points = rms_curve(&cfg, 2_000, None)?;
        let curve: Vec<String> = points.iter().map(|p| format!("{:.4}", p.rms)).collect();
        println!("beta_log {beta_log}, beta_reg {beta_reg}: {}", curve.join(" "));
    }
    Ok(())
}
