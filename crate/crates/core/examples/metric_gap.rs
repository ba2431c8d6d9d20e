//! How much the discount factor costs under a finite-horizon metric, on the
//! delayed-choice MDP and the three bundled gridworld tasks.

use loggap::envs::make_delayed_choice;
use loggap::harness::{metric_gap_scan, MetricGapStudy};
use loggap::oracle::metric_gap;

fn main() -> loggap::Result<()> {
    let mdp = make_delayed_choice(1.0, 10.0)?;
    for gamma in [0.05, 0.5, 0.99] {
        let g = metric_gap(&mdp, gamma, 2, 1e-12)?;
        println!("delayed choice, gamma {gamma}: optimal {} learned {} gap {}", g.optimal, g.learned, g.gap);
    }

    for task in ["task_a", "task_b", "task_c"] {
        let path = format!("{}/configs/{task}.cfg", env!("CARGO_MANIFEST_DIR"));
        let study = MetricGapStudy::from_file(&path)?;
        let gaps: Vec<String> = metric_gap_scan(&study)?
            .iter()
            .map(|r| format!("{:.2}", r.gap.gap))
            .collect();
        println!("{task}: {}", gaps.join(" "));
    }
    Ok(())
}
