//! Logarithmic Q-learning with separate heads for positive and negative
//! rewards, compared with the regular learner at a low discount factor.

use loggap::agents::{Agent, Head, Variant};
use loggap::harness::{run_experiment, ExperimentConfig};
use loggap::rng::stream;

fn main() -> loggap::Result<()> {
    for variant in [Variant::Regular, Variant::LogFull] {
        let cfg = ExperimentConfig::chain("chain_full", variant, 0.5, 3)?;
        let r = run_experiment(&cfg)?;
        println!(
            "{variant}, width 3: alpha {:?}, early {:.3}, final {:.3} ({:.1}s)",
            r.alpha(),
            r.early_perf,
            r.final_perf,
            r.wall_time
        );
    }

    // the stored values live in mapped space
    let cfg = ExperimentConfig::chain("chain_full", Variant::LogFull, 0.5, 1)?;
    let mdp = cfg.chain.build()?;
    let mut agent = Agent::new(&cfg.agent, &mdp)?;
    let mut rng = stream(0, "log_agent example");
    for _ in 0..2_000 {
        agent.sweep(&mdp, &mut rng)?;
    }
    for s in [1, 5, 10] {
        println!(
            "state {s}: mapped plus {:.3}, mapped minus {:.3}, Q(L) = {:.3e}",
            agent.stored_value(Head::Plus, s, 0)?,
            agent.stored_value(Head::Minus, s, 0)?,
            agent.q_value(s, 0)?
        );
    }
    Ok(())
}
