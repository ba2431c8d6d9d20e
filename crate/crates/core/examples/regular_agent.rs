//! Regular Q-learning with tile coding on the full chain, trained by sweeps.

use loggap::agents::{Agent, AgentSpec, MappingParams, StepSchedule, Variant};
use loggap::envs::make_chain;
use loggap::metrics::chain_optimality;
use loggap::rng::stream;

fn main() -> loggap::Result<()> {
    let mdp = make_chain(50, 0.25, 1.0, -1.0)?;
    for (gamma, width) in [(0.99, 1), (0.99, 3), (0.5, 3)] {
        let spec = AgentSpec {
            variant: Variant::Regular,
            tile_width: width,
            gamma,
            mapping: MappingParams::default(),
            schedule: StepSchedule::alpha(0.01)?,
        };
        let mut agent = Agent::new(&spec, &mdp)?;
        let mut rng = stream(0, "regular_agent example");
        for _ in 0..5_000 {
            agent.sweep(&mdp, &mut rng)?;
        }
        let opt = chain_optimality(&agent, &mdp)?;
        println!(
            "gamma {gamma}, width {width}: all-left = {}, Q(25, L) = {:.4}, Q(25, R) = {:.4}",
            opt.score == 1.0,
            agent.q_value(25, 0)?,
            agent.q_value(25, 1)?
        );
    }
    Ok(())
}
