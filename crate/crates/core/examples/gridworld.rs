//! Building a gridworld from a layout and reading the time-dependent plan.

use loggap::envs::{GridConfig, Gridworld, GRID_ACTIONS};
use loggap::oracle::backward_induction;

fn main() -> loggap::Result<()> {
    let layout = GridConfig::parse(
        "width = 6\nheight = 4\nstart = 5,2\nobjects = 5,1:3 1,1:3 2,3:10 4,2:-10\nwind_dir = left\nwind_prob = 0.4\n",
    )?;
    let world = Gridworld::new(layout)?;
    println!(
        "{} states ({} positive objects, collected sets tracked in the state)",
        world.mdp().num_states(),
        world.num_positive()
    );

    let plan = backward_induction(world.mdp(), 12)?;
    let start = world.state_of((5, 2), 0).expect("start is not terminal");
    let moves: Vec<String> = plan.policy.iter().map(|layer| GRID_ACTIONS[layer[start]].to_string()).collect();
    println!("optimal first move from the start, by time step: {}", moves.join(" "));
    println!("12-step optimum: {:.4}", plan.performance(world.mdp()));
    Ok(())
}
