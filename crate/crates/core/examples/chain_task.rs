//! The chain task: transition structure, sampling and a random-policy episode.

use loggap::envs::{make_chain, run_episode, LEFT, RIGHT};
use loggap::rng::stream;
use rand::Rng;

fn main() -> loggap::Result<()> {
    let mdp = make_chain(50, 0.25, 1.0, -1.0)?;
    println!("{} states ({} interior), {} actions", mdp.num_states(), mdp.num_states() - 2, mdp.num_actions());
    for (name, a) in [("left", LEFT), ("right", RIGHT)] {
        let outs: Vec<String> = mdp
            .outcomes(1, a)
            .iter()
            .map(|o| format!("-> {} p={} r={}", o.next, o.prob, o.reward))
            .collect();
        println!("state 1, {name}: {}", outs.join(", "));
    }

    let mut rng = stream(0, "chain_task example");
    let n = 100_000;
    let left = (0..n).filter(|_| mdp.step(25, LEFT, &mut rng).next_state == 24).count();
    println!("empirical left-move frequency of a_L: {:.4}", left as f64 / n as f64);

    let episode = run_episode(&mdp, |_, rng| rng.random_range(0..2), 10_000, false, &mut rng)?;
    let ret: f64 = episode.iter().map(|t| t.reward).sum();
    println!("random-policy episode: {} steps, return {ret}", episode.len());
    Ok(())
}
