//! Reward scaling and value shifting, checked against the oracle.

use loggap::envs::make_chain;
use loggap::oracle::value_iteration;

fn main() -> loggap::Result<()> {
    let gamma = 0.9;
    let mdp = make_chain(50, 0.25, 1.0, -1.0)?;
    let q = value_iteration(&mdp, gamma, 1e-12)?;
    let scaled = value_iteration(&mdp.scale_rewards(100.0)?, gamma, 1e-12)?;
    let shifted = value_iteration(&mdp.shift_values(100.0, gamma)?, gamma, 1e-12)?;

    let s = 10;
    println!("Q*({s}, L): base {:.6}, x100 {:.6}, +100 {:.6}", q.get(s, 0), scaled.get(s, 0), shifted.get(s, 0));
    println!("action gap: base {:.6}, x100 {:.6}, +100 {:.6}", q.action_gap(s), scaled.action_gap(s), shifted.action_gap(s));
    println!("greedy policies agree: {}", q.greedy_policy() == scaled.greedy_policy() && q.greedy_policy() == shifted.greedy_policy());
    Ok(())
}
