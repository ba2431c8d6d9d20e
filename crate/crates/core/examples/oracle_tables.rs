//! Exact oracles: discounted Q*, the positive/negative heads, and
//! finite-horizon planning.

use loggap::envs::make_chain;
use loggap::oracle::{backward_induction, decomposed_heads, value_iteration};

fn main() -> loggap::Result<()> {
    let det = make_chain(50, 0.0, 1.0, 0.0)?;
    let q = value_iteration(&det, 0.5, 1e-12)?;
    for s in [1, 2, 3, 10] {
        println!("deterministic chain, state {s}: Q(L) = {:e}, Q(R) = {:e}, gap {:e}", q.get(s, 0), q.get(s, 1), q.action_gap(s));
    }

    let full = make_chain(50, 0.25, 1.0, -1.0)?;
    let q = value_iteration(&full, 0.9, 1e-10)?;
    let (plus, minus) = decomposed_heads(&full, 0.9, 1e-10)?;
    let s = 45;
    println!(
        "full chain, state {s}: Q*(L) = {:.6} = {:.6} - {:.6}",
        q.get(s, 0),
        plus.get(s, 0),
        minus.get(s, 0)
    );
    println!("greedy policy is all-left: {}", (1..=50).all(|s| q.greedy(s) == 0));

    let plan = backward_induction(&full, 100)?;
    println!("undiscounted 100-step optimum from the start distribution: {:.6}", plan.performance(&full));
    Ok(())
}
