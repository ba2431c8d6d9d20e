#![allow(dead_code)]

use loggap::envs::{Outcome, TabularMdp};
use proptest::prelude::*;

/// Random finite MDP: states `0..n-1` non-terminal, state `n-1` terminal,
/// each (s, a) with up to three weighted outcomes.
pub fn small_mdp(max_states: usize, stochastic: bool) -> impl Strategy<Value = TabularMdp> {
    (3..=max_states, 2..=3usize).prop_flat_map(move |(n, na)| {
        let branches = if stochastic { 1..=3usize } else { 1..=1usize };
        let pair = proptest::collection::vec((0..n, 1u32..10, -5i32..=5), branches);
        proptest::collection::vec(pair, (n - 1) * na).prop_map(move |rows| build(n, na, rows))
    })
}

fn build(n: usize, na: usize, rows: Vec<Vec<(usize, u32, i32)>>) -> TabularMdp {
    let mut outcomes = Vec::with_capacity(n * na);
    for row in rows {
        let total: u32 = row.iter().map(|r| r.1).sum();
        let mut merged: Vec<Outcome> = Vec::new();
        for (next, w, r) in row {
            let prob = w as f64 / total as f64;
            match merged.iter_mut().find(|o| o.next == next) {
                Some(o) => o.prob += prob,
                None => merged.push(Outcome { next, prob, reward: r as f64 }),
            }
        }
        let sum: f64 = merged.iter().map(|o| o.prob).sum();
        merged.last_mut().unwrap().prob += 1.0 - sum;
        outcomes.push(merged);
    }
    for _ in 0..na {
        outcomes.push(vec![Outcome { next: n - 1, prob: 1.0, reward: 0.0 }]);
    }
    let mut start = vec![0.0; n];
    start[0] = 1.0;
    let mut terminal = vec![false; n];
    terminal[n - 1] = true;
    TabularMdp::new(n, na, outcomes, start, terminal).expect("valid random MDP")
}

/// Same MDP with every reward replaced by its absolute value.
pub fn non_negative(mdp: &TabularMdp) -> TabularMdp {
    mdp.map_rewards(|_, _, _, r| r.abs())
}
