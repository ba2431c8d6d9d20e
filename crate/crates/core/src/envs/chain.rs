use super::{Outcome, TabularMdp};
use crate::error::{Error, Result};

/// Action index of `a_L`.
pub const LEFT: usize = 0;
/// Action index of `a_R`.
pub const RIGHT: usize = 1;

/// Parameters of the chain task.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChainParams {
    pub num_states: usize,
    /// Probability that an action moves against its own direction.
    pub p: f64,
    pub r_left: f64,
    pub r_right: f64,
}

impl ChainParams {
    /// Positive reward on the left, negative on the right, stochastic moves.
    pub const fn full() -> Self {
        ChainParams { num_states: 50, p: 0.25, r_left: 1.0, r_right: -1.0 }
    }

    pub const fn positive() -> Self {
        ChainParams { num_states: 50, p: 0.25, r_left: 1.0, r_right: 0.0 }
    }

    pub const fn deterministic() -> Self {
        ChainParams { num_states: 50, p: 0.0, r_left: 1.0, r_right: 0.0 }
    }

    pub fn build(&self) -> Result<TabularMdp> {
        make_chain(self.num_states, self.p, self.r_left, self.r_right)
    }
}

/// Builds a chain of `num_states` interior states `1..=N` between a left
/// terminal (index 0) and a right terminal (index `N + 1`).
///
/// `a_L` moves left with probability `1 - p` and right with probability `p`;
/// `a_R` is the mirror image. Entering the left terminal pays `r_left`, the
/// right terminal `r_right`; every other reward is zero. Episodes start
/// uniformly over interior states.
pub fn make_chain(num_states: usize, p: f64, r_left: f64, r_right: f64) -> Result<TabularMdp> {
    if num_states < 2 {
        return Err(Error::param("num_states", "chain needs at least 2 states"));
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::param("p", format!("{p} is not a probability")));
    }
    if !r_left.is_finite() || !r_right.is_finite() {
        return Err(Error::param("r_left", "rewards must be finite"));
    }
    let total = num_states + 2;
    let right_terminal = num_states + 1;
    let reward_into = |next: usize| {
        if next == 0 {
            r_left
        } else if next == right_terminal {
            r_right
        } else {
            0.0
        }
    };

    let mut outcomes = Vec::with_capacity(total * 2);
    for s in 0..total {
        for a in [LEFT, RIGHT] {
            if s == 0 || s == right_terminal {
                outcomes.push(vec![Outcome { next: s, prob: 1.0, reward: 0.0 }]);
                continue;
            }
            let p_left = if a == LEFT { 1.0 - p } else { p };
            let (l, r) = (s - 1, s + 1);
            outcomes.push(vec![
                Outcome { next: l, prob: p_left, reward: reward_into(l) },
                Outcome { next: r, prob: 1.0 - p_left, reward: reward_into(r) },
            ]);
        }
    }

    let mut start = vec![1.0 / num_states as f64; total];
    start[0] = 0.0;
    start[right_terminal] = 0.0;
    let mut terminal = vec![false; total];
    terminal[0] = true;
    terminal[right_terminal] = true;

    TabularMdp::new(total, 2, outcomes, start, terminal)
}
