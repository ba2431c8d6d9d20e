//! Finite MDPs: the chain and gridworld benchmarks, reward transforms, and
//! sampling/rollout helpers.

mod chain;
mod gridworld;

pub use chain::{make_chain, ChainParams, LEFT, RIGHT};
pub use gridworld::{make_gridworld, GridConfig, GridObject, Gridworld, WindDir, GRID_ACTIONS};

use crate::error::{Error, Result};
use rand::Rng;

const STOCHASTIC_TOL: f64 = 1e-12;

/// One possible result of taking an action: next state, its probability and
/// the reward received on the way.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Outcome {
    pub next: usize,
    pub prob: f64,
    pub reward: f64,
}

/// A sampled step `(s, a, r, s')`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transition {
    pub state: usize,
    pub action: usize,
    pub reward: f64,
    pub next_state: usize,
    /// `next_state` is terminal; learners use a zero bootstrap.
    pub next_terminal: bool,
    /// The episode was cut off by a time limit after this step. Learners still
    /// bootstrap from `next_state`.
    pub truncated: bool,
}

/// A finite MDP stored as sparse outcome lists per `(state, action)`.
///
/// Terminal states are absorbing: every action self-loops with probability 1
/// and reward 0.
#[derive(Debug, Clone, PartialEq)]
pub struct TabularMdp {
    num_states: usize,
    num_actions: usize,
    outcomes: Vec<Vec<Outcome>>,
    start_dist: Vec<f64>,
    terminal: Vec<bool>,
}

impl TabularMdp {
    /// `outcomes` is indexed by `state * num_actions + action`. Outcomes with
    /// the same next state are merged; zero-probability outcomes are dropped.
    pub fn new(
        num_states: usize,
        num_actions: usize,
        outcomes: Vec<Vec<Outcome>>,
        start_dist: Vec<f64>,
        terminal: Vec<bool>,
    ) -> Result<Self> {
        if num_states == 0 || num_actions == 0 {
            return Err(Error::param("num_states", "MDP needs states and actions"));
        }
        if outcomes.len() != num_states * num_actions {
            return Err(Error::param(
                "outcomes",
                format!("expected {} rows, got {}", num_states * num_actions, outcomes.len()),
            ));
        }
        if start_dist.len() != num_states || terminal.len() != num_states {
            return Err(Error::param("start_dist", "length must equal num_states"));
        }

        let mut merged = Vec::with_capacity(outcomes.len());
        for (row, list) in outcomes.into_iter().enumerate() {
            let (s, a) = (row / num_actions, row % num_actions);
            let mut out: Vec<Outcome> = Vec::with_capacity(list.len());
            for o in list {
                if o.next >= num_states {
                    return Err(Error::IndexOutOfRange {
                        what: "next state",
                        index: o.next,
                        limit: num_states,
                    });
                }
                if !(o.prob >= 0.0 && o.prob <= 1.0 + STOCHASTIC_TOL) || !o.reward.is_finite() {
                    return Err(Error::param(
                        "outcomes",
                        format!("bad outcome {o:?} at ({s}, {a})"),
                    ));
                }
                if o.prob == 0.0 {
                    continue;
                }
                match out.iter_mut().find(|e| e.next == o.next) {
                    Some(e) if e.reward != o.reward => {
                        return Err(Error::param(
                            "outcomes",
                            format!("conflicting rewards for ({s}, {a}, {})", o.next),
                        ))
                    }
                    Some(e) => e.prob += o.prob,
                    None => out.push(o),
                }
            }
            let total: f64 = out.iter().map(|o| o.prob).sum();
            if (total - 1.0).abs() > STOCHASTIC_TOL {
                return Err(Error::param(
                    "outcomes",
                    format!("probabilities for ({s}, {a}) sum to {total}"),
                ));
            }
            if terminal[s] && !(out.len() == 1 && out[0].next == s && out[0].reward == 0.0) {
                return Err(Error::param(
                    "terminal",
                    format!("terminal state {s} must self-loop with reward 0"),
                ));
            }
            merged.push(out);
        }

        let mass: f64 = start_dist.iter().sum();
        if (mass - 1.0).abs() > STOCHASTIC_TOL || start_dist.iter().any(|&p| p < 0.0) {
            return Err(Error::param("start_dist", format!("sums to {mass}")));
        }
        if start_dist.iter().zip(&terminal).any(|(&p, &t)| t && p > 0.0) {
            return Err(Error::param("start_dist", "puts mass on a terminal state"));
        }

        Ok(TabularMdp {
            num_states,
            num_actions,
            outcomes: merged,
            start_dist,
            terminal,
        })
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn num_actions(&self) -> usize {
        self.num_actions
    }

    pub fn is_terminal(&self, s: usize) -> bool {
        self.terminal[s]
    }

    pub fn terminal_flags(&self) -> &[bool] {
        &self.terminal
    }

    pub fn start_dist(&self) -> &[f64] {
        &self.start_dist
    }

    pub fn non_terminal_states(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.num_states).filter(move |&s| !self.terminal[s])
    }

    pub fn outcomes(&self, s: usize, a: usize) -> &[Outcome] {
        &self.outcomes[s * self.num_actions + a]
    }

    pub fn prob(&self, s: usize, a: usize, next: usize) -> f64 {
        self.outcomes(s, a)
            .iter()
            .find(|o| o.next == next)
            .map_or(0.0, |o| o.prob)
    }

    /// Reward tensor entry; zero for transitions that cannot happen.
    pub fn reward(&self, s: usize, a: usize, next: usize) -> f64 {
        self.outcomes(s, a)
            .iter()
            .find(|o| o.next == next)
            .map_or(0.0, |o| o.reward)
    }

    pub fn expected_reward(&self, s: usize, a: usize) -> f64 {
        self.outcomes(s, a).iter().map(|o| o.prob * o.reward).sum()
    }

    /// Applies `f(s, a, next, reward)` to every reward entry.
    pub fn map_rewards(&self, mut f: impl FnMut(usize, usize, usize, f64) -> f64) -> TabularMdp {
        let mut out = self.clone();
        for (row, list) in out.outcomes.iter_mut().enumerate() {
            let (s, a) = (row / self.num_actions, row % self.num_actions);
            if self.terminal[s] {
                continue;
            }
            for o in list.iter_mut() {
                o.reward = f(s, a, o.next, o.reward);
            }
        }
        out
    }

    /// Multiplies every reward by `factor`.
    pub fn scale_rewards(&self, factor: f64) -> Result<TabularMdp> {
        if factor == 0.0 || !factor.is_finite() {
            return Err(Error::param("factor", "must be finite and non-zero"));
        }
        Ok(self.map_rewards(|_, _, _, r| r * factor))
    }

    /// Adds `offset * (1 - gamma)` to transitions into non-terminal states and
    /// `offset` to transitions into terminal states, which raises every
    /// discounted action-value by exactly `offset`.
    pub fn shift_values(&self, offset: f64, gamma: f64) -> Result<TabularMdp> {
        if !(0.0..1.0).contains(&gamma) {
            return Err(Error::param("gamma", "must lie in [0, 1)"));
        }
        let terminal = self.terminal.clone();
        Ok(self.map_rewards(|_, _, next, r| {
            if terminal[next] {
                r + offset
            } else {
                r + offset * (1.0 - gamma)
            }
        }))
    }

    /// Draws `s'` from `P(s, a, .)`; panics if `s` or `a` is out of range.
    ///
    /// Exactly one uniform is consumed per call so random streams stay aligned
    /// across agents and transforms.
    pub fn step<R: Rng + ?Sized>(&self, s: usize, a: usize, rng: &mut R) -> Transition {
        let list = &self.outcomes[s * self.num_actions + a];
        let u: f64 = rng.random();
        let mut acc = 0.0;
        let mut pick = list[list.len() - 1];
        for o in list {
            acc += o.prob;
            if u < acc {
                pick = *o;
                break;
            }
        }
        Transition {
            state: s,
            action: a,
            reward: pick.reward,
            next_state: pick.next,
            next_terminal: self.terminal[pick.next],
            truncated: false,
        }
    }

    /// Checked variant of [`TabularMdp::step`].
    pub fn sample_transition<R: Rng + ?Sized>(
        &self,
        s: usize,
        a: usize,
        rng: &mut R,
    ) -> Result<Transition> {
        if s >= self.num_states {
            return Err(Error::IndexOutOfRange {
                what: "state",
                index: s,
                limit: self.num_states,
            });
        }
        if a >= self.num_actions {
            return Err(Error::IndexOutOfRange {
                what: "action",
                index: a,
                limit: self.num_actions,
            });
        }
        Ok(self.step(s, a, rng))
    }

    pub fn sample_start<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        let mut last = 0;
        for (s, &p) in self.start_dist.iter().enumerate() {
            if p > 0.0 {
                acc += p;
                last = s;
                if u < acc {
                    return s;
                }
            }
        }
        last
    }
}

/// Two-step choice: from state 0, action 0 ends the episode with `small`
/// and action 1 moves to state 1, from where either action ends it with
/// `large`. State 2 is terminal.
pub fn make_delayed_choice(small: f64, large: f64) -> Result<TabularMdp> {
    let t = 2;
    let to_end = |reward| vec![Outcome { next: t, prob: 1.0, reward }];
    let outcomes = vec![
        to_end(small),
        vec![Outcome { next: 1, prob: 1.0, reward: 0.0 }],
        to_end(large),
        to_end(large),
        to_end(0.0),
        to_end(0.0),
    ];
    TabularMdp::new(3, 2, outcomes, vec![1.0, 0.0, 0.0], vec![false, false, true])
}

/// Rolls out one episode from a start state drawn from `start_dist`.
///
/// Stops on entering a terminal state or after `max_steps` transitions. When
/// the time limit hits first, the final transition is marked `truncated` if
/// `bootstrap_at_timeout` is set; otherwise it is marked `next_terminal` so a
/// learner treats the cut-off state as worth zero.
pub fn run_episode<R, P>(
    mdp: &TabularMdp,
    mut policy: P,
    max_steps: usize,
    bootstrap_at_timeout: bool,
    rng: &mut R,
) -> Result<Vec<Transition>>
where
    R: Rng + ?Sized,
    P: FnMut(usize, &mut R) -> usize,
{
    if max_steps == 0 {
        return Err(Error::param("max_steps", "must be at least 1"));
    }
    let mut s = mdp.sample_start(rng);
    let mut out = Vec::with_capacity(max_steps);
    for _ in 0..max_steps {
        let a = policy(s, rng);
        let tr = mdp.sample_transition(s, a, rng)?;
        s = tr.next_state;
        out.push(tr);
        if tr.next_terminal {
            return Ok(out);
        }
    }
    if let Some(last) = out.last_mut() {
        if bootstrap_at_timeout {
            last.truncated = true;
        } else {
            last.next_terminal = true;
        }
    }
    Ok(out)
}
