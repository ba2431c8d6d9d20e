//! Exact dynamic programming: discounted `Q*`, finite-horizon optimal plans,
//! finite-horizon policy evaluation and the metric gap.

use crate::envs::TabularMdp;
use crate::error::{Error, Result};

const MAX_ITERATIONS: usize = 1_000_000;

/// Action values over every `(state, action)` of an MDP.
#[derive(Debug, Clone, PartialEq)]
pub struct QTable {
    num_states: usize,
    num_actions: usize,
    gamma: f64,
    values: Vec<f64>,
    terminal: Vec<bool>,
}

impl QTable {
    pub fn zeros(mdp: &TabularMdp, gamma: f64) -> Self {
        QTable {
            num_states: mdp.num_states(),
            num_actions: mdp.num_actions(),
            gamma,
            values: vec![0.0; mdp.num_states() * mdp.num_actions()],
            terminal: mdp.terminal_flags().to_vec(),
        }
    }

    /// Builds a table from `values[s * num_actions + a]`.
    pub fn from_values(mdp: &TabularMdp, gamma: f64, values: Vec<f64>) -> Result<Self> {
        if values.len() != mdp.num_states() * mdp.num_actions() {
            return Err(Error::param("values", "shape does not match the MDP"));
        }
        Ok(QTable {
            values,
            ..Self::zeros(mdp, gamma)
        })
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn num_actions(&self) -> usize {
        self.num_actions
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn is_terminal(&self, s: usize) -> bool {
        self.terminal[s]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn get(&self, s: usize, a: usize) -> f64 {
        self.values[s * self.num_actions + a]
    }

    pub fn set(&mut self, s: usize, a: usize, v: f64) {
        self.values[s * self.num_actions + a] = v;
    }

    pub fn row(&self, s: usize) -> &[f64] {
        &self.values[s * self.num_actions..(s + 1) * self.num_actions]
    }

    pub fn max_value(&self, s: usize) -> f64 {
        self.row(s).iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Greedy action, ties to the lowest index.
    pub fn greedy(&self, s: usize) -> usize {
        argmax_first(self.row(s))
    }

    pub fn greedy_policy(&self) -> Vec<usize> {
        (0..self.num_states).map(|s| self.greedy(s)).collect()
    }

    /// Best minus second-best value of a state (0 with a single action).
    pub fn action_gap(&self, s: usize) -> f64 {
        match self.top_two(s) {
            Some((best, second)) => best - second,
            None => 0.0,
        }
    }

    /// Best and second-best values of a state; `None` with a single action.
    pub fn top_two(&self, s: usize) -> Option<(f64, f64)> {
        let row = self.row(s);
        if row.len() < 2 {
            return None;
        }
        let (mut best, mut second) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
        for &v in row {
            if v > best {
                second = best;
                best = v;
            } else if v > second {
                second = v;
            }
        }
        Some((best, second))
    }

    /// Element-wise image under `f`, e.g. a value mapping.
    pub fn try_map(&self, mut f: impl FnMut(f64) -> Result<f64>) -> Result<QTable> {
        let values = self.values.iter().map(|&v| f(v)).collect::<Result<Vec<_>>>()?;
        Ok(QTable { values, ..self.clone() })
    }

    pub fn map(&self, mut f: impl FnMut(f64) -> f64) -> QTable {
        QTable {
            values: self.values.iter().map(|&v| f(v)).collect(),
            ..self.clone()
        }
    }

    /// Largest absolute difference over non-terminal pairs.
    pub fn max_abs_diff(&self, other: &QTable) -> f64 {
        let mut worst: f64 = 0.0;
        for s in (0..self.num_states).filter(|&s| !self.terminal[s]) {
            for a in 0..self.num_actions {
                worst = worst.max((self.get(s, a) - other.get(s, a)).abs());
            }
        }
        worst
    }
}

/// Index of the first maximum.
#[inline]
pub fn argmax_first(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

fn check_gamma(gamma: f64) -> Result<()> {
    if !(0.0..1.0).contains(&gamma) {
        return Err(Error::param("gamma", format!("{gamma} outside [0, 1)")));
    }
    Ok(())
}

/// Iterates `Q(s,a) <- sum_s' P (R + gamma * next(s'))` to tolerance, where
/// `next` reads the previous iterate. Besides the sup-norm test, every entry
/// must also have settled to relative precision `max(tol, 1e-14)`, so tiny
/// values far from the rewards are resolved too.
fn iterate_q(
    mdp: &TabularMdp,
    gamma: f64,
    tol: f64,
    next_value: impl Fn(&QTable, usize) -> f64,
) -> Result<QTable> {
    check_gamma(gamma)?;
    if !(tol > 0.0) {
        return Err(Error::param("tol", "must be positive"));
    }
    let threshold = if gamma == 0.0 {
        f64::INFINITY
    } else {
        tol * (1.0 - gamma) / (2.0 * gamma)
    };
    let mut q = QTable::zeros(mdp, gamma);
    let mut next = q.clone();
    let rel_tol = tol.max(1e-14);
    let mut residual = f64::INFINITY;
    for _ in 0..MAX_ITERATIONS {
        residual = 0.0;
        let mut relative: f64 = 0.0;
        for s in 0..mdp.num_states() {
            for a in 0..mdp.num_actions() {
                let v: f64 = if mdp.is_terminal(s) {
                    0.0
                } else {
                    mdp.outcomes(s, a)
                        .iter()
                        .map(|o| o.prob * (o.reward + gamma * next_value(&q, o.next)))
                        .sum()
                };
                let change = (v - q.get(s, a)).abs();
                residual = residual.max(change);
                if v != 0.0 {
                    relative = relative.max(change / v.abs());
                }
                next.set(s, a, v);
            }
        }
        std::mem::swap(&mut q, &mut next);
        if residual <= threshold && relative <= rel_tol {
            return Ok(q);
        }
    }
    Err(Error::NonConvergence {
        iterations: MAX_ITERATIONS,
        residual,
    })
}

/// Discounted optimal action values by Q-value iteration; the returned table
/// is within `tol` of `Q*` in sup norm.
pub fn value_iteration(mdp: &TabularMdp, gamma: f64, tol: f64) -> Result<QTable> {
    iterate_q(mdp, gamma, tol, |q, s| q.max_value(s))
}

/// Discounted action values of a stationary policy.
pub fn evaluate_policy_q(
    mdp: &TabularMdp,
    policy: &[usize],
    gamma: f64,
    tol: f64,
) -> Result<QTable> {
    if policy.len() != mdp.num_states() {
        return Err(Error::param("policy", "needs one action per state"));
    }
    iterate_q(mdp, gamma, tol, |q, s| q.get(s, policy[s]))
}

/// Exact `Q+` and `Q-` heads of the reward decomposition under the greedy
/// policy of `Q*`: each head is the discounted value of the positive (resp.
/// absolute negative) reward stream.
pub fn decomposed_heads(mdp: &TabularMdp, gamma: f64, tol: f64) -> Result<(QTable, QTable)> {
    let policy = value_iteration(mdp, gamma, tol)?.greedy_policy();
    let plus = mdp.map_rewards(|_, _, _, r| r.max(0.0));
    let minus = mdp.map_rewards(|_, _, _, r| (-r).max(0.0));
    Ok((
        evaluate_policy_q(&plus, &policy, gamma, tol)?,
        evaluate_policy_q(&minus, &policy, gamma, tol)?,
    ))
}

/// Optimal non-stationary policy for the undiscounted `h`-step return.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteHorizonPlan {
    pub horizon: usize,
    /// `values[t][s]`: optimal return of the remaining `h - t` steps.
    pub values: Vec<Vec<f64>>,
    /// `policy[t][s]`: optimal action at time `t`.
    pub policy: Vec<Vec<usize>>,
}

impl FiniteHorizonPlan {
    /// Start-distribution-weighted optimal return.
    pub fn performance(&self, mdp: &TabularMdp) -> f64 {
        mdp.start_dist()
            .iter()
            .zip(&self.values[0])
            .map(|(p, v)| p * v)
            .sum()
    }
}

pub fn backward_induction(mdp: &TabularMdp, h: usize) -> Result<FiniteHorizonPlan> {
    if h == 0 {
        return Err(Error::param("horizon", "must be at least 1"));
    }
    let n = mdp.num_states();
    let mut values = vec![vec![0.0; n]; h + 1];
    let mut policy = vec![vec![0usize; n]; h];
    let mut q_row = vec![0.0; mdp.num_actions()];
    for t in (0..h).rev() {
        for s in 0..n {
            if mdp.is_terminal(s) {
                continue;
            }
            for (a, q) in q_row.iter_mut().enumerate() {
                *q = mdp
                    .outcomes(s, a)
                    .iter()
                    .map(|o| o.prob * (o.reward + values[t + 1][o.next]))
                    .sum();
            }
            let best = argmax_first(&q_row);
            policy[t][s] = best;
            values[t][s] = q_row[best];
        }
    }
    Ok(FiniteHorizonPlan {
        horizon: h,
        values,
        policy,
    })
}

/// Expected undiscounted `h`-step return of a stationary policy from the
/// start distribution, by propagating the state distribution forward.
pub fn evaluate_stationary_finite(mdp: &TabularMdp, policy: &[usize], h: usize) -> Result<f64> {
    if policy.len() != mdp.num_states() {
        return Err(Error::param("policy", "needs one action per state"));
    }
    for s in mdp.non_terminal_states() {
        if policy[s] >= mdp.num_actions() {
            return Err(Error::IndexOutOfRange {
                what: "policy action",
                index: policy[s],
                limit: mdp.num_actions(),
            });
        }
    }
    let mut dist = mdp.start_dist().to_vec();
    let mut next = vec![0.0; dist.len()];
    let mut total = 0.0;
    for _ in 0..h {
        next.iter_mut().for_each(|x| *x = 0.0);
        for s in 0..dist.len() {
            if dist[s] == 0.0 || mdp.is_terminal(s) {
                continue;
            }
            for o in mdp.outcomes(s, policy[s]) {
                let mass = dist[s] * o.prob;
                total += mass * o.reward;
                next[o.next] += mass;
            }
        }
        std::mem::swap(&mut dist, &mut next);
    }
    Ok(total)
}

/// Performance of the optimal policy and of the discounted-optimal greedy
/// policy under the finite-horizon undiscounted metric.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricGap {
    pub optimal: f64,
    pub learned: f64,
    pub gap: f64,
}

/// `F(pi*) - F(pi*_l)` with `pi*_l` greedy (lowest-index ties) in the
/// discounted `Q*`.
pub fn metric_gap(mdp: &TabularMdp, gamma: f64, h: usize, tol: f64) -> Result<MetricGap> {
    let optimal = backward_induction(mdp, h)?.performance(mdp);
    let greedy = value_iteration(mdp, gamma, tol)?.greedy_policy();
    let learned = evaluate_stationary_finite(mdp, &greedy, h)?;
    let raw = optimal - learned;
    let slack = 1e-9 * optimal.abs().max(1.0);
    debug_assert!(raw >= -slack, "stationary policy beat the finite-horizon optimum by {raw}");
    Ok(MetricGap {
        optimal,
        learned,
        gap: if raw < slack { raw.max(0.0) } else { raw },
    })
}
