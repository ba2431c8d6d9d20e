//! Linear Q-learning agents over tile-coded features: regular semi-gradient
//! Q-learning and three logarithmic variants.
//!
//! Log variants store values in mapped space, `Q~ = f(Q)`, and read regular
//! values back through `f^-1`. With tile width 1 every variant is tabular.

mod schedule;

pub use schedule::{Rate, ScheduleReport, StepSchedule};

use crate::envs::{TabularMdp, Transition};
use crate::error::{Error, Result};
use crate::features::{linear_q, TileCoder};
use crate::mapping::LogMapping;
use crate::oracle::{argmax_first, QTable};
use rand::Rng;
use std::fmt;
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Variant {
    /// Semi-gradient Q-learning on regular values.
    Regular,
    /// Log-space averaging of mapped targets; non-negative rewards only.
    LogBasic,
    /// Regular-space interpolation with `beta_reg`, then a log-space step
    /// with `beta_log`; non-negative rewards only.
    LogTwoStep,
    /// Two heads for the positive and negative reward streams.
    LogFull,
}

impl Variant {
    pub fn name(self) -> &'static str {
        match self {
            Variant::Regular => "regular",
            Variant::LogBasic => "log_basic",
            Variant::LogTwoStep => "log_two_step",
            Variant::LogFull => "log_full",
        }
    }

    pub fn is_log(self) -> bool {
        self != Variant::Regular
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variant {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "regular" => Ok(Variant::Regular),
            "log_basic" => Ok(Variant::LogBasic),
            "log_two_step" => Ok(Variant::LogTwoStep),
            "log_full" => Ok(Variant::LogFull),
            other => Err(format!(
                "unknown agent `{other}` (regular, log_basic, log_two_step, log_full)"
            )),
        }
    }
}

/// Splits a reward into non-negative positive and negative parts with
/// `r = plus - minus`.
#[inline]
pub fn decompose_reward(r: f64) -> (f64, f64) {
    if r >= 0.0 {
        (r, 0.0)
    } else {
        (0.0, -r)
    }
}

/// Mapping hyper-parameters shared by the log variants. Each head gets its
/// own `d` from its `q_init`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MappingParams {
    pub c: f64,
    pub k: f64,
    pub q_init_plus: f64,
    pub q_init_minus: f64,
}

impl Default for MappingParams {
    fn default() -> Self {
        MappingParams {
            c: 1.0,
            k: 200.0,
            q_init_plus: 0.0,
            q_init_minus: 0.0,
        }
    }
}

/// Everything needed to build an [`Agent`] for a given MDP.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AgentSpec {
    pub variant: Variant,
    pub tile_width: usize,
    pub gamma: f64,
    pub mapping: MappingParams,
    pub schedule: StepSchedule,
}

/// Which value table of an agent to read.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Head {
    Plus,
    Minus,
}

#[derive(Debug, Clone)]
pub struct Agent {
    variant: Variant,
    gamma: f64,
    coder: TileCoder,
    num_actions: usize,
    num_states: usize,
    // MDP state -> feature position; None for terminal states
    positions: Vec<Option<usize>>,
    weights_plus: Vec<f64>,
    weights_minus: Vec<f64>,
    map_plus: Option<LogMapping>,
    map_minus: Option<LogMapping>,
    schedule: StepSchedule,
    visits: Vec<u64>,
    clamp_events: u64,
    // per-action scratch for the log_full bootstrap
    scratch: Vec<(f64, f64)>,
}

impl Agent {
    /// Tiles the non-terminal states of `mdp` in index order.
    pub fn new(spec: &AgentSpec, mdp: &TabularMdp) -> Result<Self> {
        if !(0.0..1.0).contains(&spec.gamma) {
            return Err(Error::param("gamma", format!("{} outside [0, 1)", spec.gamma)));
        }
        let mut positions = Vec::with_capacity(mdp.num_states());
        let mut count = 0;
        for s in 0..mdp.num_states() {
            if mdp.is_terminal(s) {
                positions.push(None);
            } else {
                positions.push(Some(count));
                count += 1;
            }
        }
        let coder = TileCoder::new(spec.tile_width, count)?;
        let num_actions = mdp.num_actions();
        let size = coder.num_features() * num_actions;
        let (map_plus, map_minus) = if spec.variant.is_log() {
            let m = spec.mapping;
            let plus = LogMapping::with_init(m.c, m.k, spec.gamma, m.q_init_plus)?;
            let minus = if spec.variant == Variant::LogFull {
                Some(LogMapping::with_init(m.c, m.k, spec.gamma, m.q_init_minus)?)
            } else {
                None
            };
            (Some(plus), minus)
        } else {
            (None, None)
        };
        Ok(Agent {
            variant: spec.variant,
            gamma: spec.gamma,
            coder,
            num_actions,
            num_states: mdp.num_states(),
            positions,
            weights_plus: vec![0.0; size],
            weights_minus: if spec.variant == Variant::LogFull {
                vec![0.0; size]
            } else {
                Vec::new()
            },
            map_plus,
            map_minus,
            schedule: spec.schedule,
            visits: vec![0; count * num_actions],
            clamp_events: 0,
            scratch: vec![(0.0, 0.0); num_actions],
        })
    }

    pub fn variant(&self) -> Variant {
        self.variant
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn coder(&self) -> &TileCoder {
        &self.coder
    }

    pub fn num_actions(&self) -> usize {
        self.num_actions
    }

    pub fn schedule(&self) -> &StepSchedule {
        &self.schedule
    }

    pub fn weights(&self, head: Head) -> &[f64] {
        match head {
            Head::Plus => &self.weights_plus,
            Head::Minus => &self.weights_minus,
        }
    }

    pub fn mapping(&self, head: Head) -> Option<&LogMapping> {
        match head {
            Head::Plus => self.map_plus.as_ref(),
            Head::Minus => self.map_minus.as_ref(),
        }
    }

    /// Number of times a mapped target had to be clamped at the floor.
    pub fn clamp_events(&self) -> u64 {
        self.clamp_events
    }

    fn position(&self, s: usize) -> Result<usize> {
        match self.positions.get(s) {
            Some(Some(p)) => Ok(*p),
            Some(None) => Err(Error::TerminalState(s)),
            None => Err(Error::IndexOutOfRange {
                what: "state",
                index: s,
                limit: self.num_states,
            }),
        }
    }

    /// Stored value of one head: regular values for the regular variant,
    /// mapped values otherwise. Terminal states have no stored value.
    pub fn stored_value(&self, head: Head, s: usize, a: usize) -> Result<f64> {
        let pos = self.position(s)?;
        if a >= self.num_actions {
            return Err(Error::IndexOutOfRange { what: "action", index: a, limit: self.num_actions });
        }
        let w = self.weights(head);
        if w.is_empty() {
            return Err(Error::WrongVariant { op: "minus head", variant: self.variant.name() });
        }
        Ok(linear_q(w, &self.coder, pos, a))
    }

    /// Regular-space action value; for `log_full` the combined
    /// `f^-1(Q~+) - f^-1(Q~-)`. Terminal states are worth 0.
    pub fn q_value(&self, s: usize, a: usize) -> Result<f64> {
        if self.positions.get(s).is_some_and(|p| p.is_none()) {
            return Ok(0.0);
        }
        let pos = self.position(s)?;
        if a >= self.num_actions {
            return Err(Error::IndexOutOfRange { what: "action", index: a, limit: self.num_actions });
        }
        self.q_at(pos, a)
    }

    #[inline]
    fn q_at(&self, pos: usize, a: usize) -> Result<f64> {
        let plus = linear_q(&self.weights_plus, &self.coder, pos, a);
        match self.variant {
            Variant::Regular => Ok(plus),
            Variant::LogBasic | Variant::LogTwoStep => self.plus_map().inverse(plus),
            Variant::LogFull => {
                let minus = linear_q(&self.weights_minus, &self.coder, pos, a);
                Ok(self.plus_map().inverse(plus)? - self.minus_map().inverse(minus)?)
            }
        }
    }

    #[inline]
    fn plus_map(&self) -> &LogMapping {
        self.map_plus.as_ref().expect("log variant has a plus mapping")
    }

    #[inline]
    fn minus_map(&self) -> &LogMapping {
        self.map_minus.as_ref().expect("log_full has a minus mapping")
    }

    /// Greedy action in regular space, ties to the lowest index.
    pub fn greedy_action(&self, s: usize) -> Result<usize> {
        let pos = self.position(s)?;
        self.greedy_at(pos).map(|(a, _)| a)
    }

    /// Greedy action at a feature position and whether it was decided by a
    /// tie.
    pub(crate) fn greedy_at(&self, pos: usize) -> Result<(usize, bool)> {
        let mut best = 0;
        let mut best_v = f64::NEG_INFINITY;
        let mut tied = false;
        for a in 0..self.num_actions {
            // f^-1 is monotone, so single-head variants compare stored values
            let v = match self.variant {
                Variant::LogFull => self.q_at(pos, a)?,
                _ => linear_q(&self.weights_plus, &self.coder, pos, a),
            };
            if v > best_v {
                best = a;
                best_v = v;
                tied = false;
            } else if v == best_v {
                tied = true;
            }
        }
        Ok((best, tied))
    }

    /// Greedy actions for every non-terminal state (terminal entries are 0).
    pub fn greedy_policy(&self) -> Result<Vec<usize>> {
        (0..self.num_states)
            .map(|s| match self.positions[s] {
                Some(pos) => self.greedy_at(pos).map(|(a, _)| a),
                None => Ok(0),
            })
            .collect()
    }

    pub(crate) fn positions(&self) -> &[Option<usize>] {
        &self.positions
    }

    /// Regular-space values of every pair (combined for `log_full`).
    pub fn q_table(&self, mdp: &TabularMdp) -> Result<QTable> {
        let mut table = QTable::zeros(mdp, self.gamma);
        for s in 0..self.num_states {
            if let Some(pos) = self.positions[s] {
                for a in 0..self.num_actions {
                    table.set(s, a, self.q_at(pos, a)?);
                }
            }
        }
        Ok(table)
    }

    /// Stored (mapped) values of one head; terminal rows hold `f(0)`.
    pub fn stored_table(&self, mdp: &TabularMdp, head: Head) -> Result<QTable> {
        let w = self.weights(head);
        if w.is_empty() {
            return Err(Error::WrongVariant { op: "minus head", variant: self.variant.name() });
        }
        let terminal_value = match self.mapping(head) {
            Some(m) => m.forward(0.0)?,
            None => 0.0,
        };
        let mut table = QTable::zeros(mdp, self.gamma);
        for s in 0..self.num_states {
            for a in 0..self.num_actions {
                let v = match self.positions[s] {
                    Some(pos) => linear_q(w, &self.coder, pos, a),
                    None => terminal_value,
                };
                table.set(s, a, v);
            }
        }
        Ok(table)
    }

    #[inline]
    fn next_rates(&mut self, pos: usize, a: usize) -> (f64, f64) {
        let idx = pos * self.num_actions + a;
        let t = self.visits[idx];
        self.visits[idx] = t + 1;
        if self.schedule.is_constant() {
            (self.schedule.beta_log.scale, self.schedule.beta_reg.scale)
        } else {
            self.schedule.rates(t)
        }
    }

    #[inline]
    fn step_weights(weights: &mut [f64], coder: &TileCoder, pos: usize, a: usize, delta: f64) {
        let base = a * coder.num_features();
        for &f in coder.active_unchecked(pos) {
            weights[base + f] += delta;
        }
    }

    /// Applies the variant's update to one transition.
    pub fn update(&mut self, tr: &Transition) -> Result<()> {
        let pending = self.delta(tr)?;
        self.apply(pending);
        Ok(())
    }

    fn delta(&mut self, tr: &Transition) -> Result<Option<Pending>> {
        match self.variant {
            Variant::Regular => self.regular_delta(tr),
            Variant::LogBasic => self.single_head_delta(tr, false),
            Variant::LogTwoStep => self.single_head_delta(tr, true),
            Variant::LogFull => self.log_full_delta(tr),
        }
    }

    fn apply(&mut self, pending: Option<Pending>) {
        let Some(p) = pending else { return };
        Self::step_weights(&mut self.weights_plus, &self.coder, p.pos, p.action, p.plus);
        if !self.weights_minus.is_empty() {
            Self::step_weights(&mut self.weights_minus, &self.coder, p.pos, p.action, p.minus);
        }
    }

    fn checked(&mut self, want: Variant, op: &'static str, tr: &Transition) -> Result<()> {
        if self.variant != want {
            return Err(Error::WrongVariant { op, variant: self.variant.name() });
        }
        self.update(tr)
    }

    fn locate(&self, tr: &Transition) -> Result<(usize, Option<usize>)> {
        let pos = self.position(tr.state)?;
        if tr.action >= self.num_actions {
            return Err(Error::IndexOutOfRange { what: "action", index: tr.action, limit: self.num_actions });
        }
        let next = if tr.next_terminal {
            None
        } else {
            match self.positions.get(tr.next_state) {
                Some(p) => *p,
                None => {
                    return Err(Error::IndexOutOfRange {
                        what: "next state",
                        index: tr.next_state,
                        limit: self.num_states,
                    })
                }
            }
        };
        Ok((pos, next))
    }

    fn max_stored(&self, weights: &[f64], pos: usize) -> f64 {
        (0..self.num_actions)
            .map(|a| linear_q(weights, &self.coder, pos, a))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Semi-gradient Q-learning: every active weight of `(s, a)` moves by
    /// `alpha (r + gamma max_a' Q(s', a') - Q(s, a))`.
    pub fn regular_update(&mut self, tr: &Transition) -> Result<()> {
        self.checked(Variant::Regular, "regular_update", tr)
    }

    /// Log-space step of size `beta_log` toward `f(r + gamma max_a'
    /// f^-1(Q~(s', a')))`.
    pub fn log_basic_update(&mut self, tr: &Transition) -> Result<()> {
        self.checked(Variant::LogBasic, "log_basic_update", tr)
    }

    /// Interpolates in regular space, `u = (1 - beta_reg) f^-1(Q~(s,a)) +
    /// beta_reg U`, then steps `beta_log` toward `f(u)` in log space.
    pub fn log_two_step_update(&mut self, tr: &Transition) -> Result<()> {
        self.checked(Variant::LogTwoStep, "log_two_step_update", tr)
    }

    /// Two-head update on the decomposed reward. The bootstrap action
    /// maximises the combined value `f^-1(Q~+) - f^-1(Q~-)` (lowest index on
    /// ties) and both heads bootstrap from it.
    pub fn log_full_update(&mut self, tr: &Transition) -> Result<()> {
        self.checked(Variant::LogFull, "log_full_update", tr)
    }

    fn regular_delta(&mut self, tr: &Transition) -> Result<Option<Pending>> {
        let (pos, next) = self.locate(tr)?;
        let (bl, br) = self.next_rates(pos, tr.action);
        let alpha = bl * br;
        let bootstrap = match next {
            Some(np) => self.gamma * self.max_stored(&self.weights_plus, np),
            None => 0.0,
        };
        let target = tr.reward + bootstrap;
        let q = linear_q(&self.weights_plus, &self.coder, pos, tr.action);
        Ok(Some(Pending { pos, action: tr.action, plus: alpha * (target - q), minus: 0.0 }))
    }

    fn single_head_delta(&mut self, tr: &Transition, two_step: bool) -> Result<Option<Pending>> {
        if tr.reward < 0.0 {
            return Err(Error::NegativeReward { variant: self.variant.name(), reward: tr.reward });
        }
        let (pos, next) = self.locate(tr)?;
        let (beta_log, beta_reg) = self.next_rates(pos, tr.action);
        let beta_reg = if two_step { beta_reg } else { 1.0 };
        if beta_log == 0.0 || beta_reg == 0.0 {
            return Ok(None);
        }
        let map = *self.plus_map();
        // max_a' f^-1(Q~) = f^-1(max_a' Q~) as f^-1 is increasing
        let bootstrap = match next {
            Some(np) => self.gamma * map.inverse(self.max_stored(&self.weights_plus, np))?,
            None => 0.0,
        };
        let target_reg = tr.reward + bootstrap;
        let stored = linear_q(&self.weights_plus, &self.coder, pos, tr.action);
        let blended = if two_step {
            (1.0 - beta_reg) * map.inverse(stored)? + beta_reg * target_reg
        } else {
            target_reg
        };
        let (mapped, clamped) = map.forward_flagged(blended)?;
        self.clamp_events += clamped as u64;
        Ok(Some(Pending { pos, action: tr.action, plus: beta_log * (mapped - stored), minus: 0.0 }))
    }

    fn log_full_delta(&mut self, tr: &Transition) -> Result<Option<Pending>> {
        let (pos, next) = self.locate(tr)?;
        let (beta_log, beta_reg) = self.next_rates(pos, tr.action);
        if beta_log == 0.0 || beta_reg == 0.0 {
            return Ok(None);
        }
        let (r_plus, r_minus) = decompose_reward(tr.reward);
        let plus_map = *self.plus_map();
        let minus_map = *self.minus_map();

        let (boot_plus, boot_minus) = match next {
            Some(np) => {
                let mut best = 0;
                let mut best_v = f64::NEG_INFINITY;
                for a in 0..self.num_actions {
                    let p = plus_map.inverse(linear_q(&self.weights_plus, &self.coder, np, a))?;
                    let m = minus_map.inverse(linear_q(&self.weights_minus, &self.coder, np, a))?;
                    self.scratch[a] = (p, m);
                    if p - m > best_v {
                        best = a;
                        best_v = p - m;
                    }
                }
                let (p, m) = self.scratch[best];
                (self.gamma * p, self.gamma * m)
            }
            None => (0.0, 0.0),
        };

        let a = tr.action;
        let stored_plus = linear_q(&self.weights_plus, &self.coder, pos, a);
        let stored_minus = linear_q(&self.weights_minus, &self.coder, pos, a);
        let blend_plus =
            (1.0 - beta_reg) * plus_map.inverse(stored_plus)? + beta_reg * (r_plus + boot_plus);
        let blend_minus =
            (1.0 - beta_reg) * minus_map.inverse(stored_minus)? + beta_reg * (r_minus + boot_minus);
        let (target_plus, c1) = plus_map.forward_flagged(blend_plus)?;
        let (target_minus, c2) = minus_map.forward_flagged(blend_minus)?;
        self.clamp_events += c1 as u64 + c2 as u64;
        Ok(Some(Pending {
            pos,
            action: a,
            plus: beta_log * (target_plus - stored_plus),
            minus: beta_log * (target_minus - stored_minus),
        }))
    }

    /// One sweep: samples one transition for every non-terminal
    /// state-action pair (ascending state, then action) and applies each
    /// update in place, so later pairs see earlier updates.
    pub fn sweep<R: Rng + ?Sized>(&mut self, mdp: &TabularMdp, rng: &mut R) -> Result<()> {
        if mdp.num_states() != self.num_states || mdp.num_actions() != self.num_actions {
            return Err(Error::param("mdp", "agent was built for a different MDP"));
        }
        for s in 0..self.num_states {
            if self.positions[s].is_none() {
                continue;
            }
            for a in 0..self.num_actions {
                let tr = mdp.step(s, a, rng);
                self.update(&tr)?;
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy)]
struct Pending {
    pos: usize,
    action: usize,
    plus: f64,
    minus: f64,
}

/// Runs one sweep of `agent` over `mdp`.
pub fn sweep<R: Rng + ?Sized>(agent: &mut Agent, mdp: &TabularMdp, rng: &mut R) -> Result<()> {
    agent.sweep(mdp, rng)
}

/// First maximising action of a row, shared with the oracle.
pub fn greedy_of(values: &[f64]) -> usize {
    argmax_first(values)
}
