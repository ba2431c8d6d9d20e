use crate::agents::{AgentSpec, MappingParams, Rate, StepSchedule, Variant};
use crate::envs::{ChainParams, TabularMdp};
use crate::error::{Error, Result};
use crate::kv::KeyValues;
use crate::metrics::KappaMode;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

/// Reward transform applied to the task before learning.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RewardTransform {
    None,
    /// Multiply every reward.
    Scale(f64),
    /// Push every optimal action value up by the offset.
    Shift(f64),
}

impl RewardTransform {
    pub fn apply(&self, mdp: &TabularMdp, gamma: f64) -> Result<TabularMdp> {
        match *self {
            RewardTransform::None => Ok(mdp.clone()),
            RewardTransform::Scale(f) => mdp.scale_rewards(f),
            RewardTransform::Shift(o) => mdp.shift_values(o, gamma),
        }
    }
}

impl fmt::Display for RewardTransform {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RewardTransform::None => f.write_str("none"),
            RewardTransform::Scale(x) => write!(f, "scale:{x}"),
            RewardTransform::Shift(x) => write!(f, "shift:{x}"),
        }
    }
}

impl FromStr for RewardTransform {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        if s == "none" {
            return Ok(RewardTransform::None);
        }
        let (kind, value) = s
            .split_once(':')
            .ok_or_else(|| format!("expected none, scale:F or shift:O, got `{s}`"))?;
        let value: f64 = value.parse().map_err(|e| format!("bad number in `{s}`: {e}"))?;
        if !value.is_finite() {
            return Err(format!("non-finite value in `{s}`"));
        }
        match kind {
            "scale" if value != 0.0 => Ok(RewardTransform::Scale(value)),
            "scale" => Err("scale factor must be non-zero".into()),
            "shift" => Ok(RewardTransform::Shift(value)),
            _ => Err(format!("unknown transform `{kind}`")),
        }
    }
}

/// Half-open sweep window `(start, end]` over 1-based sweep numbers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Window {
    pub start: u64,
    pub end: u64,
}

impl Window {
    pub fn new(start: u64, end: u64) -> Self {
        Window { start, end }
    }

    #[inline]
    pub fn contains(&self, sweep: u64) -> bool {
        sweep > self.start && sweep <= self.end
    }

    pub fn len(&self) -> u64 {
        self.end.saturating_sub(self.start)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

impl FromStr for Window {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        let (a, b) = s
            .split_once(',')
            .ok_or_else(|| format!("expected `start,end`, got `{s}`"))?;
        let parse = |x: &str| x.trim().parse::<u64>().map_err(|e| format!("bad window bound `{x}`: {e}"));
        Ok(Window::new(parse(a)?, parse(b)?))
    }
}

impl fmt::Display for Window {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{}", self.start, self.end)
    }
}

/// Named chain presets.
pub fn chain_preset(task: &str) -> Option<ChainParams> {
    match task {
        "chain_full" => Some(ChainParams::full()),
        "chain_positive" => Some(ChainParams::positive()),
        "chain_deterministic" => Some(ChainParams::deterministic()),
        _ => None,
    }
}

pub const DEFAULT_SWEEPS: u64 = 110_000;
pub const DEFAULT_WINDOW: u64 = 10_000;

// 10k of 110k sweeps, kept in proportion for shorter runs
fn default_span(num_sweeps: u64) -> u64 {
    DEFAULT_WINDOW.min((num_sweeps / 11).max(1)).min(num_sweeps)
}

/// `n` evenly spaced discount factors in `[0.05, 0.99]`.
pub fn gamma_grid(n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![0.99];
    }
    (0..n).map(|i| 0.05 + 0.94 * i as f64 / (n - 1) as f64).collect()
}

/// One chain learning run.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub task: String,
    pub chain: ChainParams,
    pub agent: AgentSpec,
    pub num_sweeps: u64,
    pub early_window: Window,
    pub final_window: Window,
    pub seed: u64,
    pub transform: RewardTransform,
    pub kappa_mode: Option<KappaMode>,
    pub rms: bool,
}

impl ExperimentConfig {
    /// Defaults: regular agent, tabular, alpha 0.001, 110,000 sweeps.
    pub fn chain(task: &str, variant: Variant, gamma: f64, tile_width: usize) -> Result<Self> {
        let chain = chain_preset(task).ok_or_else(|| Error::config("task", format!("unknown task `{task}`")))?;
        let schedule = if variant == Variant::Regular {
            StepSchedule::alpha(0.001)?
        } else {
            StepSchedule::constant(0.01, 0.1)?
        };
        let cfg = ExperimentConfig {
            task: task.to_string(),
            chain,
            agent: AgentSpec {
                variant,
                tile_width,
                gamma,
                mapping: MappingParams::default(),
                schedule,
            },
            num_sweeps: DEFAULT_SWEEPS,
            early_window: Window::new(0, DEFAULT_WINDOW),
            final_window: Window::new(DEFAULT_SWEEPS - DEFAULT_WINDOW, DEFAULT_SWEEPS),
            seed: 0,
            transform: RewardTransform::None,
            kappa_mode: None,
            rms: false,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let mut kv = KeyValues::from_file(path)?;
        let cfg = Self::from_kv(&mut kv)?;
        kv.finish()?;
        Ok(cfg)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut kv = KeyValues::parse(text)?;
        let cfg = Self::from_kv(&mut kv)?;
        kv.finish()?;
        Ok(cfg)
    }

    /// Reads every experiment key; `gamma` is required.
    pub fn from_kv(kv: &mut KeyValues) -> Result<Self> {
        let gamma = kv.require::<f64>("gamma")?;
        let width = kv.take_or("tile_width", 1usize)?;
        let seed = kv.take_or("seed", 0u64)?;
        Self::from_kv_with(kv, gamma, width, seed)
    }

    /// Reads every key except `gamma`, `tile_width` and `seed`.
    pub fn from_kv_with(kv: &mut KeyValues, gamma: f64, tile_width: usize, seed: u64) -> Result<Self> {
        let task = kv.take_str("task").unwrap_or_else(|| "chain_full".to_string());
        let mut chain = chain_preset(&task).ok_or_else(|| {
            Error::config("task", format!("unknown task `{task}` (chain_full, chain_positive, chain_deterministic)"))
        })?;
        chain.num_states = kv.take_or("num_states", chain.num_states)?;
        chain.p = kv.take_or("p", chain.p)?;
        chain.r_left = kv.take_or("r_left", chain.r_left)?;
        chain.r_right = kv.take_or("r_right", chain.r_right)?;

        let variant = match kv.take_str("agent") {
            Some(v) => v.parse::<Variant>().map_err(|e| Error::config("agent", e))?,
            None => Variant::Regular,
        };
        let defaults = MappingParams::default();
        let mapping = MappingParams {
            c: kv.take_or("c", defaults.c)?,
            k: kv.take_or("k", defaults.k)?,
            q_init_plus: kv.take_or("q_init_plus", defaults.q_init_plus)?,
            q_init_minus: kv.take_or("q_init_minus", defaults.q_init_minus)?,
        };
        let schedule = read_schedule(kv, variant)?;

        let num_sweeps = kv.take_or("num_sweeps", DEFAULT_SWEEPS)?;
        let span = default_span(num_sweeps);
        let early_window = kv.take_or("early_window", Window::new(0, span))?;
        let final_window = kv.take_or("final_window", Window::new(num_sweeps - span, num_sweeps))?;
        let transform = kv.take_or("transform", RewardTransform::None)?;
        let kappa_mode = match kv.take_str("kappa_mode") {
            None => None,
            Some(s) if s == "none" => None,
            Some(s) => Some(s.parse::<KappaMode>().map_err(|e| Error::config("kappa_mode", e))?),
        };
        let rms = kv.take_or("rms", false)?;

        let cfg = ExperimentConfig {
            task,
            chain,
            agent: AgentSpec {
                variant,
                tile_width,
                gamma,
                mapping,
                schedule,
            },
            num_sweeps,
            early_window,
            final_window,
            seed,
            transform,
            kappa_mode,
            rms,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Checks ranges that would otherwise only fail mid-run.
    pub fn validate(&self) -> Result<()> {
        let g = self.agent.gamma;
        if !(0.0..1.0).contains(&g) {
            return Err(Error::config("gamma", format!("{g} outside [0, 1)")));
        }
        if self.agent.tile_width == 0 || self.agent.tile_width > self.chain.num_states {
            return Err(Error::config(
                "tile_width",
                format!("{} outside 1..={}", self.agent.tile_width, self.chain.num_states),
            ));
        }
        if self.num_sweeps == 0 {
            return Err(Error::config("num_sweeps", "must be at least 1"));
        }
        for (key, w) in [("early_window", self.early_window), ("final_window", self.final_window)] {
            if w.is_empty() {
                return Err(Error::config(key, format!("window ({w}] is empty")));
            }
            if w.end > self.num_sweeps {
                return Err(Error::config(key, format!("window end {} exceeds num_sweeps {}", w.end, self.num_sweeps)));
            }
        }
        let m = self.agent.mapping;
        if self.agent.variant.is_log() && (!(m.c > 0.0) || !(m.k >= 0.0)) {
            return Err(Error::config("c", "log variants need c > 0 and k >= 0"));
        }
        self.chain.build().map_err(|e| Error::config("task", e.to_string()))?;
        Ok(())
    }

    pub fn with_gamma(mut self, gamma: f64) -> Self {
        self.agent.gamma = gamma;
        self
    }

    pub fn with_tile_width(mut self, width: usize) -> Self {
        self.agent.tile_width = width;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_num_sweeps(mut self, n: u64) -> Self {
        let span = default_span(n);
        self.num_sweeps = n;
        self.early_window = Window::new(0, span);
        self.final_window = Window::new(n - span, n);
        self
    }

    /// Identity of everything that influences the learning dynamics; the
    /// run's random stream is derived from it and the seed.
    pub fn stream_label(&self) -> String {
        let a = &self.agent;
        let c = &self.chain;
        format!(
            "{}|n={}|p={:?}|rl={:?}|rr={:?}|{}|g={:?}|w={}|c={:?}|k={:?}|q+={:?}|q-={:?}|bl={}|br={}|t={}",
            self.task,
            c.num_states,
            c.p,
            c.r_left,
            c.r_right,
            a.variant,
            a.gamma,
            a.tile_width,
            a.mapping.c,
            a.mapping.k,
            a.mapping.q_init_plus,
            a.mapping.q_init_minus,
            a.schedule.beta_log,
            a.schedule.beta_reg,
            self.transform,
        )
    }
}

fn read_schedule(kv: &mut KeyValues, variant: Variant) -> Result<StepSchedule> {
    let alpha = kv.take::<f64>("alpha")?;
    let beta_log = kv.take::<Rate>("beta_log")?;
    let beta_reg = kv.take::<Rate>("beta_reg")?;
    let log_exp = kv.take::<f64>("beta_log_exp")?;
    let reg_exp = kv.take::<f64>("beta_reg_exp")?;
    let explicit = beta_log.is_some() || beta_reg.is_some();
    let poly = log_exp.is_some() || reg_exp.is_some();
    if alpha.is_some() && (explicit || poly) {
        return Err(Error::config("alpha", "give either alpha or beta_log/beta_reg, not both"));
    }
    if explicit && poly {
        return Err(Error::config("beta_log_exp", "give either beta_log/beta_reg or exponents, not both"));
    }
    if let Some(a) = alpha {
        return StepSchedule::alpha(a).map_err(|e| Error::config("alpha", e.to_string()));
    }
    if poly {
        let reg = reg_exp.ok_or_else(|| Error::config("beta_reg_exp", "missing; both exponents are needed"))?;
        let log = log_exp.ok_or_else(|| Error::config("beta_log_exp", "missing; both exponents are needed"))?;
        return StepSchedule::polynomial(reg, log);
    }
    let (default_log, default_reg) = if variant == Variant::Regular {
        (Rate::constant(0.001), Rate::constant(1.0))
    } else {
        (Rate::constant(0.01), Rate::constant(0.1))
    };
    StepSchedule::new(beta_log.unwrap_or(default_log), beta_reg.unwrap_or(default_reg))
        .map_err(|e| Error::config("beta_log", e.to_string()))
}

/// A template crossed with discount, tile-width and seed axes.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepGrid {
    pub template: ExperimentConfig,
    pub gammas: Vec<f64>,
    pub tile_widths: Vec<usize>,
    pub seeds: Vec<u64>,
}

pub const DEFAULT_SEEDS: u64 = 5;

impl SweepGrid {
    /// Like [`ExperimentConfig::from_kv`], but `gamma`, `tile_width` and
    /// `seeds` take lists (`num_seeds = n` is shorthand for `0..n`). Missing
    /// axes default to the 20-point discount grid, widths 1 2 3 5 and five
    /// seeds.
    pub fn from_kv(kv: &mut KeyValues) -> Result<Self> {
        let gammas = kv.take_list::<f64>("gamma")?.unwrap_or_else(|| gamma_grid(20));
        let tile_widths = kv.take_list::<usize>("tile_width")?.unwrap_or_else(|| vec![1, 2, 3, 5]);
        let listed = kv.take_list::<u64>("seeds")?;
        let count = kv.take::<u64>("num_seeds")?;
        let seeds = match (listed, count) {
            (Some(_), Some(_)) => return Err(Error::config("num_seeds", "give either seeds or num_seeds")),
            (Some(s), None) => s,
            (None, Some(0)) => return Err(Error::config("num_seeds", "must be at least 1")),
            (None, Some(n)) => (0..n).collect(),
            (None, None) => (0..DEFAULT_SEEDS).collect(),
        };
        let template = ExperimentConfig::from_kv_with(kv, gammas[0], tile_widths[0], seeds[0])?;
        let grid = SweepGrid { template, gammas, tile_widths, seeds };
        for cfg in grid.cells() {
            cfg.validate()?;
        }
        Ok(grid)
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let mut kv = KeyValues::from_file(path)?;
        let grid = Self::from_kv(&mut kv)?;
        kv.finish()?;
        Ok(grid)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut kv = KeyValues::parse(text)?;
        let grid = Self::from_kv(&mut kv)?;
        kv.finish()?;
        Ok(grid)
    }

    /// Cartesian product in (gamma, width, seed) order.
    pub fn cells(&self) -> Vec<ExperimentConfig> {
        let mut out = Vec::with_capacity(self.len());
        for &g in &self.gammas {
            for &w in &self.tile_widths {
                for &s in &self.seeds {
                    out.push(self.template.clone().with_gamma(g).with_tile_width(w).with_seed(s));
                }
            }
        }
        out
    }

    pub fn len(&self) -> usize {
        self.gammas.len() * self.tile_widths.len() * self.seeds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_follow_the_protocol() {
        let cfg = ExperimentConfig::parse("gamma = 0.9\n").unwrap();
        assert_eq!(cfg.task, "chain_full");
        assert_eq!(cfg.num_sweeps, 110_000);
        assert_eq!(cfg.early_window, Window::new(0, 10_000));
        assert_eq!(cfg.final_window, Window::new(100_000, 110_000));
        assert_eq!(cfg.agent.schedule, StepSchedule::alpha(0.001).unwrap());
    }

    #[test]
    fn misspelled_key_is_named() {
        match ExperimentConfig::parse("gamma = 0.9\ntile_widht = 3\n") {
            Err(Error::Config { key, .. }) => assert_eq!(key, "tile_widht"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn zero_sweeps_rejected() {
        assert!(ExperimentConfig::parse("gamma = 0.9\nnum_sweeps = 0\n").is_err());
        assert!(ExperimentConfig::parse("gamma = 0.9\nnum_sweeps = 100\nfinal_window = 50,200\n").is_err());
    }

    #[test]
    fn schedule_keys() {
        let cfg = ExperimentConfig::parse("gamma = 0.9\nagent = log_full\nbeta_reg_exp = 0.3\nbeta_log_exp = 0.4\n").unwrap();
        assert_eq!(cfg.agent.schedule, StepSchedule::polynomial(0.3, 0.4).unwrap());
        assert!(ExperimentConfig::parse("gamma = 0.9\nalpha = 0.1\nbeta_log = 0.1\n").is_err());
        let cfg = ExperimentConfig::parse("gamma = 0.9\nagent = log_full\n").unwrap();
        assert_eq!(cfg.agent.schedule, StepSchedule::constant(0.01, 0.1).unwrap());
    }

    #[test]
    fn transforms_parse() {
        assert_eq!("scale:100".parse::<RewardTransform>().unwrap(), RewardTransform::Scale(100.0));
        assert_eq!("shift:100".parse::<RewardTransform>().unwrap(), RewardTransform::Shift(100.0));
        assert!("scale:0".parse::<RewardTransform>().is_err());
        assert!("double".parse::<RewardTransform>().is_err());
    }

    #[test]
    fn grid_axes() {
        let grid = SweepGrid::parse("gamma = 0.5, 0.9\ntile_width = 1 3\nnum_seeds = 2\nnum_sweeps = 100\n").unwrap();
        assert_eq!(grid.len(), 8);
        let g = SweepGrid::parse("num_sweeps = 10\n").unwrap();
        assert_eq!(g.gammas.len(), 20);
        assert!((g.gammas[19] - 0.99).abs() < 1e-15);
        assert_eq!(g.seeds, vec![0, 1, 2, 3, 4]);
    }

    #[test]
    fn stream_label_tracks_transform() {
        let a = ExperimentConfig::parse("gamma = 0.9\n").unwrap();
        let b = ExperimentConfig::parse("gamma = 0.9\ntransform = scale:100\n").unwrap();
        assert_ne!(a.stream_label(), b.stream_label());
    }
}
