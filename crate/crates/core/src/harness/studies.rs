use super::config::{chain_preset, gamma_grid, ExperimentConfig};
use super::ORACLE_TOL;
use crate::agents::{Agent, Rate, StepSchedule};
use crate::envs::{make_delayed_choice, ChainParams, GridConfig, Gridworld, TabularMdp};
use crate::error::{Error, Result};
use crate::kv::KeyValues;
use crate::mapping::LogMapping;
use crate::metrics::{action_gap_deviation, rms_error, GapTables, KappaMode};
use crate::oracle::{decomposed_heads, metric_gap, value_iteration, MetricGap};
use crate::rng::stream;
use std::path::Path;
use std::sync::atomic::{AtomicBool, Ordering};

/// Task of an oracle study: a chain preset, a gridworld, or the two-step
/// delayed-choice MDP.
#[derive(Debug, Clone, PartialEq)]
pub enum StudyTask {
    Chain { name: String, params: ChainParams },
    Gridworld(GridConfig),
    DelayedChoice { small: f64, large: f64 },
}

impl StudyTask {
    /// Reads `task` plus its parameters. Gridworld layouts are given inline
    /// with the grid keys (`width`, `height`, `start`, `objects`, ...).
    pub fn from_kv(kv: &mut KeyValues, default: &str) -> Result<Self> {
        let name = kv.take_str("task").unwrap_or_else(|| default.to_string());
        match name.as_str() {
            "gridworld" => Ok(StudyTask::Gridworld(GridConfig::from_kv(kv)?)),
            "delayed_choice" => Ok(StudyTask::DelayedChoice {
                small: kv.take_or("small", 1.0)?,
                large: kv.take_or("large", 10.0)?,
            }),
            other => {
                let mut params = chain_preset(other).ok_or_else(|| {
                    Error::config(
                        "task",
                        format!("unknown task `{other}` (chain_full, chain_positive, chain_deterministic, gridworld, delayed_choice)"),
                    )
                })?;
                params.num_states = kv.take_or("num_states", params.num_states)?;
                params.p = kv.take_or("p", params.p)?;
                params.r_left = kv.take_or("r_left", params.r_left)?;
                params.r_right = kv.take_or("r_right", params.r_right)?;
                Ok(StudyTask::Chain { name, params })
            }
        }
    }

    pub fn name(&self) -> &str {
        match self {
            StudyTask::Chain { name, .. } => name,
            StudyTask::Gridworld(_) => "gridworld",
            StudyTask::DelayedChoice { .. } => "delayed_choice",
        }
    }

    pub fn build(&self) -> Result<TabularMdp> {
        match self {
            StudyTask::Chain { params, .. } => params.build(),
            StudyTask::Gridworld(cfg) => Ok(Gridworld::new(cfg.clone())?.into_mdp()),
            StudyTask::DelayedChoice { small, large } => make_delayed_choice(*small, *large),
        }
    }
}

fn read_gammas(kv: &mut KeyValues) -> Result<Vec<f64>> {
    let gammas = kv.take_list::<f64>("gamma")?.unwrap_or_else(|| gamma_grid(20));
    if let Some(g) = gammas.iter().find(|g| !(0.0..1.0).contains(*g)) {
        return Err(Error::config("gamma", format!("{g} outside [0, 1)")));
    }
    Ok(gammas)
}

/// Scan of the metric gap over discount factors.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricGapStudy {
    pub task: StudyTask,
    pub gammas: Vec<f64>,
    pub horizon: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GapRow {
    pub gamma: f64,
    pub gap: MetricGap,
}

impl MetricGapStudy {
    pub fn from_kv(kv: &mut KeyValues) -> Result<Self> {
        let task = StudyTask::from_kv(kv, "chain_full")?;
        let gammas = read_gammas(kv)?;
        let horizon = kv.require::<usize>("horizon")?;
        if horizon == 0 {
            return Err(Error::config("horizon", "must be at least 1"));
        }
        Ok(MetricGapStudy { task, gammas, horizon })
    }

    pub fn parse(text: &str) -> Result<Self> {
        Self::finish(KeyValues::parse(text)?)
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        Self::finish(KeyValues::from_file(path)?)
    }

    fn finish(mut kv: KeyValues) -> Result<Self> {
        let study = Self::from_kv(&mut kv)?;
        kv.finish()?;
        Ok(study)
    }
}

pub fn metric_gap_scan(study: &MetricGapStudy) -> Result<Vec<GapRow>> {
    let mdp = study.task.build()?;
    study
        .gammas
        .iter()
        .map(|&gamma| Ok(GapRow { gamma, gap: metric_gap(&mdp, gamma, study.horizon, ORACLE_TOL)? }))
        .collect()
}

/// κ of oracle tables over discount factors.
#[derive(Debug, Clone, PartialEq)]
pub struct KappaStudy {
    pub task: StudyTask,
    pub gammas: Vec<f64>,
    pub modes: Vec<KappaMode>,
    pub c: f64,
    pub k: f64,
    pub q_init_plus: f64,
    pub q_init_minus: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KappaRow {
    pub gamma: f64,
    pub mode: KappaMode,
    /// `None` when the selected tables have no non-zero gap.
    pub kappa: Option<f64>,
}

impl KappaStudy {
    pub fn from_kv(kv: &mut KeyValues) -> Result<Self> {
        let task = StudyTask::from_kv(kv, "chain_deterministic")?;
        let gammas = read_gammas(kv)?;
        let modes = kv.take_list::<KappaMode>("kappa_mode")?.unwrap_or_else(|| KappaMode::ALL.to_vec());
        let study = KappaStudy {
            task,
            gammas,
            modes,
            c: kv.take_or("c", 1.0)?,
            k: kv.take_or("k", 200.0)?,
            q_init_plus: kv.take_or("q_init_plus", 0.0)?,
            q_init_minus: kv.take_or("q_init_minus", 0.0)?,
        };
        if !(study.c > 0.0) || !(study.k >= 0.0) {
            return Err(Error::config("c", "need c > 0 and k >= 0"));
        }
        Ok(study)
    }

    pub fn parse(text: &str) -> Result<Self> {
        Self::finish(KeyValues::parse(text)?)
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        Self::finish(KeyValues::from_file(path)?)
    }

    fn finish(mut kv: KeyValues) -> Result<Self> {
        let study = Self::from_kv(&mut kv)?;
        kv.finish()?;
        Ok(study)
    }
}

/// Regular mode reads `Q*`; the log modes read `f` applied to the exact
/// positive and negative heads; log-bias reads `f(Q* + 1)`.
pub fn kappa_scan(study: &KappaStudy) -> Result<Vec<KappaRow>> {
    let mdp = study.task.build()?;
    let mut rows = Vec::new();
    for &gamma in &study.gammas {
        let q = value_iteration(&mdp, gamma, ORACLE_TOL)?;
        let (plus, minus) = decomposed_heads(&mdp, gamma, ORACLE_TOL)?;
        let map_plus = LogMapping::with_init(study.c, study.k, gamma, study.q_init_plus)?;
        let map_minus = LogMapping::with_init(study.c, study.k, gamma, study.q_init_minus)?;
        let plus = plus.try_map(|v| map_plus.forward(v))?;
        let minus = minus.try_map(|v| map_minus.forward(v))?;
        let tables = GapTables {
            regular: Some(&q),
            plus: Some(&plus),
            minus: Some(&minus),
            mapping: Some(&map_plus),
        };
        for &mode in &study.modes {
            let kappa = match action_gap_deviation(&tables, mode) {
                Ok(k) => Some(k),
                Err(Error::NoActionGaps) => None,
                Err(e) => return Err(e),
            };
            rows.push(KappaRow { gamma, mode, kappa });
        }
    }
    Ok(rows)
}

/// RMS error against `Q*` over the course of learning, for several step-size
/// pairs and seeds.
#[derive(Debug, Clone, PartialEq)]
pub struct RmsStudy {
    pub base: ExperimentConfig,
    pub schedules: Vec<StepSchedule>,
    pub seeds: Vec<u64>,
    pub every: u64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RmsPoint {
    pub sweep: u64,
    pub rms: f64,
}

impl RmsStudy {
    /// Experiment keys, except that `beta_log` and `beta_reg` take
    /// equal-length lists (a single value is broadcast) and `seeds` or
    /// `num_seeds` select the seeds. `record_every` sets the sampling
    /// interval in sweeps.
    pub fn from_kv(kv: &mut KeyValues) -> Result<Self> {
        let logs = kv.take_list::<Rate>("beta_log")?;
        let regs = kv.take_list::<Rate>("beta_reg")?;
        let seeds = match (kv.take_list::<u64>("seeds")?, kv.take::<u64>("num_seeds")?) {
            (Some(_), Some(_)) => return Err(Error::config("num_seeds", "give either seeds or num_seeds")),
            (Some(s), None) => s,
            (None, Some(n)) if n > 0 => (0..n).collect(),
            (None, Some(_)) => return Err(Error::config("num_seeds", "must be at least 1")),
            (None, None) => vec![0],
        };
        let every = kv.take_or("record_every", 100u64)?;
        if every == 0 {
            return Err(Error::config("record_every", "must be at least 1"));
        }
        let gamma = kv.require::<f64>("gamma")?;
        let width = kv.take_or("tile_width", 1usize)?;
        let base = ExperimentConfig::from_kv_with(kv, gamma, width, seeds[0])?;
        let schedules = match (logs, regs) {
            (None, None) => vec![base.agent.schedule],
            (logs, regs) => {
                let default = base.agent.schedule;
                let logs = logs.unwrap_or_else(|| vec![default.beta_log]);
                let regs = regs.unwrap_or_else(|| vec![default.beta_reg]);
                let n = logs.len().max(regs.len());
                if (logs.len() != n && logs.len() != 1) || (regs.len() != n && regs.len() != 1) {
                    return Err(Error::config("beta_reg", "beta_log and beta_reg lists differ in length"));
                }
                (0..n)
                    .map(|i| {
                        let l = logs[if logs.len() == 1 { 0 } else { i }];
                        let r = regs[if regs.len() == 1 { 0 } else { i }];
                        StepSchedule::new(l, r).map_err(|e| Error::config("beta_log", e.to_string()))
                    })
                    .collect::<Result<Vec<_>>>()?
            }
        };
        Ok(RmsStudy { base, schedules, seeds, every })
    }

    pub fn parse(text: &str) -> Result<Self> {
        Self::finish(KeyValues::parse(text)?)
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        Self::finish(KeyValues::from_file(path)?)
    }

    fn finish(mut kv: KeyValues) -> Result<Self> {
        let study = Self::from_kv(&mut kv)?;
        kv.finish()?;
        Ok(study)
    }

    /// One experiment config per (schedule, seed).
    pub fn cells(&self) -> Vec<ExperimentConfig> {
        let mut out = Vec::new();
        for s in &self.schedules {
            for &seed in &self.seeds {
                let mut cfg = self.base.clone().with_seed(seed);
                cfg.agent.schedule = *s;
                out.push(cfg);
            }
        }
        out
    }
}

/// RMS of `f^-1` of the agent's values against `Q*` at sweep 0 and every
/// `every` sweeps up to `cfg.num_sweeps` (always including the last).
pub fn rms_curve(cfg: &ExperimentConfig, every: u64, cancel: Option<&AtomicBool>) -> Result<Vec<RmsPoint>> {
    cfg.validate()?;
    if every == 0 {
        return Err(Error::config("record_every", "must be at least 1"));
    }
    let spec = &cfg.agent;
    let mdp = cfg.transform.apply(&cfg.chain.build()?, spec.gamma)?;
    let oracle = value_iteration(&mdp, spec.gamma, ORACLE_TOL)?;
    let mut agent = Agent::new(spec, &mdp)?;
    let mut rng = stream(cfg.seed, &cfg.stream_label());
    let mut points = vec![RmsPoint { sweep: 0, rms: rms_error(&agent.q_table(&mdp)?, &oracle)? }];
    for sweep in 1..=cfg.num_sweeps {
        if sweep % 1024 == 0 && cancel.is_some_and(|c| c.load(Ordering::Relaxed)) {
            return Err(Error::Cancelled);
        }
        agent.sweep(&mdp, &mut rng)?;
        if sweep % every == 0 || sweep == cfg.num_sweeps {
            points.push(RmsPoint { sweep, rms: rms_error(&agent.q_table(&mdp)?, &oracle)? });
        }
    }
    Ok(points)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chain_metric_gap_is_zero() {
        let study = MetricGapStudy::parse("task = chain_full\ngamma = 0.1, 0.5, 0.99\nhorizon = 100\n").unwrap();
        for row in metric_gap_scan(&study).unwrap() {
            assert_eq!(row.gap.gap, 0.0, "gamma {}", row.gamma);
        }
    }

    #[test]
    fn delayed_choice_gaps() {
        let study = MetricGapStudy::parse("task = delayed_choice\ngamma = 0.05, 0.99\nhorizon = 2\n").unwrap();
        let rows = metric_gap_scan(&study).unwrap();
        assert_eq!(rows[0].gap.gap, 9.0);
        assert_eq!(rows[1].gap.gap, 0.0);
    }

    #[test]
    fn kappa_scan_regular_value() {
        let study = KappaStudy::parse("gamma = 0.5\nkappa_mode = regular, log_min_only\n").unwrap();
        let rows = kappa_scan(&study).unwrap();
        assert!((rows[0].kappa.unwrap() - 4.339_915_521_927_771).abs() < 1e-6);
        // no negative rewards on the deterministic chain
        assert_eq!(rows[1].kappa, None);
    }

    #[test]
    fn rms_lists_broadcast() {
        let s = RmsStudy::parse(
            "task = chain_positive\nagent = log_two_step\ngamma = 0.9\nbeta_log = 0.005, 0.5\nbeta_reg = 1, 0.01\nnum_seeds = 3\nnum_sweeps = 10\n",
        )
        .unwrap();
        assert_eq!(s.cells().len(), 6);
        assert!(RmsStudy::parse("gamma = 0.9\nbeta_log = 0.1, 0.2\nbeta_reg = 0.1, 0.2, 0.3\n").is_err());
    }

    #[test]
    fn rms_curve_starts_at_oracle_norm() {
        let s = RmsStudy::parse("task = chain_positive\nagent = log_two_step\ngamma = 0.9\nnum_sweeps = 20\nrecord_every = 10\n")
            .unwrap();
        let pts = rms_curve(&s.cells()[0], s.every, None).unwrap();
        assert_eq!(pts.iter().map(|p| p.sweep).collect::<Vec<_>>(), vec![0, 10, 20]);
        assert!(pts[2].rms < pts[0].rms);
    }
}
