//! Experiment configuration, sweep execution, seeding and CSV output.

pub mod cli;
mod config;
mod csv;
mod grid;
mod studies;

pub use self::csv::{emit_csv, format_g9, read_csv, write_csv, CSV_COLUMNS};
pub use config::{
    chain_preset, gamma_grid, ExperimentConfig, RewardTransform, SweepGrid, Window, DEFAULT_SEEDS,
    DEFAULT_SWEEPS, DEFAULT_WINDOW,
};
pub use grid::{aggregate, run_sweep_grid, Aggregate, CellFailure, GridOutcome};
pub use studies::{
    kappa_scan, metric_gap_scan, rms_curve, GapRow, KappaRow, KappaStudy, MetricGapStudy, RmsPoint, RmsStudy,
    StudyTask,
};

use crate::agents::{Agent, Rate, Variant};
use crate::mapping::LogMapping;
use crate::metrics::{agent_kappa, chain_optimality, rms_error, KappaMode};
use crate::oracle::value_iteration;
use crate::error::{Error, Result};
use crate::rng::stream;
use std::sync::atomic::{AtomicBool, Ordering};
use std::time::Instant;

/// Tolerance of the value-iteration oracles used by the harness.
pub const ORACLE_TOL: f64 = 1e-10;

/// Sweeps between cancellation checks.
const CANCEL_POLL: u64 = 1024;

/// One row of sweep output.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentRecord {
    pub task: String,
    pub agent: Variant,
    pub gamma: f64,
    pub tile_width: usize,
    pub k: f64,
    pub c: f64,
    pub beta_log: Rate,
    pub beta_reg: Rate,
    pub transform: RewardTransform,
    pub seed: u64,
    pub early_perf: f64,
    pub final_perf: f64,
    pub kappa_mode: Option<KappaMode>,
    pub kappa: Option<f64>,
    pub rms_final: Option<f64>,
    /// Seconds spent in the run; not part of the CSV.
    pub wall_time: f64,
}

impl ExperimentRecord {
    /// `beta_log * beta_reg` when both are constant.
    pub fn alpha(&self) -> Option<f64> {
        (self.beta_log.is_constant() && self.beta_reg.is_constant()).then(|| self.beta_log.scale * self.beta_reg.scale)
    }
}

/// Runs one chain experiment to completion.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentRecord> {
    run_experiment_cancellable(cfg, &AtomicBool::new(false))
}

/// [`run_experiment`] that gives up with [`Error::Cancelled`] soon after
/// `cancel` is set.
pub fn run_experiment_cancellable(cfg: &ExperimentConfig, cancel: &AtomicBool) -> Result<ExperimentRecord> {
    cfg.validate()?;
    let started = Instant::now();
    let spec = &cfg.agent;
    let mdp = cfg.transform.apply(&cfg.chain.build()?, spec.gamma)?;
    let mut agent = Agent::new(spec, &mdp)?;
    let mut rng = stream(cfg.seed, &cfg.stream_label());

    let mut early = 0.0;
    let mut late = 0.0;
    for sweep in 1..=cfg.num_sweeps {
        if sweep % CANCEL_POLL == 0 && cancel.load(Ordering::Relaxed) {
            return Err(Error::Cancelled);
        }
        agent.sweep(&mdp, &mut rng)?;
        let in_early = cfg.early_window.contains(sweep);
        let in_final = cfg.final_window.contains(sweep);
        if in_early || in_final {
            let score = chain_optimality(&agent, &mdp)?.score;
            if in_early {
                early += score;
            }
            if in_final {
                late += score;
            }
        }
    }

    let kappa = match cfg.kappa_mode {
        Some(mode) => {
            let m = spec.mapping;
            let bias = LogMapping::with_init(m.c, m.k, spec.gamma, m.q_init_plus)?;
            match agent_kappa(&agent, &mdp, mode, Some(&bias)) {
                Ok(k) => Some(k),
                Err(Error::NoActionGaps) => None,
                Err(e) => return Err(e),
            }
        }
        None => None,
    };
    let rms_final = if cfg.rms {
        let oracle = value_iteration(&mdp, spec.gamma, ORACLE_TOL)?;
        Some(rms_error(&agent.q_table(&mdp)?, &oracle)?)
    } else {
        None
    };

    Ok(ExperimentRecord {
        task: cfg.task.clone(),
        agent: spec.variant,
        gamma: spec.gamma,
        tile_width: spec.tile_width,
        k: spec.mapping.k,
        c: spec.mapping.c,
        beta_log: spec.schedule.beta_log,
        beta_reg: spec.schedule.beta_reg,
        transform: cfg.transform,
        seed: cfg.seed,
        early_perf: early / cfg.early_window.len() as f64,
        final_perf: late / cfg.final_window.len() as f64,
        kappa_mode: cfg.kappa_mode,
        kappa,
        rms_final,
        wall_time: started.elapsed().as_secs_f64(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn short(gamma: f64, width: usize) -> ExperimentConfig {
        ExperimentConfig::chain("chain_full", Variant::Regular, gamma, width)
            .unwrap()
            .with_num_sweeps(300)
    }

    #[test]
    fn runs_are_deterministic() {
        let cfg = short(0.9, 2).with_seed(7);
        let mut a = run_experiment(&cfg).unwrap();
        let mut b = run_experiment(&cfg).unwrap();
        a.wall_time = 0.0;
        b.wall_time = 0.0;
        assert_eq!(a, b);
    }

    #[test]
    fn perf_is_a_fraction() {
        let r = run_experiment(&short(0.5, 3)).unwrap();
        assert!((0.0..=1.0).contains(&r.early_perf));
        assert!((0.0..=1.0).contains(&r.final_perf));
    }

    #[test]
    fn cancelled_runs_stop() {
        let cfg = short(0.9, 1).with_num_sweeps(5000);
        assert!(matches!(run_experiment_cancellable(&cfg, &AtomicBool::new(true)), Err(Error::Cancelled)));
    }

    #[test]
    fn kappa_and_rms_are_recorded() {
        let mut cfg = short(0.9, 1);
        cfg.kappa_mode = Some(KappaMode::Regular);
        cfg.rms = true;
        let r = run_experiment(&cfg).unwrap();
        assert!(r.kappa.is_some());
        assert!(r.rms_final.unwrap() > 0.0);
    }
}
