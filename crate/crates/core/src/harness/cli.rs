//! The `loggap` command line.
//!
//! Exit status: 0 on success, 1 for usage and config errors (and a failing
//! `validate-schedule`), 2 for runtime failures, including grids with failed
//! or interrupted cells.

use super::csv::rate_field;
use super::{
    aggregate, format_g9, kappa_scan, metric_gap_scan, rms_curve, run_experiment_cancellable, run_sweep_grid,
    write_csv, ExperimentConfig, KappaStudy, MetricGapStudy, RmsPoint, RmsStudy, SweepGrid,
};
use crate::agents::{Rate, StepSchedule};
use crate::error::{Error, Result};
use clap::error::ErrorKind;
use clap::{Parser, Subcommand};
use rayon::prelude::*;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Once;

/// Environment variable holding the default worker count.
pub const THREADS_ENV: &str = "LOGGAP_THREADS";

static CANCEL: AtomicBool = AtomicBool::new(false);
static HANDLER: Once = Once::new();

#[derive(Parser, Debug)]
#[command(name = "loggap", version, about = "Discount-factor experiments with regular and logarithmic Q-learning")]
#[command(arg_required_else_help = true)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Write CSV output here instead of stdout.
    #[arg(long, global = true, value_name = "PATH")]
    out: Option<PathBuf>,

    /// Override the seed (replaces the seed list of grid and rms configs).
    #[arg(long, global = true, value_name = "N")]
    seed: Option<u64>,

    /// Worker threads for grid and rms [default: $LOGGAP_THREADS or all cores].
    #[arg(long, global = true, value_name = "N")]
    parallel: Option<usize>,

    /// Suppress the summary on stderr.
    #[arg(long, global = true)]
    quiet: bool,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run one chain experiment and emit its record.
    Run { config: PathBuf },
    /// Run a gamma x tile-width x seed grid and emit one record per cell.
    Grid { config: PathBuf },
    /// Action-gap deviation of oracle tables over discount factors.
    Kappa { config: PathBuf },
    /// Metric gap of the discounted-optimal policy over discount factors.
    MetricGap { config: PathBuf },
    /// RMS error against the oracle over the course of learning.
    Rms { config: PathBuf },
    /// Check a step-size schedule against the convergence conditions.
    ValidateSchedule {
        /// beta_log rate: `0.01`, `(1+t)^-0.4` or `0.5*(1+t)^-0.4`.
        #[arg(long, conflicts_with = "beta_log_exp", allow_hyphen_values = true)]
        beta_log: Option<Rate>,
        /// beta_reg rate, same forms as --beta-log.
        #[arg(long, conflicts_with = "beta_reg_exp", allow_hyphen_values = true)]
        beta_reg: Option<Rate>,
        /// Shorthand for --beta-log '(1+t)^-E'.
        #[arg(long, value_name = "E", allow_hyphen_values = true)]
        beta_log_exp: Option<f64>,
        /// Shorthand for --beta-reg '(1+t)^-E'.
        #[arg(long, value_name = "E", allow_hyphen_values = true)]
        beta_reg_exp: Option<f64>,
    },
}

/// Parses `argv` (program name first), runs the command and returns the
/// exit status.
pub fn run(argv: Vec<String>) -> i32 {
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
        }
    };
    HANDLER.call_once(|| {
        // a second handler cannot be installed; runs then just aren't interruptible
        let _ = ctrlc::set_handler(|| CANCEL.store(true, Ordering::Relaxed));
    });
    match dispatch(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_config_error() {
                1
            } else {
                2
            }
        }
    }
}

fn dispatch(cli: &Cli) -> Result<i32> {
    match &cli.command {
        Command::Run { config } => cmd_run(cli, config),
        Command::Grid { config } => cmd_grid(cli, config),
        Command::Kappa { config } => cmd_kappa(cli, config),
        Command::MetricGap { config } => cmd_metric_gap(cli, config),
        Command::Rms { config } => cmd_rms(cli, config),
        Command::ValidateSchedule { beta_log, beta_reg, beta_log_exp, beta_reg_exp } => {
            let log = pick_rate("beta_log", *beta_log, *beta_log_exp)?;
            let reg = pick_rate("beta_reg", *beta_reg, *beta_reg_exp)?;
            let report = StepSchedule::new(log, reg)?.validate();
            let mut out = output(cli.out.as_deref())?;
            writeln!(out, "beta_log = {log}\nbeta_reg = {reg}\n{report}")?;
            out.flush()?;
            Ok(if report.all_hold() { 0 } else { 1 })
        }
    }
}

fn pick_rate(name: &'static str, rate: Option<Rate>, exp: Option<f64>) -> Result<Rate> {
    match (rate, exp) {
        (Some(r), _) => Ok(r),
        (None, Some(e)) => Ok(Rate::polynomial(e)),
        (None, None) => Err(Error::config(name, format!("give --{0} or --{0}-exp", name.replace('_', "-")))),
    }
}

fn parallelism(cli: &Cli) -> Result<usize> {
    let n = match cli.parallel {
        Some(n) => n,
        None => match std::env::var(THREADS_ENV) {
            Ok(v) => v
                .trim()
                .parse()
                .map_err(|_| Error::config(THREADS_ENV, format!("`{v}` is not a thread count")))?,
            Err(_) => std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1),
        },
    };
    if n == 0 {
        return Err(Error::config("parallel", "must be at least 1"));
    }
    Ok(n)
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(std::io::BufWriter::new(std::fs::File::create(p)?)),
        None => Box::new(std::io::stdout().lock()),
    })
}

fn csv_writer(path: Option<&Path>) -> Result<csv::Writer<Box<dyn Write>>> {
    Ok(csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(output(path)?))
}

fn cmd_run(cli: &Cli, config: &Path) -> Result<i32> {
    let mut cfg = ExperimentConfig::from_file(config)?;
    if let Some(seed) = cli.seed {
        cfg = cfg.with_seed(seed);
    }
    let rec = run_experiment_cancellable(&cfg, &CANCEL)?;
    write_csv(&[rec.clone()], output(cli.out.as_deref())?)?;
    if !cli.quiet {
        eprintln!(
            "{} {} gamma={} width={} seed={}: early={} final={} ({:.1}s)",
            rec.task,
            rec.agent,
            format_g9(rec.gamma),
            rec.tile_width,
            rec.seed,
            format_g9(rec.early_perf),
            format_g9(rec.final_perf),
            rec.wall_time
        );
    }
    Ok(0)
}

fn cmd_grid(cli: &Cli, config: &Path) -> Result<i32> {
    let mut grid = SweepGrid::from_file(config)?;
    if let Some(seed) = cli.seed {
        grid.seeds = vec![seed];
    }
    let outcome = run_sweep_grid(&grid, parallelism(cli)?, Some(&CANCEL))?;
    write_csv(&outcome.records, output(cli.out.as_deref())?)?;
    if !cli.quiet {
        eprintln!("gamma,tile_width,runs,early_perf,final_perf");
        for a in aggregate(&outcome.records) {
            eprintln!(
                "{},{},{},{},{}",
                format_g9(a.gamma),
                a.tile_width,
                a.runs,
                format_g9(a.early_perf),
                format_g9(a.final_perf)
            );
        }
    }
    for f in &outcome.failures {
        eprintln!("cell gamma={} width={} seed={} failed: {}", format_g9(f.gamma), f.tile_width, f.seed, f.error);
    }
    if outcome.cancelled > 0 {
        eprintln!("interrupted: {} of {} cells not run", outcome.cancelled, grid.len());
    }
    Ok(if outcome.failures.is_empty() && outcome.cancelled == 0 { 0 } else { 2 })
}

fn cmd_kappa(cli: &Cli, config: &Path) -> Result<i32> {
    let study = KappaStudy::from_file(config)?;
    let rows = kappa_scan(&study)?;
    let mut w = csv_writer(cli.out.as_deref())?;
    w.write_record(["task", "gamma", "kappa_mode", "c", "k", "kappa"])?;
    for r in &rows {
        w.write_record([
            study.task.name().to_string(),
            format_g9(r.gamma),
            r.mode.to_string(),
            format_g9(study.c),
            format_g9(study.k),
            r.kappa.map(format_g9).unwrap_or_default(),
        ])?;
    }
    w.flush()?;
    if !cli.quiet {
        eprintln!("{} rows for {} discount factors", rows.len(), study.gammas.len());
    }
    Ok(0)
}

fn cmd_metric_gap(cli: &Cli, config: &Path) -> Result<i32> {
    let study = MetricGapStudy::from_file(config)?;
    let rows = metric_gap_scan(&study)?;
    let mut w = csv_writer(cli.out.as_deref())?;
    w.write_record(["task", "gamma", "horizon", "optimal", "learned", "metric_gap"])?;
    for r in &rows {
        w.write_record([
            study.task.name().to_string(),
            format_g9(r.gamma),
            study.horizon.to_string(),
            format_g9(r.gap.optimal),
            format_g9(r.gap.learned),
            format_g9(r.gap.gap),
        ])?;
    }
    w.flush()?;
    if !cli.quiet {
        let zero = rows.iter().filter(|r| r.gap.gap == 0.0).count();
        eprintln!("metric gap is zero at {zero} of {} discount factors", rows.len());
    }
    Ok(0)
}

fn cmd_rms(cli: &Cli, config: &Path) -> Result<i32> {
    let mut study = RmsStudy::from_file(config)?;
    if let Some(seed) = cli.seed {
        study.seeds = vec![seed];
    }
    let cells = study.cells();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(parallelism(cli)?)
        .build()
        .map_err(|e| Error::param("parallel", e.to_string()))?;
    let curves: Vec<Result<Vec<RmsPoint>>> =
        pool.install(|| cells.par_iter().map(|cfg| rms_curve(cfg, study.every, Some(&CANCEL))).collect());

    let mut w = csv_writer(cli.out.as_deref())?;
    w.write_record(["task", "agent", "gamma", "tile_width", "beta_log", "beta_reg", "seed", "sweep", "rms"])?;
    let mut failed = 0;
    for (cfg, curve) in cells.iter().zip(&curves) {
        let spec = &cfg.agent;
        let points = match curve {
            Ok(p) => p,
            Err(e) => {
                failed += 1;
                eprintln!("cell {} seed={} failed: {e}", spec.schedule.beta_log, cfg.seed);
                continue;
            }
        };
        for p in points {
            w.write_record([
                cfg.task.clone(),
                spec.variant.to_string(),
                format_g9(spec.gamma),
                spec.tile_width.to_string(),
                rate_field(&spec.schedule.beta_log),
                rate_field(&spec.schedule.beta_reg),
                cfg.seed.to_string(),
                p.sweep.to_string(),
                format_g9(p.rms),
            ])?;
        }
        if !cli.quiet {
            let min = points.iter().map(|p| p.rms).fold(f64::INFINITY, f64::min);
            let last = points.last().map_or(f64::NAN, |p| p.rms);
            eprintln!(
                "beta_log={} beta_reg={} seed={}: min={} final={}",
                spec.schedule.beta_log,
                spec.schedule.beta_reg,
                cfg.seed,
                format_g9(min),
                format_g9(last)
            );
        }
    }
    w.flush()?;
    Ok(if failed == 0 { 0 } else { 2 })
}
