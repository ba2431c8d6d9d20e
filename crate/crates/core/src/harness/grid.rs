use super::config::SweepGrid;
use super::{run_experiment_cancellable, ExperimentRecord};
use crate::error::{Error, Result};
use rayon::prelude::*;
use std::sync::atomic::{AtomicBool, Ordering};

/// A grid cell that failed; the rest of the grid still runs.
#[derive(Debug, Clone, PartialEq)]
pub struct CellFailure {
    pub gamma: f64,
    pub tile_width: usize,
    pub seed: u64,
    pub error: String,
}

#[derive(Debug, Clone, Default)]
pub struct GridOutcome {
    /// Completed cells in grid order.
    pub records: Vec<ExperimentRecord>,
    pub failures: Vec<CellFailure>,
    /// Cells skipped or interrupted because of cancellation.
    pub cancelled: usize,
}

/// Seed-averaged performance of one (gamma, tile width) pair.
#[derive(Debug, Clone, PartialEq)]
pub struct Aggregate {
    pub gamma: f64,
    pub tile_width: usize,
    pub runs: usize,
    pub early_perf: f64,
    pub final_perf: f64,
}

/// Runs every cell of the grid on a pool of `parallelism` threads. Results
/// do not depend on the thread count. Setting `cancel` stops outstanding
/// cells; completed ones are kept.
pub fn run_sweep_grid(grid: &SweepGrid, parallelism: usize, cancel: Option<&AtomicBool>) -> Result<GridOutcome> {
    if grid.is_empty() {
        return Err(Error::config("gamma", "grid has an empty axis"));
    }
    let never = AtomicBool::new(false);
    let cancel = cancel.unwrap_or(&never);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(parallelism.max(1))
        .build()
        .map_err(|e| Error::param("parallelism", e.to_string()))?;
    let cells = grid.cells();
    let results: Vec<Result<ExperimentRecord>> = pool.install(|| {
        cells
            .par_iter()
            .map(|cfg| {
                if cancel.load(Ordering::Relaxed) {
                    return Err(Error::Cancelled);
                }
                run_experiment_cancellable(cfg, cancel)
            })
            .collect()
    });

    let mut out = GridOutcome::default();
    for (cfg, res) in cells.iter().zip(results) {
        match res {
            Ok(r) => out.records.push(r),
            Err(Error::Cancelled) => out.cancelled += 1,
            Err(e) => out.failures.push(CellFailure {
                gamma: cfg.agent.gamma,
                tile_width: cfg.agent.tile_width,
                seed: cfg.seed,
                error: e.to_string(),
            }),
        }
    }
    Ok(out)
}

/// Means over seeds per (gamma, tile width), sorted by width then gamma.
pub fn aggregate(records: &[ExperimentRecord]) -> Vec<Aggregate> {
    let mut out: Vec<Aggregate> = Vec::new();
    for r in records {
        match out
            .iter_mut()
            .find(|a| a.gamma.to_bits() == r.gamma.to_bits() && a.tile_width == r.tile_width)
        {
            Some(a) => {
                a.runs += 1;
                a.early_perf += r.early_perf;
                a.final_perf += r.final_perf;
            }
            None => out.push(Aggregate {
                gamma: r.gamma,
                tile_width: r.tile_width,
                runs: 1,
                early_perf: r.early_perf,
                final_perf: r.final_perf,
            }),
        }
    }
    for a in &mut out {
        a.early_perf /= a.runs as f64;
        a.final_perf /= a.runs as f64;
    }
    out.sort_by(|a, b| a.tile_width.cmp(&b.tile_width).then(a.gamma.total_cmp(&b.gamma)));
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::{run_experiment, write_csv};

    fn small_grid() -> SweepGrid {
        SweepGrid::parse("gamma = 0.3, 0.9\ntile_width = 1, 2\nnum_seeds = 2\nnum_sweeps = 200\n").unwrap()
    }

    fn csv_of(records: &[ExperimentRecord]) -> Vec<u8> {
        let mut buf = Vec::new();
        write_csv(records, &mut buf).unwrap();
        buf
    }

    #[test]
    fn parallelism_does_not_change_results() {
        let grid = small_grid();
        let a = run_sweep_grid(&grid, 1, None).unwrap();
        let b = run_sweep_grid(&grid, 3, None).unwrap();
        assert_eq!(a.records.len(), 8);
        assert_eq!(csv_of(&a.records), csv_of(&b.records));
    }

    #[test]
    fn single_cell_matches_run_experiment() {
        let grid = SweepGrid::parse("gamma = 0.7\ntile_width = 2\nseeds = 4\nnum_sweeps = 150\n").unwrap();
        let out = run_sweep_grid(&grid, 1, None).unwrap();
        let direct = run_experiment(&grid.cells()[0]).unwrap();
        assert_eq!(csv_of(&out.records), csv_of(&[direct]));
    }

    #[test]
    fn cancelled_grid_keeps_nothing_partial() {
        let flag = AtomicBool::new(true);
        let out = run_sweep_grid(&small_grid(), 2, Some(&flag)).unwrap();
        assert_eq!(out.cancelled, 8);
        assert!(out.records.is_empty());
    }

    #[test]
    fn aggregation_averages_seeds() {
        let out = run_sweep_grid(&small_grid(), 2, None).unwrap();
        let agg = aggregate(&out.records);
        assert_eq!(agg.len(), 4);
        assert!(agg.iter().all(|a| a.runs == 2));
    }
}
