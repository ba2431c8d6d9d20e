//! A small gamma x width x seed grid on a worker pool, written as CSV.

use loggap::harness::{aggregate, run_sweep_grid, write_csv, SweepGrid};

fn main() -> loggap::Result<()> {
    let grid = SweepGrid::parse(
        "task = chain_full\nagent = regular\nalpha = 0.01\ngamma = 0.5, 0.99\ntile_width = 1, 3\nnum_seeds = 2\nnum_sweeps = 3000\n",
    )?;
    let threads = std::thread::available_parallelism().map_or(1, |n| n.get());
    let outcome = run_sweep_grid(&grid, threads, None)?;
    write_csv(&outcome.records, std::io::stdout().lock())?;

    for a in aggregate(&outcome.records) {
        eprintln!("gamma {} width {}: final {:.3} over {} seeds", a.gamma, a.tile_width, a.final_perf, a.runs);
    }
    Ok(())
}
