use loggap::agents::Variant;
use loggap::harness::{
    emit_csv, read_csv, run_experiment, run_sweep_grid, write_csv, ExperimentConfig, SweepGrid,
};
use std::path::PathBuf;

fn short(variant: Variant, gamma: f64, width: usize) -> ExperimentConfig {
    ExperimentConfig::chain("chain_full", variant, gamma, width).unwrap().with_num_sweeps(300)
}

fn tmp(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join(name)
}

#[test]
fn same_config_same_record() {
    for variant in [Variant::Regular, Variant::LogFull] {
        let cfg = short(variant, 0.8, 2).with_seed(9);
        let mut a = run_experiment(&cfg).unwrap();
        let mut b = run_experiment(&cfg).unwrap();
        a.wall_time = 0.0;
        b.wall_time = 0.0;
        assert_eq!(a, b);
    }
}

#[test]
fn different_seeds_draw_different_streams() {
    let grid = SweepGrid::parse("gamma = 0.9\ntile_width = 1\nseeds = 0, 1, 2, 3\nnum_sweeps = 20\nearly_window = 0, 10\nfinal_window = 10, 20\nalpha = 0.5\n").unwrap();
    let cells = grid.cells();
    let labels: Vec<String> = cells.iter().map(|c| c.stream_label()).collect();
    assert!(labels.windows(2).all(|w| w[0] == w[1]), "the label names the config, the seed is separate");
    let mut rngs: Vec<u64> = cells
        .iter()
        .map(|c| rand::Rng::random(&mut loggap::rng::stream(c.seed, &c.stream_label())))
        .collect();
    rngs.dedup();
    assert_eq!(rngs.len(), 4);
}

#[test]
fn csv_file_round_trip() {
    let grid = SweepGrid::parse("gamma = 0.5, 0.9\ntile_width = 1, 3\nnum_seeds = 2\nnum_sweeps = 100\n").unwrap();
    let out = run_sweep_grid(&grid, 2, None).unwrap();
    assert!(out.failures.is_empty());
    let path = tmp("round_trip.csv");
    emit_csv(&out.records, &path).unwrap();
    let bytes = std::fs::read(&path).unwrap();
    let back = read_csv(bytes.as_slice()).unwrap();
    assert_eq!(back.len(), 8);
    let mut again = Vec::new();
    write_csv(&back, &mut again).unwrap();
    assert_eq!(bytes, again);
}

#[test]
fn config_errors_name_the_first_bad_key() {
    let base = "task = chain_full\nagent = regular\ngamma = 0.9\ntile_width = 1\nnum_sweeps = 10\n";
    let cases = [
        (format!("{base}bogus = 1\nworse = 2\n"), "bogus"),
        (base.replace("gamma = 0.9", "gamma = 1.5"), "gamma"),
        (base.replace("tile_width = 1", "tile_width = 0"), "tile_width"),
        (base.replace("agent = regular", "agent = sarsa"), "agent"),
        (base.replace("gamma = 0.9\n", ""), "gamma"),
    ];
    for (text, key) in cases {
        let err = ExperimentConfig::parse(&text).unwrap_err();
        assert!(err.is_config_error() || err.to_string().contains(key), "{err}");
        assert!(err.to_string().contains(&format!("`{key}`")), "{key}: {err}");
    }
}

#[test]
fn config_file_is_read_from_disk() {
    let path = tmp("single.cfg");
    std::fs::write(&path, "task = chain_full\nagent = regular\ngamma = 0.7\ntile_width = 2\nnum_sweeps = 50\nseed = 4\n").unwrap();
    let cfg = ExperimentConfig::from_file(&path).unwrap();
    assert_eq!(cfg.seed, 4);
    assert_eq!(cfg.agent.tile_width, 2);
    assert!(ExperimentConfig::from_file(tmp("missing.cfg")).is_err());
}
