mod common;

use common::{non_negative, small_mdp};
use loggap::agents::{Agent, AgentSpec, Head, MappingParams, StepSchedule, Variant};
use loggap::envs::{make_chain, ChainParams, TabularMdp};
use loggap::mapping::LogMapping;
use loggap::metrics::{action_gap_deviation, log_bias_table, log10_std, nonzero_gaps, rms_error, GapTables, KappaMode};
use loggap::oracle::{value_iteration, QTable};
use loggap::rng;
use proptest::prelude::*;

fn spec(variant: Variant, width: usize, gamma: f64, schedule: StepSchedule) -> AgentSpec {
    AgentSpec { variant, tile_width: width, gamma, mapping: MappingParams::default(), schedule }
}

/// Tabular Q-learning with in-place sweeps, fed the same random stream.
fn tabular_replica(mdp: &TabularMdp, gamma: f64, alpha: f64, sweeps: usize, seed: u64) -> Vec<f64> {
    let na = mdp.num_actions();
    let mut q = vec![0.0; mdp.num_states() * na];
    let mut rng = rng::stream(seed, "replica");
    for _ in 0..sweeps {
        for s in mdp.non_terminal_states() {
            for a in 0..na {
                let tr = mdp.step(s, a, &mut rng);
                let boot = if tr.next_terminal {
                    0.0
                } else {
                    (0..na).map(|b| q[tr.next_state * na + b]).fold(f64::NEG_INFINITY, f64::max)
                };
                let target = tr.reward + gamma * boot;
                q[s * na + a] += alpha * (target - q[s * na + a]);
            }
        }
    }
    q
}

fn run(agent: &mut Agent, mdp: &TabularMdp, sweeps: usize, seed: u64) -> Result<(), String> {
    let mut rng = rng::stream(seed, "replica");
    for _ in 0..sweeps {
        agent.sweep(mdp, &mut rng).map_err(|e| e.to_string())?;
    }
    Ok(())
}

/// Sweeps both agents on the same stream until either fails, checking the
/// plus-head weights agree after every sweep. Shared tiles can push f^-1
/// past its range; the agents may then fail at different calls.
fn lockstep(a: &mut Agent, b: &mut Agent, mdp: &TabularMdp, sweeps: usize, seed: u64) -> Result<(), TestCaseError> {
    let mut ra = rng::stream(seed, "replica");
    let mut rb = rng::stream(seed, "replica");
    for _ in 0..sweeps {
        if a.sweep(mdp, &mut ra).is_err() || b.sweep(mdp, &mut rb).is_err() {
            return Ok(());
        }
        prop_assert_eq!(a.weights(Head::Plus), b.weights(Head::Plus));
    }
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn width_one_regular_is_tabular_q_learning(
        mdp in small_mdp(7, true),
        gamma in 0.0f64..0.99,
        alpha in 0.001f64..1.0,
        seed in any::<u64>(),
    ) {
        let sweeps = 60;
        let mut agent = Agent::new(&spec(Variant::Regular, 1, gamma, StepSchedule::alpha(alpha).unwrap()), &mdp).unwrap();
        run(&mut agent, &mdp, sweeps, seed).unwrap();
        let want = tabular_replica(&mdp, gamma, alpha, sweeps, seed);
        let na = mdp.num_actions();
        for s in mdp.non_terminal_states() {
            for a in 0..na {
                prop_assert_eq!(agent.q_value(s, a).unwrap().to_bits(), want[s * na + a].to_bits());
            }
        }
    }

    #[test]
    fn two_step_with_unit_beta_reg_is_log_basic(
        mdp in small_mdp(7, true),
        gamma in 0.1f64..0.95,
        beta_log in 0.01f64..1.0,
        width in 1usize..4,
        seed in any::<u64>(),
    ) {
        let mdp = non_negative(&mdp);
        let width = width.min(mdp.num_states() - 1);
        let schedule = StepSchedule::constant(beta_log, 1.0).unwrap();
        let mut basic = Agent::new(&spec(Variant::LogBasic, width, gamma, schedule), &mdp).unwrap();
        let mut two = Agent::new(&spec(Variant::LogTwoStep, width, gamma, schedule), &mdp).unwrap();
        lockstep(&mut basic, &mut two, &mdp, 40, seed)?;
    }

    #[test]
    fn full_on_non_negative_rewards_is_two_step(
        mdp in small_mdp(7, true),
        gamma in 0.1f64..0.95,
        beta_log in 0.01f64..1.0,
        beta_reg in 0.01f64..1.0,
        width in 1usize..4,
        seed in any::<u64>(),
    ) {
        let mdp = non_negative(&mdp);
        let width = width.min(mdp.num_states() - 1);
        let schedule = StepSchedule::constant(beta_log, beta_reg).unwrap();
        let mut full = Agent::new(&spec(Variant::LogFull, width, gamma, schedule), &mdp).unwrap();
        let mut two = Agent::new(&spec(Variant::LogTwoStep, width, gamma, schedule), &mdp).unwrap();
        lockstep(&mut full, &mut two, &mdp, 40, seed)?;
        prop_assert!(full.weights(Head::Minus).iter().all(|&w| w == 0.0));
    }

    #[test]
    fn kappa_ignores_reward_scale(mdp in small_mdp(8, true), gamma in 0.1f64..0.95, lambda in 0.01f64..100.0) {
        let q = value_iteration(&mdp, gamma, 1e-12).unwrap();
        let scaled = q.map(|v| v * lambda);
        let k = action_gap_deviation(&GapTables { regular: Some(&q), ..Default::default() }, KappaMode::Regular);
        let ks = action_gap_deviation(&GapTables { regular: Some(&scaled), ..Default::default() }, KappaMode::Regular);
        match (k, ks) {
            (Ok(a), Ok(b)) => prop_assert!((a - b).abs() < 1e-9, "{a} vs {b}"),
            (Err(_), Err(_)) => {}
            (a, b) => prop_assert!(false, "{a:?} vs {b:?}"),
        }
    }

    #[test]
    fn kappa_depends_only_on_the_gaps(gaps in proptest::collection::vec(1e-6f64..1e3, 1..20), base in -100.0f64..100.0) {
        // two actions per state with the given gaps, shifted by state-dependent bases
        let n = gaps.len() + 1;
        let mut outcomes = Vec::new();
        for _ in 0..n {
            for _ in 0..2 {
                outcomes.push(vec![loggap::envs::Outcome { next: n - 1, prob: 1.0, reward: 0.0 }]);
            }
        }
        let mut terminal = vec![false; n];
        terminal[n - 1] = true;
        let mut start = vec![0.0; n];
        start[0] = 1.0;
        let mdp = TabularMdp::new(n, 2, outcomes, start, terminal).unwrap();
        let mut a = vec![0.0; n * 2];
        let mut b = vec![0.0; n * 2];
        for (s, g) in gaps.iter().enumerate() {
            a[2 * s] = *g;
            b[2 * s] = base + s as f64;
            b[2 * s + 1] = base + s as f64 + g;
        }
        let qa = QTable::from_values(&mdp, 0.9, a).unwrap();
        let qb = QTable::from_values(&mdp, 0.9, b).unwrap();
        let ka = action_gap_deviation(&GapTables { regular: Some(&qa), ..Default::default() }, KappaMode::Regular).unwrap();
        let kb = action_gap_deviation(&GapTables { regular: Some(&qb), ..Default::default() }, KappaMode::Regular).unwrap();
        let direct = log10_std(&nonzero_gaps(&qa)).unwrap();
        prop_assert!((ka - direct).abs() <= 1e-12);
        prop_assert!((ka - kb).abs() <= 1e-9 * ka.max(1.0), "{ka} vs {kb}");
    }

    #[test]
    fn rms_is_zero_exactly_when_tables_agree(mdp in small_mdp(8, true), gamma in 0.1f64..0.95, noise in -1.0f64..1.0) {
        let q = value_iteration(&mdp, gamma, 1e-10).unwrap();
        prop_assert_eq!(rms_error(&q, &q).unwrap(), 0.0);
        // terminal entries do not count
        let mut terminal_only = q.clone();
        let t = mdp.num_states() - 1;
        for a in 0..mdp.num_actions() {
            terminal_only.set(t, a, 123.0);
        }
        prop_assert_eq!(rms_error(&terminal_only, &q).unwrap(), 0.0);
        let mut off = q.clone();
        off.set(0, 0, q.get(0, 0) + noise);
        let rms = rms_error(&off, &q).unwrap();
        prop_assert!(rms >= 0.0);
        prop_assert_eq!(rms == 0.0, noise == 0.0);
    }

    #[test]
    fn log_bias_tracks_regular_kappa_at_small_gamma(gamma in 0.05f64..=0.5) {
        let chain = ChainParams::deterministic().build().unwrap();
        let q = value_iteration(&chain, gamma, 1e-14).unwrap();
        let m = LogMapping::with_init(1.0, 200.0, gamma, 0.0).unwrap();
        let tables = GapTables { regular: Some(&q), mapping: Some(&m), ..Default::default() };
        let regular = action_gap_deviation(&tables, KappaMode::Regular).unwrap();
        let bias = action_gap_deviation(&tables, KappaMode::LogBias).unwrap();
        prop_assert!((bias - regular).abs() <= 0.1 * regular, "regular {regular} bias {bias}");
        prop_assert!(log_bias_table(&q, &m).is_ok());
    }
}

#[test]
fn two_step_fixed_point_has_no_bias_on_deterministic_chains() {
    for (n, gamma) in [(5, 0.5), (10, 0.9), (8, 0.7)] {
        let chain = make_chain(n, 0.0, 1.0, 0.0).unwrap();
        let oracle = value_iteration(&chain, gamma, 1e-13).unwrap();
        let schedule = StepSchedule::constant(0.5, 0.5).unwrap();
        let mut agent = Agent::new(&spec(Variant::LogTwoStep, 1, gamma, schedule), &chain).unwrap();
        run(&mut agent, &chain, 3000, 1).unwrap();
        let err = rms_error(&agent.q_table(&chain).unwrap(), &oracle).unwrap();
        assert!(err <= 1e-6, "n={n} gamma={gamma}: rms {err}");
    }
}
