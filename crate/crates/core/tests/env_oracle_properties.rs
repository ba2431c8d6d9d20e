mod common;

use common::{non_negative, small_mdp};
use loggap::envs::{make_chain, TabularMdp, LEFT};
use loggap::oracle::{backward_induction, evaluate_stationary_finite, metric_gap, value_iteration};
use loggap::rng;
use proptest::prelude::*;
use proptest::strategy::ValueTree;

const TOL: f64 = 1e-10;

/// One Bellman optimality backup, written out independently of the oracle.
fn bellman(mdp: &TabularMdp, gamma: f64, q: &[f64]) -> Vec<f64> {
    let na = mdp.num_actions();
    let v = |s: usize| (0..na).map(|a| q[s * na + a]).fold(f64::NEG_INFINITY, f64::max);
    let mut out = vec![0.0; q.len()];
    for s in 0..mdp.num_states() {
        if mdp.is_terminal(s) {
            continue;
        }
        for a in 0..na {
            out[s * na + a] = mdp
                .outcomes(s, a)
                .iter()
                .map(|o| o.prob * (o.reward + if mdp.is_terminal(o.next) { 0.0 } else { gamma * v(o.next) }))
                .sum();
        }
    }
    out
}

/// Best undiscounted `h`-step return from the start state over every action
/// sequence, for deterministic MDPs.
fn brute_force(mdp: &TabularMdp, s: usize, h: usize) -> f64 {
    if h == 0 || mdp.is_terminal(s) {
        return 0.0;
    }
    (0..mdp.num_actions())
        .map(|a| {
            let o = mdp.outcomes(s, a)[0];
            o.reward + brute_force(mdp, o.next, h - 1)
        })
        .fold(f64::NEG_INFINITY, f64::max)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn transitions_are_row_stochastic(mdp in small_mdp(8, true)) {
        for s in 0..mdp.num_states() {
            for a in 0..mdp.num_actions() {
                let total: f64 = mdp.outcomes(s, a).iter().map(|o| o.prob).sum();
                prop_assert!((total - 1.0).abs() < 1e-12);
                prop_assert!(mdp.outcomes(s, a).iter().all(|o| o.prob >= 0.0));
            }
        }
    }

    #[test]
    fn value_iteration_is_a_fixed_point(mdp in small_mdp(8, true), gamma in 0.0f64..0.95) {
        let q = value_iteration(&mdp, gamma, TOL).unwrap();
        let backed = bellman(&mdp, gamma, q.values());
        for (x, y) in q.values().iter().zip(&backed) {
            prop_assert!((x - y).abs() <= TOL, "{x} vs {y}");
        }
    }

    #[test]
    fn scaling_rewards_scales_values(mdp in small_mdp(8, true), gamma in 0.0f64..0.95, lambda in 0.01f64..100.0) {
        let q = value_iteration(&mdp, gamma, TOL).unwrap();
        let scaled = value_iteration(&mdp.scale_rewards(lambda).unwrap(), gamma, TOL * lambda).unwrap();
        for (x, y) in q.values().iter().zip(scaled.values()) {
            prop_assert!((lambda * x - y).abs() <= 4.0 * TOL * lambda.max(1.0));
        }
        prop_assert_eq!(q.greedy_policy(), scaled.greedy_policy());
    }

    #[test]
    fn shift_moves_every_chain_value_by_the_offset(
        n in 2usize..=15,
        p in 0.0f64..0.5,
        gamma in 0.5f64..0.99,
        offset in -50.0f64..100.0,
    ) {
        let chain = make_chain(n, p, 1.0, -1.0).unwrap();
        let q = value_iteration(&chain, gamma, TOL).unwrap();
        let shifted = value_iteration(&chain.shift_values(offset, gamma).unwrap(), gamma, TOL).unwrap();
        for s in chain.non_terminal_states() {
            for a in 0..2 {
                prop_assert!((shifted.get(s, a) - q.get(s, a) - offset).abs() <= 1e-8 * offset.abs().max(1.0));
            }
        }
    }

    #[test]
    fn metric_gap_is_non_negative(mdp in small_mdp(7, true), gamma in 0.0f64..0.99, h in 1usize..12) {
        let g = metric_gap(&mdp, gamma, h, TOL).unwrap();
        prop_assert!(g.gap >= 0.0);
        prop_assert!(g.optimal >= g.learned - 1e-9);
    }

    #[test]
    fn backward_induction_matches_brute_force(mdp in small_mdp(6, false), h in 1usize..7) {
        let plan = backward_induction(&mdp, h).unwrap();
        let want = brute_force(&mdp, 0, h);
        prop_assert!((plan.performance(&mdp) - want).abs() < 1e-9);
        // the plan's own actions realise its value
        let mut s = 0;
        let mut total = 0.0;
        for t in 0..h {
            if mdp.is_terminal(s) {
                break;
            }
            let o = mdp.outcomes(s, plan.policy[t][s])[0];
            total += o.reward;
            s = o.next;
        }
        prop_assert!((total - want).abs() < 1e-9);
    }

    #[test]
    fn optimal_return_grows_with_horizon_for_non_negative_rewards(mdp in small_mdp(7, true), h in 1usize..15) {
        let mdp = non_negative(&mdp);
        let shorter = backward_induction(&mdp, h).unwrap().performance(&mdp);
        let longer = backward_induction(&mdp, h + 1).unwrap().performance(&mdp);
        prop_assert!(longer >= shorter - 1e-12);
    }

    #[test]
    fn stationary_evaluation_never_beats_the_plan(mdp in small_mdp(7, true), h in 1usize..10, seed in any::<u64>()) {
        let policy: Vec<usize> = (0..mdp.num_states()).map(|s| (seed as usize >> (s % 32)) % mdp.num_actions()).collect();
        let value = evaluate_stationary_finite(&mdp, &policy, h).unwrap();
        prop_assert!(value <= backward_induction(&mdp, h).unwrap().performance(&mdp) + 1e-9);
    }
}

#[test]
fn sampled_transitions_match_probabilities() {
    let n = 200_000;
    let mut runner = proptest::test_runner::TestRunner::deterministic();
    let strategy = small_mdp(5, true);
    for case in 0..5 {
        let mdp = strategy.new_tree(&mut runner).unwrap().current();
        let mut rng = rng::stream(case, "mc");
        for s in mdp.non_terminal_states() {
            for a in 0..mdp.num_actions() {
                let mut counts = vec![0usize; mdp.num_states()];
                for _ in 0..n {
                    counts[mdp.step(s, a, &mut rng).next_state] += 1;
                }
                for next in 0..mdp.num_states() {
                    let p = mdp.prob(s, a, next);
                    let freq = counts[next] as f64 / n as f64;
                    let sigma = (p * (1.0 - p) / n as f64).sqrt();
                    assert!((freq - p).abs() <= 3.0 * sigma + 1e-12, "s={s} a={a} next={next}: {freq} vs {p}");
                }
            }
        }
    }
}

#[test]
fn chain_moves_in_the_chosen_direction_three_quarters_of_the_time() {
    let chain = make_chain(50, 0.25, 1.0, -1.0).unwrap();
    let mut rng = rng::stream(11, "chain");
    let n = 100_000;
    let left = (0..n).filter(|_| chain.step(25, LEFT, &mut rng).next_state == 24).count();
    let freq = left as f64 / n as f64;
    assert!((freq - 0.75).abs() <= 0.01, "{freq}");
}
