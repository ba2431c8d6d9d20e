use loggap::features::{build_tilecoder, linear_q, TileCoder};
use proptest::prelude::*;

fn activation_matrix(coder: &TileCoder) -> Vec<Vec<f64>> {
    (0..coder.num_states())
        .map(|pos| {
            let mut row = vec![0.0; coder.num_features()];
            for &f in coder.encode(pos).unwrap() {
                row[f] += 1.0;
            }
            row
        })
        .collect()
}

/// Gaussian elimination with partial pivoting on `[A | y]`. Returns the rank
/// of `A` and a solution of `A x = y` with free variables at zero, if the
/// system is consistent.
fn solve(a: &[Vec<f64>], y: &[f64]) -> (usize, Option<Vec<f64>>) {
    let rows = a.len();
    let cols = a[0].len();
    let mut m: Vec<Vec<f64>> = a.iter().zip(y).map(|(r, &v)| r.iter().copied().chain([v]).collect()).collect();
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..cols {
        if r == rows {
            break;
        }
        let p = (r..rows).max_by(|&i, &j| m[i][c].abs().total_cmp(&m[j][c].abs())).unwrap();
        if m[p][c].abs() < 1e-12 {
            continue;
        }
        m.swap(r, p);
        for i in 0..rows {
            if i != r {
                let factor = m[i][c] / m[r][c];
                if factor != 0.0 {
                    for j in c..=cols {
                        m[i][j] -= factor * m[r][j];
                    }
                }
            }
        }
        pivots.push((r, c));
        r += 1;
    }
    let rank = pivots.len();
    if (rank..rows).any(|i| m[i][cols].abs() > 1e-9) {
        return (rank, None);
    }
    let mut x = vec![0.0; cols];
    for &(r, c) in &pivots {
        x[c] = m[r][cols] / m[r][c];
    }
    (rank, Some(x))
}

#[test]
fn every_width_has_full_row_rank() {
    for width in [1, 2, 3, 5] {
        for n in [width, width + 1, 10, 17, 50] {
            let coder = build_tilecoder(width, n).unwrap();
            let (rank, _) = solve(&activation_matrix(&coder), &vec![0.0; n]);
            assert_eq!(rank, n, "width {width}, {n} states");
        }
    }
}

proptest! {
    #[test]
    fn any_value_table_is_representable(
        width in prop_oneof![Just(1usize), Just(2), Just(3), Just(5)],
        extra in 0usize..30,
        seed in proptest::collection::vec(-10.0f64..10.0, 35),
    ) {
        let n = width + extra;
        let coder = build_tilecoder(width, n).unwrap();
        let target = &seed[..n];
        let (_, x) = solve(&activation_matrix(&coder), target);
        let x = x.expect("consistent system");
        // one action: the weight layout is [action][feature]
        for (pos, &t) in target.iter().enumerate() {
            prop_assert!((linear_q(&x, &coder, pos, 0) - t).abs() < 1e-9);
        }
    }

    #[test]
    fn encode_is_pure(width in 1usize..6, extra in 0usize..20) {
        let n = width + extra;
        let a = build_tilecoder(width, n).unwrap();
        let b = a.clone();
        for pos in 0..n {
            let first = a.encode(pos).unwrap().to_vec();
            prop_assert_eq!(a.encode(pos).unwrap(), &first[..]);
            prop_assert_eq!(b.encode(pos).unwrap(), &first[..]);
            prop_assert_eq!(first.len(), width);
        }
    }
}
