//! Property-based invariants for the deterministic building blocks:
//! transform round-trips, Lipschitz bounds, and canonicalization
//! idempotence. Complements the example-based unit tests.

use proptest::prelude::*;
use qmclab::fourier::walsh_hadamard;
use qmclab::graph::WeightedGraph;
use qmclab::rounding::{phi, project_round, psi, round_to_ball};
use qmclab::sdp::UnitVectorAssignment;
use qmclab::special::f_star;

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn dist(u: &[f64], v: &[f64]) -> f64 {
    u.iter().zip(v).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()
}

/// Two vectors of the same (arbitrary, small) dimension.
fn vec_pair() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    (1usize..=8).prop_flat_map(|d| {
        (
            prop::collection::vec(-3.0f64..3.0, d),
            prop::collection::vec(-3.0f64..3.0, d),
        )
    })
}

/// A random weighted graph (possibly with self-loops and duplicate edges,
/// which the constructor merges) on single-digit `v*` labels.
fn graph() -> impl Strategy<Value = WeightedGraph> {
    (2usize..=8).prop_flat_map(|n| {
        prop::collection::vec((0..n, 0..n, 0.05f64..10.0), 1..=12).prop_map(move |edges| {
            let labels = (0..n).map(|i| format!("v{i}")).collect();
            WeightedGraph::new(labels, edges).expect("valid random graph")
        })
    })
}

/// A random unit-vector assignment plus a projection rank `k <= r`.
fn assignment_and_k() -> impl Strategy<Value = (UnitVectorAssignment, usize)> {
    (1usize..=5, 1usize..=5)
        .prop_flat_map(|(n, r)| {
            (
                prop::collection::vec(prop::collection::vec(-3.0f64..3.0, r), n),
                1..=r,
            )
        })
        .prop_filter_map("rows must have usable norm", |(rows, k)| {
            let mut unit_rows = Vec::with_capacity(rows.len());
            for row in &rows {
                let nrm = norm(row);
                if nrm < 1e-3 {
                    return None;
                }
                unit_rows.push(row.iter().map(|x| x / nrm).collect::<Vec<f64>>());
            }
            let labels = (0..rows.len()).map(|i| format!("u{i}")).collect();
            Some((UnitVectorAssignment::new(labels, unit_rows).unwrap(), k))
        })
}

proptest! {
    /// The Walsh–Hadamard transform is an involution up to the factor 2^n.
    #[test]
    fn wht_applied_twice_scales_by_two_pow_n(
        table in (0usize..=8).prop_flat_map(|n| prop::collection::vec(-1.0f64..1.0, 1usize << n)),
    ) {
        let scale = table.len() as f64;
        let mut data = table.clone();
        walsh_hadamard(&mut data);
        walsh_hadamard(&mut data);
        for (after, before) in data.iter().zip(&table) {
            prop_assert!((after - scale * before).abs() <= 1e-9);
        }
    }

    /// R clamps into the unit ball, changes nothing already inside it,
    /// is idempotent, and is 1-Lipschitz.
    #[test]
    fn round_to_ball_is_a_short_retraction((u, v) in vec_pair()) {
        let ru = round_to_ball(&u);
        let rv = round_to_ball(&v);
        prop_assert!(norm(&ru) <= 1.0 + 1e-12);
        if norm(&v) <= 1.0 {
            prop_assert_eq!(&rv, &v);
        }
        let rrv = round_to_ball(&rv);
        for (a, b) in rrv.iter().zip(&rv) {
            prop_assert!((a - b).abs() <= 1e-15);
        }
        prop_assert!(dist(&ru, &rv) <= dist(&u, &v) * (1.0 + 1e-12) + 1e-12);
    }

    /// Φ(v) = v − R(v) vanishes inside the ball and is 2-Lipschitz.
    #[test]
    fn phi_vanishes_inside_and_is_2_lipschitz((u, v) in vec_pair()) {
        if norm(&v) <= 1.0 {
            prop_assert!(phi(&v).iter().all(|x| *x == 0.0));
        }
        prop_assert!(dist(&phi(&u), &phi(&v)) <= 2.0 * dist(&u, &v) * (1.0 + 1e-12) + 1e-12);
    }

    /// Ψ(v) = min(‖v‖², 1) stays in [0, 1] and is 2-Lipschitz.
    #[test]
    fn psi_is_clamped_and_2_lipschitz((u, v) in vec_pair()) {
        let pu = psi(&u);
        let pv = psi(&v);
        prop_assert!((0.0..=1.0).contains(&pv));
        prop_assert!((pu - pv).abs() <= 2.0 * dist(&u, &v) * (1.0 + 1e-12) + 1e-12);
    }

    /// Normalizing twice is bit-for-bit the same as normalizing once, and
    /// the result reports itself normalized.
    #[test]
    fn normalize_weights_is_idempotent(g in graph()) {
        let once = g.normalize_weights().unwrap();
        let twice = once.normalize_weights().unwrap();
        prop_assert!(once.is_normalized());
        prop_assert_eq!(&once, &twice);
    }

    /// The `qmclab-graph v1` text format round-trips graphs exactly
    /// (17-significant-digit weights reproduce every f64 bit pattern).
    #[test]
    fn graph_text_format_round_trips(g in graph()) {
        let parsed = WeightedGraph::from_text(&g.to_text()).unwrap();
        prop_assert_eq!(&parsed, &g);
    }

    /// Projection rounding always yields unit rows of the requested rank,
    /// covering the same labels, and is deterministic in the seed.
    #[test]
    fn project_round_emits_unit_rows(
        (f, k) in assignment_and_k(),
        seed in 0u64..1_000,
    ) {
        let rounded = project_round(&f, k, seed).unwrap();
        prop_assert_eq!(rounded.r, k);
        prop_assert_eq!(&rounded.labels, &f.labels);
        for row in &rounded.rows {
            prop_assert!((norm(row) - 1.0).abs() <= 1e-12);
        }
        let again = project_round(&f, k, seed).unwrap();
        prop_assert_eq!(&again.rows, &rounded.rows);
    }

    /// F*(k, ρ) is odd in ρ, fixes the endpoints, and never exceeds |ρ|.
    #[test]
    fn f_star_is_odd_and_dominated_by_rho(k in 1usize..=5, rho in -1.0f64..=1.0) {
        let plus = f_star(k, rho).unwrap();
        let minus = f_star(k, -rho).unwrap();
        prop_assert_eq!(minus, -plus);
        prop_assert!(plus.abs() <= rho.abs() + 1e-12);
        prop_assert_eq!(f_star(k, 1.0).unwrap(), 1.0);
        prop_assert_eq!(f_star(k, -1.0).unwrap(), -1.0);
    }
}
