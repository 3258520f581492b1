mod common;

use common::*;
use locality::rational::{RationalEntry, RationalMatrix};
use locality::structure::*;
use locality::{sampling, Graph, Partition, StructurePattern};
use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::Rng;

/// Random TF-structured matrix: zero off the graph, random proper entries
/// (degree at most 2) on edges, some left zero.
fn random_structured(seed: u64, n: usize, sizes: &[usize]) -> (RationalMatrix, StructurePattern) {
    let mut r = rng(seed);
    let g = random_connected_graph(&mut r, n, 0.3);
    let part = Partition::new(sizes.to_vec()).unwrap();
    let pat = StructurePattern::new(g, part.clone(), part.clone()).unwrap();
    let dim = part.total();
    let h = RationalMatrix::from_fn(dim, dim, |_, _| RationalEntry::zero());
    let mut h = h.with_partitions(part.clone(), part).unwrap();
    for i in 0..dim {
        for j in 0..dim {
            if pat.allows(i, j) && r.random_bool(0.8) {
                let deg = r.random_range(0..=2);
                h.set(i, j, random_entry(&mut r, deg));
            }
        }
    }
    (h, pat)
}

fn transfer_gap(ss: &locality::StateSpace, h: &RationalMatrix, seed: u64) -> f64 {
    sampling::points(10, seed)
        .into_iter()
        .map(|s| cmax(&(ss.evaluate(s).unwrap() - h.eval(s).unwrap())))
        .fold(0.0, f64::max)
}

#[test]
fn tridiag_counterexample_for_all_sizes() {
    for n in 3..=8 {
        let t = tridiag_counterexample(n).unwrap();
        assert!(!t.tf_structured, "n={n}");
        let w = check_realization_structure(
            &t.ss.clone().with_partitions(Partition::ones(n), Partition::ones(n), Partition::ones(n)).unwrap(),
            &StructurePattern::scalar(Graph::path(n).unwrap()),
        )
        .unwrap();
        assert!(w.structured && w.network);
    }
}

#[test]
fn tridiag_dc_gain_is_dense() {
    // G(0) = -A^{-1}, computed independently
    let t = tridiag_counterexample(3).unwrap();
    let a = DMatrix::from_row_slice(3, 3, &[-2.0, 1.0, 0.0, 1.0, -2.0, 1.0, 0.0, 1.0, -2.0]);
    let dc: DMatrix<f64> = -a.try_inverse().unwrap();
    assert!((dc[(0, 2)] - 0.25).abs() < 1e-15);
    let g0 = t.ss.tf_of().eval(c(0.0, 0.0)).unwrap();
    assert!((g0[(0, 2)].re - dc[(0, 2)]).abs() < 1e-12);
    assert!(is_tf_structured(&t.ss.tf_of(), &StructurePattern::scalar(Graph::complete(3).unwrap())).unwrap());
}

#[test]
fn decoupled_lags_give_two_states() {
    let h = RationalMatrix::from_rows(vec![
        vec![entry(&[1.0], &[1.0, 1.0]), RationalEntry::zero()],
        vec![RationalEntry::zero(), entry(&[1.0], &[2.0, 1.0])],
    ])
    .unwrap();
    let pat = StructurePattern::scalar(Graph::isolated(2).unwrap());
    let ss = build_structured_realization(&h, &pat, Orientation::Rows).unwrap();
    assert_eq!(ss.n_states(), 2);
    assert!(check_realization_structure(&ss, &pat).unwrap().network);
    assert!(transfer_gap(&ss, &h, 4) < 1e-14);
}

#[test]
fn non_structured_input_is_rejected() {
    let h = RationalMatrix::from_rows(vec![
        vec![RationalEntry::zero(), RationalEntry::zero(), entry(&[1.0], &[1.0, 1.0])],
        vec![RationalEntry::zero(); 3],
        vec![RationalEntry::zero(); 3],
    ])
    .unwrap();
    let pat = StructurePattern::scalar(Graph::path(3).unwrap());
    assert!(matches!(build_structured_realization(&h, &pat, Orientation::Rows), Err(locality::Error::NotTfStructured)));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn structured_realization_round_trip(seed in 0u64..10_000, n in 2usize..=6, block in 1usize..=2) {
        let sizes = vec![block; n];
        let (h, pat) = random_structured(seed, n, &sizes);
        prop_assert!(is_tf_structured(&h, &pat).unwrap());
        for orientation in [Orientation::Rows, Orientation::Columns] {
            let ss = build_structured_realization(&h, &pat, orientation).unwrap();
            let w = check_realization_structure(&ss, &pat).unwrap();
            prop_assert!(w.structured);
            let gap = transfer_gap(&ss, &h, seed);
            prop_assert!(gap < 1e-8, "{orientation:?}: {gap:e}");
            let (sp, ip, op) = (ss.state_partition(), ss.input_partition(), ss.output_partition());
            match orientation {
                Orientation::Rows => prop_assert!(is_block_diagonal(ss.c(), op, sp).unwrap()),
                Orientation::Columns => prop_assert!(is_block_diagonal(ss.b(), sp, ip).unwrap()),
            }
        }
    }
}
