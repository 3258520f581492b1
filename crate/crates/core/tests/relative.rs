mod common;

use common::*;
use locality::rational::{RationalEntry, RationalMatrix};
use locality::relative::*;
use locality::{sampling, Error, Graph};
use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::Rng;

fn relative_row(r: &mut impl Rng, n: usize) -> Vec<f64> {
    let mut k: Vec<f64> = (0..n).map(|_| r.random_range(-2.0..2.0)).collect();
    let mean = k.iter().sum::<f64>() / n as f64;
    k.iter_mut().for_each(|x| *x -= mean);
    k
}

#[test]
fn two_node_and_ring_rows() {
    let m = relative_decompose(&[1.0, -1.0], &Graph::path(2).unwrap()).unwrap();
    assert!((m - DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0])).amax() < 1e-12, "u = y1 - y2");
    let k = [-2.0, 1.0, 0.0, 1.0];
    let m = relative_decompose(&k, &Graph::ring(4).unwrap()).unwrap();
    for (j, kj) in k.iter().enumerate() {
        assert!((m.row(j).sum() - kj).abs() < 1e-10);
    }
    assert_eq!(m[(0, 2)], 0.0);
}

#[test]
fn decomposition_errors() {
    assert!(matches!(relative_decompose(&[1.0, -1.0, 0.0], &Graph::isolated(3).unwrap()), Err(Error::DisconnectedGraph)));
    assert!(matches!(relative_decompose(&[1.0, 0.0, 0.0], &Graph::path(3).unwrap()), Err(Error::NotRelative(_))));
    assert!(!is_relative(&RationalMatrix::identity(3)));
}

#[test]
fn proper_approximation_kernels_factor() {
    // K_a = -a/(s - a) K_s: every kernel is the static one times -a/(s - a)
    let n = 5;
    let a = -3.0;
    let g = Graph::ring(n).unwrap();
    let lag = entry(&[-a], &[-a, 1.0]);
    let ks = RationalMatrix::from_real(&common::ks(n));
    let ka = ks.map(|e| e.mul(&lag));
    let stat = relative_decompose_rational(&ks, &g).unwrap();
    let dyna = relative_decompose_rational(&ka, &g).unwrap();
    let s = c(0.4, 1.1);
    let f = lag.eval(s).unwrap();
    for r in 0..n {
        for i in 0..n {
            for j in 0..n {
                let want = stat.kernel(r, i, j).eval(s).unwrap() * f;
                assert!((dyna.kernel(r, i, j).eval(s).unwrap() - want).norm() < 1e-10);
            }
        }
    }
    let zero = relative_decompose_rational(&RationalMatrix::zeros(2, n), &g).unwrap();
    assert!(zero.terms().is_empty());
}

proptest! {
    #[test]
    fn adjoint_identity_on_random_graphs(seed in 0u64..10_000, n in 2usize..=12) {
        let g = random_connected_graph(&mut rng(seed), n, 0.25);
        prop_assert!(verify_adjoint_identity(&g) < 1e-12);
    }

    #[test]
    fn real_round_trip(seed in 0u64..10_000, n in 2usize..=12) {
        let mut r = rng(seed);
        let g = random_connected_graph(&mut r, n, 0.25);
        let k = relative_row(&mut r, n);
        let m = relative_decompose(&k, &g).unwrap();
        prop_assert!((&m + m.transpose()).amax() < 1e-12);
        for i in 0..n {
            for j in 0..n {
                if !g.has_edge(i, j) {
                    prop_assert_eq!(m[(i, j)], 0.0);
                }
            }
            prop_assert!((m.row(i).sum() - k[i]).abs() < 1e-10);
        }
    }

    #[test]
    fn rational_forms_reassemble_to_relative(seed in 0u64..10_000, n in 2usize..=6, rows in 1usize..=3) {
        let mut r = rng(seed);
        let g = random_connected_graph(&mut r, n, 0.3);
        // K = diag(h_r) * (relative real rows) keeps every row relative
        let k = RationalMatrix::from_fn(rows, n, |_, _| RationalEntry::zero());
        let mut k = k;
        for row in 0..rows {
            let h = random_entry(&mut r, 1);
            for (j, v) in relative_row(&mut r, n).into_iter().enumerate() {
                k.set(row, j, h.scale(v));
            }
        }
        prop_assert!(is_relative(&k));
        let form = relative_decompose_rational(&k, &g).unwrap();
        let back = form.reassemble();
        prop_assert!(is_relative(&back));
        for s in sampling::points(3, seed) {
            prop_assert!(cmax(&(back.eval(s).unwrap() - k.eval(s).unwrap())) < 1e-9);
        }
    }
}
