#![allow(dead_code)]

use locality::rational::{RationalEntry, RationalMatrix};
use locality::sls::{ClosedLoopPair, LtiMap};
use locality::Poly;
use nalgebra::DMatrix;
use num_complex::Complex64;

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn p(coeffs: &[f64]) -> Poly {
    Poly::new(coeffs.to_vec())
}

pub fn entry(num: &[f64], den: &[f64]) -> RationalEntry {
    RationalEntry::from_coeffs(num, den).unwrap()
}

pub fn cmax(m: &DMatrix<Complex64>) -> f64 {
    m.iter().fold(0.0, |a, z| a.max(z.norm()))
}

/// `-L` of the ring.
pub fn ks(n: usize) -> DMatrix<f64> {
    -locality::Graph::ring(n).unwrap().laplacian()
}

/// Closed-loop maps of the three-node example on `x' = u + w`.
pub fn three_node_phi_u() -> RationalMatrix {
    let z = RationalEntry::zero;
    let a = || entry(&[1.0], &[1.0, 1.0]);
    let b = || entry(&[1.0], &[2.0, 1.0]);
    RationalMatrix::from_rows(vec![vec![z(), a(), z()], vec![a(), z(), b()], vec![z(), b(), z()]]).unwrap()
}

pub fn three_node_phi_x() -> RationalMatrix {
    let z = RationalEntry::zero;
    let inv_s = || entry(&[1.0], &[0.0, 1.0]);
    let a = || entry(&[1.0], &[0.0, 1.0, 1.0]);
    let b = || entry(&[1.0], &[0.0, 2.0, 1.0]);
    RationalMatrix::from_rows(vec![vec![inv_s(), a(), z()], vec![a(), inv_s(), b()], vec![z(), b(), inv_s()]]).unwrap()
}

pub fn three_node_pair() -> ClosedLoopPair {
    ClosedLoopPair { phi_x: LtiMap::Rational(three_node_phi_x()), phi_u: LtiMap::Rational(three_node_phi_u()) }
}

/// Controller implied by the example closed loops, `Phi_u Phi_x^{-1}`.
pub fn three_node_k() -> RationalMatrix {
    let s1 = p(&[1.0, 1.0]);
    let s2 = p(&[2.0, 1.0]);
    let den = p(&[-1.0, 6.0, 11.0, 6.0, 1.0]);
    let s = p(&[0.0, 1.0]);
    let mk = |num: Poly| RationalEntry::new(&s * &num, den.clone()).unwrap();
    let n11 = -&(&s2 * &s2);
    let n12 = &s1 * &(&s2 * &s2);
    let n13 = -&(&s1 * &s2);
    let n22 = -&(&(&s1 * &s1) + &(&s2 * &s2));
    let n23 = &(&s1 * &s1) * &s2;
    let n33 = -&(&s1 * &s1);
    RationalMatrix::from_rows(vec![
        vec![mk(n11), mk(n12.clone()), mk(n13.clone())],
        vec![mk(n12), mk(n22), mk(n23.clone())],
        vec![mk(n13), mk(n23), mk(n33)],
    ])
    .unwrap()
}

pub fn rng(seed: u64) -> rand_chacha::ChaCha8Rng {
    <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(seed)
}

/// Random spanning tree plus extra edges with probability `extra`.
pub fn random_connected_graph(rng: &mut impl rand::Rng, n: usize, extra: f64) -> locality::Graph {
    let mut edges = Vec::new();
    for i in 1..n {
        edges.push((rng.random_range(0..i), i));
    }
    for i in 0..n {
        for j in i + 1..n {
            if rng.random_bool(extra) {
                edges.push((i, j));
            }
        }
    }
    locality::Graph::new(n, &edges).unwrap()
}

/// Random `A` shifted so every eigenvalue has real part below `-margin`.
pub fn random_stable_a(rng: &mut impl rand::Rng, n: usize, margin: f64) -> DMatrix<f64> {
    let r = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
    let top = r.complex_eigenvalues().iter().fold(f64::NEG_INFINITY, |m, l| m.max(l.re));
    let shift = top + margin + rng.random_range(0.0..0.5);
    r - DMatrix::identity(n, n) * shift
}

pub fn random_matrix(rng: &mut impl rand::Rng, r: usize, c: usize) -> DMatrix<f64> {
    DMatrix::from_fn(r, c, |_, _| rng.random_range(-1.0..1.0))
}

/// Proper entry with real or complex-pair poles, degree `deg`.
pub fn random_entry(rng: &mut impl rand::Rng, deg: usize) -> RationalEntry {
    let den = match deg {
        0 => p(&[1.0]),
        1 => p(&[rng.random_range(0.2..3.0), 1.0]),
        _ => {
            let (re, im) = (rng.random_range(0.2..3.0), rng.random_range(0.0..2.0));
            p(&[re * re + im * im, 2.0 * re, 1.0])
        }
    };
    let num: Vec<f64> = (0..=deg).map(|_| rng.random_range(-2.0..2.0)).collect();
    RationalEntry::new(Poly::new(num), den).unwrap()
}
