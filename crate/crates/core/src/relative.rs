//! Relative (difference) feedback: row-sum tests and pairwise-difference
//! decompositions supported on a graph.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::poly::Poly;
use crate::rational::{common_denominator, RationalEntry, RationalMatrix};

/// Tolerance on `k 1` for a real row to count as relative.
pub const RELATIVE_TOL: f64 = 1e-10;

/// `K 1 = 0`. With equal column blocks of size `q` the test is blockwise,
/// `sum_j K_{:, j-block} = 0`; otherwise it is the flat row sum.
pub fn is_relative(k: &RationalMatrix) -> bool {
    let sizes = k.col_partition().sizes();
    let q = sizes[0];
    if q > 0 && sizes.iter().all(|&s| s == q) {
        (0..k.rows()).all(|i| {
            (0..q).all(|c| {
                RationalEntry::sum((0..sizes.len()).map(|blk| k.get(i, blk * q + c))).is_zero()
            })
        })
    } else {
        k.row_sums().iter().all(RationalEntry::is_zero)
    }
}

pub fn is_relative_real(k: &DMatrix<f64>) -> bool {
    let scale = k.amax().max(1.0);
    k.row_iter().all(|r| r.sum().abs() <= RELATIVE_TOL * scale)
}

/// Moore-Penrose inverse of a symmetric matrix, dropping eigenvalues below
/// `1e-10 * lambda_max`.
pub fn symmetric_pinv(m: &DMatrix<f64>) -> DMatrix<f64> {
    let n = m.nrows();
    if n == 0 {
        return DMatrix::zeros(0, 0);
    }
    let eig = SymmetricEigen::new(m.clone());
    let lmax = eig.eigenvalues.amax();
    let cutoff = 1e-10 * lmax;
    let inv = eig.eigenvalues.map(|l| if l.abs() > cutoff && lmax > 0.0 { 1.0 / l } else { 0.0 });
    &eig.eigenvectors * DMatrix::from_diagonal(&inv) * eig.eigenvectors.transpose()
}

/// `1/2 A o (v 1^T - 1 v^T)` over the off-diagonal adjacency.
pub fn adjoint_map(g: &Graph, v: &DVector<f64>) -> DMatrix<f64> {
    let a = g.off_diagonal_adjacency();
    DMatrix::from_fn(g.n(), g.n(), |i, j| 0.5 * a[(i, j)] * (v[i] - v[j]))
}

fn decompose_unchecked(k: &DVector<f64>, g: &Graph, pinv: &DMatrix<f64>) -> DMatrix<f64> {
    adjoint_map(g, &(pinv * k * 2.0))
}

/// Skew-symmetric `M` supported on the edges of `g` with `M 1 = k^T`, so
/// that `k y = sum_{i<j} M_ij (y_i - y_j)`; the minimum Frobenius norm
/// solution.
pub fn relative_decompose(k: &[f64], g: &Graph) -> Result<DMatrix<f64>> {
    if k.len() != g.n() {
        return Err(Error::DimensionMismatch(format!("row of length {} on a {}-node graph", k.len(), g.n())));
    }
    let sum: f64 = k.iter().sum();
    let scale = k.iter().fold(1.0f64, |m, x| m.max(x.abs()));
    if sum.abs() > RELATIVE_TOL * scale {
        return Err(Error::NotRelative(sum.abs()));
    }
    if !g.is_connected() {
        return Err(Error::DisconnectedGraph);
    }
    let pinv = symmetric_pinv(&g.laplacian());
    Ok(decompose_unchecked(&DVector::from_column_slice(k), g, &pinv))
}

/// `max_i |L_SA(L_SA^dagger(e_i)) - 1/2 L e_i|`.
pub fn verify_adjoint_identity(g: &Graph) -> f64 {
    let l = g.laplacian();
    let n = g.n();
    let ones = DVector::from_element(n, 1.0);
    (0..n)
        .map(|i| {
            let e = DVector::from_fn(n, |k, _| if k == i { 1.0 } else { 0.0 });
            let m = adjoint_map(g, &e);
            (m * &ones - l.column(i) * 0.5).amax()
        })
        .fold(0.0, f64::max)
}

/// Per-output skew kernel grids `K^r` with `u_r = sum_{i<j} K^r_ij (y_i - y_j)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PairwiseDifferenceForm {
    pub graph: Graph,
    /// `kernels[r]` is the row-major `N x N` grid for output `r`.
    pub kernels: Vec<Vec<RationalEntry>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelTerm {
    pub n: usize,
    pub i: usize,
    pub j: usize,
    pub kernel: RationalEntry,
}

impl PairwiseDifferenceForm {
    pub fn kernel(&self, r: usize, i: usize, j: usize) -> &RationalEntry {
        &self.kernels[r][i * self.graph.n() + j]
    }

    /// Nonzero terms with `i < j`.
    pub fn terms(&self) -> Vec<KernelTerm> {
        let n = self.graph.n();
        let mut out = Vec::new();
        for (r, grid) in self.kernels.iter().enumerate() {
            for i in 0..n {
                for j in i + 1..n {
                    let e = &grid[i * n + j];
                    if !e.is_zero() {
                        out.push(KernelTerm { n: r, i, j, kernel: e.clone() });
                    }
                }
            }
        }
        out
    }

    /// Transfer matrix `K` with `K_ri = sum_j K^r_ij`.
    pub fn reassemble(&self) -> RationalMatrix {
        let n = self.graph.n();
        RationalMatrix::from_fn(self.kernels.len(), n, |r, i| {
            (0..n).fold(RationalEntry::zero(), |acc, j| acc.add(self.kernel(r, i, j)))
        })
    }
}

/// Decomposes each row of a relative transfer matrix coefficient by
/// coefficient after bringing the row to a common denominator.
pub fn relative_decompose_rational(k: &RationalMatrix, g: &Graph) -> Result<PairwiseDifferenceForm> {
    let n = g.n();
    if k.cols() != n {
        return Err(Error::DimensionMismatch(format!("{} columns on a {n}-node graph", k.cols())));
    }
    let sums = k.row_sums();
    if let Some(bad) = sums.iter().find(|e| !e.is_zero()) {
        return Err(Error::NotRelative(bad.num().max_abs()));
    }
    if !g.is_connected() {
        return Err(Error::DisconnectedGraph);
    }
    let pinv = symmetric_pinv(&g.laplacian());
    let mut kernels = Vec::with_capacity(k.rows());
    for r in 0..k.rows() {
        let (den, nums) = common_denominator(&(0..n).map(|j| k.get(r, j).clone()).collect::<Vec<_>>());
        let len = nums.iter().map(|p| p.coeffs().len()).max().unwrap_or(0);
        let mut grids = vec![vec![0.0; len]; n * n];
        for c in 0..len {
            let kc = DVector::from_fn(n, |j, _| nums[j].coeff(c));
            let m = decompose_unchecked(&kc, g, &pinv);
            for (idx, g) in grids.iter_mut().enumerate() {
                g[c] = m[(idx / n, idx % n)];
            }
        }
        let grid = grids
            .into_iter()
            .map(|coeffs| RationalEntry::new(Poly::new(coeffs), den.clone()).map(|e| e.cancel()))
            .collect::<Result<Vec<_>>>()?;
        kernels.push(grid);
    }
    Ok(PairwiseDifferenceForm { graph: g.clone(), kernels })
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;
    use proptest::prelude::*;

    #[test]
    fn two_nodes() {
        let m = relative_decompose(&[1.0, -1.0], &Graph::path(2).unwrap()).unwrap();
        assert!((m - DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0])).amax() < 1e-14);
    }

    #[test]
    fn ring_row_recovers() {
        let g = Graph::ring(4).unwrap();
        let k = [-2.0, 1.0, 0.0, 1.0];
        let m = relative_decompose(&k, &g).unwrap();
        let rows = &m * DVector::from_element(4, 1.0);
        for i in 0..4 {
            assert!((rows[i] - k[i]).abs() < 1e-10);
            for j in 0..4 {
                assert!((m[(i, j)] + m[(j, i)]).abs() < 1e-15);
                if !g.has_edge(i, j) {
                    assert_eq!(m[(i, j)], 0.0);
                }
            }
        }
    }

    #[test]
    fn errors() {
        let g = Graph::isolated(3).unwrap();
        assert!(matches!(relative_decompose(&[1.0, -1.0, 0.0], &g), Err(Error::DisconnectedGraph)));
        assert!(matches!(relative_decompose(&[1.0, 0.0, 0.0], &Graph::ring(3).unwrap()), Err(Error::NotRelative(_))));
    }

    #[test]
    fn adjoint_identity_small_ring_is_exact() {
        assert_eq!(verify_adjoint_identity(&Graph::ring(3).unwrap()), 0.0);
        assert!(verify_adjoint_identity(&Graph::ring(7).unwrap()) < 1e-12);
    }

    #[test]
    fn rational_rows_with_mixed_denominators() {
        let e = |num: &[f64], den: &[f64]| RationalEntry::from_coeffs(num, den).unwrap();
        // u = 1/(s+1) (y0 - y1) + 2/(s+2) (y1 - y2)
        let k = RationalMatrix::from_rows(vec![vec![
            e(&[1.0], &[1.0, 1.0]),
            e(&[1.0], &[1.0, 1.0]).neg().add(&e(&[2.0], &[2.0, 1.0])),
            e(&[-2.0], &[2.0, 1.0]),
        ]])
        .unwrap();
        assert!(is_relative(&k));
        let g = Graph::path(3).unwrap();
        let form = relative_decompose_rational(&k, &g).unwrap();
        assert!(form.kernel(0, 0, 2).is_zero());
        let s = Complex64::new(0.9, -0.3);
        let y = [0.3, -1.2, 2.0];
        let want: Complex64 = (0..3).map(|j| k.get(0, j).eval(s).unwrap() * y[j]).sum();
        let got: Complex64 = form
            .terms()
            .iter()
            .map(|t| t.kernel.eval(s).unwrap() * (y[t.i] - y[t.j]))
            .sum();
        assert!((want - got).norm() < 1e-12);
    }

    proptest! {
        #[test]
        fn cycle_space_perturbation_preserves_reconstruction(
            n in 3usize..9,
            raw in proptest::collection::vec(-2.0f64..2.0, 9),
            t in -3.0f64..3.0,
        ) {
            let g = Graph::ring(n).unwrap();
            let mean = raw[..n].iter().sum::<f64>() / n as f64;
            let k: Vec<f64> = raw[..n].iter().map(|x| x - mean).collect();
            let mut m = relative_decompose(&k, &g).unwrap();
            for i in 0..n {
                let j = (i + 1) % n;
                m[(i, j)] += t;
                m[(j, i)] -= t;
            }
            let r = &m * DVector::from_element(n, 1.0);
            for i in 0..n {
                prop_assert!((r[i] - k[i]).abs() < 1e-10);
            }
        }
    }
}
