//! Continuous-time Lyapunov equations.

use nalgebra::linalg::Schur;
use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Solves `A^T X + X A + Q = 0` by the real Schur (Bartels-Stewart)
/// method with 1x1/2x2 block back-substitution.
pub fn solve(a: &DMatrix<f64>, q: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = a.nrows();
    if a.ncols() != n || q.nrows() != n || q.ncols() != n {
        return Err(Error::DimensionMismatch("lyapunov operands must be square and equal size".into()));
    }
    if n == 0 {
        return Ok(DMatrix::zeros(0, 0));
    }
    let schur = Schur::try_new(a.clone(), f64::EPSILON, 10_000)
        .ok_or_else(|| Error::InvalidArgument("Schur decomposition did not converge".into()))?;
    let (u, t) = schur.unpack();
    let w = -(u.transpose() * q * &u);
    let blocks = diagonal_blocks(&t);
    let mut y = DMatrix::<f64>::zeros(n, n);
    for (bi, ri) in blocks.iter().enumerate() {
        for (bj, rj) in blocks.iter().enumerate() {
            let (p, m) = (ri.len(), rj.len());
            let mut rhs = w.view((ri.start, rj.start), (p, m)).into_owned();
            for rk in &blocks[..bi] {
                let tki = t.view((rk.start, ri.start), (rk.len(), p));
                rhs -= tki.transpose() * y.view((rk.start, rj.start), (rk.len(), m));
            }
            for rk in &blocks[..bj] {
                let tkj = t.view((rk.start, rj.start), (rk.len(), m));
                rhs -= y.view((ri.start, rk.start), (p, rk.len())) * tkj;
            }
            let tii = t.view((ri.start, ri.start), (p, p)).into_owned();
            let tjj = t.view((rj.start, rj.start), (m, m)).into_owned();
            let x = small_sylvester(&tii.transpose(), &tjj, &rhs)?;
            y.view_mut((ri.start, rj.start), (p, m)).copy_from(&x);
        }
    }
    let x = &u * y * u.transpose();
    Ok((&x + x.transpose()) * 0.5)
}

/// Controllability gramian: `A P + P A^T + B B^T = 0`.
pub fn controllability_gramian(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    solve(&a.transpose(), &(b * b.transpose()))
}

/// Observability gramian: `A^T Q + Q A + C^T C = 0`.
pub fn observability_gramian(a: &DMatrix<f64>, c: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    solve(a, &(c.transpose() * c))
}

fn diagonal_blocks(t: &DMatrix<f64>) -> Vec<std::ops::Range<usize>> {
    let n = t.nrows();
    let mut out = Vec::new();
    let mut i = 0;
    while i < n {
        let mut j = i + 1;
        while j < n && t[(j, j - 1)] != 0.0 {
            j += 1;
        }
        out.push(i..j);
        i = j;
    }
    out
}

/// `L X + X R = C` for small `L`, `R` via the Kronecker form.
fn small_sylvester(l: &DMatrix<f64>, r: &DMatrix<f64>, c: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let (p, m) = (l.nrows(), r.nrows());
    let k = DMatrix::<f64>::identity(m, m).kronecker(l) + r.transpose().kronecker(&DMatrix::identity(p, p));
    let rhs = DMatrix::from_column_slice(p * m, 1, c.as_slice());
    let sol = k.lu().solve(&rhs).ok_or(Error::NotHurwitz)?;
    Ok(DMatrix::from_column_slice(p, m, sol.as_slice()))
}

/// Dense complex solve of `A^H X + X A + Q = 0`; intended for small `A`.
pub fn solve_complex(a: &DMatrix<Complex64>, q: &DMatrix<Complex64>) -> Result<DMatrix<Complex64>> {
    let n = a.nrows();
    let id = DMatrix::<Complex64>::identity(n, n);
    let k = id.kronecker(&a.adjoint()) + a.transpose().kronecker(&id);
    let rhs = DMatrix::from_column_slice(n * n, 1, (-q).as_slice());
    let sol = k.lu().solve(&rhs).ok_or(Error::NotHurwitz)?;
    Ok(DMatrix::from_column_slice(n, n, sol.as_slice()))
}
