//! State-space realizations `[A B; C D]` with node-block partitions.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lyapunov;
use crate::partition::{interleave_permutation, Partition};
use crate::poly::Poly;
use crate::rational::{clusters_of, RationalEntry, RationalMatrix};

/// Pivot ratio below which `sI - A` is treated as singular.
const SINGULAR_TOL: f64 = 1e-13;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "StateSpaceJson", into = "StateSpaceJson")]
pub struct StateSpace {
    a: DMatrix<f64>,
    b: DMatrix<f64>,
    c: DMatrix<f64>,
    d: DMatrix<f64>,
    state_part: Partition,
    in_part: Partition,
    out_part: Partition,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct PartitionsJson {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub state: Option<Partition>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub input: Option<Partition>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<Partition>,
}

/// Wire format with row-major nested arrays. With no states, `A`, `B` and
/// `C` may be empty and the dimensions come from `D`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StateSpaceJson {
    #[serde(rename = "A", default)]
    pub a: Vec<Vec<f64>>,
    #[serde(rename = "B", default)]
    pub b: Vec<Vec<f64>>,
    #[serde(rename = "C", default)]
    pub c: Vec<Vec<f64>>,
    #[serde(rename = "D")]
    pub d: Vec<Vec<f64>>,
    #[serde(default)]
    pub partitions: PartitionsJson,
}

pub fn matrix_from_rows(rows: &[Vec<f64>], nrows: usize, ncols: usize, what: &str) -> Result<DMatrix<f64>> {
    if nrows * ncols == 0 {
        if rows.iter().any(|r| !r.is_empty()) && rows.len() != nrows {
            return Err(Error::DimensionMismatch(format!("{what} should be {nrows}x{ncols}")));
        }
        return Ok(DMatrix::zeros(nrows, ncols));
    }
    if rows.len() != nrows || rows.iter().any(|r| r.len() != ncols) {
        return Err(Error::DimensionMismatch(format!("{what} should be {nrows}x{ncols}")));
    }
    Ok(DMatrix::from_fn(nrows, ncols, |i, j| rows[i][j]))
}

pub fn matrix_to_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()
}

impl StateSpace {
    /// Realization with one channel per block for inputs and outputs and
    /// one state per block (or a single empty block when there are no
    /// states).
    pub fn new(a: DMatrix<f64>, b: DMatrix<f64>, c: DMatrix<f64>, d: DMatrix<f64>) -> Result<Self> {
        let n = a.nrows();
        let (p, m) = d.shape();
        if a.ncols() != n || b.shape() != (n, m) || c.shape() != (p, n) {
            return Err(Error::DimensionMismatch(format!(
                "A {:?}, B {:?}, C {:?}, D {:?}",
                a.shape(),
                b.shape(),
                c.shape(),
                d.shape()
            )));
        }
        let out_part = Partition::ones(p);
        let state_part = if n > 0 { Partition::ones(n) } else { Partition::uniform(out_part.len(), 0) };
        Ok(StateSpace { a, b, c, d, state_part, in_part: Partition::ones(m), out_part })
    }

    pub fn from_static(d: DMatrix<f64>) -> Self {
        let (p, m) = d.shape();
        StateSpace::new(DMatrix::zeros(0, 0), DMatrix::zeros(0, m), DMatrix::zeros(p, 0), d).expect("static shapes")
    }

    pub fn zero(p: usize, m: usize) -> Self {
        StateSpace::from_static(DMatrix::zeros(p, m))
    }

    pub fn identity(n: usize) -> Self {
        StateSpace::from_static(DMatrix::identity(n, n))
    }

    pub fn with_partitions(mut self, state: Partition, input: Partition, output: Partition) -> Result<Self> {
        state.check_total(self.n_states(), "state")?;
        input.check_total(self.n_inputs(), "input")?;
        output.check_total(self.n_outputs(), "output")?;
        self.state_part = state;
        self.in_part = input;
        self.out_part = output;
        Ok(self)
    }

    /// Static system partitioned like the given output/input partitions,
    /// with an empty state block per output block.
    pub fn static_with(d: DMatrix<f64>, input: Partition, output: Partition) -> Result<Self> {
        let blocks = output.len();
        StateSpace::from_static(d).with_partitions(Partition::uniform(blocks, 0), input, output)
    }

    pub fn a(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn b(&self) -> &DMatrix<f64> {
        &self.b
    }

    pub fn c(&self) -> &DMatrix<f64> {
        &self.c
    }

    pub fn d(&self) -> &DMatrix<f64> {
        &self.d
    }

    pub fn state_partition(&self) -> &Partition {
        &self.state_part
    }

    pub fn input_partition(&self) -> &Partition {
        &self.in_part
    }

    pub fn output_partition(&self) -> &Partition {
        &self.out_part
    }

    pub fn n_states(&self) -> usize {
        self.a.nrows()
    }

    pub fn n_inputs(&self) -> usize {
        self.d.ncols()
    }

    pub fn n_outputs(&self) -> usize {
        self.d.nrows()
    }

    /// `C (sI - A)^{-1} B + D`.
    pub fn evaluate(&self, s: Complex64) -> Result<DMatrix<Complex64>> {
        let d = self.d.map(Complex64::from);
        let n = self.n_states();
        if n == 0 {
            return Ok(d);
        }
        let m = DMatrix::<Complex64>::identity(n, n) * s - self.a.map(Complex64::from);
        let lu = m.lu();
        let u = lu.u();
        let diag: Vec<f64> = u.diagonal().iter().map(|z| z.norm()).collect();
        let big = diag.iter().fold(0.0, |a: f64, &b| a.max(b));
        let small = diag.iter().fold(f64::INFINITY, |a: f64, &b| a.min(b));
        if big == 0.0 || small < SINGULAR_TOL * big.max(1.0) {
            return Err(Error::SingularAtS(s));
        }
        let x = lu.solve(&self.b.map(Complex64::from)).ok_or(Error::SingularAtS(s))?;
        Ok(self.c.map(Complex64::from) * x + d)
    }

    /// Characteristic polynomial of `A` and the matrices `M_k` with
    /// `adj(sI - A) = sum_k M_k s^(n-k)` (Faddeev-LeVerrier).
    fn faddeev(&self) -> (Poly, Vec<DMatrix<f64>>) {
        let n = self.n_states();
        let mut coeffs = vec![0.0; n + 1];
        coeffs[n] = 1.0;
        let mut ms = Vec::with_capacity(n);
        let mut mk = DMatrix::<f64>::identity(n, n);
        for k in 1..=n {
            let am = &self.a * &mk;
            let ck = -am.trace() / k as f64;
            coeffs[n - k] = ck;
            ms.push(mk);
            mk = am + DMatrix::identity(n, n) * ck;
        }
        (Poly::new(coeffs), ms)
    }

    /// Exact rational transfer matrix; common pole/zero factors are
    /// cancelled against the eigenvalues of `A`.
    pub fn tf_of(&self) -> RationalMatrix {
        let (p, m) = (self.n_outputs(), self.n_inputs());
        let n = self.n_states();
        let (charpoly, ms) = self.faddeev();
        let clusters = if n > 0 { clusters_of(self.a.complex_eigenvalues().as_slice()) } else { Vec::new() };
        let cmb: Vec<DMatrix<f64>> = ms.iter().map(|mk| &self.c * mk * &self.b).collect();
        let mut entries = Vec::with_capacity(p * m);
        for i in 0..p {
            for j in 0..m {
                let mut num = vec![0.0; n + 1];
                for (k, g) in cmb.iter().enumerate() {
                    num[n - 1 - k] += g[(i, j)];
                }
                let num = &Poly::new(num) + &charpoly.scale(self.d[(i, j)]);
                let e = RationalEntry::with_known_poles(num, charpoly.clone(), &clusters)
                    .expect("characteristic polynomial is monic");
                entries.push(e);
            }
        }
        RationalMatrix::new(p, m, entries, self.out_part.clone(), self.in_part.clone()).expect("shapes agree")
    }

    /// `h(g(u))`.
    pub fn series(g: &StateSpace, h: &StateSpace) -> Result<StateSpace> {
        if g.n_outputs() != h.n_inputs() {
            return Err(Error::DimensionMismatch(format!(
                "series: {} outputs into {} inputs",
                g.n_outputs(),
                h.n_inputs()
            )));
        }
        let (ng, nh) = (g.n_states(), h.n_states());
        let mut a = DMatrix::zeros(ng + nh, ng + nh);
        a.view_mut((0, 0), (ng, ng)).copy_from(&g.a);
        a.view_mut((ng, 0), (nh, ng)).copy_from(&(&h.b * &g.c));
        a.view_mut((ng, ng), (nh, nh)).copy_from(&h.a);
        let b = stack_rows(&g.b, &(&h.b * &g.d));
        let c = stack_cols(&(&h.d * &g.c), &h.c);
        let d = &h.d * &g.d;
        StateSpace::assemble(a, b, c, d, &g.state_part, &h.state_part, g.in_part.clone(), h.out_part.clone())
    }

    /// `g(u) + h(u)`.
    pub fn parallel(g: &StateSpace, h: &StateSpace) -> Result<StateSpace> {
        if g.d.shape() != h.d.shape() {
            return Err(Error::DimensionMismatch("parallel: operand shapes differ".into()));
        }
        let (ng, nh) = (g.n_states(), h.n_states());
        let mut a = DMatrix::zeros(ng + nh, ng + nh);
        a.view_mut((0, 0), (ng, ng)).copy_from(&g.a);
        a.view_mut((ng, ng), (nh, nh)).copy_from(&h.a);
        let b = stack_rows(&g.b, &h.b);
        let c = stack_cols(&g.c, &h.c);
        let d = &g.d + &h.d;
        StateSpace::assemble(a, b, c, d, &g.state_part, &h.state_part, g.in_part.clone(), g.out_part.clone())
    }

    /// Positive feedback `y = g(u + h(y))`.
    pub fn feedback(g: &StateSpace, h: &StateSpace) -> Result<StateSpace> {
        if h.n_inputs() != g.n_outputs() || h.n_outputs() != g.n_inputs() {
            return Err(Error::DimensionMismatch("feedback: loop dimensions do not match".into()));
        }
        let p = g.n_outputs();
        let loop_gain = DMatrix::<f64>::identity(p, p) - &g.d * &h.d;
        let e = loop_gain.try_inverse().ok_or(Error::IllPosedFeedback)?;
        if e.iter().any(|x| !x.is_finite()) || e.amax() > 1e12 {
            return Err(Error::IllPosedFeedback);
        }
        let (ng, nh) = (g.n_states(), h.n_states());
        // y = E (Cg xg + Dg Ch xh + Dg u)
        let y_xg = &e * &g.c;
        let y_xh = &e * &g.d * &h.c;
        let y_u = &e * &g.d;
        let mut a = DMatrix::zeros(ng + nh, ng + nh);
        let bg_dh = &g.b * &h.d;
        a.view_mut((0, 0), (ng, ng)).copy_from(&(&g.a + &bg_dh * &y_xg));
        a.view_mut((0, ng), (ng, nh)).copy_from(&(&g.b * &h.c + &bg_dh * &y_xh));
        a.view_mut((ng, 0), (nh, ng)).copy_from(&(&h.b * &y_xg));
        a.view_mut((ng, ng), (nh, nh)).copy_from(&(&h.a + &h.b * &y_xh));
        let b = stack_rows(&(&g.b + &bg_dh * &y_u), &(&h.b * &y_u));
        let c = stack_cols(&y_xg, &y_xh);
        StateSpace::assemble(a, b, c, y_u, &g.state_part, &h.state_part, g.in_part.clone(), g.out_part.clone())
    }

    /// Joins the state partitions of two operands node by node when they
    /// have the same block count, concatenating otherwise.
    #[allow(clippy::too_many_arguments)]
    fn assemble(
        a: DMatrix<f64>,
        b: DMatrix<f64>,
        c: DMatrix<f64>,
        d: DMatrix<f64>,
        pg: &Partition,
        ph: &Partition,
        input: Partition,
        output: Partition,
    ) -> Result<StateSpace> {
        let sys = StateSpace { a, b, c, d, state_part: pg.concat(ph), in_part: input, out_part: output };
        if pg.len() == ph.len() {
            let perm = interleave_permutation(pg, ph);
            let merged = pg.merge(ph).expect("equal block counts");
            Ok(sys.permute_states(&perm, merged))
        } else {
            Ok(sys)
        }
    }

    /// Reorders states so that new state `k` is old state `perm[k]`.
    pub fn permute_states(&self, perm: &[usize], partition: Partition) -> StateSpace {
        let n = perm.len();
        StateSpace {
            a: DMatrix::from_fn(n, n, |i, j| self.a[(perm[i], perm[j])]),
            b: DMatrix::from_fn(n, self.n_inputs(), |i, j| self.b[(perm[i], j)]),
            c: DMatrix::from_fn(self.n_outputs(), n, |i, j| self.c[(i, perm[j])]),
            d: self.d.clone(),
            state_part: partition,
            in_part: self.in_part.clone(),
            out_part: self.out_part.clone(),
        }
    }

    pub fn neg(&self) -> StateSpace {
        self.scale_output(-1.0)
    }

    pub fn scale_output(&self, k: f64) -> StateSpace {
        StateSpace { c: &self.c * k, d: &self.d * k, ..self.clone() }
    }

    /// `s G(s)` for strictly proper `G`: `[A | B; CA | CB]`.
    pub fn times_s(&self) -> Result<StateSpace> {
        if self.d.amax() != 0.0 {
            return Err(Error::ImproperBlock("s*G requires a strictly proper G".into()));
        }
        Ok(StateSpace { c: &self.c * &self.a, d: &self.c * &self.b, ..self.clone() })
    }

    /// `G^{-1}` for square `G` with invertible `D`:
    /// `[A - B D^{-1} C | B D^{-1}; -D^{-1} C | D^{-1}]`.
    pub fn inverse(&self) -> Result<StateSpace> {
        if self.n_inputs() != self.n_outputs() {
            return Err(Error::DimensionMismatch("inverse of a non-square system".into()));
        }
        let di = self.d.clone().try_inverse().ok_or(Error::Singular)?;
        if di.iter().any(|x| !x.is_finite()) || di.amax() * self.d.amax().max(1.0) > 1e12 {
            return Err(Error::Singular);
        }
        let bdi = &self.b * &di;
        Ok(StateSpace {
            a: &self.a - &bdi * &self.c,
            c: -(&di * &self.c),
            b: bdi,
            d: di,
            state_part: self.state_part.clone(),
            in_part: self.out_part.clone(),
            out_part: self.in_part.clone(),
        })
    }

    /// Minimal realization by orthogonal projection onto the controllable,
    /// then the observable, Krylov subspace. Directions below
    /// `tol * max(1, |A|, |B|, |C|)` are dropped; the state partition
    /// collapses to a single block.
    pub fn minimal(&self, tol: f64) -> StateSpace {
        let scale = self.a.amax().max(self.b.amax()).max(self.c.amax()).max(1.0);
        let v = krylov_basis(&self.a, &self.b, tol * scale);
        let (a, b, c) = (v.transpose() * &self.a * &v, v.transpose() * &self.b, &self.c * &v);
        let w = krylov_basis(&a.transpose(), &c.transpose(), tol * scale);
        let n = w.ncols();
        StateSpace {
            a: w.transpose() * a * &w,
            b: w.transpose() * b,
            c: c * w,
            d: self.d.clone(),
            state_part: Partition::single(n),
            in_part: self.in_part.clone(),
            out_part: self.out_part.clone(),
        }
    }

    pub fn is_hurwitz(&self) -> bool {
        if self.n_states() == 0 {
            return true;
        }
        let scale = 1.0 + self.a.amax();
        self.a.complex_eigenvalues().iter().all(|l| l.re < -1e-12 * scale)
    }

    /// `||G||_2` from the observability gramian.
    pub fn h2_norm(&self) -> Result<f64> {
        if self.d.amax() != 0.0 {
            return Err(Error::NonzeroFeedthrough);
        }
        if !self.is_hurwitz() {
            return Err(Error::NotHurwitz);
        }
        let q = lyapunov::observability_gramian(&self.a, &self.c)?;
        Ok((self.b.transpose() * q * &self.b).trace().max(0.0).sqrt())
    }
}

/// Orthonormal basis of `span [B, AB, A^2 B, ...]`.
fn krylov_basis(a: &DMatrix<f64>, b: &DMatrix<f64>, tol: f64) -> DMatrix<f64> {
    let n = a.nrows();
    let mut basis: Vec<DVector<f64>> = Vec::new();
    let mut block: Vec<DVector<f64>> = b.column_iter().map(|c| c.into_owned()).collect();
    while !block.is_empty() && basis.len() < n {
        let mut fresh = Vec::new();
        for mut v in block {
            for _ in 0..2 {
                for q in basis.iter().chain(&fresh) {
                    let proj = q.dot(&v);
                    v.axpy(-proj, q, 1.0);
                }
            }
            let norm = v.norm();
            if norm > tol && basis.len() + fresh.len() < n {
                fresh.push(v / norm);
            }
        }
        block = fresh.iter().map(|q| a * q).collect();
        basis.extend(fresh);
    }
    if basis.is_empty() {
        DMatrix::zeros(n, 0)
    } else {
        DMatrix::from_columns(&basis)
    }
}

fn stack_rows(top: &DMatrix<f64>, bottom: &DMatrix<f64>) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(top.nrows() + bottom.nrows(), top.ncols());
    out.view_mut((0, 0), top.shape()).copy_from(top);
    out.view_mut((top.nrows(), 0), bottom.shape()).copy_from(bottom);
    out
}

fn stack_cols(left: &DMatrix<f64>, right: &DMatrix<f64>) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(left.nrows(), left.ncols() + right.ncols());
    out.view_mut((0, 0), left.shape()).copy_from(left);
    out.view_mut((0, left.ncols()), right.shape()).copy_from(right);
    out
}

impl TryFrom<StateSpaceJson> for StateSpace {
    type Error = Error;

    fn try_from(j: StateSpaceJson) -> Result<Self> {
        let p = j.d.len();
        let m = j.d.first().map_or(0, Vec::len);
        let n = j.a.len();
        let a = matrix_from_rows(&j.a, n, n, "A")?;
        let b = matrix_from_rows(&j.b, n, m, "B")?;
        let c = matrix_from_rows(&j.c, p, n, "C")?;
        let d = matrix_from_rows(&j.d, p, m, "D")?;
        let sys = StateSpace::new(a, b, c, d)?;
        let input = j.partitions.input.unwrap_or_else(|| sys.in_part.clone());
        let output = j.partitions.output.unwrap_or_else(|| sys.out_part.clone());
        let state = match j.partitions.state {
            Some(s) => s,
            None if n == 0 => Partition::uniform(output.len(), 0),
            None => sys.state_part.clone(),
        };
        sys.with_partitions(state, input, output)
    }
}

impl From<StateSpace> for StateSpaceJson {
    fn from(s: StateSpace) -> Self {
        StateSpaceJson {
            a: matrix_to_rows(&s.a),
            b: matrix_to_rows(&s.b),
            c: matrix_to_rows(&s.c),
            d: matrix_to_rows(&s.d),
            partitions: PartitionsJson {
                state: Some(s.state_part),
                input: Some(s.in_part),
                output: Some(s.out_part),
            },
        }
    }
}
