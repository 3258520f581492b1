//! Scalar rational transfer functions and block-partitioned rational
//! transfer matrices.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::partition::Partition;
use crate::poly::{quadratic_factor, Poly};

/// Largest numerator/denominator degree carried by matrix arithmetic.
pub const DEGREE_CAP: usize = 64;

/// Relative threshold below which a numerator counts as zero.
pub const ZERO_TOL: f64 = 1e-10;

/// Tolerance for matching a numerator root against a denominator root.
pub const ROOT_MATCH_TOL: f64 = 1e-8;

/// Roots closer than this (relative) are treated as one repeated root.
const CLUSTER_TOL: f64 = 1e-3;

/// `num(s) / den(s)` with a monic denominator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "EntryJson", into = "EntryJson")]
pub struct RationalEntry {
    num: Poly,
    den: Poly,
}

/// Wire format: `{"num": [...], "den": [...]}`, ascending powers of `s`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EntryJson {
    pub num: Vec<f64>,
    #[serde(default = "one_vec")]
    pub den: Vec<f64>,
}

fn one_vec() -> Vec<f64> {
    vec![1.0]
}

/// A repeated root (or conjugate pair) of a polynomial.
#[derive(Debug, Clone, Copy)]
pub(crate) struct RootCluster {
    center: Complex64,
    multiplicity: usize,
}

impl RootCluster {
    fn factor(&self) -> Poly {
        if self.center.im == 0.0 {
            Poly::new(vec![-self.center.re, 1.0])
        } else {
            quadratic_factor(self.center)
        }
    }
}

/// Groups the roots of `p` into clusters; conjugate pairs are reported
/// once with a positive imaginary part.
pub(crate) fn root_clusters(p: &Poly) -> Vec<RootCluster> {
    clusters_of(&p.roots())
}

pub(crate) fn clusters_of(roots: &[Complex64]) -> Vec<RootCluster> {
    let mut used = vec![false; roots.len()];
    let mut out = Vec::new();
    for i in 0..roots.len() {
        if used[i] {
            continue;
        }
        let tol = CLUSTER_TOL * (1.0 + roots[i].norm());
        let members: Vec<usize> = (i..roots.len())
            .filter(|&j| !used[j] && (roots[j] - roots[i]).norm() <= tol)
            .collect();
        for &j in &members {
            used[j] = true;
        }
        let center = members.iter().map(|&j| roots[j]).sum::<Complex64>() / members.len() as f64;
        let real_tol = 1e-7 * (1.0 + center.norm());
        if center.im.abs() <= real_tol {
            out.push(RootCluster { center: Complex64::new(center.re, 0.0), multiplicity: members.len() });
        } else if center.im > 0.0 {
            out.push(RootCluster { center, multiplicity: members.len() });
        }
    }
    out
}

impl RationalEntry {
    /// Normalizes the denominator to be monic.
    pub fn new(num: Poly, den: Poly) -> Result<Self> {
        if den.is_zero() {
            return Err(Error::InvalidArgument("denominator is zero".into()));
        }
        let lead = den.leading();
        Ok(RationalEntry { num: num.scale(1.0 / lead), den: den.scale(1.0 / lead) })
    }

    pub fn from_coeffs(num: &[f64], den: &[f64]) -> Result<Self> {
        RationalEntry::new(Poly::new(num.to_vec()), Poly::new(den.to_vec()))
    }

    pub fn zero() -> Self {
        RationalEntry { num: Poly::zero(), den: Poly::one() }
    }

    pub fn one() -> Self {
        RationalEntry::constant(1.0)
    }

    pub fn constant(x: f64) -> Self {
        RationalEntry { num: Poly::constant(x), den: Poly::one() }
    }

    pub fn from_poly(num: Poly) -> Self {
        RationalEntry { num, den: Poly::one() }
    }

    /// `1 / s`.
    pub fn integrator() -> Self {
        RationalEntry { num: Poly::one(), den: Poly::monomial(1, 1.0) }
    }

    pub fn num(&self) -> &Poly {
        &self.num
    }

    pub fn den(&self) -> &Poly {
        &self.den
    }

    pub fn degree(&self) -> usize {
        self.num.degree().max(self.den.degree())
    }

    /// Numerator negligible relative to the entry's largest coefficient.
    pub fn is_zero(&self) -> bool {
        let scale = self.num.max_abs().max(self.den.max_abs());
        self.num.coeffs().iter().all(|c| c.abs() < ZERO_TOL * scale)
    }

    pub fn is_proper(&self) -> bool {
        self.is_zero() || self.num.degree() <= self.den.degree()
    }

    pub fn is_strictly_proper(&self) -> bool {
        self.is_zero() || self.num.degree() < self.den.degree()
    }

    /// Value at `s -> infinity` of a proper entry.
    pub fn direct_term(&self) -> f64 {
        if self.is_zero() || self.num.degree() < self.den.degree() {
            0.0
        } else {
            self.num.coeff(self.den.degree())
        }
    }

    pub fn eval(&self, s: Complex64) -> Result<Complex64> {
        let d = self.den.eval(s);
        if d.norm() <= 1e-14 * self.den.eval_scale(s) {
            return Err(Error::SingularAtS(s));
        }
        Ok(self.num.eval(s) / d)
    }

    pub fn neg(&self) -> Self {
        RationalEntry { num: -&self.num, den: self.den.clone() }
    }

    pub fn scale(&self, k: f64) -> Self {
        RationalEntry { num: self.num.scale(k), den: self.den.clone() }
    }

    pub fn add(&self, o: &RationalEntry) -> Self {
        if self.is_zero() {
            return o.clone();
        }
        if o.is_zero() {
            return self.clone();
        }
        if self.den.approx_eq(&o.den, 1e-13) {
            return RationalEntry { num: &self.num + &o.num, den: self.den.clone() };
        }
        let num = &(&self.num * &o.den) + &(&o.num * &self.den);
        RationalEntry { num, den: &self.den * &o.den }.cancel()
    }

    pub fn sub(&self, o: &RationalEntry) -> Self {
        self.add(&o.neg())
    }

    /// Sum over a common denominator, without intermediate cancellation.
    pub fn sum<'a>(entries: impl IntoIterator<Item = &'a RationalEntry>) -> Self {
        let entries: Vec<RationalEntry> = entries.into_iter().cloned().collect();
        let (den, nums) = common_denominator(&entries);
        let num = nums.iter().fold(Poly::zero(), |acc, p| &acc + p);
        let out = RationalEntry { num, den };
        if out.is_zero() {
            RationalEntry::zero()
        } else {
            out.cancel()
        }
    }

    pub fn mul(&self, o: &RationalEntry) -> Self {
        if self.is_zero() || o.is_zero() {
            return RationalEntry::zero();
        }
        let out = RationalEntry { num: &self.num * &o.num, den: &self.den * &o.den };
        if self.den.degree() == 0 || o.den.degree() == 0 {
            out
        } else {
            out.cancel()
        }
    }

    pub fn div(&self, o: &RationalEntry) -> Result<Self> {
        if o.is_zero() {
            return Err(Error::InvalidArgument("division by a zero rational entry".into()));
        }
        RationalEntry::new(&self.num * &o.den, &self.den * &o.num).map(|e| e.cancel())
    }

    /// Multiplies by `s`.
    pub fn times_s(&self) -> Self {
        RationalEntry { num: &self.num * &Poly::monomial(1, 1.0), den: self.den.clone() }.cancel()
    }

    /// Removes common factors: powers of `s` first, then every denominator
    /// root (with multiplicity) that the numerator shares to within
    /// [`ROOT_MATCH_TOL`].
    pub fn cancel(&self) -> Self {
        if self.is_zero() {
            return RationalEntry::zero();
        }
        let k = self.num.low_zeros(1e-12).min(self.den.low_zeros(1e-12));
        let num = self.num.shift_down(k);
        let den = self.den.shift_down(k);
        if den.degree() == 0 || num.degree() == 0 {
            return RationalEntry { num: num.scale(1.0 / den.leading()), den: den.scale(1.0 / den.leading()) };
        }
        let clusters = root_clusters(&den);
        let mut out = RationalEntry { num, den };
        out.cancel_clusters(&clusters);
        out
    }

    /// `num / den` where the roots of `den` are already known.
    pub(crate) fn with_known_poles(num: Poly, den: Poly, clusters: &[RootCluster]) -> Result<Self> {
        let mut out = RationalEntry::new(num, den)?;
        if out.is_zero() {
            return Ok(RationalEntry::zero());
        }
        out.cancel_clusters(clusters);
        Ok(out)
    }

    fn cancel_clusters(&mut self, clusters: &[RootCluster]) {
        for cl in clusters {
            let f = cl.factor();
            for _ in 0..cl.multiplicity {
                if self.num.degree() < f.degree() || self.den.degree() < f.degree() {
                    break;
                }
                let c = cl.center;
                let scale = self.num.eval_scale(c);
                if scale == 0.0 || self.num.eval(c).norm() > ROOT_MATCH_TOL * scale {
                    break;
                }
                match (self.num.divide_exact(&f, ROOT_MATCH_TOL), self.den.divide_exact(&f, ROOT_MATCH_TOL)) {
                    (Some(n), Some(d)) => {
                        self.num = n;
                        self.den = d;
                    }
                    _ => break,
                }
            }
        }
        let lead = self.den.leading();
        self.num = self.num.scale(1.0 / lead);
        self.den = self.den.scale(1.0 / lead);
    }
}

/// Product of the distinct denominators and the numerators rescaled to it.
pub(crate) fn common_denominator(entries: &[RationalEntry]) -> (Poly, Vec<Poly>) {
    let mut dens: Vec<Poly> = Vec::new();
    for e in entries.iter().filter(|e| !e.is_zero()) {
        if !dens.iter().any(|d| d.approx_eq(e.den(), 1e-12)) {
            dens.push(e.den().clone());
        }
    }
    let den = dens.iter().fold(Poly::one(), |acc, d| &acc * d);
    let nums = entries
        .iter()
        .map(|e| {
            if e.is_zero() {
                return Poly::zero();
            }
            dens.iter()
                .filter(|d| !d.approx_eq(e.den(), 1e-12))
                .fold(e.num().clone(), |acc, d| &acc * d)
        })
        .collect();
    (den, nums)
}

impl TryFrom<EntryJson> for RationalEntry {
    type Error = Error;

    fn try_from(e: EntryJson) -> Result<Self> {
        RationalEntry::from_coeffs(&e.num, &e.den)
    }
}

impl From<RationalEntry> for EntryJson {
    fn from(e: RationalEntry) -> Self {
        EntryJson { num: e.num.coeffs().to_vec(), den: e.den.coeffs().to_vec() }
    }
}

/// `p x m` grid of rational entries with row and column block partitions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MatrixJson", into = "MatrixJson")]
pub struct RationalMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<RationalEntry>,
    row_part: Partition,
    col_part: Partition,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct MatrixPartitionsJson {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rows: Option<Partition>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cols: Option<Partition>,
}

/// Wire format: `{"entries": [[{"num":..,"den":..}, ...], ...],
/// "partitions": {"rows": [...], "cols": [...]}}`. Missing partitions
/// default to one channel per block.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MatrixJson {
    pub entries: Vec<Vec<RationalEntry>>,
    #[serde(default)]
    pub partitions: MatrixPartitionsJson,
}

impl RationalMatrix {
    pub fn new(rows: usize, cols: usize, entries: Vec<RationalEntry>, row_part: Partition, col_part: Partition) -> Result<Self> {
        if entries.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!("{} entries for a {rows}x{cols} matrix", entries.len())));
        }
        row_part.check_total(rows, "row")?;
        col_part.check_total(cols, "column")?;
        Ok(RationalMatrix { rows, cols, entries, row_part, col_part })
    }

    /// From nested rows; scalar partitions.
    pub fn from_rows(rows: Vec<Vec<RationalEntry>>) -> Result<Self> {
        let p = rows.len();
        let m = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != m) {
            return Err(Error::DimensionMismatch("ragged rational matrix".into()));
        }
        RationalMatrix::new(p, m, rows.into_iter().flatten().collect(), Partition::ones(p), Partition::ones(m))
    }

    pub fn from_fn(rows: usize, cols: usize, f: impl Fn(usize, usize) -> RationalEntry) -> Self {
        let entries = (0..rows).flat_map(|i| (0..cols).map(move |j| (i, j))).map(|(i, j)| f(i, j)).collect();
        RationalMatrix { rows, cols, entries, row_part: Partition::ones(rows), col_part: Partition::ones(cols) }
    }

    pub fn from_real(m: &DMatrix<f64>) -> Self {
        RationalMatrix::from_fn(m.nrows(), m.ncols(), |i, j| RationalEntry::constant(m[(i, j)]))
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        RationalMatrix::from_fn(rows, cols, |_, _| RationalEntry::zero())
    }

    pub fn identity(n: usize) -> Self {
        RationalMatrix::from_fn(n, n, |i, j| if i == j { RationalEntry::one() } else { RationalEntry::zero() })
    }

    pub fn with_partitions(mut self, row_part: Partition, col_part: Partition) -> Result<Self> {
        row_part.check_total(self.rows, "row")?;
        col_part.check_total(self.cols, "column")?;
        self.row_part = row_part;
        self.col_part = col_part;
        Ok(self)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row_partition(&self) -> &Partition {
        &self.row_part
    }

    pub fn col_partition(&self) -> &Partition {
        &self.col_part
    }

    pub fn get(&self, i: usize, j: usize) -> &RationalEntry {
        &self.entries[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, e: RationalEntry) {
        self.entries[i * self.cols + j] = e;
    }

    pub fn entries(&self) -> &[RationalEntry] {
        &self.entries
    }

    pub fn max_degree(&self) -> usize {
        self.entries.iter().map(RationalEntry::degree).max().unwrap_or(0)
    }

    pub fn map(&self, f: impl Fn(&RationalEntry) -> RationalEntry) -> Self {
        RationalMatrix { entries: self.entries.iter().map(f).collect(), ..self.clone() }
    }

    pub fn eval(&self, s: Complex64) -> Result<DMatrix<Complex64>> {
        let mut out = DMatrix::zeros(self.rows, self.cols);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out[(i, j)] = self.get(i, j).eval(s)?;
            }
        }
        Ok(out)
    }

    pub fn is_proper(&self) -> bool {
        self.entries.iter().all(RationalEntry::is_proper)
    }

    pub fn is_strictly_proper(&self) -> bool {
        self.entries.iter().all(RationalEntry::is_strictly_proper)
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(RationalEntry::is_zero)
    }

    pub fn direct_term(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.rows, self.cols, |i, j| self.get(i, j).direct_term())
    }

    pub fn transpose(&self) -> Self {
        let mut t = RationalMatrix::from_fn(self.cols, self.rows, |i, j| self.get(j, i).clone());
        t.row_part = self.col_part.clone();
        t.col_part = self.row_part.clone();
        t
    }

    pub fn neg(&self) -> Self {
        self.map(RationalEntry::neg)
    }

    pub fn scale(&self, k: f64) -> Self {
        self.map(|e| e.scale(k))
    }

    pub fn times_s(&self) -> Self {
        self.map(RationalEntry::times_s)
    }

    pub fn add(&self, o: &RationalMatrix) -> Result<Self> {
        self.same_shape(o)?;
        let entries = self.entries.iter().zip(&o.entries).map(|(a, b)| a.add(b)).collect();
        RationalMatrix { entries, ..self.clone() }.checked()
    }

    pub fn sub(&self, o: &RationalMatrix) -> Result<Self> {
        self.add(&o.neg())
    }

    pub fn mul(&self, o: &RationalMatrix) -> Result<Self> {
        if self.cols != o.rows {
            return Err(Error::DimensionMismatch(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, o.rows, o.cols
            )));
        }
        let mut entries = Vec::with_capacity(self.rows * o.cols);
        for i in 0..self.rows {
            for j in 0..o.cols {
                let mut acc = RationalEntry::zero();
                for k in 0..self.cols {
                    let a = self.get(i, k);
                    let b = o.get(k, j);
                    if !a.is_zero() && !b.is_zero() {
                        acc = acc.add(&a.mul(b));
                    }
                }
                entries.push(acc);
            }
        }
        RationalMatrix { rows: self.rows, cols: o.cols, entries, row_part: self.row_part.clone(), col_part: o.col_part.clone() }
            .checked()
    }

    /// Left multiplication by a real matrix.
    pub fn left_mul_real(&self, m: &DMatrix<f64>) -> Result<Self> {
        let mut out = RationalMatrix::from_real(m).mul(self)?;
        out.col_part = self.col_part.clone();
        Ok(out)
    }

    /// Inverse by Gauss-Jordan elimination over the field of rational
    /// functions, cancelling common factors after every step.
    pub fn inverse(&self) -> Result<Self> {
        if self.rows != self.cols {
            return Err(Error::DimensionMismatch("inverse of a non-square matrix".into()));
        }
        let n = self.rows;
        let mut a: Vec<Vec<RationalEntry>> = (0..n).map(|i| (0..n).map(|j| self.get(i, j).clone()).collect()).collect();
        let mut inv: Vec<Vec<RationalEntry>> = (0..n)
            .map(|i| (0..n).map(|j| if i == j { RationalEntry::one() } else { RationalEntry::zero() }).collect())
            .collect();
        for col in 0..n {
            let pivot = pick_pivot(&a, col).ok_or(Error::Singular)?;
            a.swap(col, pivot);
            inv.swap(col, pivot);
            let p = a[col][col].clone();
            for j in 0..n {
                a[col][j] = a[col][j].div(&p)?;
                inv[col][j] = inv[col][j].div(&p)?;
            }
            for r in 0..n {
                if r == col || a[r][col].is_zero() {
                    continue;
                }
                let f = a[r][col].clone();
                for j in 0..n {
                    if !a[col][j].is_zero() {
                        a[r][j] = a[r][j].sub(&f.mul(&a[col][j]));
                    }
                    if !inv[col][j].is_zero() {
                        inv[r][j] = inv[r][j].sub(&f.mul(&inv[col][j]));
                    }
                }
            }
        }
        RationalMatrix {
            rows: n,
            cols: n,
            entries: inv.into_iter().flatten().collect(),
            row_part: self.col_part.clone(),
            col_part: self.row_part.clone(),
        }
        .checked()
    }

    /// Row sums `K(s) 1`.
    pub fn row_sums(&self) -> Vec<RationalEntry> {
        (0..self.rows)
            .map(|i| RationalEntry::sum((0..self.cols).map(|j| self.get(i, j))))
            .collect()
    }

    fn same_shape(&self, o: &RationalMatrix) -> Result<()> {
        if self.rows != o.rows || self.cols != o.cols {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} vs {}x{}",
                self.rows, self.cols, o.rows, o.cols
            )));
        }
        Ok(())
    }

    fn checked(self) -> Result<Self> {
        let d = self.max_degree();
        if d > DEGREE_CAP {
            return Err(Error::DegreeOverflow(d, DEGREE_CAP));
        }
        Ok(self)
    }
}

/// Generic point used to rank pivot candidates.
const PIVOT_PROBE: Complex64 = Complex64::new(0.731_285_4, 0.419_337_1);

fn pick_pivot(a: &[Vec<RationalEntry>], col: usize) -> Option<usize> {
    (col..a.len())
        .filter(|&r| !a[r][col].is_zero())
        .map(|r| (r, a[r][col].eval(PIVOT_PROBE).map(|v| v.norm()).unwrap_or(0.0)))
        .max_by(|x, y| x.1.total_cmp(&y.1))
        .map(|(r, _)| r)
}

impl TryFrom<MatrixJson> for RationalMatrix {
    type Error = Error;

    fn try_from(m: MatrixJson) -> Result<Self> {
        let mut out = RationalMatrix::from_rows(m.entries)?;
        let rows = m.partitions.rows.unwrap_or_else(|| Partition::ones(out.rows));
        let cols = m.partitions.cols.unwrap_or_else(|| Partition::ones(out.cols));
        out = out.with_partitions(rows, cols)?;
        Ok(out)
    }
}

impl From<RationalMatrix> for MatrixJson {
    fn from(m: RationalMatrix) -> Self {
        let entries = (0..m.rows).map(|i| (0..m.cols).map(|j| m.get(i, j).clone()).collect()).collect();
        MatrixJson {
            entries,
            partitions: MatrixPartitionsJson { rows: Some(m.row_part), cols: Some(m.col_part) },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn entry(num: &[f64], den: &[f64]) -> RationalEntry {
        RationalEntry::from_coeffs(num, den).unwrap()
    }

    #[test]
    fn first_order_lag() {
        let e = entry(&[1.0], &[1.0, 1.0]);
        assert!((e.eval(c(1.0, 0.0)).unwrap() - c(0.5, 0.0)).norm() < 1e-15);
        assert!(matches!(e.eval(c(-1.0, 0.0)), Err(Error::SingularAtS(_))));
    }

    #[test]
    fn denominators_are_monic() {
        let e = entry(&[2.0], &[4.0, 2.0]);
        assert_eq!(e.den().coeffs(), &[2.0, 1.0]);
        assert_eq!(e.num().coeffs(), &[1.0]);
        assert!(RationalEntry::from_coeffs(&[1.0], &[]).is_err());
    }

    #[test]
    fn zero_test_is_relative() {
        assert!(entry(&[1e-12, 0.0], &[3.0, 1.0]).is_zero());
        assert!(!entry(&[1e-6], &[3.0, 1.0]).is_zero());
        assert!(RationalEntry::zero().is_zero());
    }

    #[test]
    fn cancellation_with_multiplicity() {
        // (s+1)^3 (s+2) / ((s+1)^4 (s+3))
        let r = |x: f64| c(x, 0.0);
        let num = Poly::from_roots(&[r(-1.0), r(-1.0), r(-1.0), r(-2.0)]);
        let den = Poly::from_roots(&[r(-1.0), r(-1.0), r(-1.0), r(-1.0), r(-3.0)]);
        let e = RationalEntry::new(num, den).unwrap().cancel();
        assert_eq!(e.num().degree(), 1);
        assert_eq!(e.den().degree(), 2);
        let s = c(0.3, 1.2);
        let want = (s + 2.0) / ((s + 1.0) * (s + 3.0));
        assert!((e.eval(s).unwrap() - want).norm() < 1e-10);
    }

    #[test]
    fn cancellation_of_complex_pairs_and_monomials() {
        let pair = [c(-0.5, 2.0), c(-0.5, -2.0)];
        let num = &Poly::from_roots(&pair) * &Poly::monomial(2, 3.0);
        let den = &Poly::from_roots(&[pair[0], pair[1], c(-4.0, 0.0)]) * &Poly::monomial(1, 1.0);
        let e = RationalEntry::new(num, den).unwrap().cancel();
        assert_eq!(e.num().coeffs().len(), 2);
        assert_eq!(e.den().degree(), 1);
        let s = c(1.0, 1.0);
        assert!((e.eval(s).unwrap() - 3.0 * s / (s + 4.0)).norm() < 1e-12);
    }

    #[test]
    fn no_spurious_cancellation() {
        let e = entry(&[1.0, 1.0], &[2.0 + 1e-4, 1.0]).cancel();
        assert_eq!(e.den().degree(), 1);
    }

    #[test]
    fn entry_arithmetic() {
        let a = entry(&[1.0], &[1.0, 1.0]);
        let b = entry(&[1.0], &[2.0, 1.0]);
        let s = c(0.7, -0.4);
        let va = a.eval(s).unwrap();
        let vb = b.eval(s).unwrap();
        assert!((a.add(&b).eval(s).unwrap() - (va + vb)).norm() < 1e-14);
        assert!((a.mul(&b).eval(s).unwrap() - va * vb).norm() < 1e-14);
        assert!((a.div(&b).unwrap().eval(s).unwrap() - va / vb).norm() < 1e-14);
        assert!(a.sub(&a).is_zero());
        assert!(a.div(&RationalEntry::zero()).is_err());
    }

    #[test]
    fn matrix_inverse_matches_dense_inverse() {
        let m = RationalMatrix::from_rows(vec![
            vec![entry(&[1.0], &[0.0, 1.0]), entry(&[1.0], &[0.0, 1.0, 1.0]), RationalEntry::zero()],
            vec![entry(&[1.0], &[0.0, 1.0, 1.0]), entry(&[1.0], &[0.0, 1.0]), entry(&[1.0], &[0.0, 2.0, 1.0])],
            vec![RationalEntry::zero(), entry(&[1.0], &[0.0, 2.0, 1.0]), entry(&[1.0], &[0.0, 1.0])],
        ])
        .unwrap();
        let inv = m.inverse().unwrap();
        for s in [c(1.0, 0.0), c(2.0, 1.0), c(0.5, -3.0)] {
            let dense = m.eval(s).unwrap().try_inverse().unwrap();
            let got = inv.eval(s).unwrap();
            assert!((dense - got).iter().all(|z| z.norm() < 1e-10));
        }
        assert!(RationalMatrix::zeros(2, 2).inverse().is_err());
    }

    #[test]
    fn json_round_trip() {
        let text = r#"{"entries":[[{"num":[1],"den":[1,1]},{"num":[0]}]]}"#;
        let m: RationalMatrix = serde_json::from_str(text).unwrap();
        assert_eq!((m.rows(), m.cols()), (1, 2));
        assert!(m.get(0, 1).is_zero());
        let back: RationalMatrix = serde_json::from_str(&serde_json::to_string(&m).unwrap()).unwrap();
        assert_eq!(back, m);
    }
}
