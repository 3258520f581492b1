//! Spatially-invariant systems on the discrete torus `Z_n^d`: circular
//! convolution kernels, their DFT symbols, H2 norms and the divergence
//! certificate for relative, locally supported closed loops.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::consensus::Verdict;
use crate::error::{Error, Result};
use crate::lyapunov;
use crate::poly::Poly;
use crate::rational::{common_denominator, EntryJson, RationalEntry};

/// Kernel over `Z_n^d`, stored row-major by index `(i_1, ..., i_d)` with
/// `0 <= i_j < n`; offset `o` lives at index `o mod n`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvKernelArray {
    d: usize,
    n: usize,
    kernel: Vec<RationalEntry>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TapJson {
    pub offset: Vec<i64>,
    pub num: Vec<f64>,
    #[serde(default = "one")]
    pub den: Vec<f64>,
}

fn one() -> Vec<f64> {
    vec![1.0]
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KernelJson {
    pub d: usize,
    pub n: usize,
    #[serde(default)]
    pub taps: Vec<TapJson>,
}

impl Serialize for ConvKernelArray {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        KernelJson::from(self).serialize(s)
    }
}

impl<'de> Deserialize<'de> for ConvKernelArray {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        ConvKernelArray::try_from(KernelJson::deserialize(d)?).map_err(serde::de::Error::custom)
    }
}

impl From<&ConvKernelArray> for KernelJson {
    fn from(k: &ConvKernelArray) -> Self {
        let taps = k
            .kernel
            .iter()
            .enumerate()
            .filter(|(_, e)| !e.is_zero())
            .map(|(idx, e)| {
                let json = EntryJson::from(e.clone());
                TapJson { offset: k.offset_of(idx), num: json.num, den: json.den }
            })
            .collect();
        KernelJson { d: k.d, n: k.n, taps }
    }
}

impl TryFrom<KernelJson> for ConvKernelArray {
    type Error = Error;

    fn try_from(j: KernelJson) -> Result<Self> {
        let mut k = ConvKernelArray::zero(j.d, j.n)?;
        let mut seen = vec![false; k.len()];
        for tap in j.taps {
            let idx = k.index_of(&tap.offset)?;
            if seen[idx] {
                return Err(Error::InvalidArgument(format!("duplicate tap at offset {:?}", tap.offset)));
            }
            seen[idx] = true;
            k.kernel[idx] = RationalEntry::from_coeffs(&tap.num, &tap.den)?;
        }
        k.check_proper()?;
        Ok(k)
    }
}

impl ConvKernelArray {
    pub fn new(d: usize, n: usize, kernel: Vec<RationalEntry>) -> Result<Self> {
        let k = ConvKernelArray { d, n, kernel };
        if d == 0 || n == 0 {
            return Err(Error::InvalidArgument("kernel needs d >= 1 and n >= 1".into()));
        }
        if k.kernel.len() != n.pow(d as u32) {
            return Err(Error::DimensionMismatch(format!("kernel of length {} for n^d = {}", k.kernel.len(), n.pow(d as u32))));
        }
        k.check_proper()?;
        Ok(k)
    }

    fn check_proper(&self) -> Result<()> {
        if let Some(idx) = self.kernel.iter().position(|e| !e.is_proper()) {
            return Err(Error::InvalidArgument(format!("kernel entry at offset {:?} is improper", self.offset_of(idx))));
        }
        Ok(())
    }

    pub fn zero(d: usize, n: usize) -> Result<Self> {
        if d == 0 || n == 0 {
            return Err(Error::InvalidArgument("kernel needs d >= 1 and n >= 1".into()));
        }
        Ok(ConvKernelArray { d, n, kernel: vec![RationalEntry::zero(); n.pow(d as u32)] })
    }

    /// Identity kernel.
    pub fn delta(d: usize, n: usize) -> Result<Self> {
        let mut k = ConvKernelArray::zero(d, n)?;
        k.kernel[0] = RationalEntry::one();
        Ok(k)
    }

    /// All-ones kernel, `(T_1 x)_i = sum_m x_m`.
    pub fn ones(d: usize, n: usize) -> Result<Self> {
        let mut k = ConvKernelArray::zero(d, n)?;
        k.kernel.iter_mut().for_each(|e| *e = RationalEntry::one());
        Ok(k)
    }

    /// `delta - T_1 / n^d`.
    pub fn centering(d: usize, n: usize) -> Result<Self> {
        let mut k = ConvKernelArray::ones(d, n)?.scale(-1.0 / n.pow(d as u32) as f64);
        k.kernel[0] = k.kernel[0].add(&RationalEntry::one());
        Ok(k)
    }

    /// `-2d delta` plus unit taps at the `2d` nearest neighbours.
    pub fn laplacian_gain(d: usize, n: usize) -> Result<Self> {
        let mut k = ConvKernelArray::zero(d, n)?;
        for axis in 0..d {
            for step in [-1i64, 1] {
                let mut off = vec![0i64; d];
                off[axis] = step;
                let idx = k.index_of(&off)?;
                k.kernel[idx] = k.kernel[idx].add(&RationalEntry::one());
            }
        }
        k.kernel[0] = k.kernel[0].add(&RationalEntry::constant(-2.0 * d as f64));
        Ok(k)
    }

    pub fn from_taps(d: usize, n: usize, taps: &[(Vec<i64>, RationalEntry)]) -> Result<Self> {
        let mut k = ConvKernelArray::zero(d, n)?;
        for (off, e) in taps {
            let idx = k.index_of(off)?;
            k.kernel[idx] = k.kernel[idx].add(e);
        }
        k.check_proper()?;
        Ok(k)
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.kernel.len()
    }

    pub fn is_empty(&self) -> bool {
        self.kernel.is_empty()
    }

    pub fn entries(&self) -> &[RationalEntry] {
        &self.kernel
    }

    pub fn get(&self, offset: &[i64]) -> Result<&RationalEntry> {
        Ok(&self.kernel[self.index_of(offset)?])
    }

    pub fn set(&mut self, offset: &[i64], e: RationalEntry) -> Result<()> {
        let idx = self.index_of(offset)?;
        self.kernel[idx] = e;
        Ok(())
    }

    pub fn scale(&self, k: f64) -> Self {
        ConvKernelArray { d: self.d, n: self.n, kernel: self.kernel.iter().map(|e| e.scale(k)).collect() }
    }

    /// Row-major index of an arbitrary integer offset, wrapped mod `n`.
    pub fn index_of(&self, offset: &[i64]) -> Result<usize> {
        if offset.len() != self.d {
            return Err(Error::DimensionMismatch(format!("offset {offset:?} in dimension {}", self.d)));
        }
        let n = self.n as i64;
        Ok(offset.iter().fold(0usize, |acc, &o| acc * self.n + o.rem_euclid(n) as usize))
    }

    /// Offset of an index in `(-floor(n/2), floor(n/2)]^d`.
    pub fn offset_of(&self, idx: usize) -> Vec<i64> {
        index_coords(idx, self.n, self.d).into_iter().map(|c| canonical(c, self.n)).collect()
    }

    /// Circular sup-distance of an index from the origin.
    pub fn sup_distance(&self, idx: usize) -> usize {
        self.offset_of(idx).iter().map(|o| o.unsigned_abs() as usize).max().unwrap_or(0)
    }

    pub fn eval(&self, s: Complex64) -> Result<Vec<Complex64>> {
        self.kernel.iter().map(|e| e.eval(s)).collect()
    }
}

fn canonical(c: usize, n: usize) -> i64 {
    let (c, n) = (c as i64, n as i64);
    if c > n / 2 {
        c - n
    } else {
        c
    }
}

fn index_coords(mut idx: usize, n: usize, d: usize) -> Vec<usize> {
    let mut out = vec![0; d];
    for j in (0..d).rev() {
        out[j] = idx % n;
        idx /= n;
    }
    out
}

/// In-place d-dimensional DFT, `X_w = sum_m x_m exp(-2 pi i w.m / n)`; the
/// inverse includes the `1/n^d` factor.
pub fn dft_nd(values: &mut [Complex64], d: usize, n: usize, inverse: bool) {
    let mut planner = FftPlanner::new();
    let fft = if inverse { planner.plan_fft_inverse(n) } else { planner.plan_fft_forward(n) };
    let total = values.len();
    let mut line = vec![Complex64::new(0.0, 0.0); n];
    for axis in 0..d {
        let stride = n.pow((d - 1 - axis) as u32);
        for start in 0..total {
            if !(start / stride).is_multiple_of(n) {
                continue;
            }
            for (k, slot) in line.iter_mut().enumerate() {
                *slot = values[start + k * stride];
            }
            fft.process(&mut line);
            for (k, v) in line.iter().enumerate() {
                values[start + k * stride] = *v;
            }
        }
    }
    if inverse {
        let scale = 1.0 / total as f64;
        values.iter_mut().for_each(|v| *v *= scale);
    }
}

/// `(k * x)_i = sum_m k_m(s) x_{i-m}`.
pub fn convolve(k: &ConvKernelArray, x: &[Complex64], s: Complex64) -> Result<Vec<Complex64>> {
    if x.len() != k.len() {
        return Err(Error::DimensionMismatch(format!("signal of length {} for a kernel of length {}", x.len(), k.len())));
    }
    let kv = k.eval(s)?;
    let (n, d) = (k.n, k.d);
    let mut out = vec![Complex64::new(0.0, 0.0); x.len()];
    for (i, slot) in out.iter_mut().enumerate() {
        let ci = index_coords(i, n, d);
        for (m, km) in kv.iter().enumerate() {
            if *km == Complex64::new(0.0, 0.0) {
                continue;
            }
            let cm = index_coords(m, n, d);
            let j = ci.iter().zip(&cm).fold(0, |acc, (a, b)| acc * n + (a + n - b) % n);
            *slot += km * x[j];
        }
    }
    Ok(out)
}

/// DFT of a kernel over a common denominator: at frequency `w` the symbol
/// is `nums[w](s) / den(s)` with complex numerator coefficients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelSymbol {
    pub d: usize,
    pub n: usize,
    pub den: Vec<f64>,
    /// `nums[w][c]` is the `s^c` coefficient as `[re, im]`.
    pub nums: Vec<Vec<[f64; 2]>>,
}

impl KernelSymbol {
    pub fn eval(&self, w: usize, s: Complex64) -> Result<Complex64> {
        let den = Poly::new(self.den.clone()).eval(s);
        if den.norm() == 0.0 {
            return Err(Error::SingularAtS(s));
        }
        let num = self.nums[w].iter().rev().fold(Complex64::new(0.0, 0.0), |acc, c| acc * s + Complex64::new(c[0], c[1]));
        Ok(num / den)
    }
}

pub fn dft_symbol(k: &ConvKernelArray) -> KernelSymbol {
    let (den, nums) = common_denominator(&k.kernel);
    let len = nums.iter().map(|p| p.coeffs().len()).max().unwrap_or(1).max(1);
    let mut out = vec![vec![[0.0; 2]; len]; k.len()];
    let mut buf = vec![Complex64::new(0.0, 0.0); k.len()];
    for c in 0..len {
        for (b, p) in buf.iter_mut().zip(&nums) {
            *b = Complex64::from(p.coeff(c));
        }
        dft_nd(&mut buf, k.d, k.n, false);
        for (w, v) in buf.iter().enumerate() {
            out[w][c] = [v.re, v.im];
        }
    }
    KernelSymbol { d: k.d, n: k.n, den: den.coeffs().to_vec(), nums: out }
}

/// Symbol values at `s`, one per frequency.
pub fn symbol_at(k: &ConvKernelArray, s: Complex64) -> Result<Vec<Complex64>> {
    let mut v = k.eval(s)?;
    dft_nd(&mut v, k.d, k.n, false);
    Ok(v)
}

/// Controllable canonical form of a monic denominator.
fn ccf(den: &Poly) -> (DMatrix<f64>, DMatrix<f64>) {
    let k = den.degree();
    let lead = den.leading();
    let mut a = DMatrix::zeros(k, k);
    for i in 0..k.saturating_sub(1) {
        a[(i, i + 1)] = 1.0;
    }
    for j in 0..k {
        a[(k - 1, j)] = -den.coeff(j) / lead;
    }
    let mut b = DMatrix::zeros(k, 1);
    if k > 0 {
        b[(k - 1, 0)] = 1.0 / lead;
    }
    (a, b)
}

fn stable(den: &Poly) -> bool {
    den.roots().iter().all(|r| r.re < 0.0)
}

fn check_h2_entries(k: &ConvKernelArray) -> Result<()> {
    for (idx, e) in k.kernel.iter().enumerate() {
        if e.is_zero() {
            continue;
        }
        if !e.is_strictly_proper() {
            return Err(Error::NonzeroFeedthrough);
        }
        if !stable(e.den()) {
            return Err(Error::UnstableKernelEntry(k.offset_of(idx)));
        }
    }
    Ok(())
}

fn entry_h2_squared(e: &RationalEntry) -> Result<f64> {
    let (a, b) = ccf(e.den());
    let p = lyapunov::controllability_gramian(&a, &b)?;
    let c = DMatrix::from_fn(1, a.nrows(), |_, j| e.num().coeff(j));
    Ok((&c * p * c.transpose())[(0, 0)])
}

/// `sum_m ||k_m||_2^2`.
pub fn si_h2_norm(k: &ConvKernelArray) -> Result<f64> {
    check_h2_entries(k)?;
    k.kernel.iter().filter(|e| !e.is_zero()).map(entry_h2_squared).sum()
}

/// `(1/n^d) sum_w ||k^(w)||_2^2` with one gramian of the common denominator.
pub fn si_h2_norm_parseval(k: &ConvKernelArray) -> Result<f64> {
    check_h2_entries(k)?;
    let sym = dft_symbol(k);
    let (a, b) = ccf(&Poly::new(sym.den.clone()));
    let order = a.nrows();
    if order == 0 {
        return Ok(0.0);
    }
    let p = lyapunov::controllability_gramian(&a, &b)?.map(Complex64::from);
    let total: f64 = sym
        .nums
        .iter()
        .map(|num| {
            let c = DMatrix::from_fn(1, order, |_, j| num.get(j).map_or(Complex64::new(0.0, 0.0), |v| Complex64::new(v[0], v[1])));
            (&c * &p * c.adjoint())[(0, 0)].re
        })
        .sum();
    Ok(total / k.len() as f64)
}

/// `K T_1 = 0`: the kernel sums to the zero transfer function.
pub fn is_relative_si(k: &ConvKernelArray) -> bool {
    RationalEntry::sum(&k.kernel).is_zero()
}

/// Every entry beyond circular sup-distance `b` is zero.
pub fn is_cl_tf_structured_si(k: &ConvKernelArray, b: usize) -> bool {
    k.kernel.iter().enumerate().all(|(idx, e)| e.is_zero() || k.sup_distance(idx) <= b)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SpatialCertificate {
    pub verdict: Verdict,
    pub d: usize,
    pub n: usize,
    pub b: usize,
    pub excluded_offsets: Vec<Vec<i64>>,
    pub excluded_count: usize,
    /// The term every excluded offset contributes to the objective.
    pub divergent_term: RationalEntry,
    pub proof_note: String,
}

/// Relative controllers for `x' = u + w`, `z = T_c x` with `b`-local closed
/// loops: each excluded offset contributes `(0 - 1/n^d)/s` to `T_c Phi_x`.
pub fn spatial_feasibility(d: usize, n: usize, b: usize, gamma: f64) -> Result<SpatialCertificate> {
    if d == 0 || b < 1 {
        return Err(Error::InvalidArgument(format!("need d >= 1 and b >= 1, got d = {d}, b = {b}")));
    }
    if 2 * b + 1 >= n {
        return Err(Error::InvalidArgument(format!(
            "degenerate locality: the radius-{b} ball covers all of Z_{n}, no offsets are excluded"
        )));
    }
    if !(gamma >= 0.0) {
        return Err(Error::InvalidArgument("gamma must be nonnegative".into()));
    }
    let k = ConvKernelArray::zero(d, n)?;
    let excluded: Vec<Vec<i64>> = (0..k.len()).filter(|&i| k.sup_distance(i) > b).map(|i| k.offset_of(i)).collect();
    let nd = n.pow(d as u32) as f64;
    let divergent = RationalEntry::from_coeffs(&[-1.0 / nd], &[0.0, 1.0])?;
    let count = excluded.len();
    Ok(SpatialCertificate {
        verdict: Verdict::Infeasible,
        d,
        n,
        b,
        excluded_count: count,
        excluded_offsets: excluded,
        divergent_term: divergent,
        proof_note: format!(
            "s Phi_x - Phi_u = delta and sum_m (Phi_u)_m = 0 give sum_m (Phi_x)_m = 1/s; at each of the {count} offsets \
             beyond sup-distance {b}, (Phi_u)_j = 0 forces (Phi_x)_j = 0 and (T_c Phi_x)_j = (0 - 1/{nd})/s, \
             which has a pole at s = 0, so the H2 objective is unbounded"
        ),
    })
}

/// Closed loops of `x' = u + w` under a spatially-invariant controller,
/// evaluated per frequency.
#[derive(Debug, Clone, PartialEq)]
pub struct SiClosedLoops {
    pub controller: ConvKernelArray,
}

pub fn si_closed_loops(k: &ConvKernelArray) -> SiClosedLoops {
    SiClosedLoops { controller: k.clone() }
}

impl SiClosedLoops {
    fn resolvent(&self, s: Complex64) -> Result<(Vec<Complex64>, Vec<Complex64>)> {
        let khat = symbol_at(&self.controller, s)?;
        let scale = khat.iter().fold(s.norm(), |m, z| m.max(z.norm())).max(1.0);
        let mut inv = Vec::with_capacity(khat.len());
        for (w, kw) in khat.iter().enumerate() {
            let gap = s - kw;
            if gap.norm() <= 1e-12 * scale {
                return Err(Error::SymbolPoleClash(index_coords(w, self.controller.n, self.controller.d)));
            }
            inv.push(1.0 / gap);
        }
        Ok((khat, inv))
    }

    /// `1/(s - k^(w))` per frequency.
    pub fn phi_x_symbol(&self, s: Complex64) -> Result<Vec<Complex64>> {
        Ok(self.resolvent(s)?.1)
    }

    /// `k^(w)/(s - k^(w))` per frequency.
    pub fn phi_u_symbol(&self, s: Complex64) -> Result<Vec<Complex64>> {
        let (khat, inv) = self.resolvent(s)?;
        Ok(khat.iter().zip(&inv).map(|(k, r)| k * r).collect())
    }

    fn kernel(&self, mut sym: Vec<Complex64>) -> Vec<Complex64> {
        dft_nd(&mut sym, self.controller.d, self.controller.n, true);
        sym
    }

    pub fn phi_x_kernel(&self, s: Complex64) -> Result<Vec<Complex64>> {
        Ok(self.kernel(self.phi_x_symbol(s)?))
    }

    pub fn phi_u_kernel(&self, s: Complex64) -> Result<Vec<Complex64>> {
        Ok(self.kernel(self.phi_u_symbol(s)?))
    }

    /// `max_w |s phi_x - phi_u - 1|`.
    pub fn affine_residual(&self, s: Complex64) -> Result<f64> {
        let (khat, inv) = self.resolvent(s)?;
        Ok(khat.iter().zip(&inv).map(|(k, r)| (s * r - k * r - 1.0).norm()).fold(0.0, f64::max))
    }

    /// Both kernels vanish beyond sup-distance `b` at every point in `s`.
    pub fn is_local(&self, b: usize, s: &[Complex64], tol: f64) -> Result<bool> {
        let k = &self.controller;
        for &sv in s {
            for ker in [self.phi_x_kernel(sv)?, self.phi_u_kernel(sv)?] {
                if ker.iter().enumerate().any(|(i, v)| k.sup_distance(i) > b && v.norm() > tol) {
                    return Ok(false);
                }
            }
        }
        Ok(true)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn offsets_round_trip() {
        let k = ConvKernelArray::zero(2, 5).unwrap();
        for idx in 0..k.len() {
            assert_eq!(k.index_of(&k.offset_of(idx)).unwrap(), idx);
        }
        let k4 = ConvKernelArray::zero(1, 4).unwrap();
        assert_eq!(k4.offset_of(2), vec![2]);
        assert_eq!(k4.offset_of(3), vec![-1]);
    }

    #[test]
    fn shift_kernel_shifts() {
        let k = ConvKernelArray::from_taps(1, 4, &[(vec![1], RationalEntry::one())]).unwrap();
        let x: Vec<Complex64> = (0..4).map(|i| c(i as f64)).collect();
        let y = convolve(&k, &x, c(1.0)).unwrap();
        assert_eq!(y, vec![c(3.0), c(0.0), c(1.0), c(2.0)]);
    }

    #[test]
    fn simple_symbols() {
        let ones = dft_symbol(&ConvKernelArray::ones(2, 3).unwrap());
        assert!((ones.eval(0, c(1.0)).unwrap() - 9.0).norm() < 1e-12);
        assert!((1..9).all(|w| ones.eval(w, c(1.0)).unwrap().norm() < 1e-12));
        let tc = dft_symbol(&ConvKernelArray::centering(1, 5).unwrap());
        assert!(tc.eval(0, c(2.0)).unwrap().norm() < 1e-12);
        assert!((1..5).all(|w| (tc.eval(w, c(2.0)).unwrap() - 1.0).norm() < 1e-12));
    }

    #[test]
    fn degenerate_locality_is_rejected() {
        assert!(spatial_feasibility(3, 3, 1, 1.0).is_err());
        assert_eq!(spatial_feasibility(1, 8, 1, 1.0).unwrap().excluded_count, 5);
    }
}
