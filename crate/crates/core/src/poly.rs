//! Real polynomials in `s` with ascending coefficients.

use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::DMatrix;
use num_complex::Complex64;

/// Real polynomial, `c[k]` is the coefficient of `s^k`. High-order exact
/// zeros are trimmed, so the zero polynomial has no coefficients.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Poly {
    c: Vec<f64>,
}

impl Poly {
    pub fn new(mut c: Vec<f64>) -> Self {
        while c.last() == Some(&0.0) {
            c.pop();
        }
        Poly { c }
    }

    pub fn zero() -> Self {
        Poly { c: Vec::new() }
    }

    pub fn one() -> Self {
        Poly::constant(1.0)
    }

    pub fn constant(x: f64) -> Self {
        Poly::new(vec![x])
    }

    /// `coef * s^k`.
    pub fn monomial(k: usize, coef: f64) -> Self {
        let mut c = vec![0.0; k + 1];
        c[k] = coef;
        Poly::new(c)
    }

    /// Monic polynomial with the given roots; complex roots must come in
    /// conjugate pairs (only the ones with positive imaginary part are used
    /// for pairs).
    pub fn from_roots(roots: &[Complex64]) -> Self {
        let mut p = Poly::one();
        for r in roots {
            if r.im.abs() <= 1e-14 * (1.0 + r.norm()) {
                p = &p * &Poly::new(vec![-r.re, 1.0]);
            } else if r.im > 0.0 {
                p = &p * &quadratic_factor(*r);
            }
        }
        p
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.c
    }

    pub fn is_zero(&self) -> bool {
        self.c.is_empty()
    }

    /// Degree, with the zero polynomial reported as degree 0.
    pub fn degree(&self) -> usize {
        self.c.len().saturating_sub(1)
    }

    pub fn leading(&self) -> f64 {
        self.c.last().copied().unwrap_or(0.0)
    }

    pub fn coeff(&self, k: usize) -> f64 {
        self.c.get(k).copied().unwrap_or(0.0)
    }

    pub fn max_abs(&self) -> f64 {
        self.c.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    pub fn eval(&self, s: Complex64) -> Complex64 {
        self.c.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, &x| acc * s + x)
    }

    pub fn eval_real(&self, s: f64) -> f64 {
        self.c.iter().rev().fold(0.0, |acc, &x| acc * s + x)
    }

    /// `sum |c_k| |s|^k`, the natural scale for rounding error in `eval`.
    pub fn eval_scale(&self, s: Complex64) -> f64 {
        let r = s.norm();
        self.c.iter().rev().fold(0.0, |acc, &x| acc * r + x.abs())
    }

    pub fn scale(&self, k: f64) -> Poly {
        Poly::new(self.c.iter().map(|x| x * k).collect())
    }

    /// Number of low-order coefficients that are negligible relative to the
    /// largest coefficient.
    pub fn low_zeros(&self, rel_tol: f64) -> usize {
        let tol = rel_tol * self.max_abs();
        self.c.iter().take_while(|x| x.abs() <= tol).count().min(self.degree())
    }

    /// Divides by `s^k`, discarding the `k` lowest coefficients.
    pub fn shift_down(&self, k: usize) -> Poly {
        Poly::new(self.c.iter().skip(k).copied().collect())
    }

    /// Sets coefficients below `rel_tol * max_abs` to zero.
    pub fn chop(&self, rel_tol: f64) -> Poly {
        let tol = rel_tol * self.max_abs();
        Poly::new(self.c.iter().map(|&x| if x.abs() <= tol { 0.0 } else { x }).collect())
    }

    pub fn approx_eq(&self, other: &Poly, rel_tol: f64) -> bool {
        if self.c.len() != other.c.len() {
            return false;
        }
        let scale = self.max_abs().max(other.max_abs());
        self.c.iter().zip(&other.c).all(|(a, b)| (a - b).abs() <= rel_tol * scale)
    }

    /// Roots via eigenvalues of the (balanced) companion matrix. Exact zero
    /// low-order coefficients produce exact zero roots.
    pub fn roots(&self) -> Vec<Complex64> {
        if self.c.len() <= 1 {
            return Vec::new();
        }
        let zeros = self.c.iter().take_while(|&&x| x == 0.0).count();
        let p = self.shift_down(zeros);
        let mut out = vec![Complex64::new(0.0, 0.0); zeros];
        let m = p.degree();
        let lead = p.leading();
        match m {
            0 => {}
            1 => out.push(Complex64::new(-p.c[0] / p.c[1], 0.0)),
            2 => {
                let (a, b, c) = (p.c[2], p.c[1], p.c[0]);
                let disc = b * b - 4.0 * a * c;
                if disc >= 0.0 {
                    let q = -0.5 * (b + b.signum() * disc.sqrt());
                    if q == 0.0 {
                        out.extend([Complex64::new(0.0, 0.0); 2]);
                    } else {
                        out.push(Complex64::new(q / a, 0.0));
                        out.push(Complex64::new(c / q, 0.0));
                    }
                } else {
                    let re = -b / (2.0 * a);
                    let im = (-disc).sqrt() / (2.0 * a.abs());
                    out.push(Complex64::new(re, im));
                    out.push(Complex64::new(re, -im));
                }
            }
            _ => {
                let mut comp = DMatrix::<f64>::zeros(m, m);
                for i in 1..m {
                    comp[(i, i - 1)] = 1.0;
                }
                for i in 0..m {
                    comp[(i, m - 1)] = -p.c[i] / lead;
                }
                nalgebra::linalg::balancing::balance_parlett_reinsch(&mut comp);
                out.extend(comp.complex_eigenvalues().iter().copied());
            }
        }
        out
    }

    /// Quotient of an exact division by `f`, or `None` when the remainder is
    /// larger than `rel_tol` relative to the dividend.
    ///
    /// Both top-down and bottom-up deflation are tried and the one with the
    /// smaller residual kept; each is stable for a different root range.
    pub fn divide_exact(&self, f: &Poly, rel_tol: f64) -> Option<Poly> {
        if f.is_zero() {
            return None;
        }
        if self.is_zero() {
            return Some(Poly::zero());
        }
        let n = self.degree();
        let k = f.degree();
        if k > n {
            return None;
        }
        let qlen = n - k + 1;
        let mut best: Option<(f64, Vec<f64>)> = None;

        // top-down
        let mut r = self.c.clone();
        let mut q = vec![0.0; qlen];
        for i in (0..qlen).rev() {
            q[i] = r[i + k] / f.c[k];
            for j in 0..=k {
                r[i + j] -= q[i] * f.c[j];
            }
        }
        let res = self.residual(&q, f);
        best = pick(best, res, q);

        if f.c[0] != 0.0 {
            let mut q = vec![0.0; qlen];
            for i in 0..qlen {
                let mut acc = self.c[i];
                for j in 1..=k.min(i) {
                    acc -= f.c[j] * q[i - j];
                }
                q[i] = acc / f.c[0];
            }
            let res = self.residual(&q, f);
            best = pick(best, res, q);
        }

        let (res, q) = best?;
        (res <= rel_tol * self.max_abs()).then(|| Poly::new(q))
    }

    fn residual(&self, q: &[f64], f: &Poly) -> f64 {
        let prod = &Poly { c: q.to_vec() } * f;
        (0..self.c.len().max(prod.c.len()))
            .map(|i| (self.coeff(i) - prod.coeff(i)).abs())
            .fold(0.0, f64::max)
    }
}

fn pick(best: Option<(f64, Vec<f64>)>, res: f64, q: Vec<f64>) -> Option<(f64, Vec<f64>)> {
    match best {
        Some((r, _)) if r <= res => best,
        _ if res.is_finite() => Some((res, q)),
        _ => best,
    }
}

/// `(s - r)(s - conj r)`.
pub fn quadratic_factor(r: Complex64) -> Poly {
    Poly::new(vec![r.norm_sqr(), -2.0 * r.re, 1.0])
}

impl Add for &Poly {
    type Output = Poly;
    fn add(self, o: &Poly) -> Poly {
        let n = self.c.len().max(o.c.len());
        Poly::new((0..n).map(|i| self.coeff(i) + o.coeff(i)).collect())
    }
}

impl Sub for &Poly {
    type Output = Poly;
    fn sub(self, o: &Poly) -> Poly {
        let n = self.c.len().max(o.c.len());
        Poly::new((0..n).map(|i| self.coeff(i) - o.coeff(i)).collect())
    }
}

impl Mul for &Poly {
    type Output = Poly;
    fn mul(self, o: &Poly) -> Poly {
        if self.is_zero() || o.is_zero() {
            return Poly::zero();
        }
        let mut c = vec![0.0; self.c.len() + o.c.len() - 1];
        for (i, a) in self.c.iter().enumerate() {
            for (j, b) in o.c.iter().enumerate() {
                c[i + j] += a * b;
            }
        }
        Poly::new(c)
    }
}

impl Neg for &Poly {
    type Output = Poly;
    fn neg(self) -> Poly {
        self.scale(-1.0)
    }
}
