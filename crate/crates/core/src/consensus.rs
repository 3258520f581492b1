//! Ring consensus: measures, the s = 0 infeasibility certificate for
//! relative locality-constrained closed loops, and DFT-deflated H2 norms.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{circular_distance, Graph, StructurePattern};
use crate::lyapunov;
use crate::sls::{closed_loops_of, rows_serde, Controller, Plant};
use crate::statespace::StateSpace;
use crate::rational::RationalMatrix;
use crate::structure::{check_realization_structure, is_tf_structured};

/// Relative threshold for a DFT symbol value to count as nonzero.
pub const SYMBOL_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Measure {
    /// `x_n - x_{n-1}`.
    Le,
    /// `x - mean(x)`.
    Ave,
    /// `x_n - x_{n-N/2}`.
    Lr,
}

/// Circulant matrix `C_ij = c[(j - i) mod n]`.
pub fn circulant(first_row: &[f64]) -> DMatrix<f64> {
    let n = first_row.len();
    DMatrix::from_fn(n, n, |i, j| first_row[(j + n - i) % n])
}

pub fn measure(kind: Measure, n: usize) -> Result<DMatrix<f64>> {
    if n < 3 {
        return Err(Error::InvalidArgument("consensus measures need n >= 3".into()));
    }
    let mut row = vec![0.0; n];
    match kind {
        Measure::Le => {
            row[0] = 1.0;
            row[n - 1] = -1.0;
        }
        Measure::Ave => {
            row.iter_mut().for_each(|x| *x = -1.0 / n as f64);
            row[0] += 1.0;
        }
        Measure::Lr => {
            if n % 2 == 1 {
                return Err(Error::OddNForLongRange);
            }
            row[0] = 1.0;
            row[n / 2] = -1.0;
        }
    }
    Ok(circulant(&row))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConsensusMeasures {
    pub le: DMatrix<f64>,
    pub ave: DMatrix<f64>,
    /// Present for even `n` only.
    pub lr: Option<DMatrix<f64>>,
}

pub fn consensus_measures(n: usize) -> Result<ConsensusMeasures> {
    Ok(ConsensusMeasures {
        le: measure(Measure::Le, n)?,
        ave: measure(Measure::Ave, n)?,
        lr: if n.is_multiple_of(2) { Some(measure(Measure::Lr, n)?) } else { None },
    })
}

/// First row of a circulant matrix, or `NotCirculant`.
pub fn circulant_row(c: &DMatrix<f64>) -> Result<Vec<f64>> {
    let n = c.nrows();
    if c.ncols() != n || n == 0 {
        return Err(Error::NotCirculant);
    }
    let row: Vec<f64> = c.row(0).iter().copied().collect();
    let tol = 1e-12 * c.amax().max(1.0);
    for i in 0..n {
        for j in 0..n {
            if (c[(i, j)] - row[(j + n - i) % n]).abs() > tol {
                return Err(Error::NotCirculant);
            }
        }
    }
    Ok(row)
}

/// Eigenvalues `sum_m c_m w^{mk}`, `w = exp(2 pi i / n)`, for `k = 0..n`.
pub fn circulant_symbol(row: &[f64]) -> Vec<Complex64> {
    let n = row.len();
    (0..n)
        .map(|k| {
            row.iter()
                .enumerate()
                .map(|(m, &cm)| cm * Complex64::from_polar(1.0, 2.0 * PI * ((m * k) % n) as f64 / n as f64))
                .sum()
        })
        .collect()
}

pub fn circulant_rank(c: &DMatrix<f64>) -> Result<usize> {
    let sym = circulant_symbol(&circulant_row(c)?);
    let big = sym.iter().fold(0.0f64, |a, z| a.max(z.norm()));
    if big == 0.0 {
        return Ok(0);
    }
    Ok(sym.iter().filter(|z| z.norm() > SYMBOL_TOL * big).count())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConsensusProblem {
    pub n: usize,
    pub b: usize,
    pub gamma: f64,
    #[serde(with = "rows_serde")]
    pub c: DMatrix<f64>,
}

impl ConsensusProblem {
    pub fn new(n: usize, b: usize, gamma: f64, c: DMatrix<f64>) -> Result<Self> {
        let prob = ConsensusProblem { n, b, gamma, c };
        prob.validate()?;
        Ok(prob)
    }

    pub fn with_measure(n: usize, b: usize, gamma: f64, kind: Measure) -> Result<Self> {
        ConsensusProblem::new(n, b, gamma, measure(kind, n)?)
    }

    pub fn validate(&self) -> Result<()> {
        if self.c.shape() != (self.n, self.n) {
            return Err(Error::DimensionMismatch(format!("C is {:?} for n = {}", self.c.shape(), self.n)));
        }
        circulant_row(&self.c)?;
        let row_sum = (&self.c * DVector::from_element(self.n, 1.0)).amax();
        if row_sum > 1e-12 * self.c.amax().max(1.0) {
            return Err(Error::ModeZeroDetectable(format!("C 1 != 0 (max {row_sum:e})")));
        }
        if self.b < 1 || 2 * self.b >= self.n {
            return Err(Error::InvalidArgument(format!("need 1 <= b < n/2, got b = {} for n = {}", self.b, self.n)));
        }
        if !(self.gamma >= 0.0) {
            return Err(Error::InvalidArgument("gamma must be nonnegative".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    Infeasible,
    PotentiallyFeasible,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct FeasibilityCertificate {
    pub verdict: Verdict,
    pub rank: usize,
    pub threshold: usize,
    /// Every per-column system has full column rank, so the witness is the
    /// unique s = 0 solution.
    pub unique: bool,
    #[serde(with = "opt_rows", skip_serializing_if = "Option::is_none", default)]
    pub witness: Option<DMatrix<f64>>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub witness_row_sums: Option<Vec<f64>>,
    /// `max |C (I - Phi_u(0))|` at the witness.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub residual: Option<f64>,
    pub proof_note: String,
}

mod opt_rows {
    use nalgebra::DMatrix;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(m: &Option<DMatrix<f64>>, s: S) -> Result<S::Ok, S::Error> {
        m.as_ref().map(crate::statespace::matrix_to_rows).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<DMatrix<f64>>, D::Error> {
        let rows = Option::<Vec<Vec<f64>>>::deserialize(d)?;
        rows.map(|r| {
            let (nr, nc) = (r.len(), r.first().map_or(0, Vec::len));
            crate::statespace::matrix_from_rows(&r, nr, nc, "witness").map_err(serde::de::Error::custom)
        })
        .transpose()
    }
}

/// Rows allowed in column `i` of `Phi_u` under the `b`-hop ring pattern.
pub fn ring_support(n: usize, b: usize, i: usize) -> Vec<usize> {
    (0..n).filter(|&j| circular_distance(i, j, n) <= b).collect()
}

/// The s = 0 necessary condition for a relative controller with
/// `b`-local closed loops: `C Phi_u(0) = C` columnwise on the support and
/// `Phi_u(0) 1 = 0`.
pub fn sls_relative_feasibility(prob: &ConsensusProblem) -> Result<FeasibilityCertificate> {
    prob.validate()?;
    let (n, b) = (prob.n, prob.b);
    let c = &prob.c;
    let rank = circulant_rank(c)?;
    let threshold = 2 * b + 1;
    let scale = c.amax().max(1.0);
    let supports: Vec<Vec<usize>> = (0..n).map(|i| ring_support(n, b, i)).collect();
    let tilde: Vec<DMatrix<f64>> = supports.iter().map(|s| c.select_columns(s.iter())).collect();
    let unique = tilde.iter().all(|t| t.clone().svd(false, false).rank(1e-10 * scale) == t.ncols());

    if unique {
        let mut phi = DMatrix::zeros(n, n);
        for i in 0..n {
            let svd = tilde[i].clone().svd(true, true);
            let sol = svd.solve(&c.column(i).into_owned(), 1e-12 * scale).map_err(|e| Error::InvalidArgument(e.into()))?;
            for (k, &row) in supports[i].iter().enumerate() {
                phi[(row, i)] = sol[k];
            }
        }
        let residual = (c - c * &phi).amax();
        let sums: Vec<f64> = phi.row_iter().map(|r| r.sum()).collect();
        let verdict = if sums.iter().all(|s| s.abs() < 1e-8) { Verdict::PotentiallyFeasible } else { Verdict::Infeasible };
        let proof_note = format!(
            "every C~(i) has full column rank {threshold}; the unique solution of C~(i) phi = C_i is e_i, \
             so Phi_u(0) is the 0/1 identity pattern whose rows sum to 1, contradicting Phi_u(0) 1 = 0"
        );
        return Ok(FeasibilityCertificate {
            verdict,
            rank,
            threshold,
            unique,
            witness_row_sums: Some(sums),
            residual: Some(residual),
            witness: Some(phi),
            proof_note,
        });
    }

    // joint system over all supported entries
    let offsets: Vec<usize> = supports.iter().scan(0, |acc, s| {
        let o = *acc;
        *acc += s.len();
        Some(o)
    }).collect();
    let unknowns: usize = supports.iter().map(Vec::len).sum();
    let mut m = DMatrix::zeros(n * n + n, unknowns);
    let mut rhs = DVector::zeros(n * n + n);
    for i in 0..n {
        for r in 0..n {
            for (k, &row) in supports[i].iter().enumerate() {
                m[(i * n + r, offsets[i] + k)] = c[(r, row)];
            }
            rhs[i * n + r] = c[(r, i)];
        }
    }
    for i in 0..n {
        for (k, &row) in supports[i].iter().enumerate() {
            m[(n * n + row, offsets[i] + k)] = 1.0;
        }
    }
    let sol = least_squares(&m, &rhs);
    let fit = (&m * &sol - &rhs).amax();
    let mut phi = DMatrix::zeros(n, n);
    for i in 0..n {
        for (k, &row) in supports[i].iter().enumerate() {
            phi[(row, i)] = sol[offsets[i] + k];
        }
    }
    let residual = (c - c * &phi).amax();
    let sums: Vec<f64> = phi.row_iter().map(|r| r.sum()).collect();
    if fit < 1e-8 * scale {
        Ok(FeasibilityCertificate {
            verdict: Verdict::PotentiallyFeasible,
            rank,
            threshold,
            unique,
            witness: Some(phi),
            witness_row_sums: Some(sums),
            residual: Some(residual),
            proof_note: "the s = 0 joint system {C Phi_u(0) = C on the support, Phi_u(0) 1 = 0} is solvable; \
                         this is a necessary condition only"
                .into(),
        })
    } else {
        Ok(FeasibilityCertificate {
            verdict: Verdict::Infeasible,
            rank,
            threshold,
            unique,
            witness: None,
            witness_row_sums: None,
            residual: Some(fit),
            proof_note: format!(
                "the s = 0 joint system {{C Phi_u(0) = C on the support, Phi_u(0) 1 = 0}} has least-squares residual {fit:e}"
            ),
        })
    }
}

/// Least-squares solution through the eigendecomposition of the normal
/// equations, with one step of refinement.
fn least_squares(m: &DMatrix<f64>, rhs: &DVector<f64>) -> DVector<f64> {
    let eig = SymmetricEigen::new(m.transpose() * m);
    let cutoff = 1e-12 * eig.eigenvalues.amax().max(1.0);
    let apply = |v: &DVector<f64>| {
        let mut y = eig.eigenvectors.transpose() * (m.transpose() * v);
        for (yi, &l) in y.iter_mut().zip(eig.eigenvalues.iter()) {
            *yi = if l > cutoff { *yi / l } else { 0.0 };
        }
        &eig.eigenvectors * y
    };
    let x = apply(rhs);
    let r = rhs - m * &x;
    x + apply(&r)
}

/// `K_s = -L` of the ring.
pub fn static_consensus_gain(n: usize) -> Result<DMatrix<f64>> {
    Ok(-Graph::ring(n)?.laplacian())
}

/// `K_a = [aI, K_s; -aI, 0]`, transfer `-a/(s - a) K_s`.
pub fn proper_approximation(n: usize, a: f64) -> Result<StateSpace> {
    if !(a < 0.0) {
        return Err(Error::NonNegativeA);
    }
    let ks = static_consensus_gain(n)?;
    StateSpace::new(DMatrix::identity(n, n) * a, ks, DMatrix::identity(n, n) * -a, DMatrix::zeros(n, n))
}

/// Consensus controller: static `u = K x`, or one controller state per node
/// with circulant `A_k, B_k, C_k, D_k`.
#[derive(Debug, Clone)]
pub enum ConsensusController {
    Static(DMatrix<f64>),
    Dynamic(StateSpace),
}

fn symbol_of(m: &DMatrix<f64>) -> Result<Vec<Complex64>> {
    Ok(circulant_symbol(&circulant_row(m)?))
}

/// Per-mode contributions to the closed-loop H2 norm squared with mode 0
/// dropped; `result[k]` is zero for `k = 0`.
pub fn h2_deflated_modes(prob: &ConsensusProblem, k: &ConsensusController) -> Result<Vec<f64>> {
    let n = prob.n;
    let csym = symbol_of(&prob.c)?;
    let scale = prob.c.amax().max(1.0);
    if csym[0].norm() > 1e-10 * scale {
        return Err(Error::ModeZeroDetectable("C 1 != 0".into()));
    }
    let g2 = prob.gamma * prob.gamma;
    let mut out = vec![0.0; n];
    match k {
        ConsensusController::Static(km) => {
            if km.shape() != (n, n) {
                return Err(Error::DimensionMismatch("controller must be n x n".into()));
            }
            let lam = symbol_of(km)?;
            if lam[0].norm() > 1e-10 * km.amax().max(1.0) {
                return Err(Error::ModeZeroDetectable("controller is not relative".into()));
            }
            for kk in 1..n {
                let l = lam[kk];
                if !(l.re < 0.0) {
                    return Err(Error::UnstableNonzeroMode(kk));
                }
                out[kk] = (csym[kk].norm_sqr() + g2 * l.norm_sqr()) / (2.0 * l.re.abs());
            }
        }
        ConsensusController::Dynamic(ss) => {
            if ss.n_states() != n || ss.n_inputs() != n || ss.n_outputs() != n {
                return Err(Error::DimensionMismatch("dynamic controller must have one state per node".into()));
            }
            let (asym, bsym, csym_k, dsym) = (symbol_of(ss.a())?, symbol_of(ss.b())?, symbol_of(ss.c())?, symbol_of(ss.d())?);
            let tol = 1e-10 * ss.a().amax().max(ss.b().amax()).max(ss.c().amax()).max(ss.d().amax()).max(1.0);
            if dsym[0].norm() > tol || (csym_k[0] * bsym[0]).norm() > tol * tol.max(1.0) {
                return Err(Error::ModeZeroDetectable("controller is not relative".into()));
            }
            let gamma = Complex64::from(prob.gamma);
            for kk in 1..n {
                let a = DMatrix::from_row_slice(2, 2, &[dsym[kk], csym_k[kk], bsym[kk], asym[kk]]);
                let (l1, l2) = eig2(&a);
                if !(l1.re < 0.0 && l2.re < 0.0) {
                    return Err(Error::UnstableNonzeroMode(kk));
                }
                let cz = DMatrix::from_row_slice(2, 2, &[
                    csym[kk], Complex64::from(0.0),
                    gamma * dsym[kk], gamma * csym_k[kk],
                ]);
                let q = lyapunov::solve_complex(&a, &(cz.adjoint() * &cz))?;
                out[kk] = q[(0, 0)].re;
            }
        }
    }
    Ok(out)
}

fn eig2(a: &DMatrix<Complex64>) -> (Complex64, Complex64) {
    let tr = a[(0, 0)] + a[(1, 1)];
    let det = a[(0, 0)] * a[(1, 1)] - a[(0, 1)] * a[(1, 0)];
    let disc = (tr * tr - det * 4.0).sqrt();
    ((tr + disc) * 0.5, (tr - disc) * 0.5)
}

/// Closed-loop `||F(P; K)||_2^2` on the complement of the mean mode.
pub fn h2_deflated(prob: &ConsensusProblem, k: &ConsensusController) -> Result<f64> {
    Ok(h2_deflated_modes(prob, k)?.iter().sum())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ApproximationValue {
    pub a: f64,
    pub h2_squared: f64,
    pub gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct H2Values {
    pub ks: f64,
    pub ka: Vec<ApproximationValue>,
    pub monotone: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct StructureWitnesses {
    pub ks_tf_structured: bool,
    pub ks_structured_realizable: bool,
    pub ks_network_realizable: bool,
    pub ks_closed_loop_tf_structured: bool,
    pub ka_structured_realizable: bool,
    pub ka_network_realizable: bool,
    pub ka_closed_loop_tf_structured: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct GapReport {
    pub n: usize,
    pub b: usize,
    pub gamma: f64,
    pub verdict: Verdict,
    pub rank: usize,
    pub threshold: usize,
    pub witness_row_sums: Option<Vec<f64>>,
    pub h2_values: H2Values,
    pub structure_witnesses: StructureWitnesses,
}

/// Pole parameters used for the proper approximation in the gap report.
pub const GAP_POLES: [f64; 3] = [-10.0, -100.0, -1000.0];

/// Sampled test that `Phi_x` of `x' = u + w` under `k` vanishes off the
/// `b`-hop ring pattern.
fn closed_loop_is_local(n: usize, b: usize, k: &Controller) -> Result<bool> {
    let cl = closed_loops_of(&Plant::integrators(n), k)?;
    let pat = StructurePattern::scalar(Graph::ring(n)?.b_hops(b)?);
    let vals = crate::sampling::sample(3, 0, |s| cl.phi_x.eval(s))?;
    Ok(vals.iter().all(|v| {
        (0..n).all(|i| (0..n).all(|j| pat.allows(i, j) || v[(i, j)].norm() < 1e-10))
    }))
}

/// Infeasibility certificate alongside finite H2 norms of `K_s` and `K_a`.
pub fn gap_demonstration(n: usize, b: usize, gamma: f64) -> Result<GapReport> {
    let prob = ConsensusProblem::with_measure(n, b, gamma, Measure::Ave)?;
    let cert = sls_relative_feasibility(&prob)?;
    let ks = static_consensus_gain(n)?;
    let h2_ks = h2_deflated(&prob, &ConsensusController::Static(ks.clone()))?;
    let mut ka = Vec::new();
    for a in GAP_POLES {
        let h = h2_deflated(&prob, &ConsensusController::Dynamic(proper_approximation(n, a)?))?;
        ka.push(ApproximationValue { a, h2_squared: h, gap: (h - h2_ks).abs() });
    }
    let monotone = ka.windows(2).all(|w| w[1].gap < w[0].gap);
    let ring = StructurePattern::scalar(Graph::ring(n)?);
    let ks_real = check_realization_structure(&StateSpace::from_static(ks.clone()), &ring)?;
    let ka_ss = proper_approximation(n, GAP_POLES[0])?;
    let ka_real = check_realization_structure(&ka_ss, &ring)?;
    let witnesses = StructureWitnesses {
        ks_tf_structured: is_tf_structured(&RationalMatrix::from_real(&ks), &ring)?,
        ks_structured_realizable: ks_real.structured,
        ks_network_realizable: ks_real.network,
        ks_closed_loop_tf_structured: closed_loop_is_local(n, b, &Controller::Static(ks))?,
        ka_structured_realizable: ka_real.structured,
        ka_network_realizable: ka_real.network,
        ka_closed_loop_tf_structured: closed_loop_is_local(n, b, &Controller::StateSpace(ka_ss))?,
    };
    Ok(GapReport {
        n,
        b,
        gamma,
        verdict: cert.verdict,
        rank: cert.rank,
        threshold: cert.threshold,
        witness_row_sums: cert.witness_row_sums,
        h2_values: H2Values { ks: h2_ks, ka, monotone },
        structure_witnesses: witnesses,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn measures_small() {
        let m = consensus_measures(4).unwrap();
        assert_eq!(circulant_rank(&m.le).unwrap(), 3);
        assert_eq!(circulant_rank(&m.ave).unwrap(), 3);
        // symbol 1 - (-1)^k vanishes on even k
        assert_eq!(circulant_rank(m.lr.as_ref().unwrap()).unwrap(), 2);
        assert!(consensus_measures(3).unwrap().lr.is_none());
        assert!(matches!(measure(Measure::Lr, 5), Err(Error::OddNForLongRange)));
        let le6 = measure(Measure::Le, 6).unwrap();
        assert!(le6.row_iter().all(|r| r.sum() == 0.0));
    }

    #[test]
    fn ranks() {
        assert_eq!(circulant_rank(&measure(Measure::Ave, 5).unwrap()).unwrap(), 4);
        assert_eq!(circulant_rank(&DMatrix::from_element(4, 4, 0.25)).unwrap(), 1);
        assert_eq!(circulant_rank(&DMatrix::zeros(4, 4)).unwrap(), 0);
        assert!(matches!(circulant_rank(&DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 3.0, 4.0])), Err(Error::NotCirculant)));
    }

    #[test]
    fn static_gain_and_approximation() {
        assert_eq!(
            static_consensus_gain(3).unwrap(),
            DMatrix::from_row_slice(3, 3, &[-2.0, 1.0, 1.0, 1.0, -2.0, 1.0, 1.0, 1.0, -2.0])
        );
        let ka = proper_approximation(4, -10.0).unwrap();
        let dc = ka.evaluate(Complex64::new(0.0, 0.0)).unwrap();
        let ks = static_consensus_gain(4).unwrap();
        assert!((dc - ks.map(Complex64::from)).iter().all(|z| z.norm() < 1e-12));
        assert!(matches!(proper_approximation(4, 0.0), Err(Error::NonNegativeA)));
    }

    #[test]
    fn h2_small_cases() {
        let ks = ConsensusController::Static(static_consensus_gain(4).unwrap());
        let p1 = ConsensusProblem::with_measure(4, 1, 1.0, Measure::Ave).unwrap();
        assert!((h2_deflated(&p1, &ks).unwrap() - 4.625).abs() < 1e-12);
        let p0 = ConsensusProblem::with_measure(4, 1, 0.0, Measure::Ave).unwrap();
        assert!((h2_deflated(&p0, &ks).unwrap() - 0.625).abs() < 1e-12);
        let id = ConsensusController::Static(DMatrix::identity(4, 4));
        assert!(matches!(h2_deflated(&p1, &id), Err(Error::ModeZeroDetectable(_))));
        let unstable = ConsensusController::Static(-static_consensus_gain(4).unwrap());
        assert!(matches!(h2_deflated(&p1, &unstable), Err(Error::UnstableNonzeroMode(1))));
    }
}
