use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{cmax, solve_checked, Controller, FrequencyController, LtiMap, Plant};
use crate::error::{Error, Result};
use crate::partition::{interleave_permutation, Partition};
use crate::rational::RationalMatrix;
use crate::sampling;
use crate::statespace::StateSpace;

/// Largest state dimension recovered in exact rational form.
pub const RATIONAL_RECOVERY_MAX: usize = 6;

/// `(Phi_x, Phi_u)`: maps from `B1 w` to `x` and `u`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClosedLoopPair {
    #[serde(rename = "phiX")]
    pub phi_x: LtiMap,
    #[serde(rename = "phiU")]
    pub phi_u: LtiMap,
}

fn check_controller_shape(p: &Plant, k: &Controller, cols: usize) -> Result<()> {
    if k.shape() != (p.m(), cols) {
        return Err(Error::DimensionMismatch(format!(
            "controller is {:?}, expected {:?}",
            k.shape(),
            (p.m(), cols)
        )));
    }
    Ok(())
}

/// Closed loops of `u = K x`: `Phi_x = (sI - A - B2 K)^{-1}`, `Phi_u = K Phi_x`,
/// sharing one state-space realization.
pub fn closed_loops_of(p: &Plant, k: &Controller) -> Result<ClosedLoopPair> {
    check_controller_shape(p, k, p.n())?;
    let ks = k.to_state_space()?;
    let (n, nk) = (p.n(), ks.n_states());
    let mut a = DMatrix::zeros(n + nk, n + nk);
    a.view_mut((0, 0), (n, n)).copy_from(&(&p.a + &p.b2 * ks.d()));
    a.view_mut((0, n), (n, nk)).copy_from(&(&p.b2 * ks.c()));
    a.view_mut((n, 0), (nk, n)).copy_from(ks.b());
    a.view_mut((n, n), (nk, nk)).copy_from(ks.a());
    let mut b = DMatrix::zeros(n + nk, n);
    b.view_mut((0, 0), (n, n)).fill_with_identity();
    let mut cx = DMatrix::zeros(n, n + nk);
    cx.view_mut((0, 0), (n, n)).fill_with_identity();
    let mut cu = DMatrix::zeros(p.m(), n + nk);
    cu.view_mut((0, 0), (p.m(), n)).copy_from(ks.d());
    cu.view_mut((0, n), (p.m(), nk)).copy_from(ks.c());
    let (perm, states) = joint_states(&p.state_part, ks.state_partition());
    let phi_x = StateSpace::new(a.clone(), b.clone(), cx, DMatrix::zeros(n, n))?
        .with_partitions(Partition::single(n + nk), p.state_part.clone(), p.state_part.clone())?
        .permute_states(&perm, states.clone());
    let phi_u = StateSpace::new(a, b, cu, DMatrix::zeros(p.m(), n))?
        .with_partitions(Partition::single(n + nk), p.state_part.clone(), p.input_part.clone())?
        .permute_states(&perm, states);
    Ok(ClosedLoopPair { phi_x: LtiMap::StateSpace(phi_x), phi_u: LtiMap::StateSpace(phi_u) })
}

/// Interleaves plant and controller states node by node when possible.
pub(crate) fn joint_states(plant: &Partition, ctrl: &Partition) -> (Vec<usize>, Partition) {
    if plant.len() == ctrl.len() {
        (interleave_permutation(plant, ctrl), plant.merge(ctrl).expect("equal block counts"))
    } else {
        let total = plant.total() + ctrl.total();
        ((0..total).collect(), plant.concat(ctrl))
    }
}

/// `(Phi_x(s), Phi_u(s))` for any controller form.
pub fn closed_loops_at(p: &Plant, k: &Controller, s: Complex64) -> Result<(DMatrix<Complex64>, DMatrix<Complex64>)> {
    check_controller_shape(p, k, p.n())?;
    let kv = k.eval(s)?;
    let m = p.resolvent_operand(s) - p.b2.map(Complex64::from) * &kv;
    let phi_x = solve_checked(&m, &DMatrix::identity(p.n(), p.n())).ok_or(Error::SingularAtS(s))?;
    let phi_u = kv * &phi_x;
    Ok((phi_x, phi_u))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct AffineCheck {
    pub residual: f64,
    pub strictly_proper: bool,
}

/// `max ||(sI - A) Phi_x(s) - B2 Phi_u(s) - I||` over random samples, plus
/// a decay test of both maps along `s = 10^k`, `k = 2..5`.
pub fn check_affine_constraint(cl: &ClosedLoopPair, p: &Plant, samples: usize, seed: u64) -> Result<AffineCheck> {
    let b2 = p.b2.map(Complex64::from);
    let id = DMatrix::<Complex64>::identity(p.n(), p.n());
    let res = sampling::sample(samples, seed, |s| {
        let x = cl.phi_x.eval(s)?;
        let u = cl.phi_u.eval(s)?;
        if x.shape() != (p.n(), p.n()) || u.shape() != (p.m(), p.n()) {
            return Err(Error::DimensionMismatch("closed-loop maps do not match the plant".into()));
        }
        Ok(cmax(&(p.resolvent_operand(s) * x - &b2 * u - &id)))
    })?;
    let residual = res.into_iter().fold(0.0, f64::max);
    Ok(AffineCheck { residual, strictly_proper: decays(&cl.phi_x)? && decays(&cl.phi_u)? })
}

pub(crate) fn decays(map: &LtiMap) -> Result<bool> {
    let norms: Vec<f64> = (2..=5)
        .map(|k| map.eval(Complex64::new(10f64.powi(k), 0.0)).map(|m| cmax(&m)))
        .collect::<Result<_>>()?;
    Ok(norms[3] <= 1e-2 * norms[0] + 1e-12)
}

/// Slope of `log ||I - s Phi_x(s)||` against `log s` over `s = 10^2..10^4`;
/// close to `-1` for a verified pair.
pub fn properness_slope(cl: &ClosedLoopPair) -> Result<f64> {
    let pts: Vec<(f64, f64)> = (2..=4)
        .map(|k| {
            let s = 10f64.powi(k);
            let x = cl.phi_x.eval(Complex64::new(s, 0.0))?;
            let n = x.nrows();
            let r = DMatrix::<Complex64>::identity(n, n) - x * Complex64::new(s, 0.0);
            Ok((s.log10(), cmax(&r).log10()))
        })
        .collect::<Result<_>>()?;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / 3.0;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / 3.0;
    let num: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let den: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    Ok(num / den)
}

/// `K = Phi_u Phi_x^{-1}`: exact rational form up to
/// [`RATIONAL_RECOVERY_MAX`] states, a frequency-response controller beyond.
///
/// The rational form is read off a minimal realization of
/// `(s Phi_u)(s Phi_x)^{-1}`, so `s Phi_x` must tend to an invertible
/// matrix, as it does (to `I`) for every closed-loop pair.
pub fn recover_controller_sf(cl: &ClosedLoopPair) -> Result<Controller> {
    let n = cl.phi_x.shape().0;
    if n > RATIONAL_RECOVERY_MAX {
        return Ok(Controller::Frequency(FrequencyController::StateFeedback(cl.clone())));
    }
    let px = cl.phi_x.to_state_space()?;
    let pu = cl.phi_u.to_state_space()?;
    if px.d().amax() != 0.0 || pu.d().amax() != 0.0 {
        return Err(Error::ImproperBlock("closed-loop maps must be strictly proper".into()));
    }
    let sx_inv = px.times_s()?.inverse().map_err(|e| match e {
        Error::Singular => Error::SingularPhiX,
        other => other,
    })?;
    let k = StateSpace::series(&sx_inv, &pu.times_s()?)?.minimal(RECOVERY_TOL);
    let k = k.tf_of().with_partitions(pu.output_partition().clone(), px.output_partition().clone())?;
    Ok(Controller::Rational(k))
}

/// Relative threshold for dropping uncontrollable or unobservable
/// directions during recovery.
const RECOVERY_TOL: f64 = 1e-9;

/// Realization of `v = x + (I - s Phi_x) v`, `u = s Phi_u v`.
///
/// Rational maps are realized with states owned by row nodes, so
/// TF-structured closed loops give a structured realization.
pub fn implementation_realization_sf(cl: &ClosedLoopPair, tol: f64) -> Result<StateSpace> {
    let px = cl.phi_x.to_state_space()?;
    let pu = cl.phi_u.to_state_space()?;
    if px.d().amax() != 0.0 || pu.d().amax() != 0.0 {
        return Err(Error::ImproperBlock("closed-loop maps must be strictly proper".into()));
    }
    let n = px.n_outputs();
    let cb = px.c() * px.b();
    let violation = (DMatrix::<f64>::identity(n, n) - &cb).amax();
    if violation > tol {
        return Err(Error::ConstraintViolated(violation));
    }
    let delta = StateSpace::new(px.a().clone(), px.b().clone(), -(px.c() * px.a()), DMatrix::zeros(n, n))?
        .with_partitions(px.state_partition().clone(), px.input_partition().clone(), px.output_partition().clone())?;
    let x_part = px.output_partition().clone();
    let id = StateSpace::static_with(DMatrix::identity(n, n), x_part.clone(), x_part)?;
    let v = StateSpace::feedback(&id, &delta)?;
    StateSpace::series(&v, &pu.times_s()?)
}

/// Affine pair check for a rational `Phi_u` on `x' = u + w`:
/// `Phi_x = (I + Phi_u) / s`.
pub fn integrator_pair(phi_u: RationalMatrix) -> Result<ClosedLoopPair> {
    let n = phi_u.rows();
    let inv_s = crate::rational::RationalEntry::integrator();
    let phi_x = RationalMatrix::identity(n).add(&phi_u)?.map(|e| e.mul(&inv_s));
    let parts = phi_u.row_partition().clone();
    let phi_x = phi_x.with_partitions(parts.clone(), parts)?;
    Ok(ClosedLoopPair { phi_x: LtiMap::Rational(phi_x), phi_u: LtiMap::Rational(phi_u) })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct RelativeEquivalence {
    pub k_relative: bool,
    pub phi_u_relative: bool,
}

/// Samples `K(s) 1` and `Phi_u(s) 1` under the hypotheses `A 1 = 0` and
/// `B2` of full rank.
pub fn check_relative_equivalence(
    p: &Plant,
    k: &Controller,
    samples: usize,
    seed: u64,
    tol: f64,
) -> Result<RelativeEquivalence> {
    let ones = nalgebra::DVector::from_element(p.n(), 1.0);
    let a1 = (&p.a * &ones).amax();
    if a1 > 1e-10 * p.a.amax().max(1.0) {
        return Err(Error::HypothesisViolated(format!("A 1 != 0 (max {a1:e})")));
    }
    let rank = p.b2.clone().svd(false, false).rank(1e-10 * p.b2.amax().max(1e-300));
    if rank < p.n().min(p.m()) {
        return Err(Error::HypothesisViolated(format!("B2 has rank {rank}")));
    }
    let ones_c = nalgebra::DVector::from_element(p.n(), Complex64::new(1.0, 0.0));
    let vals = sampling::sample(samples, seed, |s| {
        let (_, phi_u) = closed_loops_at(p, k, s)?;
        let kv = k.eval(s)?;
        let krel = cmax(&(&kv * &ones_c)) <= tol * cmax(&kv).max(1.0);
        let urel = cmax(&(&phi_u * &ones_c)) <= tol * cmax(&phi_u).max(1.0);
        Ok((krel, urel))
    })?;
    Ok(RelativeEquivalence {
        k_relative: vals.iter().all(|v| v.0),
        phi_u_relative: vals.iter().all(|v| v.1),
    })
}
