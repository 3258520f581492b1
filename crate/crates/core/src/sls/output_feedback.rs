use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{cmax, joint_states, solve_checked, Controller, LtiMap, Plant};
use crate::error::{Error, Result};
use crate::graph::StructurePattern;
use crate::partition::Partition;
use crate::rational::RationalMatrix;
use crate::sampling;
use crate::statespace::StateSpace;
use crate::structure::{is_tf_structured, realize_entrywise, Orientation};

/// The four output-feedback closed-loop maps from `(delta_x, delta_y)` to
/// `(x, u)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputFeedbackClosedLoop {
    #[serde(rename = "phiXX")]
    pub phi_xx: LtiMap,
    #[serde(rename = "phiXY")]
    pub phi_xy: LtiMap,
    #[serde(rename = "phiUX")]
    pub phi_ux: LtiMap,
    #[serde(rename = "phiUY")]
    pub phi_uy: LtiMap,
}

/// Closed loops of `u = K y`, `y = C2 x + delta_y`, sharing one realization.
pub fn closed_loops_of_of(p: &Plant, k: &Controller) -> Result<OutputFeedbackClosedLoop> {
    if k.shape() != (p.m(), p.p()) {
        return Err(Error::DimensionMismatch(format!("controller is {:?}, expected {:?}", k.shape(), (p.m(), p.p()))));
    }
    let ks = k.to_state_space()?;
    let (n, nk, m, q) = (p.n(), ks.n_states(), p.m(), p.p());
    let (ak, bk, ck, dk) = (ks.a(), ks.b(), ks.c(), ks.d());
    let mut a = DMatrix::zeros(n + nk, n + nk);
    a.view_mut((0, 0), (n, n)).copy_from(&(&p.a + &p.b2 * dk * &p.c2));
    a.view_mut((0, n), (n, nk)).copy_from(&(&p.b2 * ck));
    a.view_mut((n, 0), (nk, n)).copy_from(&(bk * &p.c2));
    a.view_mut((n, n), (nk, nk)).copy_from(ak);
    let mut bx = DMatrix::zeros(n + nk, n);
    bx.view_mut((0, 0), (n, n)).fill_with_identity();
    let mut by = DMatrix::zeros(n + nk, q);
    by.view_mut((0, 0), (n, q)).copy_from(&(&p.b2 * dk));
    by.view_mut((n, 0), (nk, q)).copy_from(bk);
    let mut cx = DMatrix::zeros(n, n + nk);
    cx.view_mut((0, 0), (n, n)).fill_with_identity();
    let mut cu = DMatrix::zeros(m, n + nk);
    cu.view_mut((0, 0), (m, n)).copy_from(&(dk * &p.c2));
    cu.view_mut((0, n), (m, nk)).copy_from(ck);
    let (perm, states) = joint_states(&p.state_part, ks.state_partition());
    let make = |c: &DMatrix<f64>, b: &DMatrix<f64>, d: DMatrix<f64>, out: &Partition, inp: &Partition| -> Result<LtiMap> {
        let ss = StateSpace::new(a.clone(), b.clone(), c.clone(), d)?
            .with_partitions(Partition::single(n + nk), inp.clone(), out.clone())?
            .permute_states(&perm, states.clone());
        Ok(LtiMap::StateSpace(ss))
    };
    Ok(OutputFeedbackClosedLoop {
        phi_xx: make(&cx, &bx, DMatrix::zeros(n, n), &p.state_part, &p.state_part)?,
        phi_xy: make(&cx, &by, DMatrix::zeros(n, q), &p.state_part, &p.output_part)?,
        phi_ux: make(&cu, &bx, DMatrix::zeros(m, n), &p.input_part, &p.state_part)?,
        phi_uy: make(&cu, &by, dk.clone(), &p.input_part, &p.output_part)?,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct OutputFeedbackCheck {
    /// `[sI - A, -B2] Phi - [I, 0]`.
    pub row_residual: f64,
    /// `Phi [sI - A; -C2] - [I; 0]`.
    pub column_residual: f64,
}

impl OutputFeedbackCheck {
    pub fn max(&self) -> f64 {
        self.row_residual.max(self.column_residual)
    }
}

pub fn check_of_constraints(
    cl: &OutputFeedbackClosedLoop,
    p: &Plant,
    samples: usize,
    seed: u64,
) -> Result<OutputFeedbackCheck> {
    let b2 = p.b2.map(Complex64::from);
    let c2 = p.c2.map(Complex64::from);
    let idn = DMatrix::<Complex64>::identity(p.n(), p.n());
    let vals = sampling::sample(samples, seed, |s| {
        let xx = cl.phi_xx.eval(s)?;
        let xy = cl.phi_xy.eval(s)?;
        let ux = cl.phi_ux.eval(s)?;
        let uy = cl.phi_uy.eval(s)?;
        let r = p.resolvent_operand(s);
        let row = cmax(&(&r * &xx - &b2 * &ux - &idn)).max(cmax(&(&r * &xy - &b2 * &uy)));
        let col = cmax(&(&xx * &r - &xy * &c2 - &idn)).max(cmax(&(&ux * &r - &uy * &c2)));
        Ok((row, col))
    })?;
    Ok(OutputFeedbackCheck {
        row_residual: vals.iter().map(|v| v.0).fold(0.0, f64::max),
        column_residual: vals.iter().map(|v| v.1).fold(0.0, f64::max),
    })
}

/// `Phi_uy(s) - Phi_ux(s) Phi_xx(s)^{-1} Phi_xy(s)`.
pub(crate) fn recover_at(cl: &OutputFeedbackClosedLoop, s: Complex64) -> Result<DMatrix<Complex64>> {
    let xx = cl.phi_xx.eval(s)?;
    let xy = cl.phi_xy.eval(s)?;
    let sol = solve_checked(&xx, &xy).ok_or(Error::SingularPhiXX)?;
    Ok(cl.phi_uy.eval(s)? - cl.phi_ux.eval(s)? * sol)
}

/// Frequency-response controller `K = Phi_uy - Phi_ux Phi_xx^{-1} Phi_xy`.
pub fn recover_controller_of(cl: &OutputFeedbackClosedLoop) -> Controller {
    Controller::Frequency(super::FrequencyController::OutputFeedback(cl.clone()))
}

fn structured_rational(map: &LtiMap, pat: &StructurePattern, name: &str) -> Result<RationalMatrix> {
    let r = map.to_rational();
    let local = StructurePattern::new(pat.graph.clone(), r.row_partition().clone(), r.col_partition().clone())
        .map_err(|_| Error::DimensionMismatch(format!("{name} partitions do not match the graph")))?;
    if !is_tf_structured(&r, &local)? {
        return Err(Error::NotTfStructured);
    }
    Ok(r)
}

fn realize(r: &RationalMatrix) -> Result<StateSpace> {
    realize_entrywise(r, r.row_partition(), r.col_partition(), Orientation::Rows)
}

fn strictly_proper(r: &RationalMatrix, name: &str) -> Result<()> {
    if !r.is_strictly_proper() {
        return Err(Error::ImproperBlock(format!("{name} is not strictly proper")));
    }
    Ok(())
}

/// Structured realization of `Phi_uy - (s Phi_ux) L (s Phi_xy)` with the
/// inner loop `L = Phi_xx^{-1} / s^2` realized from a structured
/// realization of `Phi_xx`.
pub fn of_structured_implementation(
    cl: &OutputFeedbackClosedLoop,
    pat: &StructurePattern,
    tol: f64,
) -> Result<StateSpace> {
    let xx = structured_rational(&cl.phi_xx, pat, "Phi_xx")?;
    let xy = structured_rational(&cl.phi_xy, pat, "Phi_xy")?;
    let ux = structured_rational(&cl.phi_ux, pat, "Phi_ux")?;
    let uy = structured_rational(&cl.phi_uy, pat, "Phi_uy")?;
    strictly_proper(&xx, "Phi_xx")?;
    strictly_proper(&xy, "Phi_xy")?;
    strictly_proper(&ux, "Phi_ux")?;
    if !uy.is_proper() {
        return Err(Error::ImproperBlock("Phi_uy is not proper".into()));
    }
    let sxx = realize(&xx)?;
    let inner = inner_loop(&sxx, tol)?;
    let sxy = realize(&xy)?.times_s()?;
    let sux = realize(&ux)?.times_s()?;
    let t = StateSpace::series(&StateSpace::series(&sxy, &inner)?, &sux)?;
    StateSpace::parallel(&realize(&uy)?, &t.neg())
}

/// `Phi_xx^{-1} / s^2` as `[A_x, B_x, 0; -C_x A_x^2, -C_x A_x B_x, I | 0, I, 0]`.
pub fn inner_loop(sxx: &StateSpace, tol: f64) -> Result<StateSpace> {
    let (ax, bx, cx) = (sxx.a(), sxx.b(), sxx.c());
    let n = cx.nrows();
    let nx = ax.nrows();
    let violation = (cx * bx - DMatrix::<f64>::identity(n, n)).amax();
    if violation > tol {
        return Err(Error::ConstraintViolated(violation));
    }
    let mut a = DMatrix::zeros(nx + n, nx + n);
    a.view_mut((0, 0), (nx, nx)).copy_from(ax);
    a.view_mut((0, nx), (nx, n)).copy_from(bx);
    a.view_mut((nx, 0), (n, nx)).copy_from(&-(cx * ax * ax));
    a.view_mut((nx, nx), (n, n)).copy_from(&-(cx * ax * bx));
    let mut b = DMatrix::zeros(nx + n, n);
    b.view_mut((nx, 0), (n, n)).fill_with_identity();
    let mut c = DMatrix::zeros(n, nx + n);
    c.view_mut((0, nx), (n, n)).fill_with_identity();
    let x_part = sxx.output_partition().clone();
    let (perm, states) = joint_states(sxx.state_partition(), &x_part);
    let ss = StateSpace::new(a, b, c, DMatrix::zeros(n, n))?
        .with_partitions(Partition::single(nx + n), x_part.clone(), x_part)?;
    Ok(ss.permute_states(&perm, states))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Graph;

    #[test]
    fn state_feedback_specialization_matches_affine_rows() {
        let p = Plant::integrators(3);
        let k = Controller::Static(-Graph::ring(3).unwrap().laplacian());
        let cl = closed_loops_of_of(&p, &k).unwrap();
        let chk = check_of_constraints(&cl, &p, 7, 1).unwrap();
        assert!(chk.max() < 1e-10, "{chk:?}");
        let rec = recover_controller_of(&cl);
        for s in sampling::points(3, 2) {
            let got = rec.eval(s).unwrap();
            let want = k.eval(s).unwrap();
            assert!(cmax(&(got - want)) < 1e-9);
        }
    }

    #[test]
    fn zero_controller_implementation_is_zero() {
        let p = Plant::integrators(3);
        let cl = closed_loops_of_of(&p, &Controller::Static(DMatrix::zeros(3, 3))).unwrap();
        let cl = OutputFeedbackClosedLoop {
            phi_xx: LtiMap::Rational(cl.phi_xx.to_rational()),
            phi_xy: LtiMap::Rational(cl.phi_xy.to_rational()),
            phi_ux: LtiMap::Rational(cl.phi_ux.to_rational()),
            phi_uy: LtiMap::Rational(cl.phi_uy.to_rational()),
        };
        let pat = StructurePattern::scalar(Graph::path(3).unwrap());
        let k = of_structured_implementation(&cl, &pat, 1e-8).unwrap();
        let v = k.evaluate(Complex64::new(1.0, 1.0)).unwrap();
        assert!(cmax(&v) < 1e-12);
    }
}
