//! System level parameterization: closed-loop maps, constraint checks,
//! controller recovery and structure-preserving implementations.

mod output_feedback;
mod state_feedback;

pub use output_feedback::*;
pub use state_feedback::*;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::partition::Partition;
use crate::rational::RationalMatrix;
use crate::statespace::{matrix_from_rows, matrix_to_rows, StateSpace};
use crate::structure::{realize_entrywise, Orientation};

/// `x' = A x + B1 w + B2 u`, `z = C1 x + D12 u`, `y = C2 x + D21 w`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PlantJson", into = "PlantJson")]
pub struct Plant {
    pub a: DMatrix<f64>,
    pub b1: DMatrix<f64>,
    pub b2: DMatrix<f64>,
    pub c1: DMatrix<f64>,
    pub d12: DMatrix<f64>,
    pub c2: DMatrix<f64>,
    pub d21: DMatrix<f64>,
    pub state_part: Partition,
    pub input_part: Partition,
    pub output_part: Partition,
}

impl Plant {
    /// State feedback plant with `B1 = I`, `C2 = I` and no performance
    /// output.
    pub fn new(a: DMatrix<f64>, b2: DMatrix<f64>) -> Result<Self> {
        let n = a.nrows();
        if a.ncols() != n || b2.nrows() != n {
            return Err(Error::DimensionMismatch(format!("A {:?}, B2 {:?}", a.shape(), b2.shape())));
        }
        let m = b2.ncols();
        Ok(Plant {
            b1: DMatrix::identity(n, n),
            c1: DMatrix::zeros(0, n),
            d12: DMatrix::zeros(0, m),
            c2: DMatrix::identity(n, n),
            d21: DMatrix::zeros(n, n),
            state_part: Partition::ones(n),
            input_part: Partition::ones(m),
            output_part: Partition::ones(n),
            a,
            b2,
        })
    }

    /// `x' = u + w` on `n` scalar nodes.
    pub fn integrators(n: usize) -> Self {
        Plant::new(DMatrix::zeros(n, n), DMatrix::identity(n, n)).expect("square")
    }

    pub fn with_measurement(mut self, c2: DMatrix<f64>, output_part: Partition) -> Result<Self> {
        if c2.ncols() != self.n() {
            return Err(Error::DimensionMismatch(format!("C2 has {} columns, expected {}", c2.ncols(), self.n())));
        }
        output_part.check_total(c2.nrows(), "measurement")?;
        self.d21 = DMatrix::zeros(c2.nrows(), self.b1.ncols());
        self.c2 = c2;
        self.output_part = output_part;
        Ok(self)
    }

    pub fn with_partitions(mut self, state: Partition, input: Partition) -> Result<Self> {
        state.check_total(self.n(), "state")?;
        input.check_total(self.m(), "input")?;
        self.state_part = state;
        self.input_part = input;
        Ok(self)
    }

    pub fn n(&self) -> usize {
        self.a.nrows()
    }

    pub fn m(&self) -> usize {
        self.b2.ncols()
    }

    pub fn p(&self) -> usize {
        self.c2.nrows()
    }

    pub(crate) fn resolvent_operand(&self, s: Complex64) -> DMatrix<Complex64> {
        DMatrix::<Complex64>::identity(self.n(), self.n()) * s - self.a.map(Complex64::from)
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct PlantPartitionsJson {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub state: Option<Partition>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub input: Option<Partition>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<Partition>,
}

/// Wire format; `B1` and `C2` default to identities, `D21`, `C1`, `D12`
/// to zero.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PlantJson {
    #[serde(rename = "A")]
    pub a: Vec<Vec<f64>>,
    #[serde(rename = "B1", default, skip_serializing_if = "Option::is_none")]
    pub b1: Option<Vec<Vec<f64>>>,
    #[serde(rename = "B2")]
    pub b2: Vec<Vec<f64>>,
    #[serde(rename = "C1", default, skip_serializing_if = "Option::is_none")]
    pub c1: Option<Vec<Vec<f64>>>,
    #[serde(rename = "D12", default, skip_serializing_if = "Option::is_none")]
    pub d12: Option<Vec<Vec<f64>>>,
    #[serde(rename = "C2", default, skip_serializing_if = "Option::is_none")]
    pub c2: Option<Vec<Vec<f64>>>,
    #[serde(rename = "D21", default, skip_serializing_if = "Option::is_none")]
    pub d21: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    pub partitions: PlantPartitionsJson,
}

impl TryFrom<PlantJson> for Plant {
    type Error = Error;

    fn try_from(j: PlantJson) -> Result<Self> {
        let n = j.a.len();
        let m = j.b2.first().map_or(0, Vec::len);
        let a = matrix_from_rows(&j.a, n, n, "A")?;
        let b2 = matrix_from_rows(&j.b2, n, m, "B2")?;
        let mut plant = Plant::new(a, b2)?;
        if let Some(b1) = &j.b1 {
            let w = b1.first().map_or(0, Vec::len);
            plant.b1 = matrix_from_rows(b1, n, w, "B1")?;
            plant.d21 = DMatrix::zeros(n, w);
        }
        if let Some(c1) = &j.c1 {
            plant.c1 = matrix_from_rows(c1, c1.len(), n, "C1")?;
            plant.d12 = DMatrix::zeros(c1.len(), m);
        }
        if let Some(d12) = &j.d12 {
            plant.d12 = matrix_from_rows(d12, plant.c1.nrows(), m, "D12")?;
        }
        if let Some(c2) = &j.c2 {
            let out = j.partitions.output.clone().unwrap_or_else(|| Partition::ones(c2.len()));
            plant = plant.with_measurement(matrix_from_rows(c2, c2.len(), n, "C2")?, out)?;
        }
        if let Some(d21) = &j.d21 {
            plant.d21 = matrix_from_rows(d21, plant.p(), plant.b1.ncols(), "D21")?;
        }
        let state = j.partitions.state.unwrap_or_else(|| plant.state_part.clone());
        let input = j.partitions.input.unwrap_or_else(|| plant.input_part.clone());
        plant.with_partitions(state, input)
    }
}

impl From<Plant> for PlantJson {
    fn from(p: Plant) -> Self {
        PlantJson {
            a: matrix_to_rows(&p.a),
            b1: Some(matrix_to_rows(&p.b1)),
            b2: matrix_to_rows(&p.b2),
            c1: Some(matrix_to_rows(&p.c1)),
            d12: Some(matrix_to_rows(&p.d12)),
            c2: Some(matrix_to_rows(&p.c2)),
            d21: Some(matrix_to_rows(&p.d21)),
            partitions: PlantPartitionsJson {
                state: Some(p.state_part),
                input: Some(p.input_part),
                output: Some(p.output_part),
            },
        }
    }
}

/// A closed-loop map in either representation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum LtiMap {
    Rational(RationalMatrix),
    StateSpace(StateSpace),
}

impl LtiMap {
    pub fn eval(&self, s: Complex64) -> Result<DMatrix<Complex64>> {
        match self {
            LtiMap::Rational(r) => r.eval(s),
            LtiMap::StateSpace(ss) => ss.evaluate(s),
        }
    }

    pub fn shape(&self) -> (usize, usize) {
        match self {
            LtiMap::Rational(r) => (r.rows(), r.cols()),
            LtiMap::StateSpace(ss) => (ss.n_outputs(), ss.n_inputs()),
        }
    }

    pub fn to_rational(&self) -> RationalMatrix {
        match self {
            LtiMap::Rational(r) => r.clone(),
            LtiMap::StateSpace(ss) => ss.tf_of(),
        }
    }

    /// Converts rational maps entrywise (states owned by row nodes).
    pub fn to_state_space(&self) -> Result<StateSpace> {
        match self {
            LtiMap::Rational(r) => rational_to_state_space(r),
            LtiMap::StateSpace(ss) => Ok(ss.clone()),
        }
    }

    pub fn is_strictly_proper(&self) -> bool {
        match self {
            LtiMap::Rational(r) => r.is_strictly_proper(),
            LtiMap::StateSpace(ss) => ss.d().amax() == 0.0,
        }
    }
}

pub(crate) fn rational_to_state_space(r: &RationalMatrix) -> Result<StateSpace> {
    let (rows, cols) = (r.row_partition(), r.col_partition());
    if rows.len() == cols.len() {
        realize_entrywise(r, rows, cols, Orientation::Rows)
    } else {
        let ss = realize_entrywise(r, &Partition::single(r.rows()), &Partition::single(r.cols()), Orientation::Rows)?;
        let states = Partition::single(ss.n_states());
        ss.with_partitions(states, cols.clone(), rows.clone())
    }
}

/// A controller in any of the supported forms.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum Controller {
    Static(#[serde(with = "rows_serde")] DMatrix<f64>),
    Rational(RationalMatrix),
    StateSpace(StateSpace),
    /// Evaluated on demand from closed-loop maps; has no finite form.
    #[serde(skip)]
    Frequency(FrequencyController),
}

impl Controller {
    pub fn eval(&self, s: Complex64) -> Result<DMatrix<Complex64>> {
        match self {
            Controller::Static(k) => Ok(k.map(Complex64::from)),
            Controller::Rational(r) => r.eval(s),
            Controller::StateSpace(ss) => ss.evaluate(s),
            Controller::Frequency(f) => f.eval(s),
        }
    }

    pub fn shape(&self) -> (usize, usize) {
        match self {
            Controller::Static(k) => k.shape(),
            Controller::Rational(r) => (r.rows(), r.cols()),
            Controller::StateSpace(ss) => (ss.n_outputs(), ss.n_inputs()),
            Controller::Frequency(f) => f.shape(),
        }
    }

    pub fn to_state_space(&self) -> Result<StateSpace> {
        match self {
            Controller::Static(k) => Ok(StateSpace::from_static(k.clone())),
            Controller::Rational(r) => rational_to_state_space(r),
            Controller::StateSpace(ss) => Ok(ss.clone()),
            Controller::Frequency(_) => {
                Err(Error::InvalidArgument("a frequency-response controller has no state-space form".into()))
            }
        }
    }
}

/// Controller recovered per frequency from closed-loop maps.
#[derive(Debug, Clone)]
pub enum FrequencyController {
    /// `Phi_u Phi_x^{-1}`.
    StateFeedback(ClosedLoopPair),
    /// `Phi_uy - Phi_ux Phi_xx^{-1} Phi_xy`.
    OutputFeedback(OutputFeedbackClosedLoop),
}

impl FrequencyController {
    pub fn eval(&self, s: Complex64) -> Result<DMatrix<Complex64>> {
        match self {
            FrequencyController::StateFeedback(cl) => {
                let x = cl.phi_x.eval(s)?;
                let u = cl.phi_u.eval(s)?;
                let xt = solve_checked(&x.transpose(), &u.transpose()).ok_or(Error::SingularPhiX)?;
                Ok(xt.transpose())
            }
            FrequencyController::OutputFeedback(cl) => recover_at(cl, s),
        }
    }

    pub fn shape(&self) -> (usize, usize) {
        match self {
            FrequencyController::StateFeedback(cl) => (cl.phi_u.shape().0, cl.phi_x.shape().0),
            FrequencyController::OutputFeedback(cl) => cl.phi_uy.shape(),
        }
    }
}

/// `M^{-1} R` with a relative pivot check.
pub(crate) fn solve_checked(m: &DMatrix<Complex64>, r: &DMatrix<Complex64>) -> Option<DMatrix<Complex64>> {
    let lu = m.clone().lu();
    let diag: Vec<f64> = lu.u().diagonal().iter().map(|z| z.norm()).collect();
    let big = diag.iter().fold(0.0f64, |a, &b| a.max(b));
    if diag.iter().any(|&d| d <= 1e-13 * big) || big == 0.0 {
        return None;
    }
    lu.solve(r)
}

pub(crate) mod rows_serde {
    use nalgebra::DMatrix;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(m: &DMatrix<f64>, s: S) -> Result<S::Ok, S::Error> {
        crate::statespace::matrix_to_rows(m).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<DMatrix<f64>, D::Error> {
        let rows = Vec::<Vec<f64>>::deserialize(d)?;
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        crate::statespace::matrix_from_rows(&rows, r, c, "matrix").map_err(serde::de::Error::custom)
    }
}

/// Largest entry magnitude of a complex matrix.
pub(crate) fn cmax<R: nalgebra::Dim, C: nalgebra::Dim, S: nalgebra::RawStorage<Complex64, R, C>>(
    m: &nalgebra::Matrix<Complex64, R, C, S>,
) -> f64 {
    m.iter().fold(0.0, |a, z| a.max(z.norm()))
}
