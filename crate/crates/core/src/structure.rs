//! Graph-structured matrices, TF-structure and structured realizations.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Graph, StructurePattern};
use crate::partition::Partition;
use crate::rational::RationalMatrix;
use crate::statespace::StateSpace;

/// Entries below this magnitude count as structural zeros.
pub const STRUCTURE_TOL: f64 = 1e-12;

fn check_dims(rows: usize, cols: usize, pat: &StructurePattern) -> Result<()> {
    if pat.rows.total() != rows || pat.cols.total() != cols {
        return Err(Error::DimensionMismatch(format!(
            "{rows}x{cols} matrix against a {}x{} pattern",
            pat.rows.total(),
            pat.cols.total()
        )));
    }
    Ok(())
}

/// Every block over a non-edge is zero.
pub fn is_graph_structured(m: &DMatrix<f64>, pat: &StructurePattern) -> Result<bool> {
    check_dims(m.nrows(), m.ncols(), pat)?;
    Ok((0..m.nrows())
        .all(|i| (0..m.ncols()).all(|j| pat.allows(i, j) || m[(i, j)].abs() < STRUCTURE_TOL)))
}

/// Every entry outside the diagonal blocks is zero.
pub fn is_block_diagonal(m: &DMatrix<f64>, rows: &Partition, cols: &Partition) -> Result<bool> {
    let pat = StructurePattern::new(Graph::isolated(rows.len())?, rows.clone(), cols.clone())?;
    is_graph_structured(m, &pat)
}

/// Every entry over a non-edge is the zero rational function.
pub fn is_tf_structured(h: &RationalMatrix, pat: &StructurePattern) -> Result<bool> {
    check_dims(h.rows(), h.cols(), pat)?;
    Ok((0..h.rows()).all(|i| (0..h.cols()).all(|j| pat.allows(i, j) || h.get(i, j).is_zero())))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RealizationStructure {
    pub structured: bool,
    pub network: bool,
}

/// Checks a realization against the graph of `pat`, using the
/// realization's own state/input/output partitions.
pub fn check_realization_structure(ss: &StateSpace, pat: &StructurePattern) -> Result<RealizationStructure> {
    let n = pat.graph.n();
    let (sp, ip, op) = (ss.state_partition(), ss.input_partition(), ss.output_partition());
    if sp.len() != n || ip.len() != n || op.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "realization partitions have {}/{}/{} blocks but graph has {n} nodes",
            sp.len(),
            ip.len(),
            op.len()
        )));
    }
    let g = &pat.graph;
    let on = |m: &DMatrix<f64>, r: &Partition, c: &Partition| {
        is_graph_structured(m, &StructurePattern::new(g.clone(), r.clone(), c.clone())?)
    };
    let structured = on(ss.a(), sp, sp)? && on(ss.b(), sp, ip)? && on(ss.c(), op, sp)? && on(ss.d(), op, ip)?;
    let d_diag = is_block_diagonal(ss.d(), op, ip)?;
    let network =
        structured && d_diag && (is_block_diagonal(ss.b(), sp, ip)? || is_block_diagonal(ss.c(), op, sp)?);
    Ok(RealizationStructure { structured, network })
}

/// Which node owns the states realizing entry `(i, j)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Orientation {
    /// The row node: `A`, `C` block-diagonal.
    #[default]
    Rows,
    /// The column node: `A`, `B` block-diagonal.
    Columns,
}

/// Structured realization of a TF-structured proper transfer matrix,
/// one controllable-canonical sub-realization per nonzero entry.
pub fn build_structured_realization(
    h: &RationalMatrix,
    pat: &StructurePattern,
    orientation: Orientation,
) -> Result<StateSpace> {
    if !is_tf_structured(h, pat)? {
        return Err(Error::NotTfStructured);
    }
    realize_entrywise(h, &pat.rows, &pat.cols, orientation)
}

/// Entrywise canonical realization; the pattern only enters through the
/// precondition of [`build_structured_realization`].
pub(crate) fn realize_entrywise(
    h: &RationalMatrix,
    rows: &Partition,
    cols: &Partition,
    orientation: Orientation,
) -> Result<StateSpace> {
    let (p, m) = (h.rows(), h.cols());
    for i in 0..p {
        for j in 0..m {
            if !h.get(i, j).is_proper() {
                return Err(Error::ImproperEntry(i, j));
            }
        }
    }
    let blocks = rows.len().max(cols.len());
    if rows.len() != cols.len() {
        return Err(Error::DimensionMismatch("row and column partitions differ in block count".into()));
    }
    // (owner node, i, j) in state order
    let mut order = Vec::new();
    for node in 0..blocks {
        match orientation {
            Orientation::Rows => {
                for i in rows.range(node) {
                    order.extend((0..m).map(|j| (i, j)));
                }
            }
            Orientation::Columns => {
                for j in cols.range(node) {
                    order.extend((0..p).map(|i| (i, j)));
                }
            }
        }
    }
    let owner = |i: usize, j: usize| match orientation {
        Orientation::Rows => rows.block_of(i).expect("row in range"),
        Orientation::Columns => cols.block_of(j).expect("column in range"),
    };
    let mut sizes = vec![0usize; blocks];
    let mut dynamic = Vec::new();
    let mut d = DMatrix::zeros(p, m);
    for &(i, j) in &order {
        let e = h.get(i, j);
        if e.is_zero() {
            continue;
        }
        d[(i, j)] = e.direct_term();
        let k = e.den().degree();
        if k > 0 {
            sizes[owner(i, j)] += k;
            dynamic.push((i, j));
        }
    }
    let n: usize = sizes.iter().sum();
    let mut a = DMatrix::zeros(n, n);
    let mut b = DMatrix::zeros(n, m);
    let mut c = DMatrix::zeros(p, n);
    let mut offset = 0;
    for (i, j) in dynamic {
        let e = h.get(i, j);
        let den = e.den().coeffs();
        let k = den.len() - 1;
        let dij = d[(i, j)];
        for r in 0..k {
            if r + 1 < k {
                a[(offset + r, offset + r + 1)] = 1.0;
            }
            a[(offset + k - 1, offset + r)] = -den[r];
            c[(i, offset + r)] = e.num().coeff(r) - dij * den[r];
        }
        b[(offset + k - 1, j)] = 1.0;
        offset += k;
    }
    StateSpace::new(a, b, c, d)?.with_partitions(Partition::new(sizes)?, cols.clone(), rows.clone())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct TridiagCounterexample {
    pub ss: StateSpace,
    pub tf_structured: bool,
}

/// `A = tridiag(1, -2, 1)`, `B = C = I`, `D = 0`: structured (and network)
/// realizable on the path graph while `(sI - A)^{-1}` is dense.
pub fn tridiag_counterexample(n: usize) -> Result<TridiagCounterexample> {
    if n < 3 {
        return Err(Error::InvalidArgument("tridiagonal counterexample needs n >= 3".into()));
    }
    let a = DMatrix::from_fn(n, n, |i, j| match i.abs_diff(j) {
        0 => -2.0,
        1 => 1.0,
        _ => 0.0,
    });
    let ss = StateSpace::new(a, DMatrix::identity(n, n), DMatrix::identity(n, n), DMatrix::zeros(n, n))?;
    let tf_structured = is_tf_structured(&ss.tf_of(), &StructurePattern::scalar(Graph::path(n)?))?;
    Ok(TridiagCounterexample { ss, tf_structured })
}
