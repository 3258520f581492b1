//! Undirected graphs with mandatory self-loops, and the block-sparsity
//! patterns they induce on matrices.

use std::collections::VecDeque;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::partition::Partition;

/// Undirected graph on `n` nodes. Every node carries a self-loop.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "GraphJson", into = "GraphJson")]
pub struct Graph {
    n: usize,
    adj: Vec<bool>,
}

/// Wire format: `{"n": 3, "edges": [[0, 1], [1, 2]]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GraphJson {
    pub n: usize,
    #[serde(default)]
    pub edges: Vec<[usize; 2]>,
}

impl Graph {
    /// Builds a graph from an edge list. Duplicate and reversed edges are
    /// tolerated and self-loops are implied.
    pub fn new(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut g = Graph::isolated(n)?;
        for &(i, j) in edges {
            if i >= n || j >= n {
                return Err(Error::InvalidArgument(format!("edge ({i}, {j}) out of range for n = {n}")));
            }
            g.set(i, j);
        }
        Ok(g)
    }

    /// Self-loops only.
    pub fn isolated(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument("graph needs at least one node".into()));
        }
        let mut adj = vec![false; n * n];
        for i in 0..n {
            adj[i * n + i] = true;
        }
        Ok(Graph { n, adj })
    }

    pub fn complete(n: usize) -> Result<Self> {
        let mut g = Graph::isolated(n)?;
        g.adj.iter_mut().for_each(|a| *a = true);
        Ok(g)
    }

    pub fn path(n: usize) -> Result<Self> {
        let edges: Vec<_> = (1..n).map(|i| (i - 1, i)).collect();
        Graph::new(n, &edges)
    }

    /// Nearest-neighbour ring on `n >= 3` nodes.
    pub fn ring(n: usize) -> Result<Self> {
        if n < 3 {
            return Err(Error::InvalidArgument(format!("ring needs n >= 3, got {n}")));
        }
        let edges: Vec<_> = (0..n).map(|i| (i, (i + 1) % n)).collect();
        Graph::new(n, &edges)
    }

    /// `d`-dimensional torus `Z_n^d` with an edge between nodes whose
    /// coordinates all differ by at most one (circularly). Nodes are
    /// indexed row-major.
    pub fn torus(n: usize, d: usize) -> Result<Self> {
        if n < 3 || d == 0 {
            return Err(Error::InvalidArgument(format!("torus needs n >= 3 and d >= 1, got n = {n}, d = {d}")));
        }
        let total = n
            .checked_pow(d as u32)
            .ok_or_else(|| Error::InvalidArgument("torus too large".into()))?;
        let mut g = Graph::isolated(total)?;
        for i in 0..total {
            let ci = torus_coords(i, n, d);
            for j in 0..total {
                let cj = torus_coords(j, n, d);
                if ci.iter().zip(&cj).all(|(&a, &b)| circular_distance(a, b, n) <= 1) {
                    g.set(i, j);
                }
            }
        }
        Ok(g)
    }

    /// Graph from a dense boolean adjacency. Symmetry is enforced by taking
    /// the union with the transpose.
    pub fn from_adjacency(adj: &DMatrix<bool>) -> Result<Self> {
        if adj.nrows() != adj.ncols() {
            return Err(Error::DimensionMismatch("adjacency must be square".into()));
        }
        let mut g = Graph::isolated(adj.nrows())?;
        for i in 0..adj.nrows() {
            for j in 0..adj.ncols() {
                if adj[(i, j)] {
                    g.set(i, j);
                }
            }
        }
        Ok(g)
    }

    fn set(&mut self, i: usize, j: usize) {
        self.adj[i * self.n + j] = true;
        self.adj[j * self.n + i] = true;
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.adj[i * self.n + j]
    }

    /// Neighbours of `i`, excluding `i` itself.
    pub fn neighbors(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        (0..self.n).filter(move |&j| j != i && self.has_edge(i, j))
    }

    /// Undirected edges `(i, j)` with `i < j`.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for i in 0..self.n {
            for j in i + 1..self.n {
                if self.has_edge(i, j) {
                    out.push((i, j));
                }
            }
        }
        out
    }

    pub fn adjacency(&self) -> DMatrix<bool> {
        DMatrix::from_fn(self.n, self.n, |i, j| self.has_edge(i, j))
    }

    /// 0/1 adjacency with the diagonal cleared.
    pub fn off_diagonal_adjacency(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.n, self.n, |i, j| if i != j && self.has_edge(i, j) { 1.0 } else { 0.0 })
    }

    /// The `b`-hops graph: `i ~ j` iff a walk of length at most `b` joins
    /// them. With self-loops this is the boolean power `A^b`.
    pub fn b_hops(&self, b: usize) -> Result<Graph> {
        if b == 0 {
            return Err(Error::InvalidArgument("b-hops closure needs b >= 1".into()));
        }
        let mut cur = self.clone();
        for _ in 1..b {
            let next = cur.product(self)?;
            if next == cur {
                break;
            }
            cur = next;
        }
        Ok(cur)
    }

    /// Boolean matrix product of two adjacencies on the same node set.
    pub fn product(&self, other: &Graph) -> Result<Graph> {
        if self.n != other.n {
            return Err(Error::DimensionMismatch(format!("graphs have {} and {} nodes", self.n, other.n)));
        }
        let n = self.n;
        let mut adj = vec![false; n * n];
        for i in 0..n {
            for k in 0..n {
                if !self.adj[i * n + k] {
                    continue;
                }
                for j in 0..n {
                    if other.adj[k * n + j] {
                        adj[i * n + j] = true;
                    }
                }
            }
        }
        Ok(Graph { n, adj })
    }

    pub fn is_connected(&self) -> bool {
        let mut seen = vec![false; self.n];
        let mut queue = VecDeque::from([0usize]);
        seen[0] = true;
        let mut count = 1;
        while let Some(i) = queue.pop_front() {
            for j in self.neighbors(i) {
                if !seen[j] {
                    seen[j] = true;
                    count += 1;
                    queue.push_back(j);
                }
            }
        }
        count == self.n
    }

    /// Graph Laplacian `diag(A 1) - A` of the loop-free graph.
    pub fn laplacian(&self) -> DMatrix<f64> {
        let a = self.off_diagonal_adjacency();
        let mut l = -a.clone();
        for i in 0..self.n {
            l[(i, i)] = a.row(i).sum();
        }
        l
    }
}

impl TryFrom<GraphJson> for Graph {
    type Error = Error;

    fn try_from(g: GraphJson) -> Result<Self> {
        let edges: Vec<_> = g.edges.iter().map(|e| (e[0], e[1])).collect();
        Graph::new(g.n, &edges)
    }
}

impl From<Graph> for GraphJson {
    fn from(g: Graph) -> Self {
        GraphJson { n: g.n, edges: g.edges().into_iter().map(|(i, j)| [i, j]).collect() }
    }
}

pub fn circular_distance(a: usize, b: usize, n: usize) -> usize {
    let d = a.abs_diff(b) % n;
    d.min(n - d)
}

/// Row-major coordinates of a flat torus index.
pub fn torus_coords(mut idx: usize, n: usize, d: usize) -> Vec<usize> {
    let mut c = vec![0; d];
    for k in (0..d).rev() {
        c[k] = idx % n;
        idx /= n;
    }
    c
}

/// Graph plus row/column block partitions: the set of block matrices whose
/// nonzero blocks sit on edges.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StructurePattern {
    pub graph: Graph,
    pub rows: Partition,
    pub cols: Partition,
}

impl StructurePattern {
    pub fn new(graph: Graph, rows: Partition, cols: Partition) -> Result<Self> {
        if rows.len() != graph.n() || cols.len() != graph.n() {
            return Err(Error::DimensionMismatch(format!(
                "pattern partitions have {} and {} blocks but graph has {} nodes",
                rows.len(),
                cols.len(),
                graph.n()
            )));
        }
        Ok(StructurePattern { graph, rows, cols })
    }

    /// One scalar channel per node on both sides.
    pub fn scalar(graph: Graph) -> Self {
        let n = graph.n();
        StructurePattern { graph, rows: Partition::ones(n), cols: Partition::ones(n) }
    }

    /// Whether the flat entry `(i, j)` lies in an allowed block.
    pub fn allows(&self, i: usize, j: usize) -> bool {
        match (self.rows.block_of(i), self.cols.block_of(j)) {
            (Some(bi), Some(bj)) => self.graph.has_edge(bi, bj),
            _ => false,
        }
    }
}
