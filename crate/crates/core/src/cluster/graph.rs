use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Weighted undirected graph stored as a symmetric adjacency matrix with a
/// zero diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct Graph {
    adjacency: DMatrix<f64>,
}

impl Graph {
    pub fn new(adjacency: DMatrix<f64>) -> Result<Self> {
        let (r, c) = adjacency.shape();
        if r != c || r == 0 {
            return Err(Error::InvalidGraph(format!(
                "adjacency must be a non-empty square matrix, got {r} x {c}"
            )));
        }
        for i in 0..r {
            if adjacency[(i, i)] != 0.0 {
                return Err(Error::InvalidGraph(format!("self-loop on node {i}")));
            }
            for j in 0..i {
                let w = adjacency[(i, j)];
                if !w.is_finite() {
                    return Err(Error::InvalidGraph(format!(
                        "non-finite weight on ({i}, {j})"
                    )));
                }
                if w != adjacency[(j, i)] {
                    return Err(Error::InvalidGraph(format!(
                        "asymmetric weights on ({i}, {j})"
                    )));
                }
            }
        }
        Ok(Self { adjacency })
    }

    /// Builds a graph from 0-indexed `(i, j, weight)` edges.
    pub fn from_edges(n: usize, edges: &[(usize, usize, f64)]) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidGraph("graph needs at least one node".into()));
        }
        let mut adj = DMatrix::zeros(n, n);
        for &(i, j, w) in edges {
            if i >= n || j >= n {
                return Err(Error::InvalidGraph(format!(
                    "edge ({i}, {j}) references a node outside 0..{n}"
                )));
            }
            if i == j {
                return Err(Error::InvalidGraph(format!("self-loop on node {i}")));
            }
            adj[(i, j)] = w;
            adj[(j, i)] = w;
        }
        Self::new(adj)
    }

    pub fn n(&self) -> usize {
        self.adjacency.nrows()
    }

    pub fn adjacency(&self) -> &DMatrix<f64> {
        &self.adjacency
    }

    /// Upper-triangle edges `(i, j, w)` with `i < j`.
    pub fn edges(&self) -> Vec<(usize, usize, f64)> {
        let n = self.n();
        let mut out = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                let w = self.adjacency[(i, j)];
                if w != 0.0 {
                    out.push((i, j, w));
                }
            }
        }
        out
    }

    /// `1 + Σ_j V_kj²` for every node: the nullifier variance on vacuum.
    pub fn vacuum_references(&self) -> Vec<f64> {
        (0..self.n())
            .map(|k| 1.0 + self.adjacency.row(k).iter().map(|w| w * w).sum::<f64>())
            .collect()
    }
}

/// Names accepted by [`builtin_graph`].
pub const BUILTIN_GRAPHS: &[&str] = &[
    "linear",
    "diagonal_square",
    "t_shape",
    "square",
    "ring",
    "star",
    "pentagon_dealer",
];

/// Unit-weight graphs of the cluster catalog.
///
/// * `linear` — path `0 - 1 - … - (n-1)`, `n ≥ 2`.
/// * `diagonal_square` — ladder of `n/2` rungs where every square carries the
///   diagonal from its upper-left to lower-right corner; `n` even, `n ≥ 4`.
///   For `n = 4` this is the 4-cycle `0-1-3-2` plus the diagonal `0-3`.
/// * `t_shape` — bar `0 - 1 - 2` with a stem `1 - 3 - 4 - …`, `n ≥ 4`.
/// * `square` — the 4-cycle.
/// * `ring` — `n`-cycle, `n ≥ 3`.
/// * `star` — hub 0 joined to every other node, `n ≥ 2`.
/// * `pentagon_dealer` — players 0..4 on a pentagon, dealer 5 joined to all.
pub fn builtin_graph(name: &str, n: usize) -> Result<Graph> {
    let incompatible = || Error::IncompatibleSize {
        name: name.to_string(),
        n,
    };
    let mut edges: Vec<(usize, usize)> = Vec::new();
    match name {
        "linear" => {
            if n < 2 {
                return Err(incompatible());
            }
            edges.extend((0..n - 1).map(|i| (i, i + 1)));
        }
        "diagonal_square" => {
            if n < 4 || !n.is_multiple_of(2) {
                return Err(incompatible());
            }
            edges.push((0, 1));
            for k in 0..n / 2 - 1 {
                let a = 2 * k;
                edges.extend([(a, a + 2), (a + 1, a + 3), (a + 2, a + 3), (a, a + 3)]);
            }
        }
        "t_shape" => {
            if n < 4 {
                return Err(incompatible());
            }
            edges.extend([(0, 1), (1, 2), (1, 3)]);
            edges.extend((3..n - 1).map(|i| (i, i + 1)));
        }
        "square" => {
            if n != 4 {
                return Err(incompatible());
            }
            edges.extend([(0, 1), (1, 2), (2, 3), (3, 0)]);
        }
        "ring" => {
            if n < 3 {
                return Err(incompatible());
            }
            edges.extend((0..n).map(|i| (i, (i + 1) % n)));
        }
        "star" => {
            if n < 2 {
                return Err(incompatible());
            }
            edges.extend((1..n).map(|i| (0, i)));
        }
        "pentagon_dealer" => {
            if n != 6 {
                return Err(incompatible());
            }
            edges.extend((0..5).map(|i| (i, (i + 1) % 5)));
            edges.extend((0..5).map(|i| (i, 5)));
        }
        _ => return Err(Error::UnknownGraph(name.to_string())),
    }
    let weighted: Vec<_> = edges.into_iter().map(|(i, j)| (i, j, 1.0)).collect();
    Graph::from_edges(n, &weighted)
}
