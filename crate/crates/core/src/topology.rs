//! Qubit connectivity graphs.
//!
//! A [`Topology`] is an undirected, connected, simple graph on qubits
//! `0..num_qubits`. All-pairs hop distances are computed once at
//! construction, since distance lookups dominate the annealing hot loop.

use std::collections::VecDeque;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TopologyError {
    #[error("topology must have at least one qubit")]
    Empty,
    #[error("cycle topology needs at least 3 qubits, got {0}")]
    CycleTooSmall(usize),
    #[error("edge ({0}, {1}) is out of range for {2} qubits")]
    OutOfRange(usize, usize, usize),
    #[error("self-loop on qubit {0}")]
    SelfLoop(usize),
    #[error("duplicate edge ({0}, {1})")]
    DuplicateEdge(usize, usize),
    #[error("topology is disconnected: qubit {0} is unreachable from qubit 0")]
    Disconnected(usize),
    #[error("cannot parse topology {0:?}: expected line:N, cycle:N, grid:RxC")]
    BadShorthand(String),
}

/// Undirected connected qubit graph with precomputed distances.
#[derive(Clone, PartialEq, Eq)]
pub struct Topology {
    num_qubits: usize,
    edges: Vec<(usize, usize)>,
    adjacency: Vec<Vec<usize>>,
    dist: Vec<u32>,
}

impl fmt::Debug for Topology {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Topology")
            .field("num_qubits", &self.num_qubits)
            .field("edges", &self.edges)
            .finish()
    }
}

impl Topology {
    pub fn line(n: usize) -> Result<Self, TopologyError> {
        let edges: Vec<_> = (1..n).map(|i| (i - 1, i)).collect();
        Self::from_edges(n, &edges)
    }

    pub fn cycle(n: usize) -> Result<Self, TopologyError> {
        if n < 3 {
            return Err(TopologyError::CycleTooSmall(n));
        }
        let mut edges: Vec<_> = (1..n).map(|i| (i - 1, i)).collect();
        edges.push((0, n - 1));
        Self::from_edges(n, &edges)
    }

    /// Square grid with qubit index `row * cols + col`.
    pub fn grid(rows: usize, cols: usize) -> Result<Self, TopologyError> {
        let mut edges = Vec::new();
        for r in 0..rows {
            for c in 0..cols {
                let q = r * cols + c;
                if c + 1 < cols {
                    edges.push((q, q + 1));
                }
                if r + 1 < rows {
                    edges.push((q, q + cols));
                }
            }
        }
        Self::from_edges(rows * cols, &edges)
    }

    pub fn from_edges(n: usize, edge_list: &[(usize, usize)]) -> Result<Self, TopologyError> {
        if n == 0 {
            return Err(TopologyError::Empty);
        }
        let mut adjacency = vec![Vec::new(); n];
        let mut edges = Vec::with_capacity(edge_list.len());
        for &(a, b) in edge_list {
            if a >= n || b >= n {
                return Err(TopologyError::OutOfRange(a, b, n));
            }
            if a == b {
                return Err(TopologyError::SelfLoop(a));
            }
            let e = (a.min(b), a.max(b));
            if adjacency[e.0].contains(&e.1) {
                return Err(TopologyError::DuplicateEdge(e.0, e.1));
            }
            adjacency[e.0].push(e.1);
            adjacency[e.1].push(e.0);
            edges.push(e);
        }
        edges.sort_unstable();
        for nbrs in &mut adjacency {
            nbrs.sort_unstable();
        }

        let mut dist = vec![u32::MAX; n * n];
        for src in 0..n {
            let row = &mut dist[src * n..(src + 1) * n];
            row[src] = 0;
            let mut queue = VecDeque::from([src]);
            while let Some(u) = queue.pop_front() {
                for &v in &adjacency[u] {
                    if row[v] == u32::MAX {
                        row[v] = row[u] + 1;
                        queue.push_back(v);
                    }
                }
            }
            if let Some(q) = row.iter().position(|&d| d == u32::MAX) {
                return Err(TopologyError::Disconnected(q));
            }
        }

        Ok(Topology {
            num_qubits: n,
            edges,
            adjacency,
            dist,
        })
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    /// Edges as `(low, high)` pairs in ascending order.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn neighbours(&self, q: usize) -> &[usize] {
        &self.adjacency[q]
    }

    pub fn is_edge(&self, a: usize, b: usize) -> bool {
        a < self.num_qubits && b < self.num_qubits && self.distance(a, b) == 1
    }

    #[inline]
    pub fn distance(&self, i: usize, j: usize) -> u32 {
        self.dist[i * self.num_qubits + j]
    }

    /// Shortest path from `i` to `j`, both included.
    ///
    /// BFS from `i` visits neighbours in ascending index order and keeps the
    /// first parent found, so the path is deterministic.
    pub fn shortest_path(&self, i: usize, j: usize) -> Vec<usize> {
        if i == j {
            return vec![i];
        }
        let mut parent = vec![usize::MAX; self.num_qubits];
        parent[i] = i;
        let mut queue = VecDeque::from([i]);
        'bfs: while let Some(u) = queue.pop_front() {
            for &v in &self.adjacency[u] {
                if parent[v] == usize::MAX {
                    parent[v] = u;
                    if v == j {
                        break 'bfs;
                    }
                    queue.push_back(v);
                }
            }
        }
        let mut path = vec![j];
        let mut q = j;
        while q != i {
            q = parent[q];
            path.push(q);
        }
        path.reverse();
        path
    }

    pub fn to_file(&self) -> TopologyFile {
        TopologyFile {
            qubits: self.num_qubits,
            edges: self.edges.iter().map(|&(a, b)| [a, b]).collect(),
        }
    }
}

/// JSON form: `{"qubits": N, "edges": [[i, j], ...]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TopologyFile {
    pub qubits: usize,
    pub edges: Vec<[usize; 2]>,
}

impl TryFrom<TopologyFile> for Topology {
    type Error = TopologyError;

    fn try_from(file: TopologyFile) -> Result<Self, Self::Error> {
        let edges: Vec<_> = file.edges.iter().map(|e| (e[0], e[1])).collect();
        Topology::from_edges(file.qubits, &edges)
    }
}

/// Parses `line:N`, `cycle:N` or `grid:RxC`.
impl FromStr for Topology {
    type Err = TopologyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || TopologyError::BadShorthand(s.to_string());
        let (kind, arg) = s.trim().split_once(':').ok_or_else(bad)?;
        match kind {
            "line" => Topology::line(arg.parse().map_err(|_| bad())?),
            "cycle" => Topology::cycle(arg.parse().map_err(|_| bad())?),
            "grid" => {
                let (r, c) = arg.split_once(['x', 'X']).ok_or_else(bad)?;
                let rows = r.parse().map_err(|_| bad())?;
                let cols = c.parse().map_err(|_| bad())?;
                Topology::grid(rows, cols)
            }
            _ => Err(bad()),
        }
    }
}
