//! Finite S-regular graphs: representation, I/O, verification, construction,
//! sampling and local statistics.

mod balls;
mod construct;
mod refine;
mod sample;
mod tree;

use std::collections::VecDeque;
use std::fmt;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quotient::QuotientSpec;

pub use balls::{ball, count_cycles_in_ball, cycle_scaling_experiment, CycleScaling, CycleScalingRow};
pub use construct::construct_deterministic;
pub use refine::{coarsest_equitable_partition, EquitablePartition};
pub use sample::{sample_configuration_model, sample_with_rng, PieceStrategy, SamplerOptions};
pub use tree::{build_tree_ball, TreeBall, DEFAULT_TREE_CAP};

/// Undirected simple graph on vertices `0..n` with sorted adjacency lists.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    adj: Vec<Vec<usize>>,
}

impl Graph {
    pub fn empty(n: usize) -> Self {
        Graph { adj: vec![Vec::new(); n] }
    }

    /// Builds from an edge list, rejecting loops, parallel edges and
    /// out-of-range endpoints.
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut adj = vec![Vec::new(); n];
        for &(u, v) in edges {
            if u >= n || v >= n {
                return Err(Error::Argument(format!("edge ({u},{v}) out of range for {n} vertices")));
            }
            if u == v {
                return Err(Error::Argument(format!("loop at vertex {u}")));
            }
            adj[u].push(v);
            adj[v].push(u);
        }
        for (u, list) in adj.iter_mut().enumerate() {
            list.sort_unstable();
            if list.windows(2).any(|w| w[0] == w[1]) {
                return Err(Error::Argument(format!("parallel edge at vertex {u}")));
            }
        }
        Ok(Graph { adj })
    }

    /// Adjacency lists must already be symmetric, sorted and simple.
    pub(crate) fn from_sorted_adjacency(adj: Vec<Vec<usize>>) -> Self {
        debug_assert!(adj.iter().enumerate().all(|(u, l)| l.windows(2).all(|w| w[0] < w[1]) && !l.contains(&u)));
        Graph { adj }
    }

    pub fn cycle(n: usize) -> Self {
        let edges: Vec<_> = (0..n).map(|i| (i, (i + 1) % n)).collect();
        Graph::from_edges(n, &edges).expect("cycle of length >= 3")
    }

    pub fn complete(n: usize) -> Self {
        let edges: Vec<_> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
        Graph::from_edges(n, &edges).expect("complete graph is simple")
    }

    pub fn complete_bipartite(a: usize, b: usize) -> Self {
        let edges: Vec<_> = (0..a).flat_map(|i| (0..b).map(move |j| (i, a + j))).collect();
        Graph::from_edges(a + b, &edges).expect("complete bipartite graph is simple")
    }

    pub fn path(n: usize) -> Self {
        let edges: Vec<_> = (1..n).map(|i| (i - 1, i)).collect();
        Graph::from_edges(n, &edges).expect("path is simple")
    }

    pub fn n(&self) -> usize {
        self.adj.len()
    }

    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.adj[v]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adj[v].len()
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.adj[u].binary_search(&v).is_ok()
    }

    pub fn edge_count(&self) -> usize {
        self.adj.iter().map(Vec::len).sum::<usize>() / 2
    }

    /// Edges `(u, v)` with `u < v`, lexicographic.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.adj.iter().enumerate().flat_map(|(u, l)| l.iter().filter(move |&&v| v > u).map(move |&v| (u, v)))
    }

    /// Hop distances from `source`; `usize::MAX` for unreachable vertices.
    pub fn bfs_distances(&self, source: usize) -> Vec<usize> {
        let mut dist = vec![usize::MAX; self.n()];
        dist[source] = 0;
        let mut queue = VecDeque::from([source]);
        while let Some(u) = queue.pop_front() {
            for &w in &self.adj[u] {
                if dist[w] == usize::MAX {
                    dist[w] = dist[u] + 1;
                    queue.push_back(w);
                }
            }
        }
        dist
    }

    /// Component label per vertex, labels in order of first vertex.
    pub fn components(&self) -> Vec<usize> {
        let mut label = vec![usize::MAX; self.n()];
        let mut next = 0;
        for s in 0..self.n() {
            if label[s] != usize::MAX {
                continue;
            }
            label[s] = next;
            let mut queue = VecDeque::from([s]);
            while let Some(u) = queue.pop_front() {
                for &w in &self.adj[u] {
                    if label[w] == usize::MAX {
                        label[w] = next;
                        queue.push_back(w);
                    }
                }
            }
            next += 1;
        }
        label
    }

    pub fn is_connected(&self) -> bool {
        self.n() == 0 || self.components().iter().all(|&c| c == 0)
    }

    /// Exact diameter by BFS from every vertex.
    pub fn diameter(&self) -> Result<usize> {
        let mut diam = 0;
        for s in 0..self.n() {
            let d = self.bfs_distances(s);
            let far = d.iter().copied().max().unwrap_or(0);
            if far == usize::MAX {
                return Err(Error::Disconnected);
            }
            diam = diam.max(far);
        }
        Ok(diam)
    }

    pub fn is_bipartite(&self) -> bool {
        let mut side = vec![u8::MAX; self.n()];
        for s in 0..self.n() {
            if side[s] != u8::MAX {
                continue;
            }
            side[s] = 0;
            let mut queue = VecDeque::from([s]);
            while let Some(u) = queue.pop_front() {
                for &w in &self.adj[u] {
                    if side[w] == u8::MAX {
                        side[w] = 1 - side[u];
                        queue.push_back(w);
                    } else if side[w] == side[u] {
                        return false;
                    }
                }
            }
        }
        true
    }

    /// Subgraph induced on `keep`, relabelled in increasing vertex order.
    pub fn induced(&self, keep: &[bool]) -> Graph {
        let mut index = vec![usize::MAX; self.n()];
        let mut next = 0;
        for v in 0..self.n() {
            if keep[v] {
                index[v] = next;
                next += 1;
            }
        }
        let adj = (0..self.n())
            .filter(|&v| keep[v])
            .map(|v| self.adj[v].iter().filter(|&&w| keep[w]).map(|&w| index[w]).collect())
            .collect();
        Graph::from_sorted_adjacency(adj)
    }

    /// Writes `u v` lines (0-based, `u < v`).
    pub fn write_edge_list<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for (u, v) in self.edges() {
            writeln!(out, "{u} {v}")?;
        }
        Ok(())
    }

    /// Reads `u v` lines; blank lines and `#` comments are skipped.
    pub fn read_edge_list<R: BufRead>(n: usize, input: R) -> Result<Self> {
        let mut edges = Vec::new();
        for (lineno, line) in input.lines().enumerate() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut parts = line.split_whitespace().map(str::parse::<usize>);
            match (parts.next(), parts.next(), parts.next()) {
                (Some(Ok(u)), Some(Ok(v)), None) => edges.push((u, v)),
                _ => return Err(Error::Argument(format!("line {}: expected `u v`", lineno + 1))),
            }
        }
        Graph::from_edges(n, &edges)
    }
}

/// A graph together with a cell function `tau: V -> 0..k`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PartitionedGraph {
    graph: Graph,
    tau: Vec<usize>,
    k: usize,
}

#[derive(Serialize, Deserialize)]
struct TauFile {
    tau: Vec<usize>,
}

/// First failure of the S-degree condition.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RegularityViolation {
    CellCount { graph: usize, spec: usize },
    CellOutOfRange { vertex: usize, cell: usize },
    EmptyCell { cell: usize },
    Degree { vertex: usize, cell: usize, expected: u32, actual: usize },
}

impl fmt::Display for RegularityViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RegularityViolation::CellCount { graph, spec } => write!(f, "graph has {graph} cells, spec has {spec}"),
            RegularityViolation::CellOutOfRange { vertex, cell } => {
                write!(f, "vertex {vertex} has cell {cell} out of range")
            }
            RegularityViolation::EmptyCell { cell } => write!(f, "cell {cell} is empty"),
            RegularityViolation::Degree { vertex, cell, expected, actual } => {
                write!(f, "vertex {vertex} has {actual} neighbours in cell {cell}, expected {expected}")
            }
        }
    }
}

impl PartitionedGraph {
    pub fn new(graph: Graph, tau: Vec<usize>, k: usize) -> Result<Self> {
        if tau.len() != graph.n() {
            return Err(Error::Argument(format!("tau has {} entries for {} vertices", tau.len(), graph.n())));
        }
        if let Some(v) = tau.iter().position(|&c| c >= k) {
            return Err(Error::Argument(format!("vertex {v} has cell {} >= k = {k}", tau[v])));
        }
        Ok(PartitionedGraph { graph, tau, k })
    }

    /// Every vertex in one cell.
    pub fn single_cell(graph: Graph) -> Self {
        let n = graph.n();
        PartitionedGraph { graph, tau: vec![0; n], k: 1 }
    }

    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    pub fn into_graph(self) -> Graph {
        self.graph
    }

    pub fn n(&self) -> usize {
        self.graph.n()
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn tau(&self) -> &[usize] {
        &self.tau
    }

    pub fn cell_of(&self, v: usize) -> usize {
        self.tau[v]
    }

    pub fn cell_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &c in &self.tau {
            sizes[c] += 1;
        }
        sizes
    }

    /// Vertex lists per cell, increasing.
    pub fn cells(&self) -> Vec<Vec<usize>> {
        let mut cells = vec![Vec::new(); self.k];
        for (v, &c) in self.tau.iter().enumerate() {
            cells[c].push(v);
        }
        cells
    }

    /// `|N(v) ∩ V_j|` for every cell `j`.
    pub fn cell_degrees(&self, v: usize) -> Vec<usize> {
        let mut counts = vec![0; self.k];
        for &w in self.graph.neighbors(v) {
            counts[self.tau[w]] += 1;
        }
        counts
    }

    /// Sidecar JSON `{"tau": [...]}` (0-based cells).
    pub fn write_tau<W: Write>(&self, out: W) -> Result<()> {
        serde_json::to_writer(out, &TauFile { tau: self.tau.clone() })?;
        Ok(())
    }

    /// Reads an edge list plus its `{"tau": [...]}` sidecar; `k` is taken as
    /// one more than the largest cell index.
    pub fn read<R: BufRead>(edges: R, tau_json: &str) -> Result<Self> {
        let tau: TauFile = serde_json::from_str(tau_json)?;
        let n = tau.tau.len();
        let k = tau.tau.iter().copied().max().map_or(0, |m| m + 1);
        let graph = Graph::read_edge_list(n, edges)?;
        PartitionedGraph::new(graph, tau.tau, k)
    }

    /// Restrict to the vertices with `keep[v]`, preserving cell labels.
    pub(crate) fn restrict(&self, keep: &[bool]) -> PartitionedGraph {
        let graph = self.graph.induced(keep);
        let tau = (0..self.n()).filter(|&v| keep[v]).map(|v| self.tau[v]).collect();
        PartitionedGraph { graph, tau, k: self.k }
    }
}

/// `Ok(())` iff every vertex `v` has exactly `s_{τ(v) j}` neighbours in
/// every cell `j` and no cell is empty.
pub fn check_s_regular(g: &PartitionedGraph, spec: &QuotientSpec) -> std::result::Result<(), RegularityViolation> {
    if g.k() != spec.k() {
        return Err(RegularityViolation::CellCount { graph: g.k(), spec: spec.k() });
    }
    if let Some(cell) = g.cell_sizes().iter().position(|&x| x == 0) {
        return Err(RegularityViolation::EmptyCell { cell });
    }
    for v in 0..g.n() {
        let ci = g.cell_of(v);
        if ci >= spec.k() {
            return Err(RegularityViolation::CellOutOfRange { vertex: v, cell: ci });
        }
        let counts = g.cell_degrees(v);
        for (cell, &actual) in counts.iter().enumerate() {
            let expected = spec.s_at(ci, cell);
            if actual != expected as usize {
                return Err(RegularityViolation::Degree { vertex: v, cell, expected, actual });
            }
        }
    }
    Ok(())
}
