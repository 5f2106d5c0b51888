use std::collections::HashMap;

use super::{check_s_regular, Graph, PartitionedGraph};
use crate::error::{Error, Result};
use crate::quotient::{constructibility_problem, QuotientSpec};

/// Cell `i` occupies vertices `offsets[i]..offsets[i + 1]`.
pub(crate) fn cell_layout(n: &[usize]) -> (Vec<usize>, Vec<usize>) {
    let mut offsets = vec![0];
    let mut tau = Vec::with_capacity(n.iter().sum());
    for (i, &ni) in n.iter().enumerate() {
        offsets.push(offsets[i] + ni);
        tau.extend(std::iter::repeat_n(i, ni));
    }
    (offsets, tau)
}

pub(crate) fn check_sizes(spec: &QuotientSpec, n: &[usize]) -> Result<()> {
    match constructibility_problem(spec, n) {
        Some(reason) => Err(Error::Constraints { sizes: n.to_vec(), reason }),
        None => Ok(()),
    }
}

/// Circulant `s`-regular graph on `m` vertices (`s < m`, `s m` even).
fn circulant_edges(base: usize, m: usize, s: usize, edges: &mut Vec<(usize, usize)>) {
    for d in 1..=s / 2 {
        // d < m/2 here, so every pair appears once.
        for v in 0..m {
            edges.push((base + v, base + (v + d) % m));
        }
    }
    if s % 2 == 1 {
        for v in 0..m / 2 {
            edges.push((base + v, base + v + m / 2));
        }
    }
}

/// `a = s_ij` neighbours in cell `j` for each of the `ni` vertices of cell
/// `i`, `b = s_ji` in the other direction.
fn bipartite_edges(bi: usize, ni: usize, bj: usize, nj: usize, a: usize, b: usize, edges: &mut Vec<(usize, usize)>) {
    if ni.is_multiple_of(b) {
        for g in 0..ni / b {
            for x in 0..b {
                for y in 0..a {
                    edges.push((bi + g * b + x, bj + g * a + y));
                }
            }
        }
    } else {
        for e in 0..ni * a {
            edges.push((bi + e / a, bj + e % nj));
        }
    }
}

/// Deterministic S-regular graph on cell sizes `n`.
///
/// Cells get circulant graphs, cell pairs get disjoint complete bipartite
/// blocks (or a modular pairing when the block size does not divide the
/// cell). Components of the union are then joined by degree-preserving
/// switches; only if no switch exists is the largest component returned.
pub fn construct_deterministic(spec: &QuotientSpec, n: &[usize]) -> Result<PartitionedGraph> {
    check_sizes(spec, n)?;
    let k = spec.k();
    let (offsets, tau) = cell_layout(n);
    let mut edges = Vec::new();
    for i in 0..k {
        circulant_edges(offsets[i], n[i], spec.s_at(i, i) as usize, &mut edges);
        for j in i + 1..k {
            let (a, b) = (spec.s_at(i, j) as usize, spec.s_at(j, i) as usize);
            if a > 0 {
                bipartite_edges(offsets[i], n[i], offsets[j], n[j], a, b, &mut edges);
            }
        }
    }
    let graph = Graph::from_edges(tau.len(), &edges)?;
    let graph = join_components(graph, &tau);
    let mut pg = PartitionedGraph::new(graph, tau, k)?;
    if !pg.graph().is_connected() {
        pg = largest_component(&pg);
    }
    check_s_regular(&pg, spec).map_err(|v| Error::Mismatch(v.to_string()))?;
    Ok(pg)
}

fn largest_component(pg: &PartitionedGraph) -> PartitionedGraph {
    let labels = pg.graph().components();
    let count = labels.iter().max().map_or(0, |m| m + 1);
    let mut sizes = vec![0usize; count];
    for &l in &labels {
        sizes[l] += 1;
    }
    let best = (0..count).max_by_key(|&c| (sizes[c], std::cmp::Reverse(c))).unwrap_or(0);
    let keep: Vec<bool> = labels.iter().map(|&l| l == best).collect();
    pg.restrict(&keep)
}

/// Repeatedly replaces a non-bridge `(c,d)` and an edge `(a,b)` of another
/// component with matching cells by `(a,d)`, `(c,b)`. Each switch keeps
/// every cell degree and merges two components.
fn join_components(mut graph: Graph, tau: &[usize]) -> Graph {
    loop {
        let labels = graph.components();
        if labels.iter().all(|&l| l == 0) {
            return graph;
        }
        let bridges = bridges(&graph);
        let mut by_cells: HashMap<(usize, usize), Vec<(usize, usize)>> = HashMap::new();
        for (u, v) in graph.edges() {
            by_cells.entry((tau[u], tau[v])).or_default().push((u, v));
            if tau[u] != tau[v] {
                by_cells.entry((tau[v], tau[u])).or_default().push((v, u));
            }
        }
        let mut switch = None;
        'search: for (c, d) in graph.edges() {
            if bridges.contains(&(c, d)) {
                continue;
            }
            if let Some(list) = by_cells.get(&(tau[c], tau[d])) {
                for &(a, b) in list {
                    if labels[a] != labels[c] {
                        switch = Some((a, b, c, d));
                        break 'search;
                    }
                }
            }
        }
        let Some((a, b, c, d)) = switch else {
            return graph;
        };
        let mut adj: Vec<Vec<usize>> = (0..graph.n()).map(|v| graph.neighbors(v).to_vec()).collect();
        let mut drop = |x: usize, y: usize| {
            adj[x].retain(|&w| w != y);
            adj[y].retain(|&w| w != x);
        };
        drop(a, b);
        drop(c, d);
        for (x, y) in [(a, d), (c, b)] {
            adj[x].push(y);
            adj[y].push(x);
        }
        for list in &mut adj {
            list.sort_unstable();
        }
        graph = Graph::from_sorted_adjacency(adj);
    }
}

/// Bridges as `(u, v)` with `u < v`, via iterative low-link DFS.
pub(crate) fn bridges(graph: &Graph) -> std::collections::HashSet<(usize, usize)> {
    let n = graph.n();
    let mut disc = vec![usize::MAX; n];
    let mut low = vec![0; n];
    let mut out = std::collections::HashSet::new();
    let mut time = 0;
    for root in 0..n {
        if disc[root] != usize::MAX {
            continue;
        }
        // (vertex, parent, next neighbour index)
        let mut stack = vec![(root, usize::MAX, 0usize)];
        disc[root] = time;
        low[root] = time;
        time += 1;
        while let Some(&mut (u, parent, ref mut idx)) = stack.last_mut() {
            if *idx < graph.degree(u) {
                let w = graph.neighbors(u)[*idx];
                *idx += 1;
                if w == parent {
                    continue;
                }
                if disc[w] == usize::MAX {
                    disc[w] = time;
                    low[w] = time;
                    time += 1;
                    stack.push((w, u, 0));
                } else {
                    low[u] = low[u].min(disc[w]);
                }
            } else {
                stack.pop();
                if parent != usize::MAX {
                    low[parent] = low[parent].min(low[u]);
                    if low[u] > disc[parent] {
                        out.insert((parent.min(u), parent.max(u)));
                    }
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog;

    #[test]
    fn triangle() {
        let g = construct_deterministic(&QuotientSpec::regular(2), &[3]).unwrap();
        assert_eq!(g.graph(), &Graph::complete(3));
    }

    #[test]
    fn star() {
        let s = QuotientSpec::new(vec![vec![0, 2], vec![1, 0]]).unwrap();
        let g = construct_deterministic(&s, &[1, 2]).unwrap();
        assert_eq!(g.graph().edges().collect::<Vec<_>>(), vec![(0, 1), (0, 2)]);
        assert_eq!(g.tau(), &[0, 1, 1]);
    }

    #[test]
    fn biregular_ten_vertices() {
        let s = catalog::biregular_2_3();
        let g = construct_deterministic(&s, &[6, 4]).unwrap();
        assert_eq!(g.n(), 10);
        assert!(g.graph().is_connected());
        assert_eq!(check_s_regular(&g, &s), Ok(()));
    }

    #[test]
    fn disconnected_union_is_switched_together() {
        // Two disjoint 4-cycles before switching.
        let s = QuotientSpec::new(vec![vec![0, 2], vec![2, 0]]).unwrap();
        let g = construct_deterministic(&s, &[4, 4]).unwrap();
        assert_eq!(g.n(), 8);
        assert!(g.graph().is_connected());
        assert_eq!(check_s_regular(&g, &s), Ok(()));
        // A perfect matching cannot be connected; the largest piece is K2.
        let s = QuotientSpec::new(vec![vec![0, 1], vec![1, 0]]).unwrap();
        let g = construct_deterministic(&s, &[3, 3]).unwrap();
        assert_eq!(g.n(), 2);
        assert_eq!(g.cell_sizes(), vec![1, 1]);
    }

    #[test]
    fn two_cell_example() {
        let s = catalog::two_cell();
        let g = construct_deterministic(&s, &[15, 15]).unwrap();
        assert!(g.graph().is_connected());
        assert_eq!(check_s_regular(&g, &s), Ok(()));
    }

    #[test]
    fn rejects_bad_sizes() {
        assert!(matches!(construct_deterministic(&QuotientSpec::regular(3), &[5]), Err(Error::Constraints { .. })));
        assert!(construct_deterministic(&catalog::biregular_2_3(), &[2, 3]).is_err());
    }

    #[test]
    fn bridges_of_path_and_cycle() {
        assert_eq!(bridges(&Graph::path(4)).len(), 3);
        assert!(bridges(&Graph::cycle(5)).is_empty());
    }
}
