use std::ops::Range;

use super::{Graph, PartitionedGraph};
use crate::error::{Error, Result};
use crate::quotient::QuotientSpec;
use crate::treewalks::{WalkScalar, Weights};

pub const DEFAULT_TREE_CAP: usize = 10_000_000;

/// Ball of radius `r` around a root of the S-regular tree, stored in
/// breadth-first order: children of each vertex are contiguous and levels
/// are contiguous.
#[derive(Debug, Clone)]
pub struct TreeBall {
    root_cell: usize,
    radius: usize,
    k: usize,
    parent: Vec<u32>,
    cell: Vec<u16>,
    /// `first_child[v]..first_child[v + 1]` are the children of `v`.
    first_child: Vec<u32>,
    /// `levels[d]..levels[d + 1]` are the vertices at depth `d`.
    levels: Vec<usize>,
}

/// Number of vertices in the ball, by exact count over (cell, parent cell)
/// states.
fn ball_size(spec: &QuotientSpec, root_cell: usize, radius: usize) -> u128 {
    let k = spec.k();
    let s = |a: usize, b: usize| spec.s_at(a, b) as u128;
    let mut total: u128 = 1;
    if radius == 0 {
        return total;
    }
    // state[b][a]: vertices in cell b whose parent is in cell a.
    let mut state = vec![vec![0u128; k]; k];
    for b in 0..k {
        state[b][root_cell] = s(root_cell, b);
    }
    for depth in 1..=radius {
        total = total.saturating_add(state.iter().flatten().fold(0u128, |acc, &x| acc.saturating_add(x)));
        if depth == radius {
            break;
        }
        let mut next = vec![vec![0u128; k]; k];
        for a in 0..k {
            for b in 0..k {
                // Children of cell b: s_ab, less one toward a parent in b.
                let per = |p: usize| s(a, b).saturating_sub(u128::from(b == p));
                let mut cnt = 0u128;
                for p in 0..k {
                    cnt = cnt.saturating_add(state[a][p].saturating_mul(per(p)));
                }
                next[b][a] = cnt;
            }
        }
        state = next;
    }
    total
}

pub fn build_tree_ball(spec: &QuotientSpec, root_cell: usize, radius: usize) -> Result<TreeBall> {
    TreeBall::build(spec, root_cell, radius, DEFAULT_TREE_CAP)
}

impl TreeBall {
    /// Fails with [`Error::TreeTooLarge`] when the ball would exceed `cap`
    /// vertices.
    pub fn build(spec: &QuotientSpec, root_cell: usize, radius: usize, cap: usize) -> Result<TreeBall> {
        let k = spec.k();
        if root_cell >= k {
            return Err(Error::Argument(format!("root cell {root_cell} out of range for k = {k}")));
        }
        if k > u16::MAX as usize {
            return Err(Error::Argument("too many cells".into()));
        }
        for a in 0..k {
            for b in 0..k {
                if (spec.s_at(a, b) == 0) != (spec.s_at(b, a) == 0) {
                    return Err(Error::spec(
                        "asymmetric_support",
                        format!("s[{a}][{b}] and s[{b}][{a}] differ in support"),
                    ));
                }
            }
        }
        let needed = ball_size(spec, root_cell, radius);
        if needed > cap as u128 || needed > u32::MAX as u128 {
            return Err(Error::TreeTooLarge { needed, cap });
        }
        let n = needed as usize;
        let mut parent = Vec::with_capacity(n);
        let mut cell = Vec::with_capacity(n);
        let mut first_child = Vec::with_capacity(n + 1);
        parent.push(u32::MAX);
        cell.push(root_cell as u16);
        let mut levels = vec![0, 1];
        for _ in 0..radius {
            let (start, end) = (levels[levels.len() - 2], levels[levels.len() - 1]);
            for v in start..end {
                first_child.push(cell.len() as u32);
                let a = cell[v] as usize;
                let pcell = if v == 0 { usize::MAX } else { cell[parent[v] as usize] as usize };
                for b in 0..k {
                    let count = spec.s_at(a, b) as usize - usize::from(b == pcell);
                    for _ in 0..count {
                        parent.push(v as u32);
                        cell.push(b as u16);
                    }
                }
            }
            levels.push(cell.len());
        }
        // Boundary vertices have no children.
        while first_child.len() <= cell.len() {
            first_child.push(cell.len() as u32);
        }
        debug_assert_eq!(cell.len(), n);
        Ok(TreeBall { root_cell, radius, k, parent, cell, first_child, levels })
    }

    pub fn n(&self) -> usize {
        self.cell.len()
    }

    pub fn root_cell(&self) -> usize {
        self.root_cell
    }

    pub fn radius(&self) -> usize {
        self.radius
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn cell(&self, v: usize) -> usize {
        self.cell[v] as usize
    }

    pub fn parent(&self, v: usize) -> Option<usize> {
        (v != 0).then(|| self.parent[v] as usize)
    }

    pub fn children(&self, v: usize) -> Range<usize> {
        self.first_child[v] as usize..self.first_child[v + 1] as usize
    }

    pub fn depth(&self, v: usize) -> usize {
        self.levels.partition_point(|&start| start <= v) - 1
    }

    /// Vertices at distance exactly `radius` from the root.
    pub fn boundary(&self) -> Range<usize> {
        self.levels[self.radius]..self.levels[self.radius + 1]
    }

    pub fn level_sizes(&self) -> Vec<usize> {
        self.levels.windows(2).map(|w| w[1] - w[0]).collect()
    }

    /// `y = M x` where `M` has diagonal `b[cell]` and edge entries
    /// `f[cell(u)][cell(v)]`.
    pub fn apply<T: WalkScalar>(&self, w: &Weights<T>, x: &[T]) -> Vec<T> {
        let mut y = Vec::with_capacity(self.n());
        for v in 0..self.n() {
            let a = self.cell(v);
            let mut acc = w.b[a].clone() * x[v].clone();
            if v != 0 {
                let p = self.parent[v] as usize;
                acc = acc + w.f[a][self.cell(p)].clone() * x[p].clone();
            }
            for c in self.children(v) {
                acc = acc + w.f[a][self.cell(c)].clone() * x[c].clone();
            }
            y.push(acc);
        }
        y
    }

    /// Explicit labelled graph; only sensible for small balls.
    pub fn to_partitioned_graph(&self) -> PartitionedGraph {
        let edges: Vec<(usize, usize)> = (1..self.n()).map(|v| (self.parent[v] as usize, v)).collect();
        let graph = Graph::from_edges(self.n(), &edges).expect("tree edges are simple");
        PartitionedGraph::new(graph, self.cell.iter().map(|&c| c as usize).collect(), self.k).expect("cells in range")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog;

    fn interior_profile_matches(t: &TreeBall, spec: &QuotientSpec) -> bool {
        let pg = t.to_partitioned_graph();
        (0..t.n()).filter(|&v| t.depth(v) < t.radius()).all(|v| {
            let counts = pg.cell_degrees(v);
            (0..spec.k()).all(|j| counts[j] == spec.s_at(t.cell(v), j) as usize)
        })
    }

    #[test]
    fn cubic_radius_two() {
        let t = build_tree_ball(&QuotientSpec::regular(3), 0, 2).unwrap();
        assert_eq!(t.n(), 10);
        assert_eq!(t.level_sizes(), vec![1, 3, 6]);
        assert_eq!(t.boundary(), 4..10);
    }

    #[test]
    fn biregular_radius_two() {
        let s = catalog::biregular_2_3();
        let t = build_tree_ball(&s, 0, 2).unwrap();
        assert_eq!(t.level_sizes(), vec![1, 2, 4]);
        assert!(interior_profile_matches(&t, &s));
    }

    #[test]
    fn radius_zero() {
        let t = build_tree_ball(&catalog::house(), 3, 0).unwrap();
        assert_eq!(t.n(), 1);
        assert_eq!(t.cell(0), 3);
        assert!(t.children(0).is_empty());
    }

    #[test]
    fn acyclic_and_regular_inside() {
        for spec in [catalog::two_cell(), catalog::house(), catalog::house_coarse()] {
            for root in 0..spec.k() {
                let t = build_tree_ball(&spec, root, 3).unwrap();
                let pg = t.to_partitioned_graph();
                assert!(pg.graph().is_connected());
                assert_eq!(pg.graph().edge_count(), t.n() - 1);
                assert!(interior_profile_matches(&t, &spec));
                assert!(t.boundary().all(|v| t.depth(v) == 3));
                assert_eq!(ball_size(&spec, root, 3), t.n() as u128);
            }
        }
    }

    #[test]
    fn cap_is_enforced() {
        let r = TreeBall::build(&QuotientSpec::regular(3), 0, 10, 100);
        assert!(matches!(r, Err(Error::TreeTooLarge { needed: 3070, cap: 100 })));
    }
}
