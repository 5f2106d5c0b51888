use std::collections::HashMap;

use super::{Graph, PartitionedGraph};
use crate::error::Result;
use crate::quotient::QuotientSpec;

/// Coarsest equitable partition and its quotient matrix.
#[derive(Debug, Clone)]
pub struct EquitablePartition {
    pub partition: PartitionedGraph,
    pub quotient: QuotientSpec,
}

/// Color refinement from the all-equal coloring. Cells are numbered by
/// their smallest vertex.
pub fn coarsest_equitable_partition(g: &Graph) -> Result<EquitablePartition> {
    let n = g.n();
    let mut colors = vec![0usize; n];
    let mut count = usize::from(n > 0);
    loop {
        let mut ids: HashMap<(usize, Vec<(usize, usize)>), usize> = HashMap::new();
        let mut next = vec![0usize; n];
        for v in 0..n {
            let mut hist: Vec<(usize, usize)> = Vec::new();
            let mut nbr: Vec<usize> = g.neighbors(v).iter().map(|&w| colors[w]).collect();
            nbr.sort_unstable();
            for c in nbr {
                match hist.last_mut() {
                    Some((last, m)) if *last == c => *m += 1,
                    _ => hist.push((c, 1)),
                }
            }
            let fresh = ids.len();
            next[v] = *ids.entry((colors[v], hist)).or_insert(fresh);
        }
        let new_count = ids.len();
        colors = next;
        if new_count == count {
            break;
        }
        count = new_count;
    }
    let k = count;
    let mut rep = vec![usize::MAX; k];
    for v in (0..n).rev() {
        rep[colors[v]] = v;
    }
    let mut s = vec![vec![0u32; k]; k];
    for (i, &v) in rep.iter().enumerate() {
        for &w in g.neighbors(v) {
            s[i][colors[w]] += 1;
        }
    }
    let partition = PartitionedGraph::new(g.clone(), colors, k)?;
    let sizes = partition.cell_sizes();
    let quotient = QuotientSpec::new(s)?.with_sizes(sizes)?;
    Ok(EquitablePartition { partition, quotient })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog;
    use crate::graphs::check_s_regular;

    #[test]
    fn house_has_three_cells() {
        let g = Graph::from_edges(5, &[(0, 1), (0, 2), (1, 2), (1, 3), (2, 4), (3, 4)]).unwrap();
        let eq = coarsest_equitable_partition(&g).unwrap();
        assert_eq!(eq.partition.tau(), &[0, 1, 1, 2, 2]);
        assert_eq!(eq.quotient.s(), catalog::house_coarse().s());
    }

    #[test]
    fn k33_single_cell() {
        let eq = coarsest_equitable_partition(&Graph::complete_bipartite(3, 3)).unwrap();
        assert_eq!(eq.quotient.s(), &[vec![3]]);
    }

    #[test]
    fn path_three() {
        let eq = coarsest_equitable_partition(&Graph::path(3)).unwrap();
        assert_eq!(eq.partition.tau(), &[0, 1, 0]);
        assert_eq!(eq.quotient.s(), &[vec![0, 1], vec![2, 0]]);
    }

    #[test]
    fn result_is_equitable() {
        let g = Graph::path(7);
        let eq = coarsest_equitable_partition(&g).unwrap();
        assert_eq!(eq.quotient.k(), 4);
        assert_eq!(check_s_regular(&eq.partition, &eq.quotient), Ok(()));
    }
}
