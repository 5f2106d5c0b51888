//! Named quotient matrices used in examples, tests and the CLI.

use crate::quotient::QuotientSpec;

fn build(rows: &[&[u32]]) -> QuotientSpec {
    QuotientSpec::new(rows.iter().map(|r| r.to_vec()).collect()).expect("catalog entries are square")
}

/// `[[14, 2], [2, 2]]`: cells of equal size, degrees 16 and 4.
pub fn two_cell() -> QuotientSpec {
    build(&[&[14, 2], &[2, 2]])
}

/// The house graph read as a 5×5 quotient matrix (all cells singletons in
/// the graph itself).
pub fn house() -> QuotientSpec {
    build(&[&[0, 1, 1, 0, 0], &[1, 0, 1, 1, 0], &[1, 1, 0, 0, 1], &[0, 1, 0, 0, 1], &[0, 0, 1, 1, 0]])
}

/// Coarsest equitable partition of the house graph: roof apex, the two
/// degree-3 vertices, the two floor vertices.
pub fn house_coarse() -> QuotientSpec {
    build(&[&[0, 2, 0], &[1, 1, 1], &[0, 1, 1]])
}

/// Bipartite (2,3)-biregular.
pub fn biregular_2_3() -> QuotientSpec {
    build(&[&[0, 2], &[3, 0]])
}

/// `[d]`.
pub fn regular(d: u32) -> QuotientSpec {
    QuotientSpec::regular(d)
}

/// Look up a catalog entry by name (`two-cell`, `house`, `house-coarse`,
/// `biregular-2-3`, `regular-<d>`).
pub fn by_name(name: &str) -> Option<QuotientSpec> {
    match name {
        "two-cell" => Some(two_cell()),
        "house" => Some(house()),
        "house-coarse" => Some(house_coarse()),
        "biregular-2-3" => Some(biregular_2_3()),
        other => other.strip_prefix("regular-").and_then(|d| d.parse().ok()).map(regular),
    }
}
