//! Text formatting shared by the CSV writers.

/// Shortest form that round-trips: 17 significant digits in scientific
/// notation.
pub fn float(x: f64) -> String {
    format!("{x:.16e}")
}
