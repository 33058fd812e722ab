//! Numerical tolerances shared across modules.

/// Absolute tolerance on total probability mass.
pub const MASS_TOL: f64 = 1e-12;

/// Two atoms closer than this (max-norm) are the same atom.
pub const ATOM_TOL: f64 = 1e-9;

/// Sub-intervals shorter than this are treated as points.
pub const GEOM_TOL: f64 = 1e-9;

/// Affine segments with |slope| at or below this are constant.
pub const SLOPE_TOL: f64 = 1e-12;

/// Neumaier-compensated sum.
pub fn stable_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut sum = 0.0_f64;
    let mut comp = 0.0_f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}
