//! Fixtures shared by the criterion benches.

use mvd_core::{build_grid, BuiltinProblem, GridSpec, InteriorVector};

/// Grid for `which` at refinement index `m_prime` with the default ratio.
pub fn grid(which: BuiltinProblem, m_prime: usize) -> GridSpec {
    build_grid(1.0, m_prime, 0.4, which.default_t_final()).expect("stable default grid")
}

/// Smooth interior row on `grid`.
pub fn smooth_row(grid: &GridSpec) -> InteriorVector {
    InteriorVector::from_fn(grid.interior_len(), grid.h(), |x| (1.0 + x).ln() + x.cos())
        .expect("grid row length")
}
