//! Uniform space-time mesh.
//!
//! The spatial interval `[0, a]` is split into `M = 2(M' + 3)` cells so that
//! the hybrid quadrature (two Milne open rules plus composite Simpson in
//! between) tiles it exactly. The time step is tied to the space step by
//! `k = r h^2 = lambda h`, and the explicit update is only admissible when
//! `lambda + 2r <= 1`.

use crate::error::{Error, Result};

/// Immutable discretization parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    a_dagger: f64,
    m_prime: usize,
    m_total: usize,
    h: f64,
    r: f64,
    k: f64,
    lambda: f64,
    n_steps: usize,
    t_final: f64,
}

impl GridSpec {
    /// Right end of the age interval.
    pub fn a_dagger(&self) -> f64 {
        self.a_dagger
    }

    /// Refinement index `M'`.
    pub fn m_prime(&self) -> usize {
        self.m_prime
    }

    /// Number of spatial cells, `M = 2(M' + 3)`.
    pub fn m_total(&self) -> usize {
        self.m_total
    }

    /// Number of interior nodes, `M - 1`.
    pub fn interior_len(&self) -> usize {
        self.m_total - 1
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    /// Parabolic mesh ratio `k / h^2`.
    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn k(&self) -> f64 {
        self.k
    }

    /// Hyperbolic mesh ratio `k / h`.
    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    /// Realized final time `N k`.
    pub fn t_final(&self) -> f64 {
        self.t_final
    }

    /// Node `x_i = i h`, `0 <= i <= M`.
    pub fn x(&self, i: usize) -> f64 {
        i as f64 * self.h
    }

    /// Time level `t^n = n k`.
    pub fn t(&self, n: usize) -> f64 {
        n as f64 * self.k
    }

    /// Interior nodes `x_1, ..., x_{M-1}`.
    pub fn interior_nodes(&self) -> Vec<f64> {
        (1..self.m_total).map(|i| self.x(i)).collect()
    }

    /// Whether every node and time level of `self` is also a node / level of
    /// `fine`. Returns the spatial and temporal index strides.
    pub fn embeds_in(&self, fine: &GridSpec) -> Option<(usize, usize)> {
        if self.a_dagger != fine.a_dagger || self.r != fine.r {
            return None;
        }
        if !fine.m_total.is_multiple_of(self.m_total)
            || !fine.n_steps.is_multiple_of(self.n_steps.max(1))
        {
            return None;
        }
        let space = fine.m_total / self.m_total;
        let time = fine.n_steps / self.n_steps;
        if !space.is_power_of_two() || time != space * space || self.t_final != fine.t_final {
            return None;
        }
        Some((space, time))
    }
}

/// Builds the grid for `a_dagger = 2(m_prime + 3) h` with `k = r h^2`, taking
/// just enough steps to reach `t_target`.
pub fn build_grid(a_dagger: f64, m_prime: usize, r: f64, t_target: f64) -> Result<GridSpec> {
    for (name, value) in [("a_dagger", a_dagger), ("r", r), ("t_target", t_target)] {
        if !(value.is_finite() && value > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "{name} must be finite and positive, got {value}"
            )));
        }
    }
    if m_prime < 1 {
        return Err(Error::InvalidParameter("m_prime must be at least 1".into()));
    }
    let m_total = 2 * (m_prime + 3);
    let h = a_dagger / m_total as f64;
    let lambda = r * h;
    check_threshold(lambda, r)?;
    let k = r * h * h;
    let n_steps = steps_to_reach(t_target, k);
    Ok(GridSpec {
        a_dagger,
        m_prime,
        m_total,
        h,
        r,
        k,
        lambda,
        n_steps,
        t_final: n_steps as f64 * k,
    })
}

/// Halves `h` exactly (`M' -> 2M' + 3`) and quarters `k`, keeping `a_dagger`,
/// `r` and the final time. Coarse nodes map to even fine nodes and coarse
/// time level `n` maps to fine level `4n`.
pub fn refine(grid: &GridSpec) -> Result<GridSpec> {
    let m_prime = 2 * grid.m_prime + 3;
    let m_total = 2 * (m_prime + 3);
    let h = grid.a_dagger / m_total as f64;
    let lambda = grid.r * h;
    check_threshold(lambda, grid.r)?;
    let k = grid.r * h * h;
    let n_steps = 4 * grid.n_steps;
    Ok(GridSpec {
        a_dagger: grid.a_dagger,
        m_prime,
        m_total,
        h,
        r: grid.r,
        k,
        lambda,
        n_steps,
        t_final: n_steps as f64 * k,
    })
}

fn check_threshold(lambda: f64, r: f64) -> Result<()> {
    let sum = lambda + 2.0 * r;
    if sum > 1.0 {
        return Err(Error::StabilityViolation { lambda, r, sum });
    }
    Ok(())
}

// A quotient within 1e-9 (relative) of an integer is taken as that integer so
// that e.g. 0.2 / 0.001 gives 200 steps rather than 201.
fn steps_to_reach(t_target: f64, k: f64) -> usize {
    let q = t_target / k;
    let nearest = q.round();
    let n = if (q - nearest).abs() <= 1e-9 * nearest.max(1.0) {
        nearest
    } else {
        q.ceil()
    };
    (n as usize).max(1)
}
