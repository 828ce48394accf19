//! Explicit time stepping.
//!
//! Interior nodes use forward Euler in time, backward (upwind) differences
//! for `u_x` and centered differences for `u_xx`:
//!
//! ```text
//! U_i^{n+1} = (1 - λ - 2r - k d_i(s1^n)) U_i^n + (r + λ) U_{i-1}^n + r U_{i+1}^n
//! ```
//!
//! with `s1^n = Q_h(Ψ1 · U^n)`. The left value solves the discrete Robin
//! condition `(1 + 1/h) U_0^n - U_1^n / h = Q_h(B(Q_h(Ψ2 · U^n)) · U^n)`,
//! and the right value is `g(t^n)`.

use crate::error::{Error, Result};
use crate::grid::GridSpec;
use crate::model::ProblemSpec;
use crate::quadrature::{qh_product, InteriorVector};

/// Full space-time record of a run.
#[derive(Debug, Clone, PartialEq)]
pub struct SolutionHistory {
    pub grid: GridSpec,
    /// `U_0^n`, `n = 0..=N`.
    pub left_trace: Vec<f64>,
    /// `U_M^n`, `n = 0..=N`.
    pub right_trace: Vec<f64>,
    /// Row-major `(N + 1) x (M - 1)` interior values.
    pub interior: Vec<f64>,
}

impl SolutionHistory {
    /// Interior row `U^n`.
    pub fn row(&self, n: usize) -> &[f64] {
        let w = self.grid.interior_len();
        &self.interior[n * w..(n + 1) * w]
    }

    pub fn final_row(&self) -> &[f64] {
        self.row(self.grid.n_steps())
    }

    pub fn interior_vector(&self, n: usize) -> InteriorVector {
        InteriorVector::new(self.row(n).to_vec(), self.grid.h())
            .expect("grid rows have quadrature length")
    }

    /// `U_0^n, U_1^n, ..., U_M^n`.
    pub fn nodal_row(&self, n: usize) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.grid.m_total() + 1);
        out.push(self.left_trace[n]);
        out.extend_from_slice(self.row(n));
        out.push(self.right_trace[n]);
        out
    }
}

/// Discrete weighted population `Q_h(Ψ · U)`.
pub fn weighted_population(psi_values: &InteriorVector, u: &InteriorVector) -> Result<f64> {
    if psi_values.len() != u.len() || psi_values.h() != u.h() {
        return Err(Error::DimensionMismatch(format!(
            "weights of length {} against state of length {}",
            psi_values.len(),
            u.len()
        )));
    }
    Ok(qh_product(psi_values.values(), u.values(), u.h()))
}

/// Left boundary value `U_0` from the interior row `u`.
///
/// The time argument is unused by the boundary law itself and is kept for
/// symmetry with the right boundary.
pub fn solve_left_boundary(u: &InteriorVector, _t: f64, problem: &ProblemSpec) -> Result<f64> {
    let nodes = Nodes::new(problem, u.len(), u.h())?;
    let mut scratch = vec![0.0; u.len()];
    nodes.left_value(problem, u.values(), &mut scratch)
}

/// Advances one interior row from `t_prev` to `t_prev + k`.
pub fn step(
    u_prev: &InteriorVector,
    left_prev: f64,
    right_prev: f64,
    _t_prev: f64,
    problem: &ProblemSpec,
    grid: &GridSpec,
) -> Result<InteriorVector> {
    if u_prev.len() != grid.interior_len() {
        return Err(Error::DimensionMismatch(format!(
            "state of length {} on a grid with {} interior nodes",
            u_prev.len(),
            grid.interior_len()
        )));
    }
    let nodes = Nodes::new(problem, u_prev.len(), grid.h())?;
    let mut next = vec![0.0; u_prev.len()];
    nodes.advance(
        problem,
        grid,
        u_prev.values(),
        left_prev,
        right_prev,
        &mut next,
    )?;
    if next.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFiniteState { level: 1 });
    }
    InteriorVector::new(next, grid.h())
}

/// Runs the scheme from `t = 0` to `grid.t_final()`.
pub fn run(problem: &ProblemSpec, grid: &GridSpec) -> Result<SolutionHistory> {
    check_domain(problem, grid)?;
    let width = grid.interior_len();
    let n_steps = grid.n_steps();
    let nodes = Nodes::new(problem, width, grid.h())?;

    let mut interior = Vec::with_capacity((n_steps + 1) * width);
    for &x in &nodes.x {
        interior.push((problem.initial)(x)?);
    }
    let mut left_trace = Vec::with_capacity(n_steps + 1);
    let mut right_trace = Vec::with_capacity(n_steps + 1);
    let mut scratch = vec![0.0; width];
    let mut next = vec![0.0; width];

    for n in 0..=n_steps {
        let row = &interior[n * width..(n + 1) * width];
        let right = problem.right_boundary.value(grid.t(n))?;
        let left = nodes.left_value(problem, row, &mut scratch)?;
        if !(left.is_finite() && right.is_finite()) || row.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteState { level: n });
        }
        left_trace.push(left);
        right_trace.push(right);
        if n < n_steps {
            nodes.advance(problem, grid, row, left, right, &mut next)?;
            interior.extend_from_slice(&next);
        }
    }

    Ok(SolutionHistory {
        grid: *grid,
        left_trace,
        right_trace,
        interior,
    })
}

pub(crate) fn check_domain(problem: &ProblemSpec, grid: &GridSpec) -> Result<()> {
    let (a, b) = (problem.a_dagger, grid.a_dagger());
    if (a - b).abs() > 1e-12 * a.abs().max(b.abs()) {
        return Err(Error::InvalidParameter(format!(
            "problem is posed on [0, {a}] but the grid covers [0, {b}]"
        )));
    }
    let sum = grid.lambda() + 2.0 * grid.r();
    if sum > 1.0 {
        return Err(Error::StabilityViolation {
            lambda: grid.lambda(),
            r: grid.r(),
            sum,
        });
    }
    Ok(())
}

/// Interior nodes and the weights sampled on them.
pub(crate) struct Nodes {
    pub x: Vec<f64>,
    pub psi1: Vec<f64>,
    pub psi2: Vec<f64>,
    pub h: f64,
}

impl Nodes {
    pub fn new(problem: &ProblemSpec, width: usize, h: f64) -> Result<Self> {
        let x: Vec<f64> = (1..=width).map(|i| i as f64 * h).collect();
        let psi1 = x
            .iter()
            .map(|&x| (problem.psi1)(x))
            .collect::<std::result::Result<_, _>>()?;
        let psi2 = x
            .iter()
            .map(|&x| (problem.psi2)(x))
            .collect::<std::result::Result<_, _>>()?;
        Ok(Self { x, psi1, psi2, h })
    }

    /// `Q_h(B(Q_h(Ψ2 · u)) · u)`; `scratch` receives the fertility values.
    pub fn birth_integral(
        &self,
        problem: &ProblemSpec,
        u: &[f64],
        scratch: &mut [f64],
    ) -> Result<f64> {
        let s2 = qh_product(&self.psi2, u, self.h);
        for (b, &x) in scratch.iter_mut().zip(&self.x) {
            *b = rate("fertility", (problem.fertility)(x, s2)?, x, s2)?;
        }
        Ok(qh_product(scratch, u, self.h))
    }

    pub fn left_value(&self, problem: &ProblemSpec, u: &[f64], scratch: &mut [f64]) -> Result<f64> {
        let birth = self.birth_integral(problem, u, scratch)?;
        Ok((self.h * birth + u[0]) / (self.h + 1.0))
    }

    /// Mortality values `d(x_i, Q_h(Ψ1 · u))` into `out`.
    pub fn mortality(&self, problem: &ProblemSpec, u: &[f64], out: &mut [f64]) -> Result<()> {
        let s1 = qh_product(&self.psi1, u, self.h);
        for (d, &x) in out.iter_mut().zip(&self.x) {
            *d = rate("mortality", (problem.mortality)(x, s1)?, x, s1)?;
        }
        Ok(())
    }

    pub fn advance(
        &self,
        problem: &ProblemSpec,
        grid: &GridSpec,
        u: &[f64],
        left: f64,
        right: f64,
        next: &mut [f64],
    ) -> Result<()> {
        self.mortality(problem, u, next)?;
        let (r, lambda, k) = (grid.r(), grid.lambda(), grid.k());
        let centre = 1.0 - lambda - 2.0 * r;
        let upwind = r + lambda;
        let last = u.len() - 1;
        for i in 0..=last {
            let west = if i == 0 { left } else { u[i - 1] };
            let east = if i == last { right } else { u[i + 1] };
            next[i] = (centre - k * next[i]) * u[i] + upwind * west + r * east;
        }
        Ok(())
    }
}

fn rate(name: &'static str, value: f64, x: f64, s: f64) -> Result<f64> {
    if !value.is_finite() {
        return Err(crate::expr::EvalError::NonFinite.into());
    }
    if value < 0.0 {
        return Err(Error::NegativeCoefficient { name, value, x, s });
    }
    Ok(value)
}
