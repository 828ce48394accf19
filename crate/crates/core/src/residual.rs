//! The discretization operator `Φ_h : X_h -> Y_h` and the norms on both spaces.
//!
//! An element of `X_h` (or `Y_h`) is a left time trace, `N + 1` interior rows
//! and a right time trace. The numerical solution is the root of `Φ_h`;
//! applied to the nodal restriction of a smooth solution, `Φ_h` gives the
//! local discretization error.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::expr::EvalError;
use crate::grid::GridSpec;
use crate::model::{ProblemSpec, RightBoundary};
use crate::quadrature::{l2_slice, star_norm, InteriorVector};
use crate::solver::{check_domain, Nodes, SolutionHistory};

/// Grid function `(V_0, V^0, ..., V^N, V_M)`.
#[derive(Debug, Clone, PartialEq)]
pub struct XhElement {
    pub grid: GridSpec,
    pub left_trace: Vec<f64>,
    /// Row-major `(N + 1) x (M - 1)`.
    pub rows: Vec<f64>,
    pub right_trace: Vec<f64>,
}

/// `(P_0, P^0, ..., P^N, P_M)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ResidualBundle {
    pub grid: GridSpec,
    pub p_left: Vec<f64>,
    /// Row 0 is the initial-data residual.
    pub p_rows: Vec<f64>,
    pub p_right: Vec<f64>,
}

impl XhElement {
    pub fn zeros(grid: &GridSpec) -> Self {
        let levels = grid.n_steps() + 1;
        Self {
            grid: *grid,
            left_trace: vec![0.0; levels],
            rows: vec![0.0; levels * grid.interior_len()],
            right_trace: vec![0.0; levels],
        }
    }

    pub fn row(&self, n: usize) -> &[f64] {
        let w = self.grid.interior_len();
        &self.rows[n * w..(n + 1) * w]
    }

    pub fn row_mut(&mut self, n: usize) -> &mut [f64] {
        let w = self.grid.interior_len();
        &mut self.rows[n * w..(n + 1) * w]
    }

    /// Value at node `i` (`0..=M`) and level `n`.
    pub fn node(&self, i: usize, n: usize) -> f64 {
        match i {
            0 => self.left_trace[n],
            i if i == self.grid.m_total() => self.right_trace[n],
            i => self.row(n)[i - 1],
        }
    }

    fn check_same_shape(&self, other: &XhElement) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::DimensionMismatch(
                "elements live on different grids".into(),
            ));
        }
        Ok(())
    }

    fn zip_with(&self, other: &XhElement, f: impl Fn(f64, f64) -> f64) -> Result<XhElement> {
        self.check_same_shape(other)?;
        let zip = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| f(*x, *y)).collect();
        Ok(XhElement {
            grid: self.grid,
            left_trace: zip(&self.left_trace, &other.left_trace),
            rows: zip(&self.rows, &other.rows),
            right_trace: zip(&self.right_trace, &other.right_trace),
        })
    }

    pub fn sub(&self, other: &XhElement) -> Result<XhElement> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn add(&self, other: &XhElement) -> Result<XhElement> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn scaled(&self, c: f64) -> XhElement {
        let scale = |v: &[f64]| v.iter().map(|x| c * x).collect();
        XhElement {
            grid: self.grid,
            left_trace: scale(&self.left_trace),
            rows: scale(&self.rows),
            right_trace: scale(&self.right_trace),
        }
    }
}

impl From<SolutionHistory> for XhElement {
    fn from(h: SolutionHistory) -> Self {
        XhElement {
            grid: h.grid,
            left_trace: h.left_trace,
            rows: h.interior,
            right_trace: h.right_trace,
        }
    }
}

impl From<&SolutionHistory> for XhElement {
    fn from(h: &SolutionHistory) -> Self {
        h.clone().into()
    }
}

impl ResidualBundle {
    pub fn row(&self, n: usize) -> &[f64] {
        let w = self.grid.interior_len();
        &self.p_rows[n * w..(n + 1) * w]
    }

    pub fn sub(&self, other: &ResidualBundle) -> Result<ResidualBundle> {
        if self.grid != other.grid {
            return Err(Error::DimensionMismatch(
                "bundles live on different grids".into(),
            ));
        }
        let zip = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x - y).collect();
        Ok(ResidualBundle {
            grid: self.grid,
            p_left: zip(&self.p_left, &other.p_left),
            p_rows: zip(&self.p_rows, &other.p_rows),
            p_right: zip(&self.p_right, &other.p_right),
        })
    }
}

/// Nodal restriction `u_i^n = u(x_i, t^n)` including both boundary traces.
pub fn restrict(
    u: impl Fn(f64, f64) -> std::result::Result<f64, EvalError>,
    grid: &GridSpec,
) -> Result<XhElement> {
    let mut out = XhElement::zeros(grid);
    let a = grid.a_dagger();
    for n in 0..=grid.n_steps() {
        let t = grid.t(n);
        out.left_trace[n] = u(0.0, t)?;
        out.right_trace[n] = u(a, t)?;
        for (j, slot) in out.row_mut(n).iter_mut().enumerate() {
            *slot = u(grid.x(j + 1), t)?;
        }
    }
    Ok(out)
}

/// Applies `Φ_h` (or its non-homogeneous variant, selected by the problem's
/// right boundary) to `v`. `initial` is the scheme's starting row `U^0`.
pub fn apply_phi(
    v: &XhElement,
    problem: &ProblemSpec,
    initial: &InteriorVector,
) -> Result<ResidualBundle> {
    let grid = &v.grid;
    check_domain(problem, grid)?;
    let width = grid.interior_len();
    let levels = grid.n_steps() + 1;
    if initial.len() != width {
        return Err(Error::DimensionMismatch(format!(
            "initial row has length {} but the grid has {} interior nodes",
            initial.len(),
            width
        )));
    }
    if v.left_trace.len() != levels
        || v.right_trace.len() != levels
        || v.rows.len() != levels * width
    {
        return Err(Error::DimensionMismatch(
            "element does not match its grid".into(),
        ));
    }
    let (h, k) = (grid.h(), grid.k());
    let nodes = Nodes::new(problem, width, h)?;

    let mut p_left = Vec::with_capacity(levels);
    let mut p_right = Vec::with_capacity(levels);
    let mut scratch = vec![0.0; width];
    for n in 0..levels {
        let row = v.row(n);
        let birth = nodes.birth_integral(problem, row, &mut scratch)?;
        p_left.push((1.0 + 1.0 / h) * v.left_trace[n] - 1.0 / h * row[0] - birth);
        p_right.push(match &problem.right_boundary {
            RightBoundary::Homogeneous => v.right_trace[n] / h,
            RightBoundary::Dirichlet(g) => (v.right_trace[n] - g(grid.t(n))?) / h,
        });
    }

    let mut p_rows = vec![0.0; levels * width];
    for ((p, vi), ui) in p_rows[..width]
        .iter_mut()
        .zip(v.row(0))
        .zip(initial.values())
    {
        *p = vi - ui;
    }
    p_rows[width..]
        .par_chunks_mut(width)
        .enumerate()
        .try_for_each(|(m, out)| -> Result<()> {
            let n = m + 1;
            let prev = v.row(n - 1);
            let cur = v.row(n);
            let left = v.left_trace[n - 1];
            let right = v.right_trace[n - 1];
            nodes.mortality(problem, prev, out)?;
            let last = width - 1;
            for i in 0..width {
                let west = if i == 0 { left } else { prev[i - 1] };
                let east = if i == last { right } else { prev[i + 1] };
                let d = out[i];
                out[i] = (cur[i] - prev[i]) / k + (prev[i] - west) / h + d * prev[i]
                    - (east + west - 2.0 * prev[i]) / (h * h);
            }
            Ok(())
        })?;

    Ok(ResidualBundle {
        grid: *grid,
        p_left,
        p_rows,
        p_right,
    })
}

/// `h (‖V_0‖_* + ‖V_M‖_*) + max_n ‖V^n‖`.
pub fn xh_norm(v: &XhElement) -> f64 {
    let (h, k) = (v.grid.h(), v.grid.k());
    let rows = (0..=v.grid.n_steps()).fold(0.0f64, |m, n| m.max(l2_slice(v.row(n), h)));
    h * (star_norm(&v.left_trace, k) + star_norm(&v.right_trace, k)) + rows
}

/// `(‖P_0‖_*^2 + ‖P^0‖^2 + h ‖P_M‖_*^2 + Σ_{n>=1} k ‖P^n‖^2)^{1/2}`.
pub fn yh_norm(p: &ResidualBundle) -> f64 {
    let (h, k) = (p.grid.h(), p.grid.k());
    let left = star_norm(&p.p_left, k);
    let right = star_norm(&p.p_right, k);
    let first = l2_slice(p.row(0), h);
    let later: f64 = (1..=p.grid.n_steps())
        .map(|n| {
            let r = l2_slice(p.row(n), h);
            k * r * r
        })
        .sum();
    (left * left + first * first + h * right * right + later).sqrt()
}
