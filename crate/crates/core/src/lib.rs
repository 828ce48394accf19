//! Explicit finite-difference solver for the McKendrick–Von Foerster equation
//! with diffusion,
//!
//! ```text
//! u_t + u_x + d(x, s1(t)) u = u_xx,               0 < x < a, t > 0
//! u(0, t) - u_x(0, t) = ∫ B(x, s2(t)) u(x, t) dx
//! u(a, t) = g(t)            (g ≡ 0 in the homogeneous case)
//! u(x, 0) = u0(x),          s_i(t) = ∫ ψ_i(x) u(x, t) dx
//! ```
//!
//! The crate provides the mesh ([`grid`]), a small expression language for
//! coefficients ([`expr`]), the continuous problem and built-in examples
//! ([`model`]), the hybrid Milne/Simpson quadrature and discrete norms
//! ([`quadrature`]), the time stepper ([`solver`]), the discretization
//! operator whose root is the numerical solution ([`residual`]) and
//! convergence / consistency / stability studies ([`harness`]).

pub mod error;
pub mod expr;
pub mod grid;
pub mod harness;
pub mod model;
pub mod quadrature;
pub mod residual;
pub mod solver;

pub use error::{Error, Result};
pub use expr::{parse_expr, Bindings, EvalError, Expr, ParseError, Var};
pub use grid::{build_grid, refine, GridSpec};
pub use model::{builtin_problem, BuiltinProblem, ExactSolution, ProblemSpec, RightBoundary};
pub use quadrature::{inf_norm, l2_norm, pointwise_product, qh, star_norm, InteriorVector};
pub use residual::{apply_phi, restrict, xh_norm, yh_norm, ResidualBundle, XhElement};
pub use solver::{run, SolutionHistory};
