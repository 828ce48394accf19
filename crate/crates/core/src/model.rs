//! The continuous problem and the built-in examples.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::expr::{parse_expr, Bindings, EvalError, Var};

/// Coefficient of age and weighted population, e.g. `d(x, s)` or `B(x, s)`.
pub type AgePopulationFn =
    Arc<dyn Fn(f64, f64) -> std::result::Result<f64, EvalError> + Send + Sync>;
/// Function of a single scalar (age or time).
pub type ScalarFn = Arc<dyn Fn(f64) -> std::result::Result<f64, EvalError> + Send + Sync>;

#[derive(Clone)]
pub enum RightBoundary {
    /// `u(a, t) = 0`.
    Homogeneous,
    /// `u(a, t) = g(t)`.
    Dirichlet(ScalarFn),
}

impl RightBoundary {
    pub fn value(&self, t: f64) -> std::result::Result<f64, EvalError> {
        match self {
            RightBoundary::Homogeneous => Ok(0.0),
            RightBoundary::Dirichlet(g) => g(t),
        }
    }

    pub fn is_homogeneous(&self) -> bool {
        matches!(self, RightBoundary::Homogeneous)
    }
}

/// Coefficients and data of one problem instance.
#[derive(Clone)]
pub struct ProblemSpec {
    /// Mortality `d(x, s1)`.
    pub mortality: AgePopulationFn,
    /// Fertility `B(x, s2)`.
    pub fertility: AgePopulationFn,
    /// Competition weight entering the mortality, `ψ1`.
    pub psi1: ScalarFn,
    /// Competition weight entering the fertility, `ψ2`.
    pub psi2: ScalarFn,
    pub initial: ScalarFn,
    pub right_boundary: RightBoundary,
    pub a_dagger: f64,
}

impl fmt::Debug for ProblemSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ProblemSpec")
            .field("a_dagger", &self.a_dagger)
            .field("homogeneous", &self.right_boundary.is_homogeneous())
            .finish_non_exhaustive()
    }
}

/// Text form of a problem, one expression per slot.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemExprs {
    pub mortality: String,
    pub fertility: String,
    pub psi1: String,
    pub psi2: String,
    pub initial: String,
    /// `None` selects the homogeneous right boundary.
    pub boundary: Option<String>,
}

pub fn age_population_fn(f: impl Fn(f64, f64) -> f64 + Send + Sync + 'static) -> AgePopulationFn {
    Arc::new(move |x, s| Ok(f(x, s)))
}

pub fn scalar_fn(f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> ScalarFn {
    Arc::new(move |x| Ok(f(x)))
}

impl ProblemSpec {
    /// Builds a problem from expressions. `d` and `B` may use `x` and `s`,
    /// the weights and the initial datum `x`, and the boundary datum `t`.
    pub fn from_exprs(src: &ProblemExprs, a_dagger: f64) -> Result<ProblemSpec> {
        if !(a_dagger.is_finite() && a_dagger > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "a_dagger must be finite and positive, got {a_dagger}"
            )));
        }
        let two = |text: &str| -> Result<AgePopulationFn> {
            let ast = parse_expr(text, &[Var::X, Var::S])?;
            Ok(Arc::new(move |x, s| ast.eval(&Bindings::xs(x, s))))
        };
        let of_x = |text: &str| -> Result<ScalarFn> {
            let ast = parse_expr(text, &[Var::X])?;
            Ok(Arc::new(move |x| ast.eval(&Bindings::x(x))))
        };
        let right_boundary = match &src.boundary {
            None => RightBoundary::Homogeneous,
            Some(text) => {
                let ast = parse_expr(text, &[Var::T])?;
                RightBoundary::Dirichlet(Arc::new(move |t| ast.eval(&Bindings::t(t))))
            }
        };
        Ok(ProblemSpec {
            mortality: two(&src.mortality)?,
            fertility: two(&src.fertility)?,
            psi1: of_x(&src.psi1)?,
            psi2: of_x(&src.psi2)?,
            initial: of_x(&src.initial)?,
            right_boundary,
            a_dagger,
        })
    }
}

/// Closed-form solution used as a test oracle.
#[derive(Clone)]
pub struct ExactSolution {
    u: Arc<dyn Fn(f64, f64) -> std::result::Result<f64, EvalError> + Send + Sync>,
    pub description: String,
}

impl fmt::Debug for ExactSolution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ExactSolution")
            .field("description", &self.description)
            .finish_non_exhaustive()
    }
}

impl ExactSolution {
    pub fn new(
        description: impl Into<String>,
        u: impl Fn(f64, f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self {
            u: Arc::new(move |x, t| Ok(u(x, t))),
            description: description.into(),
        }
    }

    /// Exact solution given as an expression in `x` and `t`.
    pub fn from_expr(text: &str) -> Result<Self> {
        let ast = parse_expr(text, &[Var::X, Var::T])?;
        Ok(Self {
            u: Arc::new(move |x, t| ast.eval(&Bindings::x(x).with(Var::T, t))),
            description: format!("u(x, t) = {text}"),
        })
    }

    pub fn eval(&self, x: f64, t: f64) -> std::result::Result<f64, EvalError> {
        (self.u)(x, t)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BuiltinProblem {
    Example1,
    Example2,
    Example3,
}

impl BuiltinProblem {
    pub const ALL: [BuiltinProblem; 3] = [
        BuiltinProblem::Example1,
        BuiltinProblem::Example2,
        BuiltinProblem::Example3,
    ];

    pub fn id(self) -> &'static str {
        match self {
            BuiltinProblem::Example1 => "example1",
            BuiltinProblem::Example2 => "example2",
            BuiltinProblem::Example3 => "example3",
        }
    }

    pub fn description(self) -> &'static str {
        match self {
            BuiltinProblem::Example1 => {
                "linear: u0 = e - e^x, d = 1, B = e, u(1,t) = 0; exact u = (e - e^x) e^-t"
            }
            BuiltinProblem::Example2 => {
                "nonlinear: u0 = e - e^x, d = 1/2 + s/(1 - e^-1), B = 2e^x, u(1,t) = 0; no closed form"
            }
            BuiltinProblem::Example3 => {
                "nonlinear, u(1,t) = e^-1/(1 + e^-t): u0 = e^-x/2, d = 1 + s/(1 - e^-1), B = 2e^x; exact u = e^-x/(1 + e^-t)"
            }
        }
    }

    /// Time at which the example is evaluated by default.
    pub fn default_t_final(self) -> f64 {
        match self {
            BuiltinProblem::Example1 => 0.2,
            BuiltinProblem::Example2 | BuiltinProblem::Example3 => 0.8,
        }
    }

    pub fn problem(self) -> ProblemSpec {
        let e = std::f64::consts::E;
        let one_minus_inv_e = 1.0 - (-1.0f64).exp();
        let unit = scalar_fn(|_| 1.0);
        match self {
            BuiltinProblem::Example1 => ProblemSpec {
                mortality: age_population_fn(|_, _| 1.0),
                fertility: age_population_fn(move |_, _| e),
                psi1: unit.clone(),
                psi2: unit,
                initial: scalar_fn(move |x| e - x.exp()),
                right_boundary: RightBoundary::Homogeneous,
                a_dagger: 1.0,
            },
            BuiltinProblem::Example2 => ProblemSpec {
                mortality: age_population_fn(move |_, s| 0.5 + s / one_minus_inv_e),
                fertility: age_population_fn(|x, _| 2.0 * x.exp()),
                psi1: unit.clone(),
                psi2: unit,
                initial: scalar_fn(move |x| e - x.exp()),
                right_boundary: RightBoundary::Homogeneous,
                a_dagger: 1.0,
            },
            BuiltinProblem::Example3 => ProblemSpec {
                mortality: age_population_fn(move |_, s| 1.0 + s / one_minus_inv_e),
                fertility: age_population_fn(|x, _| 2.0 * x.exp()),
                psi1: unit.clone(),
                psi2: unit,
                initial: scalar_fn(|x| (-x).exp() / 2.0),
                right_boundary: RightBoundary::Dirichlet(scalar_fn(|t| {
                    (-1.0f64).exp() / (1.0 + (-t).exp())
                })),
                a_dagger: 1.0,
            },
        }
    }

    pub fn exact(self) -> Option<ExactSolution> {
        let e = std::f64::consts::E;
        match self {
            BuiltinProblem::Example1 => Some(ExactSolution::new(
                "u(x, t) = (e - e^x) e^-t",
                move |x, t| (e - x.exp()) * (-t).exp(),
            )),
            BuiltinProblem::Example2 => None,
            BuiltinProblem::Example3 => {
                Some(ExactSolution::new("u(x, t) = e^-x / (1 + e^-t)", |x, t| {
                    (-x).exp() / (1.0 + (-t).exp())
                }))
            }
        }
    }
}

impl FromStr for BuiltinProblem {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        BuiltinProblem::ALL
            .into_iter()
            .find(|p| p.id() == s)
            .ok_or_else(|| Error::UnknownProblem(s.to_string()))
    }
}

impl fmt::Display for BuiltinProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

/// Looks up a built-in example by id.
pub fn builtin_problem(id: &str) -> Result<(ProblemSpec, Option<ExactSolution>)> {
    let which: BuiltinProblem = id.parse()?;
    Ok((which.problem(), which.exact()))
}

/// `∫_0^a ψ(x) u(x, t) dx` by adaptive Simpson to absolute tolerance 1e-12.
/// Test oracle only.
pub fn exact_weighted_integral(
    exact: &ExactSolution,
    psi: impl Fn(f64) -> f64,
    a_dagger: f64,
    t: f64,
) -> Result<f64> {
    let mut failure = None;
    let f = |x: f64| match exact.eval(x, t) {
        Ok(u) => psi(x) * u,
        Err(e) => {
            failure.get_or_insert(e);
            0.0
        }
    };
    let value = adaptive_simpson(f, 0.0, a_dagger, 1e-12)?;
    match failure {
        Some(e) => Err(e.into()),
        None => Ok(value),
    }
}

const MAX_DEPTH: u32 = 50;

/// Adaptive Simpson quadrature with Richardson correction.
pub fn adaptive_simpson(mut f: impl FnMut(f64) -> f64, a: f64, b: f64, tol: f64) -> Result<f64> {
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_step(&mut f, a, b, fa, fm, fb, whole, tol, MAX_DEPTH)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step(
    f: &mut impl FnMut(f64) -> f64,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> Result<f64> {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if !delta.is_finite() {
        return Err(Error::QuadratureFailure { a, b });
    }
    if delta.abs() <= 15.0 * tol {
        return Ok(left + right + delta / 15.0);
    }
    if depth == 0 || m <= a || b <= m {
        return Err(Error::QuadratureFailure { a, b });
    }
    Ok(
        simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)?
            + simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)?,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    const E: f64 = std::f64::consts::E;

    #[test]
    fn lookup() {
        assert!(builtin_problem("example1").unwrap().1.is_some());
        assert!(builtin_problem("example2").unwrap().1.is_none());
        assert!(builtin_problem("example3").unwrap().1.is_some());
        assert!(matches!(
            builtin_problem("example4"),
            Err(Error::UnknownProblem(_))
        ));
    }

    #[test]
    fn example1_vanishes_at_right_end() {
        let u = BuiltinProblem::Example1.exact().unwrap();
        for t in [0.0, 0.3, 1.7] {
            assert_eq!(u.eval(1.0, t).unwrap(), 0.0);
        }
    }

    #[test]
    fn example3_initial_value() {
        let u = BuiltinProblem::Example3.exact().unwrap();
        assert_eq!(u.eval(0.0, 0.0).unwrap(), 0.5);
    }

    #[test]
    fn weighted_integrals() {
        let u1 = BuiltinProblem::Example1.exact().unwrap();
        let v = exact_weighted_integral(&u1, |_| 1.0, 1.0, 0.0).unwrap();
        assert!((v - 1.0).abs() < 1e-12);

        let u3 = BuiltinProblem::Example3.exact().unwrap();
        let v = exact_weighted_integral(&u3, |_| 1.0, 1.0, 0.0).unwrap();
        assert!((v - (1.0 - (-1.0f64).exp()) / 2.0).abs() < 1e-12);

        assert_eq!(
            exact_weighted_integral(&u3, |_| 0.0, 1.0, 0.4).unwrap(),
            0.0
        );
    }

    #[test]
    fn quadrature_failure_on_singularity() {
        let r = adaptive_simpson(|x| 1.0 / x, 0.0, 1.0, 1e-12);
        assert!(matches!(r, Err(Error::QuadratureFailure { .. })));
    }

    #[test]
    fn example1_satisfies_robin_condition() {
        let u = BuiltinProblem::Example1.exact().unwrap();
        for j in 0..=10 {
            let t = j as f64 * 0.1;
            let u0 = u.eval(0.0, t).unwrap();
            let ux0 = -(-t).exp(); // d/dx (e - e^x) e^-t at x = 0
            let lhs = u0 - ux0;
            let birth = exact_weighted_integral(&u, |_| E, 1.0, t).unwrap();
            assert!((lhs - E * (-t).exp()).abs() < 1e-12);
            assert!((lhs - birth).abs() < 1e-12, "t = {t}");
        }
    }

    #[test]
    fn example3_matches_dirichlet_data() {
        let p = BuiltinProblem::Example3.problem();
        let u = BuiltinProblem::Example3.exact().unwrap();
        for j in 0..=20 {
            let t = j as f64 * 0.05;
            assert_eq!(u.eval(1.0, t).unwrap(), p.right_boundary.value(t).unwrap());
        }
    }

    #[test]
    fn example3_solves_the_pde() {
        use rand::{Rng, SeedableRng};
        let p = BuiltinProblem::Example3.problem();
        let u = BuiltinProblem::Example3.exact().unwrap();
        let c = 1.0 - (-1.0f64).exp();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let x: f64 = rng.gen_range(0.0..1.0);
            let t: f64 = rng.gen_range(0.0..2.0);
            let s1 = exact_weighted_integral(&u, |_| 1.0, 1.0, t).unwrap();
            assert!((s1 - c / (1.0 + (-t).exp())).abs() < 1e-12);
            let val = u.eval(x, t).unwrap();
            let denom = 1.0 + (-t).exp();
            let u_t = (-x).exp() * (-t).exp() / (denom * denom);
            let u_x = -val;
            let u_xx = val;
            let d = (p.mortality)(x, s1).unwrap();
            let residual = u_t + u_x + d * val - u_xx;
            assert!(residual.abs() < 1e-12, "residual {residual} at ({x}, {t})");
        }
    }

    #[test]
    fn example3_satisfies_robin_condition() {
        let p = BuiltinProblem::Example3.problem();
        let u = BuiltinProblem::Example3.exact().unwrap();
        for j in 0..=10 {
            let t = j as f64 * 0.1;
            let s2 = exact_weighted_integral(&u, |_| 1.0, 1.0, t).unwrap();
            let lhs = u.eval(0.0, t).unwrap() + u.eval(0.0, t).unwrap();
            let birth = adaptive_simpson(
                |x| (p.fertility)(x, s2).unwrap() * u.eval(x, t).unwrap(),
                0.0,
                1.0,
                1e-12,
            )
            .unwrap();
            assert!((lhs - birth).abs() < 1e-11);
        }
    }

    #[test]
    fn builtin_rates_are_nonnegative() {
        for which in BuiltinProblem::ALL {
            let p = which.problem();
            for i in 0..=20 {
                let x = i as f64 / 20.0;
                for s in [0.0, 0.5, 1.0, 2.0] {
                    assert!((p.mortality)(x, s).unwrap() >= 0.0);
                    assert!((p.fertility)(x, s).unwrap() >= 0.0);
                }
            }
        }
    }

    #[test]
    fn expression_problem_matches_builtin() {
        let src = ProblemExprs {
            mortality: "1 + s/(1-exp(-1))".into(),
            fertility: "2*exp(x)".into(),
            psi1: "1".into(),
            psi2: "1".into(),
            initial: "exp(-x)/2".into(),
            boundary: Some("exp(-1)/(1+exp(-t))".into()),
        };
        let p = ProblemSpec::from_exprs(&src, 1.0).unwrap();
        let q = BuiltinProblem::Example3.problem();
        for i in 0..=10 {
            let x = i as f64 / 10.0;
            let s = 0.37;
            assert!(((p.mortality)(x, s).unwrap() - (q.mortality)(x, s).unwrap()).abs() < 1e-15);
            assert!(((p.fertility)(x, s).unwrap() - (q.fertility)(x, s).unwrap()).abs() < 1e-15);
            assert!(((p.initial)(x).unwrap() - (q.initial)(x).unwrap()).abs() < 1e-15);
            assert!(
                (p.right_boundary.value(x).unwrap() - q.right_boundary.value(x).unwrap()).abs()
                    < 1e-15
            );
        }
        let bad = ProblemExprs {
            initial: "t".into(),
            ..src
        };
        assert!(matches!(
            ProblemSpec::from_exprs(&bad, 1.0),
            Err(Error::Parse(_))
        ));
    }
}
