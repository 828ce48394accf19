//! Run configuration files.
//!
//! A config is plain `key = value` lines with `#` comments and two optional
//! sections. Keys before any section header are top-level:
//!
//! ```text
//! # either a built-in id ...
//! problem    = example1
//! a_dagger   = 1          # default 1
//! m_prime    = 7          # default 7, so h = a_dagger / 20
//! r          = 0.4        # default 0.4
//! t_final    = 0.2        # default: the built-in's time; required for [problem]
//! output_dir = out        # default "out"
//!
//! # ... or an inline problem (not both)
//! [problem]
//! d     = 1 + s/(1-exp(-1))   # mortality, in x and s
//! B     = 2*exp(x)            # fertility, in x and s
//! psi1  = 1                   # default 1, in x
//! psi2  = 1                   # default 1, in x
//! u0    = exp(-x)/2           # initial datum, in x
//! g     = exp(-1)/(1+exp(-t)) # optional right boundary datum, in t
//! exact = exp(-x)/(1+exp(-t)) # optional closed-form solution, in x and t
//!
//! [study]
//! kind      = convergence  # single | convergence | self_convergence | consistency | stability
//! levels    = 3            # default 3
//! radius    = 1            # stability probe ball radius factor, default 1
//! eval_time = 0.2          # overrides t_final
//! ```

use std::path::PathBuf;
use std::str::FromStr;

use mvd_core::expr::{parse_expr, ParseError, Var};
use mvd_core::model::{ExactSolution, ProblemExprs, ProblemSpec};
use mvd_core::BuiltinProblem;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("config is empty")]
    Empty,
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: `{key}` given twice")]
    Duplicate { line: usize, key: String },
    #[error("line {line}: `{key}` must be {expected}, got `{value}`")]
    Value {
        line: usize,
        key: String,
        value: String,
        expected: &'static str,
    },
    #[error("line {line}: bad expression for `{key}`")]
    Expression {
        line: usize,
        key: String,
        #[source]
        source: ParseError,
    },
    #[error("{0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StudyKind {
    Single,
    Convergence,
    SelfConvergence,
    Consistency,
    Stability,
}

impl StudyKind {
    pub fn name(self) -> &'static str {
        match self {
            StudyKind::Single => "single",
            StudyKind::Convergence => "convergence",
            StudyKind::SelfConvergence => "self_convergence",
            StudyKind::Consistency => "consistency",
            StudyKind::Stability => "stability",
        }
    }
}

impl FromStr for StudyKind {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, ()> {
        [
            StudyKind::Single,
            StudyKind::Convergence,
            StudyKind::SelfConvergence,
            StudyKind::Consistency,
            StudyKind::Stability,
        ]
        .into_iter()
        .find(|k| k.name() == s)
        .ok_or(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ProblemSource {
    Builtin(BuiltinProblem),
    Inline {
        exprs: ProblemExprs,
        exact: Option<String>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub problem: ProblemSource,
    pub a_dagger: f64,
    pub m_prime: usize,
    pub r: f64,
    /// `None` means the built-in's own time.
    pub t_final: Option<f64>,
    pub output_dir: PathBuf,
    pub study: StudyKind,
    pub levels: usize,
    pub radius: f64,
}

impl RunConfig {
    /// Default setup for a built-in: `a = 1`, unit weights, `r = 0.4`.
    pub fn builtin(which: BuiltinProblem) -> Self {
        RunConfig {
            problem: ProblemSource::Builtin(which),
            a_dagger: 1.0,
            m_prime: 7,
            r: 0.4,
            t_final: None,
            output_dir: PathBuf::from("out"),
            study: StudyKind::Single,
            levels: 3,
            radius: 1.0,
        }
    }

    pub fn target_time(&self) -> f64 {
        match (&self.problem, self.t_final) {
            (_, Some(t)) => t,
            (ProblemSource::Builtin(b), None) => b.default_t_final(),
            (ProblemSource::Inline { .. }, None) => unreachable!("validated at parse time"),
        }
    }

    /// Problem and, when known, its exact solution.
    pub fn resolve(&self) -> mvd_core::Result<(ProblemSpec, Option<ExactSolution>)> {
        match &self.problem {
            ProblemSource::Builtin(b) => Ok((b.problem(), b.exact())),
            ProblemSource::Inline { exprs, exact } => {
                let problem = ProblemSpec::from_exprs(exprs, self.a_dagger)?;
                let exact = exact.as_deref().map(ExactSolution::from_expr).transpose()?;
                Ok((problem, exact))
            }
        }
    }
}

#[derive(Clone, Copy, PartialEq)]
enum Section {
    Top,
    Problem,
    Study,
}

const TOP_KEYS: [&str; 6] = [
    "problem",
    "a_dagger",
    "m_prime",
    "r",
    "t_final",
    "output_dir",
];
const PROBLEM_KEYS: [&str; 7] = ["d", "B", "psi1", "psi2", "u0", "g", "exact"];
const STUDY_KEYS: [&str; 4] = ["kind", "levels", "radius", "eval_time"];

fn slot_vars(key: &str) -> &'static [Var] {
    match key {
        "d" | "B" => &[Var::X, Var::S],
        "g" => &[Var::T],
        "exact" => &[Var::X, Var::T],
        _ => &[Var::X],
    }
}

struct Entry {
    line: usize,
    value: String,
}

#[derive(Default)]
struct Raw {
    top: Vec<(String, Entry)>,
    problem: Vec<(String, Entry)>,
    study: Vec<(String, Entry)>,
    saw_problem_section: bool,
}

fn take<'a>(entries: &'a [(String, Entry)], key: &str) -> Option<&'a Entry> {
    entries.iter().find(|(k, _)| k == key).map(|(_, e)| e)
}

fn number(entry: &Entry, key: &str) -> Result<f64, ConfigError> {
    entry
        .value
        .parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| ConfigError::Value {
            line: entry.line,
            key: key.into(),
            value: entry.value.clone(),
            expected: "a finite number",
        })
}

fn count(entry: &Entry, key: &str) -> Result<usize, ConfigError> {
    entry
        .value
        .parse::<usize>()
        .map_err(|_| ConfigError::Value {
            line: entry.line,
            key: key.into(),
            value: entry.value.clone(),
            expected: "a non-negative integer",
        })
}

pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    if text.trim().is_empty() {
        return Err(ConfigError::Empty);
    }
    let mut raw = Raw::default();
    let mut section = Section::Top;
    for (idx, full) in text.lines().enumerate() {
        let line = idx + 1;
        let body = full.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        if let Some(name) = body.strip_prefix('[') {
            let name = name.strip_suffix(']').ok_or_else(|| ConfigError::Syntax {
                line,
                message: format!("unterminated section header `{body}`"),
            })?;
            section = match name.trim() {
                "problem" => {
                    raw.saw_problem_section = true;
                    Section::Problem
                }
                "study" => Section::Study,
                other => {
                    return Err(ConfigError::Syntax {
                        line,
                        message: format!("unknown section `[{other}]`"),
                    })
                }
            };
            continue;
        }
        let (key, value) = body.split_once('=').ok_or_else(|| ConfigError::Syntax {
            line,
            message: format!("expected `key = value`, got `{body}`"),
        })?;
        let (key, value) = (key.trim(), value.trim());
        if value.is_empty() {
            return Err(ConfigError::Syntax {
                line,
                message: format!("`{key}` has no value"),
            });
        }
        let (allowed, bucket): (&[&str], _) = match section {
            Section::Top => (&TOP_KEYS, &mut raw.top),
            Section::Problem => (&PROBLEM_KEYS, &mut raw.problem),
            Section::Study => (&STUDY_KEYS, &mut raw.study),
        };
        if !allowed.contains(&key) {
            return Err(ConfigError::UnknownKey {
                line,
                key: key.into(),
            });
        }
        if bucket.iter().any(|(k, _)| k == key) {
            return Err(ConfigError::Duplicate {
                line,
                key: key.into(),
            });
        }
        if section == Section::Problem {
            parse_expr(value, slot_vars(key)).map_err(|source| ConfigError::Expression {
                line,
                key: key.into(),
                source,
            })?;
        }
        bucket.push((
            key.to_string(),
            Entry {
                line,
                value: value.to_string(),
            },
        ));
    }
    build(raw)
}

fn build(raw: Raw) -> Result<RunConfig, ConfigError> {
    let problem = match (take(&raw.top, "problem"), raw.saw_problem_section) {
        (Some(_), true) => {
            return Err(ConfigError::Invalid(
                "give either `problem = <id>` or a [problem] block, not both".into(),
            ))
        }
        (None, false) => {
            return Err(ConfigError::Invalid(
                "no problem: give `problem = <id>` or a [problem] block".into(),
            ))
        }
        (Some(e), false) => {
            let which = e
                .value
                .parse::<BuiltinProblem>()
                .map_err(|_| ConfigError::Value {
                    line: e.line,
                    key: "problem".into(),
                    value: e.value.clone(),
                    expected: "one of example1, example2, example3",
                })?;
            ProblemSource::Builtin(which)
        }
        (None, true) => {
            let get = |k: &str| take(&raw.problem, k).map(|e| e.value.clone());
            let required = |k: &str| {
                get(k).ok_or_else(|| ConfigError::Invalid(format!("[problem] is missing `{k}`")))
            };
            ProblemSource::Inline {
                exprs: ProblemExprs {
                    mortality: required("d")?,
                    fertility: required("B")?,
                    psi1: get("psi1").unwrap_or_else(|| "1".into()),
                    psi2: get("psi2").unwrap_or_else(|| "1".into()),
                    initial: required("u0")?,
                    boundary: get("g"),
                },
                exact: get("exact"),
            }
        }
    };

    let mut cfg = match problem {
        ProblemSource::Builtin(b) => RunConfig::builtin(b),
        inline => RunConfig {
            problem: inline,
            ..RunConfig::builtin(BuiltinProblem::Example1)
        },
    };

    if let Some(e) = take(&raw.top, "a_dagger") {
        cfg.a_dagger = number(e, "a_dagger")?;
        if let ProblemSource::Builtin(_) = cfg.problem {
            if cfg.a_dagger != 1.0 {
                return Err(ConfigError::Value {
                    line: e.line,
                    key: "a_dagger".into(),
                    value: e.value.clone(),
                    expected: "1 for a built-in problem",
                });
            }
        }
    }
    if let Some(e) = take(&raw.top, "m_prime") {
        cfg.m_prime = count(e, "m_prime")?;
    }
    if let Some(e) = take(&raw.top, "r") {
        cfg.r = number(e, "r")?;
    }
    if let Some(e) = take(&raw.top, "t_final") {
        cfg.t_final = Some(number(e, "t_final")?);
    }
    if let Some(e) = take(&raw.top, "output_dir") {
        cfg.output_dir = PathBuf::from(&e.value);
    }
    if let Some(e) = take(&raw.study, "kind") {
        cfg.study = e.value.parse().map_err(|_| ConfigError::Value {
            line: e.line,
            key: "kind".into(),
            value: e.value.clone(),
            expected: "one of single, convergence, self_convergence, consistency, stability",
        })?;
    }
    if let Some(e) = take(&raw.study, "levels") {
        cfg.levels = count(e, "levels")?;
    }
    if let Some(e) = take(&raw.study, "radius") {
        cfg.radius = number(e, "radius")?;
    }
    if let Some(e) = take(&raw.study, "eval_time") {
        cfg.t_final = Some(number(e, "eval_time")?);
    }

    if matches!(cfg.problem, ProblemSource::Inline { .. }) && cfg.t_final.is_none() {
        return Err(ConfigError::Invalid(
            "an inline problem needs `t_final` (or `eval_time` under [study])".into(),
        ));
    }
    Ok(cfg)
}
