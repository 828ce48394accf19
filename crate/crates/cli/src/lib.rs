//! Driver behind the `mvd` binary: turns a [`RunConfig`] into CSV files.

pub mod config;

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use mvd_core::harness::{
    consistency_csv, consistency_study, convergence_csv, convergence_study, final_slice,
    grid_ladder, self_convergence_study, slice_csv, stability_csv, stability_probe,
};
use mvd_core::{build_grid, run, ExactSolution, GridSpec, ProblemSpec};
use thiserror::Error;

pub use config::{parse_config, ConfigError, ProblemSource, RunConfig, StudyKind};

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Core(#[from] mvd_core::Error),
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
}

impl CliError {
    /// 2 for a violated stability threshold, 3 for blow-up, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(mvd_core::Error::StabilityViolation { .. }) => 2,
            CliError::Core(mvd_core::Error::NonFiniteState { .. }) => 3,
            _ => 1,
        }
    }
}

/// A file to be written under the output directory.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Output {
    pub name: String,
    pub contents: String,
}

fn csv_output(name: String, contents: io::Result<String>) -> Result<Output, CliError> {
    let contents = contents.map_err(|source| CliError::Io {
        path: PathBuf::from(&name),
        source,
    })?;
    Ok(Output { name, contents })
}

fn slices(
    problem: &ProblemSpec,
    exact: Option<&ExactSolution>,
    grids: &[GridSpec],
) -> Result<Vec<Output>, CliError> {
    grids
        .iter()
        .map(|g| {
            let hist = run(problem, g)?;
            let points = final_slice(&hist, exact)?;
            csv_output(format!("slice_M{}.csv", g.m_total()), slice_csv(&points))
        })
        .collect()
}

fn need_exact(exact: &Option<ExactSolution>, kind: StudyKind) -> Result<&ExactSolution, CliError> {
    exact.as_ref().ok_or_else(|| {
        CliError::Usage(format!(
            "a {} study needs an exact solution (`exact = ...` under [problem])",
            kind.name()
        ))
    })
}

/// Runs the configured study and returns the files it produces. Nothing is
/// written here.
pub fn execute(cfg: &RunConfig) -> Result<Vec<Output>, CliError> {
    let (problem, exact) = cfg.resolve()?;
    let base = build_grid(cfg.a_dagger, cfg.m_prime, cfg.r, cfg.target_time())?;
    let levels = cfg.levels;
    let mut out = Vec::new();
    match cfg.study {
        StudyKind::Single => {
            out.extend(slices(&problem, exact.as_ref(), &[base])?);
        }
        StudyKind::Convergence => {
            let u = need_exact(&exact, cfg.study)?;
            let rows = convergence_study(&problem, u, &base, levels)?;
            out.push(csv_output(
                "convergence.csv".into(),
                convergence_csv(&rows),
            )?);
            out.extend(slices(&problem, Some(u), &grid_ladder(&base, levels)?)?);
        }
        StudyKind::SelfConvergence => {
            let rows = self_convergence_study(&problem, &base, levels)?;
            out.push(csv_output(
                "self_convergence.csv".into(),
                convergence_csv(&rows),
            )?);
            out.extend(slices(
                &problem,
                exact.as_ref(),
                &grid_ladder(&base, levels)?,
            )?);
        }
        StudyKind::Consistency => {
            let u = need_exact(&exact, cfg.study)?;
            let rows = consistency_study(&problem, u, &base, levels)?;
            out.push(csv_output(
                "consistency.csv".into(),
                consistency_csv(&rows),
            )?);
        }
        StudyKind::Stability => {
            let rows = stability_probe(&problem, exact.as_ref(), &base, levels, cfg.radius)?;
            out.push(csv_output("stability.csv".into(), stability_csv(&rows))?);
        }
    }
    Ok(out)
}

/// Writes each output through a temporary file in `dir` and renames it into
/// place, so readers never see a partial file.
pub fn write_outputs(dir: &Path, outputs: &[Output]) -> Result<Vec<PathBuf>, CliError> {
    let io_err = |path: &Path| {
        let path = path.to_path_buf();
        move |source| CliError::Io { path, source }
    };
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let mut written = Vec::with_capacity(outputs.len());
    for o in outputs {
        let target = dir.join(&o.name);
        let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io_err(dir))?;
        tmp.write_all(o.contents.as_bytes())
            .map_err(io_err(&target))?;
        tmp.persist(&target).map_err(|e| io_err(&target)(e.error))?;
        written.push(target);
    }
    Ok(written)
}
