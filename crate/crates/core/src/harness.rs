//! Verification studies: convergence against an exact solution,
//! self-convergence against the finest computed grid, consistency of the
//! discretization operator and a perturbation-pair stability probe.
//!
//! Every study runs its levels on the grids produced by repeated
//! [`refine`], so coarse nodes and time levels are always present on the
//! finer grids. Rows come back ordered by decreasing `h`.

use std::io;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::{refine, GridSpec};
use crate::model::{ExactSolution, ProblemSpec};
use crate::quadrature::{inf_slice, l2_slice, InteriorVector};
use crate::residual::{apply_phi, restrict, xh_norm, yh_norm, XhElement};
use crate::solver::{run, SolutionHistory};

/// Errors on one grid of a convergence study, measured at the final time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergenceRow {
    pub h: f64,
    pub k: f64,
    pub m_total: usize,
    pub n_steps: usize,
    /// Max interior nodal error at `t_final`.
    pub err_inf: f64,
    /// Discrete L2 error of the interior row at `t_final`.
    pub err_l2: f64,
    /// `X_h` norm of the whole space-time error.
    pub err_xh: f64,
    pub order_inf: Option<f64>,
    pub order_l2: Option<f64>,
    pub order_xh: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConsistencyRow {
    pub h: f64,
    pub k: f64,
    pub m_total: usize,
    pub n_steps: usize,
    /// `‖Φ_h(u_h)‖_{Y_h}`.
    pub residual: f64,
    pub order: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ProbeOutcome {
    Ratio(f64),
    /// `‖Φ_h(V) - Φ_h(W)‖` vanished or underflowed.
    Degenerate,
}

impl ProbeOutcome {
    pub fn ratio(self) -> Option<f64> {
        match self {
            ProbeOutcome::Ratio(r) => Some(r),
            ProbeOutcome::Degenerate => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbeRow {
    pub h: f64,
    pub k: f64,
    pub m_total: usize,
    pub n_steps: usize,
    /// `‖V - W‖_{X_h}`.
    pub distance: f64,
    pub outcome: ProbeOutcome,
}

/// `base` followed by `levels - 1` refinements.
pub fn grid_ladder(base: &GridSpec, levels: usize) -> Result<Vec<GridSpec>> {
    if levels == 0 {
        return Err(Error::InvalidParameter(
            "a study needs at least one level".into(),
        ));
    }
    let mut grids = vec![*base];
    for _ in 1..levels {
        let next = refine(grids.last().expect("non-empty"))?;
        grids.push(next);
    }
    Ok(grids)
}

fn log2_ratio(coarse: f64, fine: f64) -> Option<f64> {
    (coarse > 0.0 && fine > 0.0).then(|| (coarse / fine).log2())
}

fn error_row(grid: &GridSpec, err: &XhElement) -> ConvergenceRow {
    let last = err.row(grid.n_steps());
    ConvergenceRow {
        h: grid.h(),
        k: grid.k(),
        m_total: grid.m_total(),
        n_steps: grid.n_steps(),
        err_inf: inf_slice(last),
        err_l2: l2_slice(last, grid.h()),
        err_xh: xh_norm(err),
        order_inf: None,
        order_l2: None,
        order_xh: None,
    }
}

fn fill_orders(rows: &mut [ConvergenceRow]) {
    for j in 1..rows.len() {
        let (prev, cur) = (rows[j - 1], rows[j]);
        rows[j].order_inf = log2_ratio(prev.err_inf, cur.err_inf);
        rows[j].order_l2 = log2_ratio(prev.err_l2, cur.err_l2);
        rows[j].order_xh = log2_ratio(prev.err_xh, cur.err_xh);
    }
}

/// Global error `restrict(exact) - U_h` on each level.
pub fn convergence_study(
    problem: &ProblemSpec,
    exact: &ExactSolution,
    base: &GridSpec,
    levels: usize,
) -> Result<Vec<ConvergenceRow>> {
    let grids = grid_ladder(base, levels)?;
    let mut rows = grids
        .par_iter()
        .map(|grid| {
            let numeric: XhElement = run(problem, grid)?.into();
            let reference = restrict(|x, t| exact.eval(x, t), grid)?;
            Ok(error_row(grid, &reference.sub(&numeric)?))
        })
        .collect::<Result<Vec<_>>>()?;
    fill_orders(&mut rows);
    Ok(rows)
}

/// Coarse minus fine on the coarse grid. Fails unless the coarse grid is
/// embedded in the fine one.
pub fn compare_aligned(coarse: &SolutionHistory, fine: &SolutionHistory) -> Result<XhElement> {
    let (sx, st) = coarse.grid.embeds_in(&fine.grid).ok_or_else(|| {
        Error::Alignment(format!(
            "grid with h = {} and N = {} is not a coarsening of h = {} and N = {}",
            coarse.grid.h(),
            coarse.grid.n_steps(),
            fine.grid.h(),
            fine.grid.n_steps()
        ))
    })?;
    let grid = coarse.grid;
    let mut out = XhElement::zeros(&grid);
    for n in 0..=grid.n_steps() {
        let nf = n * st;
        out.left_trace[n] = coarse.left_trace[n] - fine.left_trace[nf];
        out.right_trace[n] = coarse.right_trace[n] - fine.right_trace[nf];
        let fine_row = fine.row(nf);
        for (j, slot) in out.row_mut(n).iter_mut().enumerate() {
            // coarse interior node j + 1 sits at fine node sx (j + 1)
            *slot = coarse.row(n)[j] - fine_row[sx * (j + 1) - 1];
        }
    }
    Ok(out)
}

/// Errors of each coarser level against the finest level.
///
/// Returns `levels - 1` rows. Orders come from successive differences,
/// `log2(‖U_{j-1} - U_j‖ / ‖U_j - U_{j+1}‖)`, which is unbiased for the
/// asymptotic rate; ratios of errors against a fixed finest reference are
/// not.
pub fn self_convergence_study(
    problem: &ProblemSpec,
    base: &GridSpec,
    levels: usize,
) -> Result<Vec<ConvergenceRow>> {
    if levels < 3 {
        return Err(Error::InvalidParameter(
            "self-convergence needs at least three levels".into(),
        ));
    }
    let grids = grid_ladder(base, levels)?;
    let runs = grids
        .par_iter()
        .map(|g| run(problem, g))
        .collect::<Result<Vec<_>>>()?;
    let finest = runs.last().expect("at least three levels");
    let coarse = &runs[..levels - 1];

    let mut rows = coarse
        .par_iter()
        .map(|hist| Ok(error_row(&hist.grid, &compare_aligned(hist, finest)?)))
        .collect::<Result<Vec<_>>>()?;
    let diffs = coarse
        .par_iter()
        .zip(runs[1..].par_iter())
        .map(|(c, f)| Ok(error_row(&c.grid, &compare_aligned(c, f)?)))
        .collect::<Result<Vec<_>>>()?;
    for j in 1..rows.len() {
        let (prev, cur) = (diffs[j - 1], diffs[j]);
        rows[j].order_inf = log2_ratio(prev.err_inf, cur.err_inf);
        rows[j].order_l2 = log2_ratio(prev.err_l2, cur.err_l2);
        rows[j].order_xh = log2_ratio(prev.err_xh, cur.err_xh);
    }
    Ok(rows)
}

fn initial_row(problem: &ProblemSpec, grid: &GridSpec) -> Result<InteriorVector> {
    let values = grid
        .interior_nodes()
        .into_iter()
        .map(|x| (problem.initial)(x))
        .collect::<std::result::Result<Vec<_>, _>>()?;
    InteriorVector::new(values, grid.h())
}

/// `‖Φ_h(restrict(exact))‖_{Y_h}` on each level, with the scheme's own
/// initial row.
pub fn consistency_study(
    problem: &ProblemSpec,
    exact: &ExactSolution,
    base: &GridSpec,
    levels: usize,
) -> Result<Vec<ConsistencyRow>> {
    let grids = grid_ladder(base, levels)?;
    let mut rows = grids
        .par_iter()
        .map(|grid| {
            let u = restrict(|x, t| exact.eval(x, t), grid)?;
            let residual = yh_norm(&apply_phi(&u, problem, &initial_row(problem, grid)?)?);
            Ok(ConsistencyRow {
                h: grid.h(),
                k: grid.k(),
                m_total: grid.m_total(),
                n_steps: grid.n_steps(),
                residual,
                order: None,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    for j in 1..rows.len() {
        rows[j].order = log2_ratio(rows[j - 1].residual, rows[j].residual);
    }
    Ok(rows)
}

const PERTURBATION_SEED: u64 = 0x5eed_2021;

/// Smooth perturbation `Σ_{j=1}^{3} a_j sin(jπx/a) cos(b_j π t / T)` with
/// unit `X_h` norm. It vanishes at both ends of the age interval.
/// Amplitudes come from a fixed seed, so every grid sees the same function.
pub fn smooth_perturbation(grid: &GridSpec) -> XhElement {
    let mut rng = ChaCha8Rng::seed_from_u64(PERTURBATION_SEED);
    let modes: Vec<(f64, f64, f64)> = (1..=3)
        .map(|j| (j as f64, rng.gen_range(-1.0..1.0), rng.gen_range(0.0..1.0)))
        .collect();
    let a = grid.a_dagger();
    let span = grid.t_final().max(f64::MIN_POSITIVE);
    let shape = |x: f64, t: f64| -> f64 {
        modes
            .iter()
            .map(|&(j, amp, freq)| {
                amp * (j * std::f64::consts::PI * x / a).sin()
                    * (freq * std::f64::consts::PI * t / span).cos()
            })
            .sum()
    };
    let mut out = XhElement::zeros(grid);
    for n in 0..=grid.n_steps() {
        let t = grid.t(n);
        for (j, slot) in out.row_mut(n).iter_mut().enumerate() {
            *slot = shape(grid.x(j + 1), t);
        }
    }
    let norm = xh_norm(&out);
    out.scaled(1.0 / norm)
}

/// `‖V - W‖_{X_h} / ‖Φ_h(V) - Φ_h(W)‖_{Y_h}`.
pub fn pair_ratio(
    problem: &ProblemSpec,
    initial: &InteriorVector,
    v: &XhElement,
    w: &XhElement,
) -> Result<ProbeRow> {
    let distance = xh_norm(&v.sub(w)?);
    let dphi = yh_norm(&apply_phi(v, problem, initial)?.sub(&apply_phi(w, problem, initial)?)?);
    let outcome = if dphi.is_finite() && dphi > f64::MIN_POSITIVE {
        ProbeOutcome::Ratio(distance / dphi)
    } else {
        ProbeOutcome::Degenerate
    };
    let g = v.grid;
    Ok(ProbeRow {
        h: g.h(),
        k: g.k(),
        m_total: g.m_total(),
        n_steps: g.n_steps(),
        distance,
        outcome,
    })
}

/// Perturbation-pair probe inside the ball of radius `R h` around the
/// restricted exact solution (or the numerical solution when no exact one
/// is known). The perturbation has `X_h` norm `R h / 2`.
pub fn stability_probe(
    problem: &ProblemSpec,
    exact: Option<&ExactSolution>,
    base: &GridSpec,
    levels: usize,
    radius: f64,
) -> Result<Vec<ProbeRow>> {
    if !(radius.is_finite() && radius > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "perturbation scale must be positive, got {radius}"
        )));
    }
    let grids = grid_ladder(base, levels)?;
    grids
        .par_iter()
        .map(|grid| {
            let centre = match exact {
                Some(u) => restrict(|x, t| u.eval(x, t), grid)?,
                None => run(problem, grid)?.into(),
            };
            let delta = smooth_perturbation(grid).scaled(0.5 * radius * grid.h());
            let other = centre.add(&delta)?;
            pair_ratio(problem, &initial_row(problem, grid)?, &centre, &other)
        })
        .collect()
}

/// One point of a plot slice at the final time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlicePoint {
    pub x: f64,
    pub numeric: f64,
    pub exact: Option<f64>,
}

/// All nodes `x_0, ..., x_M` at the final level.
pub fn final_slice(
    hist: &SolutionHistory,
    exact: Option<&ExactSolution>,
) -> Result<Vec<SlicePoint>> {
    let grid = hist.grid;
    let t = grid.t_final();
    hist.nodal_row(grid.n_steps())
        .into_iter()
        .enumerate()
        .map(|(i, numeric)| {
            let x = grid.x(i);
            let exact = exact.map(|u| u.eval(x, t)).transpose()?;
            Ok(SlicePoint { x, numeric, exact })
        })
        .collect()
}

pub const CONVERGENCE_HEADER: [&str; 10] = [
    "h",
    "k",
    "M",
    "N",
    "err_inf",
    "err_l2",
    "err_xh",
    "order_inf",
    "order_l2",
    "order_xh",
];
pub const CONSISTENCY_HEADER: [&str; 6] = ["h", "k", "M", "N", "residual_yh", "order"];
pub const STABILITY_HEADER: [&str; 7] = ["h", "k", "M", "N", "distance_xh", "ratio", "status"];

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn into_string(w: csv::Writer<Vec<u8>>) -> io::Result<String> {
    let bytes = w.into_inner().map_err(|e| e.into_error())?;
    String::from_utf8(bytes).map_err(|e| io::Error::new(io::ErrorKind::InvalidData, e))
}

/// Convergence table as CSV. Floats use the shortest representation that
/// parses back to the same value; absent orders are empty fields.
pub fn convergence_csv(rows: &[ConvergenceRow]) -> io::Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(CONVERGENCE_HEADER)?;
    for r in rows {
        w.write_record([
            r.h.to_string(),
            r.k.to_string(),
            r.m_total.to_string(),
            r.n_steps.to_string(),
            r.err_inf.to_string(),
            r.err_l2.to_string(),
            r.err_xh.to_string(),
            fmt_opt(r.order_inf),
            fmt_opt(r.order_l2),
            fmt_opt(r.order_xh),
        ])?;
    }
    into_string(w)
}

fn bad_data(msg: impl Into<String>) -> io::Error {
    io::Error::new(io::ErrorKind::InvalidData, msg.into())
}

/// Parses a table written by [`convergence_csv`].
pub fn parse_convergence_csv(text: &str) -> io::Result<Vec<ConvergenceRow>> {
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let header = reader.headers()?.clone();
    if header.iter().ne(CONVERGENCE_HEADER) {
        return Err(bad_data(format!("unexpected header {header:?}")));
    }
    reader
        .records()
        .map(|rec| {
            let rec = rec?;
            let float = |i: usize| -> io::Result<f64> {
                rec[i]
                    .parse()
                    .map_err(|e| bad_data(format!("column {}: {e}", CONVERGENCE_HEADER[i])))
            };
            let int = |i: usize| -> io::Result<usize> {
                rec[i]
                    .parse()
                    .map_err(|e| bad_data(format!("column {}: {e}", CONVERGENCE_HEADER[i])))
            };
            let opt = |i: usize| -> io::Result<Option<f64>> {
                if rec[i].is_empty() {
                    Ok(None)
                } else {
                    float(i).map(Some)
                }
            };
            Ok(ConvergenceRow {
                h: float(0)?,
                k: float(1)?,
                m_total: int(2)?,
                n_steps: int(3)?,
                err_inf: float(4)?,
                err_l2: float(5)?,
                err_xh: float(6)?,
                order_inf: opt(7)?,
                order_l2: opt(8)?,
                order_xh: opt(9)?,
            })
        })
        .collect()
}

pub fn consistency_csv(rows: &[ConsistencyRow]) -> io::Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(CONSISTENCY_HEADER)?;
    for r in rows {
        w.write_record([
            r.h.to_string(),
            r.k.to_string(),
            r.m_total.to_string(),
            r.n_steps.to_string(),
            r.residual.to_string(),
            fmt_opt(r.order),
        ])?;
    }
    into_string(w)
}

pub fn stability_csv(rows: &[ProbeRow]) -> io::Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(STABILITY_HEADER)?;
    for r in rows {
        let (ratio, status) = match r.outcome {
            ProbeOutcome::Ratio(v) => (v.to_string(), "ok"),
            ProbeOutcome::Degenerate => (String::new(), "degenerate"),
        };
        w.write_record([
            r.h.to_string(),
            r.k.to_string(),
            r.m_total.to_string(),
            r.n_steps.to_string(),
            r.distance.to_string(),
            ratio,
            status.to_string(),
        ])?;
    }
    into_string(w)
}

/// `x,u_numeric` or, with an exact solution, `x,u_numeric,u_exact,abs_err`.
pub fn slice_csv(points: &[SlicePoint]) -> io::Result<String> {
    let with_exact = points.iter().all(|p| p.exact.is_some()) && !points.is_empty();
    let mut w = csv::Writer::from_writer(Vec::new());
    if with_exact {
        w.write_record(["x", "u_numeric", "u_exact", "abs_err"])?;
    } else {
        w.write_record(["x", "u_numeric"])?;
    }
    for p in points {
        match p.exact {
            Some(u) if with_exact => w.write_record([
                p.x.to_string(),
                p.numeric.to_string(),
                u.to_string(),
                (u - p.numeric).abs().to_string(),
            ])?,
            _ => w.write_record([p.x.to_string(), p.numeric.to_string()])?,
        }
    }
    into_string(w)
}
