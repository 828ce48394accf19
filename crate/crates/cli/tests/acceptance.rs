//! Acceptance gate. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

use std::fs;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use mvd_cli::{execute, CliError, RunConfig};
use mvd_core::grid::{build_grid, refine};
use mvd_core::harness::{
    consistency_study, convergence_study, self_convergence_study, stability_probe,
};
use mvd_core::quadrature::{qh, InteriorVector};
use mvd_core::residual::{apply_phi, xh_norm, yh_norm, XhElement};
use mvd_core::{run, BuiltinProblem, Error};

type Check = Result<String, String>;
type Criterion<'a> = (&'static str, Duration, Box<dyn Fn() -> Check + 'a>);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn sci(v: &[f64]) -> String {
    let parts: Vec<String> = v.iter().map(|x| format!("{x:.3e}")).collect();
    format!("[{}]", parts.join(", "))
}

fn sample(m_prime: usize, f: impl Fn(f64) -> f64) -> InteriorVector {
    let g = build_grid(1.0, m_prime, 0.4, 0.1).unwrap();
    InteriorVector::from_fn(g.interior_len(), g.h(), f).unwrap()
}

fn quadrature_exactness() -> Check {
    for m in [1, 2, 7, 17] {
        for (p, want) in [1.0, 0.5, 1.0 / 3.0, 0.25].into_iter().enumerate() {
            let got = qh(&sample(m, |x| x.powi(p as i32)));
            ensure((got - want).abs() <= 1e-12 * f64::max(1.0, want), || {
                format!("M'={m}, x^{p}: {got} vs {want}")
            })?;
        }
    }
    let exact = std::f64::consts::E - 1.0;
    let mut g = build_grid(1.0, 7, 0.4, 0.1).map_err(|e| e.to_string())?;
    let mut errs = Vec::new();
    for _ in 0..3 {
        let v = InteriorVector::from_fn(g.interior_len(), g.h(), f64::exp).unwrap();
        errs.push((g.h(), (qh(&v) - exact).abs()));
        g = refine(&g).unwrap();
    }
    let ratios: Vec<f64> = errs.windows(2).map(|w| w[0].1 / w[1].1).collect();
    let detail = format!("exp error ratios {ratios:.2?} on h = 0.05, 0.025, 0.0125");
    ensure(ratios.iter().all(|r| (12.0..=20.0).contains(r)), || {
        format!("{detail}, expected each in [12, 20]")
    })?;
    Ok(detail)
}

fn root_property() -> Check {
    let mut worst: f64 = 0.0;
    for which in BuiltinProblem::ALL {
        let p = which.problem();
        let g = build_grid(1.0, 7, 0.4, which.default_t_final()).map_err(|e| e.to_string())?;
        let u: XhElement = run(&p, &g).map_err(|e| e.to_string())?.into();
        let init =
            InteriorVector::from_fn(g.interior_len(), g.h(), |x| (p.initial)(x).unwrap()).unwrap();
        let res = yh_norm(&apply_phi(&u, &p, &init).map_err(|e| e.to_string())?);
        let bound = 1e-10 * (1.0 + xh_norm(&u));
        ensure(res <= bound, || {
            format!("{which}: residual {res:e} > {bound:e}")
        })?;
        worst = worst.max(res / bound);
    }
    Ok(format!("largest residual / bound = {worst:.1e}"))
}

fn convergence(which: BuiltinProblem) -> Check {
    let p = which.problem();
    let ex = which.exact().unwrap();
    let g = build_grid(1.0, 7, 0.4, which.default_t_final()).map_err(|e| e.to_string())?;
    let rows = convergence_study(&p, &ex, &g, 3).map_err(|e| e.to_string())?;
    let errs: Vec<f64> = rows.iter().map(|r| r.err_inf).collect();
    ensure(errs.windows(2).all(|w| w[1] < w[0]), || {
        format!("errors not decreasing: {}", sci(&errs))
    })?;
    let order = rows.last().and_then(|r| r.order_inf).unwrap_or(f64::NAN);
    ensure((0.7..=1.3).contains(&order), || {
        format!("finest order {order} outside [0.7, 1.3]")
    })?;
    Ok(format!(
        "max errors {}, finest order {order:.3}",
        sci(&errs)
    ))
}

fn convergence_dirichlet() -> Check {
    let which = BuiltinProblem::Example3;
    let summary = convergence(which)?;
    let p = which.problem();
    let mut g = build_grid(1.0, 7, 0.4, which.default_t_final()).unwrap();
    for _ in 0..3 {
        let hist = run(&p, &g).map_err(|e| e.to_string())?;
        for (n, v) in hist.right_trace.iter().enumerate() {
            let want = p.right_boundary.value(g.t(n)).unwrap();
            ensure(v.to_bits() == want.to_bits(), || {
                format!("U_M at level {n}: {v} vs {want}")
            })?;
        }
        g = refine(&g).unwrap();
    }
    Ok(format!("{summary}; U_M = g bit-exactly on all levels"))
}

fn self_convergence() -> Check {
    let p = BuiltinProblem::Example2.problem();
    let g = build_grid(1.0, 7, 0.4, 0.8).map_err(|e| e.to_string())?;
    let rows = self_convergence_study(&p, &g, 4).map_err(|e| e.to_string())?;
    let errs: Vec<f64> = rows.iter().map(|r| r.err_inf).collect();
    ensure(errs.windows(2).all(|w| w[1] < w[0]), || {
        format!("errors not decreasing: {}", sci(&errs))
    })?;
    Ok(format!("errors vs finest {}", sci(&errs)))
}

fn consistency() -> Check {
    let mut all = Vec::new();
    for which in [BuiltinProblem::Example1, BuiltinProblem::Example3] {
        let p = which.problem();
        let ex = which.exact().unwrap();
        let g = build_grid(1.0, 7, 0.4, which.default_t_final()).map_err(|e| e.to_string())?;
        let rows = consistency_study(&p, &ex, &g, 4).map_err(|e| e.to_string())?;
        let ratios: Vec<f64> = rows
            .windows(2)
            .map(|w| w[0].residual / w[1].residual)
            .collect();
        ensure(ratios.iter().all(|r| (1.7..=2.3).contains(r)), || {
            format!("{which}: residual ratios {ratios:?}")
        })?;
        all.push(format!("{which} {ratios:.3?}"));
    }
    Ok(format!("residual ratios {}", all.join(", ")))
}

fn stability_guardrail(bin: &Path, scratch: &Path) -> Check {
    let mut checked = 0;
    for a in [0.5, 1.0, 4.0, 16.0, 24.0] {
        for m in [1, 2, 7, 17] {
            for r in [0.1, 0.25, 0.4, 0.45, 0.5, 0.6] {
                let h = a / (2.0 * (m as f64 + 3.0));
                let over = r * h + 2.0 * r > 1.0;
                let res = build_grid(a, m, r, 0.01);
                ensure(
                    over == matches!(res, Err(Error::StabilityViolation { .. })),
                    || format!("a={a}, M'={m}, r={r}: {res:?}"),
                )?;
                checked += 1;
            }
        }
    }
    let cfg = RunConfig {
        r: 0.6,
        ..RunConfig::builtin(BuiltinProblem::Example1)
    };
    ensure(
        matches!(
            execute(&cfg),
            Err(CliError::Core(Error::StabilityViolation { .. }))
        ),
        || "in-process run with r = 0.6 was not refused".into(),
    )?;
    let cfg_path = scratch.join("unstable.cfg");
    let out_dir = scratch.join("unstable-out");
    fs::write(&cfg_path, "problem = example1\nr = 0.6\n").unwrap();
    let out = Command::new(bin)
        .args(["run", "--config"])
        .arg(&cfg_path)
        .arg("--out")
        .arg(&out_dir)
        .output()
        .map_err(|e| e.to_string())?;
    ensure(out.status.code() == Some(2), || {
        format!("exit status {:?}", out.status)
    })?;
    ensure(!out_dir.exists(), || "output directory was created".into())?;
    Ok(format!(
        "{checked} parameter triples classified; r = 0.6 refused with exit 2"
    ))
}

fn stability_probe_check() -> Check {
    let mut all = Vec::new();
    for which in [BuiltinProblem::Example1, BuiltinProblem::Example3] {
        let p = which.problem();
        let ex = which.exact();
        let g = build_grid(1.0, 7, 0.4, which.default_t_final()).map_err(|e| e.to_string())?;
        let rows = stability_probe(&p, ex.as_ref(), &g, 3, 1.0).map_err(|e| e.to_string())?;
        let ratios = rows
            .iter()
            .map(|r| {
                r.outcome
                    .ratio()
                    .ok_or_else(|| format!("{which}: degenerate pair at h = {}", r.h))
            })
            .collect::<Result<Vec<f64>, String>>()?;
        let (first, last) = (ratios[0], ratios[ratios.len() - 1]);
        ensure(last <= 2.0 * first, || {
            format!("{which}: ratios {ratios:?} grow")
        })?;
        all.push(format!("{which} {ratios:.4?}"));
    }
    Ok(format!("pair ratios {}", all.join(", ")))
}

fn read_dir_sorted(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (
                e.file_name().into_string().unwrap(),
                fs::read(e.path()).unwrap(),
            )
        })
        .collect();
    files.sort();
    files
}

fn determinism(bin: &Path, scratch: &Path) -> Check {
    let mut runs = Vec::new();
    for i in 0..2 {
        let dir = scratch.join(format!("det{i}"));
        let out = Command::new(bin)
            .args(["examples", "example1", "--out"])
            .arg(&dir)
            .output()
            .map_err(|e| e.to_string())?;
        ensure(out.status.success(), || {
            String::from_utf8_lossy(&out.stderr).into_owned()
        })?;
        runs.push(read_dir_sorted(&dir));
    }
    ensure(!runs[0].is_empty(), || "no files written".into())?;
    ensure(runs[0] == runs[1], || {
        "outputs differ between invocations".into()
    })?;
    Ok(format!(
        "{} files byte-identical across two invocations",
        runs[0].len()
    ))
}

fn main() {
    let bin = Path::new(env!("CARGO_BIN_EXE_mvd"));
    let scratch = tempfile::tempdir().expect("temp dir");
    let s = scratch.path();

    let criteria: Vec<Criterion> = vec![
        (
            "quadrature exactness and order",
            Duration::from_secs(1),
            Box::new(quadrature_exactness),
        ),
        (
            "root property",
            Duration::from_secs(5),
            Box::new(root_property),
        ),
        (
            "convergence, example1",
            Duration::from_secs(30),
            Box::new(|| convergence(BuiltinProblem::Example1)),
        ),
        (
            "convergence, example3",
            Duration::from_secs(60),
            Box::new(convergence_dirichlet),
        ),
        (
            "self-convergence, example2",
            Duration::from_secs(300),
            Box::new(self_convergence),
        ),
        (
            "consistency order",
            Duration::from_secs(30),
            Box::new(consistency),
        ),
        (
            "stability guardrail",
            Duration::from_secs(1),
            Box::new(|| stability_guardrail(bin, s)),
        ),
        (
            "stability probe",
            Duration::from_secs(60),
            Box::new(stability_probe_check),
        ),
        (
            "determinism",
            Duration::from_secs(10),
            Box::new(|| determinism(bin, s)),
        ),
    ];

    let mut failed = 0;
    for (i, (name, limit, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let result = check();
        let elapsed = start.elapsed();
        let result = result.and_then(|msg| {
            if elapsed <= *limit {
                Ok(msg)
            } else {
                Err(format!("took {elapsed:.2?}, limit {limit:?}"))
            }
        });
        match result {
            Ok(msg) => println!("criterion {}: PASS  {name} ({elapsed:.2?}): {msg}", i + 1),
            Err(msg) => {
                failed += 1;
                println!("criterion {}: FAIL  {name} ({elapsed:.2?}): {msg}", i + 1);
            }
        }
    }
    println!(
        "{} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
