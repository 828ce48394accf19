use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use mvd_bench::{grid, smooth_row};
use mvd_core::residual::apply_phi;
use mvd_core::solver::step;
use mvd_core::{qh, run, BuiltinProblem, XhElement};

fn quadrature(c: &mut Criterion) {
    let mut group = c.benchmark_group("qh");
    for m_prime in [7, 97, 997] {
        let g = grid(BuiltinProblem::Example1, m_prime);
        let row = smooth_row(&g);
        group.bench_with_input(BenchmarkId::from_parameter(g.m_total()), &row, |b, row| {
            b.iter(|| qh(black_box(row)))
        });
    }
    group.finish();
}

fn single_step(c: &mut Criterion) {
    let which = BuiltinProblem::Example3;
    let p = which.problem();
    let mut group = c.benchmark_group("step");
    for m_prime in [7, 97] {
        let g = grid(which, m_prime);
        let row = smooth_row(&g);
        group.bench_with_input(BenchmarkId::from_parameter(g.m_total()), &row, |b, row| {
            b.iter(|| step(black_box(row), 0.5, 0.2, 0.0, &p, &g).unwrap())
        });
    }
    group.finish();
}

fn full_run(c: &mut Criterion) {
    let mut group = c.benchmark_group("run");
    group.sample_size(10);
    for which in BuiltinProblem::ALL {
        let p = which.problem();
        let g = grid(which, 17);
        group.bench_function(which.id(), |b| b.iter(|| run(&p, &g).unwrap()));
    }
    group.finish();
}

fn residual(c: &mut Criterion) {
    let which = BuiltinProblem::Example2;
    let p = which.problem();
    let g = grid(which, 17);
    let u: XhElement = run(&p, &g).unwrap().into();
    let init = u.row(0).to_vec();
    let init = mvd_core::InteriorVector::new(init, g.h()).unwrap();
    c.bench_function("apply_phi/M40", |b| {
        b.iter(|| apply_phi(black_box(&u), &p, &init).unwrap())
    });
}

criterion_group!(benches, quadrature, single_step, full_run, residual);
criterion_main!(benches);
