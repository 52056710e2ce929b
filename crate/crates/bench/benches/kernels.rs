use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;
use vortexpair::optimizer::SolverConfig;
use vortexpair::{Euler, EulerConfig, GreensOperator, Solver};
use vortexpair_bench::{bump_on, patch_on};

fn stream(c: &mut Criterion) {
    let mut g = c.benchmark_group("stream");
    for nx in [32, 64, 128] {
        let f = patch_on(nx);
        let op = GreensOperator::new(*f.domain());
        g.bench_with_input(BenchmarkId::new("fft", nx), &f, |b, f| b.iter(|| op.stream_fft(black_box(f)).unwrap()));
        if nx <= 64 {
            g.bench_with_input(BenchmarkId::new("direct", nx), &f, |b, f| {
                b.iter(|| op.stream_direct(black_box(f)).unwrap())
            });
        }
    }
    g.finish();
}

fn solver_iteration(c: &mut Criterion) {
    let f = patch_on(64);
    let solver = Solver::new(&f, SolverConfig::new(2.0)).unwrap();
    let s0 = solver.initial_state().unwrap();
    c.bench_function("solver_iteration_64x32", |b| b.iter(|| solver.ascent_iterate(black_box(&s0)).unwrap()));
}

fn euler_step(c: &mut Criterion) {
    let f = bump_on(128);
    let euler = Euler::new(*f.domain(), EulerConfig::new(0.01)).unwrap();
    let s0 = euler.init(f).unwrap();
    c.bench_function("euler_step_128x64", |b| {
        b.iter_batched(|| s0.clone(), |mut s| euler.step(&mut s).unwrap(), criterion::BatchSize::LargeInput)
    });
}

criterion_group!(benches, stream, solver_iteration, euler_step);
criterion_main!(benches);
