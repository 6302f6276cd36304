//! Parallel vs sequential Jacobi steps, and the Gauss-Seidel pass for scale.
//!
//! `cargo bench -p hj-sweep-core` compares both policies; with
//! `--no-default-features` the parallel policy runs sequentially too.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use hj_sweep::problems::by_name;
use hj_sweep::solver::{
    fe_fsm_pass, fe_jacobi_step, rk_jacobi_step, Discretization, ExecPolicy, SchemeConfig,
    SchemeKind,
};

fn setup(n: usize) -> Discretization {
    let p = by_name("ex1").expect("builtin");
    Discretization::new(&p, p.grid(n).expect("grid")).expect("discretization")
}

fn jacobi(c: &mut Criterion) {
    let mut group = c.benchmark_group("jacobi_step");
    group.sample_size(20);
    for n in [80, 160] {
        let disc = setup(n);
        for (label, exec) in [
            ("sequential", ExecPolicy::Sequential),
            ("parallel", ExecPolicy::Parallel),
        ] {
            let mut fe = SchemeConfig::new(SchemeKind::FeJacobi);
            fe.exec = exec;
            group.bench_with_input(BenchmarkId::new(format!("fe/{label}"), n), &n, |b, _| {
                let mut state = disc.initial_state();
                b.iter(|| black_box(fe_jacobi_step(&disc, &mut state, &fe).ok()));
            });
            let mut rk = SchemeConfig::new(SchemeKind::RkJacobi);
            rk.exec = exec;
            group.bench_with_input(BenchmarkId::new(format!("rk/{label}"), n), &n, |b, _| {
                let mut state = disc.initial_state();
                b.iter(|| black_box(rk_jacobi_step(&disc, &mut state, &rk).ok()));
            });
        }
    }
    group.finish();
}

fn sweep(c: &mut Criterion) {
    let mut group = c.benchmark_group("fsm_pass");
    group.sample_size(20);
    let cfg = SchemeConfig::new(SchemeKind::FeFsm);
    for n in [80, 160] {
        let disc = setup(n);
        group.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, _| {
            let mut state = disc.initial_state();
            let mut dir = 0;
            b.iter(|| {
                dir = (dir + 1) % 4;
                black_box(fe_fsm_pass(&disc, &mut state, &cfg, dir).ok())
            });
        });
    }
    group.finish();
}

criterion_group!(benches, jacobi, sweep);
criterion_main!(benches);
