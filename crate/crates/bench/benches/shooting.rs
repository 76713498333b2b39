use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use pucci_core::diagnostics::{energy_star, pohozaev_integral, PohozaevChoice};
use pucci_core::{find_critical, integrate, solve_ball_eps, concentration_sweep, OpSign, Params, StopCondition};

fn params(op: OpSign) -> Params {
    Params::new(1.0, 2.0, 4, op).unwrap()
}

fn shots(c: &mut Criterion) {
    let p = params(OpSign::Plus);
    c.bench_function("shot to first zero, p = 5", |b| {
        b.iter(|| integrate(&p, black_box(5.0), 1.0, StopCondition::AtFirstZero).unwrap())
    });
    c.bench_function("entire-space shot, t = 60", |b| {
        b.iter(|| integrate(&p, black_box(8.7), 1.0, StopCondition::EfTime(60.0)).unwrap())
    });
}

fn critical(c: &mut Criterion) {
    let mut g = c.benchmark_group("critical search");
    g.sample_size(10);
    for op in [OpSign::Plus, OpSign::Minus] {
        let p = params(op);
        g.bench_function(op.as_str(), |b| b.iter(|| find_critical(black_box(&p), 1e-10).unwrap()));
    }
    g.finish();
}

fn downstream(c: &mut Criterion) {
    let crit = find_critical(&params(OpSign::Plus), 1e-10).unwrap();
    let (a, beta) = PohozaevChoice::Identity.coefficients(&crit.params, crit.p_star);
    c.bench_function("ball at eps = 0.0125", |b| b.iter(|| solve_ball_eps(&crit, black_box(0.0125)).unwrap()));
    c.bench_function("weighted energy", |b| b.iter(|| energy_star(black_box(&crit)).unwrap()));
    c.bench_function("pohozaev integral", |b| b.iter(|| pohozaev_integral(black_box(&crit), a, beta).unwrap()));
    let mut g = c.benchmark_group("sweep");
    g.sample_size(10);
    g.bench_function("five eps values", |b| {
        b.iter(|| concentration_sweep(black_box(&crit), &[0.2, 0.1, 0.05, 0.025, 0.0125]).unwrap())
    });
    g.finish();
}

criterion_group!(benches, shots, critical, downstream);
criterion_main!(benches);
