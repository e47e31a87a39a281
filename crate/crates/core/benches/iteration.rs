//! Compares serial and rayon-parallel stepping of the repeated game at
//! several population sizes.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use ppgame::config::parse_config;
use ppgame::engine::Engine;

fn engine(num_dos: usize, parallel: bool) -> Engine {
    let cfg = parse_config(&format!(
        "[game]\nnum_dos = {num_dos}\nmaster_seed = 1\nparallel = {parallel}\n"
    ))
    .unwrap();
    Engine::new(cfg).unwrap()
}

fn bench_step(c: &mut Criterion) {
    let mut group = c.benchmark_group("step");
    for &n in &[10usize, 100, 1000] {
        group.bench_with_input(BenchmarkId::new("serial", n), &n, |b, &n| {
            let mut e = engine(n, false);
            b.iter(|| e.step());
        });
        #[cfg(feature = "parallel")]
        group.bench_with_input(BenchmarkId::new("parallel", n), &n, |b, &n| {
            let mut e = engine(n, true);
            b.iter(|| e.step());
        });
    }
    group.finish();
}

criterion_group!(benches, bench_step);
criterion_main!(benches);
