use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use relcrowd_bench::scores;
use relcrowd_core::analytics::special::t_sf;
use relcrowd_core::analytics::stats::{describe, t_test_unpaired};

fn numerics(c: &mut Criterion) {
    c.bench_function("t_sf df=58", |b| b.iter(|| t_sf(black_box(6.0774), black_box(58)).unwrap()));
    c.bench_function("t_sf df=1000", |b| b.iter(|| t_sf(black_box(2.5), black_box(1000)).unwrap()));
    let (a, z) = (scores(40, 1), scores(20, 2));
    c.bench_function("t_test 40 vs 20", |b| b.iter(|| t_test_unpaired(black_box(&a), black_box(&z)).unwrap()));
    let many = scores(6000, 3);
    c.bench_function("describe 6000", |b| b.iter(|| describe(black_box(&many)).unwrap()));
}

criterion_group!(benches, numerics);
criterion_main!(benches);
