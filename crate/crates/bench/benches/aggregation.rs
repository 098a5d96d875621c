use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use relcrowd_bench::vote_set;
use relcrowd_core::{aggregate_unit, confidence_tally};

fn aggregation(c: &mut Criterion) {
    let mut group = c.benchmark_group("aggregate_unit");
    for voters in [3, 10, 50] {
        let (judgments, accuracies) = vote_set(voters, 7);
        group.bench_with_input(BenchmarkId::from_parameter(voters), &voters, |b, _| {
            b.iter(|| {
                let tally = confidence_tally(black_box(&judgments), black_box(&accuracies)).unwrap();
                aggregate_unit("u0001", &tally).unwrap()
            })
        });
    }
    group.finish();
}

criterion_group!(benches, aggregation);
criterion_main!(benches);
