use criterion::{criterion_group, criterion_main, Criterion};
use relcrowd_bench::corpus_244;
use relcrowd_core::service::replay;
use relcrowd_core::simulate::run_campaign;
use relcrowd_core::{DifficultyModel, JobConfig, Population, Report};

fn campaign(c: &mut Criterion) {
    let corpus = corpus_244();
    let config = JobConfig { sample_seed: 5, ..JobConfig::default() };
    let model = DifficultyModel::default();
    let population = Population::default();

    let mut group = c.benchmark_group("campaign");
    group.sample_size(20);
    group.bench_function("simulate 60 units", |b| {
        b.iter(|| run_campaign(&corpus, &config, &model, &population, 5).unwrap())
    });
    let transcript = run_campaign(&corpus, &config, &model, &population, 5).unwrap();
    let log = transcript.event_log();
    group.bench_function("replay log", |b| b.iter(|| replay(log.as_bytes()).unwrap()));
    group.bench_function("report", |b| b.iter(|| Report::build(&transcript.answers, corpus.gold()).unwrap()));
    group.finish();
}

criterion_group!(benches, campaign);
criterion_main!(benches);
