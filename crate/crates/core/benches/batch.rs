use std::path::PathBuf;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use sentfact::embed::{load_embeddings, EmbeddingStore};
use sentfact::eval::{
    evaluate, load_dataset, ConfiguredMetric, DatasetFormat, MetricKind, PairMetric,
};
use sentfact::exec::Execution;
use sentfact::transport::{owmd_batch, OwmdParams};

const MODES: [(&str, Execution); 2] = [
    ("sequential", Execution::Sequential),
    ("parallel", Execution::Parallel),
];

type Pairs = Vec<(Vec<String>, Vec<String>)>;

fn random_pairs(n: usize) -> (EmbeddingStore, Pairs) {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let names: Vec<String> = (0..500).map(|i| format!("w{i}")).collect();
    let scale = 2.0 / 300f64.sqrt();
    let store = EmbeddingStore::from_pairs(
        300,
        names.iter().map(|w| {
            let v: Vec<f64> = (0..300)
                .map(|_| scale * rng.sample::<f64, _>(StandardNormal))
                .collect();
            (w.clone(), v)
        }),
    )
    .unwrap();
    let pairs = (0..n)
        .map(|_| {
            let mut side = || -> Vec<String> {
                let len = rng.gen_range(10..=25);
                (0..len)
                    .map(|_| names.choose(&mut rng).unwrap().clone())
                    .collect()
            };
            (side(), side())
        })
        .collect();
    (store, pairs)
}

fn bench_owmd_batch(c: &mut Criterion) {
    let (store, pairs) = random_pairs(256);
    let params = OwmdParams::default();
    let mut group = c.benchmark_group("owmd_batch_256_pairs_d300");
    for (name, mode) in MODES {
        group.bench_with_input(BenchmarkId::from_parameter(name), &mode, |b, &mode| {
            b.iter(|| owmd_batch(&pairs, &store, &params, mode))
        });
    }
    group.finish();
}

fn bench_evaluate(c: &mut Criterion) {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data");
    let store = load_embeddings(dir.join("embeddings.txt"), None).unwrap();
    let records = load_dataset(dir.join("pairs.amr"), DatasetFormat::Annotated)
        .unwrap()
        .records;
    let metrics: Vec<ConfiguredMetric> = MetricKind::ALL
        .into_iter()
        .map(|k| ConfiguredMetric::new(k, &store))
        .collect();
    let refs: Vec<&dyn PairMetric> = metrics.iter().map(|m| m as &dyn PairMetric).collect();
    let mut group = c.benchmark_group("evaluate_mini_corpus_all_metrics");
    for (name, mode) in MODES {
        group.bench_with_input(BenchmarkId::from_parameter(name), &mode, |b, &mode| {
            b.iter(|| evaluate(&records, &refs, mode).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, bench_owmd_batch, bench_evaluate);
criterion_main!(benches);
