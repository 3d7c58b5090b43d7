use std::path::PathBuf;

use sentfact::amr::read_annotated;
use sentfact::embed::load_embeddings;
use sentfact::eval::{
    evaluate, load_dataset, ConfiguredMetric, DatasetFormat, MetricKind, PairMetric,
};
use sentfact::exec::Execution;
use sentfact::factorize::{factorize_sentence, FactorizationParams};

fn data(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("data")
        .join(name)
}

#[test]
fn tom_jerry_root_units() {
    let sentences = read_annotated(data("tom_jerry.amr")).unwrap();
    let units: Vec<String> = sentences
        .iter()
        .map(|s| {
            factorize_sentence(s, FactorizationParams::default())
                .unwrap()
                .unit
                .join(" ")
        })
        .collect();
    assert_eq!(
        units,
        [
            "chase Tom Jerry little yard big",
            "catch cat blue mouse brown forecourt"
        ]
    );
}

#[test]
fn corpus_shape() {
    let d = load_dataset(data("pairs.amr"), DatasetFormat::Annotated).unwrap();
    assert_eq!(d.records.len(), 20);
    assert_eq!(d.skipped, 0);
    let reordered = d
        .records
        .iter()
        .filter(|r| {
            let (mut a, mut b) = (r.tokens_a.clone(), r.tokens_b.clone());
            a.sort();
            b.sort();
            a == b && r.tokens_a != r.tokens_b
        })
        .count();
    assert!(reordered >= 6);
}

#[test]
fn every_word_has_a_vector() {
    let store = load_embeddings(data("embeddings.txt"), None).unwrap();
    let d = load_dataset(data("pairs.amr"), DatasetFormat::Annotated).unwrap();
    for r in &d.records {
        for t in r.tokens_a.iter().chain(&r.tokens_b) {
            assert!(store.contains(t), "{t} has no vector");
        }
        for s in [&r.annotated_a, &r.annotated_b].into_iter().flatten() {
            for t in factorize_sentence(s, FactorizationParams::default())
                .unwrap()
                .unit
            {
                assert!(store.contains(&t), "{t} has no vector");
            }
        }
    }
}

#[test]
fn all_metrics_score_every_pair() {
    let store = load_embeddings(data("embeddings.txt"), None).unwrap();
    let d = load_dataset(data("pairs.amr"), DatasetFormat::Annotated).unwrap();
    let metrics: Vec<ConfiguredMetric> = MetricKind::ALL
        .into_iter()
        .map(|k| ConfiguredMetric::new(k, &store))
        .collect();
    let refs: Vec<&dyn PairMetric> = metrics.iter().map(|m| m as &dyn PairMetric).collect();
    let seq = evaluate(&d.records, &refs, Execution::Sequential).unwrap();
    let par = evaluate(&d.records, &refs, Execution::Parallel).unwrap();
    assert_eq!(seq, par);
    for r in &seq {
        println!("{}", r.to_line());
        assert_eq!((r.n, r.skipped), (20, 0));
    }
}
