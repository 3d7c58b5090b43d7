use std::collections::BTreeMap;

use ndarray::Array1;
use serde::Serialize;

use super::{in_vocabulary, TransportError};
use crate::embed::{unit_vector, EmbeddingStore};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum BaselineKind {
    /// Cosine between word-count vectors.
    BowCosine,
    /// Cosine between mean word vectors.
    AvgEmbeddingCosine,
}

/// `1 − cos(u, v)`, clamped at zero against rounding.
pub fn baseline_distance<S: AsRef<str>>(
    kind: BaselineKind,
    s1: &[S],
    s2: &[S],
    store: &EmbeddingStore,
) -> Result<f64, TransportError> {
    let (u, v) = match kind {
        BaselineKind::BowCosine => count_vectors(s1, s2),
        BaselineKind::AvgEmbeddingCosine => (mean_vector(s1, store), mean_vector(s2, store)),
    };
    let nu = u.dot(&u).sqrt();
    let nv = v.dot(&v).sqrt();
    if nu == 0.0 {
        return Err(TransportError::ZeroVector { side: "first" });
    }
    if nv == 0.0 {
        return Err(TransportError::ZeroVector { side: "second" });
    }
    Ok((1.0 - u.dot(&v) / (nu * nv)).max(0.0))
}

fn count_vectors<S: AsRef<str>>(s1: &[S], s2: &[S]) -> (Array1<f64>, Array1<f64>) {
    let mut vocab = BTreeMap::new();
    for t in s1.iter().chain(s2) {
        let next = vocab.len();
        vocab.entry(t.as_ref().to_lowercase()).or_insert(next);
    }
    let count = |s: &[S]| {
        let mut c = Array1::zeros(vocab.len());
        for t in s {
            c[vocab[&t.as_ref().to_lowercase()]] += 1.0;
        }
        c
    };
    (count(s1), count(s2))
}

fn mean_vector<S: AsRef<str>>(s: &[S], store: &EmbeddingStore) -> Array1<f64> {
    let known = in_vocabulary(s, store);
    if known.is_empty() {
        return Array1::zeros(store.dim());
    }
    unit_vector(&known, store) / known.len() as f64
}
