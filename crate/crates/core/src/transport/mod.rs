//! Optimal-transport sentence distances.
//!
//! [`wmd`] solves the classic word mover's distance exactly over
//! normalized bag-of-words marginals. [`owmd`] keeps words in sequence
//! order and solves the order-regularized problem by Sinkhorn scaling of a
//! kernel that favours transport near the diagonal. [`baseline_distance`]
//! covers the cosine baselines.

mod baseline;
mod flow;
mod owmd;
mod sinkhorn;
mod wmd;

use std::collections::HashMap;

use ndarray::{Array2, Axis};
use serde::Serialize;
use thiserror::Error;

use crate::embed::EmbedError;
use crate::factorize::FactorizeError;

pub use baseline::{baseline_distance, BaselineKind};
pub use flow::solve_transport;
pub use owmd::{
    idm_weights, inverse_difference_moment, line_distance, owmd, owmd_batch, owmd_factorized,
    owmd_kernel, prior_matrix, Kernel, OwmdParams, OwmdResult,
};
pub use sinkhorn::{sinkhorn, SinkhornResult};
pub use wmd::{wmd, WmdResult, COST_SCALE};

#[derive(Debug, Error)]
pub enum TransportError {
    #[error("cannot build a mass vector from an empty sequence")]
    EmptySequence,
    #[error("invalid mass vector: {0}")]
    InvalidMass(String),
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("kernel must be strictly positive and finite")]
    NonPositiveKernel,
    #[error("Sinkhorn scaling became non-finite at iteration {iteration}; try a larger lambda2")]
    NumericalFailure { iteration: usize },
    #[error("similarity undefined: {side} sentence has a zero vector")]
    ZeroVector { side: &'static str },
    #[error(transparent)]
    Embed(#[from] EmbedError),
    #[error(transparent)]
    Factorize(#[from] FactorizeError),
}

const MASS_TOLERANCE: f64 = 1e-12;

/// Positive weights summing to one.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(transparent)]
pub struct MassVector(Vec<f64>);

impl MassVector {
    pub fn new(weights: Vec<f64>) -> Result<Self, TransportError> {
        if weights.is_empty() {
            return Err(TransportError::EmptySequence);
        }
        if let Some(w) = weights.iter().find(|w| !(w.is_finite() && **w > 0.0)) {
            return Err(TransportError::InvalidMass(format!(
                "entry {w} is not positive"
            )));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > MASS_TOLERANCE {
            return Err(TransportError::InvalidMass(format!(
                "weights sum to {total}"
            )));
        }
        Ok(MassVector(weights))
    }

    pub fn uniform(n: usize) -> Result<Self, TransportError> {
        if n == 0 {
            return Err(TransportError::EmptySequence);
        }
        Ok(MassVector(vec![1.0 / n as f64; n]))
    }

    pub fn from_counts(counts: &[u64]) -> Result<Self, TransportError> {
        if counts.is_empty() || counts.contains(&0) {
            return Err(TransportError::InvalidMass(
                "counts must be positive".into(),
            ));
        }
        let total: u64 = counts.iter().sum();
        MassVector::new(counts.iter().map(|&c| c as f64 / total as f64).collect())
    }

    pub fn weights(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Normalized bag of words: unique tokens in first-appearance order with
/// their counts and weights.
#[derive(Clone, Debug, PartialEq)]
pub struct Nbow {
    pub tokens: Vec<String>,
    pub counts: Vec<u64>,
    pub mass: MassVector,
}

pub fn nbow<S: AsRef<str>>(tokens: &[S]) -> Result<Nbow, TransportError> {
    if tokens.is_empty() {
        return Err(TransportError::EmptySequence);
    }
    let mut position: HashMap<&str, usize> = HashMap::new();
    let mut unique = Vec::new();
    let mut counts = Vec::new();
    for token in tokens {
        let token = token.as_ref();
        match position.get(token) {
            Some(&i) => counts[i] += 1,
            None => {
                position.insert(token, unique.len());
                unique.push(token.to_string());
                counts.push(1u64);
            }
        }
    }
    let mass = MassVector::from_counts(&counts)?;
    Ok(Nbow {
        tokens: unique,
        counts,
        mass,
    })
}

/// Nonnegative matrix with prescribed row and column marginals.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TransportPlan {
    #[serde(serialize_with = "serialize_matrix")]
    pub values: Array2<f64>,
    pub row_marginal: MassVector,
    pub col_marginal: MassVector,
    /// Largest absolute deviation of a row or column sum from its marginal.
    pub violation: f64,
    /// Scaling iterations used; 0 for exact solvers.
    pub iterations: usize,
}

impl TransportPlan {
    pub fn new(
        values: Array2<f64>,
        row_marginal: MassVector,
        col_marginal: MassVector,
        iterations: usize,
    ) -> Self {
        let violation = marginal_violation(&values, &row_marginal, &col_marginal);
        TransportPlan {
            values,
            row_marginal,
            col_marginal,
            violation,
            iterations,
        }
    }

    /// `Σ T_ij D_ij`.
    pub fn cost(&self, cost: &Array2<f64>) -> f64 {
        (&self.values * cost).sum()
    }

    pub fn transposed(&self) -> TransportPlan {
        TransportPlan {
            values: self.values.t().to_owned(),
            row_marginal: self.col_marginal.clone(),
            col_marginal: self.row_marginal.clone(),
            violation: self.violation,
            iterations: self.iterations,
        }
    }
}

pub(crate) fn marginal_violation(
    values: &Array2<f64>,
    rows: &MassVector,
    cols: &MassVector,
) -> f64 {
    let row_dev = values
        .sum_axis(Axis(1))
        .iter()
        .zip(rows.weights())
        .map(|(s, w)| (s - w).abs())
        .fold(0.0, f64::max);
    let col_dev = values
        .sum_axis(Axis(0))
        .iter()
        .zip(cols.weights())
        .map(|(s, w)| (s - w).abs())
        .fold(0.0, f64::max);
    row_dev.max(col_dev)
}

fn serialize_matrix<S: serde::Serializer>(m: &Array2<f64>, s: S) -> Result<S::Ok, S::Error> {
    use serde::ser::SerializeSeq;
    let mut seq = s.serialize_seq(Some(m.nrows()))?;
    for row in m.rows() {
        seq.serialize_element(&row.to_vec())?;
    }
    seq.end()
}

/// Lowercases and drops tokens that have no vector.
pub(crate) fn in_vocabulary<S: AsRef<str>>(
    tokens: &[S],
    store: &crate::embed::EmbeddingStore,
) -> Vec<String> {
    tokens
        .iter()
        .map(|t| t.as_ref().to_lowercase())
        .filter(|t| store.contains(t))
        .collect()
}
