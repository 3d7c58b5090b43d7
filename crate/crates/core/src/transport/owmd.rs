use std::f64::consts::PI;

use log::debug;
use ndarray::Array2;
use serde::Serialize;

use super::{in_vocabulary, sinkhorn, MassVector, TransportError, TransportPlan};
use crate::amr::AnnotatedSentence;
use crate::embed::{cost_matrix, EmbedError, EmbeddingStore};
use crate::exec::{self, Execution};
use crate::factorize::{factorize_sentence, FactorizationParams};

/// Hyperparameters of the ordered word mover's distance.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct OwmdParams {
    /// Weight of the inverse-difference-moment reward.
    pub lambda1: f64,
    /// Weight of the KL term towards the diagonal prior.
    pub lambda2: f64,
    /// Width of the diagonal Gaussian prior.
    pub sigma: f64,
    pub max_iter: usize,
    /// Largest tolerated marginal deviation.
    pub tol: f64,
}

impl Default for OwmdParams {
    fn default() -> Self {
        OwmdParams {
            lambda1: 10.0,
            lambda2: 0.03,
            sigma: 10.0,
            max_iter: 20,
            tol: 1e-6,
        }
    }
}

impl OwmdParams {
    pub fn validate(&self) -> Result<(), TransportError> {
        let positive = [
            ("lambda1", self.lambda1),
            ("lambda2", self.lambda2),
            ("sigma", self.sigma),
            ("tol", self.tol),
        ];
        for (name, value) in positive {
            if !(value.is_finite() && value > 0.0) {
                return Err(TransportError::InvalidParams(format!(
                    "{name} must be positive, got {value}"
                )));
            }
        }
        if self.max_iter == 0 {
            return Err(TransportError::InvalidParams(
                "max_iter must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

/// Distance of cell `(i, j)` (1-based) from the diagonal of an `m × n` grid
/// drawn from `(0, 0)` to `(m, n)` in relative coordinates.
pub fn line_distance(i: usize, j: usize, m: usize, n: usize) -> f64 {
    let (i, j, m, n) = (i as f64, j as f64, m as f64, n as f64);
    (i / m - j / n).abs() / (1.0 / (m * m) + 1.0 / (n * n)).sqrt()
}

/// Gaussian prior over transport cells centred on the diagonal.
pub fn prior_matrix(m: usize, n: usize, sigma: f64) -> Array2<f64> {
    let norm = 1.0 / (sigma * (2.0 * PI).sqrt());
    Array2::from_shape_fn((m, n), |(i, j)| {
        let l = line_distance(i + 1, j + 1, m, n);
        norm * (-l * l / (2.0 * sigma * sigma)).exp()
    })
}

/// `1 / ((i/m − j/n)² + 1)` for 1-based `i, j`.
pub fn idm_weights(m: usize, n: usize) -> Array2<f64> {
    Array2::from_shape_fn((m, n), |(i, j)| {
        let d = (i + 1) as f64 / m as f64 - (j + 1) as f64 / n as f64;
        1.0 / (d * d + 1.0)
    })
}

/// Inverse difference moment of a plan: large when mass sits near the
/// diagonal.
pub fn inverse_difference_moment(plan: &Array2<f64>) -> f64 {
    let (m, n) = plan.dim();
    (plan * &idm_weights(m, n)).sum()
}

/// A strictly positive kernel held as log entries.
///
/// Each row may be offset by a constant (rows are rescaled so their largest
/// entry is 1); Sinkhorn scaling absorbs row constants into `k1`, so the
/// resulting plan is unchanged.
#[derive(Clone, Debug, PartialEq)]
pub struct Kernel {
    log: Array2<f64>,
    row_offsets: Vec<f64>,
}

impl Kernel {
    pub fn from_log(log: Array2<f64>) -> Result<Self, TransportError> {
        if log.is_empty() || log.iter().any(|x| !x.is_finite()) {
            return Err(TransportError::NonPositiveKernel);
        }
        let row_offsets = vec![0.0; log.nrows()];
        Ok(Kernel { log, row_offsets })
    }

    pub fn from_matrix(k: &Array2<f64>) -> Result<Self, TransportError> {
        if k.iter().any(|x| !(x.is_finite() && *x > 0.0)) {
            return Err(TransportError::NonPositiveKernel);
        }
        Kernel::from_log(k.mapv(f64::ln))
    }

    pub fn log_values(&self) -> &Array2<f64> {
        &self.log
    }

    /// Log entries before row rescaling: `log_values()[i, j] + offset_i`.
    pub fn unscaled_log(&self) -> Array2<f64> {
        let mut out = self.log.clone();
        for (mut row, off) in out.rows_mut().into_iter().zip(&self.row_offsets) {
            row += *off;
        }
        out
    }

    pub fn dim(&self) -> (usize, usize) {
        self.log.dim()
    }

    /// Exponentiated entries. Entries far below their row maximum may
    /// underflow to zero here; the scaling itself never materializes them.
    pub fn to_matrix(&self) -> Array2<f64> {
        self.log.mapv(f64::exp)
    }
}

/// `K_ij = P_ij · exp((S_ij − D_ij) / λ2)` with `S_ij = λ1 / ((i/M − j/N)² + 1)`,
/// assembled in log space with each row shifted so its maximum is 0.
pub fn owmd_kernel(cost: &Array2<f64>, params: &OwmdParams) -> Result<Kernel, TransportError> {
    params.validate()?;
    let (m, n) = cost.dim();
    let prior = prior_matrix(m, n, params.sigma);
    let idm = idm_weights(m, n);
    let mut log = Array2::from_shape_fn((m, n), |(i, j)| {
        prior[[i, j]].ln() + (params.lambda1 * idm[[i, j]] - cost[[i, j]]) / params.lambda2
    });
    let mut offsets = Vec::with_capacity(m);
    for mut row in log.rows_mut() {
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        row.mapv_inplace(|x| x - max);
        offsets.push(max);
    }
    let mut kernel = Kernel::from_log(log)?;
    kernel.row_offsets = offsets;
    Ok(kernel)
}

#[derive(Clone, Debug)]
pub struct OwmdResult {
    /// Transport cost `Σ T_ij D_ij` under the regularized plan.
    pub distance: f64,
    /// Full regularized objective `Σ T D − λ1 I(T) + λ2 KL(T‖P)`.
    pub objective: f64,
    pub plan: TransportPlan,
    /// Whether the marginal violation reached `tol` within `max_iter`.
    pub converged: bool,
    pub rows: Vec<String>,
    pub cols: Vec<String>,
    pub cost: Array2<f64>,
}

impl OwmdResult {
    fn transposed(self) -> OwmdResult {
        OwmdResult {
            distance: self.distance,
            objective: self.objective,
            plan: self.plan.transposed(),
            converged: self.converged,
            rows: self.cols,
            cols: self.rows,
            cost: self.cost.t().to_owned(),
        }
    }
}

/// Ordered word mover's distance between two token sequences.
///
/// Tokens are lowercased and out-of-vocabulary tokens dropped; duplicates
/// keep their own positions and every position carries uniform mass. The
/// pair is always solved in one canonical orientation (shorter sequence,
/// then lexicographically smaller, on the rows) so the result is exactly
/// symmetric.
pub fn owmd<S: AsRef<str>>(
    s1: &[S],
    s2: &[S],
    store: &EmbeddingStore,
    params: &OwmdParams,
) -> Result<OwmdResult, TransportError> {
    params.validate()?;
    let a = in_vocabulary(s1, store);
    let b = in_vocabulary(s2, store);
    if a.is_empty() {
        return Err(EmbedError::EmptySentence { side: "first" }.into());
    }
    if b.is_empty() {
        return Err(EmbedError::EmptySentence { side: "second" }.into());
    }
    if (b.len(), &b) < (a.len(), &a) {
        Ok(solve(b, a, store, params)?.transposed())
    } else {
        solve(a, b, store, params)
    }
}

fn solve(
    a: Vec<String>,
    b: Vec<String>,
    store: &EmbeddingStore,
    params: &OwmdParams,
) -> Result<OwmdResult, TransportError> {
    let cost = cost_matrix(&a, &b, store)?.values;
    let kernel = owmd_kernel(&cost, params)?;
    let alpha = MassVector::uniform(a.len())?;
    let beta = MassVector::uniform(b.len())?;
    let scaled = sinkhorn(&kernel, &alpha, &beta, params.max_iter, params.tol)?;
    if !scaled.converged {
        debug!(
            "Sinkhorn stopped after {} iterations with marginal violation {:.3e}",
            scaled.plan.iterations, scaled.plan.violation
        );
    }
    let plan = scaled.plan;
    let distance = plan.cost(&cost);
    let objective = distance - params.lambda1 * inverse_difference_moment(&plan.values)
        + params.lambda2
            * kl_divergence(&plan.values, &prior_matrix(a.len(), b.len(), params.sigma));
    Ok(OwmdResult {
        distance,
        objective,
        plan,
        converged: scaled.converged,
        rows: a,
        cols: b,
        cost,
    })
}

fn kl_divergence(plan: &Array2<f64>, prior: &Array2<f64>) -> f64 {
    plan.iter()
        .zip(prior.iter())
        .filter(|(t, _)| **t > 0.0)
        .map(|(t, p)| t * (t / p).ln())
        .sum()
}

/// OWMD between the reordered root units of two annotated sentences.
pub fn owmd_factorized(
    a: &AnnotatedSentence,
    b: &AnnotatedSentence,
    store: &EmbeddingStore,
    params: &OwmdParams,
    factorization: FactorizationParams,
) -> Result<OwmdResult, TransportError> {
    let ta = factorize_sentence(a, factorization)?;
    let tb = factorize_sentence(b, factorization)?;
    owmd(&ta.unit, &tb.unit, store, params)
}

/// OWMD over many pairs; results come back in input order.
pub fn owmd_batch<S: AsRef<str> + Sync>(
    pairs: &[(Vec<S>, Vec<S>)],
    store: &EmbeddingStore,
    params: &OwmdParams,
    execution: Execution,
) -> Vec<Result<OwmdResult, TransportError>> {
    exec::map(execution, pairs, |(a, b)| owmd(a, b, store, params))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::arr2;

    fn store() -> EmbeddingStore {
        EmbeddingStore::from_pairs(
            3,
            [
                ("morty", vec![0.0, 0.0, 0.0]),
                ("rick", vec![1.0, 0.5, 0.0]),
                ("laughing", vec![0.0, 1.0, 1.0]),
                ("at", vec![1.0, 0.0, 1.0]),
                ("is", vec![0.5, 0.5, 0.5]),
            ],
        )
        .unwrap()
    }

    #[test]
    fn line_distance_values() {
        assert_eq!(line_distance(2, 4, 3, 6), 0.0);
        assert!((line_distance(1, 2, 2, 2) - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-15);
        assert!((line_distance(1, 3, 3, 3) - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn prior_shape() {
        let sigma = 10.0;
        let p = prior_matrix(4, 4, sigma);
        let peak = 1.0 / (sigma * (2.0 * PI).sqrt());
        for i in 0..4 {
            assert!((p[[i, i]] - peak).abs() < 1e-15);
            for j in 0..4 {
                assert_eq!(p[[i, j]], p[[j, i]]);
            }
        }
        // Along row 0 the line distance grows with j, so the prior shrinks.
        assert!(p[[0, 0]] > p[[0, 1]] && p[[0, 1]] > p[[0, 2]] && p[[0, 2]] > p[[0, 3]]);
    }

    #[test]
    fn kernel_one_by_one() {
        let params = OwmdParams::default();
        let kernel = owmd_kernel(&arr2(&[[0.0]]), &params).unwrap();
        assert_eq!(kernel.log_values()[[0, 0]], 0.0);
        let p11 = 1.0 / (params.sigma * (2.0 * PI).sqrt());
        let expected = p11 * (params.lambda1 / params.lambda2).exp();
        let got = kernel.unscaled_log()[[0, 0]].exp();
        assert!((got - expected).abs() <= 1e-12 * expected);
    }

    #[test]
    fn kernel_tends_to_prior_for_large_lambda2() {
        let cost = arr2(&[[0.3, 1.2, 2.0], [0.7, 0.1, 1.5]]);
        let params = OwmdParams {
            lambda2: 1e9,
            ..OwmdParams::default()
        };
        let k = owmd_kernel(&cost, &params).unwrap().to_matrix();
        let p = prior_matrix(2, 3, params.sigma);
        for i in 0..2 {
            let row_max = p.row(i).iter().copied().fold(0.0, f64::max);
            for j in 0..3 {
                assert!((k[[i, j]] - p[[i, j]] / row_max).abs() < 1e-7);
            }
        }
    }

    #[test]
    fn permutation_is_penalized() {
        let a = "morty is laughing at rick".split(' ').collect::<Vec<_>>();
        let b = "rick is laughing at morty".split(' ').collect::<Vec<_>>();
        let r = owmd(&a, &b, &store(), &OwmdParams::default()).unwrap();
        assert!(r.distance > 0.0);
        let same = owmd(&a, &a, &store(), &OwmdParams::default()).unwrap();
        assert!(r.distance > same.distance);
    }

    #[test]
    fn symmetric() {
        let a = ["morty", "is", "laughing"];
        let b = ["rick", "at", "morty", "is"];
        let params = OwmdParams::default();
        let ab = owmd(&a, &b, &store(), &params).unwrap();
        let ba = owmd(&b, &a, &store(), &params).unwrap();
        assert_eq!(ab.distance, ba.distance);
        assert_eq!(ab.plan.values, ba.plan.values.t());
        assert_eq!(ab.rows, ba.cols);
    }

    #[test]
    fn duplicates_keep_positions() {
        let r = owmd(
            &["morty", "is", "morty"],
            &["morty"],
            &store(),
            &OwmdParams::default(),
        )
        .unwrap();
        assert_eq!(r.plan.values.dim(), (3, 1));
        assert_eq!(r.rows, ["morty", "is", "morty"]);
    }

    #[test]
    fn diagonal_preference_with_constant_cost() {
        let n = 5;
        let cost = Array2::from_elem((n, n), 1.0);
        for lambda2 in [0.03, 0.5, 5.0] {
            let params = OwmdParams {
                lambda2,
                max_iter: 200,
                ..OwmdParams::default()
            };
            let kernel = owmd_kernel(&cost, &params).unwrap();
            let uniform = MassVector::uniform(n).unwrap();
            let r = sinkhorn(&kernel, &uniform, &uniform, params.max_iter, params.tol).unwrap();
            for i in 0..n {
                assert!(
                    r.plan.values[[i, i]] > 1.0 / (n * n) as f64,
                    "lambda2={lambda2}"
                );
            }
        }
    }

    #[test]
    fn objective_is_reported() {
        let params = OwmdParams::default();
        let r = owmd(&["morty", "rick"], &["rick", "morty"], &store(), &params).unwrap();
        let i = inverse_difference_moment(&r.plan.values);
        let kl = kl_divergence(&r.plan.values, &prior_matrix(2, 2, params.sigma));
        let expected = r.distance - params.lambda1 * i + params.lambda2 * kl;
        assert!((r.objective - expected).abs() < 1e-12);
    }

    #[test]
    fn bad_params_and_oov() {
        let bad = OwmdParams {
            lambda2: 0.0,
            ..OwmdParams::default()
        };
        assert!(owmd(&["morty"], &["rick"], &store(), &bad).is_err());
        let params = OwmdParams::default();
        assert!(owmd(&["zzz"], &["rick"], &store(), &params).is_err());
        assert!(owmd(&["rick"], &["zzz"], &store(), &params).is_err());
    }

    #[test]
    fn batch_matches_single_calls() {
        let pairs = vec![
            (vec!["morty", "is"], vec!["rick", "is"]),
            (vec!["laughing"], vec!["at", "morty"]),
            (vec!["zzz"], vec!["rick"]),
        ];
        let params = OwmdParams::default();
        for execution in [Execution::Sequential, Execution::Parallel] {
            let out = owmd_batch(&pairs, &store(), &params, execution);
            for ((a, b), got) in pairs.iter().zip(&out) {
                match owmd(a, b, &store(), &params) {
                    Ok(want) => assert_eq!(got.as_ref().unwrap().distance, want.distance),
                    Err(_) => assert!(got.is_err()),
                }
            }
        }
    }
}
