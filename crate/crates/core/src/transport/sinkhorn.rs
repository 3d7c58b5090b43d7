use ndarray::{Array1, Array2, Zip};

use super::{marginal_violation, Kernel, MassVector, TransportError, TransportPlan};

#[derive(Clone, Debug)]
pub struct SinkhornResult {
    pub plan: TransportPlan,
    /// `ln k1`: the plan is `diag(k1) · K · diag(k2)`.
    pub log_row_scaling: Array1<f64>,
    /// `ln k2`.
    pub log_col_scaling: Array1<f64>,
    pub converged: bool,
}

fn log_sum_exp(values: impl Iterator<Item = f64> + Clone) -> f64 {
    let max = values.clone().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + values.map(|v| (v - max).exp()).sum::<f64>().ln()
}

/// Alternating row/column scaling `k1 ← α ./ K k2`, `k2 ← β ./ Kᵀ k1`.
///
/// The updates run on `ln k1` and `ln k2` against the kernel's log entries,
/// so kernels whose entries span more than the double range still scale.
/// Stops after `max_iter` rounds or once the largest marginal deviation is
/// at most `tol`.
pub fn sinkhorn(
    kernel: &Kernel,
    alpha: &MassVector,
    beta: &MassVector,
    max_iter: usize,
    tol: f64,
) -> Result<SinkhornResult, TransportError> {
    let log_k = kernel.log_values();
    let (m, n) = log_k.dim();
    if alpha.len() != m || beta.len() != n {
        return Err(TransportError::InvalidParams(format!(
            "marginals of length {}×{} for a {m}×{n} kernel",
            alpha.len(),
            beta.len()
        )));
    }
    if max_iter == 0 {
        return Err(TransportError::InvalidParams(
            "max_iter must be at least 1".into(),
        ));
    }
    let log_alpha: Vec<f64> = alpha.weights().iter().map(|w| w.ln()).collect();
    let log_beta: Vec<f64> = beta.weights().iter().map(|w| w.ln()).collect();
    let mut u = Array1::<f64>::zeros(m);
    let mut v = Array1::<f64>::zeros(n);
    let mut plan = Array2::<f64>::zeros((m, n));
    let mut col_max = vec![0.0; n];
    let mut col_sum = vec![0.0; n];
    let mut violation = f64::INFINITY;
    let mut iterations = 0;

    for iteration in 1..=max_iter {
        iterations = iteration;
        for (i, row) in log_k.rows().into_iter().enumerate() {
            let lse = log_sum_exp(row.iter().zip(v.iter()).map(|(k, vj)| k + vj));
            u[i] = log_alpha[i] - lse;
        }

        col_max.iter_mut().for_each(|c| *c = f64::NEG_INFINITY);
        for (row, ui) in log_k.rows().into_iter().zip(u.iter()) {
            for (c, k) in col_max.iter_mut().zip(row.iter()) {
                *c = c.max(k + ui);
            }
        }
        col_sum.iter_mut().for_each(|s| *s = 0.0);
        for (row, ui) in log_k.rows().into_iter().zip(u.iter()) {
            for ((s, c), k) in col_sum.iter_mut().zip(&col_max).zip(row.iter()) {
                *s += (k + ui - c).exp();
            }
        }
        for j in 0..n {
            v[j] = log_beta[j] - (col_max[j] + col_sum[j].ln());
        }

        Zip::indexed(&mut plan)
            .and(log_k)
            .for_each(|(i, j), t, &k| *t = (k + u[i] + v[j]).exp());
        violation = marginal_violation(&plan, alpha, beta);
        let finite = violation.is_finite()
            && u.iter().all(|x| x.is_finite())
            && v.iter().all(|x| x.is_finite());
        if !finite {
            return Err(TransportError::NumericalFailure { iteration });
        }
        if violation <= tol {
            break;
        }
    }

    let converged = violation <= tol;
    Ok(SinkhornResult {
        plan: TransportPlan::new(plan, alpha.clone(), beta.clone(), iterations),
        log_row_scaling: u,
        log_col_scaling: v,
        converged,
    })
}
