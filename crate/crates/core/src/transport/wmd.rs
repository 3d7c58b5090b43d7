use ndarray::Array2;

use super::{in_vocabulary, nbow, solve_transport, TransportError, TransportPlan};
use crate::embed::{cost_matrix, EmbedError, EmbeddingStore};

/// Costs are rounded to integers at this scale before the exact solve; the
/// reported distance is recomputed from the unrounded costs.
pub const COST_SCALE: f64 = 1e9;

#[derive(Clone, Debug)]
pub struct WmdResult {
    pub distance: f64,
    pub plan: TransportPlan,
    /// Unique in-vocabulary tokens labelling the plan rows.
    pub rows: Vec<String>,
    /// Unique in-vocabulary tokens labelling the plan columns.
    pub cols: Vec<String>,
    pub cost: Array2<f64>,
}

/// Exact word mover's distance between two token sequences.
///
/// Tokens are lowercased and out-of-vocabulary tokens dropped. Both bags
/// have weights `c_i / Σc`, so scaling the first by the second's total
/// and vice versa gives integer supplies with equal totals and the
/// transportation problem is solved exactly as a min-cost flow.
pub fn wmd<S: AsRef<str>>(
    s1: &[S],
    s2: &[S],
    store: &EmbeddingStore,
) -> Result<WmdResult, TransportError> {
    let a = in_vocabulary(s1, store);
    let b = in_vocabulary(s2, store);
    if a.is_empty() {
        return Err(EmbedError::EmptySentence { side: "first" }.into());
    }
    if b.is_empty() {
        return Err(EmbedError::EmptySentence { side: "second" }.into());
    }
    let bag_a = nbow(&a)?;
    let bag_b = nbow(&b)?;
    let cost = cost_matrix(&bag_a.tokens, &bag_b.tokens, store)?.values;

    let total_a: u64 = bag_a.counts.iter().sum();
    let total_b: u64 = bag_b.counts.iter().sum();
    let supply: Vec<u64> = bag_a.counts.iter().map(|c| c * total_b).collect();
    let demand: Vec<u64> = bag_b.counts.iter().map(|c| c * total_a).collect();
    let scaled = cost.mapv(|d| (d * COST_SCALE).round() as i64);
    let flow = solve_transport(&supply, &demand, &scaled);

    let total = (total_a * total_b) as f64;
    let values = flow.mapv(|f| f as f64 / total);
    let plan = TransportPlan::new(values, bag_a.mass, bag_b.mass, 0);
    let distance = plan.cost(&cost);
    Ok(WmdResult {
        distance,
        plan,
        rows: bag_a.tokens,
        cols: bag_b.tokens,
        cost,
    })
}
