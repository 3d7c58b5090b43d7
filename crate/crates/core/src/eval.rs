//! Dataset loading and correlation of metric distances with gold scores.

use std::cmp::Ordering;
use std::fs;
use std::path::Path;

use log::warn;
use serde::Serialize;
use thiserror::Error;

use crate::amr::{parse_blocks, AnnotatedSentence};
use crate::embed::EmbeddingStore;
use crate::exec::{self, Execution};
use crate::factorize::{factorize_sentence, FactorizationParams};
use crate::transport::{baseline_distance, owmd, wmd, BaselineKind, OwmdParams, TransportError};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("{path}: no valid records ({skipped} skipped)")]
    NoRecords { path: String, skipped: usize },
    #[error("inputs have different lengths ({0} and {1})")]
    LengthMismatch(usize, usize),
    #[error("correlation needs at least 2 points, got {0}")]
    TooFewPoints(usize),
    #[error("correlation undefined: {0} input has zero variance")]
    ZeroVariance(&'static str),
    #[error("metric {metric}: only {ok} of {total} pairs succeeded")]
    TooFewPairs {
        metric: String,
        ok: usize,
        total: usize,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub struct EvalRecord {
    pub id: String,
    pub gold: f64,
    pub tokens_a: Vec<String>,
    pub tokens_b: Vec<String>,
    pub annotated_a: Option<AnnotatedSentence>,
    pub annotated_b: Option<AnnotatedSentence>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DatasetFormat {
    /// `score \t sentence1 \t sentence2` per line.
    TsvSts,
    /// Pairs of annotated-sentence blocks; the first block of each pair
    /// carries `# ::score` and optionally `# ::id`.
    Annotated,
}

#[derive(Clone, Debug)]
pub struct Dataset {
    pub records: Vec<EvalRecord>,
    /// Rows or block pairs that were malformed and left out.
    pub skipped: usize,
}

/// Whitespace split plus lowercasing.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split_whitespace().map(str::to_lowercase).collect()
}

pub fn load_dataset(path: impl AsRef<Path>, format: DatasetFormat) -> Result<Dataset, EvalError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| EvalError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let dataset = match format {
        DatasetFormat::TsvSts => parse_tsv(&text),
        DatasetFormat::Annotated => parse_annotated_pairs(&text),
    };
    if dataset.records.is_empty() {
        return Err(EvalError::NoRecords {
            path: path.display().to_string(),
            skipped: dataset.skipped,
        });
    }
    Ok(dataset)
}

fn parse_score(field: &str) -> Option<f64> {
    field.trim().parse::<f64>().ok().filter(|s| s.is_finite())
}

pub fn parse_tsv(text: &str) -> Dataset {
    let mut records = Vec::new();
    let mut skipped = 0;
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        let parsed = match fields.as_slice() {
            [score, a, b] => parse_score(score).map(|gold| (gold, a, b)),
            _ => None,
        };
        match parsed {
            Some((gold, a, b)) => records.push(EvalRecord {
                id: format!("{}", i + 1),
                gold,
                tokens_a: tokenize(a),
                tokens_b: tokenize(b),
                annotated_a: None,
                annotated_b: None,
            }),
            None => {
                warn!(
                    "line {}: expected `score<TAB>sentence<TAB>sentence`, skipped",
                    i + 1
                );
                skipped += 1;
            }
        }
    }
    Dataset { records, skipped }
}

pub fn parse_annotated_pairs(text: &str) -> Dataset {
    let blocks = parse_blocks(text);
    let mut records = Vec::new();
    let mut skipped = 0;
    let mut i = 0;
    while i < blocks.len() {
        let first = &blocks[i];
        let Some(gold) = first.meta("score").and_then(parse_score) else {
            warn!(
                "line {}: block without a valid `# ::score`, skipped",
                first.line
            );
            skipped += 1;
            i += 1;
            continue;
        };
        let Some(second) = blocks.get(i + 1) else {
            warn!("line {}: pair has no second sentence, skipped", first.line);
            skipped += 1;
            break;
        };
        i += 2;
        let pair = AnnotatedSentence::from_block(first)
            .and_then(|a| AnnotatedSentence::from_block(second).map(|b| (a, b)));
        match pair {
            Ok((a, b)) => records.push(EvalRecord {
                id: first
                    .meta("id")
                    .map(str::to_string)
                    .unwrap_or_else(|| format!("{}", records.len() + 1)),
                gold,
                tokens_a: a.tokens.iter().map(|t| t.to_lowercase()).collect(),
                tokens_b: b.tokens.iter().map(|t| t.to_lowercase()).collect(),
                annotated_a: Some(a),
                annotated_b: Some(b),
            }),
            Err(e) => {
                warn!("{e}; pair skipped");
                skipped += 1;
            }
        }
    }
    Dataset { records, skipped }
}

fn check_lengths(x: &[f64], y: &[f64]) -> Result<(), EvalError> {
    if x.len() != y.len() {
        return Err(EvalError::LengthMismatch(x.len(), y.len()));
    }
    if x.len() < 2 {
        return Err(EvalError::TooFewPoints(x.len()));
    }
    Ok(())
}

/// Pearson's r, clamped to [−1, 1].
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64, EvalError> {
    check_lengths(x, y)?;
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 {
        return Err(EvalError::ZeroVariance("first"));
    }
    if syy == 0.0 {
        return Err(EvalError::ZeroVariance("second"));
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// 1-based ranks; tied values share the mean of the ranks they cover.
pub fn ranks(x: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..x.len()).collect();
    order.sort_by(|&a, &b| x[a].partial_cmp(&x[b]).unwrap_or(Ordering::Equal));
    let mut out = vec![0.0; x.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && x[order[end]] == x[order[start]] {
            end += 1;
        }
        let rank = (start + end + 1) as f64 / 2.0;
        for &k in &order[start..end] {
            out[k] = rank;
        }
        start = end;
    }
    out
}

/// Spearman's ρ: Pearson correlation of average ranks.
pub fn spearman(x: &[f64], y: &[f64]) -> Result<f64, EvalError> {
    check_lengths(x, y)?;
    pearson(&ranks(x), &ranks(y))
}

/// A sentence-pair distance that can be evaluated against gold scores.
pub trait PairMetric: Sync {
    fn name(&self) -> &str;
    fn distance(&self, record: &EvalRecord) -> Result<f64, TransportError>;
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum MetricKind {
    Owmd,
    Wmd,
    Bow,
    Avg,
}

impl MetricKind {
    pub const ALL: [MetricKind; 4] = [
        MetricKind::Owmd,
        MetricKind::Wmd,
        MetricKind::Bow,
        MetricKind::Avg,
    ];

    pub fn name(self) -> &'static str {
        match self {
            MetricKind::Owmd => "owmd",
            MetricKind::Wmd => "wmd",
            MetricKind::Bow => "bow",
            MetricKind::Avg => "avg",
        }
    }
}

impl std::str::FromStr for MetricKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        MetricKind::ALL
            .into_iter()
            .find(|m| m.name() == s.trim().to_lowercase())
            .ok_or_else(|| format!("unknown metric `{s}` (expected owmd, wmd, bow or avg)"))
    }
}

/// A built-in metric bound to an embedding store and parameters.
///
/// OWMD runs on factorization-tree root units when both sides are annotated
/// and on the raw token order otherwise; the other metrics always use the
/// surface tokens.
#[derive(Clone, Copy, Debug)]
pub struct ConfiguredMetric<'a> {
    pub kind: MetricKind,
    pub store: &'a EmbeddingStore,
    pub owmd: OwmdParams,
    pub factorization: FactorizationParams,
}

impl<'a> ConfiguredMetric<'a> {
    pub fn new(kind: MetricKind, store: &'a EmbeddingStore) -> Self {
        ConfiguredMetric {
            kind,
            store,
            owmd: OwmdParams::default(),
            factorization: FactorizationParams::default(),
        }
    }
}

impl PairMetric for ConfiguredMetric<'_> {
    fn name(&self) -> &str {
        self.kind.name()
    }

    fn distance(&self, record: &EvalRecord) -> Result<f64, TransportError> {
        let (a, b) = (&record.tokens_a, &record.tokens_b);
        match self.kind {
            MetricKind::Owmd => match (&record.annotated_a, &record.annotated_b) {
                (Some(x), Some(y)) => {
                    let ua = factorize_sentence(x, self.factorization)?.unit;
                    let ub = factorize_sentence(y, self.factorization)?.unit;
                    Ok(owmd(&ua, &ub, self.store, &self.owmd)?.distance)
                }
                _ => Ok(owmd(a, b, self.store, &self.owmd)?.distance),
            },
            MetricKind::Wmd => Ok(wmd(a, b, self.store)?.distance),
            MetricKind::Bow => baseline_distance(BaselineKind::BowCosine, a, b, self.store),
            MetricKind::Avg => {
                baseline_distance(BaselineKind::AvgEmbeddingCosine, a, b, self.store)
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CorrelationReport {
    pub metric: String,
    /// Pairs that entered the correlation.
    pub n: usize,
    /// Pairs the metric could not score.
    pub skipped: usize,
    pub pearson: f64,
    pub spearman: f64,
}

impl CorrelationReport {
    /// `metric \t n \t pearson \t spearman`.
    pub fn to_line(&self) -> String {
        format!(
            "{}\t{}\t{:.6}\t{:.6}",
            self.metric, self.n, self.pearson, self.spearman
        )
    }
}

/// Per-pair distances in record order.
pub fn compute_distances(
    records: &[EvalRecord],
    metric: &dyn PairMetric,
    execution: Execution,
) -> Vec<Result<f64, TransportError>> {
    exec::map(execution, records, |r| metric.distance(r))
}

/// Correlates each metric's negated distance with the gold scores.
pub fn evaluate(
    records: &[EvalRecord],
    metrics: &[&dyn PairMetric],
    execution: Execution,
) -> Result<Vec<CorrelationReport>, EvalError> {
    let mut reports = Vec::with_capacity(metrics.len());
    for metric in metrics {
        let distances = compute_distances(records, *metric, execution);
        let mut similarity = Vec::with_capacity(records.len());
        let mut gold = Vec::with_capacity(records.len());
        for (record, d) in records.iter().zip(distances) {
            match d {
                Ok(d) => {
                    similarity.push(-d);
                    gold.push(record.gold);
                }
                Err(e) => warn!("{}: pair {} skipped: {e}", metric.name(), record.id),
            }
        }
        if similarity.len() < 2 {
            return Err(EvalError::TooFewPairs {
                metric: metric.name().to_string(),
                ok: similarity.len(),
                total: records.len(),
            });
        }
        reports.push(CorrelationReport {
            metric: metric.name().to_string(),
            n: similarity.len(),
            skipped: records.len() - similarity.len(),
            pearson: pearson(&similarity, &gold)?,
            spearman: spearman(&similarity, &gold)?,
        });
    }
    Ok(reports)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn pearson_lines() {
        let x = [1.0, 2.0, 3.0, 4.5];
        let up: Vec<f64> = x.iter().map(|v| 2.0 * v + 1.0).collect();
        let down: Vec<f64> = x.iter().map(|v| -v).collect();
        assert!((pearson(&x, &up).unwrap() - 1.0).abs() < 1e-15);
        assert!((pearson(&x, &down).unwrap() + 1.0).abs() < 1e-15);
    }

    #[test]
    fn pearson_errors() {
        assert!(matches!(
            pearson(&[1.0], &[2.0]),
            Err(EvalError::TooFewPoints(1))
        ));
        assert!(matches!(
            pearson(&[1.0, 2.0], &[2.0]),
            Err(EvalError::LengthMismatch(2, 1))
        ));
        assert!(matches!(
            pearson(&[1.0, 1.0], &[2.0, 3.0]),
            Err(EvalError::ZeroVariance("first"))
        ));
        assert!(spearman(&[1.0, 2.0], &[5.0, 5.0]).is_err());
    }

    #[test]
    fn ranks_average_ties() {
        assert_eq!(ranks(&[10.0, 20.0, 10.0, 30.0]), [1.5, 3.0, 1.5, 4.0]);
        assert_eq!(ranks(&[5.0, 5.0, 5.0]), [2.0, 2.0, 2.0]);
    }

    #[test]
    fn spearman_monotone() {
        let x = [0.3, -1.0, 2.0, 7.0, 1.5];
        let y: Vec<f64> = x.iter().map(|v: &f64| v.exp()).collect();
        assert!((spearman(&x, &y).unwrap() - 1.0).abs() < 1e-15);
        let rev: Vec<f64> = x.iter().map(|v| -v * v * v).collect();
        assert!((spearman(&x, &rev).unwrap() + 1.0).abs() < 1e-15);
    }

    #[test]
    fn tsv_parsing() {
        let d = parse_tsv("4.0\tA cat\tThe cat\nscore\ta\tb\n\n1.5\tx y\tz\nbad line\n");
        assert_eq!(d.records.len(), 2);
        assert_eq!(d.skipped, 2);
        assert_eq!(d.records[0].tokens_b, ["the", "cat"]);
        assert_eq!(d.records[1].gold, 1.5);
    }

    #[test]
    fn load_errors() {
        assert!(matches!(
            load_dataset("/nonexistent/pairs.tsv", DatasetFormat::TsvSts),
            Err(EvalError::Io { .. })
        ));
    }

    #[test]
    fn annotated_pairs() {
        let text = "\
# ::id p1
# ::score 3.5
# ::tok Tom runs
# ::align 0-0.0 1-0
(r / run-01 :ARG0 (p / person))

# ::tok Jerry runs
# ::align 0-0.0 1-0
(r / run-01 :ARG0 (p / person))

# ::tok orphan without score
# ::align 0-0
(o / orphan)
";
        let d = parse_annotated_pairs(text);
        assert_eq!(d.records.len(), 1);
        assert_eq!(d.skipped, 1);
        assert_eq!(d.records[0].id, "p1");
        assert_eq!(d.records[0].tokens_a, ["tom", "runs"]);
        assert!(d.records[0].annotated_b.is_some());
    }

    struct Fixed(Vec<Option<f64>>);

    impl PairMetric for Fixed {
        fn name(&self) -> &str {
            "fixed"
        }
        fn distance(&self, record: &EvalRecord) -> Result<f64, TransportError> {
            let i: usize = record.id.parse().unwrap();
            self.0[i].ok_or(TransportError::EmptySequence)
        }
    }

    fn records(gold: &[f64]) -> Vec<EvalRecord> {
        gold.iter()
            .enumerate()
            .map(|(i, &g)| EvalRecord {
                id: i.to_string(),
                gold: g,
                tokens_a: vec![],
                tokens_b: vec![],
                annotated_a: None,
                annotated_b: None,
            })
            .collect()
    }

    #[test]
    fn negated_distance_matches_gold() {
        let gold = [4.0, 1.0, 2.5, 0.5];
        let metric = Fixed(gold.iter().map(|g| Some(-g)).collect());
        let reports =
            evaluate(&records(&gold), &[&metric, &metric], Execution::Sequential).unwrap();
        assert_eq!(reports.len(), 2);
        assert_eq!(reports[0].n, 4);
        assert!((reports[0].pearson - 1.0).abs() < 1e-15);
        assert!((reports[0].spearman - 1.0).abs() < 1e-15);
    }

    #[test]
    fn failed_pairs_are_counted() {
        let gold = [4.0, 1.0, 2.5, 0.5];
        let metric = Fixed(vec![Some(0.0), None, Some(1.0), Some(2.0)]);
        let report = &evaluate(&records(&gold), &[&metric], Execution::Parallel).unwrap()[0];
        assert_eq!((report.n, report.skipped), (3, 1));
        let only_one = Fixed(vec![Some(0.0), None, None, None]);
        assert!(matches!(
            evaluate(&records(&gold), &[&only_one], Execution::Sequential),
            Err(EvalError::TooFewPairs { ok: 1, .. })
        ));
    }

    #[test]
    fn independent_gold_is_uncorrelated() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let gold: Vec<f64> = (0..1000).map(|_| rng.gen_range(0.0..5.0)).collect();
        let metric = Fixed((0..1000).map(|_| Some(rng.gen_range(0.0..3.0))).collect());
        let report = &evaluate(&records(&gold), &[&metric], Execution::default()).unwrap()[0];
        assert!(report.pearson.abs() < 0.1);
        assert!(report.spearman.abs() < 0.1);
    }

    #[test]
    fn metric_names_round_trip() {
        for kind in MetricKind::ALL {
            assert_eq!(kind.name().parse::<MetricKind>().unwrap(), kind);
        }
        assert!("cosine".parse::<MetricKind>().is_err());
    }
}
