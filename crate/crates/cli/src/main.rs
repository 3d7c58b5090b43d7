use std::collections::HashSet;
use std::fmt;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use log::warn;
use serde::Serialize;

use sentfact::amr::{read_annotated, AnnotatedSentence};
use sentfact::embed::{load_embeddings, EmbeddingStore};
use sentfact::eval::{
    evaluate, load_dataset, tokenize, ConfiguredMetric, DatasetFormat, MetricKind, PairMetric,
};
use sentfact::exec::Execution;
use sentfact::factorize::{
    factorize_sentence, multiscale_units, render_multiscale, render_tree, FactorizationParams,
};
use sentfact::transport::{baseline_distance, owmd, wmd, BaselineKind, OwmdParams, TransportPlan};

/// Sentence factorization over AMR and order-aware sentence distances.
#[derive(Debug, Parser)]
#[command(name = "sentfact", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Print the factorization tree and multi-scale units of every sentence
    /// in an annotated file.
    Factorize {
        input: PathBuf,
        #[command(flatten)]
        tree: TreeArgs,
        /// Emit JSON instead of text.
        #[arg(long)]
        json: bool,
    },
    /// Distance between two sentences.
    Distance {
        /// First sentence, or an annotated file with `--annotated`.
        a: String,
        /// Second sentence, or an annotated file with `--annotated`.
        b: String,
        /// Read A and B as annotated files and compare their first sentences.
        #[arg(long)]
        annotated: bool,
        #[command(flatten)]
        metric: MetricArgs,
        /// Print the transport plan after each transport metric.
        #[arg(long)]
        dump_plan: bool,
        #[arg(long)]
        json: bool,
    },
    /// Correlate metric distances with gold scores over a dataset.
    Eval {
        dataset: PathBuf,
        #[arg(long, value_enum, default_value_t = Format::Auto)]
        format: Format,
        #[command(flatten)]
        metric: MetricArgs,
        /// Score pairs on one thread.
        #[arg(long)]
        sequential: bool,
        #[arg(long)]
        json: bool,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    /// `.amr` files are annotated, anything else TSV.
    Auto,
    Tsv,
    Annotated,
}

#[derive(Debug, Args, Clone, Copy)]
struct TreeArgs {
    /// Factorization depth D.
    #[arg(long, default_value_t = 2)]
    depth: usize,
    /// Children per node in the multi-scale export.
    #[arg(long, default_value_t = 4)]
    k: usize,
}

#[derive(Debug, Args)]
struct MetricArgs {
    /// Word vectors in word2vec text format, optionally gzipped.
    #[arg(long, env = "SENTFACT_EMBEDDINGS")]
    embeddings: PathBuf,
    /// Comma-separated metrics from owmd, wmd, bow, avg, or `all`.
    #[arg(long, default_value = "owmd")]
    metrics: String,
    #[arg(long, default_value_t = 10.0)]
    lambda1: f64,
    #[arg(long, default_value_t = 0.03)]
    lambda2: f64,
    #[arg(long, default_value_t = 10.0)]
    sigma: f64,
    #[arg(long, default_value_t = 20)]
    max_iter: usize,
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
    #[command(flatten)]
    tree: TreeArgs,
}

#[derive(Debug, Serialize)]
struct Params {
    lambda1: f64,
    lambda2: f64,
    sigma: f64,
    max_iter: usize,
    tol: f64,
    depth: usize,
    k: usize,
}

impl MetricArgs {
    fn kinds(&self) -> Result<Vec<MetricKind>> {
        if self.metrics.trim() == "all" {
            return Ok(MetricKind::ALL.to_vec());
        }
        let mut kinds = Vec::new();
        for name in self.metrics.split(',').filter(|s| !s.trim().is_empty()) {
            let kind: MetricKind = name.parse().map_err(anyhow::Error::msg)?;
            if !kinds.contains(&kind) {
                kinds.push(kind);
            }
        }
        if kinds.is_empty() {
            bail!("--metrics selects nothing");
        }
        Ok(kinds)
    }

    fn owmd(&self) -> Result<OwmdParams> {
        let params = OwmdParams {
            lambda1: self.lambda1,
            lambda2: self.lambda2,
            sigma: self.sigma,
            max_iter: self.max_iter,
            tol: self.tol,
        };
        params.validate()?;
        Ok(params)
    }

    fn params(&self) -> Params {
        Params {
            lambda1: self.lambda1,
            lambda2: self.lambda2,
            sigma: self.sigma,
            max_iter: self.max_iter,
            tol: self.tol,
            depth: self.tree.depth,
            k: self.tree.k,
        }
    }

    fn store(&self, vocabulary: &HashSet<String>) -> Result<EmbeddingStore> {
        require_file(&self.embeddings)?;
        let store = load_embeddings(&self.embeddings, Some(vocabulary))
            .with_context(|| format!("loading {}", self.embeddings.display()))?;
        Ok(store)
    }
}

impl TreeArgs {
    fn params(self) -> Result<FactorizationParams> {
        Ok(FactorizationParams::new(self.depth, self.k)?)
    }
}

/// An input file that does not exist; reported with exit code 2.
#[derive(Debug)]
struct MissingInput(PathBuf);

impl fmt::Display for MissingInput {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: no such file", self.0.display())
    }
}

impl std::error::Error for MissingInput {}

fn require_file(path: &Path) -> Result<()> {
    if !path.is_file() {
        return Err(MissingInput(path.to_path_buf()).into());
    }
    Ok(())
}

fn read_sentences(path: &Path) -> Result<Vec<AnnotatedSentence>> {
    require_file(path)?;
    read_annotated(path).with_context(|| format!("reading {}", path.display()))
}

fn lowercase_all<'a>(tokens: impl IntoIterator<Item = &'a String>) -> HashSet<String> {
    tokens.into_iter().map(|t| t.to_lowercase()).collect()
}

#[derive(Serialize)]
struct FactorizeOutput {
    tokens: Vec<String>,
    root: Vec<String>,
    tree: sentfact::factorize::FactorNode,
    levels: Vec<Vec<Vec<String>>>,
}

fn run_factorize(out: &mut impl Write, input: &Path, tree: TreeArgs, json: bool) -> Result<()> {
    let params = tree.params()?;
    let sentences = read_sentences(input)?;
    let mut outputs = Vec::with_capacity(sentences.len());
    for (i, sentence) in sentences.iter().enumerate() {
        let factor = factorize_sentence(sentence, params)
            .with_context(|| format!("sentence {} of {}", i + 1, input.display()))?;
        let levels = multiscale_units(&factor, params)
            .with_context(|| format!("sentence {} of {}", i + 1, input.display()))?;
        outputs.push(FactorizeOutput {
            tokens: sentence.tokens.clone(),
            root: factor.unit.clone(),
            tree: factor,
            levels,
        });
    }
    if json {
        serde_json::to_writer_pretty(&mut *out, &outputs)?;
        writeln!(out)?;
        return Ok(());
    }
    for (i, o) in outputs.iter().enumerate() {
        if i > 0 {
            writeln!(out)?;
        }
        write!(out, "{}", render_tree(&o.tree))?;
        writeln!(out)?;
        write!(out, "{}", render_multiscale(&o.levels))?;
    }
    Ok(())
}

#[derive(Serialize)]
struct PlanOutput<'a> {
    rows: &'a [String],
    cols: &'a [String],
    #[serde(flatten)]
    plan: &'a TransportPlan,
}

#[derive(Serialize)]
struct DistanceOutput<'a> {
    metric: &'static str,
    distance: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    objective: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    converged: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    plan: Option<PlanOutput<'a>>,
}

fn write_plan(
    out: &mut impl Write,
    rows: &[String],
    cols: &[String],
    plan: &TransportPlan,
) -> Result<()> {
    writeln!(out, "\t{}", cols.join("\t"))?;
    for (label, row) in rows.iter().zip(plan.values.rows()) {
        let cells: Vec<String> = row.iter().map(|v| format!("{v:.6}")).collect();
        writeln!(out, "{label}\t{}", cells.join("\t"))?;
    }
    Ok(())
}

fn run_distance(
    out: &mut impl Write,
    a: &str,
    b: &str,
    annotated: bool,
    args: &MetricArgs,
    dump_plan: bool,
    json: bool,
) -> Result<()> {
    let kinds = args.kinds()?;
    let params = args.owmd()?;
    let factorization = args.tree.params()?;

    let first = |path: &str| -> Result<AnnotatedSentence> {
        let sentences = read_sentences(Path::new(path))?;
        if sentences.len() > 1 {
            warn!("{path}: using the first of {} sentences", sentences.len());
        }
        sentences
            .into_iter()
            .next()
            .with_context(|| format!("{path}: no sentences"))
    };
    let (tokens, units) = if annotated {
        let (sa, sb) = (first(a)?, first(b)?);
        let ua = factorize_sentence(&sa, factorization)?.unit;
        let ub = factorize_sentence(&sb, factorization)?.unit;
        let lower = |s: &AnnotatedSentence| s.tokens.iter().map(|t| t.to_lowercase()).collect();
        ((lower(&sa), lower(&sb)), (ua, ub))
    } else {
        if kinds.contains(&MetricKind::Owmd) {
            warn!("raw text input: OWMD runs on the surface word order; pass --annotated to compare factorized sentences");
        }
        let (ta, tb) = (tokenize(a), tokenize(b));
        ((ta.clone(), tb.clone()), (ta, tb))
    };
    let vocabulary = lowercase_all(
        tokens
            .0
            .iter()
            .chain(&tokens.1)
            .chain(&units.0)
            .chain(&units.1),
    );
    let store = args.store(&vocabulary)?;

    let owmd_result = if kinds.contains(&MetricKind::Owmd) {
        Some(owmd(&units.0, &units.1, &store, &params).context("owmd")?)
    } else {
        None
    };
    let wmd_result = if kinds.contains(&MetricKind::Wmd) {
        Some(wmd(&tokens.0, &tokens.1, &store).context("wmd")?)
    } else {
        None
    };
    let mut results = Vec::new();
    for kind in &kinds {
        let result = match kind {
            MetricKind::Owmd => {
                let r = owmd_result.as_ref().expect("computed above");
                if !r.converged {
                    warn!(
                        "owmd: marginals off by {:.2e} after {} iterations",
                        r.plan.violation, r.plan.iterations
                    );
                }
                DistanceOutput {
                    metric: kind.name(),
                    distance: r.distance,
                    objective: Some(r.objective),
                    converged: Some(r.converged),
                    plan: dump_plan.then(|| PlanOutput {
                        rows: &r.rows,
                        cols: &r.cols,
                        plan: &r.plan,
                    }),
                }
            }
            MetricKind::Wmd => {
                let r = wmd_result.as_ref().expect("computed above");
                DistanceOutput {
                    metric: kind.name(),
                    distance: r.distance,
                    objective: None,
                    converged: None,
                    plan: dump_plan.then(|| PlanOutput {
                        rows: &r.rows,
                        cols: &r.cols,
                        plan: &r.plan,
                    }),
                }
            }
            MetricKind::Bow | MetricKind::Avg => {
                let baseline = if *kind == MetricKind::Bow {
                    BaselineKind::BowCosine
                } else {
                    BaselineKind::AvgEmbeddingCosine
                };
                DistanceOutput {
                    metric: kind.name(),
                    distance: baseline_distance(baseline, &tokens.0, &tokens.1, &store)
                        .context(kind.name())?,
                    objective: None,
                    converged: None,
                    plan: None,
                }
            }
        };
        results.push(result);
    }

    if json {
        #[derive(Serialize)]
        struct Document<'a> {
            params: Params,
            results: Vec<DistanceOutput<'a>>,
        }
        let doc = Document {
            params: args.params(),
            results,
        };
        serde_json::to_writer_pretty(&mut *out, &doc)?;
        writeln!(out)?;
        return Ok(());
    }
    for r in &results {
        writeln!(out, "{}\t{}", r.metric, format_distance(r.distance))?;
        if let Some(p) = &r.plan {
            write_plan(out, p.rows, p.cols, p.plan)?;
        }
    }
    Ok(())
}

fn run_eval(
    out: &mut impl Write,
    dataset: &Path,
    format: Format,
    args: &MetricArgs,
    sequential: bool,
    json: bool,
) -> Result<()> {
    let kinds = args.kinds()?;
    let params = args.owmd()?;
    let factorization = args.tree.params()?;
    require_file(dataset)?;
    let format = match format {
        Format::Tsv => DatasetFormat::TsvSts,
        Format::Annotated => DatasetFormat::Annotated,
        Format::Auto if dataset.extension().is_some_and(|e| e == "amr") => DatasetFormat::Annotated,
        Format::Auto => DatasetFormat::TsvSts,
    };
    let data = load_dataset(dataset, format)?;
    if data.skipped > 0 {
        warn!(
            "{}: {} malformed entries skipped",
            dataset.display(),
            data.skipped
        );
    }

    let mut vocabulary = HashSet::new();
    for r in &data.records {
        vocabulary.extend(lowercase_all(r.tokens_a.iter().chain(&r.tokens_b)));
        for s in [&r.annotated_a, &r.annotated_b].into_iter().flatten() {
            vocabulary.extend(lowercase_all(s.lemmas.iter().flatten()));
        }
    }
    let store = args.store(&vocabulary)?;
    let metrics: Vec<ConfiguredMetric> = kinds
        .iter()
        .map(|&kind| ConfiguredMetric {
            kind,
            store: &store,
            owmd: params,
            factorization,
        })
        .collect();
    let refs: Vec<&dyn PairMetric> = metrics.iter().map(|m| m as &dyn PairMetric).collect();
    let execution = if sequential {
        Execution::Sequential
    } else {
        Execution::default()
    };
    let reports = evaluate(&data.records, &refs, execution)?;
    for r in reports.iter().filter(|r| r.skipped > 0) {
        warn!(
            "{}: {} of {} pairs could not be scored",
            r.metric,
            r.skipped,
            r.n + r.skipped
        );
    }
    if json {
        serde_json::to_writer_pretty(&mut *out, &reports)?;
        writeln!(out)?;
    } else {
        for r in &reports {
            writeln!(out, "{}", r.to_line())?;
        }
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    let stdout = io::stdout();
    let mut out = io::BufWriter::new(stdout.lock());
    match &cli.command {
        Command::Factorize { input, tree, json } => run_factorize(&mut out, input, *tree, *json)?,
        Command::Distance {
            a,
            b,
            annotated,
            metric,
            dump_plan,
            json,
        } => run_distance(&mut out, a, b, *annotated, metric, *dump_plan, *json)?,
        Command::Eval {
            dataset,
            format,
            metric,
            sequential,
            json,
        } => run_eval(&mut out, dataset, *format, metric, *sequential, *json)?,
    }
    out.flush()?;
    Ok(())
}

/// Six decimals, switching to scientific notation for values that would
/// otherwise print as zero.
fn format_distance(v: f64) -> String {
    if v != 0.0 && v.abs() < 5e-7 {
        format!("{v:.3e}")
    } else {
        format!("{v:.6}")
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn"))
        .format_timestamp(None)
        .init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            if err.downcast_ref::<MissingInput>().is_some() {
                ExitCode::from(2)
            } else {
                ExitCode::FAILURE
            }
        }
    }
}
