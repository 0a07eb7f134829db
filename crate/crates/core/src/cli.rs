//! `lsrlong` command line.
//!
//! Every command prints a JSON summary on stdout and exits 0 on success;
//! diagnostics go to stderr and failures exit nonzero. `--config FILE` reads a
//! JSON object whose keys are flag names (`"candidate-pool": 500`); flags given
//! on the command line take precedence.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{ArgMatches, Args, CommandFactory, FromArgMatches, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use crate::aggregate::AggregationStrategy;
use crate::classic::{read_token_lines, score_corpus, ClassicModel, ClassicParams, CorpusStats};
use crate::error::{Error, Result};
use crate::eval::{paired_values, Metric};
use crate::index::{Index, Scorer, DEFAULT_CANDIDATE_POOL};
use crate::ingest::{
    self, rank_order, read_encoded_queries, read_encoded_segments, read_qrels, read_run, read_triplets,
    write_encoded_queries, write_encoded_segments, write_qrels, write_run_file, write_triplets, RunList,
};
use crate::repr::{MatchMode, QueryRep, SdmParams, SpanMode};
use crate::segmenter::{segment_text, SegmenterConfig, Tokenizer, WhitespaceTokenizer};
use crate::stats::paired_ttest;
use crate::sweep::{sweep, SweepConfig};
use crate::synthetic::{self, AdversarialSpec, CorpusSpec, SyntheticSet};
use crate::tune::{tune_lambdas, GridSpec, TuneReport, DEFAULT_GRID_STEP};

#[derive(Debug, Parser)]
#[command(
    name = "lsrlong",
    version,
    about = "Long-document learned sparse retrieval with segment aggregation and dependence scoring"
)]
pub struct Cli {
    /// JSON file of flag values; command-line flags override it
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Seed for randomized components
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads for per-query parallelism (0 uses all cores)
    #[arg(long, global = true, default_value_t = 0)]
    pub threads: usize,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Split raw documents into sentence-aligned segments
    Segment(SegmentArgs),
    /// Build or query a positional index
    #[command(subcommand)]
    Index(IndexCommand),
    /// Fit the SDM weights on training triplets
    Tune(TuneArgs),
    /// Evaluate a run against qrels, optionally comparing two runs
    Eval(EvalArgs),
    /// Metrics as a function of the number of leading segments per document
    Sweep(SweepArgs),
    /// Generate synthetic fixtures
    #[command(subcommand)]
    Synth(SynthCommand),
    /// Rank a token corpus with BM25 or the classic smoothed SDM
    Baseline(BaselineArgs),
}

#[derive(Debug, Subcommand)]
pub enum IndexCommand {
    Build(BuildArgs),
    Search(SearchArgs),
}

#[derive(Debug, Subcommand)]
pub enum SynthCommand {
    /// Random segments and queries
    Corpus(SynthCorpusArgs),
    /// Adjacent/scattered document pairs with qrels and triplets
    Proximity(SynthProximityArgs),
    /// Phrase signal in segment 0, cross-query noise in later segments
    Adversarial(SynthAdversarialArgs),
}

#[derive(Debug, Args)]
pub struct SegmentArgs {
    /// JSONL with `doc_id` and `text`
    #[arg(long)]
    pub input: PathBuf,
    /// JSONL with `doc_id`, `seg_index` and `text`
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = SegmenterConfig::DEFAULT_MAX_TOKENS)]
    pub max_tokens: usize,
}

#[derive(Debug, Args)]
pub struct BuildArgs {
    /// Encoded segments (JSONL)
    #[arg(long)]
    pub segments: PathBuf,
    /// Output index directory
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct SdmShapeArgs {
    #[arg(long, default_value_t = 2)]
    pub ngram: usize,
    #[arg(long, default_value_t = 8)]
    pub window: usize,
    /// Query spans of the window potential: consecutive, full or both
    #[arg(long, default_value = "consecutive")]
    pub spans: SpanMode,
}

#[derive(Debug, Clone, Args)]
pub struct LambdaArgs {
    #[arg(long, default_value_t = SdmParams::DEFAULT_LAMBDAS[0])]
    pub lambda_t: f64,
    #[arg(long, default_value_t = SdmParams::DEFAULT_LAMBDAS[1])]
    pub lambda_o: f64,
    #[arg(long, default_value_t = SdmParams::DEFAULT_LAMBDAS[2])]
    pub lambda_u: f64,
    /// Take the weights from a `tune` report instead
    #[arg(long, value_name = "REPORT")]
    pub tuned: Option<PathBuf>,
}

impl LambdaArgs {
    fn params(&self, shape: &SdmShapeArgs, mode: MatchMode) -> Result<SdmParams> {
        let [t, o, u] = match &self.tuned {
            Some(path) => read_tuned(path)?,
            None => [self.lambda_t, self.lambda_o, self.lambda_u],
        };
        let p = SdmParams {
            ngram_order: shape.ngram,
            window_size: shape.window,
            spans: shape.spans,
            ..SdmParams::new(mode)
        }
        .with_lambdas(t, o, u);
        p.validate()?;
        Ok(p)
    }
}

fn read_tuned(path: &Path) -> Result<[f64; 3]> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let report: TuneReport = serde_json::from_str(&text)
        .map_err(|e| Error::parse(&path.display().to_string(), e.line(), e.to_string()))?;
    Ok(report.best.lambdas)
}

#[derive(Debug, Args)]
pub struct SearchArgs {
    #[arg(long)]
    pub index: PathBuf,
    /// Encoded queries (JSONL)
    #[arg(long)]
    pub queries: PathBuf,
    #[arg(long, default_value_t = 1000)]
    pub k: usize,
    /// Stage-one candidates rescored per query
    #[arg(long, default_value_t = DEFAULT_CANDIDATE_POOL)]
    pub candidate_pool: usize,
    /// Segment aggregation scorer
    #[arg(long, conflicts_with = "sdm", required_unless_present = "sdm")]
    pub agg: Option<AggregationStrategy>,
    /// Dependence scorer match mode
    #[arg(long)]
    pub sdm: Option<MatchMode>,
    #[command(flatten)]
    pub shape: SdmShapeArgs,
    #[command(flatten)]
    pub lambdas: LambdaArgs,
    /// Output TREC run file
    #[arg(long)]
    pub run: PathBuf,
    #[arg(long, default_value = "lsrlong")]
    pub tag: String,
}

#[derive(Debug, Args)]
pub struct TuneArgs {
    /// Tab-separated query_id, positive doc_id, negative doc_id
    #[arg(long)]
    pub triplets: PathBuf,
    #[arg(long)]
    pub queries: PathBuf,
    #[arg(long)]
    pub index: PathBuf,
    #[arg(long, default_value = "exact")]
    pub sdm: MatchMode,
    #[command(flatten)]
    pub shape: SdmShapeArgs,
    #[arg(long, default_value_t = DEFAULT_GRID_STEP)]
    pub grid_step: f64,
    /// JSON report path
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum OutputFormat {
    Json,
    Text,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub run: PathBuf,
    #[arg(long)]
    pub qrels: PathBuf,
    #[arg(long, value_delimiter = ',', default_value = "mrr@10,ndcg@10,recall@1000")]
    pub metrics: Vec<Metric>,
    /// Second run for a paired t-test per metric
    #[arg(long, requires = "bonferroni")]
    pub compare: Option<PathBuf>,
    /// Number of comparisons for the Bonferroni correction
    #[arg(long, requires = "compare")]
    pub bonferroni: Option<usize>,
    #[arg(long, value_enum, default_value = "json")]
    pub format: OutputFormat,
    /// Also write the full report with per-query values
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long)]
    pub index: PathBuf,
    #[arg(long)]
    pub queries: PathBuf,
    #[arg(long)]
    pub qrels: PathBuf,
    #[arg(long)]
    pub max_segs: usize,
    #[arg(long, value_delimiter = ',', default_value = "rep-max,score-max,sum,mean")]
    pub scorers: Vec<String>,
    #[arg(long, value_delimiter = ',', default_value = "mrr@10,ndcg@10,recall@1000")]
    pub metrics: Vec<Metric>,
    #[arg(long, default_value_t = 1000)]
    pub k: usize,
    #[arg(long, default_value_t = DEFAULT_CANDIDATE_POOL)]
    pub candidate_pool: usize,
    #[command(flatten)]
    pub shape: SdmShapeArgs,
    #[command(flatten)]
    pub lambdas: LambdaArgs,
    /// CSV report; a JSON mirror is written next to it
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SynthCorpusArgs {
    #[arg(long, default_value_t = 100)]
    pub num_docs: usize,
    #[arg(long, default_value_t = 3)]
    pub segs_per_doc: usize,
    #[arg(long, default_value_t = 1000)]
    pub vocab_size: u32,
    #[arg(long, default_value_t = 32)]
    pub entries_per_seg: usize,
    #[arg(long, default_value_t = 0)]
    pub expansion_entries: usize,
    #[arg(long)]
    pub allow_empty_docs: bool,
    #[arg(long, default_value_t = 0)]
    pub num_queries: usize,
    #[arg(long, default_value_t = 4)]
    pub query_len: usize,
    /// Output directory: segments.jsonl and, with queries, queries.jsonl
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SynthProximityArgs {
    #[arg(long, default_value_t = 200)]
    pub num_queries: usize,
    #[arg(long, default_value_t = 3)]
    pub query_len: usize,
    /// Output directory
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SynthAdversarialArgs {
    #[arg(long, default_value_t = 50)]
    pub num_queries: usize,
    #[arg(long, default_value_t = 4)]
    pub query_len: usize,
    #[arg(long, default_value_t = 4)]
    pub noise_segments: usize,
    #[arg(long, default_value_t = 2)]
    pub overlap: usize,
    #[arg(long, default_value_t = 10)]
    pub noise_gap: usize,
    /// Output directory
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BaselineModel {
    Bm25,
    Sdm,
}

#[derive(Debug, Args)]
pub struct BaselineArgs {
    /// JSONL with `doc_id` and `tokens` or `text`
    #[arg(long)]
    pub corpus: PathBuf,
    /// JSONL with `query_id` and `tokens` or `text`
    #[arg(long)]
    pub queries: PathBuf,
    #[arg(long, value_enum, default_value = "bm25")]
    pub model: BaselineModel,
    #[arg(long, default_value_t = 0.9)]
    pub k1: f64,
    #[arg(long, default_value_t = 0.4)]
    pub b: f64,
    #[arg(long, default_value_t = 2500.0)]
    pub mu: f64,
    #[arg(long, default_value_t = SdmParams::DEFAULT_LAMBDAS[0])]
    pub lambda_t: f64,
    #[arg(long, default_value_t = SdmParams::DEFAULT_LAMBDAS[1])]
    pub lambda_o: f64,
    #[arg(long, default_value_t = SdmParams::DEFAULT_LAMBDAS[2])]
    pub lambda_u: f64,
    #[arg(long, default_value_t = 2)]
    pub ngram: usize,
    #[arg(long, default_value_t = 8)]
    pub window: usize,
    #[arg(long, default_value_t = 1000)]
    pub k: usize,
    #[arg(long)]
    pub run: PathBuf,
    #[arg(long, default_value = "baseline")]
    pub tag: String,
}

const SUBCOMMANDS: [&str; 7] = ["segment", "index", "tune", "eval", "sweep", "synth", "baseline"];
const NESTED: [&str; 2] = ["index", "synth"];

fn config_flags(path: &Path) -> Result<Vec<String>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let value: Value = serde_json::from_str(&text)
        .map_err(|e| Error::parse(&path.display().to_string(), e.line(), e.to_string()))?;
    let Value::Object(map) = value else {
        return Err(Error::InvalidArgument(format!(
            "{}: config must be a JSON object",
            path.display()
        )));
    };
    let mut out = Vec::new();
    for (key, v) in map {
        let flag = format!("--{}", key.replace('_', "-"));
        match v {
            Value::Bool(true) => out.push(flag),
            Value::Bool(false) | Value::Null => {}
            Value::String(s) => out.extend([flag, s]),
            Value::Number(n) => out.extend([flag, n.to_string()]),
            Value::Array(items) => {
                let joined: Vec<String> = items
                    .iter()
                    .map(|i| match i {
                        Value::String(s) => s.clone(),
                        other => other.to_string(),
                    })
                    .collect();
                out.extend([flag, joined.join(",")]);
            }
            Value::Object(_) => {
                return Err(Error::InvalidArgument(format!(
                    "config key `{key}` must not be an object"
                )))
            }
        }
    }
    Ok(out)
}

/// Inserts config flags right after the subcommand path so that explicit
/// flags, which come later, override them.
fn merge_config(args: Vec<String>) -> Result<Vec<String>> {
    let Some(i) = args.iter().position(|a| a == "--config") else {
        if let Some(a) = args.iter().find(|a| a.starts_with("--config=")) {
            let path = PathBuf::from(&a["--config=".len()..]);
            return splice(args.clone(), &path);
        }
        return Ok(args);
    };
    match args.get(i + 1) {
        Some(p) => {
            let path = PathBuf::from(p);
            splice(args, &path)
        }
        None => Ok(args),
    }
}

fn splice(mut args: Vec<String>, config: &Path) -> Result<Vec<String>> {
    let flags = config_flags(config)?;
    let Some(top) = args
        .iter()
        .skip(1)
        .position(|a| SUBCOMMANDS.contains(&a.as_str()))
    else {
        return Ok(args);
    };
    let mut at = top + 2;
    if NESTED.contains(&args[top + 1].as_str()) && at < args.len() && !args[at].starts_with('-') {
        at += 1;
    }
    args.splice(at..at, flags);
    Ok(args)
}

fn with_override(cmd: clap::Command) -> clap::Command {
    let names: Vec<String> = cmd.get_subcommands().map(|c| c.get_name().to_string()).collect();
    let mut cmd = cmd.args_override_self(true);
    for n in names {
        cmd = cmd.mut_subcommand(n, with_override);
    }
    cmd
}

/// Parses arguments (including `--config`) into a [`Cli`].
pub fn parse_args(args: Vec<String>) -> std::result::Result<Cli, ParseFailure> {
    let args = merge_config(args).map_err(ParseFailure::Config)?;
    let matches: ArgMatches = with_override(Cli::command())
        .try_get_matches_from(args)
        .map_err(ParseFailure::Clap)?;
    Cli::from_arg_matches(&matches).map_err(ParseFailure::Clap)
}

#[derive(Debug)]
pub enum ParseFailure {
    Clap(clap::Error),
    Config(Error),
}

pub fn main() -> ExitCode {
    let cli = match parse_args(std::env::args().collect()) {
        Ok(cli) => cli,
        Err(ParseFailure::Clap(e)) => e.exit(),
        Err(ParseFailure::Config(e)) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    match run(cli) {
        Ok(summary) => {
            let mut out = std::io::stdout().lock();
            let _ = serde_json::to_writer_pretty(&mut out, &summary);
            let _ = writeln!(out);
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

/// Executes a parsed command and returns its JSON summary.
pub fn run(cli: Cli) -> Result<Value> {
    if cli.threads > 0 {
        // a second call in the same process keeps the first pool
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(cli.threads)
            .build_global();
    }
    match cli.command {
        Command::Segment(a) => cmd_segment(&a),
        Command::Index(IndexCommand::Build(a)) => cmd_build(&a),
        Command::Index(IndexCommand::Search(a)) => cmd_search(&a),
        Command::Tune(a) => cmd_tune(&a),
        Command::Eval(a) => cmd_eval(&a),
        Command::Sweep(a) => cmd_sweep(&a),
        Command::Synth(s) => cmd_synth(&s, cli.seed),
        Command::Baseline(a) => cmd_baseline(&a),
    }
}

fn to_value(v: impl Serialize) -> Value {
    serde_json::to_value(v).expect("summaries are plain data")
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let mut w = ingest::create(path)?;
    serde_json::to_writer_pretty(&mut w, value)
        .map_err(std::io::Error::from)
        .and_then(|_| writeln!(w))
        .and_then(|_| w.flush())
        .map_err(|e| Error::io(path, e))
}

fn load_queries(path: &Path) -> Result<Vec<QueryRep>> {
    read_encoded_queries(path)?.collect()
}

#[derive(serde::Deserialize)]
struct TextDoc {
    doc_id: String,
    text: String,
}

fn cmd_segment(a: &SegmentArgs) -> Result<Value> {
    use std::io::BufRead;
    let cfg = SegmenterConfig::new(a.max_tokens)?;
    let source = a.input.display().to_string();
    let reader = ingest::open(&a.input)?;
    let mut out = ingest::create(&a.out)?;
    let (mut docs, mut segments) = (0usize, 0usize);
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::io(&a.input, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let doc: TextDoc =
            serde_json::from_str(&line).map_err(|e| Error::parse(&source, i + 1, e.to_string()))?;
        docs += 1;
        for (seg_index, text) in segment_text(&doc.text, &cfg).into_iter().enumerate() {
            segments += 1;
            let row = json!({ "doc_id": doc.doc_id, "seg_index": seg_index, "text": text });
            writeln!(out, "{row}").map_err(|e| Error::io(&a.out, e))?;
        }
    }
    out.flush().map_err(|e| Error::io(&a.out, e))?;
    Ok(json!({ "command": "segment", "documents": docs, "segments": segments, "out": a.out }))
}

fn cmd_build(a: &BuildArgs) -> Result<Value> {
    let index = Index::build(read_encoded_segments(&a.segments)?)?;
    let manifest = index.save(&a.out)?;
    Ok(json!({ "command": "index build", "out": a.out, "manifest": manifest }))
}

fn search_scorer(a: &SearchArgs) -> Result<Scorer> {
    match (a.agg, a.sdm) {
        (Some(agg), None) => Ok(Scorer::Aggregate(agg)),
        (None, Some(mode)) => Ok(Scorer::Sdm(a.lambdas.params(&a.shape, mode)?)),
        _ => Err(Error::InvalidArgument(
            "give exactly one of --agg or --sdm".into(),
        )),
    }
}

fn cmd_search(a: &SearchArgs) -> Result<Value> {
    let scorer = search_scorer(a)?;
    let index = Index::load(&a.index)?;
    if let Scorer::Sdm(p) = &scorer {
        if p.mode == MatchMode::Exact && !index.has_tokens() {
            return Err(Error::InvalidArgument(format!(
                "--sdm exact needs token sequences, but the index at {} has none; \
                 use --sdm soft or rebuild from segments that carry `tokens`",
                a.index.display()
            )));
        }
    }
    let queries = load_queries(&a.queries)?;
    let run = index.search(&queries, a.k, &scorer, a.candidate_pool)?;
    write_run_file(&a.run, &run, &a.tag)?;
    Ok(json!({
        "command": "index search",
        "scorer": scorer.name(),
        "sdm": if let Scorer::Sdm(p) = scorer { to_value(p) } else { Value::Null },
        "queries": queries.len(),
        "entries": run.len(),
        "run": a.run,
    }))
}

fn cmd_tune(a: &TuneArgs) -> Result<Value> {
    let params = SdmParams {
        ngram_order: a.shape.ngram,
        window_size: a.shape.window,
        spans: a.shape.spans,
        ..SdmParams::new(a.sdm)
    };
    let index = Index::load(&a.index)?;
    let queries = load_queries(&a.queries)?;
    let triplets: Vec<_> = read_triplets(&a.triplets)?.collect::<Result<_>>()?;
    let (_, report) = tune_lambdas(&triplets, &queries, &index, &params, &GridSpec::Step(a.grid_step))?;
    write_json(&a.out, &report)?;
    Ok(json!({
        "command": "tune",
        "best": report.best,
        "default": report.default,
        "grid_points": report.grid.len(),
        "triplets": report.num_triplets,
        "out": a.out,
    }))
}

#[derive(Serialize)]
struct Comparison {
    metric: String,
    mean_a: f64,
    mean_b: f64,
    #[serde(flatten)]
    test: crate::stats::TTest,
}

fn cmd_eval(a: &EvalArgs) -> Result<Value> {
    let run = read_run(&a.run)?;
    let qrels = read_qrels(&a.qrels)?;
    let reports: Vec<_> = a.metrics.iter().map(|m| m.evaluate(&run, &qrels)).collect();
    let mut comparisons = Vec::new();
    if let (Some(other), Some(m)) = (&a.compare, a.bonferroni) {
        let run_b = read_run(other)?;
        for (metric, ra) in a.metrics.iter().zip(&reports) {
            let rb = metric.evaluate(&run_b, &qrels);
            let (va, vb) = paired_values(ra, &rb);
            comparisons.push(Comparison {
                metric: metric.to_string(),
                mean_a: ra.mean,
                mean_b: rb.mean,
                test: paired_ttest(&va, &vb, m)?,
            });
        }
    }
    if let Some(out) = &a.out {
        write_json(out, &json!({ "metrics": reports, "comparisons": comparisons }))?;
    }
    let summary: Vec<Value> = reports
        .iter()
        .map(|r| json!({ "metric": r.metric, "mean": r.mean, "queries": r.num_queries, "excluded": r.excluded }))
        .collect();
    if let OutputFormat::Text = a.format {
        print_table(&summary, &comparisons);
    }
    Ok(json!({ "command": "eval", "run": a.run, "metrics": summary, "comparisons": comparisons }))
}

/// Aligned columns on stderr so stdout stays machine-readable.
fn print_table(summary: &[Value], comparisons: &[Comparison]) {
    let mut err = std::io::stderr().lock();
    let _ = writeln!(
        err,
        "{:<14} {:>10} {:>8} {:>9}",
        "metric", "mean", "queries", "excluded"
    );
    for s in summary {
        let _ = writeln!(
            err,
            "{:<14} {:>10.4} {:>8} {:>9}",
            s["metric"].as_str().unwrap_or_default(),
            s["mean"].as_f64().unwrap_or_default(),
            s["queries"],
            s["excluded"]
        );
    }
    if !comparisons.is_empty() {
        let _ = writeln!(
            err,
            "\n{:<14} {:>10} {:>10} {:>10} {:>10} {:>5}",
            "metric", "mean_a", "mean_b", "t", "p_bonf", "sig"
        );
        for c in comparisons {
            let _ = writeln!(
                err,
                "{:<14} {:>10.4} {:>10.4} {:>10.4} {:>10.4} {:>5}",
                c.metric, c.mean_a, c.mean_b, c.test.t, c.test.p_bonferroni, c.test.significant
            );
        }
    }
}

fn cmd_sweep(a: &SweepArgs) -> Result<Value> {
    if a.max_segs == 0 {
        return Err(Error::InvalidArgument("--max-segs must be >= 1".into()));
    }
    let sdm = a.lambdas.params(&a.shape, MatchMode::Exact)?;
    let scorers = a
        .scorers
        .iter()
        .map(|n| Scorer::parse(n, sdm))
        .collect::<Result<Vec<_>>>()?;
    let index = Index::load(&a.index)?;
    let queries = load_queries(&a.queries)?;
    let qrels = read_qrels(&a.qrels)?;
    let cfg = SweepConfig {
        max_segments: a.max_segs,
        scorers: &scorers,
        metrics: &a.metrics,
        k: a.k,
        candidate_pool: a.candidate_pool,
    };
    let report = sweep(&index, &queries, &qrels, &cfg)?;
    let mut csv = ingest::create(&a.out)?;
    report
        .write_csv(&mut csv)
        .and_then(|_| csv.flush())
        .map_err(|e| Error::io(&a.out, e))?;
    let mirror = a.out.with_extension("json");
    write_json(&mirror, &report)?;
    Ok(json!({ "command": "sweep", "rows": report.rows, "csv": a.out, "json": mirror }))
}

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn write_with<F>(path: &Path, f: F) -> Result<()>
where
    F: FnOnce(&mut std::io::BufWriter<std::fs::File>) -> std::io::Result<()>,
{
    let mut w = ingest::create(path)?;
    f(&mut w).and_then(|_| w.flush()).map_err(|e| Error::io(path, e))
}

fn write_set(dir: &Path, set: &SyntheticSet) -> Result<Value> {
    create_dir(dir)?;
    let paths = [
        dir.join("segments.jsonl"),
        dir.join("queries.jsonl"),
        dir.join("qrels.txt"),
        dir.join("triplets.tsv"),
    ];
    write_with(&paths[0], |w| write_encoded_segments(w, &set.segments))?;
    write_with(&paths[1], |w| write_encoded_queries(w, &set.queries))?;
    write_with(&paths[2], |w| write_qrels(w, &set.qrels))?;
    write_with(&paths[3], |w| write_triplets(w, &set.triplets))?;
    Ok(json!({
        "segments": set.segments.len(),
        "queries": set.queries.len(),
        "triplets": set.triplets.len(),
        "files": paths,
    }))
}

fn cmd_synth(cmd: &SynthCommand, seed: u64) -> Result<Value> {
    match cmd {
        SynthCommand::Corpus(a) => {
            let spec = CorpusSpec {
                num_docs: a.num_docs,
                segs_per_doc: a.segs_per_doc,
                vocab_size: a.vocab_size,
                entries_per_seg: a.entries_per_seg,
                expansion_entries: a.expansion_entries,
                seed,
                allow_empty_docs: a.allow_empty_docs,
            };
            let segments = synthetic::gen_corpus(&spec)?;
            create_dir(&a.out)?;
            let seg_path = a.out.join("segments.jsonl");
            write_with(&seg_path, |w| write_encoded_segments(w, &segments))?;
            let mut files = vec![seg_path];
            if a.num_queries > 0 {
                let len = a.query_len.max(1);
                let queries =
                    synthetic::gen_queries(a.num_queries, len..len + 1, a.vocab_size, seed ^ 0x5eed)?;
                let q_path = a.out.join("queries.jsonl");
                write_with(&q_path, |w| write_encoded_queries(w, &queries))?;
                files.push(q_path);
            }
            Ok(json!({ "command": "synth corpus", "spec": spec, "segments": segments.len(), "files": files }))
        }
        SynthCommand::Proximity(a) => {
            let set = synthetic::gen_proximity_set(a.num_queries, a.query_len, seed)?;
            let mut v = write_set(&a.out, &set)?;
            v["command"] = json!("synth proximity");
            Ok(v)
        }
        SynthCommand::Adversarial(a) => {
            let spec = AdversarialSpec {
                num_queries: a.num_queries,
                query_len: a.query_len,
                noise_segments: a.noise_segments,
                overlap: a.overlap,
                noise_gap: a.noise_gap,
                seed,
            };
            let set = synthetic::gen_adversarial(&spec)?;
            let mut v = write_set(&a.out, &set)?;
            v["command"] = json!("synth adversarial");
            v["spec"] = to_value(&spec);
            Ok(v)
        }
    }
}

fn cmd_baseline(a: &BaselineArgs) -> Result<Value> {
    if a.k == 0 {
        return Err(Error::InvalidArgument("k must be positive".into()));
    }
    let tokenizer = WhitespaceTokenizer;
    let corpus = read_token_lines(&a.corpus, &tokenizer as &dyn Tokenizer)?;
    let queries = read_token_lines(&a.queries, &tokenizer)?;
    let stats = CorpusStats::build(corpus)?;
    let model = match a.model {
        BaselineModel::Bm25 => ClassicModel::Bm25 { k1: a.k1, b: a.b },
        BaselineModel::Sdm => ClassicModel::Sdm(ClassicParams {
            lambda_t: a.lambda_t,
            lambda_o: a.lambda_o,
            lambda_u: a.lambda_u,
            ngram_order: a.ngram,
            window: a.window,
            mu: a.mu,
            ..ClassicParams::default()
        }),
    };
    let mut run = RunList::new();
    for (qid, tokens) in &queries {
        let mut scored = score_corpus(tokens, &stats, &model)?;
        scored.sort_by(rank_order);
        scored.truncate(a.k);
        run.push_query(qid, scored);
    }
    write_run_file(&a.run, &run, &a.tag)?;
    Ok(json!({
        "command": "baseline",
        "model": format!("{:?}", a.model).to_lowercase(),
        "documents": stats.doc_count(),
        "queries": queries.len(),
        "entries": run.len(),
        "run": a.run,
    }))
}
