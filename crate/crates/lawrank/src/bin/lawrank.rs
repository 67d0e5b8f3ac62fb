//! Batch command-line surface for the retrieval and training-data
//! pipelines. All stochastic commands take an explicit --seed; identical
//! inputs, flags, and seed produce byte-identical outputs.

use std::collections::{BTreeMap, BTreeSet};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;

use lawrank::corpus::{self, DocumentStore, LangFilterConfig, SourceKind};
use lawrank::chunking::{chunk_article, ChunkConfig};
use lawrank::ensemble::{self, read_model_outputs};
use lawrank::error::{Error, Result};
use lawrank::fusion::{build_case_index, retrieve, RetrieveConfig};
use lawrank::lexical::{render_tokens, TokenizerConfig, TokenizerMode};
use lawrank::metrics::{evaluate_accuracy, evaluate_retrieval};
use lawrank::paralaw::{generate_examples, split_dataset, write_examples, RandomPool};
use lawrank::scorer::{SemanticScorer, SubprocessScorer, TfidfScorer};
use lawrank::trainpairs::{
    augment_articles, generate_retrieval_pairs, generate_silver_supporting, read_pairs,
    self_label_refine, write_pairs, Question, SelfLabelConfig,
};
use lawrank::Score;

#[derive(Parser)]
#[command(name = "lawrank", version, about = "Legal-document retrieval and training-data pipeline", long_about = None)]
struct Cli {
    /// JSON config file with default flag values; explicit flags win.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Worker parallelism; results are identical for any value.
    #[arg(long, global = true)]
    jobs: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

/// Optional defaults loaded from --config. Keys match the long flag names.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    alpha: Option<Score>,
    prune_k: Option<usize>,
    top_n: Option<usize>,
    window: Option<usize>,
    stride: Option<usize>,
    neg_cap: Option<usize>,
    n_augment: Option<usize>,
    threshold: Option<Score>,
    iterations: Option<u32>,
    seed: Option<u64>,
    scorer_cmd: Option<String>,
    scorer_timeout_secs: Option<u64>,
    min_ratio: Option<f64>,
    grid_step: Option<Score>,
    passes: Option<u32>,
    split: Option<f64>,
    jobs: Option<usize>,
}

impl FileConfig {
    fn load(path: Option<&Path>) -> Result<FileConfig> {
        match path {
            None => Ok(FileConfig::default()),
            Some(path) => {
                let file = std::fs::File::open(path)?;
                Ok(serde_json::from_reader(BufReader::new(file))?)
            }
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Segment a raw corpus JSONL file into the canonical document store.
    ///
    /// Input records: {"id","kind","text"} or {"id","kind","paragraphs":[...]}.
    Ingest(IngestArgs),
    /// Build and persist the whole-case inverted index.
    Index(IndexArgs),
    /// Rank candidate cases for each query case (prune -> fuse -> aggregate).
    Retrieve(RetrieveArgs),
    /// Dump sliding-window chunks as JSONL {"article_id","start","text"}.
    Chunk(ChunkArgs),
    /// Generate labeled training pairs (retrieval negatives or silver pairs).
    GenPairs(GenPairsArgs),
    /// Re-label positives the predictor scores below the threshold.
    SelfLabel(SelfLabelArgs),
    /// Generate cross-lingual pretraining examples from aligned bitext.
    Paralaw(ParalawArgs),
    /// Fit ensemble weights or combine model outputs.
    Ensemble(EnsembleArgs),
    /// Evaluate predictions against gold labels.
    Eval(EvalArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum KindArg {
    CaseLaw,
    StatuteArticle,
    BarQuestion,
}

impl From<KindArg> for SourceKind {
    fn from(kind: KindArg) -> SourceKind {
        match kind {
            KindArg::CaseLaw => SourceKind::CaseLaw,
            KindArg::StatuteArticle => SourceKind::StatuteArticle,
            KindArg::BarQuestion => SourceKind::BarQuestion,
        }
    }
}

#[derive(Args)]
struct IngestArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    output: PathBuf,
    /// Kind for records that do not carry one.
    #[arg(long, value_enum, default_value = "case-law")]
    kind: KindArg,
    /// Minimum foreign-stopword ratio before a paragraph is dropped.
    #[arg(long)]
    min_ratio: Option<f64>,
}

#[derive(Args)]
struct IndexArgs {
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long)]
    output: PathBuf,
    #[arg(long)]
    char_tokens: bool,
}

#[derive(Args)]
struct RetrieveArgs {
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long)]
    queries: PathBuf,
    #[arg(long)]
    output: PathBuf,
    /// Weight of the semantic channel in the union score.
    #[arg(long)]
    alpha: Option<Score>,
    /// Candidate-space cutoff before paragraph-level scoring.
    #[arg(long)]
    prune_k: Option<usize>,
    /// Size of the returned answer set per query.
    #[arg(long)]
    top_n: Option<usize>,
    /// External scorer command (line-delimited JSON protocol); the
    /// tf-idf cosine baseline is used when absent.
    #[arg(long)]
    scorer_cmd: Option<String>,
    #[arg(long)]
    scorer_timeout_secs: Option<u64>,
    #[arg(long)]
    char_tokens: bool,
}

#[derive(Args)]
struct ChunkArgs {
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long)]
    output: PathBuf,
    #[arg(long)]
    window: Option<usize>,
    #[arg(long)]
    stride: Option<usize>,
    #[arg(long)]
    char_tokens: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum PairMode {
    Retrieval,
    Silver,
}

#[derive(Args)]
struct GenPairsArgs {
    #[arg(long, value_enum)]
    mode: PairMode,
    #[arg(long)]
    output: PathBuf,
    /// Retrieval mode: question documents (store or raw JSONL).
    #[arg(long)]
    questions: Option<PathBuf>,
    /// Retrieval mode: gold labels JSONL {"query_id","relevant_ids":[...]}.
    #[arg(long)]
    gold: Option<PathBuf>,
    /// Retrieval mode: article corpus.
    #[arg(long)]
    articles: Option<PathBuf>,
    #[arg(long)]
    neg_cap: Option<usize>,
    /// Append this many tf-idf-ranked articles to each question's gold set.
    #[arg(long)]
    n_augment: Option<usize>,
    /// Silver mode: case corpus.
    #[arg(long)]
    corpus: Option<PathBuf>,
    /// Silver mode: negatives per positive.
    #[arg(long)]
    ratio_neg: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    char_tokens: bool,
}

#[derive(Args)]
struct SelfLabelArgs {
    #[arg(long)]
    pairs: PathBuf,
    #[arg(long)]
    output: PathBuf,
    #[arg(long)]
    threshold: Option<Score>,
    #[arg(long)]
    iterations: Option<u32>,
    /// External predictor command; the tf-idf baseline over --corpus is
    /// used when absent.
    #[arg(long)]
    scorer_cmd: Option<String>,
    #[arg(long)]
    scorer_timeout_secs: Option<u64>,
    #[arg(long)]
    corpus: Option<PathBuf>,
}

#[derive(Args)]
struct ParalawArgs {
    /// Bitext JSONL {"doc_id","lang_a","lang_b","pairs":[[a,b],...]}.
    #[arg(long)]
    bitext: PathBuf,
    /// Random-sentence pool JSONL {"lang","text"}.
    #[arg(long)]
    pool: PathBuf,
    #[arg(long)]
    output: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    passes: Option<u32>,
    /// Train ratio; when set, writes <output>.train and <output>.valid.
    #[arg(long)]
    split: Option<f64>,
}

#[derive(Clone, Copy, ValueEnum)]
enum EnsembleMode {
    Fit,
    Apply,
}

#[derive(Args)]
struct EnsembleArgs {
    #[arg(long, value_enum)]
    mode: EnsembleMode,
    /// Model outputs JSONL {"model_id","query_id","candidate_id","score"}.
    #[arg(long)]
    model_outputs: PathBuf,
    #[arg(long)]
    output: PathBuf,
    /// Fit mode: gold labels JSONL.
    #[arg(long)]
    gold: Option<PathBuf>,
    #[arg(long)]
    grid_step: Option<Score>,
    /// Apply mode: weights JSON {model_id: weight}.
    #[arg(long)]
    weights: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum EvalMode {
    Retrieval,
    Accuracy,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long, value_enum, default_value = "retrieval")]
    mode: EvalMode,
    /// Retrieval: run JSONL {"query_id","candidate_id",...}; accuracy:
    /// JSONL {"id","value"}.
    #[arg(long)]
    predictions: PathBuf,
    /// Retrieval: gold labels JSONL; accuracy: JSONL {"id","value"}.
    #[arg(long)]
    gold: PathBuf,
    /// Report JSON output path.
    #[arg(long)]
    output: PathBuf,
    /// Also print the aligned text table.
    #[arg(long)]
    table: bool,
}

fn main() {
    let cli = Cli::parse();
    if let Err(err) = run(cli) {
        let line = serde_json::json!({ "error": err.to_string() });
        eprintln!("{line}");
        std::process::exit(1);
    }
}

fn run(cli: Cli) -> Result<()> {
    let file_config = FileConfig::load(cli.config.as_deref())?;
    let jobs = cli.jobs.or(file_config.jobs).unwrap_or(1);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::InvalidConfig(format!("cannot build thread pool: {e}")))?;
    pool.install(|| match cli.command {
        Command::Ingest(args) => cmd_ingest(args, &file_config),
        Command::Index(args) => cmd_index(args),
        Command::Retrieve(args) => cmd_retrieve(args, &file_config),
        Command::Chunk(args) => cmd_chunk(args, &file_config),
        Command::GenPairs(args) => cmd_gen_pairs(args, &file_config),
        Command::SelfLabel(args) => cmd_self_label(args, &file_config),
        Command::Paralaw(args) => cmd_paralaw(args, &file_config),
        Command::Ensemble(args) => cmd_ensemble(args, &file_config),
        Command::Eval(args) => cmd_eval(args),
    })
}

fn tokenizer(char_tokens: bool) -> TokenizerConfig {
    TokenizerConfig {
        mode: if char_tokens {
            TokenizerMode::Character
        } else {
            TokenizerMode::UnicodeWord
        },
        lowercase: true,
    }
}

/// Load a processed store; fall back to ingesting the file as raw records.
fn load_store(path: &Path, default_kind: SourceKind) -> Result<DocumentStore> {
    match DocumentStore::load_jsonl(path) {
        Ok(store) => Ok(store),
        Err(Error::MalformedRecord { .. }) => {
            corpus::ingest(path, default_kind, &LangFilterConfig::default())
        }
        Err(other) => Err(other),
    }
}

fn require_seed(seed: Option<u64>) -> Result<u64> {
    seed.ok_or_else(|| Error::InvalidConfig("--seed is required for stochastic commands".into()))
}

fn output_writer(path: &Path) -> Result<std::io::BufWriter<std::fs::File>> {
    Ok(std::io::BufWriter::new(std::fs::File::create(path)?))
}

fn cmd_ingest(args: IngestArgs, config: &FileConfig) -> Result<()> {
    let min_ratio = args
        .min_ratio
        .or(config.min_ratio)
        .unwrap_or(LangFilterConfig::default().min_ratio);
    let store = corpus::ingest(&args.input, args.kind.into(), &LangFilterConfig { min_ratio })?;
    store.save_jsonl(&args.output)?;
    eprintln!("ingested {} documents", store.len());
    Ok(())
}

fn cmd_index(args: IndexArgs) -> Result<()> {
    let store = load_store(&args.corpus, SourceKind::CaseLaw)?;
    let index = build_case_index(&store, &tokenizer(args.char_tokens))?;
    index.save(&args.output)?;
    eprintln!("indexed {} cases", index.len());
    Ok(())
}

fn make_scorer(
    scorer_cmd: Option<&str>,
    timeout_secs: u64,
    baseline_store: &DocumentStore,
    tok: TokenizerConfig,
) -> Result<Box<dyn SemanticScorer>> {
    match scorer_cmd {
        Some(cmd) => Ok(Box::new(SubprocessScorer::spawn(
            cmd,
            Duration::from_secs(timeout_secs),
        )?)),
        None => Ok(Box::new(TfidfScorer::from_store(baseline_store, tok)?)),
    }
}

fn cmd_retrieve(args: RetrieveArgs, config: &FileConfig) -> Result<()> {
    let tok = tokenizer(args.char_tokens);
    let corpus = load_store(&args.corpus, SourceKind::CaseLaw)?;
    let queries = load_store(&args.queries, SourceKind::CaseLaw)?;
    let retrieve_config = RetrieveConfig {
        prune_k: args.prune_k.or(config.prune_k).unwrap_or(100),
        alpha: args.alpha.or(config.alpha).unwrap_or(0.7),
        top_n: args.top_n.or(config.top_n).unwrap_or(5),
        tokenizer: tok,
        ..RetrieveConfig::default()
    };
    if !(0.0..=1.0).contains(&retrieve_config.alpha) {
        return Err(Error::InvalidConfig("alpha must be in [0,1]".into()));
    }
    let scorer_cmd = args.scorer_cmd.clone().or_else(|| config.scorer_cmd.clone());
    let timeout = args
        .scorer_timeout_secs
        .or(config.scorer_timeout_secs)
        .unwrap_or(60);
    let scorer = make_scorer(scorer_cmd.as_deref(), timeout, &corpus, tok)?;
    let index = build_case_index(&corpus, &tok)?;
    let mut out = output_writer(&args.output)?;
    for query in queries.iter() {
        let ranked = retrieve(query, &corpus, &index, scorer.as_ref(), &retrieve_config)?;
        for (rank, (candidate_id, score)) in ranked.iter().enumerate() {
            let record = serde_json::json!({
                "query_id": query.id,
                "candidate_id": candidate_id,
                "rank": rank + 1,
                "score": score,
            });
            writeln!(out, "{record}")?;
        }
    }
    Ok(())
}

fn cmd_chunk(args: ChunkArgs, config: &FileConfig) -> Result<()> {
    let window = args
        .window
        .or(config.window)
        .ok_or_else(|| Error::InvalidConfig("--window is required".into()))?;
    let stride = args
        .stride
        .or(config.stride)
        .ok_or_else(|| Error::InvalidConfig("--stride is required".into()))?;
    let chunk_config = ChunkConfig::new(window, stride)?;
    let tok = tokenizer(args.char_tokens);
    let store = load_store(&args.corpus, SourceKind::StatuteArticle)?;
    let mut out = output_writer(&args.output)?;
    for doc in store.iter() {
        let tokens = doc.tokens(&tok);
        for chunk in chunk_article(&doc.id, &tokens, &chunk_config)? {
            let record = serde_json::json!({
                "article_id": chunk.article_id,
                "start": chunk.start,
                "text": render_tokens(&chunk.tokens, tok.mode),
            });
            writeln!(out, "{record}")?;
        }
    }
    Ok(())
}

#[derive(Deserialize)]
struct GoldRecord {
    query_id: String,
    relevant_ids: Vec<String>,
}

fn read_gold(path: &Path) -> Result<BTreeMap<String, BTreeSet<String>>> {
    let file = std::fs::File::open(path)?;
    let mut gold = BTreeMap::new();
    for (lineno, line) in BufReader::new(file).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record: GoldRecord =
            serde_json::from_str(&line).map_err(|e| Error::MalformedRecord {
                line: lineno + 1,
                msg: e.to_string(),
            })?;
        gold.insert(record.query_id, record.relevant_ids.into_iter().collect());
    }
    Ok(gold)
}

fn cmd_gen_pairs(args: GenPairsArgs, config: &FileConfig) -> Result<()> {
    let tok = tokenizer(args.char_tokens);
    let pairs = match args.mode {
        PairMode::Retrieval => {
            let questions_path = args
                .questions
                .ok_or_else(|| Error::InvalidConfig("--questions is required".into()))?;
            let gold_path = args
                .gold
                .ok_or_else(|| Error::InvalidConfig("--gold is required".into()))?;
            let articles_path = args
                .articles
                .ok_or_else(|| Error::InvalidConfig("--articles is required".into()))?;
            let questions_store = load_store(&questions_path, SourceKind::BarQuestion)?;
            let articles = load_store(&articles_path, SourceKind::StatuteArticle)?;
            let gold = read_gold(&gold_path)?;
            let neg_cap = args.neg_cap.or(config.neg_cap).unwrap_or(150);
            let n_augment = args.n_augment.or(config.n_augment).unwrap_or(0);
            let mut questions = Vec::new();
            for doc in questions_store.iter() {
                let text = doc.kept_text();
                let gold_ids: Vec<String> = gold
                    .get(&doc.id)
                    .map(|set| set.iter().cloned().collect())
                    .unwrap_or_default();
                let gold_ids = if n_augment > 0 {
                    augment_articles(&text, &gold_ids, &articles, n_augment, &tok)?
                } else {
                    gold_ids
                };
                questions.push(Question {
                    id: doc.id.clone(),
                    text,
                    gold: gold_ids,
                });
            }
            generate_retrieval_pairs(&questions, &articles, neg_cap, &tok)?
        }
        PairMode::Silver => {
            let corpus_path = args
                .corpus
                .ok_or_else(|| Error::InvalidConfig("--corpus is required".into()))?;
            let corpus = load_store(&corpus_path, SourceKind::CaseLaw)?;
            let ratio_neg = args.ratio_neg.unwrap_or(1);
            let seed = require_seed(args.seed.or(config.seed))?;
            generate_silver_supporting(&corpus, ratio_neg, seed)
        }
    };
    write_pairs(&args.output, &pairs)?;
    eprintln!("wrote {} pairs", pairs.len());
    Ok(())
}

fn cmd_self_label(args: SelfLabelArgs, config: &FileConfig) -> Result<()> {
    let dataset = read_pairs(&args.pairs)?;
    let self_label = SelfLabelConfig {
        threshold: args.threshold.or(config.threshold).unwrap_or(0.5),
        iterations: args.iterations.or(config.iterations).unwrap_or(1),
        ..SelfLabelConfig::default()
    };
    let scorer_cmd = args.scorer_cmd.clone().or_else(|| config.scorer_cmd.clone());
    let timeout = args
        .scorer_timeout_secs
        .or(config.scorer_timeout_secs)
        .unwrap_or(60);
    let scorer: Box<dyn SemanticScorer> = match (scorer_cmd, &args.corpus) {
        (Some(cmd), _) => Box::new(SubprocessScorer::spawn(&cmd, Duration::from_secs(timeout))?),
        (None, Some(corpus_path)) => {
            let corpus = load_store(corpus_path, SourceKind::CaseLaw)?;
            Box::new(TfidfScorer::from_store(&corpus, TokenizerConfig::default())?)
        }
        (None, None) => {
            return Err(Error::InvalidConfig(
                "self-label needs --scorer-cmd or --corpus for the baseline predictor".into(),
            ))
        }
    };
    let refined = self_label_refine(dataset, scorer.as_ref(), &self_label)?;
    write_pairs(&args.output, &refined)?;
    Ok(())
}

#[derive(Deserialize)]
struct PoolRecord {
    lang: String,
    text: String,
}

fn cmd_paralaw(args: ParalawArgs, config: &FileConfig) -> Result<()> {
    let bitexts = corpus::read_bitext(&args.bitext)?;
    let file = std::fs::File::open(&args.pool)?;
    let mut pool = RandomPool::default();
    for (lineno, line) in BufReader::new(file).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record: PoolRecord =
            serde_json::from_str(&line).map_err(|e| Error::MalformedRecord {
                line: lineno + 1,
                msg: e.to_string(),
            })?;
        pool.add(&record.lang, record.text);
    }
    let seed = require_seed(args.seed.or(config.seed))?;
    let passes = args.passes.or(config.passes).unwrap_or(1);
    let mut examples = Vec::new();
    for (doc_ord, bitext) in bitexts.iter().enumerate() {
        // Per-document seed keeps output independent of file chunking.
        examples.extend(generate_examples(bitext, &pool, seed.wrapping_add(doc_ord as u64), passes)?);
    }
    match args.split.or(config.split) {
        None => write_examples(&args.output, &examples)?,
        Some(ratio) => {
            let (train, valid) = split_dataset(examples, ratio, seed)?;
            let train_path = args.output.with_extension("train.jsonl");
            let valid_path = args.output.with_extension("valid.jsonl");
            write_examples(&train_path, &train)?;
            write_examples(&valid_path, &valid)?;
            eprintln!("split {} train / {} valid", train.len(), valid.len());
        }
    }
    Ok(())
}

fn cmd_ensemble(args: EnsembleArgs, config: &FileConfig) -> Result<()> {
    let outputs = read_model_outputs(&args.model_outputs)?;
    match args.mode {
        EnsembleMode::Fit => {
            let gold_path = args
                .gold
                .ok_or_else(|| Error::InvalidConfig("--gold is required for fit".into()))?;
            let gold = read_gold(&gold_path)?;
            let grid_step = args.grid_step.or(config.grid_step).unwrap_or(0.1);
            let weights = ensemble::fit_weights(&outputs, &gold, grid_step)?;
            ensemble::write_weights(&args.output, &weights)?;
        }
        EnsembleMode::Apply => {
            let weights_path = args
                .weights
                .ok_or_else(|| Error::InvalidConfig("--weights is required for apply".into()))?;
            let weights = ensemble::read_weights(&weights_path)?;
            // Union of query ids across models, combined per query.
            let mut queries: BTreeSet<&String> = BTreeSet::new();
            for per_query in outputs.values() {
                queries.extend(per_query.keys());
            }
            let mut out = output_writer(&args.output)?;
            for query in queries {
                let model_outputs: Vec<lawrank::ModelOutputsF64> = outputs
                    .iter()
                    .filter_map(|(model_id, per_query)| {
                        per_query.get(query).map(|scores| lawrank::ModelOutputsF64 {
                            model_id: model_id.clone(),
                            scores: scores.clone(),
                        })
                    })
                    .collect();
                let combined = ensemble::combine(&model_outputs, &weights)?;
                for (candidate_id, score) in combined {
                    let record = serde_json::json!({
                        "query_id": query,
                        "candidate_id": candidate_id,
                        "score": score,
                    });
                    writeln!(out, "{record}")?;
                }
            }
        }
    }
    Ok(())
}

#[derive(Deserialize)]
struct RunRecord {
    query_id: String,
    candidate_id: String,
}

#[derive(Deserialize)]
struct BoolRecord {
    id: String,
    value: bool,
}

fn read_bool_records(path: &Path) -> Result<BTreeMap<String, bool>> {
    let file = std::fs::File::open(path)?;
    let mut out = BTreeMap::new();
    for (lineno, line) in BufReader::new(file).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record: BoolRecord =
            serde_json::from_str(&line).map_err(|e| Error::MalformedRecord {
                line: lineno + 1,
                msg: e.to_string(),
            })?;
        out.insert(record.id, record.value);
    }
    Ok(out)
}

fn cmd_eval(args: EvalArgs) -> Result<()> {
    match args.mode {
        EvalMode::Retrieval => {
            let gold = read_gold(&args.gold)?;
            let file = std::fs::File::open(&args.predictions)?;
            let mut predictions: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
            for (lineno, line) in BufReader::new(file).lines().enumerate() {
                let line = line?;
                if line.trim().is_empty() {
                    continue;
                }
                let record: RunRecord =
                    serde_json::from_str(&line).map_err(|e| Error::MalformedRecord {
                        line: lineno + 1,
                        msg: e.to_string(),
                    })?;
                predictions
                    .entry(record.query_id)
                    .or_default()
                    .insert(record.candidate_id);
            }
            let report = evaluate_retrieval(&predictions, &gold)?;
            let mut out = output_writer(&args.output)?;
            serde_json::to_writer_pretty(&mut out, &report)?;
            out.write_all(b"\n")?;
            if args.table {
                print!("{}", report.to_table());
            }
        }
        EvalMode::Accuracy => {
            let gold = read_bool_records(&args.gold)?;
            let predictions = read_bool_records(&args.predictions)?;
            let accuracy = evaluate_accuracy(&predictions, &gold)?;
            let mut out = output_writer(&args.output)?;
            let record = serde_json::json!({
                "correct": (accuracy * gold.len() as Score).round() as u64,
                "total": gold.len(),
                "accuracy": accuracy,
            });
            writeln!(out, "{record}")?;
            if args.table {
                println!("accuracy {accuracy:.4}");
            }
        }
    }
    Ok(())
}
