use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, ensure, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use splate_core::embedding::{EmbeddingStore, SynthEncoder, VocabularyConfig};
use splate_core::eval::{
    evaluate, format_sweep_table, mean_std, mrr_at_k, recall_overlap, success_at_k, sweep,
    EvalData, EvalReport, EvalSettings, Pipeline, PipelineConfig,
};
use splate_core::formats::{self, Run, Vocabulary};
use splate_core::head::{Activation, AdapterHead};
use splate_core::index::{Algorithm, BuildOptions, InvertedIndex};
use splate_core::late_interaction::{rerank, teacher_rank, DenseDocStore};
use splate_core::synth::{SynthConfig, SynthCorpus};
use splate_core::trainer::{self, TrainConfig, TrainingData};

/// Sparse candidate generation from late-interaction embeddings.
#[derive(Parser)]
#[command(name = "splate", version)]
struct Cli {
    /// Worker threads (overrides SPLATE_THREADS).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic corpus, query sets and embedding stores.
    Synth(SynthArgs),
    /// Encode a corpus file into an embedding store.
    Embed(EmbedArgs),
    /// Write an untrained adapter head.
    Init(InitArgs),
    /// Distill the teacher into an adapter head.
    Train(TrainArgs),
    /// Encode documents and build the inverted index.
    Index(IndexArgs),
    /// Sparse retrieval into a run file.
    Retrieve(RetrieveArgs),
    /// Exact MaxSim re-ranking of a run file, or of the whole corpus.
    Rerank(RerankArgs),
    /// Evaluate the pipeline, or score run files.
    Eval(EvalArgs),
    /// Evaluate a grid of pooling sizes.
    Sweep(SweepArgs),
    /// Print a query's weighted bag of words.
    Explain(ExplainArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum ActivationArg {
    Relu,
    Tanh,
}

impl From<ActivationArg> for Activation {
    fn from(a: ActivationArg) -> Self {
        match a {
            ActivationArg::Relu => Activation::Relu,
            ActivationArg::Tanh => Activation::Tanh,
        }
    }
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long, default_value_t = 2000)]
    docs: usize,
    #[arg(long, default_value_t = 200)]
    queries: usize,
    #[arg(long, default_value_t = 400)]
    train_queries: usize,
    #[arg(long, default_value_t = 5000)]
    vocab: usize,
    #[arg(long, default_value_t = 32)]
    dim: usize,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    /// Write into a non-empty directory.
    #[arg(long)]
    force: bool,
}

#[derive(Args)]
struct EmbedArgs {
    /// `id<TAB>terms` lines: term ids, or raw text with --text.
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    vocab_size: Option<usize>,
    #[arg(long, default_value_t = 32)]
    dim: usize,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    /// Treat records as text, tokenized against --vocab.
    #[arg(long, requires = "vocab")]
    text: bool,
    /// Vocabulary file (`term<TAB>id`).
    #[arg(long)]
    vocab: Option<PathBuf>,
    /// Build the vocabulary from the input and write it to --vocab.
    #[arg(long, requires = "text")]
    build_vocab: bool,
}

#[derive(Args)]
struct InitArgs {
    #[arg(long)]
    vocab_size: usize,
    #[arg(long)]
    dim: usize,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    #[arg(long, value_enum, default_value = "relu")]
    activation: ActivationArg,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct TrainArgs {
    /// Starting checkpoint; its projection is kept frozen.
    #[arg(long)]
    init: PathBuf,
    #[arg(long)]
    docs: PathBuf,
    #[arg(long)]
    queries: PathBuf,
    /// Training pairs (`query<TAB>positive`). Not needed with --manifest.
    #[arg(long, required_unless_present = "manifest")]
    qrels: Option<PathBuf>,
    /// Reuse mined examples instead of mining.
    #[arg(long, conflicts_with = "write_manifest")]
    manifest: Option<PathBuf>,
    /// Save the mined examples.
    #[arg(long)]
    write_manifest: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    /// Write `epoch-<n>.splh` after every epoch.
    #[arg(long)]
    checkpoint_dir: Option<PathBuf>,
    #[arg(long, default_value_t = 3)]
    epochs: usize,
    #[arg(long, default_value_t = 24)]
    batch_size: usize,
    #[arg(long, default_value_t = 20)]
    n_neg: usize,
    #[arg(long, default_value_t = 100)]
    pool_size: usize,
    #[arg(long, default_value_t = 1e-3)]
    lr: f64,
    #[arg(long, default_value_t = 0.05)]
    lambda_margin: f64,
    #[arg(long, default_value_t = 1.0)]
    lambda_kl: f64,
    #[arg(long, default_value_t = 10)]
    k_q: usize,
    #[arg(long, default_value_t = 100)]
    k_d: usize,
    #[arg(long, default_value_t = 7)]
    seed: u64,
}

#[derive(Args)]
struct IndexArgs {
    #[arg(long)]
    head: PathBuf,
    #[arg(long)]
    docs: PathBuf,
    #[arg(long, default_value_t = 100)]
    k_d: usize,
    #[arg(long, default_value_t = 8)]
    bits: u8,
    #[arg(long, default_value_t = 64)]
    block_length: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct RetrieveArgs {
    #[arg(long)]
    head: PathBuf,
    #[arg(long)]
    index: PathBuf,
    #[arg(long)]
    queries: PathBuf,
    #[arg(long, default_value_t = 10)]
    k_q: usize,
    #[arg(long, default_value_t = 50)]
    k: usize,
    #[arg(long, default_value = "bmw")]
    algo: Algorithm,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct RerankArgs {
    #[arg(long)]
    docs: PathBuf,
    #[arg(long)]
    queries: PathBuf,
    /// Candidates to re-rank.
    #[arg(long, required_unless_present = "exhaustive")]
    run: Option<PathBuf>,
    /// Score every document instead of a run's candidates.
    #[arg(long, conflicts_with = "run")]
    exhaustive: bool,
    #[arg(long, default_value_t = 10)]
    k: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct EvalArgs {
    /// Score this run file instead of running the pipeline.
    #[arg(long, conflicts_with_all = ["head", "index"])]
    run: Option<PathBuf>,
    /// Exact run for R(k) in run-file mode.
    #[arg(long, requires = "run")]
    exact: Option<PathBuf>,
    #[arg(long)]
    head: Option<PathBuf>,
    #[arg(long)]
    index: Option<PathBuf>,
    #[arg(long)]
    docs: Option<PathBuf>,
    #[arg(long)]
    queries: Option<PathBuf>,
    #[arg(long)]
    qrels: Option<PathBuf>,
    #[command(flatten)]
    pipeline: PipelineArgs,
    /// Timed repetitions per query for latency; 0 skips it.
    #[arg(long, default_value_t = 0)]
    mrt_reps: usize,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    /// Report path; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct PipelineArgs {
    #[arg(long, default_value_t = 10)]
    k_q: usize,
    #[arg(long, default_value_t = 100)]
    k_d: usize,
    #[arg(long, default_value_t = 50)]
    k_candidates: usize,
    #[arg(long, default_value_t = 10)]
    k_final: usize,
    #[arg(long, default_value = "bmw")]
    algo: Algorithm,
}

impl PipelineArgs {
    fn config(&self) -> PipelineConfig {
        PipelineConfig {
            k_q: self.k_q,
            k_d: self.k_d,
            k_candidates: self.k_candidates,
            k_final: self.k_final,
            algorithm: self.algo,
        }
    }
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long)]
    head: PathBuf,
    #[arg(long)]
    docs: PathBuf,
    #[arg(long)]
    queries: PathBuf,
    #[arg(long)]
    qrels: PathBuf,
    /// Comma-separated `k_q:k_d` pairs.
    #[arg(long, default_value = "5:30,5:50,10:100")]
    grid: String,
    #[arg(long, default_value_t = 50)]
    k_candidates: usize,
    #[arg(long, default_value_t = 10)]
    k_final: usize,
    #[arg(long, default_value = "bmw")]
    algo: Algorithm,
    #[arg(long, default_value_t = 3)]
    mrt_reps: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ExplainArgs {
    #[arg(long)]
    head: PathBuf,
    /// Term ids separated by spaces, or text with --vocab.
    #[arg(long)]
    query: String,
    /// Vocabulary for text queries and term names.
    #[arg(long)]
    vocab: Option<PathBuf>,
    /// Seed of the encoder that produced the corpus.
    #[arg(long, default_value_t = 7)]
    seed: u64,
    #[arg(long, default_value_t = 10)]
    k_q: usize,
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    let threads = match cli.threads {
        Some(n) => Some(n),
        None => match std::env::var("SPLATE_THREADS") {
            Ok(v) => Some(
                v.parse()
                    .context("SPLATE_THREADS must be a positive integer")?,
            ),
            Err(_) => None,
        },
    };
    if let Some(n) = threads {
        ensure!(n >= 1, "thread count must be at least 1");
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring the worker pool")?;
    }
    match cli.command {
        Command::Synth(a) => synth(a),
        Command::Embed(a) => embed(a),
        Command::Init(a) => init(a),
        Command::Train(a) => train(a),
        Command::Index(a) => index(a),
        Command::Retrieve(a) => retrieve(a),
        Command::Rerank(a) => rerank_cmd(a),
        Command::Eval(a) => eval(a),
        Command::Sweep(a) => sweep_cmd(a),
        Command::Explain(a) => explain(a),
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path).with_context(|| {
        format!("cannot create {}", path.display())
    })?))
}

fn open(path: &Path) -> Result<BufReader<File>> {
    Ok(BufReader::new(File::open(path).with_context(|| {
        format!("cannot open {}", path.display())
    })?))
}

fn write_file(
    path: &Path,
    f: impl FnOnce(&mut BufWriter<File>) -> splate_core::Result<()>,
) -> Result<()> {
    let mut w = create(path)?;
    f(&mut w).with_context(|| format!("writing {}", path.display()))?;
    w.flush()
        .with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

fn read_file<T>(
    path: &Path,
    f: impl FnOnce(BufReader<File>) -> splate_core::Result<T>,
) -> Result<T> {
    f(open(path)?).with_context(|| format!("reading {}", path.display()))
}

fn load_store(path: &Path) -> Result<EmbeddingStore> {
    Ok(EmbeddingStore::load(path)?)
}

fn load_head(path: &Path) -> Result<AdapterHead> {
    Ok(AdapterHead::load(path)?)
}

fn load_qrels(path: &Path) -> Result<BTreeMap<u64, Vec<u64>>> {
    read_file(path, formats::read_qrels)
}

fn load_run(path: &Path) -> Result<Run> {
    read_file(path, formats::read_run)
}

fn synth(a: SynthArgs) -> Result<()> {
    ensure!(
        a.docs >= 1 && a.queries >= 1 && a.vocab >= 1 && a.dim >= 1,
        "--docs, --queries, --vocab and --dim must be at least 1"
    );
    if a.out.exists() {
        let non_empty = fs::read_dir(&a.out)
            .with_context(|| format!("cannot read {}", a.out.display()))?
            .next()
            .is_some();
        if non_empty && !a.force {
            bail!(
                "output directory {} is not empty; pass --force to overwrite",
                a.out.display()
            );
        }
    }
    fs::create_dir_all(&a.out).with_context(|| format!("cannot create {}", a.out.display()))?;
    let config = SynthConfig {
        num_docs: a.docs,
        num_queries: a.queries,
        num_train_queries: a.train_queries,
        vocab_size: a.vocab,
        dim: a.dim,
        seed: a.seed,
        ..SynthConfig::default()
    };
    let corpus = SynthCorpus::generate(&config)?;
    let stores = corpus.embed()?;
    let dir = &a.out;
    let tokens = |qs: &[splate_core::synth::SynthQuery]| -> Vec<(u64, Vec<u32>)> {
        qs.iter().map(|q| (q.id, q.tokens.clone())).collect()
    };
    let qrels = |qs: &[splate_core::synth::SynthQuery]| -> BTreeMap<u64, Vec<u64>> {
        qs.iter().map(|q| (q.id, vec![q.relevant])).collect()
    };
    write_file(&dir.join("corpus.tsv"), |w| {
        formats::write_corpus(w, &corpus.docs)
    })?;
    write_file(&dir.join("queries.tsv"), |w| {
        formats::write_corpus(w, &tokens(&corpus.queries))
    })?;
    write_file(&dir.join("train_queries.tsv"), |w| {
        formats::write_corpus(w, &tokens(&corpus.train_queries))
    })?;
    write_file(&dir.join("qrels.tsv"), |w| {
        formats::write_qrels(w, &qrels(&corpus.queries))
    })?;
    write_file(&dir.join("train_qrels.tsv"), |w| {
        formats::write_qrels(w, &qrels(&corpus.train_queries))
    })?;
    stores.docs.save(&dir.join("docs.spl8"))?;
    stores.queries.save(&dir.join("queries.spl8"))?;
    stores.train_queries.save(&dir.join("train_queries.spl8"))?;
    let head = AdapterHead::new(
        stores.encoder.projection().clone(),
        Activation::Relu,
        a.seed,
    )?;
    head.save(&dir.join("init.splh"))?;

    let mut manifest = EvalReport::default();
    manifest.push("docs", config.num_docs);
    manifest.push("queries", config.num_queries);
    manifest.push("train_queries", config.num_train_queries);
    manifest.push("vocab", config.vocab_size);
    manifest.push("dim", config.dim);
    manifest.push("seed", config.seed);
    manifest.push("zipf_exponent", config.zipf_exponent);
    manifest.push(
        "doc_len",
        format!("{}..={}", config.doc_len.0, config.doc_len.1),
    );
    manifest.push(
        "query_terms",
        format!("{}..={}", config.query_terms.0, config.query_terms.1),
    );
    manifest.push(
        "query_noise",
        format!("{}..={}", config.query_noise.0, config.query_noise.1),
    );
    write_file(&dir.join("synth.txt"), |w| manifest.write_to(w))?;
    eprintln!(
        "wrote {} documents, {} queries, {} training queries to {}",
        config.num_docs,
        config.num_queries,
        config.num_train_queries,
        dir.display()
    );
    Ok(())
}

fn embed(a: EmbedArgs) -> Result<()> {
    let records: Vec<(u64, Vec<u32>)> = if a.text {
        let texts = read_file(&a.input, formats::read_text_corpus)?;
        let vocab_path = a
            .vocab
            .as_deref()
            .expect("clap enforces --vocab with --text");
        let vocab = if a.build_vocab {
            let v = Vocabulary::build(texts.iter().map(|t| t.1.as_str()));
            write_file(vocab_path, |w| v.write_to(w))?;
            v
        } else {
            read_file(vocab_path, Vocabulary::read_from)?
        };
        let mut out = Vec::with_capacity(texts.len());
        for (id, text) in &texts {
            let (ids, unknown) = vocab.encode(text);
            if !unknown.is_empty() {
                eprintln!("warning: record {id}: skipped unknown tokens {unknown:?}");
            }
            ensure!(!ids.is_empty(), "record {id} has no known tokens");
            out.push((*id, ids));
        }
        out
    } else {
        read_file(&a.input, formats::read_corpus)?
    };
    let vocab_size = match (a.vocab_size, &a.vocab) {
        (Some(v), _) => v,
        (None, Some(path)) if a.text => read_file(path, Vocabulary::read_from)?.len(),
        _ => bail!("--vocab-size is required for integer corpora"),
    };
    let encoder = SynthEncoder::new(VocabularyConfig::new(vocab_size, a.dim, a.seed)?)?;
    let mut store = EmbeddingStore::new(vocab_size, a.dim);
    for (id, toks) in &records {
        store.put(encoder.encode(*id, toks)?)?;
    }
    store.freeze();
    store.save(&a.out)?;
    eprintln!("embedded {} records into {}", store.len(), a.out.display());
    Ok(())
}

fn init(a: InitArgs) -> Result<()> {
    let encoder = SynthEncoder::new(VocabularyConfig::new(a.vocab_size, a.dim, a.seed)?)?;
    let head = AdapterHead::new(encoder.projection().clone(), a.activation.into(), a.seed)?;
    head.save(&a.out)?;
    eprintln!(
        "wrote untrained head with {} trainable parameters",
        head.num_trainable_params()
    );
    Ok(())
}

fn train(a: TrainArgs) -> Result<()> {
    let mut head = load_head(&a.init)?;
    let docs = load_store(&a.docs)?;
    let queries = load_store(&a.queries)?;
    let config = TrainConfig {
        batch_size: a.batch_size,
        n_neg: a.n_neg,
        pool_size: a.pool_size,
        epochs: a.epochs,
        lr: a.lr,
        loss_weight_margin: a.lambda_margin,
        loss_weight_kl: a.lambda_kl,
        k_q: a.k_q,
        k_d: a.k_d,
        seed: a.seed,
    };
    config.validate()?;
    let examples = match (&a.manifest, &a.qrels) {
        (Some(path), _) => trainer::load_manifest(path)?,
        (None, Some(path)) => {
            let pairs: Vec<(u64, u64)> = load_qrels(path)?
                .into_iter()
                .flat_map(|(q, docs)| docs.into_iter().map(move |d| (q, d)))
                .collect();
            let dense = DenseDocStore::new(&docs)?;
            trainer::build_training_set(&pairs, &queries, &dense, &config)?
        }
        (None, None) => bail!("either --qrels or --manifest is required"),
    };
    if let Some(path) = &a.write_manifest {
        trainer::save_manifest(path, &examples)?;
    }
    if let Some(dir) = &a.checkpoint_dir {
        fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
    }
    let data = TrainingData {
        queries: &queries,
        docs: &docs,
    };
    let report = trainer::train(
        &mut head,
        &examples,
        data,
        &config,
        a.checkpoint_dir.as_deref(),
    )?;
    for (i, loss) in report.epoch_losses.iter().enumerate() {
        println!("epoch={}\tloss={loss}", i + 1);
    }
    head.save(&a.out)?;
    Ok(())
}

fn index(a: IndexArgs) -> Result<()> {
    let head = load_head(&a.head)?;
    let docs = load_store(&a.docs)?;
    let options = BuildOptions {
        quantization_bits: a.bits,
        block_length: a.block_length,
    };
    let index = splate_core::eval::index_corpus(&head, &docs, a.k_d, options)?;
    index.save(&a.out)?;
    eprintln!(
        "indexed {} documents, {} postings",
        index.num_docs(),
        index.total_postings()
    );
    Ok(())
}

fn retrieve(a: RetrieveArgs) -> Result<()> {
    let head = load_head(&a.head)?;
    let index = InvertedIndex::load(&a.index)?;
    let queries = load_store(&a.queries)?;
    let config = PipelineConfig {
        k_q: a.k_q,
        k_candidates: a.k,
        k_final: a.k.min(PipelineConfig::default().k_final),
        algorithm: a.algo,
        ..PipelineConfig::default()
    };
    let pipeline = Pipeline::new(&head, &index, None, config)?;
    let mut run = Vec::with_capacity(queries.len());
    let (mut total, mut scored) = (0usize, 0usize);
    for q in queries.iter() {
        let (list, stats) = pipeline.retrieve_encoded(&pipeline.encode_query(q)?);
        total += stats.postings_total;
        scored += stats.postings_scored;
        run.push((q.id(), list));
    }
    write_file(&a.out, |w| formats::write_run(w, &run))?;
    eprintln!(
        "{} queries, {scored} of {total} postings scored ({})",
        run.len(),
        a.algo
    );
    Ok(())
}

fn rerank_cmd(a: RerankArgs) -> Result<()> {
    let docs = load_store(&a.docs)?;
    let queries = load_store(&a.queries)?;
    let dense = DenseDocStore::new(&docs)?;
    let mut out = Vec::new();
    if a.exhaustive {
        for q in queries.iter() {
            out.push((q.id(), teacher_rank(q, &dense, a.k)?));
        }
    } else {
        let path = a.run.as_deref().expect("clap enforces --run");
        for (qid, list) in load_run(path)? {
            let q = queries.get(qid).with_context(|| {
                format!(
                    "query {qid} of {} is not in the query store",
                    path.display()
                )
            })?;
            let ids: Vec<u64> = list.ids().collect();
            out.push((qid, rerank(q, &ids, &dense, a.k)?));
        }
    }
    write_file(&a.out, |w| formats::write_run(w, &out))
}

fn emit_report(report: &EvalReport, out: Option<&Path>) -> Result<()> {
    match out {
        Some(path) => write_file(path, |w| report.write_to(w)),
        None => {
            let stdout = io::stdout();
            let mut lock = stdout.lock();
            report.write_to(&mut lock)?;
            Ok(())
        }
    }
}

fn eval(a: EvalArgs) -> Result<()> {
    let settings = EvalSettings {
        mrt_repetitions: a.mrt_reps,
        ..EvalSettings::default()
    };
    if let Some(run_path) = &a.run {
        let report = eval_runs(run_path, a.exact.as_deref(), a.qrels.as_deref(), &settings)?;
        return emit_report(&report, a.out.as_deref());
    }
    let need = |p: &Option<PathBuf>, flag: &str| -> Result<PathBuf> {
        p.clone()
            .with_context(|| format!("{flag} is required unless --run is given"))
    };
    let head = load_head(&need(&a.head, "--head")?)?;
    let index = InvertedIndex::load(&need(&a.index, "--index")?)?;
    let docs = load_store(&need(&a.docs, "--docs")?)?;
    let queries = load_store(&need(&a.queries, "--queries")?)?;
    let qrels = load_qrels(&need(&a.qrels, "--qrels")?)?;
    let dense = DenseDocStore::new(&docs)?;
    let pipeline = Pipeline::new(&head, &index, Some(&dense), a.pipeline.config())?;
    let summary = evaluate(&pipeline, &queries, &qrels, &settings, a.seed)?;
    emit_report(&summary.report(), a.out.as_deref())
}

/// Metrics computed straight from run files.
fn eval_runs(
    run_path: &Path,
    exact_path: Option<&Path>,
    qrels_path: Option<&Path>,
    settings: &EvalSettings,
) -> Result<EvalReport> {
    ensure!(
        exact_path.is_some() || qrels_path.is_some(),
        "run-file evaluation needs --exact, --qrels or both"
    );
    let run = load_run(run_path)?;
    let mut report = EvalReport::default();
    report.push("num_queries", run.len());
    if let Some(path) = qrels_path {
        let qrels = load_qrels(path)?;
        let mut mrr = Vec::new();
        let mut success = Vec::new();
        for (qid, list) in &run {
            if let Some(rel) = qrels.get(qid) {
                mrr.push(mrr_at_k(list, rel, settings.mrr_k)?);
                success.push(success_at_k(list, rel, settings.success_k)?);
            }
        }
        report.push("judged_queries", mrr.len());
        report.push(format!("mrr_at_{}", settings.mrr_k), mean_std(&mrr).0);
        report.push(
            format!("success_at_{}", settings.success_k),
            mean_std(&success).0,
        );
    }
    if let Some(path) = exact_path {
        let exact: BTreeMap<u64, _> = load_run(path)?.into_iter().collect();
        for &(k, kp) in &settings.overlap {
            let mut values = Vec::new();
            for (qid, list) in &run {
                let e = exact
                    .get(qid)
                    .with_context(|| format!("query {qid} missing from {}", path.display()))?;
                values.push(recall_overlap(list, e, k, kp)?.value);
            }
            let (mean, std) = mean_std(&values);
            report.push(format!("r_overlap.k{k}.kp{kp}.mean"), mean);
            report.push(format!("r_overlap.k{k}.kp{kp}.std"), std);
        }
    }
    Ok(report)
}

fn parse_grid(s: &str) -> Result<Vec<(usize, usize)>> {
    s.split(',')
        .map(|pair| {
            let (q, d) = pair
                .split_once(':')
                .with_context(|| format!("grid entry {pair:?} is not k_q:k_d"))?;
            Ok((q.trim().parse()?, d.trim().parse()?))
        })
        .collect()
}

fn sweep_cmd(a: SweepArgs) -> Result<()> {
    let grid = parse_grid(&a.grid)?;
    ensure!(!grid.is_empty(), "empty grid");
    let head = load_head(&a.head)?;
    let docs = load_store(&a.docs)?;
    let queries = load_store(&a.queries)?;
    let qrels = load_qrels(&a.qrels)?;
    let dense = DenseDocStore::new(&docs)?;
    let base = PipelineConfig {
        k_candidates: a.k_candidates,
        k_final: a.k_final,
        algorithm: a.algo,
        ..PipelineConfig::default()
    };
    let settings = EvalSettings {
        overlap: vec![(10, a.k_candidates)],
        mrt_repetitions: a.mrt_reps,
        ..EvalSettings::default()
    };
    let data = EvalData {
        dense: &dense,
        queries: &queries,
        qrels: &qrels,
    };
    let rows = sweep(&head, data, &grid, base, BuildOptions::default(), &settings)?;
    let table = format_sweep_table(&rows, settings.overlap[0]);
    match &a.out {
        Some(path) => fs::write(path, table).with_context(|| format!("writing {}", path.display())),
        None => {
            print!("{table}");
            Ok(())
        }
    }
}

fn explain(a: ExplainArgs) -> Result<()> {
    let head = load_head(&a.head)?;
    let vocab = match &a.vocab {
        Some(path) => Some(read_file(path, Vocabulary::read_from)?),
        None => None,
    };
    let tokens: Vec<u32> = match &vocab {
        Some(v) => {
            let (ids, unknown) = v.encode(&a.query);
            for tok in unknown {
                eprintln!("warning: unknown token {tok:?} skipped");
            }
            ids
        }
        None => a
            .query
            .split_whitespace()
            .map(|t| {
                t.parse::<u32>()
                    .with_context(|| format!("bad term id {t:?}"))
            })
            .collect::<Result<_>>()?,
    };
    ensure!(!tokens.is_empty(), "query has no known tokens");
    let encoder = SynthEncoder::new(VocabularyConfig::new(
        head.vocab_size(),
        head.dim(),
        a.seed,
    )?)?;
    ensure!(
        encoder.projection() == head.projection(),
        "--seed {} does not reproduce the head's projection",
        a.seed
    );
    let record = encoder.encode(0, &tokens)?;
    let sparse = head.encode(&record, a.k_q)?;
    let stdout = io::stdout();
    let mut out = stdout.lock();
    for (term, weight) in sparse.by_weight() {
        let name = vocab
            .as_ref()
            .and_then(|v| v.term(term))
            .map_or_else(|| term.to_string(), str::to_string);
        writeln!(out, "({name}, {weight:.2})")?;
    }
    Ok(())
}
