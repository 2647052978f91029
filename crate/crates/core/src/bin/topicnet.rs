//! Command-line front end. Exit codes: 0 success, 1 usage error, 2 data error.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::de::DeserializeOwned;

use topicnet::config::{schema_versions, Config};
use topicnet::corpus::{
    build_vocabulary, encode, filter_corpus, load_corpus, ImageFeatures, RawDocument, Tokenizer, Vocabulary,
};
use topicnet::eval::{cross_modal_map, linear_probe, mean_permutation_baseline, queries_from_index};
use topicnet::eval::{write_per_class_csv, write_summary_csv};
use topicnet::lda::{fit_with_restarts, TopicModel};
use topicnet::nnet::{grad_check, Architecture, LossKind, Network, OptimizerState};
use topicnet::retrieval::{index_from_topics, write_hits_tsv, Modality, RetrievalIndex};
use topicnet::sampling::{dirichlet, rng_from_seed};
use topicnet::synth::{disjoint_phi, generate_multimodal, MultimodalConfig};
use topicnet::trainer::{
    embed_image_head, load_triples, project_corpus, save_triples, text_topics, train_from, triples_from_topics,
    write_history_csv, DocumentTopics, ProjectionConfig,
};
use topicnet::{Error, Matrix};

#[derive(Parser)]
#[command(name = "topicnet", about = "Topic-supervised image/text embedding pipeline", disable_version_flag = true)]
struct Cli {
    /// TOML config file; explicit flags win over its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads for parallel stages.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Print the crate version and the schema version of every file format.
    #[arg(long)]
    version: bool,
    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic multimodal corpus and its truth sidecar.
    GenSynth(GenSynth),
    /// Build a vocabulary file from a corpus.
    BuildVocab(BuildVocab),
    /// Fit LDA on the article texts of a corpus.
    TrainLda(TrainLda),
    /// Topic distributions of every article and caption.
    InferTopics(InferTopics),
    /// Build (features, global target, local target) triples.
    BuildTriples(BuildTriples),
    /// Train the dual-head network on a triples file.
    TrainNet(TrainNet),
    /// Embed a corpus into a retrieval index.
    BuildIndex(BuildIndex),
    /// Query an index with a text or an image feature vector.
    Retrieve(Retrieve),
    /// Cross-modal MAP of an index against itself.
    EvaluateMap(EvaluateMap),
    /// One-vs-all linear probe on the image embeddings of an index.
    Probe(Probe),
    /// Compare backprop gradients with finite differences on a random network.
    GradCheck(GradCheck),
}

#[derive(Args)]
struct GenSynth {
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    vocab_size: Option<usize>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    articles: Option<usize>,
    #[arg(long)]
    images_per_article: Option<usize>,
    #[arg(long)]
    doc_len: Option<usize>,
    #[arg(long)]
    caption_len: Option<usize>,
    #[arg(long)]
    feature_dim: Option<usize>,
    #[arg(long)]
    noise: Option<f64>,
    /// `random` or `identity-padded`.
    #[arg(long)]
    feature_map: Option<String>,
}

#[derive(Args)]
struct CorpusFilter {
    #[arg(long)]
    min_words: Option<usize>,
    #[arg(long)]
    min_df: Option<usize>,
    #[arg(long)]
    max_df: Option<f64>,
    #[arg(long)]
    max_vocab: Option<usize>,
}

#[derive(Args)]
struct BuildVocab {
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    filter: CorpusFilter,
}

#[derive(Args)]
struct TrainLda {
    #[arg(long)]
    corpus: PathBuf,
    /// Built from the corpus and written next to the model when absent.
    #[arg(long)]
    vocab: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    sweeps: Option<usize>,
    /// Chains to run; the lowest training perplexity wins.
    #[arg(long)]
    restarts: Option<usize>,
    #[command(flatten)]
    filter: CorpusFilter,
}

#[derive(Args)]
struct InferFlags {
    #[arg(long)]
    infer_sweeps: Option<usize>,
    #[arg(long)]
    burn_in: Option<usize>,
}

#[derive(Args)]
struct InferTopics {
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    vocab: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    seed: u64,
    #[command(flatten)]
    infer: InferFlags,
}

#[derive(Args)]
struct BuildTriples {
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    vocab: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    min_words: Option<usize>,
    #[command(flatten)]
    infer: InferFlags,
}

#[derive(Args)]
struct TrainNet {
    #[arg(long)]
    triples: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    seed: u64,
    /// Comma-separated trunk widths, e.g. `256,128`.
    #[arg(long)]
    hidden: Option<String>,
    /// Comma-separated hidden widths inside each head.
    #[arg(long)]
    head_hidden: Option<String>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    momentum: Option<f64>,
    #[arg(long)]
    decay_factor: Option<f64>,
    #[arg(long)]
    decay_every: Option<u64>,
    /// `sigmoid-cross-entropy` or `softmax-cross-entropy`.
    #[arg(long)]
    loss: Option<String>,
    /// Training-curve CSV; defaults to `<out>.history.csv`.
    #[arg(long)]
    history: Option<PathBuf>,
    /// Continue from this checkpoint instead of a fresh initialization.
    #[arg(long)]
    resume: Option<PathBuf>,
}

#[derive(Args)]
struct BuildIndex {
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    vocab: PathBuf,
    #[arg(long)]
    net: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    seed: u64,
    /// `local` or `global`.
    #[arg(long)]
    head: Option<String>,
    #[command(flatten)]
    infer: InferFlags,
}

#[derive(Args)]
struct QueryFlags {
    /// `forward` or `symmetric`.
    #[arg(long)]
    kl: Option<String>,
    #[arg(long)]
    eps: Option<f64>,
}

#[derive(Args)]
struct Retrieve {
    #[arg(long)]
    index: PathBuf,
    #[arg(long, conflicts_with_all = ["features", "features_file"])]
    text: Option<String>,
    /// Comma-separated image feature vector.
    #[arg(long, conflicts_with = "features_file")]
    features: Option<String>,
    /// Feature file (`.ppm` or plain decimals).
    #[arg(long)]
    features_file: Option<PathBuf>,
    #[arg(long)]
    top: Option<usize>,
    #[arg(long)]
    model: Option<PathBuf>,
    #[arg(long)]
    vocab: Option<PathBuf>,
    #[arg(long)]
    net: Option<PathBuf>,
    #[arg(long)]
    head: Option<String>,
    /// Mixed with a hash of the query text to seed topic inference.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    infer: InferFlags,
    #[command(flatten)]
    query: QueryFlags,
    /// TSV destination; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct EvaluateMap {
    #[arg(long)]
    index: PathBuf,
    /// Summary CSV.
    #[arg(long)]
    out: PathBuf,
    /// Also report MAP after shuffling the index labels, seeding shuffles from here.
    #[arg(long)]
    baseline_seed: Option<u64>,
    /// Number of shuffles averaged into the baseline.
    #[arg(long, default_value_t = 100)]
    baseline_permutations: usize,
    #[command(flatten)]
    query: QueryFlags,
}

#[derive(Args)]
struct Probe {
    #[arg(long)]
    index: PathBuf,
    /// Per-class CSV.
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    seed: u64,
    /// Which items of the index to probe: `image` or `text`.
    #[arg(long, default_value = "image")]
    modality: String,
    #[arg(long)]
    epochs: Option<usize>,
}

#[derive(Args)]
struct GradCheck {
    #[arg(long)]
    seed: u64,
    #[arg(long, default_value_t = 5)]
    input_dim: usize,
    #[arg(long, default_value = "8")]
    hidden: String,
    #[arg(long, default_value_t = 3)]
    k: usize,
    #[arg(long, default_value_t = 4)]
    batch: usize,
    #[arg(long, default_value_t = 1e-5)]
    epsilon: f64,
    #[arg(long, default_value_t = 1e-5)]
    tol: f64,
    #[arg(long)]
    loss: Option<String>,
}

enum Failure {
    Usage(String),
    Data(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Data(e)
    }
}

type Outcome = std::result::Result<(), Failure>;

fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(msg.into())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    if cli.version {
        println!("topicnet {}", env!("CARGO_PKG_VERSION"));
        for (kind, format, version) in schema_versions() {
            println!("{kind}\t{format}\tv{version}");
        }
        return ExitCode::SUCCESS;
    }
    let Some(command) = cli.command else {
        eprintln!("error: a subcommand is required\n\nUsage: topicnet [--config <FILE>] [--threads <N>] <COMMAND>\nRun `topicnet --help` for the list of commands.");
        return ExitCode::from(1);
    };
    match run(cli.config.as_deref(), cli.threads, command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}\n\nRun `topicnet <COMMAND> --help` for the flag synopsis.");
            ExitCode::from(1)
        }
        Err(Failure::Data(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn run(config: Option<&Path>, threads: Option<usize>, command: Command) -> Outcome {
    if let Some(n) = threads {
        if n == 0 {
            return Err(usage("--threads must be ≥ 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| usage(e.to_string()))?;
    }
    let mut cfg = match config {
        Some(p) => Config::load(p)?,
        None => Config::default(),
    };
    match command {
        Command::GenSynth(a) => gen_synth(&mut cfg, a),
        Command::BuildVocab(a) => build_vocab(&mut cfg, a),
        Command::TrainLda(a) => train_lda(&mut cfg, a),
        Command::InferTopics(a) => infer_topics(&mut cfg, a),
        Command::BuildTriples(a) => build_triples(&mut cfg, a),
        Command::TrainNet(a) => train_net(&mut cfg, a),
        Command::BuildIndex(a) => build_index(&mut cfg, a),
        Command::Retrieve(a) => retrieve(&mut cfg, a),
        Command::EvaluateMap(a) => evaluate_map(&mut cfg, a),
        Command::Probe(a) => probe(&mut cfg, a),
        Command::GradCheck(a) => grad_check_cmd(a),
    }
}

fn set<T>(slot: &mut T, flag: Option<T>) {
    if let Some(v) = flag {
        *slot = v;
    }
}

/// Parses a flag value with the same spelling the config file uses.
fn parse_enum<T: DeserializeOwned>(flag: &str, value: &str) -> std::result::Result<T, Failure> {
    serde_json::from_value(serde_json::Value::String(value.to_string()))
        .map_err(|_| usage(format!("invalid value {value:?} for --{flag}")))
}

fn parse_widths(flag: &str, value: &str) -> std::result::Result<Vec<usize>, Failure> {
    if value.trim().is_empty() {
        return Ok(Vec::new());
    }
    value
        .split(',')
        .map(|s| s.trim().parse::<usize>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| usage(format!("--{flag} expects comma-separated integers, got {value:?}")))
}

fn with_suffix(path: &Path, suffix: &str) -> PathBuf {
    let mut s = path.as_os_str().to_os_string();
    s.push(suffix);
    PathBuf::from(s)
}

fn write_bytes(path: &Path, bytes: &[u8]) -> Outcome {
    fs::write(path, bytes).map_err(|e| Failure::Data(Error::Io {
        path: path.to_path_buf(),
        source: e,
    }))
}

fn echo_config(out: &Path, cfg: &Config, command: &str, seed: Option<u64>) -> Outcome {
    let mut text = format!("# topicnet {command}\n");
    if let Some(s) = seed {
        text.push_str(&format!("# seed = {s}\n"));
    }
    text.push_str(&cfg.to_toml_string());
    write_bytes(&with_suffix(out, ".config.toml"), text.as_bytes())
}

fn base_dir(corpus: &Path) -> PathBuf {
    corpus.parent().map(Path::to_path_buf).unwrap_or_default()
}

fn apply_filter(cfg: &mut Config, f: CorpusFilter) {
    set(&mut cfg.corpus.min_words, f.min_words);
    set(&mut cfg.corpus.min_df, f.min_df);
    set(&mut cfg.corpus.max_df_fraction, f.max_df);
    set(&mut cfg.corpus.max_vocab, f.max_vocab);
}

fn apply_infer(cfg: &mut Config, f: InferFlags) {
    set(&mut cfg.infer.sweeps, f.infer_sweeps);
    set(&mut cfg.infer.burn_in, f.burn_in);
}

fn apply_query(cfg: &mut Config, f: QueryFlags) -> Outcome {
    if let Some(kl) = f.kl {
        cfg.retrieval.kl = parse_enum("kl", &kl)?;
    }
    set(&mut cfg.retrieval.eps, f.eps);
    Ok(())
}

fn filtered_corpus(cfg: &Config, path: &Path, tokenizer: &Tokenizer) -> std::result::Result<Vec<RawDocument>, Failure> {
    let docs = load_corpus(path)?;
    let kept = filter_corpus(&docs, cfg.corpus.min_words, cfg.corpus.require_caption, tokenizer);
    if kept.is_empty() {
        return Err(Error::EmptyCorpus.into());
    }
    Ok(kept)
}

fn vocab_from_corpus(cfg: &Config, docs: &[RawDocument], tokenizer: &Tokenizer) -> topicnet::Result<Vocabulary> {
    let tokens: Vec<Vec<String>> = docs.iter().map(|d| tokenizer.tokenize(&d.article_text)).collect();
    build_vocabulary(&tokens, &cfg.corpus.vocab_config())
}

fn projection(cfg: &Config, corpus: &Path, seed: u64) -> ProjectionConfig {
    ProjectionConfig {
        tokenizer: Tokenizer::english(),
        infer: cfg.infer.infer_config(seed),
        base_dir: base_dir(corpus),
    }
}

fn gen_synth(cfg: &mut Config, a: GenSynth) -> Outcome {
    let s = &mut cfg.synth;
    set(&mut s.k, a.k);
    set(&mut s.vocab_size, a.vocab_size);
    set(&mut s.alpha, a.alpha);
    set(&mut s.articles, a.articles);
    set(&mut s.images_per_article, a.images_per_article);
    set(&mut s.doc_len, a.doc_len);
    set(&mut s.caption_len, a.caption_len);
    set(&mut s.feature_dim, a.feature_dim);
    set(&mut s.noise, a.noise);
    if let Some(m) = a.feature_map {
        s.feature_map = parse_enum("feature-map", &m)?;
    }
    let phi = disjoint_phi(s.k, s.vocab_size)?;
    let corpus = generate_multimodal(
        &phi,
        &MultimodalConfig {
            alpha: s.alpha,
            n_articles: s.articles,
            images_per_article: s.images_per_article,
            doc_len: s.doc_len,
            caption_len: s.caption_len,
            feature_dim: s.feature_dim,
            noise_sigma: s.noise,
            feature_map: s.feature_map,
            seed: a.seed,
        },
    )?;
    topicnet::corpus::save_corpus(&a.out, &corpus.to_raw_documents())?;
    corpus.truth().save(with_suffix(&a.out, ".truth.json"))?;
    echo_config(&a.out, cfg, "gen-synth", Some(a.seed))
}

fn build_vocab(cfg: &mut Config, a: BuildVocab) -> Outcome {
    apply_filter(cfg, a.filter);
    let tokenizer = Tokenizer::english();
    let docs = filtered_corpus(cfg, &a.corpus, &tokenizer)?;
    let vocab = vocab_from_corpus(cfg, &docs, &tokenizer)?;
    vocab.save(&a.out)?;
    eprintln!("{} documents kept, V={}", docs.len(), vocab.len());
    echo_config(&a.out, cfg, "build-vocab", None)
}

fn train_lda(cfg: &mut Config, a: TrainLda) -> Outcome {
    apply_filter(cfg, a.filter);
    if let Some(k) = a.k {
        cfg.lda.k = k;
    }
    if a.alpha.is_some() {
        cfg.lda.alpha = a.alpha;
    }
    set(&mut cfg.lda.beta, a.beta);
    set(&mut cfg.lda.sweeps, a.sweeps);
    set(&mut cfg.lda.restarts, a.restarts);
    let tokenizer = Tokenizer::english();
    let docs = filtered_corpus(cfg, &a.corpus, &tokenizer)?;
    let vocab = match &a.vocab {
        Some(p) => Vocabulary::load(p)?,
        None => {
            let v = vocab_from_corpus(cfg, &docs, &tokenizer)?;
            v.save(with_suffix(&a.out, ".vocab.txt"))?;
            v
        }
    };
    let bows: Vec<_> = docs
        .iter()
        .map(|d| encode(&tokenizer.tokenize(&d.article_text), &vocab))
        .collect();
    let model = fit_with_restarts(&bows, vocab.len(), &cfg.lda.lda_config(a.seed), cfg.lda.restarts)?.with_vocab_hash(vocab.hash());
    model.save(&a.out)?;
    echo_config(&a.out, cfg, "train-lda", Some(a.seed))
}

fn load_model_vocab(model: &Path, vocab: &Path) -> std::result::Result<(TopicModel, Vocabulary), Failure> {
    Ok((TopicModel::load(model)?, Vocabulary::load(vocab)?))
}

fn infer_topics(cfg: &mut Config, a: InferTopics) -> Outcome {
    apply_infer(cfg, a.infer);
    let (model, vocab) = load_model_vocab(&a.model, &a.vocab)?;
    let docs = load_corpus(&a.corpus)?;
    let projected = project_corpus(&docs, &model, &vocab, &projection(cfg, &a.corpus, a.seed))?;
    let mut buf = Vec::new();
    for doc in &projected {
        let captions: Vec<serde_json::Value> = doc
            .images
            .iter()
            .map(|img| serde_json::json!({ "image_id": img.image_id, "theta": img.caption }))
            .collect();
        let line = serde_json::json!({ "doc_id": doc.doc_id, "article": doc.article, "captions": captions });
        writeln!(buf, "{line}").expect("in-memory write");
    }
    write_bytes(&a.out, &buf)?;
    echo_config(&a.out, cfg, "infer-topics", Some(a.seed))
}

fn build_triples(cfg: &mut Config, a: BuildTriples) -> Outcome {
    apply_infer(cfg, a.infer);
    set(&mut cfg.corpus.min_words, a.min_words);
    let (model, vocab) = load_model_vocab(&a.model, &a.vocab)?;
    let docs = filtered_corpus(cfg, &a.corpus, &Tokenizer::english())?;
    let projected = project_corpus(&docs, &model, &vocab, &projection(cfg, &a.corpus, a.seed))?;
    let triples = triples_from_topics(&projected)?;
    save_triples(&a.out, &triples, &model.content_hash()?)?;
    eprintln!("{} triples from {} articles", triples.len(), docs.len());
    echo_config(&a.out, cfg, "build-triples", Some(a.seed))
}

fn train_net(cfg: &mut Config, a: TrainNet) -> Outcome {
    if let Some(h) = &a.hidden {
        cfg.nnet.hidden = parse_widths("hidden", h)?;
    }
    if let Some(h) = &a.head_hidden {
        cfg.nnet.head_hidden = parse_widths("head-hidden", h)?;
    }
    if let Some(l) = &a.loss {
        cfg.nnet.loss = parse_enum("loss", l)?;
    }
    let t = &mut cfg.trainer;
    set(&mut t.epochs, a.epochs);
    set(&mut t.batch_size, a.batch_size);
    set(&mut t.base_lr, a.lr);
    set(&mut t.momentum, a.momentum);
    set(&mut t.decay_factor, a.decay_factor);
    set(&mut t.decay_every, a.decay_every);
    let (triples, _) = load_triples(&a.triples)?;
    let first = triples.first().ok_or(Error::EmptyCorpus)?;
    let train_cfg = cfg.trainer.train_config(cfg.nnet.loss, a.seed);
    let (net, opt) = match &a.resume {
        Some(p) => {
            let ck = Network::load(p)?;
            let opt = ck.optimizer.unwrap_or_else(|| OptimizerState::new(&ck.network, train_cfg.sgd));
            (ck.network, opt)
        }
        None => {
            let mut arch = Architecture::mlp(first.x.len(), &cfg.nnet.hidden, first.target_global.len());
            arch.head_hidden = cfg.nnet.head_hidden.clone();
            let net = Network::new(arch, a.seed)?;
            let opt = OptimizerState::new(&net, train_cfg.sgd);
            (net, opt)
        }
    };
    let outcome = train_from(net, opt, &triples, &train_cfg)?;
    outcome.network.save(&a.out, Some(&outcome.optimizer), cfg.nnet.loss)?;
    let mut csv = Vec::new();
    write_history_csv(&mut csv, &outcome.history).expect("in-memory write");
    let history = a.history.clone().unwrap_or_else(|| with_suffix(&a.out, ".history.csv"));
    write_bytes(&history, &csv)?;
    if let (Some(first), Some(last)) = (outcome.history.first(), outcome.history.last()) {
        eprintln!("loss {:.6} → {:.6}", first.loss_total, last.loss_total);
    }
    echo_config(&a.out, cfg, "train-net", Some(a.seed))
}

fn build_index(cfg: &mut Config, a: BuildIndex) -> Outcome {
    apply_infer(cfg, a.infer);
    if let Some(h) = &a.head {
        cfg.retrieval.head = parse_enum("head", h)?;
    }
    let (model, vocab) = load_model_vocab(&a.model, &a.vocab)?;
    let net = Network::load(&a.net)?.network;
    let docs = load_corpus(&a.corpus)?;
    let projected: Vec<DocumentTopics> = project_corpus(&docs, &model, &vocab, &projection(cfg, &a.corpus, a.seed))?;
    let index = index_from_topics(&projected, &net, cfg.retrieval.head)?;
    index.save(&a.out)?;
    echo_config(&a.out, cfg, "build-index", Some(a.seed))
}

fn parse_features(value: &str) -> std::result::Result<Vec<f64>, Failure> {
    value
        .split(|c: char| c == ',' || c.is_whitespace())
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| usage(format!("--features expects comma-separated numbers, got {value:?}")))
}

fn retrieve(cfg: &mut Config, a: Retrieve) -> Outcome {
    apply_infer(cfg, a.infer);
    apply_query(cfg, a.query)?;
    set(&mut cfg.retrieval.top, a.top);
    if let Some(h) = &a.head {
        cfg.retrieval.head = parse_enum("head", h)?;
    }
    if a.model.is_some() {
        cfg.retrieval.model = a.model;
    }
    if a.vocab.is_some() {
        cfg.retrieval.vocab = a.vocab;
    }
    if a.net.is_some() {
        cfg.retrieval.net = a.net;
    }
    let index = RetrievalIndex::load(&a.index)?;
    let r = &cfg.retrieval;
    let (query, target) = if let Some(text) = &a.text {
        let (Some(model), Some(vocab)) = (&r.model, &r.vocab) else {
            return Err(usage("a text query needs --model and --vocab (or [retrieval] model/vocab in the config)"));
        };
        let (model, vocab) = load_model_vocab(model, vocab)?;
        topicnet::trainer::check_vocab(&model, &vocab)?;
        let q = text_topics(text, &model, &vocab, &Tokenizer::english(), &cfg.infer.infer_config(a.seed))?;
        (q, Modality::Image)
    } else {
        let x = match (&a.features, &a.features_file) {
            (Some(v), _) => parse_features(v)?,
            (None, Some(p)) => ImageFeatures::File(p.clone()).resolve(Path::new("."))?,
            (None, None) => return Err(usage("one of --text, --features or --features-file is required")),
        };
        let Some(net) = &r.net else {
            return Err(usage("an image query needs --net (or [retrieval] net in the config)"));
        };
        let net = Network::load(net)?.network;
        (embed_image_head(&net, &x, r.head)?, Modality::Text)
    };
    let hits = index.query_with(&query, target, r.top, &r.query_options())?;
    let mut tsv = Vec::new();
    write_hits_tsv(&mut tsv, &hits).expect("in-memory write");
    match &a.out {
        Some(p) => {
            write_bytes(p, &tsv)?;
            echo_config(p, cfg, "retrieve", Some(a.seed))
        }
        None => std::io::stdout().write_all(&tsv).map_err(|e| Failure::Data(Error::Io {
            path: "<stdout>".into(),
            source: e,
        })),
    }
}

fn evaluate_map(cfg: &mut Config, a: EvaluateMap) -> Outcome {
    apply_query(cfg, a.query)?;
    let index = RetrievalIndex::load(&a.index)?;
    let opts = cfg.retrieval.query_options();
    let report = cross_modal_map(&index, &opts)?;
    let mut csv = Vec::new();
    write_summary_csv(&mut csv, &report).expect("in-memory write");
    write_bytes(&a.out, &csv)?;
    let mut per_class = Vec::new();
    write_per_class_csv(&mut per_class, &report.text_query.per_class).expect("in-memory write");
    write_bytes(&with_suffix(&a.out, ".text_query.csv"), &per_class)?;
    per_class.clear();
    write_per_class_csv(&mut per_class, &report.image_query.per_class).expect("in-memory write");
    write_bytes(&with_suffix(&a.out, ".image_query.csv"), &per_class)?;
    print!("{}", String::from_utf8_lossy(&csv));
    if let Some(seed) = a.baseline_seed {
        for m in [Modality::Image, Modality::Text] {
            let queries = queries_from_index(&index, m);
            let base = mean_permutation_baseline(&index, &queries, &opts, seed, a.baseline_permutations)?;
            println!("baseline_{m},{base}");
        }
    }
    echo_config(&a.out, cfg, "evaluate-map", a.baseline_seed)
}

fn probe(cfg: &mut Config, a: Probe) -> Outcome {
    set(&mut cfg.eval.probe_epochs, a.epochs);
    let modality: Modality = parse_enum("modality", &a.modality)?;
    let index = RetrievalIndex::load(&a.index)?;
    let items: Vec<_> = index.of_modality(modality).collect();
    if items.is_empty() {
        return Err(Error::EmptyModality(modality.to_string()).into());
    }
    let mut classes: Vec<String> = items.iter().filter_map(|i| i.label.clone()).collect();
    classes.sort();
    classes.dedup();
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for item in &items {
        let Some(label) = &item.label else {
            return Err(Error::Format(format!("item {} has no label", item.item_id)).into());
        };
        labels.push(classes.binary_search(label).expect("label collected above"));
        rows.push(item.distribution.as_slice());
    }
    let features = Matrix::from_rows(&rows)?;
    let report = linear_probe(&features, &labels, classes.len(), &cfg.eval.probe_config(a.seed))?;
    let per_class = classes.iter().cloned().zip(report.per_class_ap.iter().copied()).collect();
    let mut csv = Vec::new();
    write_per_class_csv(&mut csv, &per_class).expect("in-memory write");
    write_bytes(&a.out, &csv)?;
    println!("mean_ap,{}", report.mean_ap);
    echo_config(&a.out, cfg, "probe", Some(a.seed))
}

fn grad_check_cmd(a: GradCheck) -> Outcome {
    let hidden = parse_widths("hidden", &a.hidden)?;
    let loss: LossKind = match &a.loss {
        Some(l) => parse_enum("loss", l)?,
        None => LossKind::default(),
    };
    if a.batch == 0 {
        return Err(usage("--batch must be ≥ 1"));
    }
    let net = Network::new(Architecture::mlp(a.input_dim, &hidden, a.k), a.seed)?;
    let mut rng = rng_from_seed(a.seed.wrapping_add(1));
    let x: Vec<f64> = {
        use rand::Rng;
        (0..a.batch * a.input_dim).map(|_| rng.random_range(-1.0..1.0)).collect()
    };
    let mut targets = || -> topicnet::Result<Matrix> {
        let data: Vec<f64> = (0..a.batch).flat_map(|_| dirichlet(&mut rng, 1.0, a.k)).collect();
        Matrix::from_vec(a.batch, a.k, data)
    };
    let tg = targets()?;
    let tl = targets()?;
    let batch = Matrix::from_vec(a.batch, a.input_dim, x)?;
    let err = grad_check(&net, &batch, &tg, &tl, a.epsilon, loss)?;
    println!("max_relative_error\t{err:e}");
    if err < a.tol {
        Ok(())
    } else {
        Err(Error::Consistency(format!("gradient check failed: {err:e} ≥ {:e}", a.tol)).into())
    }
}
