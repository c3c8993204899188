use std::collections::{HashMap, HashSet};
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use cmqr::dense::{ExternalEncoder, VectorStore};
use cmqr::eval::read_subset_map;
use cmqr::pipeline::{dense_run, encode_collection, generate_rewrites, sparse_run};
use cmqr::rewrite::{read_conversations, read_rewrite_file, write_rewrites, RewriteSet};
use cmqr::{collection, EncoderKind, InvertedIndex, PipelineConfig, Qrels, RetrievalMode, RunFile};

#[derive(Parser)]
#[command(
    name = "cmqr",
    version,
    about = "Multi-rewrite conversational passage retrieval"
)]
struct Cli {
    /// Flat JSON config; flags given on the command line win.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    /// Print the resolved configuration as JSON and exit.
    #[arg(long, global = true)]
    print_config: bool,

    #[command(flatten)]
    overrides: Overrides,

    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Subcommand)]
enum Command {
    /// Build a BM25 index from a collection (needs --collection, --index).
    Index,
    /// Hash-encode a collection into an embedding file (needs --collection, --embeddings).
    Encode,
    /// Rewrite every turn of --conversations with the n-gram model.
    Rewrite {
        /// Validate an externally produced rewrite file instead of generating one.
        #[arg(long, value_name = "FILE")]
        external: Option<PathBuf>,
    },
    /// Retrieve passages for every turn in --rewrites.
    Retrieve,
    /// Score a TREC run against --qrels.
    Evaluate {
        #[arg(long, value_name = "FILE")]
        run: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Sparse,
    Dense,
}

#[derive(Clone, Copy, ValueEnum)]
enum EncoderArg {
    Hash,
    External,
}

#[derive(Args)]
struct Overrides {
    #[arg(long, global = true)]
    k1: Option<f64>,
    #[arg(long, global = true)]
    b: Option<f64>,
    #[arg(long, global = true)]
    beam_width: Option<usize>,
    #[arg(long, global = true)]
    num_rewrites: Option<usize>,
    #[arg(long, global = true)]
    top_k: Option<usize>,
    #[arg(long, global = true, value_enum)]
    mode: Option<ModeArg>,
    #[arg(long, global = true, num_args = 0..=1, default_missing_value = "true", value_name = "BOOL")]
    dense_normalize_rs: Option<bool>,
    #[arg(long, global = true)]
    max_context_tokens: Option<usize>,
    #[arg(long, global = true)]
    max_rewrite_tokens: Option<usize>,
    #[arg(long, global = true, value_enum)]
    encoder: Option<EncoderArg>,
    #[arg(long, global = true)]
    hash_dimension: Option<usize>,
    #[arg(long, global = true)]
    hash_seed: Option<u64>,
    #[arg(long, global = true)]
    ngram_order: Option<usize>,
    #[arg(long, global = true)]
    ngram_alpha: Option<f64>,

    #[arg(long, global = true, value_name = "FILE")]
    collection: Option<PathBuf>,
    #[arg(long, global = true, value_name = "FILE")]
    conversations: Option<PathBuf>,
    #[arg(long, global = true, value_name = "FILE")]
    rewrites: Option<PathBuf>,
    #[arg(long, global = true, value_name = "DIR")]
    index: Option<PathBuf>,
    #[arg(long, global = true, value_name = "FILE")]
    embeddings: Option<PathBuf>,
    #[arg(long, global = true, value_name = "FILE")]
    query_embeddings: Option<PathBuf>,
    #[arg(long, global = true, value_name = "FILE")]
    qrels: Option<PathBuf>,
    #[arg(long, global = true, value_name = "FILE")]
    subsets: Option<PathBuf>,
    /// Output file; stdout when omitted.
    #[arg(long, global = true, value_name = "FILE")]
    output: Option<PathBuf>,
}

impl Overrides {
    fn apply(self, c: &mut PipelineConfig) {
        fn set<T>(slot: &mut T, v: Option<T>) {
            if let Some(v) = v {
                *slot = v;
            }
        }
        fn set_path(slot: &mut Option<PathBuf>, v: Option<PathBuf>) {
            if v.is_some() {
                *slot = v;
            }
        }
        set(&mut c.bm25_k1, self.k1);
        set(&mut c.bm25_b, self.b);
        set(&mut c.beam_width, self.beam_width);
        set(&mut c.num_rewrites, self.num_rewrites);
        set(&mut c.top_k_results, self.top_k);
        set(
            &mut c.mode,
            self.mode.map(|m| match m {
                ModeArg::Sparse => RetrievalMode::Sparse,
                ModeArg::Dense => RetrievalMode::Dense,
            }),
        );
        set(&mut c.dense_normalize_rs, self.dense_normalize_rs);
        set(&mut c.max_context_tokens, self.max_context_tokens);
        set(&mut c.max_rewrite_tokens, self.max_rewrite_tokens);
        set(
            &mut c.encoder,
            self.encoder.map(|e| match e {
                EncoderArg::Hash => EncoderKind::Hash,
                EncoderArg::External => EncoderKind::External,
            }),
        );
        set(&mut c.hash_dimension, self.hash_dimension);
        set(&mut c.hash_seed, self.hash_seed);
        set(&mut c.ngram_order, self.ngram_order);
        set(&mut c.ngram_alpha, self.ngram_alpha);
        set_path(&mut c.collection, self.collection);
        set_path(&mut c.conversations, self.conversations);
        set_path(&mut c.rewrites, self.rewrites);
        set_path(&mut c.index, self.index);
        set_path(&mut c.embeddings, self.embeddings);
        set_path(&mut c.query_embeddings, self.query_embeddings);
        set_path(&mut c.qrels, self.qrels);
        set_path(&mut c.subsets, self.subsets);
        set_path(&mut c.output, self.output);
    }
}

enum Failure {
    Usage(String),
    Core(cmqr::Error),
}

impl From<cmqr::Error> for Failure {
    fn from(e: cmqr::Error) -> Self {
        Failure::Core(e)
    }
}

type CliResult<T = ()> = Result<T, Failure>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Core(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(match e {
                cmqr::Error::Config(_) => 1,
                e if e.is_io() => 3,
                _ => 2,
            })
        }
    }
}

fn run(cli: Cli) -> CliResult {
    let mut config = match &cli.config {
        Some(path) => PipelineConfig::load(path)?,
        None => PipelineConfig::default(),
    };
    cli.overrides.apply(&mut config);
    config.validate()?;

    if cli.print_config {
        println!("{}", config.to_json());
        return Ok(());
    }
    match cli.command {
        None => Err(Failure::Usage(
            "a subcommand is required (index, encode, rewrite, retrieve, evaluate)".into(),
        )),
        Some(Command::Index) => cmd_index(&config),
        Some(Command::Encode) => cmd_encode(&config),
        Some(Command::Rewrite { external }) => cmd_rewrite(&config, external.as_deref()),
        Some(Command::Retrieve) => cmd_retrieve(&config),
        Some(Command::Evaluate { run }) => cmd_evaluate(&config, &run),
    }
}

fn require<'a>(path: &'a Option<PathBuf>, flag: &str) -> CliResult<&'a Path> {
    path.as_deref()
        .ok_or_else(|| Failure::Usage(format!("--{flag} is required")))
}

fn write_output(
    config: &PipelineConfig,
    f: impl FnOnce(&mut dyn Write) -> io::Result<()>,
) -> CliResult {
    let io_err = |path: &Path, e: io::Error| cmqr::Error::Io {
        path: path.to_path_buf(),
        source: e,
    };
    match &config.output {
        Some(path) => {
            let file = File::create(path).map_err(|e| io_err(path, e))?;
            let mut w = BufWriter::new(file);
            f(&mut w)
                .and_then(|_| w.flush())
                .map_err(|e| io_err(path, e))?;
        }
        None => {
            let stdout = io::stdout();
            let mut w = stdout.lock();
            f(&mut w)
                .and_then(|_| w.flush())
                .map_err(|e| io_err(Path::new("<stdout>"), e))?;
        }
    }
    Ok(())
}

fn warn_all(warnings: &[String]) {
    for w in warnings {
        eprintln!("warning: {w}");
    }
}

fn cmd_index(config: &PipelineConfig) -> CliResult {
    let passages = collection::read_collection(require(&config.collection, "collection")?)?;
    let dir = require(&config.index, "index")?;
    let index = InvertedIndex::build(passages)?;
    index.save(dir)?;
    println!("documents: {}", index.doc_count());
    println!("vocabulary: {}", index.vocabulary_size());
    println!("avgdl: {:.4}", index.avg_doc_length());
    Ok(())
}

fn cmd_encode(config: &PipelineConfig) -> CliResult {
    let passages = collection::read_collection(require(&config.collection, "collection")?)?;
    let path = require(&config.embeddings, "embeddings")?;
    let store = encode_collection(&passages, &config.hash_encoder()?)?;
    store.save(path)?;
    println!("vectors: {}", store.len());
    println!("dimension: {}", store.dimension());
    Ok(())
}

fn cmd_rewrite(config: &PipelineConfig, external: Option<&Path>) -> CliResult {
    let sets = match external {
        Some(path) => {
            let loaded = read_rewrite_file(path)?;
            warn_all(&loaded.warnings);
            if let Some(conv_path) = &config.conversations {
                check_coverage(&loaded.value, conv_path)?;
            }
            loaded.value
        }
        None => {
            let mut convs = read_conversations(require(&config.conversations, "conversations")?)?;
            generate_rewrites(&mut convs, config)?
        }
    };
    write_output(config, |w| write_rewrites(w, &sets))
}

fn check_coverage(sets: &[RewriteSet], conv_path: &Path) -> CliResult {
    let convs = read_conversations(conv_path)?;
    let turns: HashMap<&str, usize> = convs.iter().map(|c| (c.id(), c.len())).collect();
    let mut covered = HashSet::new();
    for s in sets {
        match turns.get(s.conversation_id()) {
            Some(&len) if s.turn_index() <= len => {
                covered.insert(s.query_id());
            }
            _ => {
                return Err(cmqr::Error::InvalidRewriteSet {
                    conversation_id: s.conversation_id().to_owned(),
                    turn_index: s.turn_index(),
                    reason: "no such turn in the conversation file".into(),
                }
                .into())
            }
        }
    }
    for c in &convs {
        for t in c.turns() {
            let qid = format!("{}_{}", c.id(), t.turn_index);
            if !covered.contains(&qid) {
                eprintln!("warning: {qid}: no rewrites supplied");
            }
        }
    }
    Ok(())
}

fn cmd_retrieve(config: &PipelineConfig) -> CliResult {
    let loaded = read_rewrite_file(require(&config.rewrites, "rewrites")?)?;
    warn_all(&loaded.warnings);
    let sets = loaded.value;
    let run = match config.mode {
        RetrievalMode::Sparse => {
            let index = InvertedIndex::load(require(&config.index, "index")?)?;
            let out = sparse_run(&index, &sets, config)?;
            warn_all(&out.warnings);
            out.value
        }
        RetrievalMode::Dense => {
            let store = VectorStore::load(require(&config.embeddings, "embeddings")?)?;
            match config.encoder {
                EncoderKind::Hash => dense_run(&store, &config.hash_encoder()?, &sets, config)?,
                EncoderKind::External => {
                    let path = require(&config.query_embeddings, "query-embeddings")?;
                    let queries = VectorStore::load(path)?;
                    dense_run(
                        &store,
                        &ExternalEncoder::from_store(&queries),
                        &sets,
                        config,
                    )?
                }
            }
        }
    };
    write_output(config, |w| run.write(w))
}

fn cmd_evaluate(config: &PipelineConfig, run_path: &Path) -> CliResult {
    let run = RunFile::load(run_path)?;
    let qrels = Qrels::load(require(&config.qrels, "qrels")?)?;
    let subsets = match &config.subsets {
        Some(path) => read_subset_map(path)?,
        None => HashMap::new(),
    };
    let report = cmqr::evaluate(&run, &qrels, &subsets);
    warn_all(&report.warnings);
    let json = report.to_json();
    if let Some(path) = &config.output {
        std::fs::write(path, format!("{json}\n")).map_err(|e| cmqr::Error::Io {
            path: path.clone(),
            source: e,
        })?;
    }
    println!("{json}");
    Ok(())
}
