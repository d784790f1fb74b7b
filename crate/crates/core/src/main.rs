use std::collections::BTreeSet;
use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::parser::ValueSource;
use clap::{Args, CommandFactory, FromArgMatches, Parser, Subcommand, ValueEnum};

use embedkit::config::{parse_bool, Settings};
use embedkit::cooccur::{accumulate_cooccurrence_with_threads, CooccurrenceStore, DEFAULT_SHARD_RECORDS};
use embedkit::embio::{export_tsv, load_embeddings, save_text};
use embedkit::eval::{evaluate_wordsim, nearest_neighbors, pair_similarity_report, parse_pairs, WordSimDataset};
use embedkit::glove::{train_glove, GloveConfig};
use embedkit::pipeline::{collect_inputs, run_pipeline, CleanCorpus, PipelineConfig};
use embedkit::subword::SubwordConfig;
use embedkit::vocab::{build_vocab_with_threads, stopword_candidates, word_length_stats, Vocabulary};
use embedkit::w2v::{train_cbow, train_sg, Mode, W2vConfig};
use embedkit::{Error, TrainOutput};

const PIPELINE_KEYS: [&str; 5] = [
    "replacement-chars",
    "boundary-chars",
    "noise-patterns",
    "lowercase",
    "drop-latin-tokens",
];

/// Corpus preprocessing, embedding training and evaluation.
#[derive(Parser, Debug)]
#[command(name = "embedkit", version, args_override_self = true)]
struct Cli {
    /// key=value settings file; explicit flags take precedence [default: none]
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    /// Random seed
    #[arg(long, global = true, default_value_t = 1)]
    seed: u64,

    /// Worker threads
    #[arg(long, global = true, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
    threads: u64,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Clean raw UTF-8 text files into a one-sentence-per-line corpus
    Preprocess(PreprocessArgs),
    /// Vocabulary and word-length statistics of a corpus
    Stats(StatsArgs),
    /// Rank stop-word candidates by frequency
    Stopwords(StopwordsArgs),
    /// Count harmonic co-occurrences into binary shards
    Cooccur(CooccurArgs),
    /// Train embeddings
    #[command(subcommand)]
    Train(TrainCommand),
    /// Evaluate embeddings
    #[command(subcommand)]
    Eval(EvalCommand),
    /// Export word vectors as TSV for visualization tools
    Export(ExportArgs),
}

#[derive(Args, Debug)]
struct PreprocessArgs {
    /// Input file or directory, repeatable [default: none, required]
    #[arg(long = "in", value_name = "PATH", required = true)]
    inputs: Vec<PathBuf>,
    /// Output corpus file; a source manifest is written next to it [default: none, required]
    #[arg(long, value_name = "FILE")]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct CorpusArgs {
    /// Preprocessed corpus file [default: none, required]
    #[arg(long, value_name = "FILE")]
    corpus: PathBuf,
    /// Minimum word frequency kept in the vocabulary
    #[arg(long, default_value_t = 5, value_parser = clap::value_parser!(u64).range(1..))]
    min_count: u64,
}

#[derive(Args, Debug)]
struct StatsArgs {
    #[command(flatten)]
    corpus: CorpusArgs,
    /// Write the vocabulary as word<TAB>count [default: none]
    #[arg(long, value_name = "FILE")]
    vocab_out: Option<PathBuf>,
    /// Write the word-length table here instead of stdout [default: stdout]
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct StopwordsArgs {
    #[command(flatten)]
    corpus: CorpusArgs,
    /// Number of top-ranked candidates to emit
    #[arg(long, default_value_t = 340)]
    top: usize,
    /// Output TSV [default: stdout]
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct CooccurArgs {
    #[command(flatten)]
    corpus: CorpusArgs,
    /// Context window size
    #[arg(long, default_value_t = 7, value_parser = clap::value_parser!(u64).range(1..))]
    ws: u64,
    /// Output directory for shard files [default: none, required]
    #[arg(long, value_name = "DIR")]
    out: PathBuf,
    /// Records per shard file
    #[arg(long, default_value_t = DEFAULT_SHARD_RECORDS)]
    shard_records: usize,
}

#[derive(Subcommand, Debug)]
enum TrainCommand {
    /// Continuous bag-of-words with hierarchical softmax
    Cbow(W2vArgs),
    /// Skip-gram with negative sampling
    Sg(SgArgs),
    /// GloVe weighted least squares with AdaGrad
    Glove(GloveArgs),
}

#[derive(Args, Debug)]
struct TrainCommon {
    #[command(flatten)]
    corpus: CorpusArgs,
    /// Output vectors (text); full model goes to <FILE>.emb1 [default: none, required]
    #[arg(long, value_name = "FILE")]
    out: PathBuf,
    /// Per-epoch mean loss as TSV [default: none]
    #[arg(long, value_name = "FILE")]
    loss_log: Option<PathBuf>,
    /// Vector dimension
    #[arg(long, default_value_t = 300, value_parser = clap::value_parser!(u64).range(1..))]
    dim: u64,
    /// Initial learning rate
    #[arg(long, default_value_t = 0.25)]
    lr: f64,
    /// Training epochs
    #[arg(long, default_value_t = 100)]
    epochs: usize,
}

#[derive(Args, Debug)]
struct W2vArgs {
    #[command(flatten)]
    common: TrainCommon,
    /// Context window size
    #[arg(long, default_value_t = 7, value_parser = clap::value_parser!(u64).range(1..))]
    ws: u64,
    /// Minimum character n-gram length
    #[arg(long, default_value_t = 2)]
    minn: usize,
    /// Maximum character n-gram length
    #[arg(long, default_value_t = 7)]
    maxn: usize,
    /// Hash buckets for character n-grams
    #[arg(long, default_value_t = 2_000_000)]
    buckets: u32,
    /// Subsampling threshold
    #[arg(long, default_value_t = 1e-4)]
    sample: f64,
    /// Train plain word vectors without n-grams [default: off]
    #[arg(long)]
    no_subwords: bool,
    /// Always use the full window instead of sampling its size [default: off]
    #[arg(long)]
    fixed_window: bool,
}

#[derive(Args, Debug)]
struct SgArgs {
    #[command(flatten)]
    w2v: W2vArgs,
    /// Negative samples per positive pair
    #[arg(long, default_value_t = 20)]
    neg: usize,
    /// Unigram noise table size
    #[arg(long, default_value_t = 10_000_000)]
    table_size: usize,
}

#[derive(Args, Debug)]
struct GloveArgs {
    #[command(flatten)]
    common: TrainCommon,
    /// Shard directory from `cooccur`; counted from the corpus when absent [default: none]
    #[arg(long, value_name = "DIR")]
    cooc: Option<PathBuf>,
    /// Context window size when counting from the corpus
    #[arg(long, default_value_t = 7, value_parser = clap::value_parser!(u64).range(1..))]
    ws: u64,
    /// Weighting cutoff
    #[arg(long, default_value_t = 100.0)]
    x_max: f64,
    /// Weighting exponent
    #[arg(long, default_value_t = 0.75)]
    alpha: f64,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Tsv,
    Table,
}

#[derive(Args, Debug)]
struct EvalCommon {
    /// Embedding file; <FILE>.emb1 is used when present [default: none, required]
    #[arg(long, value_name = "FILE")]
    emb: PathBuf,
    /// Report layout on stdout
    #[arg(long, value_enum, default_value_t = Format::Tsv)]
    format: Format,
    /// Also write the TSV report here [default: none]
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum EvalCommand {
    /// Nearest neighbours by cosine similarity
    Neighbors {
        #[command(flatten)]
        common: EvalCommon,
        /// Query word, repeatable [default: none, required]
        #[arg(long, required = true)]
        query: Vec<String>,
        /// Neighbours per query
        #[arg(long, default_value_t = 8, value_parser = clap::value_parser!(u64).range(1..))]
        k: u64,
    },
    /// Cosine similarity of word pairs (word_a<TAB>word_b per line)
    Pairs {
        #[command(flatten)]
        common: EvalCommon,
        /// Pairs file [default: none, required]
        #[arg(long, value_name = "FILE")]
        file: PathBuf,
    },
    /// Spearman correlation against word_a<TAB>word_b<TAB>score judgements
    Wordsim {
        #[command(flatten)]
        common: EvalCommon,
        /// Similarity dataset [default: none, required]
        #[arg(long, value_name = "FILE")]
        file: PathBuf,
    },
}

#[derive(Args, Debug)]
struct ExportArgs {
    /// Embedding file; <FILE>.emb1 is used when present [default: none, required]
    #[arg(long, value_name = "FILE")]
    emb: PathBuf,
    /// One word per line; all vocabulary words when absent [default: none]
    #[arg(long, value_name = "FILE")]
    words: Option<PathBuf>,
    /// Export only the first N vocabulary words when --words is absent [default: all]
    #[arg(long)]
    top: Option<usize>,
    /// Output TSV [default: none, required]
    #[arg(long, value_name = "FILE")]
    out: PathBuf,
}

#[derive(Debug)]
enum CliError {
    Usage(String),
    Data(Error),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(msg) => CliError::Usage(msg),
            other => CliError::Data(other),
        }
    }
}

type CliResult<T = ()> = Result<T, CliError>;

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp(None)
        .init();
    let argv: Vec<OsString> = std::env::args_os().collect();
    let cli = match parse_with_config(argv) {
        Ok(cli) => cli,
        Err(code) => return code,
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(CliError::Data(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn clap_exit(err: clap::Error) -> ExitCode {
    let _ = err.print();
    if err.use_stderr() {
        ExitCode::from(1)
    } else {
        ExitCode::SUCCESS
    }
}

/// Parses `argv`, then re-parses with settings from `--config` appended for
/// every flag not given on the command line.
fn parse_with_config(argv: Vec<OsString>) -> Result<Cli, ExitCode> {
    let mut command = Cli::command();
    let matches = command.try_get_matches_from_mut(&argv).map_err(clap_exit)?;
    let Some(config_path) = matches.get_one::<PathBuf>("config").cloned() else {
        return Cli::from_arg_matches(&matches).map_err(clap_exit);
    };
    let settings = match Settings::from_file(&config_path) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: {e}");
            return Err(ExitCode::from(if matches!(e, Error::Io { .. }) { 2 } else { 1 }));
        }
    };
    command.build();
    let known = all_long_flags(&command);
    for (key, _) in settings.iter() {
        if !known.contains(key) && !PIPELINE_KEYS.contains(&key) {
            eprintln!("error: {}: unknown setting '{key}'", config_path.display());
            return Err(ExitCode::from(1));
        }
    }

    let mut leaf_cmd = &command;
    let mut leaf = &matches;
    while let Some((name, sub)) = leaf.subcommand() {
        leaf_cmd = leaf_cmd.find_subcommand(name).expect("matched subcommand exists");
        leaf = sub;
    }
    let mut extra = Vec::new();
    for arg in leaf_cmd.get_arguments() {
        let Some(long) = arg.get_long() else { continue };
        let Some(value) = settings.get(long) else { continue };
        if long == "config" || leaf.value_source(arg.get_id().as_str()) == Some(ValueSource::CommandLine) {
            continue;
        }
        if arg.get_num_args().is_some_and(|n| n.takes_values()) {
            extra.push(OsString::from(format!("--{long}={value}")));
        } else {
            match parse_bool(value) {
                Some(true) => extra.push(OsString::from(format!("--{long}"))),
                Some(false) => {}
                None => {
                    eprintln!("error: {}: '{long}' expects true or false", config_path.display());
                    return Err(ExitCode::from(1));
                }
            }
        }
    }
    let mut merged = argv;
    merged.extend(extra);
    Cli::try_parse_from(merged).map_err(clap_exit)
}

fn all_long_flags(command: &clap::Command) -> BTreeSet<String> {
    let mut out: BTreeSet<String> = command
        .get_arguments()
        .filter_map(|a| a.get_long().map(str::to_owned))
        .collect();
    for sub in command.get_subcommands() {
        out.extend(all_long_flags(sub));
    }
    out
}

fn run(cli: Cli) -> CliResult {
    let threads = cli.threads as usize;
    let seed = cli.seed;
    match cli.command {
        Command::Preprocess(args) => preprocess(&args, cli.config.as_deref(), threads),
        Command::Stats(args) => stats(&args, threads),
        Command::Stopwords(args) => stopwords(&args, threads),
        Command::Cooccur(args) => cooccur(&args, threads),
        Command::Train(cmd) => train(cmd, seed, threads),
        Command::Eval(cmd) => eval(cmd),
        Command::Export(args) => export(&args),
    }
}

fn write_output(out: Option<&Path>, text: &str) -> CliResult {
    match out {
        Some(path) => fs::write(path, text).map_err(|e| Error::io(path, e).into()),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .and_then(|_| stdout.flush())
                .map_err(|e| CliError::Data(Error::io(Path::new("<stdout>"), e)))
        }
    }
}

fn preprocess(args: &PreprocessArgs, config: Option<&Path>, threads: usize) -> CliResult {
    let pipeline = match config {
        Some(path) => PipelineConfig::from_settings(&Settings::from_file(path)?)?,
        None => PipelineConfig::default(),
    };
    let files = collect_inputs(&args.inputs)?;
    if files.is_empty() {
        return Err(CliError::Data(Error::Input("no input files found".into())));
    }
    let corpus = run_pipeline(&files, &pipeline, threads)?;
    corpus.save(&args.out)?;
    log::info!(
        "{} files, {} sentences, {} tokens -> {}",
        files.len(),
        corpus.sentences.len(),
        corpus.token_count,
        args.out.display()
    );
    Ok(())
}

fn load_corpus(args: &CorpusArgs, threads: usize) -> CliResult<(CleanCorpus, Vocabulary)> {
    let corpus = CleanCorpus::load(&args.corpus)?;
    let vocab = build_vocab_with_threads(&corpus, args.min_count, threads)?;
    log::info!(
        "{}: {} tokens, {} words with count >= {}",
        args.corpus.display(),
        corpus.token_count,
        vocab.len(),
        args.min_count
    );
    Ok((corpus, vocab))
}

fn stats(args: &StatsArgs, threads: usize) -> CliResult {
    let (corpus, vocab) = load_corpus(&args.corpus, threads)?;
    if let Some(path) = &args.vocab_out {
        vocab.write_tsv(path)?;
    }
    write_output(args.out.as_deref(), &word_length_stats(&corpus).to_tsv())
}

fn stopwords(args: &StopwordsArgs, threads: usize) -> CliResult {
    let (_, vocab) = load_corpus(&args.corpus, threads)?;
    write_output(args.out.as_deref(), &stopword_candidates(&vocab, args.top).to_tsv())
}

fn cooccur(args: &CooccurArgs, threads: usize) -> CliResult {
    let (corpus, vocab) = load_corpus(&args.corpus, threads)?;
    let store = accumulate_cooccurrence_with_threads(&corpus, &vocab, args.ws as usize, threads)?;
    let shards = store.save(&args.out, args.shard_records.max(1))?;
    log::info!("{} records in {} shards", store.len(), shards.len());
    Ok(())
}

fn w2v_config(mode: Mode, args: &W2vArgs, seed: u64, threads: usize) -> W2vConfig {
    let mut config = W2vConfig::new(mode);
    config.dim = args.common.dim as usize;
    config.lr = args.common.lr;
    config.epochs = args.common.epochs;
    config.ws = args.ws as usize;
    config.subsample_t = args.sample;
    config.dynamic_window = !args.fixed_window;
    config.subword = (!args.no_subwords).then(|| SubwordConfig {
        minn: args.minn,
        maxn: args.maxn,
        n_buckets: args.buckets,
        ..SubwordConfig::default()
    });
    config.seed = seed;
    config.threads = threads;
    config
}

fn train(cmd: TrainCommand, seed: u64, threads: usize) -> CliResult {
    let (common, output) = match &cmd {
        TrainCommand::Cbow(args) => {
            let (corpus, vocab) = load_corpus(&args.common.corpus, threads)?;
            let config = w2v_config(Mode::Cbow, args, seed, threads);
            (&args.common, train_cbow(&corpus, &vocab, &config)?)
        }
        TrainCommand::Sg(args) => {
            let (corpus, vocab) = load_corpus(&args.w2v.common.corpus, threads)?;
            let mut config = w2v_config(Mode::SkipGram, &args.w2v, seed, threads);
            config.negatives = args.neg;
            config.table_size = args.table_size;
            (&args.w2v.common, train_sg(&corpus, &vocab, &config)?)
        }
        TrainCommand::Glove(args) => {
            let (corpus, vocab) = load_corpus(&args.common.corpus, threads)?;
            let store = match &args.cooc {
                Some(dir) => CooccurrenceStore::load(dir, &vocab)?,
                None => accumulate_cooccurrence_with_threads(&corpus, &vocab, args.ws as usize, threads)?,
            };
            drop(corpus);
            let config = GloveConfig {
                dim: args.common.dim as usize,
                lr: args.common.lr,
                epochs: args.common.epochs,
                x_max: args.x_max,
                alpha: args.alpha,
                seed,
                threads,
            };
            (&args.common, train_glove(&store, &vocab, &config)?)
        }
    };
    finish_training(common, &output)
}

fn finish_training(common: &TrainCommon, output: &TrainOutput) -> CliResult {
    save_text(&output.embeddings, &common.out)?;
    if let Some(path) = &common.loss_log {
        let mut text = String::from("epoch\tmean_loss\n");
        for (epoch, loss) in output.epoch_loss.iter().enumerate() {
            writeln!(text, "{}\t{loss}", epoch + 1).expect("writing to a String cannot fail");
        }
        write_output(Some(path), &text)?;
    }
    log::info!("wrote {} vectors to {}", output.embeddings.len(), common.out.display());
    Ok(())
}

fn render_table(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut widths: Vec<usize> = header.iter().map(|h| h.chars().count()).collect();
    for row in rows {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.chars().count());
        }
    }
    let mut out = String::new();
    let mut line = |cells: &mut dyn Iterator<Item = &str>| {
        let parts: Vec<String> = cells
            .zip(&widths)
            .map(|(c, w)| format!("{c}{}", " ".repeat(w - c.chars().count())))
            .collect();
        out.push_str(parts.join("  ").trim_end());
        out.push('\n');
    };
    line(&mut header.iter().copied());
    let rule: Vec<String> = widths.iter().map(|w| "-".repeat(*w)).collect();
    line(&mut rule.iter().map(String::as_str));
    for row in rows {
        line(&mut row.iter().map(String::as_str));
    }
    out
}

fn emit_report(common: &EvalCommon, tsv: &str, table: String) -> CliResult {
    if let Some(path) = &common.out {
        write_output(Some(path), tsv)?;
    }
    match common.format {
        Format::Tsv => write_output(None, tsv),
        Format::Table => write_output(None, &table),
    }
}

fn eval(cmd: EvalCommand) -> CliResult {
    match cmd {
        EvalCommand::Neighbors { common, query, k } => {
            let emb = load_embeddings(&common.emb)?;
            let mut tsv = String::from("query\trank\tneighbor\tcosine\n");
            let mut rows = Vec::new();
            for q in &query {
                match nearest_neighbors(&emb, q, k as usize) {
                    Ok(list) => {
                        for (rank, (w, c)) in list.iter().enumerate() {
                            writeln!(tsv, "{q}\t{}\t{w}\t{c:.6}", rank + 1).unwrap();
                            rows.push(vec![q.clone(), (rank + 1).to_string(), w.clone(), format!("{c:.4}")]);
                        }
                    }
                    Err(Error::NotFound(_)) => {
                        log::warn!("no vector for '{q}'");
                        writeln!(tsv, "{q}\toov").unwrap();
                        rows.push(vec![q.clone(), "-".into(), "(no vector)".into(), String::new()]);
                    }
                    Err(e) => return Err(e.into()),
                }
            }
            emit_report(&common, &tsv, render_table(&["query", "rank", "neighbor", "cosine"], &rows))
        }
        EvalCommand::Pairs { common, file } => {
            let emb = load_embeddings(&common.emb)?;
            let text = fs::read_to_string(&file).map_err(|e| Error::io(&file, e))?;
            let pairs = parse_pairs(&text, &file.display().to_string())?;
            let report = pair_similarity_report(&emb, &pairs)?;
            let mut tsv = String::from("word_a\tword_b\tcosine\n");
            let mut rows = Vec::new();
            for r in &report.rows {
                writeln!(tsv, "{}\t{}\t{:.6}", r.a, r.b, r.cosine).unwrap();
                rows.push(vec![r.a.clone(), r.b.clone(), format!("{:.4}", r.cosine)]);
            }
            for (a, b) in &report.oov_pairs {
                writeln!(tsv, "{a}\t{b}\toov").unwrap();
                rows.push(vec![a.clone(), b.clone(), "oov".into()]);
            }
            writeln!(tsv, "average\t\t{:.6}", report.average).unwrap();
            let mut table = render_table(&["word_a", "word_b", "cosine"], &rows);
            writeln!(table, "average over {} pairs: {:.4}", report.rows.len(), report.average).unwrap();
            emit_report(&common, &tsv, table)
        }
        EvalCommand::Wordsim { common, file } => {
            let emb = load_embeddings(&common.emb)?;
            let data = WordSimDataset::load(&file)?;
            let result = evaluate_wordsim(&emb, &data)?;
            let mut tsv = String::from("word_a\tword_b\tgold\tcosine\n");
            let mut rows = Vec::new();
            for (a, b, gold, cos) in &result.rows {
                writeln!(tsv, "{a}\t{b}\t{gold}\t{cos:.6}").unwrap();
                rows.push(vec![a.clone(), b.clone(), gold.to_string(), format!("{cos:.4}")]);
            }
            for (a, b) in &result.oov_pairs {
                writeln!(tsv, "{a}\t{b}\t\toov").unwrap();
            }
            writeln!(tsv, "spearman\t{}", result.rho).unwrap();
            let mut table = render_table(&["word_a", "word_b", "gold", "cosine"], &rows);
            writeln!(
                table,
                "{} pairs scored, {} skipped as out of vocabulary",
                result.rows.len(),
                result.oov_pairs.len()
            )
            .unwrap();
            writeln!(table, "spearman\t{}", result.rho).unwrap();
            emit_report(&common, &tsv, table)
        }
    }
}

fn export(args: &ExportArgs) -> CliResult {
    let emb = load_embeddings(&args.emb)?;
    let words: Vec<String> = match &args.words {
        Some(path) => fs::read_to_string(path)
            .map_err(|e| Error::io(path, e))?
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty())
            .map(str::to_owned)
            .collect(),
        None => {
            let n = args.top.unwrap_or(emb.len()).min(emb.len());
            emb.words()[..n].to_vec()
        }
    };
    let report = export_tsv(&emb, &words, &args.out)?;
    for w in &report.skipped {
        log::warn!("skipped '{w}': no vector");
    }
    for w in &report.duplicates {
        log::warn!("skipped duplicate '{w}'");
    }
    log::info!("exported {} vectors to {}", report.written.len(), args.out.display());
    Ok(())
}
