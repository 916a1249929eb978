use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;

use aco_tagger::aco::{aco_decode, derive_sentence_seed, DecoderConfig};
use aco_tagger::corpus::{read_corpus, read_raw_sentences, write_corpus, Corpus, Sentence};
use aco_tagger::error::TaggerError;
use aco_tagger::eval::{compare, score, EvalReport, SentencePrediction};
use aco_tagger::model::{format_probability, HmmModel, OovMode, Validation};
use aco_tagger::synth::{generate_synthetic, sample_random_model};
use aco_tagger::trellis::build_trellis;
use aco_tagger::viterbi::viterbi_decode;

/// Exit code 2: bad flags, bad paths, validation failures.
/// Exit code 1: runtime failures while doing the work.
enum CliError {
    Usage(String),
    Runtime(anyhow::Error),
}

impl From<TaggerError> for CliError {
    fn from(err: TaggerError) -> Self {
        match err {
            TaggerError::Config(_)
            | TaggerError::Domain(_)
            | TaggerError::Split(_)
            | TaggerError::UnknownTag { .. }
            | TaggerError::OracleCapacity { .. } => CliError::Usage(err.to_string()),
            other => CliError::Runtime(anyhow!(other)),
        }
    }
}

impl From<anyhow::Error> for CliError {
    fn from(err: anyhow::Error) -> Self {
        CliError::Runtime(err)
    }
}

type CliResult<T> = Result<T, CliError>;

#[derive(Parser)]
#[command(
    name = "aco-tagger",
    version,
    about = "Part-of-speech tagging with ant colony optimization over an HMM trellis"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train an HMM from a tagged corpus and write the model file
    Train(TrainArgs),
    /// Tag sentences with the ACO or Viterbi decoder (corpus-format output)
    Tag(TagArgs),
    /// Evaluate one decoder against a gold test corpus
    Eval(EvalArgs),
    /// Run both decoders on the same test corpus and report side by side
    Compare(CompareArgs),
    /// Generate a synthetic corpus from a model, or from a sampled random model
    Synth(SynthArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum DecoderKind {
    Aco,
    Viterbi,
}

impl DecoderKind {
    fn name(self) -> &'static str {
        match self {
            DecoderKind::Aco => "aco",
            DecoderKind::Viterbi => "viterbi",
        }
    }
}

fn parse_oov(raw: &str) -> Result<OovMode, String> {
    raw.parse().map_err(|e: TaggerError| e.to_string())
}

#[derive(Args)]
struct DecoderFlags {
    /// Number of ant generations [default: 3]
    #[arg(long)]
    generations: Option<usize>,
    /// Ants per generation [default: 20]
    #[arg(long)]
    ants: Option<usize>,
    /// Pheromone weight exponent alpha [default: 0.9]
    #[arg(long)]
    alpha: Option<f64>,
    /// Heuristic weight exponent beta [default: 0.9]
    #[arg(long)]
    beta: Option<f64>,
    /// Pheromone evaporation rate rho, in [0,1] [default: 0.95]
    #[arg(long)]
    rho: Option<f64>,
    /// Pheromone deposit quantity Q [default: 10]
    #[arg(long)]
    quantity: Option<f64>,
    /// Master random seed [default: 0]
    #[arg(long)]
    seed: Option<u64>,
    /// key=value config file (keys: generations, ants, alpha, beta, rho, quantity, seed)
    #[arg(long)]
    config: Option<PathBuf>,
}

impl DecoderFlags {
    /// Defaults, overridden by the config file, overridden by explicit flags.
    fn resolve(&self) -> CliResult<DecoderConfig> {
        let mut config = DecoderConfig::default();
        if let Some(path) = &self.config {
            apply_config_file(&mut config, path)?;
        }
        if let Some(v) = self.generations {
            config.generations = v;
        }
        if let Some(v) = self.ants {
            config.ants = v;
        }
        if let Some(v) = self.alpha {
            config.alpha = v;
        }
        if let Some(v) = self.beta {
            config.beta = v;
        }
        if let Some(v) = self.rho {
            config.rho = v;
        }
        if let Some(v) = self.quantity {
            config.quantity = v;
        }
        if let Some(v) = self.seed {
            config.seed = v;
        }
        config.validate()?;
        Ok(config)
    }
}

fn apply_config_file(config: &mut DecoderConfig, path: &Path) -> CliResult<()> {
    let text = read_existing(path)?;
    for (idx, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            CliError::Usage(format!(
                "{}:{}: expected key=value, found '{line}'",
                path.display(),
                idx + 1
            ))
        })?;
        let bad = |what: &str| {
            CliError::Usage(format!(
                "{}:{}: invalid {what} value '{value}'",
                path.display(),
                idx + 1
            ))
        };
        match key.trim() {
            "generations" => {
                config.generations = value.trim().parse().map_err(|_| bad("generations"))?
            }
            "ants" => config.ants = value.trim().parse().map_err(|_| bad("ants"))?,
            "alpha" => config.alpha = value.trim().parse().map_err(|_| bad("alpha"))?,
            "beta" => config.beta = value.trim().parse().map_err(|_| bad("beta"))?,
            "rho" => config.rho = value.trim().parse().map_err(|_| bad("rho"))?,
            "quantity" => config.quantity = value.trim().parse().map_err(|_| bad("quantity"))?,
            "seed" => config.seed = value.trim().parse().map_err(|_| bad("seed"))?,
            other => {
                return Err(CliError::Usage(format!(
                    "{}:{}: unknown config key '{other}'",
                    path.display(),
                    idx + 1
                )))
            }
        }
    }
    Ok(())
}

#[derive(Args)]
struct ModelFlags {
    /// Trained model file
    #[arg(long)]
    model: PathBuf,
    /// Accept models whose probability rows do not sum to one
    #[arg(long)]
    no_strict_rows: bool,
    /// Override the model's stored OOV mode (uniform | spread:<k>)
    #[arg(long, value_parser = parse_oov)]
    oov: Option<OovMode>,
}

impl ModelFlags {
    fn load(&self) -> CliResult<(HmmModel, OovMode)> {
        let text = read_existing(&self.model)?;
        let validation = if self.no_strict_rows {
            Validation::Relaxed
        } else {
            Validation::Strict
        };
        let model = HmmModel::read_from(text.as_bytes(), validation)?;
        let oov = self.oov.unwrap_or(model.oov_mode());
        Ok((model, oov))
    }
}

#[derive(Args)]
struct TrainArgs {
    /// Tagged training corpus
    #[arg(long)]
    corpus: PathBuf,
    /// Output model file
    #[arg(long)]
    out: PathBuf,
    /// OOV emission policy recorded in the model (uniform | spread:<k>)
    #[arg(long, default_value = "uniform", value_parser = parse_oov)]
    oov: OovMode,
}

#[derive(Args)]
struct TagArgs {
    #[command(flatten)]
    model: ModelFlags,
    /// Input: corpus-format file (TAB-separated) or raw text, one sentence
    /// per line with whitespace-separated tokens
    #[arg(long = "in")]
    input: PathBuf,
    /// Output file [default: stdout]
    #[arg(long)]
    out: Option<PathBuf>,
    /// Decoder to use
    #[arg(long, value_enum, default_value_t = DecoderKind::Aco)]
    decoder: DecoderKind,
    #[command(flatten)]
    flags: DecoderFlags,
    /// Worker threads for sentence-level parallelism [default: all cores]
    #[arg(long)]
    threads: Option<usize>,
    /// Dump every trellis edge to stderr as t<TAB>from<TAB>to<TAB>D
    #[arg(long)]
    dump_trellis: bool,
}

#[derive(Args)]
struct EvalArgs {
    #[command(flatten)]
    model: ModelFlags,
    /// Gold test corpus
    #[arg(long)]
    test: PathBuf,
    /// Decoder to evaluate
    #[arg(long, value_enum, default_value_t = DecoderKind::Aco)]
    decoder: DecoderKind,
    #[command(flatten)]
    flags: DecoderFlags,
    /// Write the full report (human table + machine lines) to this path
    #[arg(long)]
    report: Option<PathBuf>,
    /// Worker threads for sentence-level parallelism [default: all cores]
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Args)]
struct CompareArgs {
    #[command(flatten)]
    model: ModelFlags,
    /// Gold test corpus
    #[arg(long)]
    test: PathBuf,
    #[command(flatten)]
    flags: DecoderFlags,
    /// Write the full report (tables, machine lines, per-sentence rows)
    #[arg(long)]
    report: Option<PathBuf>,
    /// Worker threads for sentence-level parallelism [default: all cores]
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Args)]
struct SynthArgs {
    /// Sample from this model file
    #[arg(long, conflicts_with = "random")]
    model: Option<PathBuf>,
    /// Sample a fresh random model instead: --random tags=T vocab=V
    /// (the model is written next to the corpus as <out>.model)
    #[arg(long, num_args = 2, value_names = ["tags=T", "vocab=V"])]
    random: Option<Vec<String>>,
    /// Accept models whose probability rows do not sum to one
    #[arg(long)]
    no_strict_rows: bool,
    /// Number of sentences to generate
    #[arg(long)]
    sentences: usize,
    /// Maximum sentence length (lengths are uniform in [1, max-len])
    #[arg(long, default_value_t = 20)]
    max_len: usize,
    /// Random seed
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output corpus file
    #[arg(long)]
    out: PathBuf,
    /// OOV mode recorded in a freshly sampled model (uniform | spread:<k>)
    #[arg(long, default_value = "uniform", value_parser = parse_oov)]
    oov: OovMode,
}

fn read_existing(path: &Path) -> CliResult<String> {
    if !path.is_file() {
        return Err(CliError::Usage(format!(
            "file not found: {}",
            path.display()
        )));
    }
    Ok(fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?)
}

fn create_output(path: &Path) -> CliResult<BufWriter<File>> {
    let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    Ok(BufWriter::new(file))
}

fn setup_threads(threads: Option<usize>) -> CliResult<()> {
    if let Some(k) = threads {
        if k == 0 {
            return Err(CliError::Usage("--threads must be >= 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build_global()
            .context("initializing thread pool")?;
    }
    Ok(())
}

struct DecodedSentence {
    tags: Vec<String>,
    feasible: bool,
    dump: Option<String>,
}

/// Decode `sentences` in parallel with deterministic per-sentence seeds;
/// results come back in input order.
fn decode_sentences(
    model: &HmmModel,
    sentences: &[Sentence],
    decoder: DecoderKind,
    config: &DecoderConfig,
    oov: OovMode,
    dump: bool,
) -> CliResult<Vec<DecodedSentence>> {
    let decoded = sentences
        .par_iter()
        .enumerate()
        .map(
            |(index, sentence)| -> Result<DecodedSentence, TaggerError> {
                let trellis = build_trellis(model, sentence, oov)?;
                let dump = if dump {
                    let mut bytes = Vec::new();
                    trellis.dump(&mut bytes)?;
                    Some(String::from_utf8(bytes).expect("dump is UTF-8"))
                } else {
                    None
                };
                let (tags, feasible) = match decoder {
                    DecoderKind::Aco => {
                        let sentence_config = DecoderConfig {
                            seed: derive_sentence_seed(config.seed, index),
                            ..*config
                        };
                        let result = aco_decode(&trellis, &sentence_config)?;
                        (result.tags, result.feasible)
                    }
                    DecoderKind::Viterbi => {
                        let result = viterbi_decode(model, sentence, oov)?;
                        (result.tags, result.feasible)
                    }
                };
                Ok(DecodedSentence {
                    tags: tags
                        .iter()
                        .map(|&t| model.tag_name(t).to_string())
                        .collect(),
                    feasible,
                    dump,
                })
            },
        )
        .collect::<Result<Vec<_>, _>>()?;
    Ok(decoded)
}

fn cmd_train(args: &TrainArgs) -> CliResult<()> {
    let text = read_existing(&args.corpus)?;
    let corpus = read_corpus(text.as_bytes())?;
    let model = HmmModel::train(&corpus)?.with_oov(args.oov);
    let mut out = create_output(&args.out)?;
    model.write_to(&mut out)?;
    out.flush().context("flushing model file")?;
    eprintln!(
        "trained model: {} tags, {} vocabulary entries, {} sentences",
        model.num_tags(),
        model.vocabulary_len(),
        corpus.sentences.len()
    );
    Ok(())
}

fn cmd_tag(args: &TagArgs) -> CliResult<()> {
    setup_threads(args.threads)?;
    let (model, oov) = args.model.load()?;
    let config = args.flags.resolve()?;

    let text = read_existing(&args.input)?;
    let looks_tagged = text.lines().any(|line| {
        let line = line.trim_end_matches('\r');
        !line.is_empty() && line.contains('\t')
    });
    let sentences = if looks_tagged {
        read_corpus(text.as_bytes())?.sentences
    } else {
        read_raw_sentences(text.as_bytes())?
    };

    let decoded = decode_sentences(
        &model,
        &sentences,
        args.decoder,
        &config,
        oov,
        args.dump_trellis,
    )?;

    let mut output: Box<dyn Write> = match &args.out {
        Some(path) => Box::new(create_output(path)?),
        None => Box::new(std::io::stdout().lock()),
    };
    for (i, (sentence, result)) in sentences.iter().zip(&decoded).enumerate() {
        if i > 0 {
            writeln!(output).context("writing output")?;
        }
        if !result.feasible {
            writeln!(output, "# infeasible").context("writing output")?;
        }
        for (token, tag) in sentence.tokens.iter().zip(&result.tags) {
            writeln!(output, "{}\t{}", token.surface, tag).context("writing output")?;
        }
    }
    output.flush().context("flushing output")?;

    if args.dump_trellis {
        let mut err = std::io::stderr().lock();
        for (i, result) in decoded.iter().enumerate() {
            if let Some(dump) = &result.dump {
                let _ = writeln!(err, "# sentence {i}");
                let _ = err.write_all(dump.as_bytes());
            }
        }
    }
    Ok(())
}

fn check_gold_tags(corpus: &Corpus, model: &HmmModel) -> CliResult<()> {
    for sentence in &corpus.sentences {
        for token in &sentence.tokens {
            if let Some(tag) = token.tag.as_deref() {
                if model.tag_index(tag).is_none() {
                    return Err(CliError::Usage(format!(
                        "test corpus uses tag '{tag}' absent from the model's tagset"
                    )));
                }
            }
        }
    }
    Ok(())
}

fn cmd_eval(args: &EvalArgs) -> CliResult<()> {
    setup_threads(args.threads)?;
    let (model, oov) = args.model.load()?;
    let config = args.flags.resolve()?;
    let gold = read_corpus(read_existing(&args.test)?.as_bytes())?;
    check_gold_tags(&gold, &model)?;

    let decoded = decode_sentences(&model, &gold.sentences, args.decoder, &config, oov, false)?;
    let predictions: Vec<SentencePrediction> = decoded
        .into_iter()
        .map(|d| SentencePrediction {
            tags: d.tags,
            feasible: d.feasible,
        })
        .collect();
    let report = score(&gold, &predictions)?;

    let name = args.decoder.name();
    println!("{name}={}", format_probability(report.token_accuracy()));
    if let Some(path) = &args.report {
        let mut out = create_output(path)?;
        write_eval_report(&mut out, &[(name, &report)], None)?;
        out.flush().context("flushing report")?;
    }
    Ok(())
}

fn cmd_compare(args: &CompareArgs) -> CliResult<()> {
    setup_threads(args.threads)?;
    let (model, oov) = args.model.load()?;
    let config = args.flags.resolve()?;
    let gold = read_corpus(read_existing(&args.test)?.as_bytes())?;
    check_gold_tags(&gold, &model)?;

    let result = compare(&gold, &model, &config, oov)?;
    println!(
        "aco={} viterbi={}",
        format_probability(result.aco.token_accuracy()),
        format_probability(result.viterbi.token_accuracy())
    );
    if let Some(path) = &args.report {
        let mut out = create_output(path)?;
        write_eval_report(
            &mut out,
            &[("aco", &result.aco), ("viterbi", &result.viterbi)],
            Some(&result.per_sentence),
        )?;
        out.flush().context("flushing report")?;
    }
    Ok(())
}

fn write_eval_report<W: Write>(
    sink: &mut W,
    reports: &[(&str, &EvalReport)],
    per_sentence: Option<&[aco_tagger::eval::PerSentenceRow]>,
) -> CliResult<()> {
    for (name, report) in reports {
        let title = format!("{name} decoder");
        sink.write_all(report.human_table(&title).as_bytes())
            .context("writing report")?;
        writeln!(sink).context("writing report")?;
    }
    for (name, report) in reports {
        sink.write_all(report.machine_lines(name).as_bytes())
            .context("writing report")?;
    }
    if let Some(rows) = per_sentence {
        for row in rows {
            let cost = if row.aco_cost.is_finite() {
                format!("{}", row.aco_cost)
            } else {
                "inf".to_string()
            };
            writeln!(
                sink,
                "persentence\t{}\t{}\t{}\t{}\t{}",
                row.index, row.length, cost, row.aco_correct, row.viterbi_correct
            )
            .context("writing report")?;
        }
    }
    Ok(())
}

fn parse_random_spec(spec: &[String]) -> CliResult<(usize, usize)> {
    let mut tags = None;
    let mut vocab = None;
    for part in spec {
        let (key, value) = part.split_once('=').ok_or_else(|| {
            CliError::Usage(format!("--random expects key=value pairs, found '{part}'"))
        })?;
        let parsed: usize = value
            .parse()
            .map_err(|_| CliError::Usage(format!("invalid --random value '{part}'")))?;
        match key {
            "tags" => tags = Some(parsed),
            "vocab" => vocab = Some(parsed),
            other => {
                return Err(CliError::Usage(format!(
                    "unknown --random key '{other}' (expected tags= and vocab=)"
                )))
            }
        }
    }
    match (tags, vocab) {
        (Some(t), Some(v)) => Ok((t, v)),
        _ => Err(CliError::Usage(
            "--random needs both tags=T and vocab=V".into(),
        )),
    }
}

fn cmd_synth(args: &SynthArgs) -> CliResult<()> {
    if args.sentences == 0 {
        return Err(CliError::Usage("--sentences must be >= 1".into()));
    }
    if args.max_len == 0 {
        return Err(CliError::Usage("--max-len must be >= 1".into()));
    }
    let model = match (&args.model, &args.random) {
        (Some(path), None) => {
            let validation = if args.no_strict_rows {
                Validation::Relaxed
            } else {
                Validation::Strict
            };
            HmmModel::read_from(read_existing(path)?.as_bytes(), validation)?
        }
        (None, Some(spec)) => {
            let (tags, vocab) = parse_random_spec(spec)?;
            if tags == 0 || vocab == 0 {
                return Err(CliError::Usage(
                    "--random tags and vocab must be >= 1".into(),
                ));
            }
            let model = sample_random_model(tags, vocab, args.seed)?.with_oov(args.oov);
            let model_path = {
                let mut os = args.out.clone().into_os_string();
                os.push(".model");
                PathBuf::from(os)
            };
            let mut out = create_output(&model_path)?;
            model.write_to(&mut out)?;
            out.flush().context("flushing model file")?;
            eprintln!("wrote sampled model to {}", model_path.display());
            model
        }
        _ => {
            return Err(CliError::Usage(
                "exactly one of --model or --random is required".into(),
            ))
        }
    };

    let corpus = generate_synthetic(&model, args.sentences, args.max_len, args.seed)?;
    let mut out = create_output(&args.out)?;
    write_corpus(&corpus, &mut out)?;
    out.flush().context("flushing corpus")?;
    eprintln!(
        "wrote {} sentences ({} tokens) to {}",
        corpus.sentences.len(),
        corpus.token_count(),
        args.out.display()
    );
    Ok(())
}

fn run(cli: &Cli) -> CliResult<()> {
    match &cli.command {
        Command::Train(args) => cmd_train(args),
        Command::Tag(args) => cmd_tag(args),
        Command::Eval(args) => cmd_eval(args),
        Command::Compare(args) => cmd_compare(args),
        Command::Synth(args) => cmd_synth(args),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(message)) => {
            eprintln!("error: {message}");
            ExitCode::from(2)
        }
        Err(CliError::Runtime(err)) => {
            eprintln!("error: {err:#}");
            ExitCode::from(1)
        }
    }
}
