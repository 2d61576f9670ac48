//! Command-line surface for the coverage sampler: one-pass estimation,
//! distinct counting, an exact two-pass oracle, and the replicated
//! experiment harness.
//!
//! Exit codes: 0 success, 1 I/O or configuration error, 2 retention
//! failure (the halving-removed-nothing dead end), 3 empty sample.

use std::fmt::Display;
use std::fs::{self, File};
use std::io::{self, BufRead, BufReader, Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use covstream::experiment::{
    format_sig10, rows_to_csv, run_experiment, summarize, ExperimentConfig, SummaryRow,
};
use covstream::ingest::{IngestError, LineTokens, NormalizationPolicy, TextTokens};
use covstream::plot::{self, PlotKind};
use covstream::rng::RNG_ALGORITHM;
use covstream::{
    estimate_coverage, true_coverage, DenominatorPolicy, DistinctCounter, RetentionFailure,
    Sampler, SamplerConfig, Token,
};

/// Bundled fallback corpus for `simulate` (a deterministically generated
/// text with novel-like word statistics; see corpus/README.md).
const BUNDLED_CORPUS: &str = include_str!("../../../corpus/zipf-137k.txt");
const BUNDLED_CORPUS_NAME: &str = "corpus/zipf-137k.txt (bundled)";

const DEFAULT_SIZES: [usize; 5] = [100, 250, 500, 1000, 2000];
const DEFAULT_REPS: u32 = 1000;
const DEFAULT_BASE_SEED: u64 = 42;
const DEFAULT_CSV: &str = "experiment.csv";

#[derive(Parser)]
#[command(
    name = "covstream",
    version,
    about = "Streaming coverage estimation with a fixed-size buffer",
    long_about = "Draws a uniform random sample from a stream of unknown length using a \
                  fixed-size buffer with probabilistic halving, then estimates sample \
                  coverage from the singleton count. All randomness is seeded ChaCha8, so \
                  every reported number is reproducible from the echoed configuration."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Stream input once and print the coverage estimate
    Estimate(EstimateArgs),
    /// Stream input once and print the distinct-element estimate
    Distinct(DistinctArgs),
    /// Two-pass run: estimate, exact true coverage, and their difference
    /// (not streaming; stdin is spilled to a temporary file)
    Oracle(EstimateArgs),
    /// Replicated experiment over a ladder of buffer sizes, with CSV and
    /// optional SVG chart output
    Simulate(SimulateArgs),
}

#[derive(Args)]
struct StreamArgs {
    /// Input path, or '-' for standard input
    #[arg(long, default_value = "-")]
    input: String,
    /// Input is one pre-tokenized label per line (normalization is skipped)
    #[arg(long)]
    pretokenized: bool,
    /// Buffer capacity (maximum retained entries)
    #[arg(long)]
    capacity: usize,
    /// RNG seed; generated and printed to stderr when omitted
    #[arg(long)]
    seed: Option<u64>,
    /// Keep original letter case
    #[arg(long)]
    no_lowercase: bool,
    /// Keep leading/trailing punctuation on tokens
    #[arg(long)]
    keep_punctuation: bool,
    /// Skip Unicode NFC normalization
    #[arg(long)]
    no_nfc: bool,
}

impl StreamArgs {
    fn policy(&self) -> NormalizationPolicy {
        NormalizationPolicy {
            lowercase: !self.no_lowercase,
            strip_punctuation: !self.keep_punctuation,
            unicode_nfc: !self.no_nfc,
        }
    }

    fn normalization_note(&self) -> String {
        if self.pretokenized {
            "pretokenized (labels verbatim)".to_string()
        } else {
            self.policy().describe()
        }
    }
}

#[derive(Args)]
struct EstimateArgs {
    #[command(flatten)]
    stream: StreamArgs,
    /// Denominator for the estimate
    #[arg(long, value_enum, default_value_t = DenomArg::Realized)]
    denominator: DenomArg,
}

#[derive(Args)]
struct DistinctArgs {
    #[command(flatten)]
    stream: StreamArgs,
}

#[derive(Args)]
struct SimulateArgs {
    /// Flat key=value config file; command-line flags take precedence
    #[arg(long)]
    config: Option<PathBuf>,
    /// Corpus path or '-' for stdin [default: the bundled corpus]
    #[arg(long)]
    input: Option<String>,
    /// Input is one pre-tokenized label per line
    #[arg(long)]
    pretokenized: bool,
    /// Comma-separated buffer sizes, strictly increasing [default: 100,250,500,1000,2000]
    #[arg(long, value_delimiter = ',')]
    sizes: Option<Vec<usize>>,
    /// Replications per buffer size [default: 1000]
    #[arg(long)]
    reps: Option<u32>,
    /// Base seed; replication seeds are derived from it [default: 42]
    #[arg(long)]
    seed: Option<u64>,
    /// Denominator for the estimates [default: realized]
    #[arg(long, value_enum)]
    denominator: Option<DenomArg>,
    /// Where to write the per-replication CSV [default: experiment.csv]
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Where to write an SVG chart of the summary
    #[arg(long)]
    plot: Option<PathBuf>,
    /// Chart flavor [default: error_bars]
    #[arg(long, value_enum)]
    plot_kind: Option<PlotKindArg>,
    /// Keep original letter case
    #[arg(long)]
    no_lowercase: bool,
    /// Keep leading/trailing punctuation on tokens
    #[arg(long)]
    keep_punctuation: bool,
    /// Skip Unicode NFC normalization
    #[arg(long)]
    no_nfc: bool,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum DenomArg {
    /// Divide by the realized sample size
    Realized,
    /// Divide by the buffer capacity
    Capacity,
}

impl From<DenomArg> for DenominatorPolicy {
    fn from(arg: DenomArg) -> Self {
        match arg {
            DenomArg::Realized => Self::RealizedSize,
            DenomArg::Capacity => Self::Capacity,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum PlotKindArg {
    /// Mean estimate and mean true coverage per size
    Scatter,
    /// Mean difference with ±1 standard deviation bars
    #[value(name = "error_bars")]
    ErrorBars,
}

impl From<PlotKindArg> for PlotKind {
    fn from(arg: PlotKindArg) -> Self {
        match arg {
            PlotKindArg::Scatter => Self::Scatter,
            PlotKindArg::ErrorBars => Self::ErrorBars,
        }
    }
}

enum CliError {
    Config(String),
    Io(String),
    Retention(RetentionFailure),
    EmptySample,
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            Self::Config(_) | Self::Io(_) => 1,
            Self::Retention(_) => 2,
            Self::EmptySample => 3,
        }
    }

    fn message(&self) -> String {
        match self {
            Self::Config(msg) | Self::Io(msg) => msg.clone(),
            Self::Retention(failure) => {
                format!("{failure}; retry with a larger --capacity or another --seed")
            }
            Self::EmptySample => {
                "the final sample is empty, so the realized-size estimate is undefined \
                 (try --denominator capacity, a larger --capacity, or another --seed)"
                    .to_string()
            }
        }
    }
}

impl From<io::Error> for CliError {
    fn from(err: io::Error) -> Self {
        Self::Io(err.to_string())
    }
}

impl From<IngestError> for CliError {
    fn from(err: IngestError) -> Self {
        Self::Io(err.to_string())
    }
}

impl From<RetentionFailure> for CliError {
    fn from(failure: RetentionFailure) -> Self {
        Self::Retention(failure)
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            use clap::error::ErrorKind;
            let code = match err.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = err.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Estimate(args) => cmd_estimate(args),
        Command::Distinct(args) => cmd_distinct(args),
        Command::Oracle(args) => cmd_oracle(args),
        Command::Simulate(args) => cmd_simulate(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("covstream: {}", err.message());
            ExitCode::from(err.exit_code())
        }
    }
}

fn resolve_seed(seed: Option<u64>) -> u64 {
    match seed {
        Some(seed) => seed,
        None => {
            let seed: u64 = rand::random();
            eprintln!("seed {seed} (generated; pass --seed {seed} to reproduce)");
            seed
        }
    }
}

fn open_reader(input: &str) -> Result<Box<dyn BufRead>, CliError> {
    if input == "-" {
        Ok(Box::new(io::stdin().lock()))
    } else {
        let file =
            File::open(input).map_err(|err| CliError::Io(format!("cannot open {input}: {err}")))?;
        Ok(Box::new(BufReader::new(file)))
    }
}

fn token_stream(
    reader: Box<dyn BufRead>,
    pretokenized: bool,
    policy: NormalizationPolicy,
) -> Box<dyn Iterator<Item = Result<Token, IngestError>>> {
    if pretokenized {
        Box::new(LineTokens::new(reader))
    } else {
        Box::new(TextTokens::new(reader, policy))
    }
}

struct Report {
    lines: Vec<(String, String)>,
}

impl Report {
    fn new() -> Self {
        Self { lines: Vec::new() }
    }

    fn push(&mut self, key: &str, value: impl Display) -> &mut Self {
        self.lines.push((key.to_string(), value.to_string()));
        self
    }

    fn print(&self) -> Result<(), CliError> {
        let stdout = io::stdout();
        let mut out = stdout.lock();
        for (key, value) in &self.lines {
            writeln!(out, "{key:<19} {value}")?;
        }
        Ok(())
    }
}

fn echo_stream_config(report: &mut Report, args: &StreamArgs, seed: u64) {
    report
        .push("capacity", args.capacity)
        .push("seed", seed)
        .push("rng", RNG_ALGORITHM)
        .push("normalization", args.normalization_note())
        .push("input", &args.input);
}

fn cmd_estimate(args: EstimateArgs) -> Result<(), CliError> {
    let seed = resolve_seed(args.stream.seed);
    let mut sampler: Sampler<Token> = Sampler::new(SamplerConfig {
        capacity: args.stream.capacity,
        seed,
    })
    .map_err(|err| CliError::Config(err.to_string()))?;
    let tokens = token_stream(
        open_reader(&args.stream.input)?,
        args.stream.pretokenized,
        args.stream.policy(),
    );
    for token in tokens {
        sampler.observe(token?)?;
    }
    let peak = sampler.peak_len();
    let sample = sampler.finalize();
    let estimate =
        estimate_coverage(&sample, args.denominator.into()).map_err(|_| CliError::EmptySample)?;

    let mut report = Report::new();
    report
        .push("coverage_estimate", format_sig10(estimate.estimate))
        .push("singletons", estimate.singletons)
        .push("sample_size", sample.realized_size())
        .push("level", sample.level())
        .push("observed", sample.observed())
        .push(
            "denominator",
            format!("{} ({})", estimate.policy, estimate.denominator),
        )
        .push("peak_buffer", peak);
    echo_stream_config(&mut report, &args.stream, seed);
    report.print()
}

fn cmd_distinct(args: DistinctArgs) -> Result<(), CliError> {
    let seed = resolve_seed(args.stream.seed);
    let mut counter: DistinctCounter<Token> = DistinctCounter::new(SamplerConfig {
        capacity: args.stream.capacity,
        seed,
    })
    .map_err(|err| CliError::Config(err.to_string()))?;
    let tokens = token_stream(
        open_reader(&args.stream.input)?,
        args.stream.pretokenized,
        args.stream.policy(),
    );
    for token in tokens {
        counter.observe(token?)?;
    }

    let mut report = Report::new();
    report
        .push("distinct_estimate", counter.estimate())
        .push("level", counter.level())
        .push("buffer_entries", counter.len())
        .push("observed", counter.observed());
    echo_stream_config(&mut report, &args.stream, seed);
    report.print()
}

enum OracleSource {
    Path(String),
    Spilled(tempfile::NamedTempFile),
}

impl OracleSource {
    fn open(&self) -> Result<Box<dyn BufRead>, CliError> {
        match self {
            Self::Path(path) => open_reader(path),
            Self::Spilled(file) => {
                let reopened = file
                    .reopen()
                    .map_err(|err| CliError::Io(format!("cannot reread spooled input: {err}")))?;
                Ok(Box::new(BufReader::new(reopened)))
            }
        }
    }
}

fn cmd_oracle(args: EstimateArgs) -> Result<(), CliError> {
    let seed = resolve_seed(args.stream.seed);
    let source = if args.stream.input == "-" {
        let mut spill = tempfile::NamedTempFile::new()
            .map_err(|err| CliError::Io(format!("cannot create spill file: {err}")))?;
        io::copy(&mut io::stdin().lock(), spill.as_file_mut())
            .map_err(|err| CliError::Io(format!("cannot spool stdin: {err}")))?;
        OracleSource::Spilled(spill)
    } else {
        OracleSource::Path(args.stream.input.clone())
    };

    // Pass 1: sample.
    let mut sampler: Sampler<Token> = Sampler::new(SamplerConfig {
        capacity: args.stream.capacity,
        seed,
    })
    .map_err(|err| CliError::Config(err.to_string()))?;
    for token in token_stream(
        source.open()?,
        args.stream.pretokenized,
        args.stream.policy(),
    ) {
        sampler.observe(token?)?;
    }
    let sample = sampler.finalize();
    let estimate =
        estimate_coverage(&sample, args.denominator.into()).map_err(|_| CliError::EmptySample)?;

    // Pass 2: exact rescan.
    let mut read_error: Option<IngestError> = None;
    let second_pass = token_stream(
        source.open()?,
        args.stream.pretokenized,
        args.stream.policy(),
    )
    .map_while(|item| match item {
        Ok(token) => Some(token),
        Err(err) => {
            read_error = Some(err);
            None
        }
    });
    let truth = true_coverage(second_pass, &sample).map_err(|err| CliError::Io(err.to_string()))?;
    if let Some(err) = read_error {
        return Err(err.into());
    }

    let mut report = Report::new();
    report
        .push("coverage_estimate", format_sig10(estimate.estimate))
        .push("true_coverage", format_sig10(truth.value()))
        .push(
            "difference",
            format_sig10(estimate.estimate - truth.value()),
        )
        .push("covered_positions", truth.covered_count)
        .push("singletons", estimate.singletons)
        .push("sample_size", sample.realized_size())
        .push("level", sample.level())
        .push("observed", sample.observed())
        .push(
            "denominator",
            format!("{} ({})", estimate.policy, estimate.denominator),
        );
    echo_stream_config(&mut report, &args.stream, seed);
    report.print()
}

/// `simulate` settings merged from defaults, an optional config file, and
/// command-line flags (flags win).
struct SimulateSettings {
    sizes: Vec<usize>,
    reps: u32,
    seed: u64,
    policy: DenominatorPolicy,
    input: Option<String>,
    pretokenized: bool,
    normalization: NormalizationPolicy,
    csv: PathBuf,
    plot: Option<PathBuf>,
    plot_kind: PlotKind,
}

#[derive(Default)]
struct PartialSettings {
    sizes: Option<Vec<usize>>,
    reps: Option<u32>,
    seed: Option<u64>,
    policy: Option<DenominatorPolicy>,
    input: Option<String>,
    pretokenized: Option<bool>,
    lowercase: Option<bool>,
    strip_punctuation: Option<bool>,
    unicode_nfc: Option<bool>,
    csv: Option<PathBuf>,
    plot: Option<PathBuf>,
    plot_kind: Option<PlotKind>,
}

fn parse_config_file(path: &Path) -> Result<PartialSettings, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|err| CliError::Io(format!("cannot read {}: {err}", path.display())))?;
    let mut settings = PartialSettings::default();
    for (index, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let bad =
            |what: &str| CliError::Config(format!("{}:{}: {what}", path.display(), index + 1));
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| bad("expected key=value"))?;
        let (key, value) = (key.trim(), value.trim());
        match key {
            "sizes" => {
                let sizes = value
                    .split(',')
                    .map(|part| part.trim().parse::<usize>())
                    .collect::<Result<Vec<_>, _>>()
                    .map_err(|_| bad("sizes must be comma-separated integers"))?;
                settings.sizes = Some(sizes);
            }
            "reps" => {
                settings.reps = Some(value.parse().map_err(|_| bad("reps must be an integer"))?)
            }
            "seed" => settings.seed = Some(value.parse().map_err(|_| bad("seed must be a u64"))?),
            "denominator" => {
                settings.policy =
                    Some(DenominatorPolicy::from_str(value).map_err(|err| bad(&err.to_string()))?)
            }
            "input" => settings.input = Some(value.to_string()),
            "pretokenized" => {
                settings.pretokenized =
                    Some(parse_bool(value).ok_or_else(|| bad("expected true or false"))?)
            }
            "lowercase" => {
                settings.lowercase =
                    Some(parse_bool(value).ok_or_else(|| bad("expected true or false"))?)
            }
            "strip_punctuation" => {
                settings.strip_punctuation =
                    Some(parse_bool(value).ok_or_else(|| bad("expected true or false"))?)
            }
            "unicode_nfc" => {
                settings.unicode_nfc =
                    Some(parse_bool(value).ok_or_else(|| bad("expected true or false"))?)
            }
            "csv" => settings.csv = Some(PathBuf::from(value)),
            "plot" => settings.plot = Some(PathBuf::from(value)),
            "plot_kind" => {
                settings.plot_kind =
                    Some(PlotKind::from_str(value).map_err(|err| bad(&err.to_string()))?)
            }
            other => return Err(bad(&format!("unknown key {other:?}"))),
        }
    }
    Ok(settings)
}

fn parse_bool(value: &str) -> Option<bool> {
    match value {
        "true" => Some(true),
        "false" => Some(false),
        _ => None,
    }
}

fn merge_settings(args: &SimulateArgs) -> Result<SimulateSettings, CliError> {
    let file = match &args.config {
        Some(path) => parse_config_file(path)?,
        None => PartialSettings::default(),
    };
    Ok(SimulateSettings {
        sizes: args
            .sizes
            .clone()
            .or(file.sizes)
            .unwrap_or_else(|| DEFAULT_SIZES.to_vec()),
        reps: args.reps.or(file.reps).unwrap_or(DEFAULT_REPS),
        seed: args.seed.or(file.seed).unwrap_or(DEFAULT_BASE_SEED),
        policy: args
            .denominator
            .map(DenominatorPolicy::from)
            .or(file.policy)
            .unwrap_or(DenominatorPolicy::RealizedSize),
        input: args.input.clone().or(file.input),
        pretokenized: args.pretokenized || file.pretokenized.unwrap_or(false),
        normalization: NormalizationPolicy {
            lowercase: !args.no_lowercase && file.lowercase.unwrap_or(true),
            strip_punctuation: !args.keep_punctuation && file.strip_punctuation.unwrap_or(true),
            unicode_nfc: !args.no_nfc && file.unicode_nfc.unwrap_or(true),
        },
        csv: args
            .csv
            .clone()
            .or(file.csv)
            .unwrap_or_else(|| PathBuf::from(DEFAULT_CSV)),
        plot: args.plot.clone().or(file.plot),
        plot_kind: args
            .plot_kind
            .map(PlotKind::from)
            .or(file.plot_kind)
            .unwrap_or(PlotKind::ErrorBars),
    })
}

fn load_corpus(settings: &SimulateSettings) -> Result<(Vec<Token>, String), CliError> {
    let (text, name): (String, String) = match settings.input.as_deref() {
        None => (BUNDLED_CORPUS.to_string(), BUNDLED_CORPUS_NAME.to_string()),
        Some("-") => {
            let mut text = String::new();
            io::stdin()
                .lock()
                .read_to_string(&mut text)
                .map_err(|err| CliError::Io(format!("cannot read stdin: {err}")))?;
            (text, "-".to_string())
        }
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|err| CliError::Io(format!("cannot read {path}: {err}")))?;
            (text, path.to_string())
        }
    };
    let tokens = if settings.pretokenized {
        LineTokens::new(text.as_bytes())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|err| CliError::Io(err.to_string()))?
    } else {
        covstream::tokenize_str(&text, settings.normalization)
    };
    Ok((tokens, name))
}

fn summary_table(summary: &[SummaryRow]) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "{:<12} {:>9} {:>8} {:>16} {:>16} {:>16} {:>18}\n",
        "buffer_size",
        "successes",
        "failures",
        "mean_difference",
        "sd_difference",
        "mean_estimate",
        "mean_true_coverage"
    ));
    let cell = |value: Option<f64>| match value {
        Some(v) => format_sig10(v),
        None => "-".to_string(),
    };
    for row in summary {
        out.push_str(&format!(
            "{:<12} {:>9} {:>8} {:>16} {:>16} {:>16} {:>18}\n",
            row.buffer_size,
            row.successes,
            row.failures,
            cell(row.mean_difference),
            cell(row.sd_difference),
            cell(row.mean_estimate),
            cell(row.mean_true_coverage),
        ));
    }
    out
}

fn cmd_simulate(args: SimulateArgs) -> Result<(), CliError> {
    let settings = merge_settings(&args)?;
    let (tokens, corpus_name) = load_corpus(&settings)?;

    let config = ExperimentConfig {
        buffer_sizes: settings.sizes.clone(),
        replications: settings.reps,
        base_seed: settings.seed,
        policy: settings.policy,
    };
    let rows = run_experiment(&tokens, &config).map_err(|err| CliError::Config(err.to_string()))?;
    let summary = summarize(&rows);

    let normalization_note = if settings.pretokenized {
        "pretokenized (labels verbatim)".to_string()
    } else {
        settings.normalization.describe()
    };
    let mut report = Report::new();
    report
        .push("corpus", &corpus_name)
        .push("corpus_tokens", tokens.len())
        .push(
            "sizes",
            settings
                .sizes
                .iter()
                .map(ToString::to_string)
                .collect::<Vec<_>>()
                .join(","),
        )
        .push("replications", settings.reps)
        .push("base_seed", settings.seed)
        .push("denominator", settings.policy)
        .push("normalization", normalization_note)
        .push("rng", RNG_ALGORITHM);
    report.print()?;

    {
        let stdout = io::stdout();
        let mut out = stdout.lock();
        writeln!(out)?;
        out.write_all(summary_table(&summary).as_bytes())?;
    }

    fs::write(&settings.csv, rows_to_csv(&rows))
        .map_err(|err| CliError::Io(format!("cannot write {}: {err}", settings.csv.display())))?;
    eprintln!("wrote {}", settings.csv.display());

    if let Some(path) = &settings.plot {
        fs::write(path, plot::render(&summary, settings.plot_kind))
            .map_err(|err| CliError::Io(format!("cannot write {}: {err}", path.display())))?;
        eprintln!("wrote {}", path.display());
    }
    Ok(())
}
