//! `signsynth` command line driver.

mod commands;
mod settings;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::settings::Settings;

#[derive(Parser, Debug)]
#[command(name = "signsynth", version, about = "Synthetic sign pose dataset pipeline")]
struct Cli {
    /// Global seed for every random choice.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Flat `key = value` settings file; flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads for per-record work.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Drop tokens without a sign clip instead of failing the sentence.
    #[arg(long, global = true)]
    skip_oov: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate sentences from a template pack and slot lexicon.
    Gen(GenArgs),
    /// Keep corpus sentences whose vocabulary match rate is above a threshold.
    Filter(FilterArgs),
    /// Merge short sentences to reshape the length distribution.
    Merge(MergeArgs),
    /// Replace person names with <PERSON> and rare words with <UNKNOWN>.
    Postprocess(PostprocessArgs),
    /// Convert raw landmark JSON-lines into word-level pose files.
    Ingest(IngestArgs),
    /// Stitch sentence pose sequences from the word lexicon.
    Stitch(StitchArgs),
    /// Export the synthetic/real curriculum mixture schedule.
    Sample(SampleArgs),
    /// Train or apply the BPE tokenizer.
    #[command(subcommand)]
    Tokenize(TokenizeCommand),
    /// BLEU and ROUGE over candidate/reference pairs.
    Eval(EvalArgs),
    /// Manifest statistics and histogram CSVs.
    Stats(StatsArgs),
}

#[derive(Args, Debug)]
struct GenArgs {
    /// Template pack: `id<TAB>phenomenon<TAB>template` per line.
    #[arg(long)]
    templates: PathBuf,
    /// Slot lexicon JSON-lines.
    #[arg(long)]
    lexicon: PathBuf,
    /// Restrict slot fillers to this sign vocabulary (word list file or pose directory).
    #[arg(long)]
    sign_vocab: Option<PathBuf>,
    /// Emit at most this many sentences per template.
    #[arg(long, conflicts_with = "sample")]
    limit: Option<usize>,
    /// Draw this many sentences per template uniformly instead of enumerating.
    #[arg(long)]
    sample: Option<usize>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct FilterArgs {
    #[arg(long)]
    input: PathBuf,
    /// Input is plain text, one sentence per line.
    #[arg(long)]
    plain: bool,
    /// Vocabulary word list or pose directory.
    #[arg(long)]
    vocab: PathBuf,
    #[arg(long)]
    min_rate: Option<f64>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct MergeArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    max_len: Option<usize>,
    #[arg(long)]
    fraction: Option<f64>,
    #[arg(long)]
    group: Option<usize>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct PostprocessArgs {
    #[arg(long)]
    input: PathBuf,
    /// Person-name gazetteer, one name per line.
    #[arg(long)]
    names: Option<PathBuf>,
    /// Extra manifests pooled into the frequency count (not rewritten).
    #[arg(long = "count-extra")]
    count_extra: Vec<PathBuf>,
    #[arg(long)]
    min_freq: Option<u64>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct IngestArgs {
    /// Raw landmark files or directories of `*.jsonl`; the file stem is the word.
    #[arg(long, required = true, num_args = 1..)]
    input: Vec<PathBuf>,
    #[arg(long)]
    threshold: Option<f32>,
    /// Output directory for `<word>.psp` files.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct StitchArgs {
    #[arg(long)]
    input: PathBuf,
    /// Directory of word pose files.
    #[arg(long)]
    lexicon: PathBuf,
    /// Mean frame count of the target dataset; derives the base stride.
    #[arg(long)]
    target_mean_frames: Option<f64>,
    /// SWO or RWO.
    #[arg(long)]
    word_order: Option<String>,
    #[arg(long)]
    base_stride: Option<usize>,
    /// Comma separated jitter strides from 1..=3, e.g. `1,2,3`.
    #[arg(long)]
    jitter: Option<String>,
    #[arg(long)]
    crossfade: Option<usize>,
    /// Output directory: `manifest.jsonl`, `stats.json` and `poses/`.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct SampleArgs {
    #[arg(long)]
    total_steps: u64,
    #[arg(long)]
    real_size: u64,
    #[arg(long)]
    synth_size: u64,
    #[arg(long)]
    max_real_fraction: Option<f64>,
    #[arg(long)]
    ramp_steps: Option<u64>,
    /// CSV `step,real_fraction,source`.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Subcommand, Debug)]
enum TokenizeCommand {
    /// Train a BPE model on one or more manifests.
    Train {
        #[arg(long, required = true, num_args = 1..)]
        input: Vec<PathBuf>,
        #[arg(long)]
        vocab_size: Option<usize>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Encode a manifest into `{"id", "ids"}` JSON-lines.
    Encode {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args, Debug)]
struct EvalArgs {
    /// JSON-lines of `{"id", "candidate", "reference"}`.
    #[arg(long, conflicts_with_all = ["candidates", "references"])]
    input: Option<PathBuf>,
    /// Plain text hypotheses, one per line.
    #[arg(long, requires = "references")]
    candidates: Option<PathBuf>,
    #[arg(long, requires = "candidates")]
    references: Option<PathBuf>,
    /// `none` or `exp`.
    #[arg(long)]
    smoothing: Option<String>,
    /// Also write the report as JSON here.
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct StatsArgs {
    #[arg(long)]
    input: PathBuf,
    /// Stats JSON path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write `lengths.csv` and `frames.csv` here.
    #[arg(long)]
    csv_dir: Option<PathBuf>,
}

/// Marks errors caused by how the tool was invoked.
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn exit_code_for(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if cause.is::<UsageError>() {
            return 1;
        }
        if let Some(e) = cause.downcast_ref::<signsynth_core::Error>() {
            return if e.is_data_error() { 2 } else { 1 };
        }
    }
    2
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let settings = Settings::resolve(cli.config.as_deref(), cli.seed, cli.jobs, cli.skip_oov)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(settings.jobs)
        .build()
        .map_err(|e| UsageError(format!("cannot start {} workers: {e}", settings.jobs)))?;
    pool.install(|| commands::dispatch(cli.command, &settings))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code_for(&e))
        }
    }
}
