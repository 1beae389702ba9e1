use std::path::PathBuf;

use bitext_sieve::tokenize::Scheme;
use bitext_sieve::types::Side;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

#[derive(Debug, Parser)]
#[command(name = "bitext-sieve", version, about = "Score, filter and select noisy parallel corpora")]
pub struct Cli {
    /// More log output on stderr (-v info, -vv debug)
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train a character n-gram language identifier from `text<TAB>lang` lines
    TrainLangid(TrainLangid),
    /// Train a backoff n-gram language model and write it as ARPA
    TrainLm(TrainLm),
    /// Generate labeled positives and synthetic negatives from clean pairs
    GenSynth(GenSynth),
    /// Train the built-in acceptability classifier on a labeled set
    TrainAccept(TrainAccept),
    /// Score each pair with the length/dictionary alignment model
    AlignScore(AlignScore),
    /// Run the filters over a bitext and write per-pair scores
    Score(Score),
    /// Select the best pairs of a scored file by word budget or percentage
    Select(Select),
    /// Precision/recall of a score column against gold labels
    EvalPr(EvalPr),
    /// Histogram and word-count report for a scored file
    Stats(Stats),
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum OnError {
    Skip,
    Abort,
}

#[derive(Debug, Args, Serialize)]
pub struct Input {
    /// Bitext TSV: source<TAB>target[<TAB>meta]
    #[arg(long = "in")]
    pub input: PathBuf,
    /// What to do with malformed lines
    #[arg(long, value_enum, default_value = "skip")]
    pub on_error: OnError,
    /// Apply Unicode NFC to both sides before scoring
    #[arg(long)]
    pub nfc: bool,
}

#[derive(Debug, Args, Serialize)]
pub struct Schemes {
    /// Tokenization of the source side (whitespace or character)
    #[arg(long, default_value = "whitespace")]
    pub src_scheme: Scheme,
    /// Tokenization of the target side (whitespace or character)
    #[arg(long, default_value = "whitespace")]
    pub tgt_scheme: Scheme,
}

#[derive(Debug, Args, Serialize)]
pub struct ProtoLimits {
    /// Maximum requests in flight to an external scorer
    #[arg(long, default_value_t = 256)]
    pub proto_window: usize,
    /// Seconds to wait for each scorer response
    #[arg(long, default_value_t = 60)]
    pub proto_timeout: u64,
    /// Restarts after transport failures
    #[arg(long, default_value_t = 2)]
    pub proto_retries: usize,
}

#[derive(Debug, Args, Serialize)]
pub struct TrainLangid {
    /// Training data: text<TAB>lang per line
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Longest character n-gram
    #[arg(long, default_value_t = 4)]
    pub nmax: usize,
    /// Hash buckets for n-gram features
    #[arg(long, default_value_t = 1 << 20)]
    pub buckets: usize,
    #[arg(long, default_value_t = 5)]
    pub epochs: usize,
    #[arg(long, default_value_t = 0.5)]
    pub lr: f32,
    #[arg(long)]
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SmoothingKind {
    Kn,
    Addk,
}

#[derive(Debug, Args, Serialize)]
pub struct TrainLm {
    /// One sentence per line
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 3)]
    pub order: usize,
    #[arg(long, value_enum, default_value = "kn")]
    pub smoothing: SmoothingKind,
    /// Kneser-Ney discount
    #[arg(long, default_value_t = 0.75)]
    pub discount: f64,
    /// Add-k constant
    #[arg(long, default_value_t = 0.01)]
    pub k: f64,
    /// Words seen fewer times become <unk>
    #[arg(long, default_value_t = 1)]
    pub min_count: u64,
    #[arg(long, default_value = "whitespace")]
    pub scheme: Scheme,
    /// Train on a uniform sample of this many sentences
    #[arg(long, requires = "seed")]
    pub sample: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args, Serialize)]
pub struct GenSynth {
    /// Clean bitext used as positives
    #[arg(long)]
    pub pos: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Window for adjacent-target negatives
    #[arg(long, default_value_t = 2)]
    pub k: usize,
    #[arg(long)]
    pub seed: u64,
    #[command(flatten)]
    pub schemes: Schemes,
}

#[derive(Debug, Args, Serialize)]
pub struct TrainAccept {
    /// Labeled TSV from gen-synth: source<TAB>target<TAB>label<TAB>tag
    #[arg(long)]
    pub labeled: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub seed: u64,
    #[arg(long, default_value_t = 20)]
    pub epochs: usize,
    #[arg(long, default_value_t = 0.1)]
    pub lr: f64,
    /// EM iterations for the translation lexicons
    #[arg(long, default_value_t = 5)]
    pub em_iterations: usize,
    #[command(flatten)]
    pub schemes: Schemes,
}

#[derive(Debug, Args, Serialize)]
pub struct AlignScore {
    #[command(flatten)]
    pub input: Input,
    #[arg(long)]
    pub out: PathBuf,
    /// Bilingual dictionary: src_token<TAB>tgt_token
    #[arg(long)]
    pub dict: Option<PathBuf>,
    /// Weight of the dictionary coverage term
    #[arg(long, default_value_t = 1.0)]
    pub lambda: f64,
    /// Expected target/source length ratio
    #[arg(long, default_value_t = 1.0)]
    pub c: f64,
    /// Variance of the length difference
    #[arg(long, default_value_t = 6.8)]
    pub s2: f64,
    #[command(flatten)]
    pub schemes: Schemes,
}

#[derive(Debug, Args, Serialize)]
pub struct Score {
    #[command(flatten)]
    pub input: Input,
    #[arg(long)]
    pub out: PathBuf,
    /// Language identification model (JSON)
    #[arg(long)]
    pub langid: Option<PathBuf>,
    /// Required source language code
    #[arg(long)]
    pub want_src: Option<String>,
    /// Required target language code
    #[arg(long)]
    pub want_tgt: Option<String>,
    /// Built-in acceptability model
    #[arg(long, conflicts_with = "accept_proto")]
    pub accept: Option<PathBuf>,
    /// External acceptability scorer command (scorer protocol)
    #[arg(long)]
    pub accept_proto: Option<String>,
    /// Enable the domain filter
    #[arg(long)]
    pub domain: bool,
    /// In-domain language model (ARPA)
    #[arg(long, conflicts_with = "lm_in_proto")]
    pub lm_in: Option<PathBuf>,
    /// External in-domain perplexity scorer command
    #[arg(long)]
    pub lm_in_proto: Option<String>,
    /// Non-domain language model (ARPA)
    #[arg(long)]
    pub lm_non: Option<PathBuf>,
    #[arg(long, default_value_t = bitext_sieve::domain::DEFAULT_CLIP)]
    pub clip: f64,
    #[arg(long, default_value_t = bitext_sieve::domain::DEFAULT_CUTOFF)]
    pub cutoff: f64,
    #[command(flatten)]
    pub schemes: Schemes,
    #[command(flatten)]
    pub proto: ProtoLimits,
}

#[derive(Debug, Args, Serialize)]
pub struct Select {
    /// Scored TSV from `score`
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Stop once this many words are selected (the crossing pair is kept)
    #[arg(long, conflicts_with = "top_percent", required_unless_present = "top_percent")]
    pub budget_words: Option<u64>,
    /// Keep the best N percent of pairs
    #[arg(long)]
    pub top_percent: Option<f64>,
    /// Side on which words are counted
    #[arg(long, default_value = "target")]
    pub side: Side,
    /// Tokenization of the counted side
    #[arg(long, default_value = "whitespace")]
    pub scheme: Scheme,
    /// Keep the score columns in the output
    #[arg(long)]
    pub keep_scores: bool,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Column {
    Lang,
    Accept,
    Domain,
    Final,
}

#[derive(Debug, Args, Serialize)]
pub struct EvalPr {
    #[arg(long)]
    pub scored: PathBuf,
    /// Gold labels: id<TAB>{0|1}
    #[arg(long)]
    pub labels: PathBuf,
    /// Thresholds as start:end:step
    #[arg(long, default_value = "0:1:0.05")]
    pub grid: String,
    /// Score column to evaluate
    #[arg(long, value_enum, default_value = "accept")]
    pub column: Column,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct Stats {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Upper edge of the domain histogram
    #[arg(long, default_value_t = bitext_sieve::domain::DEFAULT_CLIP)]
    pub clip: f64,
    /// Count as selected the pairs a budget selection would keep
    #[arg(long, conflicts_with = "top_percent")]
    pub budget_words: Option<u64>,
    /// Count as selected the best N percent
    #[arg(long)]
    pub top_percent: Option<f64>,
    #[arg(long, default_value = "target")]
    pub side: Side,
    #[arg(long, default_value = "whitespace")]
    pub scheme: Scheme,
}
