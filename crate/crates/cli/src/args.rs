use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use twotier::embedding_io::{Dtype, TableFormat};
use twotier::probes::{ProbeConfig, ProbeKind};
use twotier::spectral::{DftMethod, SpectrumOptions, SpikeScale};
use twotier::synth::BlockPreset;

/// Spectral and geometric diagnostics for periodic number embeddings.
#[derive(Debug, Parser)]
#[command(name = "twotier", version)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// DFT along the token index: power and median-normalized spectrum
    Spectrum(SpectrumArgs),
    /// Between/within residue-class scatter, Fisher score and bounds
    Scatter(ScatterArgs),
    /// Cross-validated mod-T probes (linear, mlp, circular)
    Probe(ProbeArgs),
    /// Write an analytic construction or fixture table
    Synth(SynthArgs),
    /// Apply a corpus perturbation and audit what it changed
    Perturb(PerturbArgs),
    /// Full report on the token-frequency embedding of a corpus
    FreqBaseline(FreqBaselineArgs),
    /// Full two-tier report (spectrum, probes, noise anatomy) for a table
    Report(ReportArgs),
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct OutArgs {
    /// Output directory
    #[arg(long, short, env = "TWOTIER_OUT_DIR", default_value = "twotier-out")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum FormatArg {
    Raw,
    Npy,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum DtypeArg {
    F32,
    F64,
}

impl From<DtypeArg> for Dtype {
    fn from(d: DtypeArg) -> Self {
        match d {
            DtypeArg::F32 => Dtype::F32,
            DtypeArg::F64 => Dtype::F64,
        }
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct TableArgs {
    /// Embedding table (raw header+payload or .npy)
    #[arg(long)]
    pub table: PathBuf,
    /// Table format; guessed from the extension when omitted
    #[arg(long, value_enum)]
    pub format: Option<FormatArg>,
}

impl TableArgs {
    pub fn table_format(&self) -> TableFormat {
        match self.format {
            Some(FormatArg::Raw) => TableFormat::Raw(Dtype::F32),
            Some(FormatArg::Npy) => TableFormat::Npy(Dtype::F32),
            None => TableFormat::from_path(&self.table),
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum MethodArg {
    Direct,
    Fft,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ScaleArg {
    Power,
    Magnitude,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SpectrumFlags {
    #[arg(long, value_enum, default_value = "direct")]
    pub method: MethodArg,
    /// Include the DC bin in the normalizing median
    #[arg(long)]
    pub median_includes_dc: bool,
    /// Normalize magnitudes instead of power
    #[arg(long, value_enum, default_value = "power")]
    pub scale: ScaleArg,
}

impl SpectrumFlags {
    pub fn options(&self) -> SpectrumOptions {
        SpectrumOptions {
            method: match self.method {
                MethodArg::Direct => DftMethod::Direct,
                MethodArg::Fft => DftMethod::Fft,
            },
            median_includes_dc: self.median_includes_dc,
            scale: match self.scale {
                ScaleArg::Power => SpikeScale::Power,
                ScaleArg::Magnitude => SpikeScale::Magnitude,
            },
        }
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SpectrumArgs {
    #[command(flatten)]
    pub table: TableArgs,
    /// Periods to report spike statistics for
    #[arg(long, value_delimiter = ',', default_value = "2,5,10")]
    pub periods: Vec<usize>,
    #[command(flatten)]
    pub spectrum: SpectrumFlags,
    /// Also write an SVG line chart
    #[arg(long)]
    pub svg: bool,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ScatterArgs {
    #[command(flatten)]
    pub table: TableArgs,
    #[arg(long, value_delimiter = ',', default_value = "2,5,10")]
    pub periods: Vec<usize>,
    /// Keep the full S_B and S_W matrices in the JSON output
    #[arg(long)]
    pub matrices: bool,
    #[command(flatten)]
    pub out: OutArgs,
}

fn parse_kind(s: &str) -> Result<ProbeKind, String> {
    s.parse().map_err(|e: twotier::Error| e.to_string())
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ProbeFlags {
    /// Probe kinds: linear, mlp, circular
    #[arg(long, value_delimiter = ',', default_value = "linear", value_parser = parse_kind)]
    pub kinds: Vec<ProbeKind>,
    /// Number of seeds
    #[arg(long, default_value_t = 3)]
    pub seeds: usize,
    /// Cross-validation folds per seed
    #[arg(long, default_value_t = 10)]
    pub folds: usize,
    /// First seed; seeds are consecutive from here
    #[arg(long, default_value_t = 0)]
    pub base_seed: u64,
    /// Skip per-fold z-scoring of features
    #[arg(long)]
    pub no_standardize: bool,
}

impl ProbeFlags {
    pub fn config(&self) -> ProbeConfig {
        let mut c = ProbeConfig::new(self.kinds.first().copied().unwrap_or(ProbeKind::Linear), 2);
        c.n_seeds = self.seeds;
        c.n_folds = self.folds;
        c.base_seed = self.base_seed;
        c.standardize = !self.no_standardize;
        c
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ProbeArgs {
    #[command(flatten)]
    pub table: TableArgs,
    #[arg(long, value_delimiter = ',', default_value = "2,5,10")]
    pub periods: Vec<usize>,
    #[command(flatten)]
    pub probe: ProbeFlags,
    /// Write circular-probe 2-D coordinates per period
    #[arg(long)]
    pub dump_projection: bool,
    /// Also write an SVG bar chart of κ
    #[arg(long)]
    pub svg: bool,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum FixtureArg {
    /// e(n) = A·(n mod T) + B·⌊n/T⌋
    Construction,
    /// Points on the unit circle by residue, optionally lifted to higher dimension
    IdealCircle,
    /// Gaussian table with the period-T harmonics projected out
    ZeroHarmonic,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum PresetArg {
    Interleaved,
    Separable,
}

impl From<PresetArg> for BlockPreset {
    fn from(p: PresetArg) -> Self {
        match p {
            PresetArg::Interleaved => BlockPreset::Interleaved,
            PresetArg::Separable => BlockPreset::Separable,
        }
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SynthArgs {
    #[arg(long, value_enum, default_value = "construction")]
    pub fixture: FixtureArg,
    #[arg(long, short = 't', default_value_t = 10)]
    pub period: usize,
    /// Accuracy slack ε; sets K = ⌈(T−1)/(Tε)⌉ (construction only)
    #[arg(long, default_value_t = 0.009)]
    pub epsilon: f64,
    /// Target harmonic power C (construction only)
    #[arg(long, conflicts_with = "amplitude")]
    pub power: Option<f64>,
    /// Residue amplitude A (construction only; default 5 when --power is absent)
    #[arg(long)]
    pub amplitude: Option<f64>,
    /// Block scale B (construction only)
    #[arg(long, conflicts_with = "preset")]
    pub block_scale: Option<f64>,
    /// Named block scale (construction only)
    #[arg(long, value_enum)]
    pub preset: Option<PresetArg>,
    /// Number of tokens (ideal-circle, zero-harmonic)
    #[arg(long, default_value_t = 1000)]
    pub n_tokens: usize,
    /// Embedding dimension (ideal-circle, zero-harmonic)
    #[arg(long, default_value_t = 2)]
    pub dim: usize,
    /// Seed for the orthogonal lift or the Gaussian draw
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_enum, default_value = "raw")]
    pub format: FormatArg,
    #[arg(long, value_enum, default_value = "f64")]
    pub dtype: DtypeArg,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct CorpusArgs {
    /// Newline-JSON corpus: one array of token ids per line
    #[arg(long)]
    pub corpus: PathBuf,
    /// JSON object mapping number token id to its value
    #[arg(long)]
    pub number_vocab: PathBuf,
    /// Vocabulary size; inferred from the largest id when omitted
    #[arg(long)]
    pub vocab_size: Option<usize>,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum PerturbConfig {
    Isolate,
    Context,
    Swap,
    Unigram,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct PerturbArgs {
    #[command(flatten)]
    pub corpus: CorpusArgs,
    #[arg(long, value_enum)]
    pub config: PerturbConfig,
    /// Numbers per segment (isolate)
    #[arg(long, default_value_t = 1)]
    pub k: usize,
    /// Window length ℓ (context)
    #[arg(long, default_value_t = 64)]
    pub window: usize,
    /// Seed (swap, unigram)
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Allow swap slices to wrap around the pool when it is too short
    #[arg(long)]
    pub wrap: bool,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ReportFlags {
    #[arg(long, value_delimiter = ',', default_value = "2,5,10")]
    pub periods: Vec<usize>,
    #[command(flatten)]
    pub probe: ProbeFlags,
    #[command(flatten)]
    pub spectrum: SpectrumFlags,
    /// norm_mag at ν = 1/T needed to call a spike
    #[arg(long, default_value_t = 10.0)]
    pub spike_threshold: f64,
    /// κ needed to call a period decodable
    #[arg(long, default_value_t = 50.0)]
    pub kappa_threshold: f64,
}

impl ReportFlags {
    pub fn options(&self) -> twotier::report::ReportOptions {
        twotier::report::ReportOptions {
            periods: self.periods.clone(),
            kinds: self.probe.kinds.clone(),
            probe: self.probe.config(),
            spectrum: self.spectrum.options(),
            spike_threshold: self.spike_threshold,
            kappa_threshold: self.kappa_threshold,
        }
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ReportArgs {
    #[command(flatten)]
    pub table: TableArgs,
    #[command(flatten)]
    pub report: ReportFlags,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct FreqBaselineArgs {
    #[command(flatten)]
    pub corpus: CorpusArgs,
    /// Number of distinct values (table length); defaults to one past the largest value
    #[arg(long)]
    pub n_values: Option<usize>,
    #[command(flatten)]
    pub report: ReportFlags,
    #[command(flatten)]
    pub out: OutArgs,
}
