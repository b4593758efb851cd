use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use rarity_core::binomtail::Direction;
use rarity_core::spaces::TableFormat;

#[derive(Debug, Parser)]
#[command(
    name = "rarity",
    version,
    about = "Extreme binomial tails, audio statistics and musical space sizes",
    arg_required_else_help = true
)]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Global {
    /// Working precision in decimal digits (at least 16). Defaults to
    /// RARITY_PRECISION, then 64.
    #[arg(long, global = true, value_parser = clap::value_parser!(u32).range(16..))]
    pub precision: Option<u32>,

    /// Flat `key = value` file; keys are long flag names. Flags given on the
    /// command line win.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// Seed for noise and Monte Carlo.
    #[arg(long, global = true, default_value_t = 42)]
    pub seed: u64,

    /// Worker threads for sweeps, corpora and Monte Carlo. Never changes
    /// any output.
    #[arg(long, global = true)]
    pub workers: Option<usize>,

    /// Significant digits of printed probabilities.
    #[arg(long, global = true, default_value_t = 9, value_parser = clap::value_parser!(u32).range(1..=60))]
    pub digits: u32,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum DirectionArg {
    Upper,
    Lower,
}

impl From<DirectionArg> for Direction {
    fn from(d: DirectionArg) -> Direction {
        match d {
            DirectionArg::Upper => Direction::Upper,
            DirectionArg::Lower => Direction::Lower,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum FormatArg {
    Markdown,
    Csv,
    Plain,
}

impl From<FormatArg> for TableFormat {
    fn from(f: FormatArg) -> TableFormat {
        match f {
            FormatArg::Markdown => TableFormat::Markdown,
            FormatArg::Csv => TableFormat::Csv,
            FormatArg::Plain => TableFormat::Plain,
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Binomial tail P(X >= K) or P(X <= K).
    Tail(TailArgs),
    /// Chernoff bound exp(-n D(k/n || p)).
    Chernoff(ChernoffArgs),
    /// Tail for every n in a range, with K(n) from a threshold ratio.
    Sweep(SweepArgs),
    /// First n whose tail drops below a log10 threshold.
    Crossover(CrossoverArgs),
    /// Recover p from a target log10 upper tail.
    Calibrate(CalibrateArgs),
    /// Zero-crossing and proximity statistics of WAV files.
    Analyze(AnalyzeArgs),
    /// Write seeded uniform white noise as 16-bit WAV.
    Noise(NoiseArgs),
    /// Monte Carlo estimate of a binomial tail.
    Montecarlo(MonteCarloArgs),
    /// Comparative sizes of musical spaces.
    Spaces(SpacesArgs),
    /// Write figures, table and manifest into a directory.
    Report(ReportArgs),
}

#[derive(Debug, Args)]
pub struct TailArgs {
    #[arg(long)]
    pub n: u64,
    /// Threshold K.
    #[arg(long = "K", visible_alias = "k")]
    pub k: u64,
    /// Success probability: decimal or a/b.
    #[arg(long)]
    pub p: String,
    #[arg(long, value_enum, default_value = "upper")]
    pub direction: DirectionArg,
    /// Also evaluate with exact rational arithmetic.
    #[arg(long)]
    pub exact: bool,
}

#[derive(Debug, Args)]
pub struct ChernoffArgs {
    #[arg(long)]
    pub n: u64,
    #[arg(long, visible_alias = "K")]
    pub k: u64,
    #[arg(long)]
    pub p: String,
    #[arg(long, value_enum, default_value = "lower")]
    pub direction: DirectionArg,
}

#[derive(Debug, Args)]
pub struct RangeArgs {
    #[arg(long = "n-min", default_value_t = 2)]
    pub n_min: u64,
    #[arg(long = "n-max", default_value_t = 44_100)]
    pub n_max: u64,
    /// Threshold ratio r with K(n) = floor(r n) (upper) or ceil(r n) (lower).
    #[arg(long, default_value = "0.994")]
    pub ratio: String,
    /// Success probability, or `calibrated` for the flagship p*.
    #[arg(long, default_value = "calibrated")]
    pub p: String,
    #[arg(long, value_enum, default_value = "upper")]
    pub direction: DirectionArg,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub range: RangeArgs,
    /// CSV destination; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Optional SVG plot.
    #[arg(long)]
    pub svg: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CrossoverArgs {
    #[command(flatten)]
    pub range: RangeArgs,
    #[arg(long, default_value_t = -80.0, allow_hyphen_values = true)]
    pub threshold: f64,
}

#[derive(Debug, Args)]
pub struct CalibrateArgs {
    #[arg(long, default_value_t = 44_100)]
    pub n: u64,
    #[arg(long = "K", visible_alias = "k", default_value_t = 43_835)]
    pub k: u64,
    /// Target log10 of the upper tail.
    #[arg(long, default_value_t = -2017.905331, allow_hyphen_values = true)]
    pub target: f64,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    /// WAV files or glob patterns.
    #[arg(required = true)]
    pub inputs: Vec<String>,
    #[arg(long, default_value_t = 0.1)]
    pub epsilon: f64,
    /// CSV destination; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct NoiseArgs {
    #[arg(long, default_value_t = 44_100)]
    pub samples: usize,
    #[arg(long, default_value_t = 1.0)]
    pub amplitude: f64,
    #[arg(long, default_value_t = 0.1)]
    pub epsilon: f64,
    /// WAV destination; statistics only when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct MonteCarloArgs {
    #[arg(long)]
    pub n: u64,
    #[arg(long = "K", visible_alias = "k")]
    pub k: u64,
    #[arg(long)]
    pub p: String,
    #[arg(long, value_enum, default_value = "upper")]
    pub direction: DirectionArg,
    #[arg(long, default_value_t = 1_000_000)]
    pub trials: u64,
}

#[derive(Debug, Args)]
pub struct SpacesArgs {
    #[arg(long, value_enum, default_value = "markdown")]
    pub format: FormatArg,
    /// Print the rounding and recomputation notes after the table.
    #[arg(long)]
    pub notes: bool,
    /// Instead of the table, size a DAW space given as X,N,M,Y.
    #[arg(long, value_name = "X,N,M,Y")]
    pub daw: Option<String>,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    #[arg(long, default_value = "report")]
    pub out: PathBuf,
    /// WAV files or glob patterns for the optional corpus section.
    #[arg(long, num_args = 1..)]
    pub corpus: Vec<String>,
    #[arg(long, default_value_t = 0.1)]
    pub epsilon: f64,
}
