use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use hlsrnn::fixtures::Benchmark;
use hlsrnn::{FxpFormat, LayerKind, Overflow, ReusePair, RnnMode, Rounding, Strategy};

pub const DEVICE_DB_ENV: &str = "HLSRNN_DEVICE_DB";

const AFTER_HELP: &str = "\
Every flag can also be set from a TOML or JSON file given with --config.
Top-level keys apply to any subcommand that has the flag; a table named
after the subcommand (e.g. [sweep-reuse]) applies to that one only. Keys
are long flag names (dashes or underscores). Flags on the command line win.

Exit codes: 0 success, 2 usage or I/O error, 3 validation error.";

#[derive(Debug, Parser)]
#[command(
    name = "hlsrnn",
    version,
    about = "Fixed-point RNN inference and FPGA design-space sweeps"
)]
#[command(after_help = AFTER_HELP, args_override_self = true)]
pub struct Cli {
    /// TOML or JSON file supplying default flag values.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Score a dataset with a fixed-point model.
    Infer(InferArgs),
    /// AUC ratio against double precision over a grid of fixed-point formats.
    SweepQuant(SweepQuantArgs),
    /// Resource and latency estimates over reuse factors and bit widths.
    SweepReuse(SweepReuseArgs),
    /// Static versus non-static estimates plus an output-equivalence probe.
    CompareModes(CompareModesArgs),
    /// One resource and latency estimate.
    Estimate(EstimateArgs),
    /// Write benchmark-shaped models and synthetic datasets.
    GenFixtures(GenFixturesArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Infer(_) => "infer",
            Command::SweepQuant(_) => "sweep-quant",
            Command::SweepReuse(_) => "sweep-reuse",
            Command::CompareModes(_) => "compare-modes",
            Command::Estimate(_) => "estimate",
            Command::GenFixtures(_) => "gen-fixtures",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Static,
    NonStatic,
}

impl From<ModeArg> for RnnMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Static => RnnMode::Static,
            ModeArg::NonStatic => RnnMode::NonStatic,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RoundingArg {
    Truncate,
    NearestEven,
}

impl From<RoundingArg> for Rounding {
    fn from(r: RoundingArg) -> Self {
        match r {
            RoundingArg::Truncate => Rounding::Truncate,
            RoundingArg::NearestEven => Rounding::NearestEven,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OverflowArg {
    Saturate,
    Wrap,
}

impl From<OverflowArg> for Overflow {
    fn from(o: OverflowArg) -> Self {
        match o {
            OverflowArg::Saturate => Overflow::Saturate,
            OverflowArg::Wrap => Overflow::Wrap,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum StrategyArg {
    Latency,
    Resource,
}

impl From<StrategyArg> for Strategy {
    fn from(s: StrategyArg) -> Self {
        match s {
            StrategyArg::Latency => Strategy::Latency,
            StrategyArg::Resource => Strategy::Resource,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CellArg {
    Lstm,
    Gru,
}

impl From<CellArg> for LayerKind {
    fn from(c: CellArg) -> Self {
        match c {
            CellArg::Lstm => LayerKind::Lstm,
            CellArg::Gru => LayerKind::Gru,
        }
    }
}

/// Activation table presets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TablesArg {
    /// Lookup tables sampled at bin midpoints.
    Lut,
    /// Lookup tables sampled at bin left edges.
    LeftEdge,
    /// Exact function values quantized to the working precision.
    Direct,
}

fn parse_format(s: &str) -> Result<FxpFormat, String> {
    s.parse::<FxpFormat>().map_err(|e| e.to_string())
}

fn parse_reuse(s: &str) -> Result<ReusePair, String> {
    s.parse::<ReusePair>().map_err(|e| e.to_string())
}

fn parse_benchmark(s: &str) -> Result<Benchmark, String> {
    s.parse::<Benchmark>().map_err(|e| e.to_string())
}

/// Bit counts given as an inclusive range `A..B` or a comma list.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BitList(pub Vec<u32>);

pub fn parse_bit_list(s: &str) -> Result<BitList, String> {
    parse_bits(s).map(BitList)
}

fn parse_bits(s: &str) -> Result<Vec<u32>, String> {
    let s = s.trim();
    if s.is_empty() {
        return Ok(Vec::new());
    }
    if let Some((a, b)) = s.split_once("..") {
        let a: u32 = a.trim().parse().map_err(|_| format!("bad range start in {s:?}"))?;
        let b: u32 = b
            .trim()
            .trim_start_matches('=')
            .parse()
            .map_err(|_| format!("bad range end in {s:?}"))?;
        return Ok((a..=b).collect());
    }
    s.split(',')
        .map(|v| v.trim().parse::<u32>().map_err(|_| format!("bad bit count {v:?}")))
        .collect()
}

#[derive(Debug, Clone, Args)]
pub struct ModelArgs {
    /// Model JSON file.
    #[arg(long, value_name = "PATH", conflicts_with = "benchmark")]
    pub model: Option<PathBuf>,
    /// Use a benchmark-shaped model with seeded weights instead of a file.
    #[arg(long, value_parser = parse_benchmark, value_name = "NAME")]
    pub benchmark: Option<Benchmark>,
    /// Recurrent cell for --benchmark.
    #[arg(long, value_enum, default_value_t = CellArg::Lstm)]
    pub cell: CellArg,
}

#[derive(Debug, Clone, Args)]
pub struct NumericArgs {
    #[arg(long, value_enum, default_value_t = RoundingArg::Truncate)]
    pub rounding: RoundingArg,
    #[arg(long, value_enum, default_value_t = OverflowArg::Saturate)]
    pub overflow: OverflowArg,
    #[arg(long, value_enum, default_value_t = TablesArg::Lut)]
    pub tables: TablesArg,
    /// JSON or TOML activation configuration; overrides --tables.
    #[arg(long, value_name = "PATH")]
    pub activation_config: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct HardwareArgs {
    #[arg(long, value_enum, default_value_t = StrategyArg::Resource)]
    pub strategy: StrategyArg,
    #[arg(long, default_value_t = 200.0, value_name = "MHZ")]
    pub clock_mhz: f64,
    /// Widest multiplier operand one DSP accepts.
    #[arg(long, default_value_t = 18, value_name = "BITS")]
    pub dsp_width: u32,
    /// Part number to check the estimate against.
    #[arg(long, value_name = "PART")]
    pub device: Option<String>,
    /// Device budget database; the built-in table is used when unset.
    #[arg(long, env = DEVICE_DB_ENV, value_name = "PATH")]
    pub device_db: Option<PathBuf>,
    /// Cost-model calibration constants (TOML or JSON).
    #[arg(long, value_name = "PATH")]
    pub calibration: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct InferArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Dataset CSV (`label,t0_f0,...`) or JSON.
    #[arg(long, value_name = "PATH")]
    pub data: PathBuf,
    #[arg(long, value_parser = parse_format, default_value = "fixed<16,6>")]
    pub precision: FxpFormat,
    /// Sequence-execution order of the recurrent layer.
    #[arg(long, value_enum, default_value_t = ModeArg::Static)]
    pub mode: ModeArg,
    #[command(flatten)]
    pub numeric: NumericArgs,
    /// Per-row scores CSV; stdout when unset.
    #[arg(long, value_name = "PATH")]
    pub output: Option<PathBuf>,
    /// Accuracy/AUC summary JSON; stderr when unset.
    #[arg(long, value_name = "PATH")]
    pub summary: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct SweepQuantArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, value_name = "PATH")]
    pub data: PathBuf,
    /// Integer bits, as `6,8,10,12` or `6..12`.
    #[arg(long, value_parser = parse_bit_list, default_value = "6,8,10,12")]
    pub integer_bits: BitList,
    /// Fractional bits, as `2..16` or a comma list; empty for none.
    #[arg(long, value_parser = parse_bit_list, default_value = "2..16")]
    pub frac_bits: BitList,
    /// Sequence-execution order of the recurrent layer.
    #[arg(long, value_enum, default_value_t = ModeArg::Static)]
    pub mode: ModeArg,
    #[command(flatten)]
    pub numeric: NumericArgs,
    #[arg(long, value_name = "PATH")]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct SweepReuseArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Reuse pair `X:Y`, `(X,Y)` or `(X,Y [Z])`; repeat for more points.
    #[arg(long, value_parser = parse_reuse, required = true, value_name = "X:Y")]
    pub reuse: Vec<ReusePair>,
    /// Total bit widths, as `8..24` or a comma list.
    #[arg(long, value_parser = parse_bit_list, default_value = "16")]
    pub widths: BitList,
    /// Integer bits at every width (capped at the width).
    #[arg(long, default_value_t = 6)]
    pub integer_bits: u32,
    #[arg(long, value_enum, default_value_t = ModeArg::Static)]
    pub mode: ModeArg,
    #[command(flatten)]
    pub hardware: HardwareArgs,
    #[arg(long, value_name = "PATH")]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct CompareModesArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, value_parser = parse_format, default_value = "fixed<16,6>")]
    pub precision: FxpFormat,
    #[arg(long, value_parser = parse_reuse, default_value = "1:1", value_name = "X:Y")]
    pub reuse: ReusePair,
    #[command(flatten)]
    pub numeric: NumericArgs,
    #[command(flatten)]
    pub hardware: HardwareArgs,
    /// Seed of the probe input sequence.
    #[arg(long, default_value_t = 1)]
    pub probe_seed: u64,
    #[arg(long, value_name = "PATH")]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct EstimateArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, value_parser = parse_format, default_value = "fixed<16,6>")]
    pub precision: FxpFormat,
    #[arg(long, value_parser = parse_reuse, default_value = "1:1", value_name = "X:Y")]
    pub reuse: ReusePair,
    #[arg(long, value_enum, default_value_t = ModeArg::Static)]
    pub mode: ModeArg,
    #[command(flatten)]
    pub hardware: HardwareArgs,
    #[arg(long, value_name = "PATH")]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct GenFixturesArgs {
    /// Directory to write into; created if missing.
    #[arg(long, value_name = "DIR")]
    pub out_dir: PathBuf,
    #[arg(long, default_value_t = hlsrnn::fixtures::DEFAULT_SEED)]
    pub seed: u64,
    /// Samples per synthetic dataset.
    #[arg(long, default_value_t = 2000)]
    pub samples: usize,
    /// Only this benchmark; all three when unset.
    #[arg(long, value_parser = parse_benchmark, value_name = "NAME")]
    pub benchmark: Option<Benchmark>,
    /// Write JSON datasets instead of CSV.
    #[arg(long)]
    pub json: bool,
}
