//! `rirabs`: simulate rooms, build datasets, train and evaluate absorption
//! estimators from the command line.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{ArgGroup, Args, Parser, Subcommand, ValueEnum};
use rirabs::baselines::Method;
use rirabs::eval::{Family, MethodSpec};

#[derive(Parser, Debug)]
#[command(name = "rirabs", version, about = "Room impulse responses and mean absorption estimation")]
#[command(group(ArgGroup::new("profile").args(["paper", "fast"])))]
pub struct Cli {
    /// Master seed; every random draw derives from it.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Full-scale settings: 50,000 rays, image order 50, batch 1000, 400 epochs, 500 test rooms.
    #[arg(long, global = true)]
    pub paper: bool,
    /// Desk-scale settings (default): 10,000 rays, batch 32, 100 epochs, 100 test rooms.
    #[arg(long, global = true)]
    pub fast: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Simulate one room and write its impulse response as a WAV file.
    Simulate(SimulateArgs),
    /// Generate train/dev (and optionally test) sets of preprocessed inputs.
    Dataset(DatasetArgs),
    /// Per-band reverberation time and Sabine/Eyring absorption of a recorded or simulated RIR.
    Analyze(AnalyzeArgs),
    /// Train a network on a generated dataset.
    Train(TrainArgs),
    /// Compare methods on a crafted test family.
    Eval(EvalArgs),
    /// Estimate mean absorption of an RIR with a trained model.
    Infer(InferArgs),
}

#[derive(Args, Debug)]
#[command(group(ArgGroup::new("source").required(true).args(["room", "random"])))]
pub struct SimulateArgs {
    /// Room description (JSON).
    #[arg(long)]
    pub room: Option<PathBuf>,
    /// Draw a random room with this strategy instead.
    #[arg(long, value_enum)]
    pub random: Option<Strategy>,
    /// Output WAV; the resolved room and settings go next to it as `<out>.json`.
    #[arg(long)]
    pub out: PathBuf,
    /// Response length in seconds.
    #[arg(long, default_value_t = 0.5)]
    pub time: f64,
    /// Override the ray count of the profile (0 gives a specular-only response).
    #[arg(long)]
    pub rays: Option<usize>,
    /// Cap on image-source order.
    #[arg(long)]
    pub max_order: Option<usize>,
    /// Also write the arrival table (tab-separated).
    #[arg(long)]
    pub echogram: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Strategy {
    Rb,
    Unif,
}

#[derive(Args, Debug)]
pub struct DatasetArgs {
    #[arg(long, value_enum, default_value_t = Strategy::Rb)]
    pub strategy: Strategy,
    /// Number of training items.
    #[arg(long)]
    pub train: usize,
    /// Number of dev items.
    #[arg(long)]
    pub dev: usize,
    /// Number of held-out test items.
    #[arg(long, default_value_t = 0)]
    pub test: usize,
    /// Output directory; sets go to `<out>/train`, `<out>/dev`, `<out>/test`.
    #[arg(long)]
    pub out: PathBuf,
    /// Noise added to every input, in dB.
    #[arg(long, default_value_t = 30.0, conflicts_with = "noiseless")]
    pub snr: f64,
    #[arg(long)]
    pub noiseless: bool,
    /// Image sources only (no diffuse rain).
    #[arg(long)]
    pub specular_only: bool,
    /// Override the ray count of the profile.
    #[arg(long, conflicts_with = "specular_only")]
    pub rays: Option<usize>,
}

#[derive(Args, Debug)]
pub struct AnalyzeArgs {
    /// Room dimensions in metres.
    #[arg(long)]
    pub lx: f64,
    #[arg(long)]
    pub ly: f64,
    #[arg(long)]
    pub lz: f64,
    /// Fit depth below -5 dB (30 gives RT30).
    #[arg(long, default_value_t = 30.0)]
    pub depth: f64,
    pub wav: PathBuf,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Arch {
    Mlp,
    Cnn,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Head {
    /// Six mean absorptions.
    Alpha,
    /// Six inverse mean absorptions.
    Inverse,
    /// Six mean absorptions and six mean scatterings.
    AlphaScattering,
}

#[derive(Args, Debug)]
pub struct TrainArgs {
    /// Training set directory.
    #[arg(long)]
    pub train: PathBuf,
    /// Dev set directory (model selection).
    #[arg(long)]
    pub dev: PathBuf,
    #[arg(long, value_enum, default_value_t = Arch::Cnn)]
    pub arch: Arch,
    #[arg(long, value_enum, default_value_t = Head::Alpha)]
    pub head: Head,
    /// Model file to write.
    #[arg(long)]
    pub out: PathBuf,
    /// Loss curve CSV (default: `<out>.curve.csv`).
    #[arg(long)]
    pub curve: Option<PathBuf>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long, default_value_t = 1e-3)]
    pub lr: f64,
}

#[derive(Args, Debug)]
#[command(group(ArgGroup::new("rooms_source").required(true).args(["family", "rooms_from"])))]
pub struct EvalArgs {
    /// Test family, e.g. realistic, cube_like, elongated, dsf, snr_sweep, scattering_0.5.
    #[arg(long, value_parser = parse_family)]
    pub family: Option<Family>,
    /// Evaluate on the rooms of a generated dataset instead of a crafted family.
    #[arg(long)]
    pub rooms_from: Option<PathBuf>,
    /// Comma-separated: eyring, sabine, or name=model-file.
    #[arg(long, required = true, value_delimiter = ',', value_parser = parse_method)]
    pub methods: Vec<MethodSpec>,
    /// Output directory for the error CSVs, box statistics and summary.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub n_rooms: Option<usize>,
    /// Noise level of the test waveforms in dB.
    #[arg(long, default_value_t = 30.0, conflicts_with = "noiseless")]
    pub snr: f64,
    #[arg(long)]
    pub noiseless: bool,
    /// Classical methods analyse a separate full-band response of this many
    /// seconds instead of the network input excerpt.
    #[arg(long)]
    pub analysis_time: Option<f64>,
    /// Image order of that long response.
    #[arg(long, default_value_t = 50, requires = "analysis_time")]
    pub analysis_order: usize,
    /// One error per room (band-averaged) instead of one per room and band.
    #[arg(long)]
    pub aggregate: bool,
}

#[derive(Args, Debug)]
pub struct InferArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// Noise added before inference, in dB (48 kHz inputs only).
    #[arg(long)]
    pub snr: Option<f64>,
    /// 48 kHz RIR (resampled and truncated) or an already preprocessed 16 kHz one.
    pub wav: PathBuf,
}

fn parse_family(s: &str) -> Result<Family, String> {
    Family::parse(s).map_err(|e| e.to_string())
}

fn parse_method(s: &str) -> Result<MethodSpec, String> {
    match s {
        "eyring" => Ok(MethodSpec::Classical(Method::Eyring)),
        "sabine" => Ok(MethodSpec::Classical(Method::Sabine)),
        _ => match s.split_once('=') {
            Some((name, path)) if !name.is_empty() && !path.is_empty() => Ok(MethodSpec::Learned {
                name: name.to_string(),
                path: PathBuf::from(path),
            }),
            _ => Err(format!("expected eyring, sabine or name=model-file, got {s:?}")),
        },
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
