use std::path::PathBuf;

use clap::{ArgAction, Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use wavefrac::dwt::{Boundary, Wavelet};
use wavefrac::spectral::Window;

#[derive(Parser, Debug, Clone, Serialize)]
#[command(
    name = "wavefrac",
    version,
    about = "Wavelet fluctuation, multifractal and spectral analysis of price series",
    propagate_version = true
)]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct GlobalArgs {
    /// Output directory.
    #[arg(
        long,
        global = true,
        env = "WAVEFRAC_OUT",
        default_value = "wavefrac-out"
    )]
    #[serde(skip)]
    pub out: PathBuf,

    /// Root seed; every random stream is derived from it.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,

    /// Table format for artifacts.
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    pub format: Format,

    /// More log output (-v, -vv).
    #[arg(short, long, global = true, action = ArgAction::Count)]
    #[serde(skip)]
    pub verbose: u8,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Subcommand, Debug, Clone, Serialize)]
#[serde(tag = "subcommand", rename_all = "kebab-case")]
pub enum Command {
    /// Validate and normalize price files.
    Ingest(InputArgs),
    /// Log returns and normalized log returns.
    Returns(InputArgs),
    /// Lagged autocorrelation of the normalized returns.
    Acf(AcfArgs),
    /// Skewness and kurtosis of the returns and of each level's fluctuations.
    Moments(LevelArgs),
    /// Kolmogorov–Smirnov test against a Gaussian, per level.
    Ks(KsArgs),
    /// Per-level profile fluctuations.
    Fluct(LevelArgs),
    /// Fluctuation functions and h(q), original and shuffled.
    Mfa(MfaArgs),
    /// Morlet scalogram.
    Cwt(CwtArgs),
    /// Power spectra of per-level fluctuations.
    Spectrum(SpectrumArgs),
    /// Spectral exponent per level.
    AlphaScan(AlphaArgs),
    /// Write a synthetic price series.
    Synth(SynthArgs),
    /// Run the whole pipeline and write every artifact.
    Report(ReportArgs),
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Missing {
    Drop,
    Error,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct InputArgs {
    /// CSV files, or inline generators such as `synth:fbm:hurst=0.7,n=16384`.
    #[arg(required = true)]
    pub inputs: Vec<String>,

    /// Price column.
    #[arg(long, default_value = "Close")]
    pub column: String,

    #[arg(long, default_value = "Date")]
    pub date_column: String,

    #[arg(long, default_value = "%Y-%m-%d")]
    pub date_format: String,

    /// What to do with rows whose price is missing or non-positive.
    #[arg(long, value_enum, default_value_t = Missing::Drop)]
    pub missing: Missing,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct WaveletArgs {
    #[arg(long, default_value = "db4", value_parser = parse_wavelet)]
    pub wavelet: Wavelet,

    #[arg(long, default_value = "symmetric", value_parser = parse_boundary)]
    pub boundary: Boundary,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct AcfArgs {
    #[command(flatten)]
    pub input: InputArgs,

    /// Largest lag as a fraction of the series length.
    #[arg(long, default_value_t = 0.75)]
    pub max_lag_fraction: f64,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct LevelArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub wavelet: WaveletArgs,

    /// Levels, e.g. `1,2,5` or `1-8` (default: 1 up to min(10, ⌊log₂ N⌋)).
    #[arg(long, value_parser = parse_levels)]
    pub levels: Option<Levels>,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct KsArgs {
    #[command(flatten)]
    pub levels: LevelArgs,

    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct MfaOptions {
    #[command(flatten)]
    pub wavelet: WaveletArgs,

    /// q grid as `min:max:step` or a comma list.
    #[arg(long, default_value = "-10:10:0.5", value_parser = parse_q_grid, allow_hyphen_values = true)]
    pub q: QGrid,

    /// Segment sizes (default: 16, 32, ... up to N/4).
    #[arg(long, value_delimiter = ',')]
    pub scales: Option<Vec<usize>>,

    /// Smallest and largest segment size used in the h(q) fit, `lo,hi`.
    #[arg(long, value_parser = parse_usize_pair)]
    pub fit_range: Option<(usize, usize)>,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct MfaArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub mfa: MfaOptions,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CwtSource {
    /// ln of the price.
    Logprice,
    /// Normalized log returns.
    Returns,
    /// Cumulative normalized returns.
    Profile,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct CwtOptions {
    #[arg(long, default_value_t = 6.0)]
    pub omega0: f64,

    /// Series to transform.
    #[arg(long = "of", value_enum, default_value_t = CwtSource::Logprice)]
    pub source: CwtSource,

    /// Smallest scale of the grid s_j = s0·2^(j·dj).
    #[arg(long, default_value_t = 2.0)]
    pub s0: f64,

    #[arg(long, default_value_t = 0.125)]
    pub dj: f64,

    /// Scales at which to export time slices (nearest grid point).
    #[arg(long, value_delimiter = ',', default_value = "512,2048")]
    pub slices: Vec<f64>,

    /// White-noise realizations behind the 95% significance level.
    #[arg(long, default_value_t = 8)]
    pub significance_draws: usize,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct CwtArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub cwt: CwtOptions,

    /// Skip the long-form scalogram table (slices and scale power only).
    #[arg(long)]
    pub no_scalogram: bool,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct SpectrumArgs {
    #[command(flatten)]
    pub levels: LevelArgs,

    #[arg(long, default_value = "none", value_parser = parse_window)]
    pub window: Window,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct AlphaOptions {
    /// Fit band in cycles per sample, `lo,hi`.
    #[arg(long, default_value = "0.05,0.5", value_parser = parse_f64_pair)]
    pub band: (f64, f64),

    #[arg(long = "alpha-window", default_value = "hann", value_parser = parse_window)]
    pub window: Window,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct AlphaArgs {
    #[command(flatten)]
    pub levels: LevelArgs,
    #[command(flatten)]
    pub alpha: AlphaOptions,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SynthKindArg {
    White,
    Fbm,
    Cascade,
    SpectralSlope,
    Sinusoids,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct SynthArgs {
    #[arg(long, value_enum)]
    pub kind: SynthKindArg,

    /// Number of samples (increments for white/fbm/cascade).
    #[arg(long, default_value_t = 16384)]
    pub n: usize,

    /// Hurst exponent (fbm).
    #[arg(long = "H", alias = "hurst", default_value_t = 0.5)]
    pub hurst: f64,

    /// Cascade weight.
    #[arg(long, default_value_t = 0.6)]
    pub m0: f64,

    /// Spectral exponent.
    #[arg(long, default_value_t = -3.0, allow_negative_numbers = true)]
    pub beta: f64,

    /// Sinusoid periods in samples.
    #[arg(long, value_delimiter = ',', default_value = "64")]
    pub periods: Vec<f64>,

    /// Sinusoid phases in radians.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub phases: Vec<f64>,

    /// Output file (default: <out>/<kind>-<seed>.csv).
    #[arg(long)]
    #[serde(skip)]
    pub output: Option<PathBuf>,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct ReportArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub mfa: MfaOptions,
    #[command(flatten)]
    pub cwt: CwtOptions,
    #[command(flatten)]
    pub alpha: AlphaOptions,

    /// Levels for fluctuations, moments and spectra.
    #[arg(long, value_parser = parse_levels)]
    pub levels: Option<Levels>,

    #[arg(long, default_value_t = 0.75)]
    pub max_lag_fraction: f64,

    /// Significance level of the KS test.
    #[arg(long = "ks-alpha", default_value_t = 0.05)]
    pub ks_alpha: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct Levels(pub Vec<usize>);

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct QGrid(pub Vec<f64>);

fn parse_wavelet(s: &str) -> Result<Wavelet, String> {
    s.parse().map_err(|e: wavefrac::Error| e.to_string())
}

fn parse_boundary(s: &str) -> Result<Boundary, String> {
    s.parse().map_err(|e: wavefrac::Error| e.to_string())
}

fn parse_window(s: &str) -> Result<Window, String> {
    s.parse().map_err(|e: wavefrac::Error| e.to_string())
}

fn parse_levels(s: &str) -> Result<Levels, String> {
    let mut out = Vec::new();
    for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        if let Some((a, b)) = part.split_once('-') {
            let a: usize = a
                .trim()
                .parse()
                .map_err(|_| format!("bad level range `{part}`"))?;
            let b: usize = b
                .trim()
                .parse()
                .map_err(|_| format!("bad level range `{part}`"))?;
            if a > b {
                return Err(format!("empty level range `{part}`"));
            }
            out.extend(a..=b);
        } else {
            out.push(part.parse().map_err(|_| format!("bad level `{part}`"))?);
        }
    }
    if out.is_empty() {
        return Err("no levels given".into());
    }
    out.sort_unstable();
    out.dedup();
    Ok(Levels(out))
}

fn parse_q_grid(s: &str) -> Result<QGrid, String> {
    let num = |t: &str| {
        t.trim()
            .parse::<f64>()
            .map_err(|_| format!("bad number `{t}`"))
    };
    let parts: Vec<&str> = s.split(':').collect();
    let q = if parts.len() == 3 {
        let (lo, hi, step) = (num(parts[0])?, num(parts[1])?, num(parts[2])?);
        if step.is_nan() || step <= 0.0 || hi < lo {
            return Err(format!("bad q range `{s}`"));
        }
        let count = ((hi - lo) / step + 1e-9).floor() as usize;
        // snap to the step lattice so 0 is hit exactly
        (0..=count)
            .map(|i| {
                let v = lo + i as f64 * step;
                (v / step).round() * step
            })
            .collect()
    } else {
        s.split(',').map(num).collect::<Result<Vec<_>, _>>()?
    };
    if q.is_empty() {
        return Err("empty q grid".into());
    }
    Ok(QGrid(q))
}

fn parse_f64_pair(s: &str) -> Result<(f64, f64), String> {
    let (a, b) = s
        .split_once(',')
        .ok_or_else(|| format!("expected `lo,hi`, got `{s}`"))?;
    let a = a.trim().parse().map_err(|_| format!("bad number `{a}`"))?;
    let b = b.trim().parse().map_err(|_| format!("bad number `{b}`"))?;
    Ok((a, b))
}

fn parse_usize_pair(s: &str) -> Result<(usize, usize), String> {
    let (a, b) = s
        .split_once(',')
        .ok_or_else(|| format!("expected `lo,hi`, got `{s}`"))?;
    let a = a.trim().parse().map_err(|_| format!("bad integer `{a}`"))?;
    let b = b.trim().parse().map_err(|_| format!("bad integer `{b}`"))?;
    Ok((a, b))
}
