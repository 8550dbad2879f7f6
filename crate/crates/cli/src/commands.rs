use std::path::PathBuf;

use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};
use wavefrac::cwt::{
    fourier_wavelength, morlet_cwt, scale_grid, scale_slice, significance_threshold, Scalogram,
};
use wavefrac::dwt::{daubechies_filter, max_level};
use wavefrac::io::{emit_table, Column, Table, TableFormat};
use wavefrac::mfa::{
    build_profile, level_fluctuations, multifractal_report, LevelFluctuations, MfaConfig, MfaRun,
    MultifractalReport,
};
use wavefrac::returns::{
    autocorrelation, ks_test_gaussian, moments, normalized_log_returns, population_variance,
    KsResult, MomentsReport, ReturnsSeries,
};
use wavefrac::rng::derive_seed_str;
use wavefrac::spectral::{
    alpha_table, alpha_vs_scale, power_spectrum, AlphaScanConfig, LevelSpectrum, Window,
};
use wavefrac::synth::{generate, SynthKind, SynthSpec};
use wavefrac::{Error, TimeSeries};

use crate::args::*;
use crate::inputs::{assign_slugs, load_one, Loaded};
use crate::output::Sink;

/// Largest level analysed when `--levels` is not given.
pub const DEFAULT_MAX_LEVEL: usize = 10;
const SIGNIFICANCE_QUANTILE: f64 = 0.95;

/// A command error, tagged with the input it concerns when there is one.
#[derive(Debug)]
pub struct Failure {
    pub error: Error,
    pub input: Option<String>,
}

impl From<Error> for Failure {
    fn from(error: Error) -> Self {
        Failure { error, input: None }
    }
}

impl Failure {
    pub fn record(&self, subcommand: &str) -> Value {
        json!({
            "error": {
                "kind": self.error.kind(),
                "message": self.error.to_string(),
                "subcommand": subcommand,
                "input": self.input,
            }
        })
    }
}

type CmdResult = Result<Vec<PathBuf>, Failure>;

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Ingest(_) => "ingest",
            Command::Returns(_) => "returns",
            Command::Acf(_) => "acf",
            Command::Moments(_) => "moments",
            Command::Ks(_) => "ks",
            Command::Fluct(_) => "fluct",
            Command::Mfa(_) => "mfa",
            Command::Cwt(_) => "cwt",
            Command::Spectrum(_) => "spectrum",
            Command::AlphaScan(_) => "alpha-scan",
            Command::Synth(_) => "synth",
            Command::Report(_) => "report",
        }
    }
}

/// Run configuration recorded in every artifact. The output directory and
/// verbosity are left out so the bytes depend only on what was computed.
pub fn config_value(cli: &Cli) -> Value {
    json!({
        "version": env!("CARGO_PKG_VERSION"),
        "seed": cli.global.seed,
        "command": cli.command,
    })
}

pub fn dispatch(cli: &Cli) -> CmdResult {
    let seed = cli.global.seed;
    let root = Sink::new(&cli.global.out, cli.global.format, config_value(cli))?;
    match &cli.command {
        Command::Ingest(a) => per_input(a, seed, &root, |l, sink, w| {
            sink.table("prices", prices_table(l), w)
        }),
        Command::Returns(a) => per_input(a, seed, &root, |l, sink, w| {
            let r = normalized_log_returns(&l.series)?;
            sink.table("returns", returns_table(&l.series, &r), w)
        }),
        Command::Acf(a) => per_input(&a.input, seed, &root, |l, sink, w| {
            let r = normalized_log_returns(&l.series)?;
            sink.table("acf", acf_table(&r, a.max_lag_fraction)?, w)
        }),
        Command::Moments(a) => per_input(&a.input, seed, &root, |l, sink, w| {
            let (r, lf) = fluctuations(&l.series, &a.wavelet, a.levels.as_ref())?;
            sink.table("moments", moments_table(&r, &lf)?, w)
        }),
        Command::Ks(a) => per_input(&a.levels.input, seed, &root, |l, sink, w| {
            let (r, lf) = fluctuations(&l.series, &a.levels.wavelet, a.levels.levels.as_ref())?;
            sink.table("ks", ks_table(&r, &lf, a.alpha)?, w)
        }),
        Command::Fluct(a) => per_input(&a.input, seed, &root, |l, sink, w| {
            let (_, lf) = fluctuations(&l.series, &a.wavelet, a.levels.as_ref())?;
            sink.table("fluctuations", fluct_table(&lf), w)
        }),
        Command::Mfa(a) => per_input(&a.input, seed, &root, |l, sink, w| {
            write_mfa(l, &a.mfa, seed, sink, w).map(drop)
        }),
        Command::Cwt(a) => per_input(&a.input, seed, &root, |l, sink, w| {
            write_cwt(l, &a.cwt, !a.no_scalogram, seed, sink, w)
        }),
        Command::Spectrum(a) => per_input(&a.levels.input, seed, &root, |l, sink, w| {
            let (_, lf) = fluctuations(&l.series, &a.levels.wavelet, a.levels.levels.as_ref())?;
            sink.table("spectra", spectra_table(&lf, a.window)?, w)
        }),
        Command::AlphaScan(a) => per_input(&a.levels.input, seed, &root, |l, sink, w| {
            let levels = resolve_levels(&l.series, a.levels.levels.as_ref())?;
            write_alpha(l, &a.levels.wavelet, &a.alpha, &levels, sink, w).map(drop)
        }),
        Command::Synth(a) => synth(a, seed, &root),
        Command::Report(a) => report(a, seed, &root),
    }
}

fn load_all(args: &InputArgs, seed: u64) -> Result<Vec<Loaded>, Failure> {
    let got: Vec<(TimeSeries, Value)> = args
        .inputs
        .par_iter()
        .map(|input| {
            load_one(input, args, seed).map_err(|error| Failure {
                error,
                input: Some(input.clone()),
            })
        })
        .collect::<Result<_, _>>()?;
    let tickers: Vec<String> = got.iter().map(|(s, _)| s.ticker().to_string()).collect();
    Ok(got
        .into_iter()
        .zip(assign_slugs(&tickers))
        .zip(&args.inputs)
        .map(|(((series, provenance), slug), input)| Loaded {
            input: input.clone(),
            series,
            slug,
            provenance,
        })
        .collect())
}

/// Runs `f` for every input (in parallel) inside `<out>/<ticker>/`; the first
/// failure in input order wins.
fn per_input<F>(args: &InputArgs, seed: u64, root: &Sink, f: F) -> CmdResult
where
    F: Fn(&Loaded, &Sink, &mut Vec<PathBuf>) -> wavefrac::Result<()> + Sync,
{
    let loaded = load_all(args, seed)?;
    let per: Vec<Result<Vec<PathBuf>, Failure>> = loaded
        .par_iter()
        .map(|l| {
            let run = || -> wavefrac::Result<Vec<PathBuf>> {
                let sink = root.child(&l.slug)?;
                let mut written = Vec::new();
                f(l, &sink, &mut written)?;
                Ok(written)
            };
            run().map_err(|error| Failure {
                error,
                input: Some(l.input.clone()),
            })
        })
        .collect();
    let mut out = Vec::new();
    for r in per {
        out.extend(r?);
    }
    Ok(out)
}

fn resolve_levels(ts: &TimeSeries, levels: Option<&Levels>) -> wavefrac::Result<Vec<usize>> {
    if let Some(l) = levels {
        return Ok(l.0.clone());
    }
    // the profile has one sample fewer than the prices
    let max = max_level(ts.len().saturating_sub(1)).min(DEFAULT_MAX_LEVEL);
    if max == 0 {
        return Err(Error::TooShort {
            needed: 3,
            got: ts.len(),
            context: "wavelet levels",
        });
    }
    Ok((1..=max).collect())
}

fn fluctuations(
    ts: &TimeSeries,
    wavelet: &WaveletArgs,
    levels: Option<&Levels>,
) -> wavefrac::Result<(ReturnsSeries, LevelFluctuations)> {
    let levels = resolve_levels(ts, levels)?;
    let filter = daubechies_filter(wavelet.wavelet)?;
    let r = normalized_log_returns(ts)?;
    let lf = level_fluctuations(ts, &filter, &levels, wavelet.boundary)?;
    Ok((r, lf))
}

fn prices_table(l: &Loaded) -> Table {
    l.series
        .to_table("Close")
        .with_meta("input", &l.input)
        .with_meta("ingest", &l.provenance)
}

fn returns_table(ts: &TimeSeries, r: &ReturnsSeries) -> Table {
    let n = r.len();
    let mut t = Table::new();
    t.push("t", Column::Int((1..=n as i64).collect()))
        .push(
            "date",
            Column::Text(ts.timestamps()[1..].iter().map(|d| d.to_string()).collect()),
        )
        .push("log_return", Column::Float(r.raw_returns.clone()))
        .push("nlr", Column::Float(r.values.clone()));
    t.with_meta("ticker", ts.ticker())
        .with_meta("mean_return", r.mean_return)
        .with_meta("volatility", r.volatility)
}

fn acf_table(r: &ReturnsSeries, max_lag_fraction: f64) -> wavefrac::Result<Table> {
    let acf = autocorrelation(&r.values, max_lag_fraction)?;
    let mut t = Table::new();
    t.push(
        "lag",
        Column::Int(acf.lags.iter().map(|&l| l as i64).collect()),
    )
    .push(
        "S",
        Column::Float(acf.values.iter().map(|v| v.unwrap_or(f64::NAN)).collect()),
    );
    Ok(t.with_meta("max_lag_fraction", max_lag_fraction))
}

/// Row 0 describes the normalized returns, later rows the level fluctuations.
fn series_rows<'a>(r: &'a ReturnsSeries, lf: &'a LevelFluctuations) -> Vec<(i64, &'a [f64])> {
    std::iter::once((0, r.values.as_slice()))
        .chain(
            lf.levels
                .iter()
                .zip(&lf.fluctuations)
                .map(|(&j, f)| (j as i64, f.as_slice())),
        )
        .collect()
}

fn moments_table(r: &ReturnsSeries, lf: &LevelFluctuations) -> wavefrac::Result<Table> {
    let rows = series_rows(r, lf);
    let stats: Vec<MomentsReport> = rows
        .iter()
        .map(|(_, xs)| moments(xs))
        .collect::<Result<_, _>>()?;
    let mut t = Table::new();
    t.push("level", Column::Int(rows.iter().map(|r| r.0).collect()))
        .push(
            "n",
            Column::Int(rows.iter().map(|r| r.1.len() as i64).collect()),
        )
        .push(
            "mean",
            Column::Float(stats.iter().map(|m| m.mean).collect()),
        )
        .push(
            "std_dev",
            Column::Float(stats.iter().map(|m| m.std_dev).collect()),
        )
        .push(
            "skewness",
            Column::Float(stats.iter().map(|m| m.skewness).collect()),
        )
        .push(
            "kurtosis",
            Column::Float(stats.iter().map(|m| m.kurtosis).collect()),
        );
    Ok(t)
}

fn ks_table(r: &ReturnsSeries, lf: &LevelFluctuations, alpha: f64) -> wavefrac::Result<Table> {
    let rows = series_rows(r, lf);
    let res: Vec<KsResult> = rows
        .iter()
        .map(|(_, xs)| ks_test_gaussian(xs, alpha))
        .collect::<Result<_, _>>()?;
    let mut t = Table::new();
    t.push("level", Column::Int(rows.iter().map(|r| r.0).collect()))
        .push("n", Column::Int(res.iter().map(|k| k.n as i64).collect()))
        .push(
            "statistic",
            Column::Float(res.iter().map(|k| k.statistic).collect()),
        )
        .push(
            "scaled",
            Column::Float(res.iter().map(|k| k.scaled).collect()),
        )
        .push(
            "p_value",
            Column::Float(res.iter().map(|k| k.p_value).collect()),
        )
        .push(
            "reject",
            Column::Int(res.iter().map(|k| i64::from(k.reject)).collect()),
        )
        .push(
            "ref_mean",
            Column::Float(res.iter().map(|k| k.reference_mean).collect()),
        )
        .push(
            "ref_std",
            Column::Float(res.iter().map(|k| k.reference_std).collect()),
        );
    Ok(t.with_meta("alpha", alpha)
        .with_meta("reference", "gaussian, estimated"))
}

fn fluct_table(lf: &LevelFluctuations) -> Table {
    let n = lf.profile.len();
    let mut t = Table::new();
    t.push("t", Column::Int((0..n as i64).collect()))
        .push("profile", Column::Float(lf.profile.values.clone()));
    for (j, f) in lf.levels.iter().zip(&lf.fluctuations) {
        t.push(format!("level_{j}"), Column::Float(f.clone()));
    }
    t
}

fn spectra_table(lf: &LevelFluctuations, window: Window) -> wavefrac::Result<Table> {
    let spectra = lf
        .fluctuations
        .par_iter()
        .map(|f| power_spectrum(f, window))
        .collect::<wavefrac::Result<Vec<_>>>()?;
    let (mut level, mut k, mut p) = (Vec::new(), Vec::new(), Vec::new());
    for (&j, s) in lf.levels.iter().zip(&spectra) {
        level.extend(std::iter::repeat_n(j as i64, s.freqs.len()));
        k.extend_from_slice(&s.freqs);
        p.extend_from_slice(&s.power);
    }
    let dc: Vec<f64> = spectra.iter().map(|s| s.dc_power).collect();
    let mut t = Table::new();
    t.push("level", Column::Int(level))
        .push("k", Column::Float(k))
        .push("power", Column::Float(p));
    Ok(t.with_meta("window", window).with_meta("dc_power", dc))
}

#[derive(Debug, Clone, Serialize)]
struct FitSummary {
    hurst: f64,
    hurst_stderr: f64,
    delta_h: f64,
    fit_range: (usize, usize),
}

impl From<&MfaRun> for FitSummary {
    fn from(r: &MfaRun) -> Self {
        FitSummary {
            hurst: r.hq.hurst,
            hurst_stderr: r.hq.hurst_stderr,
            delta_h: r.hq.delta_h,
            fit_range: r.hq.fit_range,
        }
    }
}

fn write_mfa(
    l: &Loaded,
    opts: &MfaOptions,
    seed: u64,
    sink: &Sink,
    w: &mut Vec<PathBuf>,
) -> wavefrac::Result<MultifractalReport> {
    let cfg = MfaConfig {
        wavelet: opts.wavelet.wavelet,
        boundary: opts.wavelet.boundary,
        q: opts.q.0.clone(),
        scales: opts.scales.clone(),
        fit_range: opts.fit_range,
        seed: derive_seed_str(seed, &format!("shuffle/{}", l.slug)),
    };
    let rep = multifractal_report(&l.series, &cfg)?;

    let mut fq = Table::new();
    let (mut series, mut q, mut s, mut level, mut segs, mut f) = (
        Vec::new(),
        Vec::new(),
        Vec::new(),
        Vec::new(),
        Vec::new(),
        Vec::new(),
    );
    for (name, run) in [("original", &rep.original), ("shuffled", &rep.shuffled)] {
        let ff = &run.fluctuation;
        for (qi, &qv) in ff.q.iter().enumerate() {
            for si in 0..ff.scales.len() {
                series.push(name.to_string());
                q.push(qv);
                s.push(ff.scales[si] as i64);
                level.push(ff.levels[si] as i64);
                segs.push(ff.segments[si] as i64);
                f.push(ff.get(qi, si).unwrap_or(f64::NAN));
            }
        }
    }
    fq.push("series", Column::Text(series))
        .push("q", Column::Float(q))
        .push("s", Column::Int(s))
        .push("level", Column::Int(level))
        .push("segments", Column::Int(segs))
        .push("F", Column::Float(f));
    sink.table("fq", fq, w)?;

    let (o, sh) = (&rep.original.hq, &rep.shuffled.hq);
    let mut hq = Table::new();
    hq.push("q", Column::Float(o.q.clone()))
        .push("h", Column::Float(o.h.clone()))
        .push("stderr", Column::Float(o.stderr.clone()))
        .push("residual_se", Column::Float(o.residual_se.clone()))
        .push(
            "points",
            Column::Int(o.points.iter().map(|&p| p as i64).collect()),
        )
        .push("h_shuffled", Column::Float(sh.h.clone()))
        .push("stderr_shuffled", Column::Float(sh.stderr.clone()));
    sink.table("hq", hq, w)?;

    sink.document(
        "mfa_summary",
        &json!({
            "ticker": rep.ticker,
            "N": l.series.len(),
            "wavelet": cfg.wavelet,
            "boundary": cfg.boundary,
            "shuffle_seed": cfg.seed,
            "original": FitSummary::from(&rep.original),
            "shuffled": FitSummary::from(&rep.shuffled),
        }),
        w,
    )?;
    Ok(rep)
}

fn cwt_input(ts: &TimeSeries, source: CwtSource) -> wavefrac::Result<Vec<f64>> {
    Ok(match source {
        CwtSource::Logprice => ts.values().iter().map(|v| v.ln()).collect(),
        CwtSource::Returns => normalized_log_returns(ts)?.values,
        CwtSource::Profile => build_profile(&normalized_log_returns(ts)?).values,
    })
}

fn write_cwt(
    l: &Loaded,
    opts: &CwtOptions,
    full: bool,
    seed: u64,
    sink: &Sink,
    w: &mut Vec<PathBuf>,
) -> wavefrac::Result<()> {
    l.series.ensure_positive()?;
    let xs = cwt_input(&l.series, opts.source)?;
    let n = xs.len();
    if !(opts.s0 > 0.0 && opts.dj > 0.0) {
        return Err(Error::InvalidParameter("s0 and dj must be positive".into()));
    }
    let scales = scale_grid(opts.s0, opts.dj, n as f64 / 2.0);
    let sg = morlet_cwt(&xs, &scales, opts.omega0)?;
    if full {
        sink.table("scalogram", sg.to_long_table(), w)?;
    }
    sink.table("cwt_power", scale_power_table(&sg), w)?;

    let top = *scales.last().unwrap_or(&0.0);
    let slices: Vec<f64> = opts
        .slices
        .iter()
        .copied()
        .filter(|&s| s > 0.0 && s <= top)
        .collect();
    for &s in opts.slices.iter().filter(|&&s| !(s > 0.0 && s <= top)) {
        log::warn!(
            "{}: slice scale {s} outside the grid (max {top}); skipped",
            l.slug
        );
    }
    if slices.is_empty() {
        return Ok(());
    }
    let picked = slices
        .iter()
        .map(|&s| scale_slice(&sg, s))
        .collect::<wavefrac::Result<Vec<_>>>()?;
    let grid: Vec<f64> = picked.iter().map(|p| p.scale).collect();
    let sig_seed = derive_seed_str(seed, &format!("cwt-significance/{}", l.slug));
    let thr = significance_threshold(
        n,
        &grid,
        opts.omega0,
        opts.significance_draws,
        SIGNIFICANCE_QUANTILE,
        sig_seed,
    )?;
    let sigma = population_variance(&xs).sqrt();
    for (p, &th) in picked.iter().zip(&thr) {
        let significant = p
            .values
            .iter()
            .zip(&p.reliable)
            .map(|(v, &ok)| i64::from(ok && v.norm() > th * sigma))
            .collect();
        let mut t = p.to_table();
        t.push("significant", Column::Int(significant));
        let t = t
            .with_meta("threshold", th * sigma)
            .with_meta("significance_quantile", SIGNIFICANCE_QUANTILE)
            .with_meta("significance_draws", opts.significance_draws)
            .with_meta("significance_seed", sig_seed)
            .with_meta("omega0", opts.omega0)
            .with_meta("source", opts.source);
        sink.table(&format!("cwt_slice_{}", p.requested), t, w)?;
    }
    Ok(())
}

fn scale_power_table(sg: &Scalogram) -> Table {
    let (n, _) = sg.dims();
    let reliable: Vec<f64> = (0..sg.scales.len())
        .map(|j| (0..n).filter(|&t| !sg.in_coi(t, j)).count() as f64 / n as f64)
        .collect();
    let mut t = Table::new();
    t.push("s", Column::Float(sg.scales.clone()))
        .push(
            "wavelength",
            Column::Float(
                sg.scales
                    .iter()
                    .map(|&s| fourier_wavelength(s, sg.omega0))
                    .collect(),
            ),
        )
        .push("power", Column::Float(sg.scale_power(false)))
        .push("power_reliable", Column::Float(sg.scale_power(true)))
        .push("reliable_fraction", Column::Float(reliable));
    t.with_meta("cwt", sg.metadata())
}

fn write_alpha(
    l: &Loaded,
    wavelet: &WaveletArgs,
    opts: &AlphaOptions,
    levels: &[usize],
    sink: &Sink,
    w: &mut Vec<PathBuf>,
) -> wavefrac::Result<Vec<LevelSpectrum>> {
    let cfg = AlphaScanConfig {
        band: opts.band,
        window: opts.window,
        boundary: wavelet.boundary,
    };
    let filter = daubechies_filter(wavelet.wavelet)?;
    let scan = alpha_vs_scale(&l.series, &filter, levels, &cfg)?;
    let mut t = alpha_table(&scan);
    let run = |f: fn(&wavefrac::spectral::RisingRun) -> f64| {
        Column::Float(
            scan.iter()
                .map(|ls| ls.fit.rising_run.as_ref().map_or(f64::NAN, f))
                .collect(),
        )
    };
    t.push(
        "intercept",
        Column::Float(scan.iter().map(|l| l.fit.intercept).collect()),
    )
    .push(
        "residual_se",
        Column::Float(scan.iter().map(|l| l.fit.residual_se).collect()),
    )
    .push("rising_run_bins", run(|r| r.bins as f64))
    .push("rising_run_k_start", run(|r| r.k_start))
    .push("rising_run_k_end", run(|r| r.k_end));
    let t = t
        .with_meta("band", cfg.band)
        .with_meta("window", cfg.window);
    sink.table("alpha", t, w)?;
    Ok(scan)
}

fn synth(a: &SynthArgs, seed: u64, root: &Sink) -> CmdResult {
    let kind = match a.kind {
        SynthKindArg::White => SynthKind::WhiteNoise,
        SynthKindArg::Fbm => SynthKind::Fbm { hurst: a.hurst },
        SynthKindArg::Cascade => SynthKind::BinomialCascade { m0: a.m0 },
        SynthKindArg::SpectralSlope => SynthKind::SpectralSlope { beta: a.beta },
        SynthKindArg::Sinusoids => SynthKind::SinusoidMix {
            periods: a.periods.clone(),
            phases: a.phases.clone(),
        },
    };
    let spec = SynthSpec {
        kind,
        len: a.n,
        seed,
    };
    let ts = generate(&spec)?;
    let path = a
        .output
        .clone()
        .unwrap_or_else(|| root.path().join(format!("{}.csv", ts.ticker())));
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::Io {
            path: dir.to_path_buf(),
            source: e,
        })?;
    }
    // always CSV: the file is meant to be fed back in as an input
    let table = ts
        .to_table("Close")
        .with_meta("synth", &spec)
        .with_meta("config", root.config());
    emit_table(&table, &path, TableFormat::Csv)?;
    Ok(vec![path])
}

#[derive(Debug, Clone)]
struct SummaryRow {
    ticker: String,
    n: usize,
    mean_return: f64,
    volatility: f64,
    skewness: f64,
    kurtosis: f64,
    ks_p: f64,
    hurst: f64,
    hurst_stderr: f64,
    hurst_shuffled: f64,
    delta_h: f64,
    delta_h_shuffled: f64,
    alpha_top: f64,
}

fn report(a: &ReportArgs, seed: u64, root: &Sink) -> CmdResult {
    let loaded = load_all(&a.input, seed)?;
    let per: Vec<Result<(Vec<PathBuf>, SummaryRow), Failure>> = loaded
        .par_iter()
        .map(|l| {
            report_one(l, a, seed, root).map_err(|error| Failure {
                error,
                input: Some(l.input.clone()),
            })
        })
        .collect();
    let mut written = Vec::new();
    let mut rows = Vec::new();
    for r in per {
        let (w, row) = r?;
        written.extend(w);
        rows.push(row);
    }
    root.table("summary", summary_table(&rows), &mut written)?;
    Ok(written)
}

fn report_one(
    l: &Loaded,
    a: &ReportArgs,
    seed: u64,
    root: &Sink,
) -> wavefrac::Result<(Vec<PathBuf>, SummaryRow)> {
    let sink = root.child(&l.slug)?;
    let mut w = Vec::new();
    let ts = &l.series;
    let r = normalized_log_returns(ts)?;
    sink.table("prices", prices_table(l), &mut w)?;
    sink.table("returns", returns_table(ts, &r), &mut w)?;
    sink.table("acf", acf_table(&r, a.max_lag_fraction)?, &mut w)?;

    let wl = &a.mfa.wavelet;
    let levels = resolve_levels(ts, a.levels.as_ref())?;
    let (r, lf) = fluctuations(ts, wl, Some(&Levels(levels.clone())))?;
    sink.table("fluctuations", fluct_table(&lf), &mut w)?;
    sink.table("moments", moments_table(&r, &lf)?, &mut w)?;
    let ks = ks_test_gaussian(&r.values, a.ks_alpha)?;
    sink.table("ks", ks_table(&r, &lf, a.ks_alpha)?, &mut w)?;
    sink.table("spectra", spectra_table(&lf, Window::None)?, &mut w)?;

    let mfa = write_mfa(l, &a.mfa, seed, &sink, &mut w)?;
    write_cwt(l, &a.cwt, false, seed, &sink, &mut w)?;
    let scan = write_alpha(l, wl, &a.alpha, &levels, &sink, &mut w)?;

    let m = moments(&r.values)?;
    let row = SummaryRow {
        ticker: ts.ticker().to_string(),
        n: ts.len(),
        mean_return: r.mean_return,
        volatility: r.volatility,
        skewness: m.skewness,
        kurtosis: m.kurtosis,
        ks_p: ks.p_value,
        hurst: mfa.original.hq.hurst,
        hurst_stderr: mfa.original.hq.hurst_stderr,
        hurst_shuffled: mfa.shuffled.hq.hurst,
        delta_h: mfa.original.hq.delta_h,
        delta_h_shuffled: mfa.shuffled.hq.delta_h,
        alpha_top: scan.last().map_or(f64::NAN, |s| s.fit.alpha),
    };
    Ok((w, row))
}

fn summary_table(rows: &[SummaryRow]) -> Table {
    let f = |g: fn(&SummaryRow) -> f64| Column::Float(rows.iter().map(g).collect());
    let mut t = Table::new();
    t.push(
        "ticker",
        Column::Text(rows.iter().map(|r| r.ticker.clone()).collect()),
    )
    .push("N", Column::Int(rows.iter().map(|r| r.n as i64).collect()))
    .push("mean_return", f(|r| r.mean_return))
    .push("volatility", f(|r| r.volatility))
    .push("skewness", f(|r| r.skewness))
    .push("kurtosis", f(|r| r.kurtosis))
    .push("ks_p", f(|r| r.ks_p))
    .push("hurst", f(|r| r.hurst))
    .push("hurst_stderr", f(|r| r.hurst_stderr))
    .push("hurst_shuffled", f(|r| r.hurst_shuffled))
    .push("delta_h", f(|r| r.delta_h))
    .push("delta_h_shuffled", f(|r| r.delta_h_shuffled))
    .push("alpha_top", f(|r| r.alpha_top));
    t
}
