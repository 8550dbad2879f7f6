//! One-sided periodograms and power-law slope fits, per wavelet level.
//!
//! Normalization: with X_m the DFT of the (optionally windowed) series,
//!
//! ```text
//! P_m = 2|X_m|²/N  for 0 < m < N/2,    P_{N/2} = |X_{N/2}|²/N
//! ```
//!
//! and the DC term |X_0|²/N is kept aside, so `Σ P + dc = Σ x²`.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::Serialize;

use crate::dwt::{Boundary, WaveletFilter};
use crate::error::{Error, Result};
use crate::fit::ols;
use crate::io::{Column, Table, TimeSeries};
use crate::mfa::level_fluctuations;

pub const MIN_LEN: usize = 32;
pub const MIN_FIT_BINS: usize = 8;
pub const DEFAULT_BAND: (f64, f64) = (0.05, 0.5);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Window {
    #[default]
    None,
    Hann,
}

impl fmt::Display for Window {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Window::None => "none",
            Window::Hann => "hann",
        })
    }
}

impl FromStr for Window {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "none" | "rect" | "boxcar" => Ok(Window::None),
            "hann" | "hanning" => Ok(Window::Hann),
            other => Err(Error::invalid(format!("unknown window `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PowerSpectrum {
    /// Cycles per sample, m/N for m = 1..=⌊N/2⌋.
    pub freqs: Vec<f64>,
    pub power: Vec<f64>,
    pub dc_power: f64,
    pub len: usize,
    pub window: Window,
    pub level: Option<usize>,
}

impl PowerSpectrum {
    pub fn total_power(&self) -> f64 {
        self.power.iter().sum::<f64>() + self.dc_power
    }

    pub fn to_table(&self) -> Table {
        let mut t = Table::new();
        t.push("k", Column::Float(self.freqs.clone()))
            .push("power", Column::Float(self.power.clone()));
        t.with_meta("window", self.window)
            .with_meta("len", self.len)
            .with_meta("level", self.level)
            .with_meta("dc_power", self.dc_power)
    }
}

fn hann(n: usize) -> Vec<f64> {
    // periodic form; symmetric variant would drop one bin of resolution
    (0..n)
        .map(|i| 0.5 - 0.5 * (2.0 * std::f64::consts::PI * i as f64 / n as f64).cos())
        .collect()
}

pub fn power_spectrum(xs: &[f64], window: Window) -> Result<PowerSpectrum> {
    let n = xs.len();
    if n < MIN_LEN {
        return Err(Error::TooShort {
            needed: MIN_LEN,
            got: n,
            context: "power spectrum",
        });
    }
    if let Some(i) = xs.iter().position(|x| !x.is_finite()) {
        return Err(Error::NonFinite(i));
    }
    let mut buf: Vec<Complex64> = match window {
        Window::None => xs.iter().map(|&x| Complex64::new(x, 0.0)).collect(),
        Window::Hann => xs
            .iter()
            .zip(hann(n))
            .map(|(&x, w)| Complex64::new(x * w, 0.0))
            .collect(),
    };
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let nf = n as f64;
    let half = n / 2;
    let power = (1..=half)
        .map(|m| {
            let p = buf[m].norm_sqr() / nf;
            if 2 * m == n {
                p
            } else {
                2.0 * p
            }
        })
        .collect();
    Ok(PowerSpectrum {
        freqs: (1..=half).map(|m| m as f64 / nf).collect(),
        power,
        dc_power: buf[0].norm_sqr() / nf,
        len: n,
        window,
        level: None,
    })
}

/// Longest run of consecutive positive residuals against the fitted line;
/// flags mid-band bumps without modelling them.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RisingRun {
    pub bins: usize,
    pub k_start: f64,
    pub k_end: f64,
    /// Largest ln-residual inside the run.
    pub peak_excess: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PowerLawFit {
    pub alpha: f64,
    /// ln P ≈ intercept + α ln k
    pub intercept: f64,
    pub band: (f64, f64),
    pub stderr: f64,
    pub residual_se: f64,
    pub bins: usize,
    pub level: Option<usize>,
    pub rising_run: Option<RisingRun>,
}

pub fn fit_power_law(ps: &PowerSpectrum, band: (f64, f64)) -> Result<PowerLawFit> {
    let (lo, hi) = band;
    if lo.is_nan() || lo >= hi || lo < 0.0 || !hi.is_finite() {
        return Err(Error::invalid(format!("bad frequency band [{lo}, {hi}]")));
    }
    let (lk, lp): (Vec<f64>, Vec<f64>) = ps
        .freqs
        .iter()
        .zip(&ps.power)
        .filter(|&(&k, &p)| k >= lo && k <= hi && p > 0.0)
        .map(|(&k, &p)| (k.ln(), p.ln()))
        .unzip();
    if lk.len() < MIN_FIT_BINS {
        return Err(Error::InsufficientPoints {
            needed: MIN_FIT_BINS,
            got: lk.len(),
        });
    }
    let line = ols(&lk, &lp, MIN_FIT_BINS)?;
    let resid: Vec<f64> = lk
        .iter()
        .zip(&lp)
        .map(|(&x, &y)| y - line.predict(x))
        .collect();
    Ok(PowerLawFit {
        alpha: line.slope,
        intercept: line.intercept,
        band,
        stderr: line.slope_stderr,
        residual_se: line.residual_se,
        bins: lk.len(),
        level: ps.level,
        rising_run: rising_run(&lk, &resid),
    })
}

fn rising_run(lk: &[f64], resid: &[f64]) -> Option<RisingRun> {
    let mut best: Option<(usize, usize)> = None;
    let mut start = None;
    for i in 0..=resid.len() {
        let pos = i < resid.len() && resid[i] > 0.0;
        match (pos, start) {
            (true, None) => start = Some(i),
            (false, Some(s)) => {
                if best.is_none_or(|(bs, be)| i - s > be - bs) {
                    best = Some((s, i));
                }
                start = None;
            }
            _ => {}
        }
    }
    best.map(|(s, e)| RisingRun {
        bins: e - s,
        k_start: lk[s].exp(),
        k_end: lk[e - 1].exp(),
        peak_excess: resid[s..e].iter().copied().fold(f64::MIN, f64::max),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AlphaScanConfig {
    pub band: (f64, f64),
    pub window: Window,
    pub boundary: Boundary,
}

impl Default for AlphaScanConfig {
    fn default() -> Self {
        Self {
            band: DEFAULT_BAND,
            window: Window::Hann,
            boundary: Boundary::Symmetric,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LevelSpectrum {
    pub level: usize,
    pub spectrum: PowerSpectrum,
    pub fit: PowerLawFit,
}

/// For each level: spectrum of the level-j fluctuation of the normalized
/// return profile (a cumulative series), and its power-law fit.
pub fn alpha_vs_scale(
    ts: &TimeSeries,
    filter: &WaveletFilter,
    levels: &[usize],
    cfg: &AlphaScanConfig,
) -> Result<Vec<LevelSpectrum>> {
    let lf = level_fluctuations(ts, filter, levels, cfg.boundary)?;
    lf.levels
        .par_iter()
        .zip(&lf.fluctuations)
        .map(|(&level, fl)| {
            let mut spectrum = power_spectrum(fl, cfg.window)?;
            spectrum.level = Some(level);
            let fit = fit_power_law(&spectrum, cfg.band)?;
            Ok(LevelSpectrum {
                level,
                spectrum,
                fit,
            })
        })
        .collect()
}

/// (level, α, stderr) summary.
pub fn alpha_table(scan: &[LevelSpectrum]) -> Table {
    let mut t = Table::new();
    t.push(
        "level",
        Column::Int(scan.iter().map(|l| l.level as i64).collect()),
    )
    .push(
        "alpha",
        Column::Float(scan.iter().map(|l| l.fit.alpha).collect()),
    )
    .push(
        "stderr",
        Column::Float(scan.iter().map(|l| l.fit.stderr).collect()),
    )
    .push(
        "bins",
        Column::Int(scan.iter().map(|l| l.fit.bins as i64).collect()),
    );
    t
}
