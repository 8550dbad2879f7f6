//! Wavelet-based multifractal fluctuation analysis.
//!
//! The profile Y (cumulative normalized returns) is split at wavelet level
//! `j` into a trend and a fluctuation, once forwards and once on the reversed
//! profile; the two fluctuation series are averaged. For each segment length
//! `s` the fluctuation at the paired level is cut into `M_s = ⌊N/s⌋`
//! segments from the start and `M_s` from the end, and
//!
//! ```text
//! F_q(s) = [ 1/(2M_s) Σ_ν (F²(ν, s))^{q/2} ]^{1/q},   q ≠ 0
//! F_0(s) = exp( 1/(2M_s) Σ_ν ½ ln F²(ν, s) )
//! ```
//!
//! where F²(ν, s) is the mean square fluctuation in segment ν. The slope of
//! log₂ F_q(s) against log₂ s is h(q); h(2) is the Hurst exponent.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::Serialize;

use crate::dwt::{extract_fluctuations, max_level, Boundary, Wavelet, WaveletFilter};
use crate::error::{Error, Result};
use crate::fit::ols;
use crate::io::TimeSeries;
use crate::returns::{normalize_returns, normalized_log_returns, shuffle, ReturnsSeries};

/// Cumulative sum of normalized returns.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Profile {
    pub values: Vec<f64>,
}

impl Profile {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Running sum with Neumaier compensation.
pub fn cumulative_sum(xs: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(xs.len());
    let (mut sum, mut comp) = (0.0f64, 0.0f64);
    for &x in xs {
        let t = sum + x;
        if sum.abs() >= x.abs() {
            comp += (sum - t) + x;
        } else {
            comp += (x - t) + sum;
        }
        sum = t;
        out.push(sum + comp);
    }
    out
}

pub fn build_profile(r: &ReturnsSeries) -> Profile {
    Profile {
        values: cumulative_sum(&r.values),
    }
}

/// Wavelet level whose trend support matches a window of `scale` samples:
/// max(1, ⌈log₂(s / L)⌉) for a filter of `taps` coefficients.
pub fn level_for_scale(scale: usize, taps: usize) -> usize {
    let ratio = scale as f64 / taps as f64;
    if ratio <= 2.0 {
        return 1;
    }
    // integer search avoids float rounding at exact powers of two
    let mut j = 1usize;
    while ((taps as u128) << j) < scale as u128 {
        j += 1;
    }
    j
}

/// Average of the forward fluctuation and the reversed fluctuation of the
/// reversed profile.
pub fn bidirectional_fluctuations(
    profile: &[f64],
    filter: &WaveletFilter,
    level: usize,
    boundary: Boundary,
) -> Result<Vec<f64>> {
    let forward = extract_fluctuations(profile, filter, level, boundary)?.fluctuation;
    let reversed: Vec<f64> = profile.iter().rev().copied().collect();
    let backward = extract_fluctuations(&reversed, filter, level, boundary)?.fluctuation;
    Ok(forward
        .iter()
        .zip(backward.iter().rev())
        .map(|(a, b)| 0.5 * (a + b))
        .collect())
}

/// F_q(s) on a (q, s) grid. `values[qi][si]` is `None` where undefined.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FluctuationFunction {
    pub q: Vec<f64>,
    pub scales: Vec<usize>,
    /// M_s = ⌊N/s⌋ per scale.
    pub segments: Vec<usize>,
    /// Wavelet level used for each scale (0 when a single fluctuation series was supplied).
    pub levels: Vec<usize>,
    pub values: Vec<Vec<Option<f64>>>,
    pub len: usize,
}

impl FluctuationFunction {
    pub fn get(&self, qi: usize, si: usize) -> Option<f64> {
        self.values[qi][si]
    }

    /// Largest relative drop of F_q(s) between consecutive (ascending) q at
    /// fixed s. The power-mean inequality makes this ≤ 0 up to rounding.
    pub fn max_monotonicity_violation(&self) -> f64 {
        let mut order: Vec<usize> = (0..self.q.len()).collect();
        order.sort_by(|&a, &b| self.q[a].total_cmp(&self.q[b]));
        let mut worst = f64::NEG_INFINITY;
        for si in 0..self.scales.len() {
            for w in order.windows(2) {
                if let (Some(lo), Some(hi)) = (self.values[w[0]][si], self.values[w[1]][si]) {
                    worst = worst.max((lo - hi) / lo);
                }
            }
        }
        worst
    }
}

/// Mean squared fluctuation of each segment: M_s from the start, then M_s from the end.
pub fn segment_variances(fluct: &[f64], scale: usize) -> Vec<f64> {
    let n = fluct.len();
    let m = n / scale;
    let mean_sq = |seg: &[f64]| seg.iter().map(|v| v * v).sum::<f64>() / seg.len() as f64;
    let head = (0..m).map(|v| mean_sq(&fluct[v * scale..(v + 1) * scale]));
    let tail = (0..m).map(|v| mean_sq(&fluct[n - (v + 1) * scale..n - v * scale]));
    head.chain(tail).collect()
}

/// Generalized mean of segment variances for one q.
pub fn fq_from_variances(variances: &[f64], q: f64) -> Option<f64> {
    if variances.is_empty() || variances.iter().any(|v| !v.is_finite() || *v < 0.0) {
        return None;
    }
    let has_zero = variances.contains(&0.0);
    let n = variances.len() as f64;
    let value = if q == 0.0 {
        if has_zero {
            return None;
        }
        (0.5 * variances.iter().map(|v| v.ln()).sum::<f64>() / n).exp()
    } else {
        if has_zero && q < 0.0 {
            return None;
        }
        // log-sum-exp of (q/2) ln F² keeps |q| = 10 in range
        let logs: Vec<f64> = variances
            .iter()
            .filter(|&&v| v > 0.0)
            .map(|v| 0.5 * q * v.ln())
            .collect();
        if logs.is_empty() {
            return None;
        }
        let top = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let s: f64 = logs.iter().map(|l| (l - top).exp()).sum();
        ((top + (s / n).ln()) / q).exp()
    };
    (value.is_finite() && value > 0.0).then_some(value)
}

fn check_grid(n: usize, q: &[f64], scales: &[usize]) -> Result<()> {
    if q.is_empty() || scales.is_empty() {
        return Err(Error::invalid("empty q or scale grid"));
    }
    if let Some(bad) = q.iter().find(|v| !v.is_finite()) {
        return Err(Error::invalid(format!("non-finite q {bad}")));
    }
    if let Some(&s) = scales.iter().find(|&&s| s < 4 || 4 * s > n) {
        return Err(Error::invalid(format!(
            "scale {s} outside [4, N/4] for N = {n}"
        )));
    }
    Ok(())
}

/// F_q(s) of a single fluctuation series.
pub fn fluctuation_function(
    fluct: &[f64],
    q: &[f64],
    scales: &[usize],
) -> Result<FluctuationFunction> {
    let n = fluct.len();
    check_grid(n, q, scales)?;
    let columns: Vec<Vec<f64>> = scales
        .iter()
        .map(|&s| segment_variances(fluct, s))
        .collect();
    Ok(assemble(q, scales, vec![0; scales.len()], &columns, n))
}

fn assemble(
    q: &[f64],
    scales: &[usize],
    levels: Vec<usize>,
    columns: &[Vec<f64>],
    n: usize,
) -> FluctuationFunction {
    let values = q
        .iter()
        .map(|&qq| columns.iter().map(|v| fq_from_variances(v, qq)).collect())
        .collect();
    FluctuationFunction {
        q: q.to_vec(),
        scales: scales.to_vec(),
        segments: scales.iter().map(|&s| n / s).collect(),
        levels,
        values,
        len: n,
    }
}

/// F_q(s) of a profile, detrending each scale at its paired wavelet level.
pub fn wavelet_fluctuation_function(
    profile: &[f64],
    filter: &WaveletFilter,
    boundary: Boundary,
    q: &[f64],
    scales: &[usize],
) -> Result<FluctuationFunction> {
    let n = profile.len();
    check_grid(n, q, scales)?;
    let levels: Vec<usize> = scales
        .iter()
        .map(|&s| level_for_scale(s, filter.len()))
        .collect();
    let distinct: Vec<usize> = {
        let mut l = levels.clone();
        l.sort_unstable();
        l.dedup();
        l
    };
    let fluct: BTreeMap<usize, Vec<f64>> = distinct
        .par_iter()
        .map(|&j| bidirectional_fluctuations(profile, filter, j, boundary).map(|f| (j, f)))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .collect();
    let columns: Vec<Vec<f64>> = scales
        .par_iter()
        .zip(&levels)
        .map(|(&s, j)| segment_variances(&fluct[j], s))
        .collect();
    let ff = assemble(q, scales, levels, &columns, n);
    debug_assert!(ff.max_monotonicity_violation() <= 1e-12);
    Ok(ff)
}

/// h(q) estimates with fit diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HqCurve {
    pub q: Vec<f64>,
    pub h: Vec<f64>,
    /// Standard error of each slope.
    pub stderr: Vec<f64>,
    pub residual_se: Vec<f64>,
    pub points: Vec<usize>,
    pub hurst: f64,
    pub hurst_stderr: f64,
    /// max h - min h
    pub delta_h: f64,
    pub fit_range: (usize, usize),
}

impl HqCurve {
    pub fn h_at(&self, q: f64) -> Option<f64> {
        self.q.iter().position(|&v| v == q).map(|i| self.h[i])
    }

    pub fn stderr_at(&self, q: f64) -> Option<f64> {
        self.q.iter().position(|&v| v == q).map(|i| self.stderr[i])
    }
}

/// OLS of log₂ F_q(s) on log₂ s for scales within `fit_range` (inclusive,
/// default: every scale). The q grid must contain 2.
pub fn fit_hq(ff: &FluctuationFunction, fit_range: Option<(usize, usize)>) -> Result<HqCurve> {
    let (lo, hi) = fit_range.unwrap_or((
        *ff.scales.iter().min().unwrap_or(&0),
        *ff.scales.iter().max().unwrap_or(&0),
    ));
    if lo > hi {
        return Err(Error::invalid(format!("fit range [{lo}, {hi}] is empty")));
    }
    let in_range: Vec<usize> = (0..ff.scales.len())
        .filter(|&si| (lo..=hi).contains(&ff.scales[si]))
        .collect();
    let mut h = Vec::with_capacity(ff.q.len());
    let mut stderr = Vec::with_capacity(ff.q.len());
    let mut residual_se = Vec::with_capacity(ff.q.len());
    let mut points = Vec::with_capacity(ff.q.len());
    for qi in 0..ff.q.len() {
        let (xs, ys): (Vec<f64>, Vec<f64>) = in_range
            .iter()
            .filter_map(|&si| ff.values[qi][si].map(|v| ((ff.scales[si] as f64).log2(), v.log2())))
            .unzip();
        let line = ols(&xs, &ys, 4)?;
        h.push(line.slope);
        stderr.push(line.slope_stderr);
        residual_se.push(line.residual_se);
        points.push(line.points);
    }
    let i2 =
        ff.q.iter()
            .position(|&v| v == 2.0)
            .ok_or_else(|| Error::invalid("q grid must contain 2 for the Hurst exponent"))?;
    let max = h.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = h.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(HqCurve {
        hurst: h[i2],
        hurst_stderr: stderr[i2],
        delta_h: max - min,
        q: ff.q.clone(),
        h,
        stderr,
        residual_se,
        points,
        fit_range: (lo, hi),
    })
}

/// -10, -9.5, ..., 10.
pub fn default_q_grid() -> Vec<f64> {
    (-20..=20).map(|i| f64::from(i) * 0.5).collect()
}

/// Dyadic scales 16, 32, ... up to N/4.
pub fn default_scales(n: usize) -> Vec<usize> {
    std::iter::successors(Some(16usize), |s| Some(s * 2))
        .take_while(|&s| 4 * s <= n)
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MfaConfig {
    pub wavelet: Wavelet,
    pub boundary: Boundary,
    pub q: Vec<f64>,
    /// `None` selects [`default_scales`].
    pub scales: Option<Vec<usize>>,
    pub fit_range: Option<(usize, usize)>,
    pub seed: u64,
}

impl Default for MfaConfig {
    fn default() -> Self {
        Self {
            wavelet: Wavelet::Db4,
            boundary: Boundary::Symmetric,
            q: default_q_grid(),
            scales: None,
            fit_range: None,
            seed: 0,
        }
    }
}

/// Averaged (forward + reversed) profile fluctuations of a price series at
/// several levels: the per-level fluctuation series the analysis works on.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LevelFluctuations {
    pub profile: Profile,
    pub levels: Vec<usize>,
    pub fluctuations: Vec<Vec<f64>>,
}

pub fn level_fluctuations(
    ts: &TimeSeries,
    filter: &WaveletFilter,
    levels: &[usize],
    boundary: Boundary,
) -> Result<LevelFluctuations> {
    let returns = normalized_log_returns(ts)?;
    let profile = build_profile(&returns);
    let max = max_level(profile.len());
    if levels.is_empty() {
        return Err(Error::invalid("no levels requested"));
    }
    if let Some(&level) = levels.iter().find(|&&l| l == 0 || l > max) {
        return Err(Error::LevelOutOfRange { level, max });
    }
    let fluctuations = levels
        .par_iter()
        .map(|&j| bidirectional_fluctuations(&profile.values, filter, j, boundary))
        .collect::<Result<Vec<_>>>()?;
    Ok(LevelFluctuations {
        profile,
        levels: levels.to_vec(),
        fluctuations,
    })
}

/// One pass of the pipeline on a return series.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MfaRun {
    pub fluctuation: FluctuationFunction,
    pub hq: HqCurve,
}

/// Original and shuffled-returns results side by side.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MultifractalReport {
    pub ticker: String,
    pub config: MfaConfig,
    pub original: MfaRun,
    pub shuffled: MfaRun,
}

/// Profile → fluctuations → F_q(s) → h(q) for already-normalized returns.
pub fn analyze_returns(returns: &ReturnsSeries, cfg: &MfaConfig) -> Result<MfaRun> {
    let filter = crate::dwt::daubechies_filter(cfg.wavelet)?;
    let profile = build_profile(returns);
    let scales = cfg
        .scales
        .clone()
        .unwrap_or_else(|| default_scales(profile.len()));
    if scales.len() < 4 {
        return Err(Error::TooShort {
            needed: 256,
            got: profile.len(),
            context: "multifractal analysis (needs at least 4 scales)",
        });
    }
    let fluctuation =
        wavelet_fluctuation_function(&profile.values, &filter, cfg.boundary, &cfg.q, &scales)?;
    let hq = fit_hq(&fluctuation, cfg.fit_range)?;
    Ok(MfaRun { fluctuation, hq })
}

/// Full pipeline on a price series and on a seeded shuffle of its returns.
pub fn multifractal_report(ts: &TimeSeries, cfg: &MfaConfig) -> Result<MultifractalReport> {
    let returns = normalized_log_returns(ts)?;
    let shuffled = normalize_returns(shuffle(&returns.values, cfg.seed))?;
    let (original, shuffled) = rayon::join(
        || analyze_returns(&returns, cfg),
        || analyze_returns(&shuffled, cfg),
    );
    Ok(MultifractalReport {
        ticker: ts.ticker().to_string(),
        config: cfg.clone(),
        original: original?,
        shuffled: shuffled?,
    })
}
