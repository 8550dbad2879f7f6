//! Normalized log returns, autocorrelation, moments, shuffling and the
//! Kolmogorov–Smirnov test against a Gaussian.

use rand::Rng as _;
use serde::Serialize;
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::io::TimeSeries;
use crate::rng::rng_from_seed;

/// Standardized log returns of a price series.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReturnsSeries {
    /// R̂(t) = (R(t) - <R>) / volatility
    pub values: Vec<f64>,
    /// R(t) = ln x(t+1) - ln x(t)
    pub raw_returns: Vec<f64>,
    pub mean_return: f64,
    /// Population standard deviation of the raw returns.
    pub volatility: f64,
}

impl ReturnsSeries {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Population (1/N) variance.
pub fn population_variance(xs: &[f64]) -> f64 {
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / xs.len() as f64
}

/// Standardizes an arbitrary return series with population moments.
pub fn normalize_returns(raw: Vec<f64>) -> Result<ReturnsSeries> {
    if raw.len() < 2 {
        return Err(Error::TooShort {
            needed: 2,
            got: raw.len(),
            context: "returns",
        });
    }
    if let Some(i) = raw.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite(i));
    }
    let m = mean(&raw);
    let vol = population_variance(&raw).sqrt();
    // relative test: constant returns leave only rounding noise in the variance
    if vol == 0.0 || vol <= 1e-12 * m.abs() {
        return Err(Error::ZeroVariance("returns are constant (volatility = 0)"));
    }
    let values = raw.iter().map(|r| (r - m) / vol).collect();
    Ok(ReturnsSeries {
        values,
        raw_returns: raw,
        mean_return: m,
        volatility: vol,
    })
}

/// Normalized log returns of a positive price series (length N-1).
pub fn normalized_log_returns(ts: &TimeSeries) -> Result<ReturnsSeries> {
    if ts.len() < 3 {
        return Err(Error::TooShort {
            needed: 3,
            got: ts.len(),
            context: "normalized log returns",
        });
    }
    ts.ensure_positive()?;
    let raw = ts
        .values()
        .windows(2)
        .map(|w| w[1].ln() - w[0].ln())
        .collect();
    normalize_returns(raw)
}

/// Lagged correlation S(n) for lags 0..=max_lag.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AcfCurve {
    pub lags: Vec<usize>,
    /// `None` where a window has zero variance (or fewer than 2 samples).
    pub values: Vec<Option<f64>>,
}

/// Correlation between x[0..N-n] and x[n..N], each window centered and
/// scaled by its own mean and sample standard deviation.
pub fn autocorrelation(xs: &[f64], max_lag_fraction: f64) -> Result<AcfCurve> {
    let n = xs.len();
    if n < 4 {
        return Err(Error::TooShort {
            needed: 4,
            got: n,
            context: "autocorrelation",
        });
    }
    if !(0.0..1.0).contains(&max_lag_fraction) {
        return Err(Error::invalid(format!(
            "max lag fraction {max_lag_fraction} outside [0, 1)"
        )));
    }
    let max_lag = ((n as f64) * max_lag_fraction).floor() as usize;
    let lags: Vec<usize> = (0..=max_lag).collect();
    let values = lags.iter().map(|&lag| lag_correlation(xs, lag)).collect();
    Ok(AcfCurve { lags, values })
}

fn lag_correlation(xs: &[f64], lag: usize) -> Option<f64> {
    let m = xs.len() - lag;
    if m < 2 {
        return None;
    }
    let a = &xs[..m];
    let b = &xs[lag..];
    let (ma, mb) = (mean(a), mean(b));
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        let (da, db) = (x - ma, y - mb);
        sab += da * db;
        saa += da * da;
        sbb += db * db;
    }
    if saa <= 0.0 || sbb <= 0.0 {
        return None;
    }
    if lag == 0 {
        return Some(1.0);
    }
    // 1/(m-1) * sum / (s_a s_b) with sample deviations; the (m-1) factors cancel
    Some((sab / (saa.sqrt() * sbb.sqrt())).clamp(-1.0, 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MomentsReport {
    pub mean: f64,
    /// Population standard deviation.
    pub std_dev: f64,
    pub skewness: f64,
    /// Raw (non-excess) kurtosis; 3 for a Gaussian.
    pub kurtosis: f64,
}

pub fn moments(xs: &[f64]) -> Result<MomentsReport> {
    if xs.len() < 4 {
        return Err(Error::TooShort {
            needed: 4,
            got: xs.len(),
            context: "moments",
        });
    }
    let nf = xs.len() as f64;
    let m = mean(xs);
    let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
    for x in xs {
        let d = x - m;
        let d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
    }
    m2 /= nf;
    m3 /= nf;
    m4 /= nf;
    if m2 <= 0.0 || m2.sqrt() <= 1e-14 * m.abs() {
        return Err(Error::ZeroVariance("moments"));
    }
    Ok(MomentsReport {
        mean: m,
        std_dev: m2.sqrt(),
        skewness: m3 / m2.powf(1.5),
        kurtosis: m4 / (m2 * m2),
    })
}

/// Reference distribution for [`ks_test`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum GaussianReference {
    /// Mean and sample standard deviation estimated from the data.
    Estimated,
    Known {
        mean: f64,
        std_dev: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KsResult {
    pub n: usize,
    pub statistic: f64,
    /// sqrt(n) * D_n
    pub scaled: f64,
    pub p_value: f64,
    pub alpha: f64,
    pub reject: bool,
    pub reference_mean: f64,
    pub reference_std: f64,
}

/// Asymptotic survival function of the Kolmogorov distribution,
/// P(K > z) = 2 Σ_{k≥1} (-1)^{k-1} exp(-2 k² z²).
///
/// Returns 1 for z < 0.2, where the alternating series converges too slowly
/// to be useful and the true value is 1 to within 1e-12.
pub fn kolmogorov_sf(z: f64) -> f64 {
    if z < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..=100u32 {
        let kf = f64::from(k);
        let term = (-2.0 * kf * kf * z * z).exp();
        if k % 2 == 1 {
            sum += term;
        } else {
            sum -= term;
        }
        if term < 1e-12 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// KS test of `xs` against a Gaussian with data-estimated parameters.
///
/// The p-value is the unadjusted asymptotic Kolmogorov value. Estimating the
/// mean and spread from the same sample makes it conservative.
pub fn ks_test_gaussian(xs: &[f64], alpha: f64) -> Result<KsResult> {
    ks_test(xs, alpha, GaussianReference::Estimated)
}

pub fn ks_test(xs: &[f64], alpha: f64, reference: GaussianReference) -> Result<KsResult> {
    let n = xs.len();
    if n < 8 {
        return Err(Error::TooShort {
            needed: 8,
            got: n,
            context: "KS test",
        });
    }
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::invalid(format!(
            "significance {alpha} outside [0, 1]"
        )));
    }
    let (mu, sigma) = match reference {
        GaussianReference::Estimated => {
            let m = mean(xs);
            let var = xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n as f64 - 1.0);
            (m, var.sqrt())
        }
        GaussianReference::Known { mean, std_dev } => (mean, std_dev),
    };
    if sigma.is_nan() || sigma <= 0.0 || sigma.is_infinite() {
        return Err(Error::ZeroVariance("KS reference distribution"));
    }
    let normal = Normal::new(mu, sigma).map_err(|e| Error::invalid(e.to_string()))?;
    let mut sorted = xs.to_vec();
    sorted.sort_by(f64::total_cmp);
    let nf = n as f64;
    let d = sorted
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = normal.cdf(x);
            (f - i as f64 / nf)
                .abs()
                .max(((i + 1) as f64 / nf - f).abs())
        })
        .fold(0.0f64, f64::max);
    let scaled = nf.sqrt() * d;
    let p_value = kolmogorov_sf(scaled);
    Ok(KsResult {
        n,
        statistic: d,
        scaled,
        p_value,
        alpha,
        reject: p_value < alpha,
        reference_mean: mu,
        reference_std: sigma,
    })
}

/// Fisher–Yates shuffle driven by a ChaCha8 stream keyed by `seed`.
pub fn shuffle(xs: &[f64], seed: u64) -> Vec<f64> {
    let mut out = xs.to_vec();
    let mut rng = rng_from_seed(seed);
    for i in (1..out.len()).rev() {
        let j = rng.random_range(0..=i);
        out.swap(i, j);
    }
    out
}
