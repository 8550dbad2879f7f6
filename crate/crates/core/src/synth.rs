//! Seeded synthetic series with known ground truth.
//!
//! Each generator produces a raw *signal*; [`generate`] turns it into a price
//! [`TimeSeries`] so it can go through the same pipeline as market data.
//! Increment-type signals (white noise, fractional Gaussian noise, cascade
//! masses) become the log returns of the price series; level-type signals
//! (spectral-slope noise, sinusoid mixes) become its log level. Either way the
//! signal is standardized and scaled to a daily-return-like size of 1% first,
//! so the normalized log returns of the output reproduce the standardized
//! increments up to rounding.

use std::f64::consts::PI;

use log::warn;
use num_complex::Complex64;
use rand::Rng as _;
use rand_distr::StandardNormal;
use rustfft::FftPlanner;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::io::TimeSeries;
use crate::returns::{mean, population_variance};
use crate::rng::{rng_from_seed, Rng};

const PRICE_BASE: f64 = 100.0;
const LOG_SCALE: f64 = 0.01;
const MAX_FBM_LEN: usize = 1 << 16;

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SynthKind {
    WhiteNoise,
    /// Fractional Brownian motion; the signal is its increment series (fGn).
    Fbm {
        hurst: f64,
    },
    /// Binomial multiplicative cascade; the signal is the measure.
    BinomialCascade {
        m0: f64,
    },
    /// Periodic noise with periodogram exactly ∝ k^beta.
    SpectralSlope {
        beta: f64,
    },
    SinusoidMix {
        periods: Vec<f64>,
        phases: Vec<f64>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SynthSpec {
    #[serde(flatten)]
    pub kind: SynthKind,
    pub len: usize,
    pub seed: u64,
}

/// How a signal maps onto a price series.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SignalRole {
    Increments,
    Level,
}

impl SynthKind {
    pub fn role(&self) -> SignalRole {
        match self {
            SynthKind::WhiteNoise | SynthKind::Fbm { .. } | SynthKind::BinomialCascade { .. } => {
                SignalRole::Increments
            }
            SynthKind::SpectralSlope { .. } | SynthKind::SinusoidMix { .. } => SignalRole::Level,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            SynthKind::WhiteNoise => "white_noise",
            SynthKind::Fbm { .. } => "fbm",
            SynthKind::BinomialCascade { .. } => "binomial_cascade",
            SynthKind::SpectralSlope { .. } => "spectral_slope",
            SynthKind::SinusoidMix { .. } => "sinusoid_mix",
        }
    }
}

impl SynthSpec {
    pub fn validate(&self) -> Result<()> {
        let n = self.len;
        if n < 2 {
            return Err(Error::invalid(format!("synthetic length {n} < 2")));
        }
        let pow2 = n.is_power_of_two();
        match &self.kind {
            SynthKind::WhiteNoise => {}
            SynthKind::Fbm { hurst } => {
                if !(*hurst > 0.0 && *hurst < 1.0) {
                    return Err(Error::invalid(format!(
                        "Hurst exponent {hurst} outside (0, 1)"
                    )));
                }
                if !pow2 || n > MAX_FBM_LEN {
                    return Err(Error::invalid(format!(
                        "fbm length {n} must be a power of two ≤ {MAX_FBM_LEN}"
                    )));
                }
            }
            SynthKind::BinomialCascade { m0 } => {
                if !(*m0 > 0.0 && *m0 < 1.0) {
                    return Err(Error::invalid(format!(
                        "cascade weight {m0} outside (0, 1)"
                    )));
                }
                if !pow2 {
                    return Err(Error::invalid(format!(
                        "cascade length {n} is not a power of two"
                    )));
                }
            }
            SynthKind::SpectralSlope { beta } => {
                if !beta.is_finite() {
                    return Err(Error::invalid("spectral slope must be finite"));
                }
                if !pow2 {
                    return Err(Error::invalid(format!(
                        "spectral-slope length {n} is not a power of two"
                    )));
                }
            }
            SynthKind::SinusoidMix { periods, phases } => {
                if periods.is_empty() {
                    return Err(Error::invalid("sinusoid mix needs at least one period"));
                }
                if !phases.is_empty() && phases.len() != periods.len() {
                    return Err(Error::invalid("phases must be empty or match periods"));
                }
                if let Some(p) = periods.iter().find(|&&p| !(p > 0.0 && p < n as f64 / 4.0)) {
                    return Err(Error::invalid(format!("period {p} outside (0, N/4)")));
                }
            }
        }
        Ok(())
    }
}

/// Raw signal for `spec` (length `spec.len`).
pub fn generate_signal(spec: &SynthSpec) -> Result<Vec<f64>> {
    spec.validate()?;
    let n = spec.len;
    Ok(match &spec.kind {
        SynthKind::WhiteNoise => white_noise(n, spec.seed),
        SynthKind::Fbm { hurst } => fgn(*hurst, n, spec.seed)?,
        SynthKind::BinomialCascade { m0 } => binomial_cascade(*m0, n.ilog2(), spec.seed),
        SynthKind::SpectralSlope { beta } => spectral_slope(*beta, n, spec.seed),
        SynthKind::SinusoidMix { periods, phases } => sinusoid_mix(n, periods, phases),
    })
}

/// Price series whose log returns (increments) or log level (levels) are the
/// standardized signal scaled by 1%. Increment signals of length N give N+1 prices.
pub fn generate(spec: &SynthSpec) -> Result<TimeSeries> {
    let signal = generate_signal(spec)?;
    let ticker = format!("{}-{}", spec.kind.name(), spec.seed);
    signal_to_prices(ticker, &signal, spec.kind.role())
}

pub fn signal_to_prices(ticker: String, signal: &[f64], role: SignalRole) -> Result<TimeSeries> {
    let m = mean(signal);
    let sd = population_variance(signal).sqrt();
    if sd == 0.0 {
        return Err(Error::ZeroVariance("synthetic signal"));
    }
    let z = signal.iter().map(|v| LOG_SCALE * (v - m) / sd);
    let log_level: Vec<f64> = match role {
        SignalRole::Level => z.collect(),
        SignalRole::Increments => std::iter::once(0.0)
            .chain(z.scan(0.0, |acc, v| {
                *acc += v;
                Some(*acc)
            }))
            .collect(),
    };
    TimeSeries::from_values(
        ticker,
        log_level.iter().map(|l| PRICE_BASE * l.exp()).collect(),
    )
}

pub fn white_noise(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = rng_from_seed(seed);
    gaussians(&mut rng, n)
}

fn gaussians(rng: &mut Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.sample(StandardNormal)).collect()
}

/// Autocovariance of unit-variance fractional Gaussian noise at lag `k`.
pub fn fgn_autocovariance(hurst: f64, k: usize) -> f64 {
    let h2 = 2.0 * hurst;
    let k = k as f64;
    0.5 * ((k + 1.0).powf(h2) - 2.0 * k.powf(h2) + (k - 1.0).abs().powf(h2))
}

/// Fractional Gaussian noise of length `n` (a power of two) by circulant
/// embedding, falling back to the Hosking recursion if the embedding has a
/// negative eigenvalue.
pub fn fgn(hurst: f64, n: usize, seed: u64) -> Result<Vec<f64>> {
    if !(hurst > 0.0 && hurst < 1.0) {
        return Err(Error::invalid(format!(
            "Hurst exponent {hurst} outside (0, 1)"
        )));
    }
    if !n.is_power_of_two() || n > MAX_FBM_LEN {
        return Err(Error::invalid(format!(
            "fgn length {n} must be a power of two ≤ {MAX_FBM_LEN}"
        )));
    }
    let mut rng = rng_from_seed(seed);
    match circulant_fgn(hurst, n, &mut rng) {
        Some(x) => Ok(x),
        None => {
            warn!(
                "circulant embedding not nonnegative for H={hurst}, n={n}; using Hosking recursion"
            );
            Ok(hosking_fgn(hurst, n, &mut rng))
        }
    }
}

fn circulant_fgn(hurst: f64, n: usize, rng: &mut Rng) -> Option<Vec<f64>> {
    let m = 2 * n;
    let mut row: Vec<Complex64> = (0..m)
        .map(|i| {
            let lag = if i <= n { i } else { m - i };
            Complex64::new(fgn_autocovariance(hurst, lag), 0.0)
        })
        .collect();
    let fft = FftPlanner::new().plan_fft_forward(m);
    fft.process(&mut row);
    let tol = 1e-10 * row[0].re.abs().max(1.0);
    if row.iter().any(|c| c.re < -tol) {
        return None;
    }
    let mut w: Vec<Complex64> = row
        .iter()
        .map(|c| {
            let s = (c.re.max(0.0) / m as f64).sqrt();
            let a: f64 = rng.sample(StandardNormal);
            let b: f64 = rng.sample(StandardNormal);
            Complex64::new(s * a, s * b)
        })
        .collect();
    fft.process(&mut w);
    Some(w[..n].iter().map(|c| c.re).collect())
}

/// Exact Gaussian sampling via Durbin–Levinson; O(n²).
pub(crate) fn hosking_fgn(hurst: f64, n: usize, rng: &mut Rng) -> Vec<f64> {
    let gamma: Vec<f64> = (0..n).map(|k| fgn_autocovariance(hurst, k)).collect();
    let mut out = Vec::with_capacity(n);
    let mut phi: Vec<f64> = Vec::with_capacity(n);
    let mut var = gamma[0];
    out.push(var.sqrt() * rng.sample::<f64, _>(StandardNormal));
    for t in 1..n {
        // update partial autocorrelations for order t
        let num = gamma[t] - (0..t - 1).map(|j| phi[j] * gamma[t - 1 - j]).sum::<f64>();
        let kappa = num / var;
        let prev = phi.clone();
        phi.clear();
        for j in 0..t - 1 {
            phi.push(prev[j] - kappa * prev[t - 2 - j]);
        }
        phi.push(kappa);
        var *= 1.0 - kappa * kappa;
        let pred: f64 = (0..t).map(|j| phi[j] * out[t - 1 - j]).sum();
        out.push(pred + var.sqrt() * rng.sample::<f64, _>(StandardNormal));
    }
    out
}

/// fBm path B(0) = 0, B(i) = Σ_{t<i} fGn(t); length n + 1.
pub fn fbm_path(hurst: f64, n: usize, seed: u64) -> Result<Vec<f64>> {
    let inc = fgn(hurst, n, seed)?;
    Ok(std::iter::once(0.0)
        .chain(inc.iter().scan(0.0, |acc, v| {
            *acc += v;
            Some(*acc)
        }))
        .collect())
}

/// Measure of a binomial cascade on 2^levels cells (total mass 1). Each cell
/// splits its mass m0 : 1-m0 between its halves; which half gets m0 is drawn
/// from the seeded stream.
pub fn binomial_cascade(m0: f64, levels: u32, seed: u64) -> Vec<f64> {
    let mut rng = rng_from_seed(seed);
    let m1 = 1.0 - m0;
    let mut mass = vec![1.0];
    for _ in 0..levels {
        let mut next = Vec::with_capacity(mass.len() * 2);
        for &m in &mass {
            if rng.random::<bool>() {
                next.extend([m * m0, m * m1]);
            } else {
                next.extend([m * m1, m * m0]);
            }
        }
        mass = next;
    }
    mass
}

/// h(q) = 1/q - log₂(m0^q + (1-m0)^q)/q for the binomial cascade.
pub fn cascade_hq_analytic(m0: f64, q: f64) -> Result<f64> {
    if !(m0 > 0.0 && m0 < 1.0) {
        return Err(Error::invalid(format!(
            "cascade weight {m0} outside (0, 1)"
        )));
    }
    if q == 0.0 {
        return Err(Error::invalid("cascade h(q) is not implemented at q = 0"));
    }
    Ok(1.0 / q - (m0.powf(q) + (1.0 - m0).powf(q)).log2() / q)
}

/// Real periodic noise with |X_m|² ∝ (m/n)^beta for 0 < m ≤ n/2, random phases.
pub fn spectral_slope(beta: f64, n: usize, seed: u64) -> Vec<f64> {
    let mut rng = rng_from_seed(seed);
    let mut spec = vec![Complex64::new(0.0, 0.0); n];
    for m in 1..=n / 2 {
        let amp = (m as f64 / n as f64).powf(beta / 2.0);
        if 2 * m == n {
            // Nyquist bin must be real; the sign carries the phase
            let s = if rng.random::<bool>() { 1.0 } else { -1.0 };
            spec[m] = Complex64::new(s * amp, 0.0);
        } else {
            let phase = rng.random::<f64>() * 2.0 * PI;
            let c = Complex64::from_polar(amp, phase);
            spec[m] = c;
            spec[n - m] = c.conj();
        }
    }
    FftPlanner::new().plan_fft_inverse(n).process(&mut spec);
    spec.iter().map(|c| c.re / (n as f64).sqrt()).collect()
}

/// Σ sin(2π t / T_i + φ_i), unit amplitudes.
pub fn sinusoid_mix(n: usize, periods: &[f64], phases: &[f64]) -> Vec<f64> {
    (0..n)
        .map(|t| {
            periods
                .iter()
                .enumerate()
                .map(|(i, &p)| {
                    let phi = phases.get(i).copied().unwrap_or(0.0);
                    (2.0 * PI * t as f64 / p + phi).sin()
                })
                .sum()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cascade_analytic_values() {
        for q in [-5.0, -1.0, 1.0, 3.0] {
            assert!((cascade_hq_analytic(0.5, q).unwrap() - 1.0).abs() < 1e-12);
        }
        let h2 = cascade_hq_analytic(0.6, 2.0).unwrap();
        assert!((h2 - (0.5 - 0.52f64.log2() / 2.0)).abs() < 1e-15);
        assert!((h2 - 0.9717).abs() < 1e-4);
        assert!(cascade_hq_analytic(0.6, 0.0).is_err());
        assert!(cascade_hq_analytic(1.0, 2.0).is_err());
    }

    #[test]
    fn cascade_analytic_non_increasing() {
        for m0 in [0.2, 0.6, 0.75] {
            let h: Vec<f64> = [-5.0, -4.0, -3.0, -2.0, -1.0, 1.0, 2.0, 3.0, 4.0, 5.0]
                .iter()
                .map(|&q| cascade_hq_analytic(m0, q).unwrap())
                .collect();
            assert!(h.windows(2).all(|w| w[1] <= w[0]), "{h:?}");
        }
    }

    #[test]
    fn rejects_invalid_parameters() {
        let bad = [
            SynthKind::Fbm { hurst: 1.0 },
            SynthKind::BinomialCascade { m0: 0.0 },
            SynthKind::SpectralSlope { beta: f64::NAN },
            SynthKind::SinusoidMix {
                periods: vec![300.0],
                phases: vec![],
            },
        ];
        for kind in bad {
            let s = SynthSpec {
                kind,
                len: 1024,
                seed: 0,
            };
            assert!(generate(&s).is_err(), "{s:?}");
        }
        let s = SynthSpec {
            kind: SynthKind::Fbm { hurst: 0.5 },
            len: 1000,
            seed: 0,
        };
        assert!(generate(&s).is_err());
    }

    #[test]
    fn generators_are_deterministic() {
        let kinds = [
            SynthKind::WhiteNoise,
            SynthKind::Fbm { hurst: 0.7 },
            SynthKind::BinomialCascade { m0: 0.6 },
            SynthKind::SpectralSlope { beta: -3.0 },
        ];
        for kind in kinds {
            let s = SynthSpec {
                kind,
                len: 256,
                seed: 11,
            };
            assert_eq!(generate_signal(&s).unwrap(), generate_signal(&s).unwrap());
            let other = SynthSpec {
                seed: 12,
                ..s.clone()
            };
            assert_ne!(
                generate_signal(&s).unwrap(),
                generate_signal(&other).unwrap()
            );
        }
    }

    #[test]
    fn hosking_matches_first_lag_covariance_scale() {
        // both samplers draw unit-variance noise
        let mut rng = rng_from_seed(5);
        let x = hosking_fgn(0.8, 4096, &mut rng);
        let v = population_variance(&x);
        assert!((v - 1.0).abs() < 0.25, "{v}");
    }

    #[test]
    fn increments_become_log_returns() {
        let s = SynthSpec {
            kind: SynthKind::WhiteNoise,
            len: 64,
            seed: 3,
        };
        let ts = generate(&s).unwrap();
        assert_eq!(ts.len(), 65);
        let sig = generate_signal(&s).unwrap();
        let (m, sd) = (mean(&sig), population_variance(&sig).sqrt());
        for (w, z) in ts.values().windows(2).zip(&sig) {
            let r = w[1].ln() - w[0].ln();
            assert!((r - 0.01 * (z - m) / sd).abs() < 1e-13);
        }
    }
}
