//! Continuous Morlet wavelet transform.
//!
//! ```text
//! ψ₀(η)   = π^{-1/4} e^{iω₀η} e^{-η²/2}
//! W_n(s)  = Σ_m x_m ψ_s*(m − n),   ψ_s(d) = √(dt/s) ψ₀(d·dt/s)
//! ```
//!
//! The √(dt/s) factor makes Σ|ψ_s|² ≈ 1 at every scale, so white noise has a
//! flat expected |W|². The sum is evaluated as a circular cross-correlation
//! over the input zero-padded to the next power of two.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::io::{Column, Table};
use crate::rng::derive_seed;
use crate::synth::white_noise;

pub const DEFAULT_OMEGA0: f64 = 6.0;
pub const NORMALIZATION: &str = "L2: psi_s(d) = sqrt(dt/s) psi0(d dt/s)";

/// Smallest series the transform accepts.
pub const MIN_LEN: usize = 16;

#[derive(Debug, Clone, PartialEq)]
pub struct Scalogram {
    /// `coefficients[j][t]` is W_t(s_j).
    pub coefficients: Vec<Vec<Complex64>>,
    pub scales: Vec<f64>,
    pub omega0: f64,
    pub dt: f64,
    /// Largest reliable scale at each time index.
    pub coi: Vec<f64>,
}

impl Scalogram {
    /// (time samples, scales)
    pub fn dims(&self) -> (usize, usize) {
        (self.coi.len(), self.scales.len())
    }

    pub fn get(&self, t: usize, j: usize) -> Complex64 {
        self.coefficients[j][t]
    }

    /// True where the coefficient lies inside the cone of influence, i.e. is
    /// contaminated by the edges.
    pub fn in_coi(&self, t: usize, j: usize) -> bool {
        self.scales[j] > self.coi[t]
    }

    /// Mean |W|² over time for each scale; `reliable_only` skips COI cells.
    pub fn scale_power(&self, reliable_only: bool) -> Vec<f64> {
        (0..self.scales.len())
            .map(|j| {
                let (sum, count) = self.coefficients[j]
                    .iter()
                    .enumerate()
                    .filter(|&(t, _)| !reliable_only || !self.in_coi(t, j))
                    .fold((0.0, 0usize), |(s, c), (_, w)| (s + w.norm_sqr(), c + 1));
                if count == 0 {
                    f64::NAN
                } else {
                    sum / count as f64
                }
            })
            .collect()
    }

    /// Long form: one row per (t, s).
    pub fn to_long_table(&self) -> Table {
        let (n, ns) = self.dims();
        let cap = n * ns;
        let (mut t_col, mut s_col, mut re, mut im, mut pw, mut flag) = (
            Vec::with_capacity(cap),
            Vec::with_capacity(cap),
            Vec::with_capacity(cap),
            Vec::with_capacity(cap),
            Vec::with_capacity(cap),
            Vec::with_capacity(cap),
        );
        for t in 0..n {
            for j in 0..ns {
                let w = self.coefficients[j][t];
                t_col.push(t as i64);
                s_col.push(self.scales[j]);
                re.push(w.re);
                im.push(w.im);
                pw.push(w.norm_sqr());
                flag.push(i64::from(self.in_coi(t, j)));
            }
        }
        let mut table = Table::new();
        table
            .push("t", Column::Int(t_col))
            .push("s", Column::Float(s_col))
            .push("re", Column::Float(re))
            .push("im", Column::Float(im))
            .push("power", Column::Float(pw))
            .push("coi_flag", Column::Int(flag));
        table.with_meta("cwt", self.metadata())
    }

    pub fn metadata(&self) -> ScalogramMeta {
        ScalogramMeta {
            omega0: self.omega0,
            dt: self.dt,
            normalization: NORMALIZATION,
            len: self.coi.len(),
            scales: self.scales.clone(),
            fourier_wavelengths: self
                .scales
                .iter()
                .map(|&s| fourier_wavelength(s, self.omega0))
                .collect(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ScalogramMeta {
    pub omega0: f64,
    pub dt: f64,
    pub normalization: &'static str,
    pub len: usize,
    pub scales: Vec<f64>,
    pub fourier_wavelengths: Vec<f64>,
}

/// Equivalent Fourier period of the Morlet wavelet at scale `s`.
pub fn fourier_wavelength(s: f64, omega0: f64) -> f64 {
    4.0 * PI * s / (omega0 + (2.0 + omega0 * omega0).sqrt())
}

/// s_j = 2·2^{j/8} up to N/2.
pub fn default_scales(n: usize) -> Vec<f64> {
    scale_grid(2.0, 0.125, n as f64 / 2.0)
}

/// s0·2^{j·dj} up to `s_max`; empty when s0 or dj is not positive and finite.
pub fn scale_grid(s0: f64, dj: f64, s_max: f64) -> Vec<f64> {
    let mut out = Vec::new();
    if !(s0 > 0.0 && s0.is_finite() && dj > 0.0 && dj.is_finite()) {
        return out;
    }
    let mut j = 0;
    loop {
        let s = s0 * 2f64.powf(j as f64 * dj);
        // tolerate rounding right at the top of the grid
        if s > s_max * (1.0 + 1e-12) {
            break;
        }
        out.push(s);
        j += 1;
    }
    out
}

/// COI(t) = min(t, N−1−t)·dt/√2: scales above this bound feel the edges.
pub fn cone_of_influence(n: usize, dt: f64) -> Vec<f64> {
    (0..n).map(|t| coi_bound(t as f64, n, dt)).collect()
}

/// The bound at a (possibly fractional) time index in [0, N−1].
pub fn coi_bound(t: f64, n: usize, dt: f64) -> f64 {
    let d = t.min((n - 1) as f64 - t).max(0.0);
    d * dt / std::f64::consts::SQRT_2
}

fn morlet(eta: f64, omega0: f64) -> Complex64 {
    let env = PI.powf(-0.25) * (-0.5 * eta * eta).exp();
    Complex64::from_polar(env, omega0 * eta)
}

/// Sampled ψ_s on a circular grid of length `p`: index d for d < p/2, p + d for d < 0.
fn kernel(s: f64, omega0: f64, dt: f64, p: usize) -> Vec<Complex64> {
    let norm = (dt / s).sqrt();
    let half = (p / 2) as isize;
    let mut k = vec![Complex64::new(0.0, 0.0); p];
    for d in -half..half {
        let idx = d.rem_euclid(p as isize) as usize;
        k[idx] = morlet(d as f64 * dt / s, omega0) * norm;
    }
    k
}

fn check_inputs(xs: &[f64], scales: &[f64], omega0: f64, dt: f64) -> Result<()> {
    if xs.len() < MIN_LEN {
        return Err(Error::TooShort {
            needed: MIN_LEN,
            got: xs.len(),
            context: "morlet transform",
        });
    }
    if let Some(i) = xs.iter().position(|x| !x.is_finite()) {
        return Err(Error::NonFinite(i));
    }
    if scales.is_empty() {
        return Err(Error::invalid("empty scale grid"));
    }
    if !(omega0 > 0.0 && omega0.is_finite()) || !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::invalid(format!(
            "omega0 and dt must be positive, got {omega0}, {dt}"
        )));
    }
    let s_max = xs.len() as f64 * dt / 2.0;
    for (i, &s) in scales.iter().enumerate() {
        if !(s > 0.0 && s.is_finite()) {
            return Err(Error::invalid(format!("non-positive scale {s}")));
        }
        if s > s_max {
            return Err(Error::invalid(format!("scale {s} exceeds N/2 = {s_max}")));
        }
        if i > 0 && s <= scales[i - 1] {
            return Err(Error::invalid("scales must be strictly ascending"));
        }
    }
    Ok(())
}

/// Morlet transform with unit sampling interval.
pub fn morlet_cwt(xs: &[f64], scales: &[f64], omega0: f64) -> Result<Scalogram> {
    morlet_cwt_dt(xs, scales, omega0, 1.0)
}

pub fn morlet_cwt_dt(xs: &[f64], scales: &[f64], omega0: f64, dt: f64) -> Result<Scalogram> {
    check_inputs(xs, scales, omega0, dt)?;
    let n = xs.len();
    let p = n.next_power_of_two();
    let mut planner = FftPlanner::new();
    let fwd: Arc<dyn Fft<f64>> = planner.plan_fft_forward(p);
    let inv: Arc<dyn Fft<f64>> = planner.plan_fft_inverse(p);

    let mut spectrum: Vec<Complex64> = xs.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    spectrum.resize(p, Complex64::new(0.0, 0.0));
    fwd.process(&mut spectrum);

    let coefficients = scales
        .par_iter()
        .map(|&s| {
            let mut k = kernel(s, omega0, dt, p);
            fwd.process(&mut k);
            // cross-correlation: X · conj(K)
            let mut w: Vec<Complex64> =
                spectrum.iter().zip(&k).map(|(x, g)| x * g.conj()).collect();
            inv.process(&mut w);
            let scale = 1.0 / p as f64;
            w.truncate(n);
            w.iter_mut().for_each(|c| *c *= scale);
            w
        })
        .collect();

    Ok(Scalogram {
        coefficients,
        scales: scales.to_vec(),
        omega0,
        dt,
        coi: cone_of_influence(n, dt),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScaleSlice {
    /// Requested scale.
    pub requested: f64,
    /// Nearest grid scale actually used.
    pub scale: f64,
    pub index: usize,
    pub values: Vec<Complex64>,
    /// True where the coefficient is outside the cone of influence.
    pub reliable: Vec<bool>,
}

impl ScaleSlice {
    pub fn phases(&self) -> Vec<f64> {
        self.values.iter().map(|w| w.arg()).collect()
    }

    pub fn to_table(&self) -> Table {
        let n = self.values.len();
        let mut table = Table::new();
        table
            .push("t", Column::Int((0..n as i64).collect()))
            .push(
                "re",
                Column::Float(self.values.iter().map(|w| w.re).collect()),
            )
            .push(
                "im",
                Column::Float(self.values.iter().map(|w| w.im).collect()),
            )
            .push(
                "abs",
                Column::Float(self.values.iter().map(|w| w.norm()).collect()),
            )
            .push("phase", Column::Float(self.phases()))
            .push(
                "coi_flag",
                Column::Int(self.reliable.iter().map(|&r| i64::from(!r)).collect()),
            );
        table
            .with_meta("requested_scale", self.requested)
            .with_meta("scale", self.scale)
    }
}

/// Time course at the grid scale nearest (in log) to `s`.
pub fn scale_slice(sg: &Scalogram, s: f64) -> Result<ScaleSlice> {
    if sg.scales.is_empty() || sg.coi.is_empty() {
        return Err(Error::invalid("empty scalogram"));
    }
    if !(s > 0.0 && s.is_finite()) {
        return Err(Error::invalid(format!("non-positive scale {s}")));
    }
    let index = sg
        .scales
        .iter()
        .enumerate()
        .min_by(|a, b| {
            let da = (a.1.ln() - s.ln()).abs();
            let db = (b.1.ln() - s.ln()).abs();
            da.total_cmp(&db)
        })
        .map(|(i, _)| i)
        .unwrap_or(0);
    let scale = sg.scales[index];
    Ok(ScaleSlice {
        requested: s,
        scale,
        index,
        values: sg.coefficients[index].clone(),
        reliable: sg.coi.iter().map(|&c| scale <= c).collect(),
    })
}

/// Lag (in samples, |lag| ≤ max_lag) at which the phase of `b` best matches
/// that of `a`: argmax Re Σ_t e^{iφ_a(t)} e^{−iφ_b(t+lag)} over samples
/// reliable in both slices. Positive lag means `b` trails `a`.
pub fn phase_lag(a: &ScaleSlice, b: &ScaleSlice, max_lag: usize) -> Result<i64> {
    let n = a.values.len();
    if b.values.len() != n {
        return Err(Error::invalid("slices differ in length"));
    }
    let ua: Vec<Complex64> = a.values.iter().map(|w| unit(*w)).collect();
    let ub: Vec<Complex64> = b.values.iter().map(|w| unit(*w)).collect();
    // larger lags have no overlap
    let max_lag = max_lag.min(n.saturating_sub(1)) as i64;
    let mut best: Option<(i64, f64)> = None;
    for lag in -max_lag..=max_lag {
        let mut acc = 0.0;
        let mut count = 0usize;
        // pairs (t, t + lag) with both indices inside [0, n)
        let hi = (n as i64 - lag).clamp(0, n as i64) as usize;
        let lo = ((-lag).max(0) as usize).min(hi);
        let (ulo, uhi) = ((lo as i64 + lag) as usize, (hi as i64 + lag) as usize);
        let pairs = ua[lo..hi].iter().zip(&ub[ulo..uhi]);
        let ok = a.reliable[lo..hi].iter().zip(&b.reliable[ulo..uhi]);
        for ((wa, wb), (&ra, &rb)) in pairs.zip(ok) {
            if ra && rb {
                acc += (wa * wb.conj()).re;
                count += 1;
            }
        }
        if count == 0 {
            continue;
        }
        let score = acc / count as f64;
        if best.is_none_or(|(_, s)| score > s) {
            best = Some((lag, score));
        }
    }
    best.map(|(lag, _)| lag)
        .ok_or_else(|| Error::invalid("no overlapping reliable samples"))
}

fn unit(w: Complex64) -> Complex64 {
    let r = w.norm();
    if r > 0.0 {
        w / r
    } else {
        Complex64::new(0.0, 0.0)
    }
}

/// Per-scale 95th percentile (or `quantile`) of |W| for unit-variance white
/// noise of length `n`, pooled over `draws` seeded realizations and restricted
/// to coefficients outside the cone of influence.
pub fn significance_threshold(
    n: usize,
    scales: &[f64],
    omega0: f64,
    draws: usize,
    quantile: f64,
    seed: u64,
) -> Result<Vec<f64>> {
    if draws == 0 || !(0.0..=1.0).contains(&quantile) {
        return Err(Error::invalid("need draws ≥ 1 and quantile in [0, 1]"));
    }
    let grams = (0..draws)
        .into_par_iter()
        .map(|d| morlet_cwt(&white_noise(n, derive_seed(seed, d as u64)), scales, omega0))
        .collect::<Result<Vec<_>>>()?;
    Ok((0..scales.len())
        .map(|j| {
            let mut pool: Vec<f64> = grams
                .iter()
                .flat_map(|g| {
                    (0..n)
                        .filter(move |&t| !g.in_coi(t, j))
                        .map(move |t| g.coefficients[j][t].norm())
                })
                .collect();
            if pool.is_empty() {
                return f64::NAN;
            }
            pool.sort_by(f64::total_cmp);
            let k = ((quantile * pool.len() as f64).ceil() as usize).clamp(1, pool.len()) - 1;
            pool[k]
        })
        .collect())
}

/// |W| above `threshold[j]·sigma` and outside the cone of influence.
pub fn significance_mask(sg: &Scalogram, threshold: &[f64], sigma: f64) -> Vec<Vec<bool>> {
    sg.coefficients
        .iter()
        .enumerate()
        .map(|(j, row)| {
            row.iter()
                .enumerate()
                .map(|(t, w)| !sg.in_coi(t, j) && w.norm() > threshold[j] * sigma)
                .collect()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::sinusoid_mix;

    /// Direct circular cross-correlation against an analytically sampled kernel.
    fn direct(xs: &[f64], s: f64, omega0: f64) -> Vec<Complex64> {
        let n = xs.len();
        let p = n.next_power_of_two() as isize;
        let norm = s.sqrt().recip();
        let c = PI.powf(-0.25);
        (0..n as isize)
            .map(|t| {
                let mut acc = Complex64::new(0.0, 0.0);
                for (m, &x) in xs.iter().enumerate() {
                    // signed circular offset in [-p/2, p/2)
                    let d = (m as isize - t).rem_euclid(p);
                    let d = if d >= p / 2 { d - p } else { d };
                    let eta = d as f64 / s;
                    let psi =
                        Complex64::new(0.0, omega0 * eta).exp() * (c * (-0.5 * eta * eta).exp());
                    acc += x * (psi * norm).conj();
                }
                acc
            })
            .collect()
    }

    fn rel_err(a: &[Complex64], b: &[Complex64]) -> f64 {
        let scale = b.iter().map(|w| w.norm()).fold(0.0, f64::max).max(1e-300);
        a.iter()
            .zip(b)
            .map(|(x, y)| (x - y).norm())
            .fold(0.0, f64::max)
            / scale
    }

    #[test]
    fn zero_input_gives_zero_scalogram() {
        let sg = morlet_cwt(&[0.0; 64], &default_scales(64), 6.0).unwrap();
        assert!(sg.coefficients.iter().flatten().all(|w| w.norm() == 0.0));
        assert_eq!(sg.dims(), (64, default_scales(64).len()));
        let sl = scale_slice(&sg, 5.0).unwrap();
        assert!(sl.values.iter().all(|w| w.norm() == 0.0));
    }

    #[test]
    fn wavelength_values() {
        let ratio = 4.0 * PI / (6.0 + 38f64.sqrt());
        assert!((fourier_wavelength(1.0, 6.0) - 1.0330).abs() < 1e-4);
        assert_eq!(fourier_wavelength(1.0, 6.0), ratio);
        assert!((fourier_wavelength(100.0, 6.0) - 103.30).abs() < 0.01);
        assert_eq!(
            fourier_wavelength(14.0, 6.0) * 2.0,
            fourier_wavelength(28.0, 6.0)
        );
    }

    #[test]
    fn coi_values() {
        let c = cone_of_influence(1024, 1.0);
        assert_eq!(c[0], 0.0);
        assert_eq!(c[1023], 0.0);
        for t in 0..1024 {
            assert_eq!(c[t], c[1023 - t]);
        }
        assert!((coi_bound(511.5, 1024, 1.0) - 361.7).abs() < 0.05);
        assert_eq!(c[511], coi_bound(511.0, 1024, 1.0));
    }

    #[test]
    fn fft_path_matches_direct_sum() {
        let xs: Vec<f64> = crate::synth::white_noise(300, 3);
        let scales = [2.0, 5.5, 17.0, 80.0, 150.0];
        let sg = morlet_cwt(&xs, &scales, 6.0).unwrap();
        for (j, &s) in scales.iter().enumerate() {
            let d = direct(&xs, s, 6.0);
            assert!(rel_err(&sg.coefficients[j], &d) <= 1e-8, "scale {s}");
        }
    }

    #[test]
    fn sinusoid_peak_near_wavelength_scale() {
        let xs = sinusoid_mix(4096, &[64.0], &[0.0]);
        let scales = default_scales(4096);
        let sg = morlet_cwt(&xs, &scales, 6.0).unwrap();
        let power = sg.scale_power(true);
        let jmax = (0..power.len())
            .filter(|&j| power[j].is_finite())
            .max_by(|&a, &b| power[a].total_cmp(&power[b]))
            .unwrap();
        let target = 64.0 / fourier_wavelength(1.0, 6.0);
        let step = 2f64.powf(0.125);
        assert!(scales[jmax] / target < step && target / scales[jmax] < step);
    }

    #[test]
    fn matched_slice_is_stationary() {
        let xs = sinusoid_mix(4096, &[64.0], &[0.3]);
        let sg = morlet_cwt(&xs, &default_scales(4096), 6.0).unwrap();
        let sl = scale_slice(&sg, 64.0 / 1.033).unwrap();
        let mags: Vec<f64> = sl
            .values
            .iter()
            .zip(&sl.reliable)
            .filter(|(_, &r)| r)
            .map(|(w, _)| w.norm())
            .collect();
        let m = mags.iter().sum::<f64>() / mags.len() as f64;
        let sd = (mags.iter().map(|v| (v - m).powi(2)).sum::<f64>() / mags.len() as f64).sqrt();
        assert!(sd / m < 0.1, "cv {}", sd / m);
    }

    #[test]
    fn quarter_period_offset_gives_quarter_period_lag() {
        let t = 64.0;
        let a = sinusoid_mix(2048, &[t], &[0.0]);
        let b = sinusoid_mix(2048, &[t], &[-PI / 2.0]);
        let scales = default_scales(2048);
        let sa = scale_slice(&morlet_cwt(&a, &scales, 6.0).unwrap(), t / 1.033).unwrap();
        let sb = scale_slice(&morlet_cwt(&b, &scales, 6.0).unwrap(), t / 1.033).unwrap();
        let lag = phase_lag(&sa, &sb, 31).unwrap();
        assert!((lag - 16).abs() <= 1, "lag {lag}");
    }

    #[test]
    fn degenerate_grid_is_empty() {
        assert!(scale_grid(2.0, 0.0, 64.0).is_empty());
        assert!(scale_grid(0.0, 0.125, 64.0).is_empty());
        assert_eq!(scale_grid(2.0, 1.0, 16.0), vec![2.0, 4.0, 8.0, 16.0]);
    }

    #[test]
    fn lag_window_wider_than_series_is_clamped() {
        let xs = sinusoid_mix(64, &[8.0], &[0.0]);
        let sg = morlet_cwt(&xs, &[2.0, 4.0], 6.0).unwrap();
        let s = scale_slice(&sg, 2.0).unwrap();
        // every whole period matches equally well; any of them will do
        let lag = phase_lag(&s, &s, 10_000).unwrap();
        assert!(lag.abs() < 64 && lag % 8 == 0, "lag {lag}");
    }

    #[test]
    fn slice_reports_nearest_scale() {
        let sg = morlet_cwt(&[1.0; 32], &[2.0, 4.0, 8.0], 6.0).unwrap();
        let sl = scale_slice(&sg, 5.0).unwrap();
        assert_eq!((sl.index, sl.scale), (1, 4.0));
        assert_eq!(sl.requested, 5.0);
    }

    #[test]
    fn rejects_bad_grids() {
        let xs = vec![1.0; 64];
        assert!(morlet_cwt(&xs, &[0.0, 2.0], 6.0).is_err());
        assert!(morlet_cwt(&xs, &[-1.0], 6.0).is_err());
        assert!(morlet_cwt(&xs, &[2.0, 33.0], 6.0).is_err());
        assert!(morlet_cwt(&xs, &[4.0, 2.0], 6.0).is_err());
        assert!(morlet_cwt(&xs[..8], &[2.0], 6.0).is_err());
        assert!(morlet_cwt(&xs, &[32.0], 6.0).is_ok());
        let empty = Scalogram {
            coefficients: vec![],
            scales: vec![],
            omega0: 6.0,
            dt: 1.0,
            coi: vec![],
        };
        assert!(scale_slice(&empty, 2.0).is_err());
    }

    #[test]
    fn long_table_has_one_row_per_cell() {
        let sg = morlet_cwt(&sinusoid_mix(32, &[8.0], &[0.0]), &[2.0, 4.0], 6.0).unwrap();
        let tab = sg.to_long_table();
        assert_eq!(tab.rows(), 64);
        assert!(tab.meta.contains_key("cwt"));
    }

    #[test]
    fn threshold_is_deterministic() {
        let a = significance_threshold(128, &[2.0, 4.0], 6.0, 4, 0.95, 7).unwrap();
        let b = significance_threshold(128, &[2.0, 4.0], 6.0, 4, 0.95, 7).unwrap();
        assert_eq!(a, b);
        assert!(a.iter().all(|v| *v > 0.0));
    }
}
