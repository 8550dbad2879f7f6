//! Daubechies discrete wavelet transform.
//!
//! Pyramid decomposition of a series into approximation and detail
//! coefficients, reconstruction from any subset of them, and the
//! trend/fluctuation split used by the multifractal pipeline.
//!
//! Analysis at one level, with low-pass `h` and high-pass `g`:
//!
//! ```text
//! c[k] = Σ_m h[m] x[2k + m]        d[k] = Σ_m g[m] x[2k + m]
//! ```
//!
//! Synthesis is the transpose, `x[2k + m] += h[m] c[k] + g[m] d[k]`.
//!
//! Two boundary modes are supported:
//!
//! * [`Boundary::Symmetric`] (default): half-sample symmetric extension,
//!   keeping every coefficient whose window touches the signal (so a level
//!   of length `n` yields `⌊(n-1)/2⌋ + L/2` coefficients). Reconstruction is
//!   exact for any length.
//! * [`Boundary::Periodic`]: circular indexing, `⌈n/2⌉` coefficients per
//!   level; an odd-length level is first extended by repeating its last
//!   sample. The transform is orthogonal (energy preserving) on even lengths.

use std::fmt;
use std::str::FromStr;

use serde::Serialize;
use serde_json::{json, Value};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Wavelet {
    /// 4 taps, 2 vanishing moments (blind to linear trends).
    Db4,
    /// 6 taps, 3 vanishing moments (blind to quadratic trends).
    Db6,
}

impl Wavelet {
    pub fn taps(self) -> usize {
        match self {
            Wavelet::Db4 => 4,
            Wavelet::Db6 => 6,
        }
    }
}

impl fmt::Display for Wavelet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Wavelet::Db4 => "db4",
            Wavelet::Db6 => "db6",
        })
    }
}

impl FromStr for Wavelet {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "db4" => Ok(Wavelet::Db4),
            "db6" => Ok(Wavelet::Db6),
            other => Err(Error::invalid(format!(
                "unsupported wavelet `{other}` (expected db4 or db6)"
            ))),
        }
    }
}

/// Orthonormal low/high-pass filter pair.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WaveletFilter {
    pub wavelet: Wavelet,
    pub low_pass: Vec<f64>,
    /// g[n] = (-1)^n h[L-1-n]
    pub high_pass: Vec<f64>,
    pub vanishing_moments: usize,
}

impl WaveletFilter {
    pub fn len(&self) -> usize {
        self.low_pass.len()
    }

    pub fn is_empty(&self) -> bool {
        self.low_pass.is_empty()
    }

    pub fn from_name(name: &str) -> Result<Self> {
        daubechies_filter(name.parse()?)
    }

    /// Checks normalization, orthonormality, the quadrature-mirror relation
    /// and the vanishing moments of the high-pass filter.
    pub fn validate(&self) -> Result<()> {
        let h = &self.low_pass;
        let l = h.len();
        let sum: f64 = h.iter().sum();
        if (sum - std::f64::consts::SQRT_2).abs() > 1e-12 {
            return Err(Error::invalid(format!("low-pass sums to {sum}, not √2")));
        }
        for shift in 0..l / 2 {
            let dot: f64 = (0..l - 2 * shift).map(|n| h[n] * h[n + 2 * shift]).sum();
            let want = if shift == 0 { 1.0 } else { 0.0 };
            if (dot - want).abs() > 1e-12 {
                return Err(Error::invalid(format!(
                    "low-pass not orthonormal at shift {shift}: {dot}"
                )));
            }
        }
        for (n, &g) in self.high_pass.iter().enumerate() {
            let mirror = if n % 2 == 0 {
                h[l - 1 - n]
            } else {
                -h[l - 1 - n]
            };
            if g != mirror {
                return Err(Error::invalid("high-pass is not the quadrature mirror"));
            }
        }
        for p in 0..self.vanishing_moments {
            let m: f64 = self
                .high_pass
                .iter()
                .enumerate()
                .map(|(n, g)| (n as f64).powi(p as i32) * g)
                .sum();
            if m.abs() > 1e-10 {
                return Err(Error::invalid(format!("moment {p} of high-pass is {m}")));
            }
        }
        Ok(())
    }
}

fn quadrature_mirror(h: &[f64]) -> Vec<f64> {
    let l = h.len();
    (0..l)
        .map(|n| {
            if n % 2 == 0 {
                h[l - 1 - n]
            } else {
                -h[l - 1 - n]
            }
        })
        .collect()
}

/// Closed-form Daubechies taps, validated before return.
pub fn daubechies_filter(wavelet: Wavelet) -> Result<WaveletFilter> {
    let low_pass: Vec<f64> = match wavelet {
        Wavelet::Db4 => {
            let s3 = 3f64.sqrt();
            let d = 4.0 * std::f64::consts::SQRT_2;
            vec![
                (1.0 + s3) / d,
                (3.0 + s3) / d,
                (3.0 - s3) / d,
                (1.0 - s3) / d,
            ]
        }
        Wavelet::Db6 => {
            let s10 = 10f64.sqrt();
            let r = (5.0 + 2.0 * s10).sqrt();
            let d = 16.0 * std::f64::consts::SQRT_2;
            vec![
                (1.0 + s10 + r) / d,
                (5.0 + s10 + 3.0 * r) / d,
                (10.0 - 2.0 * s10 + 2.0 * r) / d,
                (10.0 - 2.0 * s10 - 2.0 * r) / d,
                (5.0 + s10 - 3.0 * r) / d,
                (1.0 + s10 - r) / d,
            ]
        }
    };
    let f = WaveletFilter {
        wavelet,
        high_pass: quadrature_mirror(&low_pass),
        low_pass,
        vanishing_moments: wavelet.taps() / 2,
    };
    f.validate()?;
    Ok(f)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    #[default]
    Symmetric,
    Periodic,
}

impl FromStr for Boundary {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "symmetric" => Ok(Boundary::Symmetric),
            "periodic" => Ok(Boundary::Periodic),
            other => Err(Error::invalid(format!("unknown boundary mode `{other}`"))),
        }
    }
}

/// Half-sample symmetric index into a signal of length `n`.
fn reflect(i: isize, n: usize) -> usize {
    let period = 2 * n as isize;
    let r = i.rem_euclid(period) as usize;
    if r < n {
        r
    } else {
        2 * n - 1 - r
    }
}

/// Index of the first coefficient in symmetric mode, -(L/2 - 1).
fn first_k(taps: usize) -> isize {
    -((taps / 2) as isize - 1)
}

fn analyze(x: &[f64], f: &WaveletFilter, mode: Boundary) -> (Vec<f64>, Vec<f64>) {
    let (h, g) = (&f.low_pass, &f.high_pass);
    let n = x.len();
    match mode {
        Boundary::Symmetric => {
            let k0 = first_k(h.len());
            let k1 = ((n - 1) / 2) as isize;
            let mut a = Vec::with_capacity((k1 - k0 + 1) as usize);
            let mut d = Vec::with_capacity(a.capacity());
            for k in k0..=k1 {
                let (mut sa, mut sd) = (0.0, 0.0);
                for (m, (hm, gm)) in h.iter().zip(g).enumerate() {
                    let v = x[reflect(2 * k + m as isize, n)];
                    sa += hm * v;
                    sd += gm * v;
                }
                a.push(sa);
                d.push(sd);
            }
            (a, d)
        }
        Boundary::Periodic => {
            let ne = n + n % 2;
            let at = |i: usize| if i < n { x[i] } else { x[n - 1] };
            let half = ne / 2;
            let mut a = Vec::with_capacity(half);
            let mut d = Vec::with_capacity(half);
            for k in 0..half {
                let (mut sa, mut sd) = (0.0, 0.0);
                for (m, (hm, gm)) in h.iter().zip(g).enumerate() {
                    let v = at((2 * k + m) % ne);
                    sa += hm * v;
                    sd += gm * v;
                }
                a.push(sa);
                d.push(sd);
            }
            (a, d)
        }
    }
}

/// Inverse of [`analyze`] onto a level of length `n`. Either input may be
/// absent (treated as zeros).
fn synthesize(
    approx: Option<&[f64]>,
    detail: Option<&[f64]>,
    n: usize,
    f: &WaveletFilter,
    mode: Boundary,
) -> Vec<f64> {
    let (h, g) = (&f.low_pass, &f.high_pass);
    let count = approx.or(detail).map_or(0, <[f64]>::len);
    match mode {
        Boundary::Symmetric => {
            let k0 = first_k(h.len());
            let mut out = vec![0.0; n];
            for idx in 0..count {
                let a = approx.map_or(0.0, |c| c[idx]);
                let d = detail.map_or(0.0, |c| c[idx]);
                if a == 0.0 && d == 0.0 {
                    continue;
                }
                let base = 2 * (idx as isize + k0);
                for (m, (hm, gm)) in h.iter().zip(g).enumerate() {
                    let i = base + m as isize;
                    if i >= 0 && (i as usize) < n {
                        out[i as usize] += hm * a + gm * d;
                    }
                }
            }
            out
        }
        Boundary::Periodic => {
            let ne = n + n % 2;
            let mut out = vec![0.0; ne];
            for idx in 0..count {
                let a = approx.map_or(0.0, |c| c[idx]);
                let d = detail.map_or(0.0, |c| c[idx]);
                for (m, (hm, gm)) in h.iter().zip(g).enumerate() {
                    out[(2 * idx + m) % ne] += hm * a + gm * d;
                }
            }
            out.truncate(n);
            out
        }
    }
}

/// Deepest level allowed for a series of length `n`: ⌊log₂ n⌋.
pub fn max_level(n: usize) -> usize {
    if n == 0 {
        0
    } else {
        n.ilog2() as usize
    }
}

/// Multi-level coefficients. Level `j` (1-based) is stored at index `j - 1`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecompositionTree {
    pub filter: WaveletFilter,
    pub boundary: Boundary,
    pub source_len: usize,
    /// Length of the signal fed into each level (`level_input_lens[0]` is `source_len`).
    pub level_input_lens: Vec<usize>,
    pub approx: Vec<Vec<f64>>,
    pub details: Vec<Vec<f64>>,
}

impl DecompositionTree {
    pub fn depth(&self) -> usize {
        self.approx.len()
    }

    fn check_level(&self, level: usize) -> Result<()> {
        if level == 0 || level > self.depth() {
            Err(Error::LevelOutOfRange {
                level,
                max: self.depth(),
            })
        } else {
            Ok(())
        }
    }

    /// Reconstruct from the approximation at `top`, adding back the details
    /// of each level for which `keep` returns true.
    fn rebuild(&self, top: usize, keep: impl Fn(usize) -> bool) -> Vec<f64> {
        let mut a = self.approx[top - 1].clone();
        for lvl in (1..=top).rev() {
            let d = keep(lvl).then(|| self.details[lvl - 1].as_slice());
            a = synthesize(
                Some(&a),
                d,
                self.level_input_lens[lvl - 1],
                &self.filter,
                self.boundary,
            );
        }
        a
    }

    /// Full inverse transform.
    pub fn reconstruct(&self) -> Vec<f64> {
        if self.depth() == 0 {
            return Vec::new();
        }
        self.rebuild(self.depth(), |_| true)
    }

    /// Trend A_j: the source with every detail at levels ≤ j removed.
    pub fn trend_at_level(&self, level: usize) -> Result<Vec<f64>> {
        self.check_level(level)?;
        Ok(self.rebuild(level, |_| false))
    }

    /// Contribution of the level-`level` details alone, at source resolution.
    pub fn detail_at_level(&self, level: usize) -> Result<Vec<f64>> {
        self.check_level(level)?;
        let mut a = synthesize(
            None,
            Some(&self.details[level - 1]),
            self.level_input_lens[level - 1],
            &self.filter,
            self.boundary,
        );
        for lvl in (1..level).rev() {
            a = synthesize(
                Some(&a),
                None,
                self.level_input_lens[lvl - 1],
                &self.filter,
                self.boundary,
            );
        }
        Ok(a)
    }

    /// Detail coefficients at `level` at least one filter length away from
    /// either boundary (in units of that level's coefficient spacing).
    pub fn interior_details(&self, level: usize) -> Result<&[f64]> {
        self.check_level(level)?;
        let d = &self.details[level - 1];
        let l = self.filter.len();
        let lead = match self.boundary {
            Boundary::Symmetric => l + (l / 2 - 1),
            Boundary::Periodic => l,
        };
        let tail = lead;
        if d.len() <= lead + tail {
            return Ok(&[]);
        }
        Ok(&d[lead..d.len() - tail])
    }

    /// Coefficient dump, level → {approx, detail}.
    pub fn to_json(&self) -> Value {
        let levels: serde_json::Map<String, Value> = (1..=self.depth())
            .map(|j| {
                (
                    j.to_string(),
                    json!({ "approx": self.approx[j - 1], "detail": self.details[j - 1] }),
                )
            })
            .collect();
        json!({
            "wavelet": self.filter.wavelet.to_string(),
            "boundary": self.boundary,
            "source_len": self.source_len,
            "levels": levels,
        })
    }
}

/// Pyramid decomposition down to `levels` (default ⌊log₂ N⌋).
pub fn decompose(
    xs: &[f64],
    filter: &WaveletFilter,
    levels: Option<usize>,
    boundary: Boundary,
) -> Result<DecompositionTree> {
    let n = xs.len();
    if n < filter.len() {
        return Err(Error::TooShort {
            needed: filter.len(),
            got: n,
            context: "wavelet decomposition (series shorter than filter)",
        });
    }
    let max = max_level(n);
    let depth = levels.unwrap_or(max);
    if depth == 0 {
        return Err(Error::invalid("decomposition depth must be at least 1"));
    }
    if depth > max {
        return Err(Error::TooShort {
            needed: 1 << depth,
            got: n,
            context: "requested decomposition depth",
        });
    }
    let mut level_input_lens = Vec::with_capacity(depth);
    let mut approx = Vec::with_capacity(depth);
    let mut details = Vec::with_capacity(depth);
    let mut current = xs.to_vec();
    for _ in 0..depth {
        level_input_lens.push(current.len());
        let (a, d) = analyze(&current, filter, boundary);
        details.push(d);
        approx.push(a.clone());
        current = a;
    }
    Ok(DecompositionTree {
        filter: filter.clone(),
        boundary,
        source_len: n,
        level_input_lens,
        approx,
        details,
    })
}

/// Trend and fluctuation of a profile at one level.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FluctuationSet {
    pub level: usize,
    pub wavelet: Wavelet,
    pub trend: Vec<f64>,
    pub fluctuation: Vec<f64>,
}

/// Splits `profile` into the trend A_j and the fluctuation `profile - A_j`.
/// Level 0 removes nothing: the trend is the profile and the fluctuation is zero.
pub fn extract_fluctuations(
    profile: &[f64],
    filter: &WaveletFilter,
    level: usize,
    boundary: Boundary,
) -> Result<FluctuationSet> {
    let trend = if level == 0 {
        profile.to_vec()
    } else {
        decompose(profile, filter, Some(level), boundary)?.trend_at_level(level)?
    };
    let fluctuation = profile.iter().zip(&trend).map(|(y, a)| y - a).collect();
    Ok(FluctuationSet {
        level,
        wavelet: filter.wavelet,
        trend,
        fluctuation,
    })
}
