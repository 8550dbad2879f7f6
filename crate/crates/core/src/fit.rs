//! Ordinary least squares on (x, y) pairs.

use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    /// Standard error of the slope estimate.
    pub slope_stderr: f64,
    /// Residual standard error, sqrt(SSR / (n - 2)).
    pub residual_se: f64,
    pub points: usize,
}

impl LineFit {
    pub fn predict(&self, x: f64) -> f64 {
        self.intercept + self.slope * x
    }
}

/// Unweighted OLS of `y` on `x`. Needs at least `min_points` (and never fewer than 2) pairs.
pub fn ols(x: &[f64], y: &[f64], min_points: usize) -> Result<LineFit> {
    if x.len() != y.len() {
        return Err(Error::invalid(format!(
            "ols: x has {} points, y has {}",
            x.len(),
            y.len()
        )));
    }
    let n = x.len();
    let needed = min_points.max(2);
    if n < needed {
        return Err(Error::InsufficientPoints { needed, got: n });
    }
    let nf = n as f64;
    let mx = x.iter().sum::<f64>() / nf;
    let my = y.iter().sum::<f64>() / nf;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (&a, &b) in x.iter().zip(y) {
        sxx += (a - mx) * (a - mx);
        sxy += (a - mx) * (b - my);
    }
    if sxx <= 0.0 {
        return Err(Error::invalid("ols: all x values identical"));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ssr: f64 = x
        .iter()
        .zip(y)
        .map(|(&a, &b)| {
            let r = b - (intercept + slope * a);
            r * r
        })
        .sum();
    let (residual_se, slope_stderr) = if n > 2 {
        let s2 = ssr / (nf - 2.0);
        (s2.sqrt(), (s2 / sxx).sqrt())
    } else {
        (0.0, 0.0)
    };
    Ok(LineFit {
        slope,
        intercept,
        slope_stderr,
        residual_se,
        points: n,
    })
}
