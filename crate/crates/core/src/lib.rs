//! Multi-scale analysis of financial (or any scalar) time series.
//!
//! The pipeline follows prices → normalized log returns → profile →
//! Daubechies wavelet trend removal → fluctuation functions F_q(s) → h(q).
//! Alongside it sit a Morlet scalogram, per-level spectral exponents, and
//! seeded synthetic generators with known ground truth.

pub mod cwt;
pub mod dwt;
pub mod error;
pub mod fit;
pub mod io;
pub mod mfa;
pub mod returns;
pub mod rng;
pub mod spectral;
pub mod synth;

pub use error::{Error, Result};
pub use io::{TimeSeries, Timestamp};
