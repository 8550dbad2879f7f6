//! Turning positional inputs into price series.
//!
//! An input is either a CSV path or an inline generator
//! `synth:<kind>[:key=value,...]`, e.g. `synth:fbm:hurst=0.7,n=16384,seed=3`.
//! Kinds: `white`, `fbm` (hurst), `cascade` (m0), `spectral-slope` (beta),
//! `sinusoids` (periods and phases as `/`-separated lists). Without an explicit
//! `seed`, the seed is derived from the root seed and the input text.

use std::collections::HashMap;
use std::path::Path;

use serde_json::{json, Value};
use wavefrac::io::{ingest_csv, IngestConfig, MissingPolicy};
use wavefrac::rng::derive_seed_str;
use wavefrac::synth::{generate, SynthKind, SynthSpec};
use wavefrac::{Error, Result, TimeSeries};

use crate::args::{InputArgs, Missing};

pub const SYNTH_PREFIX: &str = "synth:";
const DEFAULT_SYNTH_LEN: usize = 16384;

#[derive(Debug, Clone)]
pub struct Loaded {
    pub input: String,
    pub series: TimeSeries,
    /// Directory name for this input's artifacts.
    pub slug: String,
    /// Ingestion details recorded alongside the prices.
    pub provenance: Value,
}

pub fn ingest_config(args: &InputArgs) -> IngestConfig {
    IngestConfig {
        value_column: args.column.clone(),
        date_column: args.date_column.clone(),
        date_format: args.date_format.clone(),
        missing: match args.missing {
            Missing::Drop => MissingPolicy::Drop,
            Missing::Error => MissingPolicy::Error,
        },
        ticker: None,
    }
}

pub fn load_one(input: &str, args: &InputArgs, root_seed: u64) -> Result<(TimeSeries, Value)> {
    if let Some(rest) = input.strip_prefix(SYNTH_PREFIX) {
        let spec = parse_synth(rest, derive_seed_str(root_seed, input))?;
        let series = generate(&spec)?;
        Ok((series, json!({ "synth": spec })))
    } else {
        let got = ingest_csv(Path::new(input), &ingest_config(args))?;
        let prov = json!({
            "source_rows": got.source_rows,
            "dropped": got.dropped,
        });
        Ok((got.series, prov))
    }
}

/// Keeps a path component to `[A-Za-z0-9._-]`.
pub fn slug(name: &str) -> String {
    let s: String = name
        .chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || "._-".contains(c) {
                c
            } else {
                '_'
            }
        })
        .collect();
    if s.is_empty() || s.chars().all(|c| c == '.') {
        "series".into()
    } else {
        s
    }
}

/// Unique directory names, in input order.
pub fn assign_slugs(tickers: &[String]) -> Vec<String> {
    let mut seen: HashMap<String, usize> = HashMap::new();
    tickers
        .iter()
        .map(|t| {
            let base = slug(t);
            let n = seen.entry(base.clone()).or_insert(0);
            *n += 1;
            if *n == 1 {
                base
            } else {
                format!("{base}-{n}")
            }
        })
        .collect()
}

fn parse_synth(text: &str, default_seed: u64) -> Result<SynthSpec> {
    let (kind, params) = text.split_once(':').unwrap_or((text, ""));
    let mut kv: HashMap<&str, &str> = HashMap::new();
    for pair in params.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let (k, v) = pair
            .split_once('=')
            .ok_or_else(|| Error::InvalidParameter(format!("expected key=value, got `{pair}`")))?;
        kv.insert(k.trim(), v.trim());
    }
    let num = |key: &str, default: f64| -> Result<f64> {
        kv.get(key).map_or(Ok(default), |v| {
            v.parse()
                .map_err(|_| Error::InvalidParameter(format!("bad value for {key}: `{v}`")))
        })
    };
    let list = |key: &str| -> Result<Vec<f64>> {
        kv.get(key).map_or(Ok(Vec::new()), |v| {
            v.split('/')
                .map(|x| {
                    x.trim()
                        .parse()
                        .map_err(|_| Error::InvalidParameter(format!("bad value in {key}: `{x}`")))
                })
                .collect()
        })
    };
    let kind = match kind {
        "white" | "white-noise" => SynthKind::WhiteNoise,
        "fbm" => SynthKind::Fbm {
            hurst: num(
                "hurst",
                kv.get("H").map_or(Ok(0.5), |v| {
                    v.parse()
                        .map_err(|_| Error::InvalidParameter(format!("bad value for H: `{v}`")))
                })?,
            )?,
        },
        "cascade" => SynthKind::BinomialCascade {
            m0: num("m0", 0.6)?,
        },
        "spectral-slope" => SynthKind::SpectralSlope {
            beta: num("beta", -3.0)?,
        },
        "sinusoids" => SynthKind::SinusoidMix {
            periods: list("periods")?,
            phases: list("phases")?,
        },
        other => {
            return Err(Error::InvalidParameter(format!(
                "unknown synthetic kind `{other}`"
            )))
        }
    };
    let len = num("n", DEFAULT_SYNTH_LEN as f64)?;
    if !(len >= 0.0 && len.fract() == 0.0) {
        return Err(Error::InvalidParameter(format!("bad length {len}")));
    }
    let seed = match kv.get("seed") {
        Some(v) => v
            .parse()
            .map_err(|_| Error::InvalidParameter(format!("bad seed `{v}`")))?,
        None => default_seed,
    };
    Ok(SynthSpec {
        kind,
        len: len as usize,
        seed,
    })
}
