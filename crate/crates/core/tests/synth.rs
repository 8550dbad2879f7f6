use wavefrac::mfa::{multifractal_report, MfaConfig};
use wavefrac::returns::{autocorrelation, mean, normalized_log_returns};
use wavefrac::rng::derive_seed;
use wavefrac::spectral::{fit_power_law, power_spectrum, Window};
use wavefrac::synth::*;

fn fbm_cov(h: f64, i: f64, j: f64) -> f64 {
    0.5 * (i.powf(2.0 * h) + j.powf(2.0 * h) - (i - j).abs().powf(2.0 * h))
}

#[test]
fn fbm_sample_covariance_matches_theory() {
    let n = 128;
    let draws = 10_000;
    let pairs = [(1, 1), (8, 8), (16, 48), (40, 20), (128, 128), (5, 128)];
    for h in [0.3, 0.7] {
        let mut acc = vec![0.0; pairs.len()];
        for d in 0..draws {
            let b = fbm_path(h, n, derive_seed(77, d)).unwrap();
            for (k, &(i, j)) in pairs.iter().enumerate() {
                acc[k] += b[i] * b[j];
            }
        }
        for (k, &(i, j)) in pairs.iter().enumerate() {
            let got = acc[k] / draws as f64;
            let want = fbm_cov(h, i as f64, j as f64);
            assert!(
                (got - want).abs() <= 0.1 * want,
                "H={h} ({i},{j}): {got} vs {want}"
            );
        }
    }
}

#[test]
fn white_noise_is_centered_and_uncorrelated() {
    let n = 4096;
    let xs = white_noise(n, 5);
    assert!(mean(&xs).abs() <= 4.0 / (n as f64).sqrt());
    let acf = autocorrelation(&xs, 0.25).unwrap();
    let inside = acf.lags[1..]
        .iter()
        .zip(&acf.values[1..])
        .filter(|(&lag, v)| v.unwrap().abs() < 3.0 / ((n - lag) as f64).sqrt())
        .count();
    assert!(inside as f64 >= 0.99 * (acf.lags.len() - 1) as f64);
}

#[test]
fn brownian_increments_survive_shuffling() {
    let ts = generate(&SynthSpec {
        kind: SynthKind::Fbm { hurst: 0.5 },
        len: 1 << 14,
        seed: 6,
    })
    .unwrap();
    let rep = multifractal_report(
        &ts,
        &MfaConfig {
            seed: 6,
            ..MfaConfig::default()
        },
    )
    .unwrap();
    assert!((rep.original.hq.hurst - 0.5).abs() <= 0.05);
    assert!((rep.shuffled.hq.hurst - 0.5).abs() <= 0.05);
}

#[test]
fn cascade_replays_multiplicative_weights() {
    let m0 = 0.6;
    let levels = 14;
    let mass = binomial_cascade(m0, levels, 8);
    assert_eq!(mass.len(), 1 << levels);
    assert!((mass.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
    // replay: block sums at depth k split into children with ratio m0 or 1-m0
    let block_sum = |depth: u32, idx: usize| -> f64 {
        let w = 1usize << (levels - depth);
        mass[idx * w..(idx + 1) * w].iter().sum()
    };
    for depth in 0..levels {
        for idx in 0..(1usize << depth) {
            let parent = block_sum(depth, idx);
            let left = block_sum(depth + 1, 2 * idx) / parent;
            let right = block_sum(depth + 1, 2 * idx + 1) / parent;
            assert!((left + right - 1.0).abs() <= 1e-9);
            assert!(
                (left - m0).abs() <= 1e-9 || (left - (1.0 - m0)).abs() <= 1e-9,
                "{left}"
            );
        }
    }
}

#[test]
fn spectral_slope_periodogram_has_target_slope() {
    for beta in [-3.0, -2.0, -1.0, 0.5] {
        let xs = spectral_slope(beta, 1 << 15, 9);
        let ps = power_spectrum(&xs, Window::None).unwrap();
        let fit = fit_power_law(&ps, (0.0, 0.5)).unwrap();
        assert!(
            (fit.alpha - beta).abs() <= 0.1,
            "beta {beta}: {}",
            fit.alpha
        );
    }
}

#[test]
fn level_signal_round_trips_through_prices() {
    // level-type signals are the log price; their returns are first differences
    let spec = SynthSpec {
        kind: SynthKind::SpectralSlope { beta: -3.0 },
        len: 1024,
        seed: 2,
    };
    let signal = generate_signal(&spec).unwrap();
    let ts = generate(&spec).unwrap();
    assert_eq!(ts.len(), 1024);
    let r = normalized_log_returns(&ts).unwrap();
    let d: Vec<f64> = signal.windows(2).map(|w| w[1] - w[0]).collect();
    let md = mean(&d);
    let sd = (d.iter().map(|v| (v - md).powi(2)).sum::<f64>() / d.len() as f64).sqrt();
    for (a, b) in r.values.iter().zip(&d) {
        assert!((a - (b - md) / sd).abs() <= 1e-8);
    }
}

#[test]
fn identical_specs_give_identical_series() {
    for kind in [
        SynthKind::WhiteNoise,
        SynthKind::Fbm { hurst: 0.8 },
        SynthKind::BinomialCascade { m0: 0.7 },
        SynthKind::SpectralSlope { beta: -2.5 },
        SynthKind::SinusoidMix {
            periods: vec![16.0, 40.0],
            phases: vec![0.0, 1.0],
        },
    ] {
        let spec = SynthSpec {
            kind,
            len: 512,
            seed: 1234,
        };
        let a = generate(&spec).unwrap();
        let b = generate(&spec).unwrap();
        assert_eq!(a, b);
        let bits =
            |t: &wavefrac::TimeSeries| t.values().iter().map(|v| v.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&a), bits(&b));
    }
}

#[test]
fn invalid_specs_are_rejected() {
    let bad = [
        SynthSpec {
            kind: SynthKind::Fbm { hurst: 1.0 },
            len: 256,
            seed: 0,
        },
        SynthSpec {
            kind: SynthKind::Fbm { hurst: 0.5 },
            len: 300,
            seed: 0,
        },
        SynthSpec {
            kind: SynthKind::BinomialCascade { m0: 0.0 },
            len: 256,
            seed: 0,
        },
        SynthSpec {
            kind: SynthKind::SpectralSlope { beta: -3.0 },
            len: 1000,
            seed: 0,
        },
        SynthSpec {
            kind: SynthKind::SinusoidMix {
                periods: vec![100.0],
                phases: vec![],
            },
            len: 256,
            seed: 0,
        },
    ];
    for spec in bad {
        assert!(generate(&spec).is_err(), "{spec:?}");
    }
}
