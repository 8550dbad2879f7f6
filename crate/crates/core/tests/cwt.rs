use num_complex::Complex64;
use std::f64::consts::PI;
use wavefrac::cwt::*;
use wavefrac::synth::{sinusoid_mix, white_noise};

/// Circular cross-correlation with the analytic Morlet kernel, no FFT.
fn direct(xs: &[f64], s: f64) -> Vec<Complex64> {
    let p = xs.len().next_power_of_two() as isize;
    (0..xs.len() as isize)
        .map(|t| {
            xs.iter()
                .enumerate()
                .map(|(m, &x)| {
                    let mut d = (m as isize - t).rem_euclid(p);
                    if d >= p / 2 {
                        d -= p;
                    }
                    let eta = d as f64 / s;
                    let psi = PI.powf(-0.25) * (-0.5 * eta * eta).exp() / s.sqrt();
                    x * Complex64::from_polar(psi, -6.0 * eta)
                })
                .sum()
        })
        .collect()
}

fn max_rel(a: &[Complex64], b: &[Complex64]) -> f64 {
    let scale = b.iter().map(|w| w.norm()).fold(0.0, f64::max);
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
        / scale
}

fn local_maxima(p: &[f64]) -> Vec<usize> {
    (1..p.len() - 1)
        .filter(|&j| p[j] > p[j - 1] && p[j] > p[j + 1])
        .collect()
}

#[test]
fn two_tones_give_two_peaks_and_match_direct_crop() {
    let xs = sinusoid_mix(4096, &[64.0, 256.0], &[0.0, 0.7]);
    // up to N/8, where most of the series lies outside the cone of influence
    let scales: Vec<f64> = default_scales(4096)
        .into_iter()
        .filter(|&s| s <= 512.0)
        .collect();
    let sg = morlet_cwt(&xs, &scales, DEFAULT_OMEGA0).unwrap();
    let peaks = local_maxima(&sg.scale_power(true));
    assert_eq!(peaks.len(), 2, "{peaks:?}");
    let step = 2f64.powf(0.125);
    for (&j, t) in peaks.iter().zip([64.0, 256.0]) {
        let target = t / fourier_wavelength(1.0, 6.0);
        assert!(
            scales[j] / target < step && target / scales[j] < step,
            "{} vs {target}",
            scales[j]
        );
    }

    let crop = &xs[1000..1512];
    let grid = [4.0, 16.0, 61.9, 128.0, 247.8];
    let sg = morlet_cwt(crop, &grid, 6.0).unwrap();
    for (j, &s) in grid.iter().enumerate() {
        assert!(
            max_rel(&sg.coefficients[j], &direct(crop, s)) <= 1e-8,
            "s = {s}"
        );
    }
}

#[test]
fn transform_is_linear() {
    let x = white_noise(700, 1);
    let y = sinusoid_mix(700, &[30.0], &[0.2]);
    let (a, b) = (2.5, -0.75);
    let z: Vec<f64> = x.iter().zip(&y).map(|(u, v)| a * u + b * v).collect();
    let scales = default_scales(700);
    let (wx, wy, wz) = (
        morlet_cwt(&x, &scales, 6.0).unwrap(),
        morlet_cwt(&y, &scales, 6.0).unwrap(),
        morlet_cwt(&z, &scales, 6.0).unwrap(),
    );
    for j in 0..scales.len() {
        let combo: Vec<Complex64> = wx.coefficients[j]
            .iter()
            .zip(&wy.coefficients[j])
            .map(|(p, q)| p * a + q * b)
            .collect();
        assert!(max_rel(&wz.coefficients[j], &combo) <= 1e-8);
    }
}

#[test]
fn circular_shift_shifts_coefficients() {
    let n = 1024;
    let x = white_noise(n, 2);
    let k = 37;
    let shifted: Vec<f64> = (0..n).map(|i| x[(i + n - k) % n]).collect();
    let scales = [2.0, 4.0, 8.0, 16.0];
    let a = morlet_cwt(&x, &scales, 6.0).unwrap();
    let b = morlet_cwt(&shifted, &scales, 6.0).unwrap();
    for j in 0..scales.len() {
        let scale = a.coefficients[j]
            .iter()
            .map(|w| w.norm())
            .fold(0.0, f64::max);
        for t in 100..n - 100 {
            let d = (b.coefficients[j][(t + k) % n] - a.coefficients[j][t]).norm();
            assert!(d <= 1e-8 * scale);
        }
    }
}

#[test]
fn white_noise_power_is_flat_across_scales() {
    let n = 2048;
    let scales: Vec<f64> = default_scales(n)
        .into_iter()
        .filter(|&s| s <= 64.0)
        .collect();
    let mut mean_power = vec![0.0; scales.len()];
    let draws = 40;
    for d in 0..draws {
        let sg = morlet_cwt(&white_noise(n, 100 + d), &scales, 6.0).unwrap();
        for (acc, p) in mean_power.iter_mut().zip(sg.scale_power(true)) {
            *acc += p / draws as f64;
        }
    }
    // unit-variance input and Σ|ψ_s|² ≈ 1
    for (s, p) in scales.iter().zip(&mean_power) {
        assert!((p - 1.0).abs() <= 0.15, "s = {s}: {p}");
    }
}

#[test]
fn significance_threshold_flags_embedded_tone() {
    let n = 1024;
    let scales = default_scales(n);
    let thr = significance_threshold(n, &scales, 6.0, 8, 0.95, 3).unwrap();
    let mut x = white_noise(n, 50);
    for (v, s) in x.iter_mut().zip(sinusoid_mix(n, &[32.0], &[0.0])) {
        *v += 2.0 * s;
    }
    let sg = morlet_cwt(&x, &scales, 6.0).unwrap();
    let mask = significance_mask(&sg, &thr, 1.0);
    let j = scale_slice(&sg, 32.0 / 1.033).unwrap().index;
    let hits = mask[j].iter().filter(|&&m| m).count();
    let reliable = (0..n).filter(|&t| !sg.in_coi(t, j)).count();
    assert!(hits as f64 > 0.9 * reliable as f64);
    // a scale far from the tone stays near the nominal 5% rate
    let far = mask[0].iter().filter(|&&m| m).count() as f64 / n as f64;
    assert!(far < 0.15, "{far}");
}
