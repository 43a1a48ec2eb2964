use std::f64::consts::PI;

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::features::SEGMENT_SECONDS;

/// One-sided power spectral density on a uniform frequency grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Psd {
    pub freqs_hz: Vec<f64>,
    /// Density in squared input units per Hz.
    pub density: Vec<f64>,
}

/// Welch estimate: periodic Hann window, 2 s segments, 50 % overlap,
/// per-segment mean removal, periodograms averaged.
pub fn welch_psd(x: &[f64], sample_rate_hz: f64) -> Result<Psd> {
    let seg = (SEGMENT_SECONDS * sample_rate_hz).round() as usize;
    if seg < 2 || x.len() < seg {
        return Err(Error::InsufficientData(format!(
            "{} samples is shorter than one {SEGMENT_SECONDS} s Welch segment ({seg} samples)",
            x.len()
        )));
    }
    let step = seg / 2;
    let window: Vec<f64> = (0..seg)
        .map(|i| 0.5 - 0.5 * (2.0 * PI * i as f64 / seg as f64).cos())
        .collect();
    let win_power: f64 = window.iter().map(|w| w * w).sum();
    let fft = FftPlanner::<f64>::new().plan_fft_forward(seg);
    let n_bins = seg / 2 + 1;
    let mut acc = vec![0.0; n_bins];
    let mut buf = vec![Complex64::new(0.0, 0.0); seg];
    let mut n_segments = 0usize;
    let mut start = 0;
    while start + seg <= x.len() {
        let chunk = &x[start..start + seg];
        let mean = chunk.iter().sum::<f64>() / seg as f64;
        for ((b, &v), &w) in buf.iter_mut().zip(chunk).zip(&window) {
            *b = Complex64::new((v - mean) * w, 0.0);
        }
        fft.process(&mut buf);
        for (a, b) in acc.iter_mut().zip(&buf) {
            *a += b.norm_sqr();
        }
        n_segments += 1;
        start += step;
    }
    let scale = 1.0 / (sample_rate_hz * win_power * n_segments as f64);
    let density = acc
        .iter()
        .enumerate()
        .map(|(k, &p)| {
            let one_sided = if k == 0 || (seg.is_multiple_of(2) && k == seg / 2) { 1.0 } else { 2.0 };
            p * scale * one_sided
        })
        .collect();
    let freqs_hz = (0..n_bins).map(|k| k as f64 * sample_rate_hz / seg as f64).collect();
    Ok(Psd { freqs_hz, density })
}

/// Integral of the linearly interpolated density over `[low_hz, high_hz]`
/// (trapezoid rule, with interpolated end points).
pub fn integrate_psd(psd: &Psd, low_hz: f64, high_hz: f64) -> f64 {
    let f = &psd.freqs_hz;
    let p = &psd.density;
    let mut total = 0.0;
    for i in 0..f.len().saturating_sub(1) {
        let (f0, f1) = (f[i], f[i + 1]);
        let a = f0.max(low_hz);
        let b = f1.min(high_hz);
        if b <= a {
            continue;
        }
        let slope = (p[i + 1] - p[i]) / (f1 - f0);
        let pa = p[i] + slope * (a - f0);
        let pb = p[i] + slope * (b - f0);
        total += 0.5 * (pa + pb) * (b - a);
    }
    total
}
