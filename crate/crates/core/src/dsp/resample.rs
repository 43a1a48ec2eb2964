//! Rational-ratio polyphase resampling with a Kaiser-windowed sinc low-pass.

use rayon::prelude::*;

use crate::edf_io::Recording;
use crate::error::{Error, Result};

const MAX_DENOMINATOR: u64 = 1000;
/// Sinc zero crossings on each side of the kernel centre.
const ZERO_CROSSINGS: usize = 18;
const KAISER_BETA: f64 = 8.6;
/// Cutoff as a fraction of the lower of the two Nyquist frequencies.
const CUTOFF_FRACTION: f64 = 0.9;

/// Best rational approximation `up/down` of `target/source` with
/// `down <= 1000`; fails when it is not exact to 1e-9 relative.
pub fn rational_ratio(source_hz: f64, target_hz: f64) -> Result<(usize, usize)> {
    let x = target_hz / source_hz;
    if !(x.is_finite() && x > 0.0) {
        return Err(Error::InvalidSpec(format!("cannot resample {source_hz} Hz to {target_hz} Hz")));
    }
    // continued-fraction convergents
    let (mut p0, mut q0, mut p1, mut q1) = (0u64, 1u64, 1u64, 0u64);
    let mut rem = x;
    let mut best = None;
    for _ in 0..64 {
        let a = rem.floor();
        if a > 1e12 {
            break;
        }
        let a = a as u64;
        let p2 = a * p1 + p0;
        let q2 = a * q1 + q0;
        if q2 > MAX_DENOMINATOR {
            break;
        }
        best = Some((p2, q2));
        if ((p2 as f64 / q2 as f64) - x).abs() <= 1e-12 * x {
            break;
        }
        (p0, q0, p1, q1) = (p1, q1, p2, q2);
        let frac = rem - rem.floor();
        if frac < 1e-15 {
            break;
        }
        rem = 1.0 / frac;
    }
    match best {
        Some((p, q)) if p > 0 && ((p as f64 / q as f64) - x).abs() <= 1e-9 * x => Ok((p as usize, q as usize)),
        _ => Err(Error::InvalidSpec(format!(
            "ratio {target_hz}/{source_hz} has no rational form with denominator <= {MAX_DENOMINATOR}"
        ))),
    }
}

/// Precomputed polyphase kernel for an `up/down` conversion.
#[derive(Debug, Clone)]
pub struct PolyphaseResampler {
    up: usize,
    down: usize,
    half: usize,
    /// Kernel on the upsampled grid, each phase normalized to unit DC gain.
    taps: Vec<f64>,
}

impl PolyphaseResampler {
    pub fn new(up: usize, down: usize) -> Self {
        let span = up.max(down);
        let cutoff = CUTOFF_FRACTION * 0.5 / span as f64; // cycles per upsampled sample
        let half = (ZERO_CROSSINGS as f64 / (2.0 * cutoff)).ceil() as usize;
        let len = 2 * half + 1;
        let i0_beta = bessel_i0(KAISER_BETA);
        let mut taps: Vec<f64> = (0..len)
            .map(|k| {
                let t = k as f64 - half as f64;
                let r = t / half as f64;
                let window = bessel_i0(KAISER_BETA * (1.0 - r * r).max(0.0).sqrt()) / i0_beta;
                2.0 * cutoff * sinc(2.0 * cutoff * t) * window
            })
            .collect();
        for phase in 0..up {
            let sum: f64 = taps.iter().skip(phase).step_by(up).sum();
            if sum != 0.0 {
                taps.iter_mut().skip(phase).step_by(up).for_each(|h| *h /= sum);
            }
        }
        PolyphaseResampler { up, down, half, taps }
    }

    pub fn output_len(&self, input_len: usize) -> usize {
        input_len * self.up / self.down
    }

    /// Resamples one channel; samples beyond either end are held at the edge value.
    pub fn process(&self, x: &[f64]) -> Vec<f64> {
        if x.is_empty() {
            return Vec::new();
        }
        let (up, down, half) = (self.up as i64, self.down as i64, self.half as i64);
        let last = x.len() as i64 - 1;
        (0..self.output_len(x.len()) as i64)
            .map(|m| {
                // taps index k = m*down - n*up + half must lie in [0, 2*half]
                let centre = m * down + half;
                let n_lo = (centre - 2 * half + up - 1).div_euclid(up);
                let n_hi = centre.div_euclid(up);
                let mut acc = 0.0;
                for n in n_lo..=n_hi {
                    let k = (centre - n * up) as usize;
                    acc += self.taps[k] * x[n.clamp(0, last) as usize];
                }
                acc
            })
            .collect()
    }
}

/// Resamples a single signal from `source_hz` to `target_hz`.
pub fn resample_signal(x: &[f64], source_hz: f64, target_hz: f64) -> Result<Vec<f64>> {
    if (source_hz - target_hz).abs() <= 1e-9 * source_hz {
        return Ok(x.to_vec());
    }
    let (up, down) = rational_ratio(source_hz, target_hz)?;
    Ok(PolyphaseResampler::new(up, down).process(x))
}

/// Resamples every channel to `target_hz`, which must exceed 90 Hz so the
/// 1-45 Hz band survives.
pub fn resample(rec: &Recording, target_hz: f64) -> Result<Recording> {
    if target_hz.is_nan() || target_hz <= 90.0 {
        return Err(Error::InvalidSpec(format!(
            "target rate {target_hz} Hz does not keep the 45 Hz band edge below Nyquist"
        )));
    }
    if (rec.sample_rate_hz - target_hz).abs() <= 1e-9 * target_hz {
        return Ok(rec.clone());
    }
    let (up, down) = rational_ratio(rec.sample_rate_hz, target_hz)?;
    let resampler = PolyphaseResampler::new(up, down);
    let data = rec.data.par_iter().map(|row| resampler.process(row)).collect();
    Ok(rec.with_data(data, target_hz))
}

fn sinc(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        let px = std::f64::consts::PI * x;
        px.sin() / px
    }
}

/// Modified Bessel function of the first kind, order zero (power series).
fn bessel_i0(x: f64) -> f64 {
    let q = x * x / 4.0;
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..200 {
        term *= q / (k * k) as f64;
        sum += term;
        if term < 1e-17 * sum {
            break;
        }
    }
    sum
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn ratios() {
        assert_eq!(rational_ratio(500.0, 250.0).unwrap(), (1, 2));
        assert_eq!(rational_ratio(256.0, 250.0).unwrap(), (125, 128));
        assert_eq!(rational_ratio(128.0, 250.0).unwrap(), (125, 64));
        assert_eq!(rational_ratio(44100.0, 250.0).unwrap(), (5, 882));
        assert!(matches!(
            rational_ratio(std::f64::consts::PI * 100.0, 250.0),
            Err(Error::InvalidSpec(_))
        ));
    }

    #[test]
    fn bessel_reference_values() {
        assert!((bessel_i0(0.0) - 1.0).abs() < 1e-15);
        assert!((bessel_i0(1.0) - 1.2660658777520082).abs() < 1e-13);
        assert!((bessel_i0(8.6) - 750.4611595631659).abs() / 750.46 < 1e-12);
    }

    #[test]
    fn downsampled_sine_keeps_amplitude() {
        let x: Vec<f64> = (0..10_000).map(|i| (2.0 * PI * 10.0 * i as f64 / 500.0).sin()).collect();
        let y = resample_signal(&x, 500.0, 250.0).unwrap();
        assert_eq!(y.len(), 5000);
        for (i, &v) in y.iter().enumerate().skip(500).take(4000) {
            let expected = (2.0 * PI * 10.0 * i as f64 / 250.0).sin();
            assert!((v - expected).abs() < 0.01, "sample {i}: {v} vs {expected}");
        }
    }

    #[test]
    fn upsampling_interpolates() {
        let x: Vec<f64> = (0..2560).map(|i| (2.0 * PI * 5.0 * i as f64 / 128.0).sin()).collect();
        let y = resample_signal(&x, 128.0, 250.0).unwrap();
        assert_eq!(y.len(), 2560 * 125 / 64);
        for (i, &v) in y.iter().enumerate().skip(500).take(3000) {
            let expected = (2.0 * PI * 5.0 * i as f64 / 250.0).sin();
            assert!((v - expected).abs() < 0.01);
        }
    }

    #[test]
    fn constant_is_preserved() {
        for &(src, dst) in &[(500.0, 250.0), (256.0, 250.0), (128.0, 250.0)] {
            let y = resample_signal(&[7.0; 3000], src, dst).unwrap();
            assert!(y.iter().all(|v| (v - 7.0).abs() < 1e-6), "{src}->{dst}");
        }
    }

    #[test]
    fn identity_rate() {
        let x: Vec<f64> = (0..100).map(|i| i as f64 * 0.3).collect();
        assert_eq!(resample_signal(&x, 250.0, 250.0).unwrap(), x);
    }
}
