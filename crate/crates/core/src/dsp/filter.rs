//! Butterworth band-pass design (bilinear transform, second-order sections)
//! and zero-phase forward-backward filtering.

use std::f64::consts::PI;

use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::edf_io::Recording;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FilterSpec {
    pub low_hz: f64,
    pub high_hz: f64,
    /// Order of the low-pass prototype; the band-pass has twice as many poles.
    pub order: usize,
    pub zero_phase: bool,
}

impl Default for FilterSpec {
    fn default() -> Self {
        FilterSpec {
            low_hz: 1.0,
            high_hz: 45.0,
            order: 4,
            zero_phase: true,
        }
    }
}

impl FilterSpec {
    pub fn validate(&self, sample_rate_hz: f64) -> Result<()> {
        let nyquist = sample_rate_hz / 2.0;
        if self.order == 0 {
            return Err(Error::InvalidSpec("filter order must be positive".into()));
        }
        if !(self.low_hz > 0.0 && self.low_hz < self.high_hz) {
            return Err(Error::InvalidSpec(format!(
                "band edges must satisfy 0 < low < high, got [{}, {}]",
                self.low_hz, self.high_hz
            )));
        }
        if self.high_hz >= nyquist {
            return Err(Error::InvalidSpec(format!(
                "upper edge {} Hz is not below the Nyquist frequency {nyquist} Hz",
                self.high_hz
            )));
        }
        Ok(())
    }
}

/// One second-order section in transposed direct form II, `a0 == 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Biquad {
    pub b: [f64; 3],
    pub a: [f64; 3],
}

impl Biquad {
    fn response(&self, z_inv: Complex64) -> Complex64 {
        let z2 = z_inv * z_inv;
        (self.b[0] + z_inv * self.b[1] + z2 * self.b[2]) / (self.a[0] + z_inv * self.a[1] + z2 * self.a[2])
    }

    fn dc_gain(&self) -> f64 {
        let den = self.a.iter().sum::<f64>();
        if den == 0.0 {
            0.0
        } else {
            self.b.iter().sum::<f64>() / den
        }
    }

    /// State that makes a constant unit input a fixed point.
    fn step_state(&self) -> [f64; 2] {
        let y = self.dc_gain();
        let z2 = self.b[2] - self.a[2] * y;
        let z1 = self.b[1] - self.a[1] * y + z2;
        [z1, z2]
    }

    fn run(&self, x: &mut [f64], mut state: [f64; 2]) {
        let [b0, b1, b2] = self.b;
        let [_, a1, a2] = self.a;
        for v in x.iter_mut() {
            let input = *v;
            let y = b0 * input + state[0];
            state[0] = b1 * input - a1 * y + state[1];
            state[1] = b2 * input - a2 * y;
            *v = y;
        }
    }
}

/// Digital Butterworth band-pass as a cascade of biquads.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ButterworthBandpass {
    pub sections: Vec<Biquad>,
    pub sample_rate_hz: f64,
}

impl ButterworthBandpass {
    pub fn design(spec: &FilterSpec, sample_rate_hz: f64) -> Result<Self> {
        spec.validate(sample_rate_hz)?;
        let fs = sample_rate_hz;
        let n = spec.order;
        // prewarped analog edges
        let w1 = 2.0 * fs * (PI * spec.low_hz / fs).tan();
        let w2 = 2.0 * fs * (PI * spec.high_hz / fs).tan();
        let w0 = (w1 * w2).sqrt();
        let bw = w2 - w1;

        let mut poles = Vec::with_capacity(2 * n);
        for k in 0..n {
            let theta = PI * (2 * k + n + 1) as f64 / (2 * n) as f64;
            let p = Complex64::from_polar(1.0, theta);
            let a = p * (bw / 2.0);
            let d = (a * a - w0 * w0).sqrt();
            for s in [a + d, a - d] {
                poles.push((2.0 * fs + s) / (2.0 * fs - s));
            }
        }

        let scale = poles.iter().map(|p| p.norm()).fold(1.0, f64::max);
        let eps = 1e-10 * scale;
        let mut upper: Vec<Complex64> = poles.iter().copied().filter(|p| p.im > eps).collect();
        let mut real: Vec<f64> = poles.iter().filter(|p| p.im.abs() <= eps).map(|p| p.re).collect();
        upper.sort_by(|x, y| x.arg().total_cmp(&y.arg()));
        real.sort_by(f64::total_cmp);
        if !real.len().is_multiple_of(2) || upper.len() + real.len() / 2 != n {
            return Err(Error::InvalidSpec("pole pairing failed during filter design".into()));
        }

        let mut sections: Vec<Biquad> = upper
            .iter()
            .map(|p| Biquad {
                b: [1.0, 0.0, -1.0],
                a: [1.0, -2.0 * p.re, p.norm_sqr()],
            })
            .chain(real.chunks_exact(2).map(|r| Biquad {
                b: [1.0, 0.0, -1.0],
                a: [1.0, -(r[0] + r[1]), r[0] * r[1]],
            }))
            .collect();

        // unit gain at the (prewarped) geometric centre
        let wc = 2.0 * (w0 / (2.0 * fs)).atan();
        let z_inv = Complex64::from_polar(1.0, -wc);
        for s in &mut sections {
            let g = s.response(z_inv).norm();
            s.b.iter_mut().for_each(|c| *c /= g);
        }
        Ok(ButterworthBandpass {
            sections,
            sample_rate_hz: fs,
        })
    }

    /// Number of poles of the digital filter.
    pub fn filter_order(&self) -> usize {
        2 * self.sections.len()
    }

    /// Magnitude of the single-pass response at `freq_hz`.
    pub fn magnitude(&self, freq_hz: f64) -> f64 {
        let w = 2.0 * PI * freq_hz / self.sample_rate_hz;
        let z_inv = Complex64::from_polar(1.0, -w);
        self.sections
            .iter()
            .map(|s| s.response(z_inv))
            .fold(Complex64::new(1.0, 0.0), |acc, h| acc * h)
            .norm()
    }

    /// Single causal pass from rest.
    pub fn filter(&self, x: &[f64]) -> Vec<f64> {
        let mut y = x.to_vec();
        for s in &self.sections {
            s.run(&mut y, [0.0, 0.0]);
        }
        y
    }

    /// Causal pass with each section started in the steady state for a constant
    /// input equal to `x[0]`.
    fn filter_from_steady_state(&self, x: &mut [f64]) {
        let Some(&x0) = x.first() else { return };
        let mut gain = 1.0;
        for s in &self.sections {
            let zi = s.step_state();
            s.run(x, [zi[0] * gain * x0, zi[1] * gain * x0]);
            gain *= s.dc_gain();
        }
    }
}

/// Forward-backward filtering with odd-reflection padding of three times the
/// filter order at each end. The result has zero phase and the squared
/// magnitude response of `filter`.
pub fn filtfilt(filter: &ButterworthBandpass, x: &[f64]) -> Vec<f64> {
    let n = x.len();
    if n < 2 {
        return x.to_vec();
    }
    let pad = (3 * filter.filter_order()).min(n - 1);
    let first = x[0];
    let last = x[n - 1];
    let mut ext = Vec::with_capacity(n + 2 * pad);
    ext.extend((1..=pad).rev().map(|i| 2.0 * first - x[i]));
    ext.extend_from_slice(x);
    ext.extend((1..=pad).map(|i| 2.0 * last - x[n - 1 - i]));

    filter.filter_from_steady_state(&mut ext);
    ext.reverse();
    filter.filter_from_steady_state(&mut ext);
    ext.reverse();
    ext[pad..pad + n].to_vec()
}

/// Applies a Butterworth band-pass to every channel.
pub fn bandpass(rec: &Recording, spec: &FilterSpec) -> Result<Recording> {
    let filter = ButterworthBandpass::design(spec, rec.sample_rate_hz)?;
    let data = rec
        .data
        .par_iter()
        .map(|row| {
            if spec.zero_phase {
                filtfilt(&filter, row)
            } else {
                filter.filter(row)
            }
        })
        .collect();
    Ok(rec.with_data(data, rec.sample_rate_hz))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sine(freq: f64, fs: f64, seconds: f64) -> Vec<f64> {
        let n = (fs * seconds) as usize;
        (0..n).map(|i| (2.0 * PI * freq * i as f64 / fs).sin()).collect()
    }

    fn rms(x: &[f64]) -> f64 {
        (x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64).sqrt()
    }

    #[test]
    fn analytic_magnitude_profile() {
        let f = ButterworthBandpass::design(&FilterSpec::default(), 250.0).unwrap();
        assert_eq!(f.sections.len(), 4);
        // -3 dB at both edges, unity mid-band, deep stopband
        assert!((f.magnitude(1.0) - 0.5f64.sqrt()).abs() < 1e-6);
        assert!((f.magnitude(45.0) - 0.5f64.sqrt()).abs() < 1e-6);
        assert!((f.magnitude(10.0) - 1.0).abs() < 1e-3);
        // bilinear-transformed Butterworth: |H| = 1/sqrt(1 + W^(2N)) with
        // W = (w^2 - w1 w2) / (w (w2 - w1)) on the prewarped axis
        let warp = |hz: f64| (PI * hz / 250.0).tan();
        let (w1, w2) = (warp(1.0), warp(45.0));
        for hz in [0.1, 0.5, 2.0, 10.0, 30.0, 60.0, 100.0, 120.0] {
            let w = warp(hz);
            let big_w = (w * w - w1 * w2) / (w * (w2 - w1));
            let expected = 1.0 / (1.0 + big_w.powi(8)).sqrt();
            assert!((f.magnitude(hz) - expected).abs() < 1e-9, "{hz} Hz");
        }
    }

    #[test]
    fn passband_sine_amplitude() {
        let fs = 250.0;
        let x = sine(10.0, fs, 20.0);
        let y = filtfilt(&ButterworthBandpass::design(&FilterSpec::default(), fs).unwrap(), &x);
        assert_eq!(y.len(), x.len());
        let mid = &y[250..y.len() - 250];
        let peak = mid.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        assert!((peak - 1.0).abs() < 0.02, "peak {peak}");
    }

    #[test]
    fn stopband_sine_is_removed() {
        let fs = 250.0;
        let x = sine(0.1, fs, 60.0);
        let y = filtfilt(&ButterworthBandpass::design(&FilterSpec::default(), fs).unwrap(), &x);
        assert!(rms(&y) < 0.05 * rms(&x), "{} vs {}", rms(&y), rms(&x));
    }

    #[test]
    fn zero_in_zero_out() {
        let f = ButterworthBandpass::design(&FilterSpec::default(), 250.0).unwrap();
        assert!(filtfilt(&f, &[0.0; 1000]).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn zero_phase_has_no_lag() {
        let fs = 250.0;
        let x = sine(7.0, fs, 20.0);
        let y = filtfilt(&ButterworthBandpass::design(&FilterSpec::default(), fs).unwrap(), &x);
        let seg = 500..4500;
        let xcorr = |lag: isize| -> f64 {
            seg.clone()
                .map(|i| x[i] * y[(i as isize + lag) as usize])
                .sum()
        };
        let best = (-20..=20).max_by(|&a, &b| xcorr(a).total_cmp(&xcorr(b))).unwrap();
        assert_eq!(best, 0);
    }

    #[test]
    fn nyquist_edge_rejected() {
        let spec = FilterSpec {
            high_hz: 125.0,
            ..FilterSpec::default()
        };
        assert!(matches!(
            ButterworthBandpass::design(&spec, 250.0),
            Err(Error::InvalidSpec(_))
        ));
    }

    #[test]
    fn odd_orders_design() {
        for order in 1..=6 {
            let spec = FilterSpec {
                order,
                ..FilterSpec::default()
            };
            let f = ButterworthBandpass::design(&spec, 500.0).unwrap();
            assert_eq!(f.sections.len(), order);
            assert!((f.magnitude(1.0) - 0.5f64.sqrt()).abs() < 1e-6, "order {order}");
        }
    }
}
