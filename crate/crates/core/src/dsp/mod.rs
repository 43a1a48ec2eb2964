//! Signal conditioning: average reference, band-pass, resampling and epoching.

mod filter;
mod resample;

use serde::{Deserialize, Serialize};

use crate::edf_io::Recording;
use crate::error::{Error, Result};

pub use filter::{bandpass, filtfilt, Biquad, ButterworthBandpass, FilterSpec};
pub use resample::{rational_ratio, resample, resample_signal, PolyphaseResampler};

/// Subtracts the instantaneous channel mean from every channel.
pub fn average_reference(rec: &Recording) -> Result<Recording> {
    let n_ch = rec.n_channels();
    if n_ch < 2 {
        return Err(Error::InsufficientChannels { needed: 2, got: n_ch });
    }
    let n = rec.n_samples();
    let mut mean = vec![0.0; n];
    for row in &rec.data {
        for (m, &v) in mean.iter_mut().zip(row) {
            *m += v;
        }
    }
    let scale = 1.0 / n_ch as f64;
    mean.iter_mut().for_each(|m| *m *= scale);
    let data = rec
        .data
        .iter()
        .map(|row| row.iter().zip(&mean).map(|(v, m)| v - m).collect())
        .collect();
    Ok(rec.with_data(data, rec.sample_rate_hz))
}

/// A fixed-length window of a recording.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Epoch {
    pub data: Vec<Vec<f64>>,
    pub duration_s: f64,
    pub sample_rate_hz: f64,
    /// Offset of the first sample in the source recording.
    pub start_index: usize,
    pub source_subject: String,
}

impl Epoch {
    pub fn n_samples(&self) -> usize {
        self.data.first().map_or(0, Vec::len)
    }

    pub fn n_channels(&self) -> usize {
        self.data.len()
    }
}

/// Cuts a recording into contiguous, non-overlapping epochs; a trailing
/// remainder shorter than `duration_s` is discarded.
pub fn epoch(rec: &Recording, duration_s: f64) -> Result<Vec<Epoch>> {
    if !(duration_s.is_finite() && duration_s > 0.0) {
        return Err(Error::InvalidSpec(format!("epoch duration must be positive, got {duration_s}")));
    }
    let len = (duration_s * rec.sample_rate_hz).round() as usize;
    if len == 0 {
        return Err(Error::InvalidSpec(format!(
            "{duration_s} s at {} Hz is shorter than one sample",
            rec.sample_rate_hz
        )));
    }
    let count = rec.n_samples() / len;
    if count == 0 {
        return Err(Error::EmptyResult(format!(
            "recording {:?} lasts {:.3} s, shorter than one {duration_s} s epoch",
            rec.subject_id,
            rec.duration_s()
        )));
    }
    Ok((0..count)
        .map(|i| {
            let start = i * len;
            Epoch {
                data: rec.data.iter().map(|row| row[start..start + len].to_vec()).collect(),
                duration_s,
                sample_rate_hz: rec.sample_rate_hz,
                start_index: start,
                source_subject: rec.subject_id.clone(),
            }
        })
        .collect())
}
