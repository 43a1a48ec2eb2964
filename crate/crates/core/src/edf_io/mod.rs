//! Raw EEG input: the [`Recording`] model, channel-to-region mapping, and the
//! EDF and CSV readers.

pub(crate) mod csv_rec;
mod edf;

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use csv_rec::{read_csv_recording, write_csv_recording};
pub use edf::{read_edf, read_edf_file, write_edf, EdfFile, EdfSignal};

/// Coarse scalp region used to aggregate channels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Region {
    Frontal,
    Central,
    Parietal,
    Temporal,
    Occipital,
}

impl Region {
    /// Canonical order: frontal, central, parietal, temporal, occipital.
    pub const ALL: [Region; 5] = [
        Region::Frontal,
        Region::Central,
        Region::Parietal,
        Region::Temporal,
        Region::Occipital,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Region::Frontal => "frontal",
            Region::Central => "central",
            Region::Parietal => "parietal",
            Region::Temporal => "temporal",
            Region::Occipital => "occipital",
        }
    }
}

impl fmt::Display for Region {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// 10-20 prefixes, longest first so that e.g. `FC` wins over `F`.
const PREFIXES: [(&str, Region); 12] = [
    ("fp", Region::Frontal),
    ("af", Region::Frontal),
    ("fc", Region::Central),
    ("cp", Region::Central),
    ("po", Region::Parietal),
    ("ft", Region::Temporal),
    ("tp", Region::Temporal),
    ("f", Region::Frontal),
    ("c", Region::Central),
    ("p", Region::Parietal),
    ("t", Region::Temporal),
    ("o", Region::Occipital),
];

/// Maps a 10-20 electrode label to its region.
///
/// The label is reduced to its leading letters with any trailing midline `z`
/// removed (`"Fpz"` becomes `"fp"`, `"Cz"` becomes `"c"`), then matched
/// case-insensitively against the prefix table, longest prefix first.
pub fn map_region(channel_name: &str) -> Result<Region> {
    let trimmed = channel_name.trim();
    let letters: String = trimmed
        .chars()
        .take_while(|c| c.is_ascii_alphabetic())
        .collect::<String>()
        .to_ascii_lowercase();
    let stem = letters.trim_end_matches('z');
    if stem.is_empty() {
        return Err(Error::UnmappedChannel(channel_name.to_string()));
    }
    PREFIXES
        .iter()
        .find(|(prefix, _)| stem.starts_with(prefix))
        .map(|&(_, region)| region)
        .ok_or_else(|| Error::UnmappedChannel(channel_name.to_string()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelInfo {
    pub name: String,
    pub region: Region,
}

impl ChannelInfo {
    /// Builds a channel whose region is inferred from its label.
    pub fn from_label(name: &str) -> Result<Self> {
        if name.trim().is_empty() {
            return Err(Error::InvalidSpec("channel name is empty".into()));
        }
        Ok(ChannelInfo {
            name: name.trim().to_string(),
            region: map_region(name)?,
        })
    }
}

/// Multichannel EEG in microvolts, one row per channel.
#[derive(Debug, Clone, PartialEq)]
pub struct Recording {
    pub channels: Vec<ChannelInfo>,
    pub data: Vec<Vec<f64>>,
    pub sample_rate_hz: f64,
    pub subject_id: String,
    /// Pass-through scalar series (heart rate and similar), never filtered.
    pub aux: BTreeMap<String, Vec<f64>>,
}

impl Recording {
    /// Validating constructor.
    pub fn new(
        channels: Vec<ChannelInfo>,
        data: Vec<Vec<f64>>,
        sample_rate_hz: f64,
        subject_id: impl Into<String>,
    ) -> Result<Self> {
        if channels.is_empty() {
            return Err(Error::InsufficientChannels { needed: 1, got: 0 });
        }
        if channels.len() != data.len() {
            return Err(Error::InvalidSpec(format!(
                "{} channel descriptors for {} data rows",
                channels.len(),
                data.len()
            )));
        }
        if !(sample_rate_hz.is_finite() && sample_rate_hz > 0.0) {
            return Err(Error::InvalidSpec(format!(
                "sample rate must be positive, got {sample_rate_hz}"
            )));
        }
        let n = data[0].len();
        if let Some((i, row)) = data.iter().enumerate().find(|(_, r)| r.len() != n) {
            return Err(Error::InvalidSpec(format!(
                "channel {} has {} samples, expected {n}",
                channels[i].name,
                row.len()
            )));
        }
        if let Some(c) = channels.iter().find(|c| c.name.is_empty()) {
            return Err(Error::InvalidSpec(format!("empty channel name ({c:?})")));
        }
        Ok(Recording {
            channels,
            data,
            sample_rate_hz,
            subject_id: subject_id.into(),
            aux: BTreeMap::new(),
        })
    }

    /// Convenience constructor inferring regions from channel labels.
    pub fn from_labels(
        labels: &[&str],
        data: Vec<Vec<f64>>,
        sample_rate_hz: f64,
        subject_id: impl Into<String>,
    ) -> Result<Self> {
        let channels = labels
            .iter()
            .map(|l| ChannelInfo::from_label(l))
            .collect::<Result<Vec<_>>>()?;
        Recording::new(channels, data, sample_rate_hz, subject_id)
    }

    pub fn with_aux(mut self, name: impl Into<String>, series: Vec<f64>) -> Self {
        self.aux.insert(name.into(), series);
        self
    }

    pub fn n_channels(&self) -> usize {
        self.data.len()
    }

    pub fn n_samples(&self) -> usize {
        self.data.first().map_or(0, Vec::len)
    }

    pub fn duration_s(&self) -> f64 {
        self.n_samples() as f64 / self.sample_rate_hz
    }

    pub fn regions(&self) -> Vec<Region> {
        self.channels.iter().map(|c| c.region).collect()
    }

    /// Same metadata, new sample matrix and rate.
    pub(crate) fn with_data(&self, data: Vec<Vec<f64>>, sample_rate_hz: f64) -> Recording {
        Recording {
            channels: self.channels.clone(),
            data,
            sample_rate_hz,
            subject_id: self.subject_id.clone(),
            aux: self.aux.clone(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_prefixes() {
        assert_eq!(map_region("Fp1").unwrap(), Region::Frontal);
        assert_eq!(map_region("O2").unwrap(), Region::Occipital);
        assert_eq!(map_region("T7").unwrap(), Region::Temporal);
    }

    #[test]
    fn longest_prefix_and_midline() {
        assert_eq!(map_region("FC5").unwrap(), Region::Central);
        assert_eq!(map_region("FT8").unwrap(), Region::Temporal);
        assert_eq!(map_region("TP9").unwrap(), Region::Temporal);
        assert_eq!(map_region("CP1").unwrap(), Region::Central);
        assert_eq!(map_region("POz").unwrap(), Region::Parietal);
        assert_eq!(map_region("AF3").unwrap(), Region::Frontal);
        assert_eq!(map_region("Fpz").unwrap(), Region::Frontal);
        assert_eq!(map_region("Cz").unwrap(), Region::Central);
        assert_eq!(map_region("Oz").unwrap(), Region::Occipital);
        assert_eq!(map_region("Pz").unwrap(), Region::Parietal);
        assert_eq!(map_region("FP2").unwrap(), Region::Frontal);
        assert_eq!(map_region("f3").unwrap(), Region::Frontal);
    }

    #[test]
    fn unknown_prefix_is_reported() {
        match map_region("A1") {
            Err(Error::UnmappedChannel(name)) => assert_eq!(name, "A1"),
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(map_region("Iz"), Err(Error::UnmappedChannel(_))));
        assert!(matches!(map_region("12"), Err(Error::UnmappedChannel(_))));
    }

    #[test]
    fn recording_rejects_ragged_rows() {
        let err = Recording::from_labels(&["Fp1", "O2"], vec![vec![0.0; 4], vec![0.0; 3]], 100.0, "s")
            .unwrap_err();
        assert!(matches!(err, Error::InvalidSpec(_)));
    }

    #[test]
    fn recording_rejects_bad_rate() {
        let err = Recording::from_labels(&["Fp1"], vec![vec![0.0; 4]], 0.0, "s").unwrap_err();
        assert!(matches!(err, Error::InvalidSpec(_)));
    }
}
