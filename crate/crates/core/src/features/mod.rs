//! Frequency-domain features: Welch band power per channel, averaged per
//! region into a [`FeatureTable`].

mod table;
mod welch;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dsp::Epoch;
use crate::edf_io::Region;
use crate::error::{Error, Result};

pub use table::{FeatureTable, Provenance, TableSidecar};
pub use welch::{integrate_psd, welch_psd, Psd};

/// Welch segment length in seconds.
pub const SEGMENT_SECONDS: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Band {
    Delta,
    Theta,
    Alpha,
    Beta,
    Gamma,
}

impl Band {
    pub const ALL: [Band; 5] = [Band::Delta, Band::Theta, Band::Alpha, Band::Beta, Band::Gamma];

    /// Edges in Hz. Bands are contiguous over 1-45 Hz.
    pub fn edges_hz(self) -> (f64, f64) {
        match self {
            Band::Delta => (1.0, 4.0),
            Band::Theta => (4.0, 8.0),
            Band::Alpha => (8.0, 13.0),
            Band::Beta => (13.0, 30.0),
            Band::Gamma => (30.0, 45.0),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Band::Delta => "delta",
            Band::Theta => "theta",
            Band::Alpha => "alpha",
            Band::Beta => "beta",
            Band::Gamma => "gamma",
        }
    }

    pub fn from_name(name: &str) -> Option<Band> {
        Band::ALL.into_iter().find(|b| b.name() == name)
    }
}

/// `frontal_alpha` style column name.
pub fn column_name(region: Region, band: Band) -> String {
    format!("{}_{}", region.name(), band.name())
}

/// The 25 region x band column names, regions major and bands minor.
pub fn feature_column_names() -> Vec<String> {
    Region::ALL
        .iter()
        .flat_map(|&r| Band::ALL.iter().map(move |&b| column_name(r, b)))
        .collect()
}

/// Power of each channel of `epoch` inside `band`, in squared input units.
pub fn band_power(epoch: &Epoch, band: Band) -> Result<Vec<f64>> {
    let (lo, hi) = band.edges_hz();
    band_power_range(epoch, lo, hi)
}

/// As [`band_power`] for arbitrary edges.
pub fn band_power_range(epoch: &Epoch, low_hz: f64, high_hz: f64) -> Result<Vec<f64>> {
    let nyquist = epoch.sample_rate_hz / 2.0;
    if !(low_hz >= 0.0 && low_hz < high_hz && high_hz < nyquist) {
        return Err(Error::InvalidBand {
            low_hz,
            high_hz,
            nyquist_hz: nyquist,
        });
    }
    epoch
        .data
        .iter()
        .map(|ch| welch_psd(ch, epoch.sample_rate_hz).map(|psd| integrate_psd(&psd, low_hz, high_hz)))
        .collect()
}

/// Per-epoch side columns carried verbatim into the table.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EpochAnnotations {
    pub aux_names: Vec<String>,
    /// One row per epoch, `aux_names.len()` values each.
    pub aux: Vec<Vec<f64>>,
    pub labels: Option<Vec<i64>>,
}

/// Averages band power over the channels of each region.
///
/// `regions[c]` is the region of channel `c`; every region needs at least one
/// channel.
pub fn build_feature_table(
    epochs: &[Epoch],
    regions: &[Region],
    annotations: &EpochAnnotations,
) -> Result<FeatureTable> {
    let missing: Vec<Region> = Region::ALL
        .into_iter()
        .filter(|r| !regions.contains(r))
        .collect();
    if !missing.is_empty() {
        return Err(Error::MissingRegion(missing));
    }
    if let Some(e) = epochs.iter().find(|e| e.n_channels() != regions.len()) {
        return Err(Error::SchemaMismatch(format!(
            "epoch at sample {} of {:?} has {} channels, layout has {}",
            e.start_index,
            e.source_subject,
            e.n_channels(),
            regions.len()
        )));
    }
    if !annotations.aux_names.is_empty() && annotations.aux.len() != epochs.len() {
        return Err(Error::SchemaMismatch(format!(
            "{} aux rows for {} epochs",
            annotations.aux.len(),
            epochs.len()
        )));
    }
    if let Some(labels) = &annotations.labels {
        if labels.len() != epochs.len() {
            return Err(Error::SchemaMismatch(format!(
                "{} labels for {} epochs",
                labels.len(),
                epochs.len()
            )));
        }
    }

    let rows = epochs
        .par_iter()
        .map(|e| epoch_features(e, regions))
        .collect::<Result<Vec<_>>>()?;
    let aux = if annotations.aux_names.is_empty() {
        vec![Vec::new(); epochs.len()]
    } else {
        annotations.aux.clone()
    };
    let provenance = epochs
        .iter()
        .map(|e| Provenance {
            source: e.source_subject.clone(),
            epoch_start: Some(e.start_index),
            donor_row: None,
        })
        .collect();
    FeatureTable::new(
        feature_column_names(),
        annotations.aux_names.clone(),
        rows,
        aux,
        annotations.labels.clone(),
        provenance,
    )
}

fn epoch_features(epoch: &Epoch, regions: &[Region]) -> Result<Vec<f64>> {
    let mut sums = [[0.0f64; 5]; 5];
    let mut counts = [0usize; 5];
    for (ch, &region) in epoch.data.iter().zip(regions) {
        let psd = welch_psd(ch, epoch.sample_rate_hz)?;
        let r = region as usize;
        counts[r] += 1;
        for (b, band) in Band::ALL.iter().enumerate() {
            let (lo, hi) = band.edges_hz();
            if hi >= epoch.sample_rate_hz / 2.0 {
                return Err(Error::InvalidBand {
                    low_hz: lo,
                    high_hz: hi,
                    nyquist_hz: epoch.sample_rate_hz / 2.0,
                });
            }
            sums[r][b] += integrate_psd(&psd, lo, hi);
        }
    }
    Ok(Region::ALL
        .iter()
        .flat_map(|&r| {
            let r = r as usize;
            let n = counts[r] as f64;
            sums[r].map(|s| s / n)
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn epoch_of(data: Vec<Vec<f64>>, fs: f64) -> Epoch {
        let n = data[0].len();
        Epoch {
            data,
            duration_s: n as f64 / fs,
            sample_rate_hz: fs,
            start_index: 0,
            source_subject: "s".into(),
        }
    }

    #[test]
    fn bands_partition_passband() {
        let mut prev = 1.0;
        for b in Band::ALL {
            let (lo, hi) = b.edges_hz();
            assert_eq!(lo, prev);
            prev = hi;
        }
        assert_eq!(prev, 45.0);
    }

    #[test]
    fn column_order() {
        let names = feature_column_names();
        assert_eq!(names.len(), 25);
        assert_eq!(names[0], "frontal_delta");
        assert_eq!(names[7], "central_alpha");
        assert_eq!(names[24], "occipital_gamma");
    }

    #[test]
    fn zero_signal_has_no_power() {
        let e = epoch_of(vec![vec![0.0; 2500]], 250.0);
        for b in Band::ALL {
            assert_eq!(band_power(&e, b).unwrap(), vec![0.0]);
        }
    }

    #[test]
    fn alpha_sine_dominates() {
        let x: Vec<f64> = (0..2500).map(|i| (2.0 * PI * 10.0 * i as f64 / 250.0).sin()).collect();
        let psd = welch_psd(&x, 250.0).unwrap();
        let total = integrate_psd(&psd, 0.0, 125.0);
        let alpha = band_power(&epoch_of(vec![x], 250.0), Band::Alpha).unwrap()[0];
        assert!(alpha / total >= 0.95);
        // unit sine carries 0.5 power
        assert!((total - 0.5).abs() < 0.01, "{total}");
    }

    #[test]
    fn band_outside_nyquist() {
        let e = epoch_of(vec![vec![0.0; 1000]], 80.0);
        assert!(matches!(band_power(&e, Band::Gamma), Err(Error::InvalidBand { .. })));
        assert!(matches!(band_power_range(&e, -1.0, 3.0), Err(Error::InvalidBand { .. })));
    }

    #[test]
    fn missing_region_is_listed() {
        let e = epoch_of(vec![vec![0.0; 500]; 2], 250.0);
        match build_feature_table(&[e], &[Region::Frontal, Region::Occipital], &EpochAnnotations::default()) {
            Err(Error::MissingRegion(r)) => {
                assert_eq!(r, vec![Region::Central, Region::Parietal, Region::Temporal])
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn duplicate_channel_region_is_averaged() {
        let fs = 250.0;
        let sine = |f: f64, a: f64| -> Vec<f64> {
            (0..2500).map(|i| a * (2.0 * PI * f * i as f64 / fs).sin()).collect()
        };
        let data = vec![sine(10.0, 1.0), sine(10.0, 3.0), sine(6.0, 1.0), sine(20.0, 1.0), sine(2.0, 1.0), sine(35.0, 1.0)];
        let regions = [
            Region::Frontal,
            Region::Frontal,
            Region::Central,
            Region::Parietal,
            Region::Temporal,
            Region::Occipital,
        ];
        let e = epoch_of(data.clone(), fs);
        let table = build_feature_table(&[e], &regions, &EpochAnnotations::default()).unwrap();
        assert_eq!(table.n_features(), 25);
        let single = |x: &Vec<f64>| band_power(&epoch_of(vec![x.clone()], fs), Band::Alpha).unwrap()[0];
        let expected = (single(&data[0]) + single(&data[1])) / 2.0;
        assert!((table.features[0][2] - expected).abs() < 1e-12 * expected);
    }
}
