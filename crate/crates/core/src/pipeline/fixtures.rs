//! Seeded synthetic inputs for demos and tests.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use crate::edf_io::{Recording, Region};
use crate::error::{Error, Result};
use crate::features::{feature_column_names, Band, FeatureTable, Provenance};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum FixtureKind {
    CorrelatedGaussian,
    TwoClass,
    MixedSources,
    Recording,
}

impl fmt::Display for FixtureKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FixtureKind::CorrelatedGaussian => "correlated-gaussian",
            FixtureKind::TwoClass => "two-class",
            FixtureKind::MixedSources => "mixed-sources",
            FixtureKind::Recording => "recording",
        })
    }
}

impl FromStr for FixtureKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "correlated-gaussian" => Ok(FixtureKind::CorrelatedGaussian),
            "two-class" => Ok(FixtureKind::TwoClass),
            "mixed-sources" => Ok(FixtureKind::MixedSources),
            "recording" => Ok(FixtureKind::Recording),
            other => Err(Error::InvalidSpec(format!("unknown fixture kind {other:?}"))),
        }
    }
}

/// Mean of each feature column: power falls with band frequency and rises
/// slightly from frontal to occipital, like a resting-state spectrum.
pub fn feature_means() -> Vec<f64> {
    Region::ALL
        .iter()
        .flat_map(|&r| Band::ALL.map(|b| 5.0 + 2.0 * (4 - b as usize) as f64 + 0.4 * r as usize as f64))
        .collect()
}

fn gaussian(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

fn factor_rows(n_rows: usize, rho: f64, shift: impl Fn(usize) -> f64, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let means = feature_means();
    let (a, b) = (rho.sqrt(), (1.0 - rho).sqrt());
    (0..n_rows)
        .map(|r| {
            let common = gaussian(rng);
            let s = shift(r);
            means.iter().map(|m| m + s + a * common + b * gaussian(rng)).collect()
        })
        .collect()
}

fn check_rho(rho: f64) -> Result<()> {
    if (0.0..1.0).contains(&rho) {
        Ok(())
    } else {
        Err(Error::InvalidSpec(format!("rho must lie in [0, 1), got {rho}")))
    }
}

/// `n_rows x 25` table with unit-variance columns whose pairwise Pearson
/// correlation is `rho`, built from one shared factor per row.
pub fn correlated_gaussian(n_rows: usize, rho: f64, seed: u64) -> Result<FeatureTable> {
    check_rho(rho)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rows = factor_rows(n_rows, rho, |_| 0.0, &mut rng);
    FeatureTable::from_features(feature_column_names(), rows, "correlated-gaussian")
}

/// Alternating classes 0 and 1 whose feature means sit `-separation` and
/// `+separation` from the shared profile. Heart rate and heart-rate
/// variability ride along as aux columns that also depend on the class.
pub fn two_class(n_rows: usize, separation: f64, seed: u64) -> Result<FeatureTable> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let labels: Vec<i64> = (0..n_rows).map(|r| (r % 2) as i64).collect();
    let rows = factor_rows(n_rows, 0.5, |r| if r % 2 == 1 { separation } else { -separation }, &mut rng);
    let aux = labels
        .iter()
        .map(|&l| {
            let l = l as f64;
            vec![72.0 + 8.0 * l + 3.0 * gaussian(&mut rng), 55.0 - 10.0 * l + 5.0 * gaussian(&mut rng)]
        })
        .collect();
    FeatureTable::new(
        feature_column_names(),
        vec!["hr".into(), "hrv".into()],
        rows,
        aux,
        Some(labels),
        vec![Provenance::source("two-class"); n_rows],
    )
}

/// Two known sources linearly mixed onto two channels.
#[derive(Debug, Clone)]
pub struct MixedSources {
    pub recording: Recording,
    /// Sine then sawtooth, `2 x n_samples`.
    pub sources: Vec<Vec<f64>>,
    /// `channels x sources`.
    pub mixing: [[f64; 2]; 2],
}

/// A 1.3 Hz sine and a 0.7 Hz sawtooth mixed by a random matrix with entries
/// in `[0.5, 2]` and `|det| >= 0.5`.
pub fn mixed_sources(n_samples: usize, sample_rate_hz: f64, seed: u64) -> Result<MixedSources> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mixing = loop {
        let m: [[f64; 2]; 2] = [
            [rng.random_range(0.5..2.0), rng.random_range(0.5..2.0)],
            [rng.random_range(0.5..2.0), rng.random_range(0.5..2.0)],
        ];
        if (m[0][0] * m[1][1] - m[0][1] * m[1][0]).abs() >= 0.5 {
            break m;
        }
    };
    let t = |i: usize| i as f64 / sample_rate_hz;
    let sine: Vec<f64> = (0..n_samples).map(|i| (2.0 * PI * 1.3 * t(i)).sin()).collect();
    let saw: Vec<f64> = (0..n_samples).map(|i| 2.0 * (0.7 * t(i)).fract() - 1.0).collect();
    let data = mixing
        .iter()
        .map(|w| sine.iter().zip(&saw).map(|(a, b)| w[0] * a + w[1] * b).collect())
        .collect();
    let recording = Recording::from_labels(&["Fp1", "O1"], data, sample_rate_hz, "mixed-sources")?;
    Ok(MixedSources {
        recording,
        sources: vec![sine, saw],
        mixing,
    })
}

/// Channels of [`eeg_recording`], two per region plus midline sites.
pub const RECORDING_CHANNELS: [&str; 12] = ["Fp1", "Fp2", "F3", "F4", "C3", "C4", "P3", "P4", "T7", "T8", "O1", "O2"];

/// Multichannel resting-state-like EEG in microvolts: band-limited rhythms
/// (alpha strongest over occipital sites), white noise, and eye blinks
/// projected mostly onto the frontal channels.
pub fn eeg_recording(duration_s: f64, sample_rate_hz: f64, seed: u64, subject: &str) -> Result<Recording> {
    if !(duration_s > 0.0 && sample_rate_hz > 100.0) {
        return Err(Error::InvalidSpec(format!(
            "recording fixture needs a positive duration and > 100 Hz, got {duration_s} s at {sample_rate_hz} Hz"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = (duration_s * sample_rate_hz).round() as usize;
    // (frequency, base amplitude) per band
    let rhythms = [(2.5, 6.0), (6.0, 4.0), (10.0, 8.0), (20.0, 2.5), (38.0, 1.0)];

    let mut blinks = vec![0.0; n];
    let mut onset = rng.random_range(1.0..3.0);
    while onset < duration_s {
        let centre = onset * sample_rate_hz;
        let width = 0.08 * sample_rate_hz;
        let lo = (centre - 5.0 * width).max(0.0) as usize;
        let hi = ((centre + 5.0 * width) as usize).min(n);
        for (i, b) in blinks.iter_mut().enumerate().take(hi).skip(lo) {
            *b += 120.0 * (-0.5 * ((i as f64 - centre) / width).powi(2)).exp();
        }
        onset += rng.random_range(2.0..6.0);
    }

    let mut data = Vec::with_capacity(RECORDING_CHANNELS.len());
    for label in RECORDING_CHANNELS {
        let region = crate::edf_io::map_region(label)?;
        let frontal = region == Region::Frontal;
        let occipital = region == Region::Occipital;
        let mut row: Vec<f64> = (0..n).map(|_| 1.5 * gaussian(&mut rng)).collect();
        for (b, &(f0, amp)) in rhythms.iter().enumerate() {
            let gain = match (b, occipital) {
                (2, true) => 2.5,
                _ => 1.0,
            } * rng.random_range(0.8..1.2);
            // three nearby partials give a band-limited rather than pure tone
            for k in 0..3 {
                let f = f0 * (1.0 + 0.06 * (k as f64 - 1.0));
                let phase = rng.random_range(0.0..2.0 * PI);
                let w = 2.0 * PI * f / sample_rate_hz;
                for (i, v) in row.iter_mut().enumerate() {
                    *v += gain * amp / 3.0 * (w * i as f64 + phase).sin();
                }
            }
        }
        let blink_gain = if frontal { rng.random_range(0.8..1.0) } else { rng.random_range(0.0..0.1) };
        for (v, b) in row.iter_mut().zip(&blinks) {
            *v += blink_gain * b;
        }
        data.push(row);
    }
    Recording::from_labels(&RECORDING_CHANNELS, data, sample_rate_hz, subject)
}
