//! Average reference, zero-phase band-pass, ICA blink removal and resampling
//! of a recording with frontal blink artefacts.

use eegsynth::dsp::{average_reference, bandpass, resample, FilterSpec};
use eegsynth::ica::{fit_fastica, reject_components, IcaConfig};
use eegsynth::pipeline::fixtures::eeg_recording;

fn frontal_peak(rec: &eegsynth::edf_io::Recording) -> f64 {
    rec.data[0].iter().fold(0.0f64, |m, v| m.max(v.abs()))
}

fn main() -> eegsynth::Result<()> {
    let raw = eeg_recording(60.0, 256.0, 3, "s01")?;
    println!("raw Fp1 peak {:.1} uV", frontal_peak(&raw));

    let referenced = average_reference(&raw)?;
    let filtered = bandpass(&referenced, &FilterSpec::default())?;

    // one degree of freedom is lost to the common reference
    let config = IcaConfig { n_components: Some(filtered.n_channels() - 1), seed: 3, ..IcaConfig::default() };
    let model = fit_fastica(&filtered, &config)?;
    let cleaned = reject_components(&model, &filtered, 5.0, &[])?;
    println!(
        "ICA: {} components, converged {} after {} iterations",
        model.k, model.converged, model.iterations
    );
    for (i, k) in cleaned.kurtosis.iter().enumerate() {
        let mark = if cleaned.rejected.contains(&i) { "  rejected" } else { "" };
        println!("  component {i:>2} excess kurtosis {k:>6.2}{mark}");
    }
    println!("cleaned Fp1 peak {:.1} uV", frontal_peak(&cleaned.recording));

    let out = resample(&cleaned.recording, 250.0)?;
    println!("{} samples at {} Hz -> {} at {} Hz", raw.n_samples(), raw.sample_rate_hz, out.n_samples(), out.sample_rate_hz);
    Ok(())
}
