//! Writes a synthetic recording to EDF, reads it back and reports the
//! quantisation error per channel.

use eegsynth::edf_io::{read_edf, write_edf, EdfFile};
use eegsynth::pipeline::fixtures::eeg_recording;

fn main() -> eegsynth::Result<()> {
    let rec = eeg_recording(30.0, 256.0, 1, "s01")?;
    let edf = EdfFile::from_recording(&rec, 1.0)?;
    let path = std::env::temp_dir().join("eegsynth-example-s01.edf");
    write_edf(&path, &edf)?;

    let back = read_edf(&path)?;
    println!("{} channels, {} samples at {} Hz", back.n_channels(), back.n_samples(), back.sample_rate_hz);
    for (c, ch) in back.channels.iter().enumerate() {
        let err = rec.data[c]
            .iter()
            .zip(&back.data[c])
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        println!("{:>4} {:<9} max |error| {err:.2e} uV", ch.name, ch.region.name());
    }
    Ok(())
}
