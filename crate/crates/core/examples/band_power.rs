//! Epochs a recording and builds the 25-column region by band table.

use eegsynth::dsp::epoch;
use eegsynth::features::{band_power, build_feature_table, Band, EpochAnnotations};
use eegsynth::pipeline::fixtures::eeg_recording;

fn main() -> eegsynth::Result<()> {
    let rec = eeg_recording(60.0, 250.0, 5, "s01")?;
    let epochs = epoch(&rec, 10.0)?;
    println!("{} epochs of {} samples", epochs.len(), epochs[0].n_samples());

    let o1 = rec.channels.iter().position(|c| c.name == "O1").unwrap();
    for band in Band::ALL {
        let (lo, hi) = band.edges_hz();
        let p = band_power(&epochs[0], band)?;
        println!("O1 {:<6} {lo:>4}-{hi:<4} Hz  {:>9.3} uV^2", band.name(), p[o1]);
    }

    let table = build_feature_table(&epochs, &rec.regions(), &EpochAnnotations::default())?;
    println!("\n{}", table.to_csv_string().lines().take(3).collect::<Vec<_>>().join("\n"));
    Ok(())
}
